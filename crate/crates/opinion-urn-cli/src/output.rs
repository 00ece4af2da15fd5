//! CSV and JSON emission.
//!
//! CSV files use `.` as the decimal separator regardless of locale (Rust's
//! float formatting is locale-independent) and print floats with 17
//! significant digits so a reader recovers the exact bit pattern.
//!
//! Every artifact embeds what is needed to reproduce it: the config echo,
//! the seed, and a SHA-256 digest of the graph's canonical JSON. Repeated
//! runs with identical inputs are byte-identical, except for the
//! `metadata` block of the ensemble summary (timestamp and runtime), which
//! is the only place wall-clock information appears.

use opinion_urn::{DenseMatrix, EnsembleStats, Graph, InfluenceSpectrum, TrajectoryRecord};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

/// 17-significant-digit scientific notation: exact f64 round-trip.
pub fn format_float(value: f64) -> String {
    format!("{value:.16e}")
}

/// Hex SHA-256 of the graph's canonical JSON serialization.
pub fn graph_sha256(graph: &Graph) -> String {
    let digest = Sha256::digest(graph.to_json().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn matrix_rows(matrix: &DenseMatrix) -> Value {
    let rows: Vec<Vec<f64>> = (0..matrix.rows()).map(|i| matrix.row(i).to_vec()).collect();
    json!(rows)
}

/// Spectrum report: influence matrix, eigenvalues, gap `lambda`, and the
/// consensus vector `p`, plus the graph echo.
pub fn spectrum_json(spectrum: &InfluenceSpectrum, graph: &Graph, graph_spec: &str) -> Value {
    json!({
        "config": { "graph": graph_spec },
        "graph": {
            "n": graph.n_vertices(),
            "edges": graph.edges(),
            "sha256": graph_sha256(graph),
        },
        "lambda": spectrum.gap,
        "eigenvalues": spectrum.eigenvalues,
        "consensus": spectrum.consensus,
        "l": matrix_rows(&spectrum.l),
        "basis": matrix_rows(&spectrum.basis),
        "basis_inv": matrix_rows(&spectrum.basis_inv),
    })
}

/// Trajectory CSV: `t, x_0..x_{n−1}, g_0..g_{n−1}`, one row per snapshot.
pub fn trajectory_csv(record: &TrajectoryRecord) -> String {
    let n = record.graph.n_vertices();
    let mut out = String::from("t");
    for i in 0..n {
        out.push_str(&format!(",x_{i}"));
    }
    for i in 0..n {
        out.push_str(&format!(",g_{i}"));
    }
    out.push('\n');
    for snapshot in &record.snapshots {
        out.push_str(&snapshot.t.to_string());
        for value in &snapshot.x {
            out.push(',');
            out.push_str(&format_float(*value));
        }
        for value in &snapshot.g {
            out.push(',');
            out.push_str(&format_float(*value));
        }
        out.push('\n');
    }
    out
}

/// Metadata sidecar for a trajectory CSV: seed, RNG name, graph digest,
/// and the full config echo.
pub fn trajectory_meta_json(
    record: &TrajectoryRecord,
    graph_spec: &str,
    n_steps: usize,
    sample_times: &[usize],
) -> Value {
    json!({
        "seed": record.seed,
        "rng": opinion_urn::RNG_NAME,
        "graph_sha256": graph_sha256(&record.graph),
        "config": {
            "graph": graph_spec,
            "u0": record.u0,
            "g0": record.g0,
            "steps": n_steps,
            "samples": sample_times,
        },
    })
}

/// Ensemble CSV: `t, mean_z_sq, mean_a, var_a, n`, one row per sample time.
pub fn ensemble_csv(stats: &EnsembleStats) -> String {
    let mut out = String::from("t,mean_z_sq,mean_a,var_a,n\n");
    for (k, &t) in stats.sample_times.iter().enumerate() {
        out.push_str(&format!(
            "{t},{},{},{},{}\n",
            format_float(stats.mean_z_sq[k]),
            format_float(stats.mean_a[k]),
            format_float(stats.var_a[k]),
            stats.n_trajectories,
        ));
    }
    out
}

/// Ensemble summary JSON: the power-law fit (or the reason none was
/// produced), config echo, seed-derivation recipe, and a metadata block —
/// the only part that varies between identical runs.
#[allow(clippy::too_many_arguments)]
pub fn ensemble_summary_json(
    fit: Result<&opinion_urn::PowerLawFit, &str>,
    graph: &Graph,
    graph_spec: &str,
    u0: &[f64],
    g0: &[f64],
    n_steps: usize,
    n_trajectories: usize,
    base_seed: u64,
    sample_times: &[usize],
    threads: Option<usize>,
    fit_window: (usize, usize),
    runtime_seconds: f64,
) -> Value {
    let (fit_value, fit_error) = match fit {
        Ok(fit) => (serde_json::to_value(fit).expect("fit serializes"), Value::Null),
        Err(reason) => (Value::Null, json!(reason)),
    };
    let first_seeds: Vec<u64> = (0..4.min(n_trajectories as u64))
        .map(|i| opinion_urn::split_seed(base_seed, i))
        .collect();
    let timestamp_unix_seconds = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    json!({
        "fit": fit_value,
        "fit_error": fit_error,
        "config": {
            "graph": graph_spec,
            "u0": u0,
            "g0": g0,
            "steps": n_steps,
            "trajectories": n_trajectories,
            "base_seed": base_seed,
            "sample_times": sample_times,
            "threads": threads,
            "fit_window": [fit_window.0, fit_window.1],
        },
        "graph_sha256": graph_sha256(graph),
        "seeds": {
            "base": base_seed,
            "derivation": "splitmix64 finalizer of base + (index+1) * 0x9e3779b97f4a7c15",
            "first": first_seeds,
        },
        "metadata": {
            "timestamp_unix_seconds": timestamp_unix_seconds,
            "runtime_seconds": runtime_seconds,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use opinion_urn::{eigenbasis, path_graph, run_trajectory};
    use std::sync::Arc;

    #[test]
    fn floats_round_trip_exactly() {
        for &value in &[
            0.5,
            1.0 / 3.0,
            2.02 * 0.1f64.powf(0.371334),
            f64::MIN_POSITIVE,
            -1234.5678e-9,
        ] {
            let text = format_float(value);
            assert!(text.contains('.') || text.contains('e'), "{text}");
            let back: f64 = text.parse().unwrap();
            assert_eq!(back.to_bits(), value.to_bits(), "{text}");
        }
    }

    #[test]
    fn graph_digest_is_stable_and_distinguishes() {
        let p5 = path_graph(5).unwrap();
        let c = graph_sha256(&p5);
        assert_eq!(c.len(), 64);
        assert_eq!(c, graph_sha256(&path_graph(5).unwrap()));
        assert_ne!(c, graph_sha256(&path_graph(6).unwrap()));
    }

    #[test]
    fn trajectory_csv_shape() {
        let graph = Arc::new(path_graph(3).unwrap());
        let record = run_trajectory(
            graph,
            &[1.0, 0.0, 0.0],
            &[1.0, 1.0, 1.0],
            10,
            1,
            &[0, 5, 10],
        )
        .unwrap();
        let csv = trajectory_csv(&record);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,x_0,x_1,x_2,g_0,g_1,g_2");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0,"));
        assert!(lines[3].starts_with("10,"));
    }

    #[test]
    fn spectrum_json_has_contract_fields() {
        let graph = path_graph(5).unwrap();
        let spectrum = eigenbasis(&graph).unwrap();
        let value = spectrum_json(&spectrum, &graph, "path:5");
        assert!((value["lambda"].as_f64().unwrap() - 0.185667).abs() < 1e-5);
        assert_eq!(value["eigenvalues"].as_array().unwrap().len(), 5);
        assert_eq!(value["config"]["graph"], "path:5");
        assert_eq!(value["graph"]["n"], 5);
        assert_eq!(value["l"].as_array().unwrap().len(), 5);
    }
}
