//! The `verify` subcommand: a self-contained invariant suite over the
//! library, printable as one pass/fail line per check.
//!
//! The seven checks cover the exact pathwise heat-equation identity, the
//! Hadamard-product algebra, the damping-product sandwich, realized
//! transition-product norms, the row-norm/operator-norm sandwich, the
//! two-vertex single-urn coupling, and Hoeffding concentration of the
//! weight growth. `--quick` shrinks the Monte-Carlo sizes for a fast
//! smoke run; the default sizes match the library's acceptance targets.
//!
//! All randomness is derived from the `--seed` flag (default 0) through
//! the library's seed splitter, so a verify run is reproducible. The
//! statistical checks (coupling KS, Hoeffding frequencies) use standard
//! allowances (KS < 0.05 at 2000 trials, 3·SE headroom), which a
//! non-default seed can legitimately exceed in a few percent of runs.

use std::sync::Arc;

use opinion_urn::{
    build_graph, complete_graph, cycle_graph, diffusion_matrix, erdos_renyi, gautschi_bounds,
    hadamard_left, hadamard_right, hoeffding_check, init_state, lambda_matrix, operator_norm,
    path_graph, polya_equivalence, row_norm_bounds, split_seed, step_in_place, DenseMatrix, Graph,
};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Result of one named check.
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Runs all seven checks in a fixed order.
pub fn run_all(quick: bool, seed: u64) -> Vec<CheckOutcome> {
    vec![
        she_residuals(quick, seed),
        hadamard_properties(seed),
        gautschi_sweep(),
        lambda_product_norms(quick, seed),
        row_norm_sandwich(quick, seed),
        polya_coupling(quick, seed),
        hoeffding_concentration(quick, seed),
    ]
}

/// 0 when every check passed, 2 otherwise (the documented exit code for
/// check failures).
pub fn exit_code(outcomes: &[CheckOutcome]) -> i32 {
    if outcomes.iter().all(|o| o.passed) {
        0
    } else {
        2
    }
}

fn graph_pool() -> Vec<Graph> {
    vec![
        build_graph(2, &[(0, 1)]).expect("two-vertex graph"),
        path_graph(3).expect("three-vertex path"),
        path_graph(5).expect("five-vertex path"),
        complete_graph(4).expect("complete graph"),
        erdos_renyi(10, 0.5, 31_337).expect("random graph"),
    ]
}

/// Check 1: the discrete heat-equation identity is exact on every executed
/// step (residual < 1e−12, pure roundoff).
fn she_residuals(quick: bool, seed: u64) -> CheckOutcome {
    let steps_per_graph = if quick { 2_000 } else { 20_000 };
    let mut max_residual = 0.0f64;
    let mut total = 0usize;
    for (index, graph) in graph_pool().into_iter().enumerate() {
        let graph = Arc::new(graph);
        let n = graph.n_vertices();
        let u0: Vec<f64> = (0..n).map(|i| (i % 2) as f64).collect();
        let mut state = init_state(graph, &u0, &vec![1.0; n]).expect("valid init");
        let mut rng = ChaCha8Rng::seed_from_u64(split_seed(seed, 1_000 + index as u64));
        for _ in 0..steps_per_graph {
            let pre = state.clone();
            let record = step_in_place(&mut state, &mut rng);
            let residual = opinion_urn::she_residual(&pre, &record, &state)
                .expect("consecutive states");
            max_residual = max_residual.max(residual);
            total += 1;
        }
    }
    CheckOutcome {
        name: "she-residuals",
        passed: max_residual < 1e-12,
        detail: format!("max residual over {total} steps = {max_residual:.3e} (< 1e−12)"),
    }
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    let data: Vec<Vec<f64>> = (0..rows)
        .map(|_| (0..cols).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    DenseMatrix::from_rows(&data).expect("consistent row lengths")
}

/// Check 2: Hadamard-product algebra — submultiplicativity
/// ‖A ∘ b‖ ≤ ‖A‖·‖b‖ (left and right) and the mixed associativity
/// A₁(b ∘L A₂) = (A₁ ∘R b)A₂, 200 random instances each.
fn hadamard_properties(seed: u64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(split_seed(seed, 2_000));
    let mut max_excess = f64::NEG_INFINITY;
    for _ in 0..200 {
        let m = rng.random_range(1..=8usize);
        let n = rng.random_range(1..=8usize);
        let a = random_matrix(&mut rng, m, n);
        let b_right: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b_left: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm_a = operator_norm(&a).expect("norm converges");
        let nb_r: f64 = b_right.iter().map(|v| v * v).sum::<f64>().sqrt();
        let nb_l: f64 = b_left.iter().map(|v| v * v).sum::<f64>().sqrt();
        let right = operator_norm(&hadamard_right(&a, &b_right).expect("dims")).expect("norm");
        let left = operator_norm(&hadamard_left(&b_left, &a).expect("dims")).expect("norm");
        max_excess = max_excess.max(right - norm_a * nb_r).max(left - norm_a * nb_l);
    }

    let mut max_defect = 0.0f64;
    for _ in 0..200 {
        let m = rng.random_range(1..=8usize);
        let n = rng.random_range(1..=8usize);
        let p = rng.random_range(1..=8usize);
        let a1 = random_matrix(&mut rng, m, n);
        let a2 = random_matrix(&mut rng, n, p);
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let lhs = a1.matmul(&hadamard_left(&b, &a2).expect("dims")).expect("dims");
        let rhs = hadamard_right(&a1, &b).expect("dims").matmul(&a2).expect("dims");
        max_defect = max_defect.max(lhs.sub(&rhs).expect("dims").max_abs());
    }

    CheckOutcome {
        name: "hadamard-properties",
        passed: max_excess <= 1e-12 && max_defect < 1e-12,
        detail: format!(
            "max submultiplicativity excess = {max_excess:.3e}, \
             max associativity defect = {max_defect:.3e} (both ≤ 1e−12)"
        ),
    }
}

/// Check 3: the damping-product sandwich
/// ((j−1)/(t+1))^λ ≤ Π_{k=j}^t (1 − λ/k) ≤ (j/t)^λ over the full sweep
/// j ∈ {1..50}, t ∈ {j..200}, λ ∈ {0.1, 0.185667, 0.5, 0.9}.
fn gautschi_sweep() -> CheckOutcome {
    let mut worst = f64::INFINITY;
    let mut checked = 0usize;
    for &lam in &[0.1, 0.185667, 0.5, 0.9] {
        for j in 1..=50usize {
            for t in j..=200usize {
                let (lower, product, upper) =
                    gautschi_bounds(j, t, lam).expect("valid domain");
                worst = worst.min(product - lower).min(upper - product);
                checked += 1;
            }
        }
    }
    CheckOutcome {
        name: "gautschi-sweep",
        passed: worst >= -1e-12,
        detail: format!("{checked} triples, worst slack = {worst:.3e} (≥ −1e−12)"),
    }
}

/// Check 4: products of realized transition matrices over random windows
/// stay below √|V| in operator norm, and every factor is row-stochastic
/// and nonnegative.
fn lambda_product_norms(quick: bool, seed: u64) -> CheckOutcome {
    let n_windows = if quick { 60 } else { 500 };
    let pool: Vec<Graph> = vec![
        path_graph(5).expect("path"),
        complete_graph(4).expect("complete"),
        cycle_graph(8).expect("cycle"),
        path_graph(3).expect("path"),
        erdos_renyi(12, 0.4, 404).expect("random graph"),
        erdos_renyi(20, 0.3, 405).expect("random graph"),
    ];
    let mut max_excess = f64::NEG_INFINITY;
    let mut max_row_defect = 0.0f64;
    let mut min_entry = f64::INFINITY;

    for window in 0..n_windows {
        let graph = Arc::new(pool[window % pool.len()].clone());
        let n = graph.n_vertices();
        let mut rng = ChaCha8Rng::seed_from_u64(split_seed(seed, 4_000 + window as u64));
        let u0: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let mut state = init_state(graph, &u0, &vec![1.0; n]).expect("valid init");
        for _ in 0..rng.random_range(0..500usize) {
            step_in_place(&mut state, &mut rng);
        }

        let length = rng.random_range(1..=1_000usize);
        let mut prod = DenseMatrix::identity(n);
        for _ in 0..length {
            let pre = state.clone();
            let record = step_in_place(&mut state, &mut rng);
            let lambda = lambda_matrix(&state, &diffusion_matrix(&pre, record.edge));
            for r in 0..n {
                let mut row_sum = 0.0;
                for c in 0..n {
                    let entry = lambda.get(r, c);
                    min_entry = min_entry.min(entry);
                    row_sum += entry;
                }
                max_row_defect = max_row_defect.max((row_sum - 1.0).abs());
            }
            // Λ differs from the identity only in the two endpoint rows,
            // so the product update is two row combinations.
            let (i, j) = pre.graph().endpoints(record.edge);
            let (lii, lij) = (lambda.get(i, i), lambda.get(i, j));
            let (lji, ljj) = (lambda.get(j, i), lambda.get(j, j));
            for c in 0..n {
                let pi = prod.get(i, c);
                let pj = prod.get(j, c);
                prod.set(i, c, lii * pi + lij * pj);
                prod.set(j, c, lji * pi + ljj * pj);
            }
        }
        let norm = operator_norm(&prod).expect("norm converges");
        max_excess = max_excess.max(norm - (n as f64).sqrt());
    }

    CheckOutcome {
        name: "lambda-product-norms",
        passed: max_excess <= 1e-9 && max_row_defect <= 1e-14 && min_entry >= 0.0,
        detail: format!(
            "{n_windows} windows: max(‖ΠΛ‖ − √|V|) = {max_excess:.3e} (≤ 1e−9), \
             max row defect = {max_row_defect:.3e} (≤ 1e−14), min entry = {min_entry:.3e} (≥ 0)"
        ),
    }
}

/// Check 5: the row-norm sandwich `max_row ≤ ‖A‖ ≤ √n·max_row` on random
/// square matrices.
fn row_norm_sandwich(quick: bool, seed: u64) -> CheckOutcome {
    let instances = if quick { 50 } else { 200 };
    let mut rng = ChaCha8Rng::seed_from_u64(split_seed(seed, 5_000));
    let mut worst_lower = f64::INFINITY;
    let mut worst_upper = f64::INFINITY;
    for _ in 0..instances {
        let n = rng.random_range(1..=12usize);
        let a = random_matrix(&mut rng, n, n);
        let (max_row, op) = row_norm_bounds(&a).expect("square matrix");
        worst_lower = worst_lower.min(op - max_row);
        worst_upper = worst_upper.min((n as f64).sqrt() * max_row - op);
    }
    let tol = 1e-9;
    CheckOutcome {
        name: "row-norm-sandwich",
        passed: worst_lower >= -tol && worst_upper >= -tol,
        detail: format!(
            "{instances} matrices: min(‖A‖ − max_row) = {worst_lower:.3e}, \
             min(√n·max_row − ‖A‖) = {worst_upper:.3e} (both ≥ −1e−9)"
        ),
    }
}

/// Check 6: the two-vertex model is a single Pólya urn in disguise —
/// paired runs are bit-identical and terminal opinions from independent
/// seeds are KS-indistinguishable.
fn polya_coupling(quick: bool, seed: u64) -> CheckOutcome {
    let n_steps = if quick { 500 } else { 5_000 };
    match polya_equivalence(0.5, 1.0, n_steps, 2_000, split_seed(seed, 6_000)) {
        Ok(report) => CheckOutcome {
            name: "polya-coupling",
            passed: report.coupled_identical && report.ks_statistic < 0.05,
            detail: format!(
                "2000 paired runs × {n_steps} steps bit-identical; KS = {:.4} (< 0.05)",
                report.ks_statistic
            ),
        },
        Err(err) => CheckOutcome {
            name: "polya-coupling",
            passed: false,
            detail: format!("coupling failed: {err}"),
        },
    }
}

/// Check 7: Hoeffding concentration of per-vertex weight growth on the
/// five-vertex path.
fn hoeffding_concentration(quick: bool, seed: u64) -> CheckOutcome {
    let (n_steps, n_trials) = if quick { (2_500, 800) } else { (10_000, 2_000) };
    let graph = Arc::new(path_graph(5).expect("path"));
    let report = hoeffding_check(&graph, n_steps, n_trials, split_seed(seed, 7_000));
    let detail = report
        .thresholds
        .iter()
        .map(|row| {
            let worst = row.frequencies.iter().cloned().fold(0.0f64, f64::max);
            format!(
                "a = {:.0}: max freq {worst:.3e} vs bound {:.3e}",
                row.a, row.bound
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    CheckOutcome {
        name: "hoeffding-check",
        passed: report.passed(),
        detail: format!("{n_trials} trials × {n_steps} steps: {detail}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_suite_passes_on_default_seed() {
        let outcomes = run_all(true, 0);
        assert_eq!(outcomes.len(), 7);
        for outcome in &outcomes {
            assert!(outcome.passed, "{}: {}", outcome.name, outcome.detail);
        }
        assert_eq!(exit_code(&outcomes), 0);
    }

    #[test]
    fn exit_code_flags_failures() {
        let mut outcomes = run_all(true, 0);
        outcomes[3].passed = false;
        assert_eq!(exit_code(&outcomes), 2);
        assert_eq!(exit_code(&[]), 0);
    }
}
