//! Flag parsing and validation for the command-line front end.
//!
//! Every parser here reports failures through [`CliError::InvalidFlag`],
//! which names the offending flag — the binary's contract is that exit
//! code 1 always comes with a message pointing at the field to fix.
//!
//! # Graph shorthand grammar
//!
//! The `--graph` flag accepts either a builtin generator shorthand
//!
//! ```text
//! path:<n>  |  cycle:<n>  |  complete:<n>  |  gnp:<n>:<p>:<seed>
//! ```
//!
//! or a filesystem path to a JSON document in the schema
//! `{"n": int, "edges": [[i, j], ...]}` (the same schema `graph export`
//! emits). A value is treated as a file path exactly when it does not
//! start with one of the generator names, so a file literally named
//! `path:5` must be given as `./path:5`.

use std::path::PathBuf;

use opinion_urn::{
    complete_graph, cycle_graph, erdos_renyi, log_spaced_times, path_graph, Graph, GraphError,
};

/// Errors surfaced to the user with exit code 1.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// A flag value failed to parse or validate.
    #[error("invalid value for {flag}: {message}")]
    InvalidFlag {
        flag: &'static str,
        message: String,
    },
    /// Reading or writing a file failed.
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// A computation failed after validation (library-level error).
    #[error("{0}")]
    Run(String),
}

impl CliError {
    pub fn flag(flag: &'static str, message: impl Into<String>) -> Self {
        CliError::InvalidFlag {
            flag,
            message: message.into(),
        }
    }
}

fn graph_error(err: GraphError) -> CliError {
    CliError::flag("--graph", err.to_string())
}

/// Parses the `--graph` value: generator shorthand or JSON file path.
pub fn parse_graph(spec: &str) -> Result<Graph, CliError> {
    let mut parts = spec.split(':');
    let head = parts.next().unwrap_or_default();
    let rest: Vec<&str> = parts.collect();
    match head {
        "path" | "cycle" | "complete" => {
            if rest.len() != 1 {
                return Err(CliError::flag(
                    "--graph",
                    format!("{head} takes exactly one parameter, e.g. {head}:5"),
                ));
            }
            let n: usize = rest[0].parse().map_err(|_| {
                CliError::flag("--graph", format!("vertex count {:?} is not a number", rest[0]))
            })?;
            match head {
                "path" => path_graph(n).map_err(graph_error),
                "cycle" => cycle_graph(n).map_err(graph_error),
                _ => complete_graph(n).map_err(graph_error),
            }
        }
        "gnp" => {
            if rest.len() != 3 {
                return Err(CliError::flag(
                    "--graph",
                    "gnp takes three parameters: gnp:<n>:<p>:<seed>, e.g. gnp:20:0.3:1",
                ));
            }
            let n: usize = rest[0].parse().map_err(|_| {
                CliError::flag("--graph", format!("vertex count {:?} is not a number", rest[0]))
            })?;
            let p: f64 = rest[1].parse().map_err(|_| {
                CliError::flag(
                    "--graph",
                    format!("edge probability {:?} is not a number", rest[1]),
                )
            })?;
            let seed: u64 = rest[2].parse().map_err(|_| {
                CliError::flag("--graph", format!("seed {:?} is not a number", rest[2]))
            })?;
            erdos_renyi(n, p, seed).map_err(graph_error)
        }
        _ => {
            let path = PathBuf::from(spec);
            let payload = std::fs::read_to_string(&path).map_err(|source| {
                if matches!(source.kind(), std::io::ErrorKind::NotFound) {
                    CliError::flag(
                        "--graph",
                        format!(
                            "{spec:?} is neither a generator shorthand \
                             (path:<n>, cycle:<n>, complete:<n>, gnp:<n>:<p>:<seed>) \
                             nor a readable file"
                        ),
                    )
                } else {
                    CliError::Io { path, source }
                }
            })?;
            Graph::from_json(&payload).map_err(graph_error)
        }
    }
}

/// Parses a comma-separated float list; a single value broadcasts to all
/// `n` vertices.
pub fn parse_scalar_or_list(
    value: &str,
    n: usize,
    flag: &'static str,
) -> Result<Vec<f64>, CliError> {
    let entries: Vec<&str> = value.split(',').collect();
    let parsed: Result<Vec<f64>, _> = entries.iter().map(|s| s.trim().parse::<f64>()).collect();
    let parsed = parsed
        .map_err(|_| CliError::flag(flag, format!("{value:?} is not a number list")))?;
    if parsed.len() == 1 {
        return Ok(vec![parsed[0]; n]);
    }
    if parsed.len() != n {
        return Err(CliError::flag(
            flag,
            format!(
                "expected 1 or {n} comma-separated values for this graph, got {}",
                parsed.len()
            ),
        ));
    }
    Ok(parsed)
}

/// Resolves the initial urn weights from the `--x0`/`--u0`/`--g0` flags.
///
/// Exactly one of `--x0` (opinions, converted via `u0 = x0 · g0`) or
/// `--u0` (weights on the U state) must be present; `--g0` broadcasts a
/// scalar.
pub fn parse_init(
    x0: Option<&str>,
    u0: Option<&str>,
    g0: &str,
    n: usize,
) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let g0 = parse_scalar_or_list(g0, n, "--g0")?;
    match (x0, u0) {
        (Some(_), Some(_)) => Err(CliError::flag(
            "--x0",
            "give either --x0 or --u0, not both",
        )),
        (None, None) => Err(CliError::flag(
            "--x0",
            "an initial condition is required: --x0 <opinions> or --u0 <weights>",
        )),
        (Some(x0), None) => {
            let x0 = parse_scalar_or_list(x0, n, "--x0")?;
            let u0 = x0.iter().zip(&g0).map(|(x, g)| x * g).collect();
            Ok((u0, g0))
        }
        (None, Some(u0)) => {
            let u0 = parse_scalar_or_list(u0, n, "--u0")?;
            Ok((u0, g0))
        }
    }
}

/// Parses the `--samples` value: `log:<points-per-decade>` or an explicit
/// comma-separated list of times.
pub fn parse_samples(value: &str, n_steps: usize) -> Result<Vec<usize>, CliError> {
    if let Some(ppd) = value.strip_prefix("log:") {
        let ppd: usize = ppd.parse().map_err(|_| {
            CliError::flag(
                "--samples",
                format!("points-per-decade {ppd:?} is not a number"),
            )
        })?;
        if ppd == 0 {
            return Err(CliError::flag(
                "--samples",
                "points-per-decade must be at least 1",
            ));
        }
        return Ok(log_spaced_times(n_steps, ppd));
    }
    let times: Result<Vec<usize>, _> =
        value.split(',').map(|s| s.trim().parse::<usize>()).collect();
    let times = times.map_err(|_| {
        CliError::flag(
            "--samples",
            format!("{value:?} is neither log:<k> nor a comma-separated list of times"),
        )
    })?;
    for window in times.windows(2) {
        if window[0] >= window[1] {
            return Err(CliError::flag(
                "--samples",
                format!(
                    "times must be strictly increasing, got {} then {}",
                    window[0], window[1]
                ),
            ));
        }
    }
    if let Some(&last) = times.last() {
        if last > n_steps {
            return Err(CliError::flag(
                "--samples",
                format!("sample time {last} exceeds --steps {n_steps}"),
            ));
        }
    }
    if times.is_empty() {
        return Err(CliError::flag("--samples", "no sample times given"));
    }
    Ok(times)
}

/// Parses the `--fit-window` value `t_min,t_max`.
pub fn parse_fit_window(value: &str) -> Result<(usize, usize), CliError> {
    let parts: Vec<&str> = value.split(',').collect();
    if parts.len() != 2 {
        return Err(CliError::flag(
            "--fit-window",
            format!("expected t_min,t_max (e.g. 100,10000), got {value:?}"),
        ));
    }
    let t_min: usize = parts[0].trim().parse().map_err(|_| {
        CliError::flag("--fit-window", format!("t_min {:?} is not a number", parts[0]))
    })?;
    let t_max: usize = parts[1].trim().parse().map_err(|_| {
        CliError::flag("--fit-window", format!("t_max {:?} is not a number", parts[1]))
    })?;
    if t_min >= t_max {
        return Err(CliError::flag(
            "--fit-window",
            format!("t_min {t_min} must be below t_max {t_max}"),
        ));
    }
    Ok((t_min, t_max))
}

/// Reads the `OPINION_URN_THREADS` worker-count cap from the environment.
pub fn thread_cap() -> Result<Option<usize>, CliError> {
    match std::env::var("OPINION_URN_THREADS") {
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(std::env::VarError::NotUnicode(_)) => Err(CliError::flag(
            "OPINION_URN_THREADS",
            "environment variable is not valid unicode",
        )),
        Ok(raw) => {
            let threads: usize = raw.parse().map_err(|_| {
                CliError::flag(
                    "OPINION_URN_THREADS",
                    format!("{raw:?} is not a thread count"),
                )
            })?;
            if threads == 0 {
                return Err(CliError::flag(
                    "OPINION_URN_THREADS",
                    "thread count must be at least 1",
                ));
            }
            Ok(Some(threads))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_builtin_shorthands() {
        assert_eq!(parse_graph("path:5").unwrap().n_vertices(), 5);
        assert_eq!(parse_graph("cycle:8").unwrap().n_edges(), 8);
        assert_eq!(parse_graph("complete:4").unwrap().n_edges(), 6);
        let g = parse_graph("gnp:20:0.3:1").unwrap();
        assert_eq!(g.n_vertices(), 20);
    }

    #[test]
    fn shorthand_errors_name_the_flag() {
        let err = parse_graph("path:zero").unwrap_err().to_string();
        assert!(err.contains("--graph"), "{err}");
        let err = parse_graph("gnp:20:0.3").unwrap_err().to_string();
        assert!(err.contains("gnp:<n>:<p>:<seed>"), "{err}");
        let err = parse_graph("no-such-file.json").unwrap_err().to_string();
        assert!(err.contains("--graph"), "{err}");
    }

    #[test]
    fn graph_json_file_round_trip() {
        let dir = std::env::temp_dir().join("opinion-urn-config-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("graph.json");
        let original = parse_graph("gnp:12:0.4:7").unwrap();
        std::fs::write(&path, original.to_json()).unwrap();
        let loaded = parse_graph(path.to_str().unwrap()).unwrap();
        assert_eq!(loaded.edges(), original.edges());
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn scalar_broadcast_and_lists() {
        assert_eq!(parse_scalar_or_list("1", 3, "--g0").unwrap(), vec![1.0; 3]);
        assert_eq!(
            parse_scalar_or_list("1,2,3", 3, "--g0").unwrap(),
            vec![1.0, 2.0, 3.0]
        );
        let err = parse_scalar_or_list("1,2", 3, "--g0").unwrap_err().to_string();
        assert!(err.contains("--g0") && err.contains("got 2"), "{err}");
    }

    #[test]
    fn init_converts_x0_to_u0() {
        let (u0, g0) = parse_init(Some("1,0.5,0"), None, "2", 3).unwrap();
        assert_eq!(g0, vec![2.0; 3]);
        assert_eq!(u0, vec![2.0, 1.0, 0.0]);
    }

    #[test]
    fn init_requires_exactly_one_of_x0_u0() {
        let err = parse_init(None, None, "1", 2).unwrap_err().to_string();
        assert!(err.contains("--x0"), "{err}");
        let err = parse_init(Some("1"), Some("1"), "1", 2)
            .unwrap_err()
            .to_string();
        assert!(err.contains("not both"), "{err}");
    }

    #[test]
    fn samples_grammar() {
        let log = parse_samples("log:20", 1000).unwrap();
        assert_eq!(log.first(), Some(&0));
        assert_eq!(log.last(), Some(&1000));
        assert_eq!(parse_samples("0,10,100", 100).unwrap(), vec![0, 10, 100]);
        assert!(parse_samples("10,5", 100).unwrap_err().to_string().contains("increasing"));
        assert!(parse_samples("log:0", 100).unwrap_err().to_string().contains("at least 1"));
        assert!(parse_samples("0,200", 100).unwrap_err().to_string().contains("exceeds"));
    }

    #[test]
    fn fit_window_grammar() {
        assert_eq!(parse_fit_window("100,10000").unwrap(), (100, 10_000));
        assert!(parse_fit_window("100").unwrap_err().to_string().contains("--fit-window"));
        assert!(parse_fit_window("50,50").unwrap_err().to_string().contains("below"));
    }
}
