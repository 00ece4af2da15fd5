//! Monte Carlo ensembles: many seeded trajectories, aggregated disagreement
//! statistics, power-law fits, and probabilistic sanity checks.
//!
//! # Determinism
//!
//! Trajectory `i` always runs from `split_seed(base_seed, i)`, a SplitMix64
//! finalizer over the base seed and index, so streams cannot overlap by
//! construction and each trajectory's output is independent of how many
//! others run. Workers execute in parallel but only produce per-trajectory
//! summaries; the aggregation is a single sequential merge in
//! trajectory-index order with compensated summation, so the resulting
//! [`EnsembleStats`] is bit-identical across thread counts and repeat runs.
//!
//! # What is measured
//!
//! At every sample time the ensemble records the mean squared disagreement
//! `E[‖z_t‖²]` (with `z_t = x_t − a_t·1` against the per-trajectory
//! consensus coordinate `a_t`), the mean and variance of `a_t`, and the
//! mean martingale increment of the consensus decomposition between
//! consecutive sample times together with its standard error — the
//! empirical handle on `E[m_t − m_s] = 0`. Horizon diagnostics at `T/4`,
//! `T/2`, `T` feed the Cauchy-style convergence proxies of
//! [`convergence_report`].
//!
//! The decay of `E[‖z_t‖²]` is summarized by [`fit_power_law`], a
//! least-squares line in log-log coordinates over a fit window that
//! excludes the early transient.

use std::sync::Arc;

use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dynamics::{init_state, step_core, DynamicsError};
use crate::graph::Graph;
use crate::spectral::{eigenbasis, SpectralError};

/// Default resolution of the log-spaced sample grid.
pub const DEFAULT_POINTS_PER_DECADE: usize = 20;

/// Default fit window for the decay exponent: the conjectured power law is
/// asymptotic, so the early transient is excluded.
pub const DEFAULT_FIT_WINDOW: (usize, usize) = (100, 10_000);

/// Decay-ratio threshold used by [`convergence_report`]: over two decades a
/// `t^{−0.37}` law contracts by ≈ 0.18, so 0.55 leaves a generous margin
/// while still refuting non-decaying disagreement.
pub const DECAY_RATIO_THRESHOLD: f64 = 0.55;

/// Errors from ensemble configuration, fitting, and the probabilistic
/// checks.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EnsembleError {
    /// Initial weights failed validation.
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    /// The spectral preprocessing of the graph failed.
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    /// A structurally invalid configuration.
    #[error("invalid ensemble config: {0}")]
    InvalidConfig(String),
    /// Too few sample times to perform the requested analysis.
    #[error("{what}: need at least {need} sample times, found {found}")]
    InsufficientData {
        what: &'static str,
        need: usize,
        found: usize,
    },
    /// A log-log fit was requested over data that is not strictly positive.
    #[error(
        "power-law fit window contains {positive} strictly positive values, need at least {need}"
    )]
    NonpositiveValues { positive: usize, need: usize },
    /// The coupled urn comparison diverged (signals a dynamics bug).
    #[error(
        "coupled and reference urn trajectories diverged at trial {trial}, step {step}: \
         {coupled} vs {reference}"
    )]
    TrajectoryMismatch {
        trial: usize,
        step: usize,
        coupled: f64,
        reference: f64,
    },
}

/// Full specification of a Monte Carlo ensemble run.
#[derive(Debug, Clone)]
pub struct EnsembleConfig {
    pub graph: Arc<Graph>,
    pub u0: Vec<f64>,
    pub g0: Vec<f64>,
    pub n_steps: usize,
    pub n_trajectories: usize,
    pub base_seed: u64,
    /// Strictly increasing times in `[0, n_steps]` at which statistics are
    /// recorded; defaults to a log-spaced grid.
    pub sample_times: Vec<usize>,
    /// Worker threads; `None` leaves the choice to the runtime.
    pub parallelism: Option<usize>,
}

impl EnsembleConfig {
    /// Config with the default log-spaced sample grid and runtime-chosen
    /// parallelism.
    pub fn new(
        graph: Arc<Graph>,
        u0: Vec<f64>,
        g0: Vec<f64>,
        n_steps: usize,
        n_trajectories: usize,
        base_seed: u64,
    ) -> Self {
        let sample_times = log_spaced_times(n_steps, DEFAULT_POINTS_PER_DECADE);
        EnsembleConfig {
            graph,
            u0,
            g0,
            n_steps,
            n_trajectories,
            base_seed,
            sample_times,
            parallelism: None,
        }
    }

    fn validate(&self) -> Result<(), EnsembleError> {
        if self.n_trajectories < 1 {
            return Err(EnsembleError::InvalidConfig(
                "n_trajectories must be at least 1".into(),
            ));
        }
        if self.sample_times.is_empty() {
            return Err(EnsembleError::InvalidConfig(
                "sample_times must not be empty".into(),
            ));
        }
        for window in self.sample_times.windows(2) {
            if window[0] >= window[1] {
                return Err(EnsembleError::InvalidConfig(format!(
                    "sample_times must be strictly increasing, got {} then {}",
                    window[0], window[1]
                )));
            }
        }
        if let Some(&last) = self.sample_times.last() {
            if last > self.n_steps {
                return Err(EnsembleError::InvalidConfig(format!(
                    "sample time {last} exceeds n_steps = {}",
                    self.n_steps
                )));
            }
        }
        Ok(())
    }
}

/// Aggregated ensemble statistics, aligned with `sample_times`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    pub sample_times: Vec<usize>,
    /// Ensemble mean of `‖z_t‖²` per sample time.
    pub mean_z_sq: Vec<f64>,
    /// Ensemble mean of the consensus coordinate `a_t`.
    pub mean_a: Vec<f64>,
    /// Sample variance of `a_t` over trajectories.
    pub var_a: Vec<f64>,
    /// Ensemble mean of the martingale increment `m(t_k) − m(t_{k−1})`
    /// (with `m(t_{−1}) := 0`), per sample time.
    pub mean_m_increment: Vec<f64>,
    /// Standard error of that mean.
    pub se_m_increment: Vec<f64>,
    pub n_trajectories: usize,
    /// Quantities at `T/4`, `T/2`, `T` feeding the convergence proxies.
    pub horizon: HorizonDiagnostics,
}

/// Cross-horizon diagnostics: how much the consensus coordinate and the
/// small part still move over the late half of the run compared with the
/// earlier quarter (Cauchy-in-L² proxies).
#[derive(Debug, Clone, PartialEq)]
pub struct HorizonDiagnostics {
    pub t_quarter: usize,
    pub t_half: usize,
    pub t_full: usize,
    /// Sample variance of `a_T − a_{T/2}` over trajectories.
    pub var_a_late_increment: f64,
    /// Sample variance of `a_{T/2} − a_{T/4}`.
    pub var_a_early_increment: f64,
    /// Ensemble mean of `|s_T − s_{T/2}|`.
    pub mean_abs_s_late_increment: f64,
    /// Ensemble mean of `|s_{T/2} − s_{T/4}|`.
    pub mean_abs_s_early_increment: f64,
}

/// Least-squares power law `y ≈ amplitude · t^exponent` fitted in log-log
/// coordinates.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub amplitude: f64,
    /// Coefficient of determination of the log-log line, clamped to
    /// `[0, 1]`; a constant series fits exactly (r² = 1).
    pub r_squared: f64,
    pub window: (usize, usize),
}

/// Hoeffding concentration report for the per-vertex weight growth: at each
/// threshold `a`, the empirical frequency of
/// `|g_t(i) − g_0(i) − t·d_i/|E|| > a` per vertex, against the analytic
/// tail bound `2·exp(−2a²/t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HoeffdingReport {
    pub n_steps: usize,
    pub n_trials: usize,
    pub thresholds: Vec<HoeffdingThreshold>,
}

/// One threshold row of a [`HoeffdingReport`].
#[derive(Debug, Clone, PartialEq)]
pub struct HoeffdingThreshold {
    /// Deviation threshold `a`.
    pub a: f64,
    /// Analytic bound `2·exp(−2a²/t)`.
    pub bound: f64,
    /// Empirical exceedance frequency per vertex.
    pub frequencies: Vec<f64>,
    /// Vertices whose frequency exceeds `bound + 3·SE(bound)`.
    pub violations: Vec<usize>,
}

impl HoeffdingReport {
    /// True when no vertex at any threshold exceeds its allowance.
    pub fn passed(&self) -> bool {
        self.thresholds.iter().all(|row| row.violations.is_empty())
    }
}

/// Result of the single-urn coupling oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyaReport {
    pub n_steps: usize,
    pub n_trials: usize,
    /// Whether every paired run matched bit-for-bit (a mismatch is an
    /// error, so this is always true on a returned report).
    pub coupled_identical: bool,
    /// Two-sample Kolmogorov–Smirnov statistic between terminal opinions
    /// of the two implementations run on independent seeds.
    pub ks_statistic: f64,
}

/// Convergence proxies extracted from [`EnsembleStats`].
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub t_early: usize,
    pub t_late: usize,
    pub z_sq_early: f64,
    pub z_sq_late: f64,
    /// Required ratio `z_sq_late ≤ threshold · z_sq_early`.
    pub decay_threshold: f64,
    pub decay_ok: bool,
    pub var_a_late_increment: f64,
    pub var_a_early_increment: f64,
    /// Whether `var(a_T − a_{T/2}) ≤ var(a_{T/2} − a_{T/4})`.
    pub cauchy_ok: bool,
    pub mean_abs_s_late_increment: f64,
    pub mean_abs_s_early_increment: f64,
    /// Informational: the small part moves less over the late window.
    pub s_shrinking: bool,
}

impl ConvergenceReport {
    /// True when disagreement decays and the consensus coordinate is
    /// Cauchy; `s_shrinking` is reported but not gating.
    pub fn passed(&self) -> bool {
        self.decay_ok && self.cauchy_ok
    }
}

/// Derives the seed of trajectory `index` from `base_seed` via a
/// SplitMix64 finalizer over `base + (index+1)·φ64`; documented so external
/// tools can reproduce any single trajectory.
pub fn split_seed(base_seed: u64, index: u64) -> u64 {
    let mut z = base_seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Log-spaced sample grid: `{0} ∪ {round(10^(k/points_per_decade))} ∪
/// {n_steps}`, deduplicated and sorted. Contains every exact power of ten
/// up to `n_steps`.
pub fn log_spaced_times(n_steps: usize, points_per_decade: usize) -> Vec<usize> {
    assert!(points_per_decade >= 1, "need at least one point per decade");
    let mut times = vec![0];
    let mut k = 0u32;
    loop {
        let value = 10f64.powf(k as f64 / points_per_decade as f64).round() as usize;
        if value > n_steps {
            break;
        }
        times.push(value);
        k += 1;
    }
    times.push(n_steps);
    times.sort_unstable();
    times.dedup();
    times
}

fn kahan_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut compensation = 0.0;
    for value in values {
        let y = value - compensation;
        let t = sum + y;
        compensation = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Sample variance (n−1 denominator) via a two-pass formula; 0 for fewer
/// than two values.
fn sample_variance(values: &[f64], mean: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let sum_sq = kahan_sum(values.iter().map(|v| (v - mean) * (v - mean)));
    sum_sq / (values.len() - 1) as f64
}

/// Everything one trajectory contributes to the merge, indexed by sample
/// time.
struct TrajectorySummary {
    z_sq: Vec<f64>,
    a: Vec<f64>,
    m: Vec<f64>,
    a_quarter: f64,
    a_half: f64,
    a_full: f64,
    s_quarter: f64,
    s_half: f64,
    s_full: f64,
}

/// Per-edge influence weights `(L^{ab}, L^{ba})` aligned with the graph's
/// edge list, precomputed once per ensemble.
fn influence_edge_weights(graph: &Graph) -> Vec<(f64, f64)> {
    let d = graph.degrees_f64();
    graph
        .edges()
        .iter()
        .map(|&(a, b)| {
            let total = d[a] + d[b];
            ((d[b] / d[a]) / total, (d[a] / d[b]) / total)
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn simulate_trajectory(
    graph: &Arc<Graph>,
    u0: &[f64],
    g0: &[f64],
    n_steps: usize,
    sample_times: &[usize],
    consensus: &[f64],
    l_weights: &[(f64, f64)],
    seed: u64,
) -> TrajectorySummary {
    let m_edges = graph.n_edges() as f64;
    let mut state =
        init_state(graph.clone(), u0, g0).expect("initial state validated by run_ensemble");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let consensus_of = |x: &[f64]| -> f64 { x.iter().zip(consensus).map(|(xi, pi)| pi * xi).sum() };
    let z_sq_of = |x: &[f64], a: f64| -> f64 { x.iter().map(|xi| (xi - a) * (xi - a)).sum() };

    let t_quarter = n_steps / 4;
    let t_half = n_steps / 2;

    let mut z_sq = Vec::with_capacity(sample_times.len());
    let mut a_series = Vec::with_capacity(sample_times.len());
    let mut m_series = Vec::with_capacity(sample_times.len());
    let mut m_acc = 0.0;
    let mut s_acc = 0.0;
    let (mut a_quarter, mut a_half, mut a_full) = (f64::NAN, f64::NAN, f64::NAN);
    let (mut s_quarter, mut s_half, mut s_full) = (f64::NAN, f64::NAN, f64::NAN);

    let mut next_sample = sample_times.iter().copied().peekable();
    let record_at = |t: usize,
                         state_x: &[f64],
                         m_acc: f64,
                         next: &mut std::iter::Peekable<std::iter::Copied<std::slice::Iter<usize>>>,
                         z_sq: &mut Vec<f64>,
                         a_series: &mut Vec<f64>,
                         m_series: &mut Vec<f64>| {
        if next.peek() == Some(&t) {
            next.next();
            let a = consensus_of(state_x);
            z_sq.push(z_sq_of(state_x, a));
            a_series.push(a);
            m_series.push(m_acc);
        }
    };

    // Horizon capture at t = 0 when the horizon thresholds collapse there.
    let a0 = consensus_of(state.x());
    if t_quarter == 0 {
        a_quarter = a0;
        s_quarter = 0.0;
    }
    if t_half == 0 {
        a_half = a0;
        s_half = 0.0;
    }
    if n_steps == 0 {
        a_full = a0;
        s_full = 0.0;
    }
    record_at(
        0,
        state.x(),
        m_acc,
        &mut next_sample,
        &mut z_sq,
        &mut a_series,
        &mut m_series,
    );

    for t in 1..=n_steps {
        // Conditional-expectation terms of the consensus decomposition,
        // evaluated on the pre-step state in O(|E|) per step:
        //   expected_term  = p · (E_{t−1}[γ_t ∘ L_{t−1}] x)
        //   influence_term = p · (L x)
        let mut expected_term = 0.0;
        let mut influence_term = 0.0;
        {
            let x = state.x();
            let g = state.g();
            for (e, &(a, b)) in graph.edges().iter().enumerate() {
                let diff = x[b] - x[a];
                let pooled = g[a] + g[b];
                expected_term += consensus[a] * (g[b] / (m_edges * (g[a] + 1.0) * pooled)) * diff
                    - consensus[b] * (g[a] / (m_edges * (g[b] + 1.0) * pooled)) * diff;
                let (l_ab, l_ba) = l_weights[e];
                influence_term += consensus[a] * l_ab * diff - consensus[b] * l_ba * diff;
            }
        }

        let raw = step_core(&mut state, &mut rng);
        let (i, j) = (raw.i, raw.j);
        let pooled = raw.g_i_pre + raw.g_j_pre;
        let diffused_i = (raw.g_j_pre / pooled) * (raw.x_j_pre - raw.x_i_pre);
        let diffused_j = (raw.g_i_pre / pooled) * (raw.x_i_pre - raw.x_j_pre);
        let gamma_i = 1.0 / state.g()[i];
        let gamma_j = 1.0 / state.g()[j];
        let realized_term = consensus[i] * gamma_i * diffused_i + consensus[j] * gamma_j * diffused_j;
        let fluctuation = (raw.outcome as u8 as f64) - raw.p;
        let noise_term = fluctuation * (consensus[i] * gamma_i + consensus[j] * gamma_j);

        m_acc += (realized_term - expected_term) + noise_term;
        s_acc += expected_term - influence_term / t as f64;

        if t == t_quarter {
            a_quarter = consensus_of(state.x());
            s_quarter = s_acc;
        }
        if t == t_half {
            a_half = consensus_of(state.x());
            s_half = s_acc;
        }
        if t == n_steps {
            a_full = consensus_of(state.x());
            s_full = s_acc;
        }
        record_at(
            t,
            state.x(),
            m_acc,
            &mut next_sample,
            &mut z_sq,
            &mut a_series,
            &mut m_series,
        );
    }

    debug_assert_eq!(z_sq.len(), sample_times.len());
    TrajectorySummary {
        z_sq,
        a: a_series,
        m: m_series,
        a_quarter,
        a_half,
        a_full,
        s_quarter,
        s_half,
        s_full,
    }
}

/// Runs the configured ensemble and aggregates its statistics.
///
/// Deterministic: repeated runs with the same config — including across
/// different `parallelism` settings — produce bit-identical stats.
///
/// # Errors
/// - [`EnsembleError::InvalidConfig`] for structural config problems;
/// - [`EnsembleError::Dynamics`] if the initial weights are invalid;
/// - [`EnsembleError::Spectral`] if the graph's spectrum cannot be built.
pub fn run_ensemble(config: &EnsembleConfig) -> Result<EnsembleStats, EnsembleError> {
    config.validate()?;
    // Validate the initial state once up front; workers can then unwrap.
    init_state(config.graph.clone(), &config.u0, &config.g0)?;
    let spectrum = eigenbasis(&config.graph)?;
    let consensus = spectrum.consensus;
    let l_weights = influence_edge_weights(&config.graph);

    let worker = |index: usize| -> TrajectorySummary {
        simulate_trajectory(
            &config.graph,
            &config.u0,
            &config.g0,
            config.n_steps,
            &config.sample_times,
            &consensus,
            &l_weights,
            split_seed(config.base_seed, index as u64),
        )
    };

    let summaries: Vec<TrajectorySummary> = match config.parallelism {
        Some(1) => (0..config.n_trajectories).map(worker).collect(),
        Some(threads) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| EnsembleError::InvalidConfig(format!("worker pool: {e}")))?;
            pool.install(|| (0..config.n_trajectories).into_par_iter().map(worker).collect())
        }
        None => (0..config.n_trajectories).into_par_iter().map(worker).collect(),
    };

    // Sequential merge in trajectory-index order.
    let n = config.n_trajectories;
    let n_times = config.sample_times.len();
    let mut mean_z_sq = Vec::with_capacity(n_times);
    let mut mean_a = Vec::with_capacity(n_times);
    let mut var_a = Vec::with_capacity(n_times);
    let mut mean_m_increment = Vec::with_capacity(n_times);
    let mut se_m_increment = Vec::with_capacity(n_times);
    let mut scratch = vec![0.0; n];
    for k in 0..n_times {
        mean_z_sq.push(kahan_sum(summaries.iter().map(|s| s.z_sq[k])) / n as f64);

        for (slot, summary) in scratch.iter_mut().zip(&summaries) {
            *slot = summary.a[k];
        }
        let a_mean = kahan_sum(scratch.iter().copied()) / n as f64;
        mean_a.push(a_mean);
        var_a.push(sample_variance(&scratch, a_mean));

        for (slot, summary) in scratch.iter_mut().zip(&summaries) {
            *slot = if k == 0 {
                summary.m[0]
            } else {
                summary.m[k] - summary.m[k - 1]
            };
        }
        let inc_mean = kahan_sum(scratch.iter().copied()) / n as f64;
        mean_m_increment.push(inc_mean);
        se_m_increment.push((sample_variance(&scratch, inc_mean) / n as f64).sqrt());
    }

    for (slot, summary) in scratch.iter_mut().zip(&summaries) {
        *slot = summary.a_full - summary.a_half;
    }
    let late_mean = kahan_sum(scratch.iter().copied()) / n as f64;
    let var_a_late_increment = sample_variance(&scratch, late_mean);
    for (slot, summary) in scratch.iter_mut().zip(&summaries) {
        *slot = summary.a_half - summary.a_quarter;
    }
    let early_mean = kahan_sum(scratch.iter().copied()) / n as f64;
    let var_a_early_increment = sample_variance(&scratch, early_mean);
    let mean_abs_s_late_increment =
        kahan_sum(summaries.iter().map(|s| (s.s_full - s.s_half).abs())) / n as f64;
    let mean_abs_s_early_increment =
        kahan_sum(summaries.iter().map(|s| (s.s_half - s.s_quarter).abs())) / n as f64;

    Ok(EnsembleStats {
        sample_times: config.sample_times.clone(),
        mean_z_sq,
        mean_a,
        var_a,
        mean_m_increment,
        se_m_increment,
        n_trajectories: n,
        horizon: HorizonDiagnostics {
            t_quarter: config.n_steps / 4,
            t_half: config.n_steps / 2,
            t_full: config.n_steps,
            var_a_late_increment,
            var_a_early_increment,
            mean_abs_s_late_increment,
            mean_abs_s_early_increment,
        },
    })
}

/// Fits `mean_z_sq ≈ amplitude · t^exponent` by least squares on
/// `(ln t, ln mean_z_sq)` over sample times in `[window.0, window.1]`
/// (zero times are excluded; the fit needs `t > 0`).
///
/// # Errors
/// - [`EnsembleError::InsufficientData`] if fewer than 5 sample times fall
///   in the window;
/// - [`EnsembleError::NonpositiveValues`] if fewer than 5 of them carry
///   strictly positive means.
pub fn fit_power_law(
    stats: &EnsembleStats,
    window: (usize, usize),
) -> Result<PowerLawFit, EnsembleError> {
    let (t_min, t_max) = window;
    let in_window: Vec<(usize, f64)> = stats
        .sample_times
        .iter()
        .zip(&stats.mean_z_sq)
        .filter(|&(&t, _)| t > 0 && t >= t_min && t <= t_max)
        .map(|(&t, &y)| (t, y))
        .collect();
    if in_window.len() < 5 {
        return Err(EnsembleError::InsufficientData {
            what: "power-law fit window",
            need: 5,
            found: in_window.len(),
        });
    }
    let points: Vec<(f64, f64)> = in_window
        .iter()
        .filter(|&&(_, y)| y > 0.0)
        .map(|&(t, y)| ((t as f64).ln(), y.ln()))
        .collect();
    if points.len() < 5 {
        return Err(EnsembleError::NonpositiveValues {
            positive: points.len(),
            need: 5,
        });
    }

    let n = points.len() as f64;
    let mean_x = points.iter().map(|&(x, _)| x).sum::<f64>() / n;
    let mean_y = points.iter().map(|&(_, y)| y).sum::<f64>() / n;
    let s_xx: f64 = points.iter().map(|&(x, _)| (x - mean_x) * (x - mean_x)).sum();
    let s_xy: f64 = points
        .iter()
        .map(|&(x, y)| (x - mean_x) * (y - mean_y))
        .sum();
    let s_yy: f64 = points.iter().map(|&(_, y)| (y - mean_y) * (y - mean_y)).sum();

    let exponent = if s_xx > 0.0 { s_xy / s_xx } else { 0.0 };
    let intercept = mean_y - exponent * mean_x;
    let r_squared = if s_yy > 0.0 {
        let ss_res: f64 = points
            .iter()
            .map(|&(x, y)| {
                let r = y - (intercept + exponent * x);
                r * r
            })
            .sum();
        (1.0 - ss_res / s_yy).clamp(0.0, 1.0)
    } else {
        // A constant series is fitted exactly by the zero-slope line.
        1.0
    };

    Ok(PowerLawFit {
        exponent,
        amplitude: intercept.exp(),
        r_squared,
        window,
    })
}

/// Empirical Hoeffding check on the weight growth `g_t(i) − g_0(i)`, which
/// is Binomial(t, d_i/|E|): over `n_trials` independent runs it measures
/// how often the deviation from the mean path exceeds `a ∈ {√t, 2√t}` and
/// compares against the tail bound `2·exp(−2a²/t)` plus three binomial
/// standard errors.
pub fn hoeffding_check(
    graph: &Arc<Graph>,
    n_steps: usize,
    n_trials: usize,
    seed: u64,
) -> HoeffdingReport {
    let n = graph.n_vertices();
    let m_edges = graph.n_edges() as f64;
    let d = graph.degrees_f64();
    let t = n_steps as f64;
    let thresholds_a = [t.sqrt(), 2.0 * t.sqrt()];

    let mut exceed_counts = vec![[0usize; 2]; n];
    let u0 = vec![0.5; n];
    let g0 = vec![1.0; n];
    for trial in 0..n_trials {
        let mut state = init_state(graph.clone(), &u0, &g0)
            .expect("fixed initial state is valid");
        let mut rng = ChaCha8Rng::seed_from_u64(split_seed(seed, trial as u64));
        for _ in 0..n_steps {
            step_core(&mut state, &mut rng);
        }
        for i in 0..n {
            let deviation = (state.g()[i] - 1.0 - t * d[i] / m_edges).abs();
            for (slot, &a) in exceed_counts[i].iter_mut().zip(&thresholds_a) {
                if deviation > a {
                    *slot += 1;
                }
            }
        }
    }

    let thresholds = thresholds_a
        .iter()
        .enumerate()
        .map(|(which, &a)| {
            let bound = 2.0 * (-2.0 * a * a / t).exp();
            let standard_error = (bound * (1.0 - bound).max(0.0) / n_trials as f64).sqrt();
            let frequencies: Vec<f64> = (0..n)
                .map(|i| exceed_counts[i][which] as f64 / n_trials as f64)
                .collect();
            let violations: Vec<usize> = (0..n)
                .filter(|&i| frequencies[i] > bound + 3.0 * standard_error)
                .collect();
            HoeffdingThreshold {
                a,
                bound,
                frequencies,
                violations,
            }
        })
        .collect();

    HoeffdingReport {
        n_steps,
        n_trials,
        thresholds,
    }
}

/// One step of the classical single Pólya urn: draw color U with
/// probability `u/g`, return the drawn ball plus one extra. Consumes the
/// same two logical draws as a coupled two-vertex step (an edge index over
/// the single edge, then the color uniform), so paired streams stay
/// aligned.
fn reference_polya_step<R: Rng + ?Sized>(u: &mut f64, g: &mut f64, rng: &mut R) -> f64 {
    let _edge: usize = rng.random_range(0..1);
    let p = *u / *g;
    *g += 1.0;
    if rng.random::<f64>() < p {
        *u += 1.0;
    }
    *u / *g
}

/// Two-sample Kolmogorov–Smirnov statistic `sup_x |F_a(x) − F_b(x)|`.
///
/// # Panics
/// Panics if either sample is empty.
pub fn ks_statistic(sample_a: &[f64], sample_b: &[f64]) -> f64 {
    assert!(
        !sample_a.is_empty() && !sample_b.is_empty(),
        "KS statistic needs nonempty samples"
    );
    let mut a = sample_a.to_vec();
    let mut b = sample_b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut ia, mut ib) = (0usize, 0usize);
    let mut max_gap = 0.0_f64;
    while ia < a.len() && ib < b.len() {
        let xa = a[ia];
        let xb = b[ib];
        if xa <= xb {
            ia += 1;
        }
        if xb <= xa {
            ib += 1;
        }
        let fa = ia as f64 / a.len() as f64;
        let fb = ib as f64 / b.len() as f64;
        max_gap = max_gap.max((fa - fb).abs());
    }
    max_gap
}

/// Coupling oracle against the classical single Pólya urn.
///
/// On a single edge both endpoints share one urn: the pooled probability
/// `(u+u)/(g+g)` equals `u/g` exactly (scaling numerator and denominator by
/// two is exact in binary floating point), so a coupled two-vertex run and
/// the reference urn driven by the same seed must agree bit-for-bit at
/// every step. Additionally compares the terminal distributions of the two
/// implementations across independent seeds with a two-sample KS statistic.
///
/// # Errors
/// - [`EnsembleError::Dynamics`] if `(u0, g0)` is not a valid urn;
/// - [`EnsembleError::TrajectoryMismatch`] on any bitwise divergence.
pub fn polya_equivalence(
    u0: f64,
    g0: f64,
    n_steps: usize,
    n_trials: usize,
    seed: u64,
) -> Result<PolyaReport, EnsembleError> {
    let graph = Arc::new(
        crate::graph::build_graph(2, &[(0, 1)]).expect("two-vertex graph is valid"),
    );
    // Validates 0 ≤ u0 ≤ g0, g0 > 0.
    init_state(graph.clone(), &[u0, u0], &[g0, g0])?;

    let mut coupled_terminal = Vec::with_capacity(n_trials);
    for trial in 0..n_trials {
        let trial_seed = split_seed(seed, trial as u64);
        let mut state = init_state(graph.clone(), &[u0, u0], &[g0, g0])
            .expect("validated above");
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
        let mut ref_u = u0;
        let mut ref_g = g0;
        let mut ref_rng = ChaCha8Rng::seed_from_u64(trial_seed);
        let mut last = state.x()[0];
        for step in 0..n_steps {
            step_core(&mut state, &mut rng);
            let reference = reference_polya_step(&mut ref_u, &mut ref_g, &mut ref_rng);
            let coupled = state.x()[0];
            if coupled.to_bits() != reference.to_bits() || state.x()[1].to_bits() != coupled.to_bits()
            {
                return Err(EnsembleError::TrajectoryMismatch {
                    trial,
                    step,
                    coupled,
                    reference,
                });
            }
            last = coupled;
        }
        coupled_terminal.push(last);
    }

    // Independent-seed reference sample for the distributional comparison.
    let mut reference_terminal = Vec::with_capacity(n_trials);
    for trial in 0..n_trials {
        let trial_seed = split_seed(seed, (n_trials + trial) as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
        let mut ref_u = u0;
        let mut ref_g = g0;
        let mut last = if g0 > 0.0 { u0 / g0 } else { f64::NAN };
        for _ in 0..n_steps {
            last = reference_polya_step(&mut ref_u, &mut ref_g, &mut rng);
        }
        reference_terminal.push(last);
    }

    let ks = if n_trials > 0 {
        ks_statistic(&coupled_terminal, &reference_terminal)
    } else {
        0.0
    };
    Ok(PolyaReport {
        n_steps,
        n_trials,
        coupled_identical: true,
        ks_statistic: ks,
    })
}

/// Extracts convergence proxies from ensemble statistics: disagreement
/// decay between an early and the final sample time, and the Cauchy
/// behaviour of the consensus coordinate across horizon halves.
///
/// # Errors
/// [`EnsembleError::InsufficientData`] with fewer than 3 sample times.
pub fn convergence_report(stats: &EnsembleStats) -> Result<ConvergenceReport, EnsembleError> {
    if stats.sample_times.len() < 3 {
        return Err(EnsembleError::InsufficientData {
            what: "convergence report",
            need: 3,
            found: stats.sample_times.len(),
        });
    }
    let t_late = *stats.sample_times.last().expect("nonempty");
    let early_target = t_late / 100;
    let early_index = stats
        .sample_times
        .iter()
        .position(|&t| t >= early_target)
        .expect("nonempty sample grid");
    let t_early = stats.sample_times[early_index];
    let z_sq_early = stats.mean_z_sq[early_index];
    let z_sq_late = *stats.mean_z_sq.last().expect("nonempty");
    let decay_ok = z_sq_late <= DECAY_RATIO_THRESHOLD * z_sq_early;

    let horizon = &stats.horizon;
    let cauchy_ok = horizon.var_a_late_increment <= horizon.var_a_early_increment;
    let s_shrinking = horizon.mean_abs_s_late_increment <= horizon.mean_abs_s_early_increment;

    Ok(ConvergenceReport {
        t_early,
        t_late,
        z_sq_early,
        z_sq_late,
        decay_threshold: DECAY_RATIO_THRESHOLD,
        decay_ok,
        var_a_late_increment: horizon.var_a_late_increment,
        var_a_early_increment: horizon.var_a_early_increment,
        cauchy_ok,
        mean_abs_s_late_increment: horizon.mean_abs_s_late_increment,
        mean_abs_s_early_increment: horizon.mean_abs_s_early_increment,
        s_shrinking,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::run_trajectory;
    use crate::graph::{build_graph, path_graph};
    use crate::spectral::{consensus_coordinate, disagreement};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn k2() -> Arc<Graph> {
        Arc::new(build_graph(2, &[(0, 1)]).unwrap())
    }

    fn path5() -> Arc<Graph> {
        Arc::new(path_graph(5).unwrap())
    }

    fn two_leader_config(n_steps: usize, n_trajectories: usize, seed: u64) -> EnsembleConfig {
        EnsembleConfig::new(
            path5(),
            vec![1.0, 1.0, 0.0, 0.0, 0.0],
            vec![1.0; 5],
            n_steps,
            n_trajectories,
            seed,
        )
    }

    #[test]
    fn log_spaced_times_hits_decades() {
        let times = log_spaced_times(10_000, 20);
        assert_eq!(times[0], 0);
        assert_eq!(*times.last().unwrap(), 10_000);
        for decade in [1, 10, 100, 1_000, 10_000] {
            assert!(times.contains(&decade), "missing t = {decade}");
        }
        for window in times.windows(2) {
            assert!(window[0] < window[1]);
        }
        // Roughly 20 points per decade over four decades.
        assert!(times.len() > 60 && times.len() < 100, "got {}", times.len());
    }

    #[test]
    fn log_spaced_times_small_horizons() {
        assert_eq!(log_spaced_times(0, 20), vec![0]);
        assert_eq!(log_spaced_times(1, 20), vec![0, 1]);
        let times = log_spaced_times(5, 20);
        assert_eq!(times, vec![0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn split_seed_is_injective_in_practice() {
        let mut seen = std::collections::HashSet::new();
        for base in [0u64, 1, u64::MAX, 0xDEAD_BEEF] {
            for index in 0..100 {
                assert!(seen.insert(split_seed(base, index)), "collision");
            }
        }
        assert_eq!(split_seed(7, 3), split_seed(7, 3));
    }

    #[test]
    fn run_ensemble_is_deterministic_across_thread_counts() {
        let mut config = two_leader_config(300, 16, 99);
        config.parallelism = Some(1);
        let serial = run_ensemble(&config).unwrap();
        config.parallelism = Some(4);
        let threaded = run_ensemble(&config).unwrap();
        config.parallelism = None;
        let default_pool = run_ensemble(&config).unwrap();
        assert_eq!(serial, threaded);
        assert_eq!(serial, default_pool);
    }

    #[test]
    fn run_ensemble_single_trajectory_matches_direct_run() {
        let config = two_leader_config(500, 1, 4242);
        let stats = run_ensemble(&config).unwrap();

        let spectrum = crate::spectral::eigenbasis(&config.graph).unwrap();
        let trajectory = run_trajectory(
            config.graph.clone(),
            &config.u0,
            &config.g0,
            config.n_steps,
            split_seed(config.base_seed, 0),
            &config.sample_times,
        )
        .unwrap();
        for (k, snapshot) in trajectory.snapshots.iter().enumerate() {
            let a = consensus_coordinate(&spectrum.consensus, &snapshot.x).unwrap();
            let z = disagreement(&snapshot.x, a);
            let z_sq: f64 = z.iter().map(|zi| zi * zi).sum();
            assert_eq!(stats.mean_a[k], a, "a mismatch at index {k}");
            assert_eq!(stats.mean_z_sq[k], z_sq, "z² mismatch at index {k}");
            assert_eq!(stats.var_a[k], 0.0);
        }
    }

    #[test]
    fn run_ensemble_consensus_on_single_edge_is_exactly_zero() {
        // Equal opinions on K₂ stay equal forever: both endpoints update
        // together, so z ≡ 0 bit-exactly.
        let config = EnsembleConfig::new(k2(), vec![0.7, 0.7], vec![1.0, 1.0], 400, 8, 5);
        let stats = run_ensemble(&config).unwrap();
        for (&t, &z_sq) in stats.sample_times.iter().zip(&stats.mean_z_sq) {
            assert_eq!(z_sq, 0.0, "nonzero disagreement at t = {t}");
        }
        for &v in &stats.var_a {
            assert!(v >= 0.0);
        }
    }

    #[test]
    fn run_ensemble_rejects_bad_configs() {
        let mut config = two_leader_config(10, 0, 1);
        assert!(matches!(
            run_ensemble(&config),
            Err(EnsembleError::InvalidConfig(_))
        ));
        config.n_trajectories = 2;
        config.sample_times = vec![0, 20];
        assert!(matches!(
            run_ensemble(&config),
            Err(EnsembleError::InvalidConfig(_))
        ));
        config.sample_times = vec![3, 3];
        assert!(matches!(
            run_ensemble(&config),
            Err(EnsembleError::InvalidConfig(_))
        ));
        config.sample_times = vec![0, 10];
        config.u0 = vec![2.0, 0.0, 0.0, 0.0, 0.0];
        assert!(matches!(
            run_ensemble(&config),
            Err(EnsembleError::Dynamics(_))
        ));
    }

    #[test]
    fn run_ensemble_martingale_increments_are_centered() {
        let stats = run_ensemble(&two_leader_config(1_000, 200, 33)).unwrap();
        for k in 0..stats.sample_times.len() {
            let mean = stats.mean_m_increment[k];
            let allowance = 3.0 * stats.se_m_increment[k];
            assert!(
                mean.abs() <= allowance,
                "t = {}: |mean increment| {} > {}",
                stats.sample_times[k],
                mean.abs(),
                allowance
            );
        }
    }

    fn synthetic_stats(times: &[usize], y: impl Fn(f64) -> f64) -> EnsembleStats {
        let k = times.len();
        EnsembleStats {
            sample_times: times.to_vec(),
            mean_z_sq: times.iter().map(|&t| y(t as f64)).collect(),
            mean_a: vec![0.5; k],
            var_a: vec![0.0; k],
            mean_m_increment: vec![0.0; k],
            se_m_increment: vec![0.0; k],
            n_trajectories: 1,
            horizon: HorizonDiagnostics {
                t_quarter: 0,
                t_half: 0,
                t_full: *times.last().unwrap_or(&0),
                var_a_late_increment: 0.0,
                var_a_early_increment: 0.0,
                mean_abs_s_late_increment: 0.0,
                mean_abs_s_early_increment: 0.0,
            },
        }
    }

    #[test]
    fn fit_power_law_round_trips_figure_curve() {
        let times = log_spaced_times(10_000, 20);
        let stats = synthetic_stats(&times, |t| 2.02 * t.powf(-0.371334));
        let fit = fit_power_law(&stats, (100, 10_000)).unwrap();
        assert_abs_diff_eq!(fit.exponent, -0.371334, epsilon = 1e-6);
        assert_abs_diff_eq!(fit.amplitude, 2.02, epsilon = 1e-4);
        assert!(fit.r_squared > 1.0 - 1e-12);
        assert_eq!(fit.window, (100, 10_000));
    }

    #[test]
    fn fit_power_law_constant_and_reciprocal() {
        let times = log_spaced_times(1_000, 20);
        let constant = fit_power_law(&synthetic_stats(&times, |_| 3.5), (1, 1_000)).unwrap();
        assert_abs_diff_eq!(constant.exponent, 0.0, epsilon = 1e-12);
        assert_eq!(constant.r_squared, 1.0);
        assert_relative_eq!(constant.amplitude, 3.5, max_relative = 1e-12);

        let reciprocal = fit_power_law(&synthetic_stats(&times, |t| 0.8 / t), (1, 1_000)).unwrap();
        assert_abs_diff_eq!(reciprocal.exponent, -1.0, epsilon = 1e-9);
    }

    #[test]
    fn fit_power_law_error_cases() {
        let times = log_spaced_times(1_000, 20);
        let stats = synthetic_stats(&times, |t| 1.0 / t);
        assert!(matches!(
            fit_power_law(&stats, (900, 1_000)),
            Err(EnsembleError::InsufficientData { .. })
        ));
        let zeros = synthetic_stats(&times, |_| 0.0);
        assert!(matches!(
            fit_power_law(&zeros, (1, 1_000)),
            Err(EnsembleError::NonpositiveValues { .. })
        ));
    }

    #[test]
    fn hoeffding_check_single_edge_never_deviates() {
        // On a single edge every step grows both weights by one, so the
        // deviation from the mean path is identically zero.
        let report = hoeffding_check(&k2(), 4, 50, 11);
        assert!(report.passed());
        for row in &report.thresholds {
            assert!(row.frequencies.iter().all(|&f| f == 0.0));
        }
        // Bound is monotone decreasing in a.
        assert!(report.thresholds[0].bound > report.thresholds[1].bound);
        assert!(report.thresholds[0].a < report.thresholds[1].a);
    }

    #[test]
    fn hoeffding_check_two_leader_graph() {
        let report = hoeffding_check(&path5(), 2_500, 800, 2_024);
        assert!(
            report.passed(),
            "violations: {:?}",
            report
                .thresholds
                .iter()
                .map(|row| row.violations.clone())
                .collect::<Vec<_>>()
        );
    }

    #[test]
    fn polya_equivalence_couples_bitwise() {
        let report = polya_equivalence(0.5, 1.0, 200, 50, 77).unwrap();
        assert!(report.coupled_identical);
        // 50 samples per side: the KS statistic is noisy but bounded well
        // below a distribution mismatch.
        assert!(report.ks_statistic < 0.3, "KS = {}", report.ks_statistic);
    }

    #[test]
    fn polya_equivalence_absorbing_states() {
        let all_ones = polya_equivalence(1.0, 1.0, 100, 10, 3).unwrap();
        assert_eq!(all_ones.ks_statistic, 0.0);
        let all_zero = polya_equivalence(0.0, 1.0, 100, 10, 4).unwrap();
        assert_eq!(all_zero.ks_statistic, 0.0);
    }

    #[test]
    fn polya_equivalence_rejects_bad_urn() {
        assert!(matches!(
            polya_equivalence(2.0, 1.0, 10, 5, 1),
            Err(EnsembleError::Dynamics(_))
        ));
        assert!(matches!(
            polya_equivalence(0.0, 0.0, 10, 5, 1),
            Err(EnsembleError::Dynamics(_))
        ));
    }

    #[test]
    fn ks_statistic_basics() {
        let a = [0.1, 0.2, 0.3, 0.4];
        assert_eq!(ks_statistic(&a, &a), 0.0);
        let b = [10.0, 11.0, 12.0, 13.0];
        assert_eq!(ks_statistic(&a, &b), 1.0);
        let c = [0.15, 0.25, 0.35, 0.45];
        let gap = ks_statistic(&a, &c);
        assert!(gap > 0.0 && gap <= 0.25 + 1e-15, "gap = {gap}");
    }

    #[test]
    fn convergence_report_requires_three_times() {
        let stats = synthetic_stats(&[0, 10], |_| 1.0);
        assert!(matches!(
            convergence_report(&stats),
            Err(EnsembleError::InsufficientData { .. })
        ));
    }

    #[test]
    fn convergence_report_consensus_zeros_pass() {
        let config = EnsembleConfig::new(k2(), vec![0.3, 0.3], vec![1.0, 1.0], 500, 12, 8);
        let stats = run_ensemble(&config).unwrap();
        let report = convergence_report(&stats).unwrap();
        assert!(report.decay_ok, "0 ≤ 0.55·0 must hold");
        assert!(report.passed(), "report: {report:?}");
    }

    #[test]
    fn convergence_report_two_leader_run_passes() {
        let stats = run_ensemble(&two_leader_config(1_000, 200, 2_718)).unwrap();
        let report = convergence_report(&stats).unwrap();
        assert_eq!(report.t_late, 1_000);
        assert_eq!(report.t_early, 10);
        assert!(
            report.decay_ok,
            "z²({}) = {} vs threshold · z²({}) = {}",
            report.t_late,
            report.z_sq_late,
            report.t_early,
            report.decay_threshold * report.z_sq_early
        );
        assert!(report.cauchy_ok, "report: {report:?}");
        assert!(report.s_shrinking, "report: {report:?}");
    }
}

