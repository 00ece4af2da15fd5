//! The coupled Pólya urn process on a graph.
//!
//! # Model
//!
//! Every vertex `i` carries a pair of weights `(u_i, g_i)` with
//! `0 ≤ u_i ≤ g_i`; its opinion is the fraction `x_i = u_i / g_i`. One step
//! of the process is a "conversation":
//!
//! ```text
//! 1. draw an edge e = (i, j) uniformly over the edge indices;
//! 2. form the pooled opinion p = (u_i + u_j) / (g_i + g_j)
//!    from the weights BEFORE any increment;
//! 3. increment g_i and g_j by 1;
//! 4. draw ω ~ Bernoulli(p); if ω = 1, increment u_i and u_j by 1.
//! ```
//!
//! Both endpoints reinforce the same drawn state, which couples their urns.
//! On a single edge (two vertices) the per-vertex opinion reproduces the
//! classical single Pólya urn exactly — see
//! [`crate::ensemble::polya_equivalence`].
//!
//! # Stochastic heat equation
//!
//! Writing `γ = 1/g` (entrywise), `L_t` for the realized [diffusion
//! matrix](diffusion_matrix) of the chosen edge and `W_{t+1}` for the
//! centered fluctuation `ω − p` placed at both endpoints, each step
//! satisfies the exact pathwise identity
//!
//! ```text
//! x_{t+1} − x_t = γ_{t+1} ∘ (L_t x_t + W_{t+1})
//! ```
//!
//! — a discrete stochastic heat equation. [`she_residual`] recomputes both
//! sides and returns the defect, which is zero up to float roundoff on
//! every executed step; tests pin it below 1e−12.
//!
//! # Determinism
//!
//! A trajectory consumes exactly two logical draws per step — the edge
//! index, then one uniform real compared against `p` — in that fixed order,
//! from a ChaCha8 stream seeded with a caller-supplied 64-bit seed. Replays
//! with the same `(graph, u0, g0, seed)` are bit-identical.

use std::sync::Arc;

use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::Graph;
use crate::linalg::{hadamard_left, DenseMatrix};

/// Name of the generator driving all trajectories, pinned in output
/// metadata for reproducibility.
pub const RNG_NAME: &str = "ChaCha8 (rand_chacha)";

/// Errors from state construction and the SHE identity check.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DynamicsError {
    /// Some `g0_i` was zero, negative, or not finite.
    #[error("total weight g0[{vertex}] = {value} must be positive and finite")]
    NonpositiveTotalWeight { vertex: usize, value: f64 },
    /// Some `u0_i` fell outside `[0, g0_i]`.
    #[error("opinion weight u0[{vertex}] = {u} is outside [0, g0[{vertex}] = {g}]")]
    OpinionOutOfRange { vertex: usize, u: f64, g: f64 },
    /// An initial vector had the wrong length for the graph.
    #[error("{what} has length {found}, expected {expected} (one per vertex)")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    /// Sample times were unsorted, repeated, or beyond the step horizon.
    #[error("invalid sample times: {0}")]
    InvalidSampleTimes(String),
    /// The `(pre, record, post)` triple does not describe one executed step.
    #[error("states do not describe one executed step: {0}")]
    MismatchedStates(String),
}

/// Per-vertex urn state at a fixed time step.
///
/// Invariants: `g_i > 0` and `0 ≤ u_i ≤ g_i`, hence `x_i = u_i/g_i ∈ [0, 1]`.
/// Each step grows exactly two entries of `g` by 1 and either the same two
/// entries of `u` by 1 or none.
#[derive(Debug, Clone)]
pub struct UrnState {
    t: usize,
    graph: Arc<Graph>,
    u: Vec<f64>,
    g: Vec<f64>,
    x: Vec<f64>,
}

impl UrnState {
    /// Step index (number of conversations executed so far).
    pub fn t(&self) -> usize {
        self.t
    }

    /// The graph the process runs on.
    pub fn graph(&self) -> &Arc<Graph> {
        &self.graph
    }

    /// Per-vertex weight on state U.
    pub fn u(&self) -> &[f64] {
        &self.u
    }

    /// Per-vertex total weight.
    pub fn g(&self) -> &[f64] {
        &self.g
    }

    /// Per-vertex opinions `x_i = u_i / g_i`.
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// Per-vertex damping `γ_i = 1 / g_i`.
    pub fn gamma(&self) -> Vec<f64> {
        self.g.iter().map(|gi| 1.0 / gi).collect()
    }
}

/// One transition `state_{t−1} → state_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    /// Index of the state this transition produced (`pre.t + 1`).
    pub t: usize,
    /// Drawn edge index.
    pub edge: usize,
    /// Pooled probability from pre-increment weights.
    pub p: f64,
    /// Conversation outcome ω (`true` = agreed on state U).
    pub outcome: bool,
    /// Centered fluctuation `ω − p`, in `{1−p, −p}`.
    pub fluctuation: f64,
}

/// State snapshot captured at a sample time.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: usize,
    pub x: Vec<f64>,
    pub g: Vec<f64>,
}

/// A completed seeded run: snapshots at the requested times, plus (when
/// recorded) the full step-by-step transition list.
///
/// Replaying `(graph, u0, g0, seed)` reproduces the snapshots bit-exactly.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub graph: Arc<Graph>,
    pub u0: Vec<f64>,
    pub g0: Vec<f64>,
    pub seed: u64,
    pub snapshots: Vec<Snapshot>,
    /// Full transition list; `None` unless the run recorded steps.
    pub steps: Option<Vec<StepRecord>>,
}

/// Pre-step values captured while executing one transition; internal
/// carrier shared by [`step_in_place`] and the ensemble hot loop (which
/// needs the pre-step endpoint values without cloning the state).
pub(crate) struct RawStep {
    pub edge: usize,
    pub i: usize,
    pub j: usize,
    pub p: f64,
    pub outcome: bool,
    pub x_i_pre: f64,
    pub x_j_pre: f64,
    pub g_i_pre: f64,
    pub g_j_pre: f64,
}

/// Builds the state at `t = 0`.
///
/// # Errors
/// - [`DynamicsError::DimensionMismatch`] if `u0` or `g0` is not one value
///   per vertex;
/// - [`DynamicsError::NonpositiveTotalWeight`] if some `g0_i ≤ 0` (or is
///   not finite);
/// - [`DynamicsError::OpinionOutOfRange`] if some `u0_i ∉ [0, g0_i]`.
pub fn init_state(graph: Arc<Graph>, u0: &[f64], g0: &[f64]) -> Result<UrnState, DynamicsError> {
    let n = graph.n_vertices();
    if u0.len() != n {
        return Err(DynamicsError::DimensionMismatch {
            what: "u0",
            expected: n,
            found: u0.len(),
        });
    }
    if g0.len() != n {
        return Err(DynamicsError::DimensionMismatch {
            what: "g0",
            expected: n,
            found: g0.len(),
        });
    }
    for (i, &gi) in g0.iter().enumerate() {
        if !(gi > 0.0 && gi.is_finite()) {
            return Err(DynamicsError::NonpositiveTotalWeight {
                vertex: i,
                value: gi,
            });
        }
    }
    for (i, &ui) in u0.iter().enumerate() {
        if !(ui >= 0.0 && ui <= g0[i]) {
            return Err(DynamicsError::OpinionOutOfRange {
                vertex: i,
                u: ui,
                g: g0[i],
            });
        }
    }
    let x = u0.iter().zip(g0).map(|(u, g)| u / g).collect();
    Ok(UrnState {
        t: 0,
        graph,
        u: u0.to_vec(),
        g: g0.to_vec(),
        x,
    })
}

/// Pooled opinion `(u_i + u_j) / (g_i + g_j)` of the endpoints of `edge`,
/// always in `[0, 1]`.
///
/// # Panics
/// Panics if `edge` is out of range for the state's graph.
pub fn pooled_opinion(state: &UrnState, edge: usize) -> f64 {
    let (i, j) = state.graph.endpoints(edge);
    (state.u[i] + state.u[j]) / (state.g[i] + state.g[j])
}

/// Executes one conversation, consuming two draws from `rng` (edge index,
/// then the Bernoulli uniform). Internal engine for both the functional and
/// in-place step entry points.
pub(crate) fn step_core<R: Rng + ?Sized>(state: &mut UrnState, rng: &mut R) -> RawStep {
    let n_edges = state.graph.n_edges();
    assert!(n_edges > 0, "cannot step on a graph with no edges");
    let edge = rng.random_range(0..n_edges);
    let (i, j) = state.graph.endpoints(edge);

    let x_i_pre = state.x[i];
    let x_j_pre = state.x[j];
    let g_i_pre = state.g[i];
    let g_j_pre = state.g[j];

    let p = (state.u[i] + state.u[j]) / (g_i_pre + g_j_pre);
    state.g[i] += 1.0;
    state.g[j] += 1.0;
    let outcome = rng.random::<f64>() < p;
    if outcome {
        state.u[i] += 1.0;
        state.u[j] += 1.0;
    }
    state.x[i] = state.u[i] / state.g[i];
    state.x[j] = state.u[j] / state.g[j];
    state.t += 1;

    RawStep {
        edge,
        i,
        j,
        p,
        outcome,
        x_i_pre,
        x_j_pre,
        g_i_pre,
        g_j_pre,
    }
}

impl RawStep {
    pub(crate) fn to_record(&self, t: usize) -> StepRecord {
        StepRecord {
            t,
            edge: self.edge,
            p: self.p,
            outcome: self.outcome,
            fluctuation: (self.outcome as u8 as f64) - self.p,
        }
    }
}

/// Executes one step in place, returning the transition record.
///
/// # Panics
/// Panics if the graph has no edges.
pub fn step_in_place<R: Rng + ?Sized>(state: &mut UrnState, rng: &mut R) -> StepRecord {
    let raw = step_core(state, rng);
    raw.to_record(state.t)
}

/// Executes one step functionally: returns the successor state and record,
/// leaving the input untouched.
///
/// # Panics
/// Panics if the graph has no edges.
pub fn step<R: Rng + ?Sized>(state: &UrnState, rng: &mut R) -> (UrnState, StepRecord) {
    let mut next = state.clone();
    let record = step_in_place(&mut next, rng);
    (next, record)
}

/// Re-applies a recorded transition to `state` (used to replay recorded
/// trajectories without consuming randomness). Bit-identical to the
/// original execution.
pub(crate) fn apply_step_record(state: &mut UrnState, record: &StepRecord) {
    let (i, j) = state.graph.endpoints(record.edge);
    debug_assert_eq!(record.p, pooled_opinion(state, record.edge));
    state.g[i] += 1.0;
    state.g[j] += 1.0;
    if record.outcome {
        state.u[i] += 1.0;
        state.u[j] += 1.0;
    }
    state.x[i] = state.u[i] / state.g[i];
    state.x[j] = state.u[j] / state.g[j];
    state.t += 1;
}

fn validate_sample_times(sample_times: &[usize], n_steps: usize) -> Result<(), DynamicsError> {
    for window in sample_times.windows(2) {
        if window[0] >= window[1] {
            return Err(DynamicsError::InvalidSampleTimes(format!(
                "times must be strictly increasing, got {} then {}",
                window[0], window[1]
            )));
        }
    }
    if let Some(&last) = sample_times.last() {
        if last > n_steps {
            return Err(DynamicsError::InvalidSampleTimes(format!(
                "time {last} exceeds the step horizon {n_steps}"
            )));
        }
    }
    Ok(())
}

fn run_trajectory_impl(
    graph: Arc<Graph>,
    u0: &[f64],
    g0: &[f64],
    n_steps: usize,
    seed: u64,
    sample_times: &[usize],
    record_steps: bool,
) -> Result<TrajectoryRecord, DynamicsError> {
    validate_sample_times(sample_times, n_steps)?;
    let mut state = init_state(graph.clone(), u0, g0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut snapshots = Vec::with_capacity(sample_times.len());
    let mut steps = record_steps.then(|| Vec::with_capacity(n_steps));
    let mut next_sample = sample_times.iter().copied().peekable();

    if next_sample.peek() == Some(&0) {
        next_sample.next();
        snapshots.push(Snapshot {
            t: 0,
            x: state.x.clone(),
            g: state.g.clone(),
        });
    }
    for t in 1..=n_steps {
        let record = step_in_place(&mut state, &mut rng);
        if let Some(list) = steps.as_mut() {
            list.push(record);
        }
        if next_sample.peek() == Some(&t) {
            next_sample.next();
            snapshots.push(Snapshot {
                t,
                x: state.x.clone(),
                g: state.g.clone(),
            });
        }
    }

    Ok(TrajectoryRecord {
        graph,
        u0: u0.to_vec(),
        g0: g0.to_vec(),
        seed,
        snapshots,
        steps,
    })
}

/// Runs a seeded trajectory, capturing snapshots at `sample_times`
/// (a strictly increasing subset of `[0, n_steps]`).
///
/// Deterministic: the same `(graph, u0, g0, n_steps, seed, sample_times)`
/// always produces the same record.
///
/// # Errors
/// - [`DynamicsError::InvalidSampleTimes`] if the times are unsorted or
///   exceed `n_steps`;
/// - any [`init_state`] error.
pub fn run_trajectory(
    graph: Arc<Graph>,
    u0: &[f64],
    g0: &[f64],
    n_steps: usize,
    seed: u64,
    sample_times: &[usize],
) -> Result<TrajectoryRecord, DynamicsError> {
    run_trajectory_impl(graph, u0, g0, n_steps, seed, sample_times, false)
}

/// Like [`run_trajectory`], additionally storing every [`StepRecord`]
/// (required by [`crate::spectral::decompose_consensus`]).
pub fn run_trajectory_recorded(
    graph: Arc<Graph>,
    u0: &[f64],
    g0: &[f64],
    n_steps: usize,
    seed: u64,
    sample_times: &[usize],
) -> Result<TrajectoryRecord, DynamicsError> {
    run_trajectory_impl(graph, u0, g0, n_steps, seed, sample_times, true)
}

/// Realized diffusion matrix `L_t` for the chosen edge, evaluated on the
/// PRE-step state: exactly four nonzero entries,
///
/// ```text
/// L^ij =  g_j/(g_i+g_j)     L^ii = −g_j/(g_i+g_j)
/// L^ji =  g_i/(g_i+g_j)     L^jj = −g_i/(g_i+g_j)
/// ```
///
/// so every row sums to zero.
///
/// # Panics
/// Panics if `edge` is out of range for the state's graph.
pub fn diffusion_matrix(state: &UrnState, edge: usize) -> DenseMatrix {
    let n = state.graph.n_vertices();
    let (i, j) = state.graph.endpoints(edge);
    let total = state.g[i] + state.g[j];
    let wi = state.g[j] / total;
    let wj = state.g[i] / total;
    let mut l = DenseMatrix::zeros(n, n);
    l.set(i, j, wi);
    l.set(i, i, -wi);
    l.set(j, i, wj);
    l.set(j, j, -wj);
    l
}

/// One-step transition matrix `Λ_t = I + γ_{t+1} ∘L L_t`, with `γ_{t+1}`
/// taken from the POST-step state (`g` already incremented). Row-stochastic
/// and entrywise nonnegative.
///
/// # Panics
/// Panics if `lt` is not `n × n` for the state's graph.
pub fn lambda_matrix(post_state: &UrnState, lt: &DenseMatrix) -> DenseMatrix {
    let n = post_state.graph.n_vertices();
    assert!(
        lt.rows() == n && lt.cols() == n,
        "lambda_matrix: L_t must be {n}x{n}"
    );
    let gamma = post_state.gamma();
    let damped = hadamard_left(&gamma, lt).expect("dimensions checked above");
    let mut lambda = damped;
    for i in 0..n {
        lambda.set(i, i, 1.0 + lambda.get(i, i));
    }
    lambda
}

/// Defect of the stochastic heat equation on one executed step:
/// `‖(x_{t+1} − x_t) − γ_{t+1} ∘ (L_t x_t + W_{t+1})‖₂`, where `W_{t+1}`
/// carries the fluctuation `ω − p` at the two chosen endpoints.
///
/// The identity is exact in real arithmetic, so the result is pure float
/// roundoff (below 1e−12 for any realistic weight scale).
///
/// # Errors
/// [`DynamicsError::MismatchedStates`] if the triple is not one executed
/// step: non-consecutive step indices, record index mismatch, different
/// graph sizes, or an out-of-range edge.
pub fn she_residual(
    pre: &UrnState,
    record: &StepRecord,
    post: &UrnState,
) -> Result<f64, DynamicsError> {
    if pre.t + 1 != post.t {
        return Err(DynamicsError::MismatchedStates(format!(
            "pre state has t = {}, post state has t = {}",
            pre.t, post.t
        )));
    }
    if record.t != post.t {
        return Err(DynamicsError::MismatchedStates(format!(
            "record is for t = {}, post state has t = {}",
            record.t, post.t
        )));
    }
    let n = pre.graph.n_vertices();
    if post.graph.n_vertices() != n {
        return Err(DynamicsError::MismatchedStates(format!(
            "graphs differ: {} vs {} vertices",
            n,
            post.graph.n_vertices()
        )));
    }
    if record.edge >= pre.graph.n_edges() {
        return Err(DynamicsError::MismatchedStates(format!(
            "edge index {} out of range ({} edges)",
            record.edge,
            pre.graph.n_edges()
        )));
    }

    let lt = diffusion_matrix(pre, record.edge);
    let lx = lt.apply(&pre.x);
    let (i, j) = pre.graph.endpoints(record.edge);
    let mut w = vec![0.0; n];
    w[i] = record.fluctuation;
    w[j] = record.fluctuation;

    let mut sum_sq = 0.0;
    for k in 0..n {
        let gamma_k = 1.0 / post.g[k];
        let defect = (post.x[k] - pre.x[k]) - gamma_k * (lx[k] + w[k]);
        sum_sq += defect * defect;
    }
    Ok(sum_sq.sqrt())
}
