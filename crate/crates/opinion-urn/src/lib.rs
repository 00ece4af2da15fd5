//! Coupled Pólya-urn opinion dynamics on graphs.
//!
//! Every vertex of a simple connected graph holds an urn: `u_i` balls for
//! state U out of `g_i` total, giving the opinion `x_i = u_i/g_i ∈ [0, 1]`.
//! At each step a uniformly random edge "converses": the endpoints pool
//! their urns, draw a common outcome with the pooled probability
//! `(u_i+u_j)/(g_i+g_j)`, and both reinforce it. Repeated conversations
//! couple the urns along the graph and drive the opinions toward a common
//! random limit; the disagreement decays like a power of time whose
//! exponent is governed by the spectral gap of a degree-weighted
//! Laplacian-like *influence matrix*.
//!
//! The crate is organized around that storyline:
//!
//! - [`graph`]: validated simple connected graphs plus generators (paths,
//!   cycles, complete graphs, Erdős–Rényi with connectivity retry).
//! - [`dynamics`]: the urn process itself — seeded deterministic
//!   trajectories, per-step records, and the exact discrete stochastic
//!   heat equation `x_{t+1} − x_t = γ_{t+1} ∘ (L_t x_t + W_{t+1})`.
//! - [`linalg`]: the small dense-matrix toolkit used everywhere —
//!   Hadamard row/column scaling, power-iteration operator norms, and a
//!   cyclic Jacobi eigensolver for symmetric matrices.
//! - [`spectral`]: the influence matrix `L`, its eigenbasis with the
//!   consensus pair snapped exactly, the spectral gap, and the pathwise
//!   decomposition `a_t = a₀ + m_t + s_t` of the consensus coordinate.
//! - [`ensemble`]: reproducible Monte Carlo — split seeds, bit-identical
//!   parallel aggregation, power-law fits of `E[‖z_t‖²]`, and the
//!   probabilistic sanity checks (Hoeffding concentration, the classical
//!   single-urn coupling oracle on a single edge).
//!
//! # Determinism contract
//!
//! All randomness flows through ChaCha8 streams seeded explicitly by the
//! caller. A trajectory consumes exactly two logical draws per step (edge
//! index, then Bernoulli uniform); ensemble trajectory `i` runs from
//! `split_seed(base_seed, i)`; aggregation merges per-trajectory summaries
//! sequentially in index order. Repeating any computation with the same
//! inputs — at any thread count — reproduces the same bits.

pub mod dynamics;
pub mod ensemble;
pub mod graph;
pub mod linalg;
pub mod spectral;

pub use dynamics::{
    diffusion_matrix, init_state, lambda_matrix, pooled_opinion, run_trajectory,
    run_trajectory_recorded, she_residual, step, step_in_place, DynamicsError, Snapshot,
    StepRecord, TrajectoryRecord, UrnState, RNG_NAME,
};
pub use ensemble::{
    convergence_report, fit_power_law, hoeffding_check, ks_statistic, log_spaced_times,
    polya_equivalence, run_ensemble, split_seed, ConvergenceReport, EnsembleConfig, EnsembleError,
    EnsembleStats, HoeffdingReport, HorizonDiagnostics, PolyaReport, PowerLawFit,
};
pub use graph::{
    build_graph, complete_graph, cycle_graph, erdos_renyi, path_graph, Graph, GraphError,
};
pub use linalg::{
    hadamard_left, hadamard_right, jacobi_eigs, operator_norm, row_norm_bounds, DenseMatrix,
    EigenDecomposition, LinalgError,
};
pub use spectral::{
    a_k_matrix, consensus_coordinate, decompose_consensus, delta_matrix, disagreement, eigenbasis,
    expected_damped_diffusion, gautschi_bounds, influence_matrix, spectral_gap, symmetrize,
    ConsensusDecomposition, InfluenceSpectrum, SpectralError,
};
