//! Spectral analysis of the opinion process: the influence matrix, its
//! eigenbasis, the spectral gap, and the consensus/disagreement
//! decomposition of a trajectory.
//!
//! # Mathematical background
//!
//! Averaging the realized diffusion matrix over the uniform edge draw gives
//! the *influence matrix* `L`, a fixed matrix depending only on degrees:
//!
//! ```text
//! L^ij = (d_j / d_i) / (d_i + d_j)    for i ~ j,
//! L^ii = − Σ_{j~i} L^ij,              else 0,
//! ```
//!
//! so every row sums to zero. `L` is similar to the symmetric matrix
//! `S = E L E⁻¹` with `E = diag(d)`, whose entries are `1/(d_i+d_j)` on
//! edges; hence `L` is diagonalizable with real spectrum. For a connected
//! graph, 0 is a simple eigenvalue: its right eigenvector is the all-ones
//! vector (consensus direction) and its left eigenvector, normalized to sum
//! one, is the *consensus vector* `p` with `p_i ∝ d_i²`. Writing
//! `L = P D P⁻¹` with the consensus pair placed first, the coordinate
//! `a_t = p · x_t` evolves as a near-martingale while every other spectral
//! coordinate is damped.
//!
//! The one-step averaged maps `A_k = I + L/k` are row-stochastic; their
//! non-unit eigenvalues `1 + μ_i/k` have modulus at most `1 − λ/k`, where
//! the *spectral gap* `λ = 1 − max_{i>0} |1 + μ_i|` (with a fallback value
//! of 1/2 when that maximum vanishes, as it does on a single edge). The
//! Gautschi-style sandwich
//!
//! ```text
//! ((j−1)/(t+1))^λ ≤ Π_{k=j}^t (1 − λ/k) ≤ (j/t)^λ
//! ```
//!
//! converts products of such damping factors into the power laws that set
//! the observed decay rate of disagreement.
//!
//! # Consensus decomposition
//!
//! Along a recorded trajectory, the consensus coordinate splits exactly as
//! `a_t = a₀ + m_t + s_t`: `m_t` collects the martingale increments (the
//! realized-minus-conditionally-expected drift plus the damped conversation
//! noise) and `s_t` the small systematic part driven by
//! `Δ_j = E_j[γ_{j+1} ∘ L_j] − L/(j+1)`, whose operator norm decays like
//! `j^{−2}` along the expected growth path. [`decompose_consensus`] replays
//! the recorded steps and rebuilds all three series; the identity holds
//! pathwise to float roundoff.

use std::sync::Arc;

use crate::dynamics::{init_state, DynamicsError, TrajectoryRecord, UrnState};
use crate::graph::Graph;
use crate::linalg::{jacobi_eigs, operator_norm, DenseMatrix, LinalgError};

/// Absolute threshold below which an eigenvalue of the symmetrized
/// influence matrix counts as the zero (consensus) eigenvalue.
const ZERO_EIGENVALUE_TOL: f64 = 1e-8;

/// Threshold on `max_{i>0} |1 + μ_i|` under which the gap formula
/// degenerates and the fallback value 1/2 is used. The eigensolver returns
/// the single-edge eigenvalue −1 only up to roundoff, so this cannot be an
/// exact zero test.
const GAP_FALLBACK_TOL: f64 = 1e-12;

/// Errors from spectral construction and trajectory decomposition.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpectralError {
    /// An eigensolver or norm computation failed.
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    /// A replayed trajectory had an invalid initial state.
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    /// Vector/matrix sizes disagree.
    #[error("{what}: expected length {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    /// A degree vector entry was not positive.
    #[error("degree of vertex {vertex} must be positive, got {value}")]
    NonpositiveDegree { vertex: usize, value: f64 },
    /// More than one eigenvalue of the influence matrix was numerically
    /// zero. Connectivity makes 0 simple, so this signals a bug (or a
    /// hand-built disconnected graph smuggled past validation).
    #[error(
        "eigenvalue 0 of the influence matrix is not simple: \
         {count} eigenvalues within {tol:e} of zero"
    )]
    ZeroEigenvalueNotSimple { count: usize, tol: f64 },
    /// The trajectory was run without step recording.
    #[error("trajectory has no step records; rerun it with run_trajectory_recorded")]
    MissingStepRecords,
    /// An argument fell outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    DomainError(String),
}

/// The influence matrix together with its full spectral data.
///
/// Invariants (established by [`eigenbasis`], checked in tests):
/// - every row of `l` sums to 0;
/// - `l · basis = basis · diag(eigenvalues)` and `basis · basis_inv = I`,
///   both to eigensolver accuracy;
/// - `basis` column 0 is exactly all-ones and `eigenvalues[0]` is exactly
///   0; the remaining eigenvalues are sorted in decreasing order;
/// - `consensus` is the first row of `basis_inv`: entrywise positive,
///   proportional to squared degrees, summing to 1, with
///   `consensus · l = 0`;
/// - `gap ∈ (0, 1]`.
#[derive(Debug, Clone)]
pub struct InfluenceSpectrum {
    /// The influence matrix `L`.
    pub l: DenseMatrix,
    /// Eigenbasis `P` of `L` (columns are right eigenvectors; column 0 is
    /// the all-ones consensus direction).
    pub basis: DenseMatrix,
    /// `P⁻¹` (rows are left eigenvectors; row 0 is `consensus`).
    pub basis_inv: DenseMatrix,
    /// Diagonal of `D` in `L = P D P⁻¹`; entry 0 is exactly 0, the rest
    /// decreasing.
    pub eigenvalues: Vec<f64>,
    /// Spectral gap `λ = 1 − max_{i>0} |1 + μ_i|`, with fallback 1/2.
    pub gap: f64,
    /// Consensus left eigenvector `p`, normalized so `p · 1 = 1`.
    pub consensus: Vec<f64>,
}

impl InfluenceSpectrum {
    /// Number of vertices of the underlying graph.
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    /// The diagonal matrix `D`.
    pub fn d_matrix(&self) -> DenseMatrix {
        DenseMatrix::from_diagonal(&self.eigenvalues)
    }
}

/// Consensus/martingale/small decomposition of one recorded trajectory:
/// aligned series over `times = 0..=T` with `a[t] = a₀ + m[t] + s[t]`
/// holding pathwise to roundoff.
#[derive(Debug, Clone)]
pub struct ConsensusDecomposition {
    /// Step indices `0..=T`.
    pub times: Vec<usize>,
    /// Consensus coordinate `a_t = p · x_t`.
    pub a: Vec<f64>,
    /// Accumulated martingale part `m_t` (`m_0 = 0`).
    pub m: Vec<f64>,
    /// Accumulated small part `s_t` (`s_0 = 0`).
    pub s: Vec<f64>,
    /// Operator norms `‖Δ_t‖` of the deviation matrices along the path.
    pub delta_norms: Vec<f64>,
}

/// Builds the influence matrix `L` of a graph:
/// `L^ij = (d_j/d_i)/(d_i+d_j)` for `i ~ j`, diagonal minus the row sum.
pub fn influence_matrix(graph: &Graph) -> DenseMatrix {
    let n = graph.n_vertices();
    let d = graph.degrees_f64();
    let mut l = DenseMatrix::zeros(n, n);
    for &(i, j) in graph.edges() {
        l.set(i, j, (d[j] / d[i]) / (d[i] + d[j]));
        l.set(j, i, (d[i] / d[j]) / (d[i] + d[j]));
    }
    for i in 0..n {
        let off_diagonal_sum: f64 = graph
            .incident_edges(i)
            .iter()
            .map(|&e| {
                let (a, b) = graph.endpoints(e);
                let j = if a == i { b } else { a };
                l.get(i, j)
            })
            .sum();
        l.set(i, i, -off_diagonal_sum);
    }
    l
}

/// Conjugates `L` by `E = diag(degrees)`: `S = E L E⁻¹`, which is symmetric
/// with `S^ij = 1/(d_i+d_j)` on edges.
///
/// # Errors
/// - [`SpectralError::DimensionMismatch`] if `degrees` does not match `l`;
/// - [`SpectralError::NonpositiveDegree`] if some degree is ≤ 0.
pub fn symmetrize(l: &DenseMatrix, degrees: &[f64]) -> Result<DenseMatrix, SpectralError> {
    let n = l.rows();
    if l.cols() != n || degrees.len() != n {
        return Err(SpectralError::DimensionMismatch {
            what: "symmetrize degrees",
            expected: n,
            found: degrees.len(),
        });
    }
    for (i, &d) in degrees.iter().enumerate() {
        if !(d > 0.0) {
            return Err(SpectralError::NonpositiveDegree {
                vertex: i,
                value: d,
            });
        }
    }
    let mut s = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            s.set(i, j, degrees[i] * l.get(i, j) / degrees[j]);
        }
    }
    Ok(s)
}

fn gap_from_eigenvalues(eigenvalues: &[f64]) -> f64 {
    let max_nonunit = eigenvalues
        .iter()
        .skip(1)
        .map(|mu| (1.0 + mu).abs())
        .fold(0.0_f64, f64::max);
    if max_nonunit <= GAP_FALLBACK_TOL {
        // All non-consensus eigenvalues of I + L vanish (single-edge
        // graph): the gap formula would give 1, which overstates the
        // damping of products I + L/k; use 1/2.
        0.5
    } else {
        1.0 - max_nonunit
    }
}

/// Diagonalizes the influence matrix of `graph`.
///
/// The eigenproblem is solved on the symmetrized `S = E L E⁻¹` (so the
/// spectrum is provably real) and mapped back through `E⁻¹`. The consensus
/// pair is snapped exactly: column 0 of `basis` is all-ones,
/// `eigenvalues[0] = 0`, and row 0 of `basis_inv` is the normalized
/// consensus vector. Remaining eigenvalues are sorted in decreasing order.
///
/// # Errors
/// - [`SpectralError::Linalg`] if the eigensolver fails to converge;
/// - [`SpectralError::ZeroEigenvalueNotSimple`] if the zero eigenvalue is
///   not numerically simple (impossible for a validated connected graph).
pub fn eigenbasis(graph: &Graph) -> Result<InfluenceSpectrum, SpectralError> {
    let n = graph.n_vertices();
    let d = graph.degrees_f64();
    let l = influence_matrix(graph);
    let s = symmetrize(&l, &d)?;
    let eig = jacobi_eigs(&s)?;

    // Locate the (simple) zero eigenvalue.
    let near_zero: Vec<usize> = (0..n)
        .filter(|&k| eig.eigenvalues[k].abs() < ZERO_EIGENVALUE_TOL)
        .collect();
    if near_zero.len() != 1 {
        return Err(SpectralError::ZeroEigenvalueNotSimple {
            count: near_zero.len(),
            tol: ZERO_EIGENVALUE_TOL,
        });
    }
    let k0 = near_zero[0];

    // Column order: consensus first, then by eigenvalue decreasing.
    let mut rest: Vec<usize> = (0..n).filter(|&k| k != k0).collect();
    rest.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let order: Vec<usize> = std::iter::once(k0).chain(rest).collect();

    // The null vector of S is ∝ d, so the consensus row p ∝ v₀ ∘ d ∝ d².
    // Fix its sign positive and normalize to p · 1 = 1 exactly.
    let sign = {
        let projection: f64 = (0..n).map(|i| eig.vectors.get(i, k0) * d[i]).sum();
        if projection >= 0.0 {
            1.0
        } else {
            -1.0
        }
    };
    let mut consensus: Vec<f64> = (0..n).map(|i| sign * eig.vectors.get(i, k0) * d[i]).collect();
    let total: f64 = consensus.iter().sum();
    for entry in consensus.iter_mut() {
        *entry /= total;
    }
    // Entrywise division leaves the sum within an ulp of 1 but not
    // necessarily equal to it; nudge the largest entry until the sum is
    // exactly 1 (the deficit 1 − s is exact by Sterbenz, so this settles
    // in one or two rounds).
    for _ in 0..8 {
        let s: f64 = consensus.iter().sum();
        if s == 1.0 {
            break;
        }
        let imax = (0..n)
            .max_by(|&a, &b| consensus[a].total_cmp(&consensus[b]))
            .expect("nonempty");
        consensus[imax] += 1.0 - s;
    }

    let mut eigenvalues = Vec::with_capacity(n);
    let mut basis = DenseMatrix::zeros(n, n);
    let mut basis_inv = DenseMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        if col == 0 {
            eigenvalues.push(0.0);
            for i in 0..n {
                basis.set(i, 0, 1.0);
                basis_inv.set(0, i, consensus[i]);
            }
        } else {
            eigenvalues.push(eig.eigenvalues[k]);
            // Right eigenvector of L: E⁻¹ v; matching left eigenvector
            // (row of P⁻¹): v ∘ d. Orthonormality of the v's makes these
            // mutually dual without further rescaling.
            for i in 0..n {
                basis.set(i, col, eig.vectors.get(i, k) / d[i]);
                basis_inv.set(col, i, eig.vectors.get(i, k) * d[i]);
            }
        }
    }

    let gap = gap_from_eigenvalues(&eigenvalues);
    Ok(InfluenceSpectrum {
        l,
        basis,
        basis_inv,
        eigenvalues,
        gap,
        consensus,
    })
}

/// Spectral gap `λ = 1 − max_{i>0} |1 + μ_i|` of a computed spectrum, with
/// the single-edge fallback `λ = 1/2`. Always in `(0, 1]`.
pub fn spectral_gap(spectrum: &InfluenceSpectrum) -> f64 {
    gap_from_eigenvalues(&spectrum.eigenvalues)
}

/// The averaged one-step map `A_k = I + L/k`; row-stochastic with
/// nonnegative entries for every `k ≥ 1`.
///
/// # Panics
/// Panics if `k = 0` or `l` is not square.
pub fn a_k_matrix(l: &DenseMatrix, k: usize) -> DenseMatrix {
    assert!(k >= 1, "a_k_matrix requires k >= 1");
    let n = l.rows();
    assert_eq!(l.cols(), n, "a_k_matrix requires a square matrix");
    let mut a = l.scale(1.0 / k as f64);
    for i in 0..n {
        a.set(i, i, 1.0 + a.get(i, i));
    }
    a
}

/// Conditional expectation `E_t[γ_{t+1} ∘ L_t]` of the damped diffusion
/// matrix given the current state: entry `(a, b)` for `a ~ b` is
/// `(1/(|E|(g_a+1))) · g_b/(g_a+g_b)` (the edge `(a,b)` is drawn with
/// probability `1/|E|`, and then `g_a` has already grown by one when the
/// damping applies); diagonal minus the row sum, zero elsewhere.
pub fn expected_damped_diffusion(state: &UrnState) -> DenseMatrix {
    let graph = state.graph();
    let n = graph.n_vertices();
    let m = graph.n_edges() as f64;
    let g = state.g();
    let mut expected = DenseMatrix::zeros(n, n);
    for &(a, b) in graph.edges() {
        let pooled = g[a] + g[b];
        expected.set(a, b, g[b] / (m * (g[a] + 1.0) * pooled));
        expected.set(b, a, g[a] / (m * (g[b] + 1.0) * pooled));
    }
    for i in 0..n {
        let off_diagonal_sum: f64 = graph
            .incident_edges(i)
            .iter()
            .map(|&e| {
                let (a, b) = graph.endpoints(e);
                let j = if a == i { b } else { a };
                expected.get(i, j)
            })
            .sum();
        expected.set(i, i, -off_diagonal_sum);
    }
    expected
}

/// Deviation matrix `Δ_j = E_j[γ_{j+1} ∘ L_j] − L/(j+1)` of the state's
/// graph, using the weights in `state` and the explicit step index `j`.
pub fn delta_matrix(state: &UrnState, j: usize) -> DenseMatrix {
    let l = influence_matrix(state.graph());
    let expected = expected_damped_diffusion(state);
    expected
        .sub(&l.scale(1.0 / (j as f64 + 1.0)))
        .expect("both matrices are n×n for the state's graph")
}

/// Consensus coordinate `a = p · x`.
///
/// # Errors
/// [`SpectralError::DimensionMismatch`] if the lengths differ.
pub fn consensus_coordinate(p: &[f64], x: &[f64]) -> Result<f64, SpectralError> {
    if p.len() != x.len() {
        return Err(SpectralError::DimensionMismatch {
            what: "consensus_coordinate x",
            expected: p.len(),
            found: x.len(),
        });
    }
    Ok(p.iter().zip(x).map(|(pi, xi)| pi * xi).sum())
}

/// Disagreement vector `z = x − a·1`, the component of `x` transverse to
/// consensus in the `p`-pairing (`p · z = 0` up to roundoff).
pub fn disagreement(x: &[f64], a: f64) -> Vec<f64> {
    x.iter().map(|xi| xi - a).collect()
}

/// Replays a recorded trajectory and rebuilds the exact decomposition
/// `a_t = a₀ + m_t + s_t` together with the deviation norms `‖Δ_t‖`.
///
/// Per step `j → j+1` the martingale increment is
/// `p · ((γ_{j+1} ∘ L_j − E_j[γ_{j+1} ∘ L_j]) x_j) + p · (γ_{j+1} ∘ W_{j+1})`
/// and the small increment is
/// `p · (E_j[γ_{j+1} ∘ L_j] x_j) − p · (L x_j)/(j+1)`; their sum telescopes
/// to the realized change of `a` because the heat-equation identity is
/// pathwise exact.
///
/// # Errors
/// - [`SpectralError::MissingStepRecords`] if the trajectory was run
///   without step recording;
/// - [`SpectralError::DimensionMismatch`] if `spectrum` belongs to a graph
///   of a different size;
/// - [`SpectralError::Dynamics`] if the trajectory's initial state is
///   invalid;
/// - [`SpectralError::Linalg`] if a deviation-norm computation fails.
pub fn decompose_consensus(
    trajectory: &TrajectoryRecord,
    spectrum: &InfluenceSpectrum,
) -> Result<ConsensusDecomposition, SpectralError> {
    let steps = trajectory
        .steps
        .as_ref()
        .ok_or(SpectralError::MissingStepRecords)?;
    let graph: &Arc<Graph> = &trajectory.graph;
    let n = graph.n_vertices();
    if spectrum.n() != n {
        return Err(SpectralError::DimensionMismatch {
            what: "spectrum for trajectory graph",
            expected: n,
            found: spectrum.n(),
        });
    }
    let p = &spectrum.consensus;
    let mut state = init_state(graph.clone(), &trajectory.u0, &trajectory.g0)?;

    let horizon = steps.len();
    let mut times = Vec::with_capacity(horizon + 1);
    let mut a_series = Vec::with_capacity(horizon + 1);
    let mut m_series = Vec::with_capacity(horizon + 1);
    let mut s_series = Vec::with_capacity(horizon + 1);
    let mut delta_norms = Vec::with_capacity(horizon + 1);
    let mut m_acc = 0.0;
    let mut s_acc = 0.0;

    for (j, record) in steps.iter().enumerate() {
        times.push(j);
        a_series.push(consensus_coordinate(p, state.x())?);
        m_series.push(m_acc);
        s_series.push(s_acc);
        delta_norms.push(operator_norm(&delta_matrix(&state, j))?);

        // Pre-step quantities.
        let expected = expected_damped_diffusion(&state);
        let expected_term: f64 = {
            let ex = expected.apply(state.x());
            p.iter().zip(&ex).map(|(pi, ei)| pi * ei).sum()
        };
        let influence_term: f64 = {
            let lx = spectrum.l.apply(state.x());
            p.iter().zip(&lx).map(|(pi, li)| pi * li).sum()
        };
        let (i, k) = graph.endpoints(record.edge);
        let weight_i = state.g()[k] / (state.g()[i] + state.g()[k]);
        let weight_k = state.g()[i] / (state.g()[i] + state.g()[k]);
        let diffused_i = weight_i * (state.x()[k] - state.x()[i]);
        let diffused_k = weight_k * (state.x()[i] - state.x()[k]);

        crate::dynamics::apply_step_record(&mut state, record);

        // Post-step damping at the two touched vertices.
        let gamma_i = 1.0 / state.g()[i];
        let gamma_k = 1.0 / state.g()[k];
        let realized_term = p[i] * gamma_i * diffused_i + p[k] * gamma_k * diffused_k;
        let noise_term = record.fluctuation * (p[i] * gamma_i + p[k] * gamma_k);

        m_acc += (realized_term - expected_term) + noise_term;
        s_acc += expected_term - influence_term / (j as f64 + 1.0);
    }

    times.push(horizon);
    a_series.push(consensus_coordinate(p, state.x())?);
    m_series.push(m_acc);
    s_series.push(s_acc);
    delta_norms.push(operator_norm(&delta_matrix(&state, horizon))?);

    Ok(ConsensusDecomposition {
        times,
        a: a_series,
        m: m_series,
        s: s_series,
        delta_norms,
    })
}

/// Gautschi-style sandwich for the damping product: returns
/// `(lower, product, upper)` with
/// `lower = ((j−1)/(t+1))^lam ≤ Π_{k=j}^t (1 − lam/k) ≤ (j/t)^lam = upper`.
///
/// # Errors
/// [`SpectralError::DomainError`] unless `1 ≤ j ≤ t` and `lam ∈ (0, 1)`.
pub fn gautschi_bounds(j: usize, t: usize, lam: f64) -> Result<(f64, f64, f64), SpectralError> {
    if j < 1 {
        return Err(SpectralError::DomainError(
            "gautschi_bounds requires j >= 1".into(),
        ));
    }
    if t < j {
        return Err(SpectralError::DomainError(format!(
            "gautschi_bounds requires t >= j, got j = {j}, t = {t}"
        )));
    }
    if !(lam > 0.0 && lam < 1.0) {
        return Err(SpectralError::DomainError(format!(
            "gautschi_bounds requires lam in (0, 1), got {lam}"
        )));
    }
    let mut product = 1.0;
    for k in j..=t {
        product *= 1.0 - lam / k as f64;
    }
    let lower = (((j - 1) as f64) / ((t + 1) as f64)).powf(lam);
    let upper = ((j as f64) / (t as f64)).powf(lam);
    Ok((lower, product, upper))
}
