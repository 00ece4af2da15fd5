//! Dense vector/matrix kernel: Hadamard products, operator norms, row-norm
//! bounds, and a cyclic Jacobi eigensolver for symmetric matrices.
//!
//! # Mathematical background
//!
//! The opinion process works with two vector-weighted matrix products:
//!
//! ```text
//! left-Hadamard:   (b ∘L A)^ij = b^i · A^ij      (scales rows)
//! right-Hadamard:  (A ∘R b)^ij = A^ij · b^j      (scales columns)
//! ```
//!
//! These interact with ordinary matrix multiplication through the mixed
//! associativity identity `A₁ (bᵀ ∘L A₂) = (A₁ ∘R b) A₂`, and the operator
//! norm is submultiplicative with respect to them: `‖A ∘ b‖ ≤ ‖A‖·‖b‖`.
//!
//! The operator norm (largest singular value) is computed from the
//! symmetric eigendecomposition of the Gram matrix `AᵀA`; every matrix in
//! this crate is small and dense, so the exact cubic solve is preferred
//! over iterative estimates (which stall when the top singular values are
//! nearly degenerate, e.g. for short products of row-stochastic factors).
//! For square matrices, the norm is sandwiched by the row norms:
//!
//! ```text
//! max_i ‖row_i(A)‖₂  ≤  ‖A‖  ≤  √n · max_i ‖row_i(A)‖₂
//! ```
//!
//! Eigendecomposition of symmetric matrices uses classical cyclic Jacobi
//! rotations: provably convergent, and at the ≤ few-hundred-vertex scale of
//! these experiments there is no need for anything faster.

/// Convergence parameters for the numerical kernels.
///
/// Power iteration targets a relative accuracy of 1e−8 in the norm; the
/// internal Rayleigh-quotient stopping test is tighter so that slowly
/// converging spectra (clustered singular values) do not stop early.
/// Jacobi sweeps allowed before reporting non-convergence.
const JACOBI_MAX_SWEEPS: usize = 100;
/// Off-diagonal Frobenius mass threshold, relative to ‖S‖_F.
const JACOBI_OFF_DIAGONAL_TOL: f64 = 1e-13;
/// Maximum entrywise asymmetry accepted by [`jacobi_eigs`].
const SYMMETRY_TOL: f64 = 1e-10;

/// Errors from the dense kernel.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    /// Operand shapes do not line up.
    #[error("dimension mismatch in {op}: {details}")]
    DimensionMismatch { op: &'static str, details: String },
    /// A matrix handed to the symmetric eigensolver was not symmetric.
    #[error("matrix is not symmetric: max |S − Sᵀ| entry {max_asymmetry:.3e} exceeds {limit:.1e}")]
    NotSymmetric { max_asymmetry: f64, limit: f64 },
    /// An iterative kernel ran out of budget.
    #[error("{algorithm} failed to converge within {budget} {unit}")]
    NonConvergence {
        algorithm: &'static str,
        budget: usize,
        unit: &'static str,
    },
}

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl DenseMatrix {
    /// All-zeros matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            entries: vec![0.0; rows * cols],
        }
    }

    /// Identity matrix.
    pub fn identity(n: usize) -> Self {
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Builds from nested rows.
    ///
    /// # Errors
    /// [`LinalgError::DimensionMismatch`] if the rows are ragged.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.len());
        let mut entries = Vec::with_capacity(n_rows * n_cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_cols {
                return Err(LinalgError::DimensionMismatch {
                    op: "from_rows",
                    details: format!("row {i} has {} entries, expected {n_cols}", row.len()),
                });
            }
            entries.extend_from_slice(row);
        }
        Ok(DenseMatrix {
            rows: n_rows,
            cols: n_cols,
            entries,
        })
    }

    /// Diagonal matrix from a slice.
    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = DenseMatrix::zeros(diag.len(), diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Entry at `(i, j)`.
    ///
    /// # Panics
    /// Panics if the index is out of range.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.entries[i * self.cols + j]
    }

    /// Sets the entry at `(i, j)`.
    ///
    /// # Panics
    /// Panics if the index is out of range.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.entries[i * self.cols + j] = value;
    }

    /// Row `i` as a slice.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    /// Flat row-major entries.
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Matrix–vector product `A x`.
    ///
    /// # Panics
    /// Panics if `x.len() != cols`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "apply: vector length must equal cols");
        let mut out = vec![0.0; self.rows];
        for i in 0..self.rows {
            let row = self.row(i);
            let mut acc = 0.0;
            for j in 0..self.cols {
                acc += row[j] * x[j];
            }
            out[i] = acc;
        }
        out
    }

    /// Vector–matrix product `xᵀ A` (returns a row vector).
    ///
    /// # Panics
    /// Panics if `x.len() != rows`.
    pub fn apply_transposed(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(
            x.len(),
            self.rows,
            "apply_transposed: vector length must equal rows"
        );
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let row = self.row(i);
            let xi = x[i];
            for j in 0..self.cols {
                out[j] += xi * row[j];
            }
        }
        out
    }

    /// Matrix product `self · other`.
    ///
    /// # Errors
    /// [`LinalgError::DimensionMismatch`] if inner dimensions differ.
    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch {
                op: "matmul",
                details: format!(
                    "{}x{} · {}x{}",
                    self.rows, self.cols, other.rows, other.cols
                ),
            });
        }
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self.get(i, k);
                if aik == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.entries[i * other.cols + j] += aik * other.get(k, j);
                }
            }
        }
        Ok(out)
    }

    /// Transpose.
    pub fn transpose(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    /// Entrywise difference `self − other`.
    ///
    /// # Errors
    /// [`LinalgError::DimensionMismatch`] if shapes differ.
    pub fn sub(&self, other: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(LinalgError::DimensionMismatch {
                op: "sub",
                details: format!(
                    "{}x{} vs {}x{}",
                    self.rows, self.cols, other.rows, other.cols
                ),
            });
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a - b)
            .collect();
        Ok(DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            entries,
        })
    }

    /// Entrywise scaling `c · self`.
    pub fn scale(&self, c: f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|v| c * v).collect(),
        }
    }

    /// Frobenius norm.
    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Result of a symmetric eigendecomposition: `S = V diag(λ) Vᵀ`.
///
/// Eigenvalues are sorted ascending; `vectors` holds the matching
/// orthonormal eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub vectors: DenseMatrix,
}

/// Left-Hadamard product `(b ∘L A)^ij = b^i A^ij` (row scaling).
///
/// # Errors
/// [`LinalgError::DimensionMismatch`] if `b.len() != A.rows()`.
pub fn hadamard_left(b: &[f64], a: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
    if b.len() != a.rows() {
        return Err(LinalgError::DimensionMismatch {
            op: "hadamard_left",
            details: format!("vector length {} vs {} rows", b.len(), a.rows()),
        });
    }
    let mut out = a.clone();
    for i in 0..a.rows() {
        let bi = b[i];
        for j in 0..a.cols() {
            out.entries[i * a.cols() + j] *= bi;
        }
    }
    Ok(out)
}

/// Right-Hadamard product `(A ∘R b)^ij = A^ij b^j` (column scaling).
///
/// # Errors
/// [`LinalgError::DimensionMismatch`] if `b.len() != A.cols()`.
pub fn hadamard_right(a: &DenseMatrix, b: &[f64]) -> Result<DenseMatrix, LinalgError> {
    if b.len() != a.cols() {
        return Err(LinalgError::DimensionMismatch {
            op: "hadamard_right",
            details: format!("vector length {} vs {} cols", b.len(), a.cols()),
        });
    }
    let mut out = a.clone();
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            out.entries[i * a.cols() + j] *= b[j];
        }
    }
    Ok(out)
}

fn euclidean_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Operator norm `‖A‖` (largest singular value), computed as the square
/// root of the top eigenvalue of the Gram matrix `AᵀA`.
///
/// The Gram matrix is assembled exactly symmetric (upper triangle mirrored)
/// and handed to [`jacobi_eigs`]. Unlike iterative estimates, the cyclic
/// Jacobi solve does not stall when the leading singular values are nearly
/// degenerate — which happens routinely here, e.g. for short products of
/// row-stochastic transition factors, where most rows are still identity
/// rows. All matrices in this crate are small, so the cubic cost is
/// irrelevant.
///
/// # Errors
/// [`LinalgError::NonConvergence`] propagated from [`jacobi_eigs`].
pub fn operator_norm(a: &DenseMatrix) -> Result<f64, LinalgError> {
    if a.rows() == 0 || a.cols() == 0 {
        return Ok(0.0);
    }
    let n = a.cols();
    let mut gram = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let mut dot = 0.0;
            for r in 0..a.rows() {
                dot += a.get(r, i) * a.get(r, j);
            }
            gram.set(i, j, dot);
            gram.set(j, i, dot);
        }
    }
    let eig = jacobi_eigs(&gram)?;
    // Roundoff can push the smallest Gram eigenvalues slightly negative;
    // the top one is clamped at zero before the square root.
    let top = eig.eigenvalues.iter().fold(0.0f64, |m, &l| m.max(l));
    Ok(top.sqrt())
}

/// Maximum Euclidean row norm and operator norm of a square matrix,
/// satisfying the sandwich `max_row ≤ ‖A‖ ≤ √n · max_row`.
///
/// The returned operator norm is clamped from below by the row bound, so
/// the sandwich holds exactly even when eigensolver roundoff would nudge
/// the norm a last-place digit under the largest row.
///
/// # Errors
/// [`LinalgError::DimensionMismatch`] if the matrix is not square;
/// [`LinalgError::NonConvergence`] propagated from [`operator_norm`].
pub fn row_norm_bounds(a: &DenseMatrix) -> Result<(f64, f64), LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::DimensionMismatch {
            op: "row_norm_bounds",
            details: format!("matrix is {}x{}, expected square", a.rows(), a.cols()),
        });
    }
    let max_row_norm = (0..a.rows())
        .map(|i| euclidean_norm(a.row(i)))
        .fold(0.0, f64::max);
    let op_norm = operator_norm(a)?.max(max_row_norm);
    Ok((max_row_norm, op_norm))
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Sweeps over all `(p, q)` pairs, rotating each off-diagonal entry to zero,
/// until the off-diagonal Frobenius mass falls below `1e−13 · ‖S‖_F`.
/// Eigenvalues are returned sorted ascending with matching orthonormal
/// eigenvector columns.
///
/// # Errors
/// - [`LinalgError::DimensionMismatch`] if `S` is not square;
/// - [`LinalgError::NotSymmetric`] if `max |S − Sᵀ| ≥ 1e−10`;
/// - [`LinalgError::NonConvergence`] if 100 sweeps do not suffice.
pub fn jacobi_eigs(s: &DenseMatrix) -> Result<EigenDecomposition, LinalgError> {
    if !s.is_square() {
        return Err(LinalgError::DimensionMismatch {
            op: "jacobi_eigs",
            details: format!("matrix is {}x{}, expected square", s.rows(), s.cols()),
        });
    }
    let n = s.rows();
    let mut max_asymmetry = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            max_asymmetry = max_asymmetry.max((s.get(i, j) - s.get(j, i)).abs());
        }
    }
    if max_asymmetry >= SYMMETRY_TOL {
        return Err(LinalgError::NotSymmetric {
            max_asymmetry,
            limit: SYMMETRY_TOL,
        });
    }

    let mut a = s.clone();
    let mut v = DenseMatrix::identity(n);
    let target = JACOBI_OFF_DIAGONAL_TOL * s.frobenius_norm();

    let off_diagonal_mass = |m: &DenseMatrix| -> f64 {
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let e = m.get(i, j);
                    acc += e * e;
                }
            }
        }
        acc.sqrt()
    };

    let mut converged = off_diagonal_mass(&a) <= target;
    for _sweep in 0..JACOBI_MAX_SWEEPS {
        if converged {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                // Rotation angle zeroing A[p][q]: with θ = (A_qq − A_pp)/(2 A_pq),
                // t = tan is the smaller-magnitude root of t² + 2θt − 1 = 0.
                let theta = (a.get(q, q) - a.get(p, p)) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    // θ² would overflow; the smaller root degenerates to 1/(2θ).
                    0.5 / theta
                } else if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    1.0 / (theta - (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * c;

                // A ← Gᵀ A G with G the Givens rotation in the (p, q) plane.
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - sn * aqk);
                    a.set(q, k, sn * apk + c * aqk);
                }
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - sn * akq);
                    a.set(k, q, sn * akp + c * akq);
                }
                // Accumulate eigenvectors: V ← V G.
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - sn * vkq);
                    v.set(k, q, sn * vkp + c * vkq);
                }
            }
        }
        converged = off_diagonal_mass(&a) <= target;
    }
    if !converged {
        return Err(LinalgError::NonConvergence {
            algorithm: "cyclic Jacobi",
            budget: JACOBI_MAX_SWEEPS,
            unit: "sweeps",
        });
    }

    // Sort eigenpairs ascending by eigenvalue.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a.get(i, i)
            .partial_cmp(&a.get(j, j))
            .expect("eigenvalues are finite")
    });
    let eigenvalues: Vec<f64> = order.iter().map(|&k| a.get(k, k)).collect();
    let mut vectors = DenseMatrix::zeros(n, n);
    for (new_col, &old_col) in order.iter().enumerate() {
        for row in 0..n {
            vectors.set(row, new_col, v.get(row, old_col));
        }
    }
    Ok(EigenDecomposition {
        eigenvalues,
        vectors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, rng.random_range(-1.0..1.0));
            }
        }
        m
    }

    fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = rng.random_range(-1.0..1.0);
                m.set(i, j, v);
                m.set(j, i, v);
            }
        }
        m
    }

    #[test]
    fn hadamard_left_with_ones_is_identity_map() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let out = hadamard_left(&[1.0, 1.0], &a).unwrap();
        assert_eq!(out, a);
    }

    #[test]
    fn hadamard_left_scales_rows() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let out = hadamard_left(&[2.0, 3.0], &a).unwrap();
        let expected = DenseMatrix::from_rows(&[vec![2.0, 2.0], vec![3.0, 3.0]]).unwrap();
        assert_eq!(out, expected);
    }

    #[test]
    fn hadamard_left_rejects_mismatch() {
        let a = DenseMatrix::zeros(2, 2);
        assert!(matches!(
            hadamard_left(&[1.0, 2.0, 3.0], &a),
            Err(LinalgError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn hadamard_right_with_ones_is_identity_map() {
        let a = DenseMatrix::from_rows(&[vec![5.0, -2.0], vec![0.5, 4.0]]).unwrap();
        assert_eq!(hadamard_right(&a, &[1.0, 1.0]).unwrap(), a);
    }

    #[test]
    fn hadamard_right_scales_columns() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let out = hadamard_right(&a, &[10.0, 100.0]).unwrap();
        let expected = DenseMatrix::from_rows(&[vec![10.0, 200.0], vec![30.0, 400.0]]).unwrap();
        assert_eq!(out, expected);
    }

    #[test]
    fn mixed_associativity_on_random_triples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..32 {
            let a1 = random_matrix(&mut rng, 3, 3);
            let a2 = random_matrix(&mut rng, 3, 3);
            let b: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
            let lhs = a1.matmul(&hadamard_left(&b, &a2).unwrap()).unwrap();
            let rhs = hadamard_right(&a1, &b).unwrap().matmul(&a2).unwrap();
            assert!(lhs.sub(&rhs).unwrap().max_abs() < 1e-12);
        }
    }

    #[test]
    fn operator_norm_of_identity() {
        let norm = operator_norm(&DenseMatrix::identity(4)).unwrap();
        assert_relative_eq!(norm, 1.0, max_relative = 1e-10);
    }

    #[test]
    fn operator_norm_of_diagonal() {
        let a = DenseMatrix::from_diagonal(&[3.0, -5.0]);
        let norm = operator_norm(&a).unwrap();
        assert_relative_eq!(norm, 5.0, max_relative = 1e-10);
    }

    #[test]
    fn operator_norm_of_zero_matrix() {
        assert_eq!(operator_norm(&DenseMatrix::zeros(3, 3)).unwrap(), 0.0);
    }

    #[test]
    fn operator_norm_matches_eigensolve_oracle() {
        // Independent oracle: ‖A‖² is the top eigenvalue of AᵀA, computed by
        // the Jacobi solver rather than power iteration.
        let mut rng = ChaCha8Rng::seed_from_u64(4242);
        for _ in 0..20 {
            let a = random_matrix(&mut rng, 4, 4);
            let gram = a.transpose().matmul(&a).unwrap();
            let eig = jacobi_eigs(&gram).unwrap();
            let oracle = eig
                .eigenvalues
                .iter()
                .fold(0.0f64, |m, &l| m.max(l))
                .sqrt();
            let norm = operator_norm(&a).unwrap();
            assert!(
                (norm - oracle).abs() <= 1e-7 * oracle.max(1.0),
                "norm {norm} vs oracle {oracle}"
            );
        }
    }

    #[test]
    fn submultiplicative_with_right_hadamard() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..64 {
            let n = rng.random_range(2..6);
            let a = random_matrix(&mut rng, n, n);
            let b: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let lhs = operator_norm(&hadamard_right(&a, &b).unwrap()).unwrap();
            let rhs = operator_norm(&a).unwrap() * euclidean_norm(&b);
            assert!(lhs <= rhs + 1e-12, "submultiplicativity: {lhs} > {rhs}");
        }
    }

    #[test]
    fn row_norm_bounds_identity() {
        let (max_row, op) = row_norm_bounds(&DenseMatrix::identity(3)).unwrap();
        assert_relative_eq!(max_row, 1.0, max_relative = 1e-12);
        assert_relative_eq!(op, 1.0, max_relative = 1e-10);
    }

    #[test]
    fn row_norm_bounds_single_row_matrix() {
        // With a single nonzero row r, ‖A‖ = ‖r‖ exactly.
        let mut a = DenseMatrix::zeros(3, 3);
        a.set(1, 0, 3.0);
        a.set(1, 2, 4.0);
        let (max_row, op) = row_norm_bounds(&a).unwrap();
        assert_relative_eq!(max_row, 5.0, max_relative = 1e-12);
        assert_relative_eq!(op, 5.0, max_relative = 1e-8);
    }

    #[test]
    fn row_norm_bounds_rejects_non_square() {
        assert!(matches!(
            row_norm_bounds(&DenseMatrix::zeros(2, 3)),
            Err(LinalgError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn jacobi_on_diagonal_matrix() {
        let eig = jacobi_eigs(&DenseMatrix::from_diagonal(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(eig.eigenvalues, vec![1.0, 2.0, 3.0]);
        // Eigenvectors are signed standard basis vectors.
        for (col, expected_row) in [(0, 1), (1, 2), (2, 0)] {
            for row in 0..3 {
                let v = eig.vectors.get(row, col);
                if row == expected_row {
                    assert_relative_eq!(v.abs(), 1.0, max_relative = 1e-12);
                } else {
                    assert!(v.abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn jacobi_on_known_two_by_two() {
        let s = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let eig = jacobi_eigs(&s).unwrap();
        assert_relative_eq!(eig.eigenvalues[0], -1.0, max_relative = 1e-12);
        assert_relative_eq!(eig.eigenvalues[1], 1.0, max_relative = 1e-12);
    }

    #[test]
    fn jacobi_reconstructs_random_symmetric_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for n in [2usize, 3, 5, 8, 13] {
            let s = random_symmetric(&mut rng, n);
            let eig = jacobi_eigs(&s).unwrap();
            let lambda = DenseMatrix::from_diagonal(&eig.eigenvalues);
            let reconstructed = eig
                .vectors
                .matmul(&lambda)
                .unwrap()
                .matmul(&eig.vectors.transpose())
                .unwrap();
            let err = s.sub(&reconstructed).unwrap().frobenius_norm();
            assert!(
                err <= 1e-9 * s.frobenius_norm().max(1e-30),
                "reconstruction error {err} for n = {n}"
            );
            // Orthonormality: VᵀV = I.
            let gram = eig.vectors.transpose().matmul(&eig.vectors).unwrap();
            assert!(gram.sub(&DenseMatrix::identity(n)).unwrap().max_abs() < 1e-10);
            // Per-pair residual ‖S v − λ v‖ ≤ 1e−10 ‖S‖.
            let scale = operator_norm(&s).unwrap().max(1e-30);
            for (k, &l) in eig.eigenvalues.iter().enumerate() {
                let vk: Vec<f64> = (0..n).map(|r| eig.vectors.get(r, k)).collect();
                let sv = s.apply(&vk);
                let residual: f64 = sv
                    .iter()
                    .zip(&vk)
                    .map(|(svi, vi)| (svi - l * vi) * (svi - l * vi))
                    .sum::<f64>()
                    .sqrt();
                assert!(residual <= 1e-10 * scale, "pair {k} residual {residual}");
            }
        }
    }

    #[test]
    fn jacobi_rejects_asymmetric_input() {
        let s = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![0.5, 0.0]]).unwrap();
        assert!(matches!(
            jacobi_eigs(&s),
            Err(LinalgError::NotSymmetric { .. })
        ));
    }

    #[test]
    fn jacobi_handles_zero_matrix() {
        let eig = jacobi_eigs(&DenseMatrix::zeros(3, 3)).unwrap();
        assert_eq!(eig.eigenvalues, vec![0.0, 0.0, 0.0]);
    }

    proptest! {
        /// Round-trip: scaling rows by b then by 1/b restores the matrix
        /// (up to roundoff) whenever b has no zero entries.
        #[test]
        fn hadamard_left_round_trip(
            entries in proptest::collection::vec(-100.0f64..100.0, 9),
            b in proptest::collection::vec(0.5f64..4.0, 3),
        ) {
            let a = DenseMatrix {
                rows: 3,
                cols: 3,
                entries,
            };
            let inv: Vec<f64> = b.iter().map(|v| 1.0 / v).collect();
            let back = hadamard_left(&inv, &hadamard_left(&b, &a).unwrap()).unwrap();
            prop_assert!(back.sub(&a).unwrap().max_abs() <= 1e-12 * a.max_abs().max(1.0));
        }

        /// The row-norm sandwich holds for arbitrary square matrices.
        #[test]
        fn row_norm_sandwich(entries in proptest::collection::vec(-10.0f64..10.0, 25)) {
            let a = DenseMatrix {
                rows: 5,
                cols: 5,
                entries,
            };
            let (max_row, op) = row_norm_bounds(&a).unwrap();
            prop_assert!(max_row <= op + 1e-12);
            prop_assert!(op <= 5f64.sqrt() * max_row + 1e-12);
        }
    }
}
