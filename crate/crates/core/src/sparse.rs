//! Sparse symmetric matrices on shared CSR patterns, plus a direct SPD solver.
//!
//! All affine blocks of one operator live on a single shared pattern so that
//! forming a parameter combination reduces to an axpy over the value arrays.
//! Factorization is delegated to faer's sparse Cholesky.

use std::sync::Arc;

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Sparsity structure (square, CSR) shared between matrices.
#[derive(Debug, PartialEq)]
pub struct CsrPattern {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
}

impl CsrPattern {
    /// Union pattern of several triplet lists over an `n`-dimensional space.
    pub fn union_of(n: usize, triplet_lists: &[&[(usize, usize, f64)]]) -> Arc<Self> {
        let mut keys: Vec<(usize, usize)> = triplet_lists
            .iter()
            .flat_map(|list| list.iter().map(|&(r, c, _)| (r, c)))
            .collect();
        keys.sort_unstable();
        keys.dedup();

        let mut row_ptr = vec![0usize; n + 1];
        for &(r, _) in &keys {
            row_ptr[r + 1] += 1;
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        let cols = keys.into_iter().map(|(_, c)| c).collect();
        Arc::new(CsrPattern { n, row_ptr, cols })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    fn position(&self, row: usize, col: usize) -> Option<usize> {
        let lo = self.row_ptr[row];
        let hi = self.row_ptr[row + 1];
        self.cols[lo..hi].binary_search(&col).ok().map(|k| lo + k)
    }
}

/// Square sparse matrix with values laid out on a (possibly shared) pattern.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pattern: Arc<CsrPattern>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let pattern = CsrPattern::union_of(n, &[triplets]);
        Self::on_pattern(pattern, triplets)
    }

    /// Accumulates `triplets` onto `pattern`; every key must exist in the pattern.
    pub fn on_pattern(pattern: Arc<CsrPattern>, triplets: &[(usize, usize, f64)]) -> Self {
        let mut vals = vec![0.0; pattern.nnz()];
        for &(r, c, v) in triplets {
            let k = pattern
                .position(r, c)
                .expect("triplet key missing from shared pattern");
            vals[k] += v;
        }
        CsrMatrix { pattern, vals }
    }

    /// `Σ coeffs[i] · mats[i]`, all on the same shared pattern.
    pub fn linear_combination(coeffs: &[f64], mats: &[&CsrMatrix]) -> Self {
        assert_eq!(coeffs.len(), mats.len());
        assert!(!mats.is_empty());
        let pattern = mats[0].pattern.clone();
        for m in mats {
            assert!(
                Arc::ptr_eq(&pattern, &m.pattern),
                "linear combination requires one shared pattern"
            );
        }
        let mut vals = vec![0.0; pattern.nnz()];
        for (c, m) in coeffs.iter().zip(mats) {
            for (dst, src) in vals.iter_mut().zip(&m.vals) {
                *dst += c * src;
            }
        }
        CsrMatrix { pattern, vals }
    }

    pub fn n(&self) -> usize {
        self.pattern.n
    }

    pub fn pattern(&self) -> &Arc<CsrPattern> {
        &self.pattern
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n()];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        let p = &self.pattern;
        debug_assert_eq!(x.len(), p.n);
        debug_assert_eq!(y.len(), p.n);
        for r in 0..p.n {
            let mut acc = 0.0;
            for k in p.row_ptr[r]..p.row_ptr[r + 1] {
                acc += self.vals[k] * x[p.cols[k]];
            }
            y[r] = acc;
        }
    }

    /// `xᵀ A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let p = &self.pattern;
        let mut acc = 0.0;
        for r in 0..p.n {
            let mut row = 0.0;
            for k in p.row_ptr[r]..p.row_ptr[r + 1] {
                row += self.vals[k] * y[p.cols[k]];
            }
            acc += x[r] * row;
        }
        acc
    }

    /// `xᵀ A x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.bilinear(x, x)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let p = &self.pattern;
        let mut dense = DMatrix::zeros(p.n, p.n);
        for r in 0..p.n {
            for k in p.row_ptr[r]..p.row_ptr[r + 1] {
                dense[(r, p.cols[k])] += self.vals[k];
            }
        }
        dense
    }

    /// `max |A − Aᵀ|`, zero for matrices assembled symmetrically.
    pub fn max_abs_asymmetry(&self) -> f64 {
        let p = &self.pattern;
        let mut worst: f64 = 0.0;
        for r in 0..p.n {
            for k in p.row_ptr[r]..p.row_ptr[r + 1] {
                let c = p.cols[k];
                let transposed = p.position(c, r).map(|j| self.vals[j]).unwrap_or(0.0);
                worst = worst.max((self.vals[k] - transposed).abs());
            }
        }
        worst
    }

    fn to_faer(&self) -> SparseColMat<usize, f64> {
        let p = &self.pattern;
        let mut triplets = Vec::with_capacity(p.nnz());
        for r in 0..p.n {
            for k in p.row_ptr[r]..p.row_ptr[r + 1] {
                triplets.push(Triplet::new(p.cols[k], r, self.vals[k]));
            }
        }
        SparseColMat::try_new_from_triplets(p.n, p.n, &triplets)
            .expect("CSR pattern yields a valid sparse matrix")
    }
}

/// Sparse Cholesky factorization of a symmetric positive definite matrix.
///
/// The factorization is kept alive so repeated back-substitutions (Lanczos
/// iterations, Riesz representer solves) reuse it.
pub struct SpdSolver {
    llt: faer::sparse::linalg::solvers::Llt<usize, f64>,
    n: usize,
}

impl std::fmt::Debug for SpdSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpdSolver").field("n", &self.n).finish()
    }
}

impl SpdSolver {
    pub fn new(matrix: &CsrMatrix) -> Result<Self> {
        let llt = matrix
            .to_faer()
            .sp_cholesky(faer::Side::Lower)
            .map_err(|e| Error::NotSpd(format!("sparse Cholesky failed: {e:?}")))?;
        Ok(SpdSolver { llt, n: matrix.n() })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn solve_vec(&self, b: &[f64]) -> Vec<f64> {
        debug_assert_eq!(b.len(), self.n);
        let rhs = faer::Mat::<f64>::from_fn(self.n, 1, |i, _| b[i]);
        let x = self.llt.solve(&rhs);
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }

    /// Solves for every column of `b` in one batched call.
    pub fn solve_mat(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        debug_assert_eq!(b.nrows(), self.n);
        let rhs = faer::Mat::<f64>::from_fn(b.nrows(), b.ncols(), |i, j| b[(i, j)]);
        let x = self.llt.solve(&rhs);
        DMatrix::from_fn(b.nrows(), b.ncols(), |i, j| x[(i, j)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_1d(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, &t)
    }

    #[test]
    fn matvec_matches_dense() {
        let a = laplace_1d(7);
        let x: Vec<f64> = (0..7).map(|i| (i as f64).sin() + 1.0).collect();
        let y = a.matvec(&x);
        let dense = a.to_dense() * nalgebra::DVector::from_vec(x.clone());
        for i in 0..7 {
            assert!((y[i] - dense[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn shared_pattern_combination() {
        let t1 = vec![(0, 0, 1.0), (1, 1, 2.0)];
        let t2 = vec![(0, 1, 3.0), (1, 0, 3.0), (1, 1, 1.0)];
        let pattern = CsrPattern::union_of(2, &[&t1, &t2]);
        let a = CsrMatrix::on_pattern(pattern.clone(), &t1);
        let b = CsrMatrix::on_pattern(pattern, &t2);
        let c = CsrMatrix::linear_combination(&[2.0, -1.0], &[&a, &b]);
        let d = c.to_dense();
        assert_eq!(d[(0, 0)], 2.0);
        assert_eq!(d[(0, 1)], -3.0);
        assert_eq!(d[(1, 1)], 3.0);
    }

    #[test]
    fn spd_solver_roundtrip() {
        let a = laplace_1d(50);
        let solver = SpdSolver::new(&a).unwrap();
        let x_true: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).cos()).collect();
        let b = a.matvec(&x_true);
        let x = solver.solve_vec(&b);
        for i in 0..50 {
            assert!((x[i] - x_true[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn indefinite_matrix_rejected() {
        let t = vec![(0, 0, 1.0), (1, 1, -1.0)];
        let a = CsrMatrix::from_triplets(2, &t);
        assert!(matches!(SpdSolver::new(&a), Err(Error::NotSpd(_))));
    }
}
