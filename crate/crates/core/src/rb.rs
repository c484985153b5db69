//! The reduced space: an m-orthonormal basis of detailed vectors together
//! with the reduced affine blocks, extended incrementally under an
//! `ε_proj` guard.

use nalgebra::{DMatrix, DVector};

use crate::assemble::AffineOperator;
use crate::eigensolve::{self, EigenSolution};
use crate::error::{Error, Result};
use crate::parameter::{ParameterDomain, ParameterPoint};

/// Where a basis column came from.
#[derive(Debug, Clone)]
pub enum ColumnSource {
    PodInit { rank: usize },
    ReferenceSeed { output: usize },
    Greedy { mu: ParameterPoint, output: usize, step: usize },
}

/// Orthonormality drift beyond this triggers a full re-orthonormalization.
const DRIFT_LIMIT: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct ReducedBasis {
    /// Detailed coordinates of the basis, 𝒩×N, m-orthonormal columns.
    columns: DMatrix<f64>,
    /// `ZᵀA_qZ` for every affine block, kept in sync with the columns.
    reduced_blocks: Vec<DMatrix<f64>>,
    provenance: Vec<ColumnSource>,
}

impl ReducedBasis {
    pub fn empty(op: &AffineOperator) -> Self {
        ReducedBasis {
            columns: DMatrix::zeros(op.n_dofs(), 0),
            reduced_blocks: vec![DMatrix::zeros(0, 0); op.n_blocks()],
            provenance: Vec::new(),
        }
    }

    /// Builds a basis from already m-orthonormal columns (one clean-up pass of
    /// modified Gram-Schmidt is applied) and assembles the reduced blocks.
    pub fn from_columns(
        op: &AffineOperator,
        columns: DMatrix<f64>,
        provenance: Vec<ColumnSource>,
    ) -> Result<Self> {
        assert_eq!(columns.ncols(), provenance.len());
        let mut basis = ReducedBasis {
            columns,
            reduced_blocks: Vec::new(),
            provenance,
        };
        basis.orthonormalize_columns(op)?;
        basis.rebuild_blocks(op);
        Ok(basis)
    }

    pub fn dim(&self) -> usize {
        self.columns.ncols()
    }

    pub fn detailed_dim(&self) -> usize {
        self.columns.nrows()
    }

    pub fn columns(&self) -> &DMatrix<f64> {
        &self.columns
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.columns.column(j).iter().copied().collect()
    }

    pub fn reduced_blocks(&self) -> &[DMatrix<f64>] {
        &self.reduced_blocks
    }

    pub fn provenance(&self) -> &[ColumnSource] {
        &self.provenance
    }

    /// First `n` columns as a basis of their own; reduced blocks are the
    /// leading principal submatrices, so truncation is exact.
    pub fn truncated(&self, n: usize) -> Self {
        assert!(n <= self.dim());
        ReducedBasis {
            columns: self.columns.columns(0, n).into_owned(),
            reduced_blocks: self
                .reduced_blocks
                .iter()
                .map(|b| b.view((0, 0), (n, n)).into_owned())
                .collect(),
            provenance: self.provenance[..n].to_vec(),
        }
    }

    /// m-orthogonal projection coefficients `ZᵀMv` and the residual norm
    /// `‖v − Π_N v‖_m`.
    pub fn project(&self, op: &AffineOperator, v: &[f64]) -> (DVector<f64>, f64) {
        let mv = op.mass().matvec(v);
        let mv = DVector::from_vec(mv);
        let coeffs = self.columns.transpose() * &mv;
        let mut residual = DVector::from_column_slice(v);
        residual -= &self.columns * &coeffs;
        let norm_sq = op.mass().quadratic_form(residual.as_slice()).max(0.0);
        (coeffs, norm_sq.sqrt())
    }

    /// Lift reduced coefficients back to detailed coordinates, `Z·x`.
    pub fn lift(&self, coeffs: &[f64]) -> Vec<f64> {
        let x = DVector::from_column_slice(coeffs);
        (&self.columns * x).iter().copied().collect()
    }

    /// `Σ_q coeffs[q] · ZᵀA_qZ`.
    pub fn assemble_reduced(&self, coeffs: &[f64]) -> DMatrix<f64> {
        assert_eq!(coeffs.len(), self.reduced_blocks.len());
        let n = self.dim();
        let mut acc = DMatrix::zeros(n, n);
        for (c, b) in coeffs.iter().zip(&self.reduced_blocks) {
            acc += *c * b;
        }
        acc
    }

    /// ε_proj-guarded m-orthonormal extension. Returns whether the candidate
    /// contributed a new direction; reduced blocks get one bordered
    /// row/column instead of a rebuild.
    pub fn extend(
        &mut self,
        op: &AffineOperator,
        candidate: &[f64],
        proj_tol: f64,
        source: ColumnSource,
    ) -> Result<bool> {
        let (coeffs, _) = self.project(op, candidate);
        let mut residual = DVector::from_column_slice(candidate);
        if self.dim() > 0 {
            residual -= &self.columns * &coeffs;
            // Second projection pass keeps the drift at roundoff level.
            let (coeffs2, _) = self.project(op, residual.as_slice());
            residual -= &self.columns * &coeffs2;
        }
        let norm = op.mass().quadratic_form(residual.as_slice()).max(0.0).sqrt();
        if norm < proj_tol {
            return Ok(false);
        }
        residual /= norm;

        let n_old = self.dim();
        self.columns = DMatrix::from_fn(self.detailed_dim(), n_old + 1, |r, c| {
            if c < n_old {
                self.columns[(r, c)]
            } else {
                residual[r]
            }
        });
        self.provenance.push(source);

        for (q, block) in self.reduced_blocks.iter_mut().enumerate() {
            let a_new = op.block(q).matvec(residual.as_slice());
            let a_new = DVector::from_vec(a_new);
            let border = self.columns.columns(0, n_old).transpose() * &a_new;
            let corner = residual.dot(&a_new);
            let mut grown = DMatrix::zeros(n_old + 1, n_old + 1);
            grown.view_mut((0, 0), (n_old, n_old)).copy_from(block);
            for i in 0..n_old {
                grown[(i, n_old)] = border[i];
                grown[(n_old, i)] = border[i];
            }
            grown[(n_old, n_old)] = corner;
            *block = grown;
        }

        // Drift check on the new column; a full re-orthonormalization is the
        // recovery path.
        let mz = op.mass().matvec(residual.as_slice());
        let drift = (0..n_old)
            .map(|j| {
                self.columns
                    .column(j)
                    .iter()
                    .zip(&mz)
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
                    .abs()
            })
            .fold(0.0_f64, f64::max);
        if drift > DRIFT_LIMIT {
            self.orthonormalize_columns(op)?;
            self.rebuild_blocks(op);
        }
        Ok(true)
    }

    /// Reduced eigenproblem at μ: assemble `Σ Θ_q(μ) A_q^red` (the reduced
    /// mass is the identity by construction) and solve densely. Cost depends
    /// on N and Q only.
    pub fn solve_at(
        &self,
        domain: &ParameterDomain,
        mu: &ParameterPoint,
        count: usize,
    ) -> Result<ReducedEigenSolution> {
        let theta = domain.affine_coefficients(mu)?;
        self.solve_with_coefficients(&theta, count)
    }

    pub fn solve_with_coefficients(
        &self,
        coeffs: &[f64],
        count: usize,
    ) -> Result<ReducedEigenSolution> {
        if count > self.dim() {
            return Err(Error::CountExceedsDimension {
                requested: count,
                dim: self.dim(),
            });
        }
        let a_red = self.assemble_reduced(coeffs);
        let sol = eigensolve::solve_reduced_identity(&a_red, count)?;
        Ok(ReducedEigenSolution {
            values: sol.values,
            coefficients: sol.vectors,
        })
    }

    /// `max |ZᵀMZ − I|`.
    pub fn orthonormality_defect(&self, op: &AffineOperator) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for j in 0..n {
            let col: Vec<f64> = self.columns.column(j).iter().copied().collect();
            let mcol = op.mass().matvec(&col);
            for i in 0..=j {
                let d: f64 = self
                    .columns
                    .column(i)
                    .iter()
                    .zip(&mcol)
                    .map(|(a, b)| a * b)
                    .sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((d - target).abs());
            }
        }
        worst
    }

    fn orthonormalize_columns(&mut self, op: &AffineOperator) -> Result<()> {
        let n = self.dim();
        let mut m_cols: Vec<Vec<f64>> = Vec::with_capacity(n);
        for j in 0..n {
            let mut v = self.column(j);
            for _pass in 0..2 {
                for (i, mi) in m_cols.iter().enumerate() {
                    let c: f64 = v.iter().zip(mi).map(|(a, b)| a * b).sum();
                    for (vk, bik) in v.iter_mut().zip(self.columns.column(i).iter()) {
                        *vk -= c * bik;
                    }
                }
            }
            let mut mv = op.mass().matvec(&v);
            let norm: f64 = v
                .iter()
                .zip(&mv)
                .map(|(a, b)| a * b)
                .sum::<f64>()
                .max(0.0)
                .sqrt();
            if norm < 1e-12 {
                return Err(Error::RankDeficient {
                    requested: n,
                    rank: j,
                });
            }
            for (vk, mvk) in v.iter_mut().zip(mv.iter_mut()) {
                *vk /= norm;
                *mvk /= norm;
            }
            self.columns.set_column(j, &DVector::from_vec(v));
            m_cols.push(mv);
        }
        Ok(())
    }

    fn rebuild_blocks(&mut self, op: &AffineOperator) {
        let n = self.dim();
        let mut blocks = Vec::with_capacity(op.n_blocks());
        for q in 0..op.n_blocks() {
            let mut az = DMatrix::zeros(self.detailed_dim(), n);
            for j in 0..n {
                let col = op.block(q).matvec(&self.column(j));
                az.set_column(j, &DVector::from_vec(col));
            }
            let reduced = self.columns.transpose() * az;
            blocks.push(0.5 * (&reduced + reduced.transpose()));
        }
        self.reduced_blocks = blocks;
    }
}

/// Reduced eigenpairs in basis coordinates; detailed representations are
/// recovered on demand through [`ReducedBasis::lift`].
#[derive(Debug, Clone)]
pub struct ReducedEigenSolution {
    pub values: Vec<f64>,
    /// N×k matrix of coefficient vectors, orthonormal since the reduced mass
    /// matrix is the identity.
    pub coefficients: DMatrix<f64>,
}

impl ReducedEigenSolution {
    pub fn count(&self) -> usize {
        self.values.len()
    }

    pub fn coefficient_vector(&self, i: usize) -> Vec<f64> {
        self.coefficients.column(i).iter().copied().collect()
    }

    pub fn lift(&self, basis: &ReducedBasis, i: usize) -> Vec<f64> {
        basis.lift(&self.coefficient_vector(i))
    }

    pub fn as_eigen_solution(&self) -> EigenSolution {
        EigenSolution {
            values: self.values.clone(),
            vectors: self.coefficients.clone(),
            gram: eigensolve::Gram::Identity,
        }
    }
}
