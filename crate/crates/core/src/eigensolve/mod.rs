//! Generalized symmetric eigensolvers for `A x = λ M x`.
//!
//! The detailed path factorizes `A` once (sparse Cholesky) and runs Lanczos
//! with full reorthogonalization on `A⁻¹M` in the M-inner product, so the
//! smallest eigenvalues of the pencil are the dominant ones of the iterated
//! operator. The reduced path is dense. Both return m-orthonormal vectors
//! with ascending eigenvalues.

mod dense;

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::assemble::AffineOperator;
use crate::error::{Error, Result};
use crate::sparse::{CsrMatrix, SpdSolver};

pub use dense::{full_sorted, smallest_sorted};

/// Inner product in which eigenvectors are orthonormal.
#[derive(Debug, Clone)]
pub enum Gram {
    Identity,
    Sparse(Arc<CsrMatrix>),
    Dense(DMatrix<f64>),
}

impl Gram {
    pub fn dot(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            Gram::Identity => x.iter().zip(y).map(|(a, b)| a * b).sum(),
            Gram::Sparse(m) => m.bilinear(x, y),
            Gram::Dense(m) => {
                let mut acc = 0.0;
                for (j, &yj) in y.iter().enumerate() {
                    let mut col = 0.0;
                    for (i, &xi) in x.iter().enumerate() {
                        col += xi * m[(i, j)];
                    }
                    acc += col * yj;
                }
                acc
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Relative residual `‖Au − λMu‖₂ / (λ‖Mu‖₂)` demanded of every pair.
    pub tol: f64,
    /// Seed of the deterministic start vector.
    pub seed: u64,
    /// Cap on the Krylov subspace dimension.
    pub max_subspace: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-10,
            seed: 0x5eed,
            max_subspace: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigenSolution {
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// Columns are the corresponding m-orthonormal eigenvectors.
    pub vectors: DMatrix<f64>,
    /// Inner product used for normalization.
    pub gram: Gram,
}

impl EigenSolution {
    pub fn count(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, i: usize) -> Vec<f64> {
        self.vectors.column(i).iter().copied().collect()
    }

    /// `max |VᵀMV − I|`, a direct check of m-orthonormality.
    pub fn orthonormality_defect(&self) -> f64 {
        let k = self.count();
        let cols: Vec<Vec<f64>> = (0..k).map(|i| self.vector(i)).collect();
        let mut worst: f64 = 0.0;
        for i in 0..k {
            for j in 0..=i {
                let d = self.gram.dot(&cols[i], &cols[j]);
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((d - target).abs());
            }
        }
        worst
    }
}

/// Index group of one distinct eigenvalue: positions `first..first+size`
/// (0-based) in the ascending eigenvalue list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpectrumGroup {
    pub first: usize,
    pub size: usize,
}

impl SpectrumGroup {
    pub fn indices(&self) -> std::ops::Range<usize> {
        self.first..self.first + self.size
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices().contains(&i)
    }

    pub fn last(&self) -> usize {
        self.first + self.size - 1
    }
}

#[derive(Debug, Clone)]
pub struct SpectrumStructure {
    pub groups: Vec<SpectrumGroup>,
}

impl SpectrumStructure {
    pub fn group_of(&self, i: usize) -> &SpectrumGroup {
        self.groups
            .iter()
            .find(|g| g.contains(i))
            .expect("index outside clustered spectrum")
    }

    pub fn n_values(&self) -> usize {
        self.groups.iter().map(|g| g.size).sum()
    }
}

/// Transitive clustering of an ascending eigenvalue list: consecutive values
/// belong to one group when their relative gap `|λ_j − λ_i|/λ_j` stays below
/// `tol`.
pub fn cluster_spectrum(values: &[f64], tol: f64) -> SpectrumStructure {
    let mut groups = Vec::new();
    let mut first = 0usize;
    for j in 1..=values.len() {
        let split = j == values.len() || {
            let gap = (values[j] - values[j - 1]).abs() / values[j].abs().max(f64::MIN_POSITIVE);
            gap >= tol
        };
        if split {
            groups.push(SpectrumGroup {
                first,
                size: j - first,
            });
            first = j;
        }
    }
    SpectrumStructure { groups }
}

/// Modified Gram-Schmidt in the given inner product, applied within each
/// cluster to stabilize the basis-dependence of multiple eigenvectors.
fn orthonormalize_clusters(values: &[f64], vectors: &mut DMatrix<f64>, gram: &Gram) {
    let structure = cluster_spectrum(values, 1e-8);
    for group in &structure.groups {
        if group.size < 2 {
            continue;
        }
        for i in group.indices() {
            let mut v = vectors.column(i).iter().copied().collect::<Vec<f64>>();
            for j in group.first..i {
                let w: Vec<f64> = vectors.column(j).iter().copied().collect();
                let c = gram.dot(&v, &w);
                for (vi, wi) in v.iter_mut().zip(&w) {
                    *vi -= c * wi;
                }
            }
            let norm = gram.dot(&v, &v).max(0.0).sqrt();
            if norm > 0.0 {
                for (r, vi) in v.iter().enumerate() {
                    vectors[(r, i)] = vi / norm;
                }
            }
        }
    }
}

/// Smallest `count` eigenpairs of `Σ_q coeffs[q] A_q  x = λ M x`.
pub fn solve_detailed(
    op: &AffineOperator,
    coeffs: &[f64],
    count: usize,
    opts: &SolverOptions,
) -> Result<EigenSolution> {
    if coeffs.iter().any(|&t| t < 0.0) {
        return Err(Error::Parameter(
            "affine coefficients must be non-negative".into(),
        ));
    }
    solve_pencil(&op.combine(coeffs), op.mass_arc(), count, opts)
}

/// Smallest `count` eigenpairs of the sparse SPD pencil `A x = λ M x` by
/// shift-invert Lanczos with full reorthogonalization in the M-inner product.
pub fn solve_pencil(
    a: &CsrMatrix,
    mass: Arc<CsrMatrix>,
    count: usize,
    opts: &SolverOptions,
) -> Result<EigenSolution> {
    let n = a.n();
    if count > n {
        return Err(Error::CountExceedsDimension {
            requested: count,
            dim: n,
        });
    }
    let solver = SpdSolver::new(a)?;
    let m: &CsrMatrix = &mass;

    let max_subspace = opts
        .max_subspace
        .unwrap_or(8 * count + 200)
        .min(n)
        .max(count);
    let mut rng = ChaCha12Rng::seed_from_u64(opts.seed);

    // M-orthonormal Lanczos basis and its M-images.
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut m_basis: Vec<Vec<f64>> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();

    let random_start = |rng: &mut ChaCha12Rng| -> Vec<f64> {
        (0..n).map(|_| rng.random::<f64>() - 0.5).collect()
    };
    let m_orthogonalize = |v: &mut Vec<f64>, basis: &[Vec<f64>], m_basis: &[Vec<f64>]| {
        for _ in 0..2 {
            for (b, mb) in basis.iter().zip(m_basis) {
                let c: f64 = v.iter().zip(mb).map(|(x, y)| x * y).sum();
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= c * bi;
                }
            }
        }
    };

    let mut v = random_start(&mut rng);
    let mut mv = m.matvec(&v);
    let norm = dot(&v, &mv).max(0.0).sqrt();
    for (vi, mvi) in v.iter_mut().zip(mv.iter_mut()) {
        *vi /= norm;
        *mvi /= norm;
    }
    basis.push(v);
    m_basis.push(mv);

    loop {
        let j = basis.len() - 1;
        let mut w = solver.solve_vec(&m_basis[j]);
        let a_j = dot(&w, &m_basis[j]);
        for (wi, vi) in w.iter_mut().zip(&basis[j]) {
            *wi -= a_j * vi;
        }
        if j > 0 {
            let b_prev = beta[j - 1];
            for (wi, vi) in w.iter_mut().zip(&basis[j - 1]) {
                *wi -= b_prev * vi;
            }
        }
        m_orthogonalize(&mut w, &basis, &m_basis);
        alpha.push(a_j);

        let mut mw = m.matvec(&w);
        let mut b_j = dot(&w, &mw).max(0.0).sqrt();
        if b_j < 1e-13 {
            // Invariant subspace reached; continue with a fresh direction
            // decoupled from the current block (zero coupling in T).
            let mut fresh = random_start(&mut rng);
            m_orthogonalize(&mut fresh, &basis, &m_basis);
            let mfresh = m.matvec(&fresh);
            let fresh_norm = dot(&fresh, &mfresh).max(0.0).sqrt();
            if fresh_norm < 1e-13 || basis.len() >= n {
                // Space exhausted: the Krylov space is the whole space.
                beta.push(0.0);
                return match extract_ritz(a, m, &basis, &alpha, &beta, count, opts.tol) {
                    Ok((values, vectors)) => finalize(mass.clone(), values, vectors),
                    Err(achieved) => Err(Error::NonConvergence {
                        achieved,
                        required: opts.tol,
                    }),
                };
            }
            w = fresh;
            mw = mfresh;
            b_j = 0.0;
            for (wi, mwi) in w.iter_mut().zip(mw.iter_mut()) {
                *wi /= fresh_norm;
                *mwi /= fresh_norm;
            }
        } else {
            for (wi, mwi) in w.iter_mut().zip(mw.iter_mut()) {
                *wi /= b_j;
                *mwi /= b_j;
            }
        }
        beta.push(b_j);
        basis.push(w);
        m_basis.push(mw);

        let dim = basis.len();
        let at_cap = dim >= max_subspace || dim >= n;
        if dim >= count && (dim % 10 == 0 || at_cap) {
            match extract_ritz(a, m, &basis, &alpha, &beta, count, opts.tol) {
                Ok((values, vectors)) => return finalize(mass.clone(), values, vectors),
                Err(achieved) if at_cap => {
                    return Err(Error::NonConvergence {
                        achieved,
                        required: opts.tol,
                    })
                }
                Err(_) => {}
            }
        }
    }
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn tridiagonal_matrix(alpha: &[f64], beta: &[f64]) -> DMatrix<f64> {
    let k = alpha.len();
    let mut t = DMatrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k && i < beta.len() {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    t
}

/// Ritz extraction from the Lanczos tridiagonal. Returns the `count` smallest
/// pencil eigenpairs when every candidate meets the residual tolerance,
/// otherwise the worst relative residual observed.
fn extract_ritz(
    a: &CsrMatrix,
    m: &CsrMatrix,
    basis: &[Vec<f64>],
    alpha: &[f64],
    beta: &[f64],
    count: usize,
    tol: f64,
) -> std::result::Result<(Vec<f64>, DMatrix<f64>), f64> {
    if alpha.len() < count {
        return Err(f64::INFINITY);
    }
    let t = tridiagonal_matrix(alpha, beta);
    let (tvals, tvecs) = dense::full_sorted(&t);
    // Largest positive Ritz values of A⁻¹M = smallest pencil eigenvalues.
    let mut order: Vec<usize> = (0..tvals.len()).collect();
    order.sort_by(|&i, &j| tvals[j].partial_cmp(&tvals[i]).unwrap());
    order.truncate(count);
    if order.iter().any(|&i| tvals[i] <= 0.0) {
        return Err(f64::INFINITY);
    }

    let n = basis[0].len();
    let mut values = Vec::with_capacity(count);
    let mut vectors = DMatrix::zeros(n, count);
    let mut worst: f64 = 0.0;
    for (col, &ti) in order.iter().enumerate() {
        let lambda = 1.0 / tvals[ti];
        let mut u = vec![0.0; n];
        for (k, b) in basis.iter().enumerate().take(alpha.len()) {
            let c = tvecs[(k, ti)];
            for (ui, bi) in u.iter_mut().zip(b) {
                *ui += c * bi;
            }
        }
        let mu = m.matvec(&u);
        let mut r = a.matvec(&u);
        for (ri, mui) in r.iter_mut().zip(&mu) {
            *ri -= lambda * mui;
        }
        worst = worst.max(norm2(&r) / (lambda.abs() * norm2(&mu)).max(f64::MIN_POSITIVE));
        values.push(lambda);
        for (row, ui) in u.iter().enumerate() {
            vectors[(row, col)] = *ui;
        }
    }
    if worst <= tol {
        Ok((values, vectors))
    } else {
        Err(worst)
    }
}

fn finalize(mass: Arc<CsrMatrix>, values: Vec<f64>, mut vectors: DMatrix<f64>) -> Result<EigenSolution> {
    let gram = Gram::Sparse(mass);
    orthonormalize_clusters(&values, &mut vectors, &gram);
    Ok(EigenSolution {
        values,
        vectors,
        gram,
    })
}

fn norm2(x: &[f64]) -> f64 {
    dot(x, x).max(0.0).sqrt()
}

/// Smallest `count` eigenpairs of the dense pencil `A x = λ M x` with SPD `M`.
pub fn solve_reduced(
    a_red: &DMatrix<f64>,
    m_red: &DMatrix<f64>,
    count: usize,
) -> Result<EigenSolution> {
    let n = a_red.nrows();
    if count > n {
        return Err(Error::CountExceedsDimension {
            requested: count,
            dim: n,
        });
    }
    let chol = m_red
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotSpd("reduced mass matrix is not positive definite".into()))?;
    let l = chol.l();
    // C = L⁻¹ A L⁻ᵀ, kept symmetric explicitly.
    let y = l
        .solve_lower_triangular(a_red)
        .ok_or_else(|| Error::NotSpd("singular Cholesky factor".into()))?;
    let c_raw = l
        .solve_lower_triangular(&y.transpose())
        .ok_or_else(|| Error::NotSpd("singular Cholesky factor".into()))?;
    let c = 0.5 * (&c_raw + c_raw.transpose());
    let (values, yvecs) = dense::smallest_sorted(&c, count);
    let lt = l.transpose();
    let mut vectors = DMatrix::zeros(n, count);
    for k in 0..count {
        let x = lt
            .solve_upper_triangular(&yvecs.column(k).into_owned())
            .ok_or_else(|| Error::NotSpd("singular Cholesky factor".into()))?;
        vectors.set_column(k, &x);
    }
    let gram = Gram::Dense(m_red.clone());
    orthonormalize_clusters(&values, &mut vectors, &gram);
    Ok(EigenSolution {
        values,
        vectors,
        gram,
    })
}

/// Dense pencil with identity mass: the path used for reduced models with an
/// m-orthonormal basis.
pub fn solve_reduced_identity(a_red: &DMatrix<f64>, count: usize) -> Result<EigenSolution> {
    let n = a_red.nrows();
    if count > n {
        return Err(Error::CountExceedsDimension {
            requested: count,
            dim: n,
        });
    }
    let (values, vectors) = dense::smallest_sorted(a_red, count);
    Ok(EigenSolution {
        values,
        vectors,
        gram: Gram::Identity,
    })
}
