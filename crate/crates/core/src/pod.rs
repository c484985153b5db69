//! L²-optimal reduced spaces from eigenfunction snapshots via the
//! correlation-matrix method, with the extended snapshot collection that
//! keeps whole eigenspaces of multiple eigenvalues together.

use nalgebra::{DMatrix, DVector};

use crate::assemble::AffineOperator;
use crate::eigensolve::{self, cluster_spectrum, SolverOptions};
use crate::error::{Error, Result};
use crate::parameter::{ParameterDomain, SampleSet};
use crate::rb::{ColumnSource, ReducedBasis};

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub vector: Vec<f64>,
    /// Position of the source parameter in the training sample.
    pub mu_index: usize,
    /// 0-based eigenvalue index at that parameter.
    pub eigen_index: usize,
    /// First index and size of the cluster the snapshot belongs to.
    pub cluster_first: usize,
    pub cluster_size: usize,
}

#[derive(Debug, Clone)]
pub struct SnapshotSet {
    pub snapshots: Vec<Snapshot>,
    pub sample: SampleSet,
    pub k: usize,
    pub extended: bool,
}

impl SnapshotSet {
    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }
}

/// Determines how many eigenpairs to request so there is a clear relative
/// gap above output K: the smallest K′ > K with λ_{K′}/λ_K > 1 + tol.
pub fn solve_past_gap(
    op: &AffineOperator,
    theta: &[f64],
    k: usize,
    cluster_tol: f64,
    opts: &SolverOptions,
) -> Result<eigensolve::EigenSolution> {
    let n = op.n_dofs();
    let mut count = (k + 3).min(n);
    loop {
        let sol = eigensolve::solve_detailed(op, theta, count, opts)?;
        let lambda_k = sol.values[k - 1];
        if sol.values[k..].iter().any(|&l| l / lambda_k > 1.0 + cluster_tol) {
            return Ok(sol);
        }
        if count == n {
            return Err(Error::InsufficientSpectrum(format!(
                "no relative gap above output {k} within the whole spectrum"
            )));
        }
        count = (count + k.max(3)).min(n);
    }
}

/// Solves the detailed problem on every training parameter and keeps the
/// first K eigenfunctions; with `extended` the whole cluster straddling
/// index K is kept so no direction of a multiple eigenvalue is lost.
pub fn collect_snapshots(
    op: &AffineOperator,
    domain: &ParameterDomain,
    sample: &SampleSet,
    k: usize,
    cluster_tol: f64,
    extended: bool,
    opts: &SolverOptions,
) -> Result<SnapshotSet> {
    if sample.is_empty() {
        return Err(Error::Parameter("empty snapshot training set".into()));
    }
    let mut snapshots = Vec::new();
    for (mu_index, mu) in sample.points.iter().enumerate() {
        let theta = domain.affine_coefficients(mu)?;
        let sol = solve_past_gap(op, &theta, k, cluster_tol, opts).map_err(|e| {
            Error::Mesh(format!("detailed solve failed at sample {mu_index}: {e}"))
        })?;
        let structure = cluster_spectrum(&sol.values, cluster_tol);
        for group in &structure.groups {
            if group.first >= k {
                break;
            }
            let keep = if extended {
                group.indices()
            } else {
                group.first..group.last().min(k - 1) + 1
            };
            for j in keep {
                snapshots.push(Snapshot {
                    vector: sol.vector(j),
                    mu_index,
                    eigen_index: j,
                    cluster_first: group.first,
                    cluster_size: group.size,
                });
            }
        }
    }
    Ok(SnapshotSet {
        snapshots,
        sample: sample.clone(),
        k,
        extended,
    })
}

/// Correlation matrix `C_kl = m(v_k, v_l)` of a snapshot list.
pub fn correlation_matrix(op: &AffineOperator, snapshots: &[&Snapshot]) -> DMatrix<f64> {
    let s = snapshots.len();
    let mut c = DMatrix::zeros(s, s);
    let m_applied: Vec<Vec<f64>> = snapshots
        .iter()
        .map(|snap| op.mass().matvec(&snap.vector))
        .collect();
    for i in 0..s {
        for j in 0..=i {
            let v: f64 = snapshots[i]
                .vector
                .iter()
                .zip(&m_applied[j])
                .map(|(a, b)| a * b)
                .sum();
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    c
}

/// POD compression: N largest eigenpairs of the correlation matrix give the
/// L²-optimal N-dimensional subspace of the snapshot span.
pub fn pod_compress(op: &AffineOperator, set: &SnapshotSet, n: usize) -> Result<ReducedBasis> {
    let kept = deduplicate(op, &set.snapshots);
    if kept.is_empty() {
        return Err(Error::RankDeficient {
            requested: n,
            rank: 0,
        });
    }
    let c = correlation_matrix(op, &kept);
    let s = kept.len();
    if n > s {
        return Err(Error::RankDeficient {
            requested: n,
            rank: s,
        });
    }
    let (vals_asc, vecs) = eigensolve::full_sorted(&c);
    // Largest first.
    let order: Vec<usize> = (0..s).rev().collect();
    let trace: f64 = vals_asc.iter().sum();
    let sigma_n = vals_asc[s - n];
    if sigma_n <= 1e-12 * trace {
        let rank = vals_asc.iter().filter(|&&v| v > 1e-12 * trace).count();
        return Err(Error::RankDeficient { requested: n, rank });
    }

    let n_detailed = op.n_dofs();
    let mut columns = DMatrix::zeros(n_detailed, n);
    for (col, &oi) in order[..n].iter().enumerate() {
        let sigma = vals_asc[oi];
        let y = vecs.column(oi);
        let mut zeta = DVector::zeros(n_detailed);
        for (snap_idx, snap) in kept.iter().enumerate() {
            let w = y[snap_idx] / sigma.sqrt();
            for (zi, vi) in zeta.iter_mut().zip(&snap.vector) {
                *zi += w * vi;
            }
        }
        columns.set_column(col, &zeta);
    }
    let provenance = (0..n).map(|rank| ColumnSource::PodInit { rank }).collect();
    ReducedBasis::from_columns(op, columns, provenance)
}

/// Projection-residual deduplication for conditioning of the correlation
/// matrix: snapshots numerically inside the span of earlier ones are dropped.
fn deduplicate<'a>(op: &AffineOperator, snapshots: &'a [Snapshot]) -> Vec<&'a Snapshot> {
    let mut kept: Vec<&Snapshot> = Vec::new();
    let mut ortho: Vec<Vec<f64>> = Vec::new();
    let mut ortho_m: Vec<Vec<f64>> = Vec::new();
    for snap in snapshots {
        let mut v = snap.vector.clone();
        for _ in 0..2 {
            for (b, mb) in ortho.iter().zip(&ortho_m) {
                let c: f64 = v.iter().zip(mb).map(|(a, b)| a * b).sum();
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= c * bi;
                }
            }
        }
        let mv = op.mass().matvec(&v);
        let norm: f64 = v
            .iter()
            .zip(&mv)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            .max(0.0)
            .sqrt();
        if norm < 1e-12 {
            continue;
        }
        kept.push(snap);
        ortho.push(v.iter().map(|x| x / norm).collect());
        ortho_m.push(mv.iter().map(|x| x / norm).collect());
    }
    kept
}

/// `Σ_v ‖v − Π_N v‖²_m` over the snapshots, for optimality checks and the
/// discarded-eigenvalue trace identity.
pub fn projection_error_sq(op: &AffineOperator, basis: &ReducedBasis, set: &SnapshotSet) -> f64 {
    set.snapshots
        .iter()
        .map(|snap| {
            let (_, residual) = basis.project(op, &snap.vector);
            residual * residual
        })
        .sum()
}
