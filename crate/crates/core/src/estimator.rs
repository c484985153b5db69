//! A-posteriori error machinery.
//!
//! Offline: Riesz representers of the residual contributions w.r.t. the
//! reference form `â = a(·,·;μ̂)` and their Gram matrices `Â^{q,p}`,
//! 0 ≤ q,p ≤ Q with index 0 carrying the mass term. Online: the residual
//! dual norm from the Θ-weighted triple sum, multiplicity-aware relative
//! distances with adaptive lookahead, and the relative-error estimator
//! `η_i = ‖r_i‖²_â′ / (g·d_i·λ_red,i)`. The oracle bounds that still use
//! detailed eigenvalues live behind the same module for test-time
//! verification; the online path never touches detailed data.

use nalgebra::{DMatrix, DVector};

use crate::assemble::AffineOperator;
use crate::eigensolve::{cluster_spectrum, EigenSolution};
use crate::error::{Error, Result};
use crate::parameter::{ParameterDomain, ParameterPoint};
use crate::rb::{ReducedBasis, ReducedEigenSolution};
use crate::sparse::SpdSolver;

/// Cap for the adaptive lookahead 𝔯; exceeding it signals degenerate
/// clustering rather than silent truncation.
pub const LOOKAHEAD_CAP: usize = 8;

/// Dual norms below this are treated as exactly converged.
pub const CONVERGED_FLOOR: f64 = 1e-14;

#[derive(Debug)]
pub struct OfflineEstimatorData {
    /// `(Q+1)×(Q+1)` Gram blocks in row-major order, each N×N; index 0 is the
    /// mass term. `gram[q][p] = (gram[p][q])ᵀ` holds exactly by construction.
    gram: Vec<Vec<DMatrix<f64>>>,
    /// Residual right-hand sides `[MZ, A_1 Z, ..., A_Q Z]`, kept for
    /// incremental border updates on basis extension.
    rhs: Vec<DMatrix<f64>>,
    /// Factorization handle of `â`.
    solver: SpdSolver,
    theta_hat: Vec<f64>,
}

impl OfflineEstimatorData {
    pub fn dim(&self) -> usize {
        self.gram[0][0].nrows()
    }

    pub fn n_blocks(&self) -> usize {
        self.gram.len() - 1
    }

    /// Gram block of representer families q and p; index 0 is the mass term.
    pub fn gram_block(&self, q: usize, p: usize) -> &DMatrix<f64> {
        &self.gram[q][p]
    }

    pub fn theta_hat(&self) -> &[f64] {
        &self.theta_hat
    }

    pub fn reference_solver(&self) -> &SpdSolver {
        &self.solver
    }

    /// Rebuilds nothing; imports externally persisted Gram blocks. The rhs
    /// family and factorization stay empty-capable only for online use, so
    /// this constructor is for consumers that never extend the basis.
    pub fn from_parts(
        gram: Vec<Vec<DMatrix<f64>>>,
        rhs: Vec<DMatrix<f64>>,
        solver: SpdSolver,
        theta_hat: Vec<f64>,
    ) -> Self {
        OfflineEstimatorData {
            gram,
            rhs,
            solver,
            theta_hat,
        }
    }

    /// `‖r_i(·;μ)‖²_â′` from the offline Gram blocks:
    /// Θ-weighted stiffness part, λ²-weighted mass part, −2λ cross part.
    /// Negative round-off is clamped to zero.
    pub fn dual_norm_sq(&self, theta: &[f64], u: &[f64], lambda: f64) -> f64 {
        let folded = self.fold_blocks(theta);
        folded.dual_norm_sq(u, lambda)
    }

    /// Per-μ fold of the Gram blocks, shared by all outputs at this μ.
    pub fn fold_blocks(&self, theta: &[f64]) -> FoldedEstimator {
        let q_count = self.n_blocks();
        assert_eq!(theta.len(), q_count);
        let n = self.dim();
        let mut stiffness = DMatrix::zeros(n, n);
        for q in 1..=q_count {
            for p in 1..=q_count {
                stiffness += theta[q - 1] * theta[p - 1] * &self.gram[q][p];
            }
        }
        let mut cross = DMatrix::zeros(n, n);
        for q in 1..=q_count {
            cross += theta[q - 1] * &self.gram[q][0];
        }
        FoldedEstimator {
            stiffness,
            cross,
            mass: self.gram[0][0].clone(),
        }
    }

    /// Appends the representer data of the last basis column; all blocks grow
    /// one bordered row/column, matching a from-scratch rebuild.
    pub fn extend_with(&mut self, op: &AffineOperator, basis: &ReducedBasis) -> Result<()> {
        let n_old = self.dim();
        assert_eq!(basis.dim(), n_old + 1, "extend_with expects one new column");
        let zeta = basis.column(n_old);
        let n_detailed = op.n_dofs();
        let q_count = self.n_blocks();

        let mut new_rhs = DMatrix::zeros(n_detailed, q_count + 1);
        new_rhs.set_column(0, &DVector::from_vec(op.mass().matvec(&zeta)));
        for q in 1..=q_count {
            new_rhs.set_column(q, &DVector::from_vec(op.block(q - 1).matvec(&zeta)));
        }
        let xi = self.solver.solve_mat(&new_rhs);

        for q in 0..=q_count {
            for p in 0..=q_count {
                let mut grown = DMatrix::zeros(n_old + 1, n_old + 1);
                grown
                    .view_mut((0, 0), (n_old, n_old))
                    .copy_from(&self.gram[q][p]);
                for i in 0..n_old {
                    // â(ξ_i^q, ξ_new^p) = rhs_i^q · ξ_new^p
                    grown[(i, n_old)] = self.rhs[q].column(i).dot(&xi.column(p));
                    // â(ξ_new^q, ξ_i^p) = rhs_i^p · ξ_new^q
                    grown[(n_old, i)] = self.rhs[p].column(i).dot(&xi.column(q));
                }
                let corner = 0.5
                    * (new_rhs.column(q).dot(&xi.column(p))
                        + new_rhs.column(p).dot(&xi.column(q)));
                grown[(n_old, n_old)] = corner;
                self.gram[q][p] = grown;
            }
        }
        for (q, family) in self.rhs.iter_mut().enumerate() {
            let mut grown = DMatrix::zeros(n_detailed, n_old + 1);
            grown.view_mut((0, 0), (n_detailed, n_old)).copy_from(family);
            grown.set_column(n_old, &new_rhs.column(q).into_owned());
            *family = grown;
        }
        Ok(())
    }

    /// Truncation to the leading `n` basis columns; exact because blocks grow
    /// by bordering.
    pub fn truncated(&self, n: usize, op: &AffineOperator, domain: &ParameterDomain) -> Result<Self> {
        assert!(n <= self.dim());
        let gram = self
            .gram
            .iter()
            .map(|row| {
                row.iter()
                    .map(|b| b.view((0, 0), (n, n)).into_owned())
                    .collect()
            })
            .collect();
        let rhs = self
            .rhs
            .iter()
            .map(|b| b.columns(0, n).into_owned())
            .collect();
        let theta_hat = domain.affine_coefficients(domain.reference())?;
        let solver = SpdSolver::new(&op.combine(&theta_hat))?;
        Ok(OfflineEstimatorData {
            gram,
            rhs,
            solver,
            theta_hat,
        })
    }
}

/// Gram blocks folded with the coefficients of one parameter point.
pub struct FoldedEstimator {
    stiffness: DMatrix<f64>,
    cross: DMatrix<f64>,
    mass: DMatrix<f64>,
}

impl FoldedEstimator {
    pub fn dual_norm_sq(&self, u: &[f64], lambda: f64) -> f64 {
        let x = DVector::from_column_slice(u);
        let s = x.dot(&(&self.stiffness * &x));
        let c = x.dot(&(&self.cross * &x));
        let m = x.dot(&(&self.mass * &x));
        let val = s + lambda * lambda * m - 2.0 * lambda * c;
        if val < 0.0 {
            0.0
        } else {
            val
        }
    }
}

/// `â ξ_n^q = A_q ζ_n` and `â ξ_n^0 = M ζ_n` for all basis columns; one
/// factorization, (Q+1)·N back-substitutions, Gram fill by dot products.
pub fn offline_build(
    op: &AffineOperator,
    basis: &ReducedBasis,
    domain: &ParameterDomain,
) -> Result<OfflineEstimatorData> {
    let theta_hat = domain.affine_coefficients(domain.reference())?;
    let solver = SpdSolver::new(&op.combine(&theta_hat))?;
    let n = basis.dim();
    let q_count = op.n_blocks();
    let n_detailed = op.n_dofs();

    let mut rhs: Vec<DMatrix<f64>> = Vec::with_capacity(q_count + 1);
    for q in 0..=q_count {
        let mut family = DMatrix::zeros(n_detailed, n);
        for j in 0..n {
            let col = if q == 0 {
                op.mass().matvec(&basis.column(j))
            } else {
                op.block(q - 1).matvec(&basis.column(j))
            };
            family.set_column(j, &DVector::from_vec(col));
        }
        rhs.push(family);
    }

    let mut gram = vec![vec![DMatrix::zeros(n, n); q_count + 1]; q_count + 1];
    for p in 0..=q_count {
        let xi_p = solver.solve_mat(&rhs[p]);
        for q in 0..=q_count {
            gram[q][p] = rhs[q].transpose() * &xi_p;
        }
    }
    // Enforce the exact transpose-pair symmetry the decomposition has in
    // exact arithmetic.
    for q in 0..=q_count {
        for p in 0..=q {
            let sym = 0.5 * (&gram[q][p] + gram[p][q].transpose());
            gram[p][q] = sym.transpose();
            gram[q][p] = sym;
        }
    }

    Ok(OfflineEstimatorData {
        gram,
        rhs,
        solver,
        theta_hat,
    })
}

/// Cluster guess and relative distance for one output.
#[derive(Debug, Clone)]
pub struct OutputDistance {
    /// 0-based indices of the reduced eigenvalues identified with output i.
    pub cluster: Vec<usize>,
    /// `min_{l ∉ cluster, i < l ≤ K+𝔯} |λ_l − λ_i|/λ_l`; `None` when the
    /// admissible set is empty (reported, output skipped).
    pub distance: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct DistanceReport {
    pub outputs: Vec<OutputDistance>,
    /// Final adaptive lookahead 𝔯.
    pub lookahead: usize,
}

/// Multiplicity-aware relative distances from the reduced spectrum alone.
///
/// Starting from 𝔯 = 1, the lookahead grows while the (K+𝔯)-th value still
/// clusters with output K, so the distance never collapses into an
/// unresolved multiplicity at the tail.
pub fn distances(values: &[f64], cluster_tol: f64, k: usize) -> Result<DistanceReport> {
    assert!(k >= 1);
    if values.len() < k + 1 {
        return Err(Error::BasisTooSmall {
            needed: k + 1,
            available: values.len(),
        });
    }
    let rel = |l: usize, i: usize| (values[l] - values[i]).abs() / values[l].abs();

    let mut lookahead = 1usize;
    loop {
        if k + lookahead > values.len() {
            return Err(Error::BasisTooSmall {
                needed: k + lookahead,
                available: values.len(),
            });
        }
        // 1-based K+𝔯 is index k+lookahead-1 in 0-based terms.
        let tail = k + lookahead - 1;
        let in_cluster_of_k = rel(tail, k - 1) < cluster_tol;
        if !in_cluster_of_k {
            break;
        }
        lookahead += 1;
        if lookahead > LOOKAHEAD_CAP {
            return Err(Error::DegenerateClustering { cap: LOOKAHEAD_CAP });
        }
    }

    let limit = k + lookahead; // exclusive 0-based bound = 1-based K+𝔯
    let outputs = (0..k)
        .map(|i| {
            let cluster: Vec<usize> = (0..limit).filter(|&j| rel(j, i) < cluster_tol).collect();
            let distance = (i + 1..limit)
                .filter(|l| !cluster.contains(l))
                .map(|l| rel(l, i))
                .fold(None, |acc: Option<f64>, d| {
                    Some(acc.map_or(d, |a: f64| a.min(d)))
                });
            OutputDistance { cluster, distance }
        })
        .collect();
    Ok(DistanceReport { outputs, lookahead })
}

#[derive(Debug, Clone)]
pub struct OutputEstimate {
    /// `‖r_i‖²_â′`.
    pub dual_norm_sq: f64,
    pub cluster: Vec<usize>,
    pub distance: Option<f64>,
    /// `η_i(μ)`; `None` when the distance was unresolvable.
    pub eta: Option<f64>,
}

/// Per-parameter estimator report for outputs 1..K.
#[derive(Debug, Clone)]
pub struct EstimateReport {
    pub outputs: Vec<OutputEstimate>,
    pub coercivity: f64,
    pub lookahead: usize,
    pub cluster_tol: f64,
}

impl EstimateReport {
    pub fn eta_max(&self) -> f64 {
        self.outputs
            .iter()
            .filter_map(|o| o.eta)
            .fold(0.0, f64::max)
    }
}

/// The relative-error estimator `η_i = ‖r_i‖²_â′ / (g·d_i·λ_red,i)` for all
/// outputs, from one reduced solve carrying at least K+𝔯 eigenvalues.
pub fn estimate(
    data: &OfflineEstimatorData,
    domain: &ParameterDomain,
    mu: &ParameterPoint,
    reduced: &ReducedEigenSolution,
    cluster_tol: f64,
    k: usize,
) -> Result<EstimateReport> {
    let theta = domain.affine_coefficients(mu)?;
    let g = domain.coercivity_lower_bound(mu)?;
    let report = distances(&reduced.values, cluster_tol, k)?;
    let folded = data.fold_blocks(&theta);

    let mut outputs = Vec::with_capacity(k);
    for (i, dist) in report.outputs.iter().enumerate() {
        let u = reduced.coefficient_vector(i);
        let lambda = reduced.values[i];
        let mut dual_sq = folded.dual_norm_sq(&u, lambda);
        if dual_sq.sqrt() < CONVERGED_FLOOR {
            dual_sq = 0.0;
        }
        let eta = dist
            .distance
            .map(|d| dual_sq / (g * d * lambda));
        outputs.push(OutputEstimate {
            dual_norm_sq: dual_sq,
            cluster: dist.cluster.clone(),
            distance: dist.distance,
            eta,
        });
    }
    Ok(EstimateReport {
        outputs,
        coercivity: g,
        lookahead: report.lookahead,
        cluster_tol,
    })
}

/// FE-informed two-term bound of the eigenvalue error, computable at
/// test time only: `‖r‖²_a′/d̃ · (1 + ‖r‖_a′/(d̃²·√λ_{k_i}))` with the
/// μ-energy dual norm from a detailed Riesz solve.
#[derive(Debug, Clone)]
pub struct OracleBound {
    /// The sharp two-term bound.
    pub bound: f64,
    /// The coarser `‖r‖²_a′/d̃²` variant it is compared against.
    pub bound_coarse: f64,
    /// `λ_red − λ_{k_i}`, the quantity being bounded.
    pub gap: f64,
    pub d_tilde: f64,
    pub dual_norm_energy: f64,
}

/// Context for the oracle bounds at one parameter: the μ-energy factorization
/// and the clustered detailed spectrum.
pub struct OracleContext<'a> {
    op: &'a AffineOperator,
    detailed: &'a EigenSolution,
    a_mu: crate::sparse::CsrMatrix,
    solver: SpdSolver,
    groups: crate::eigensolve::SpectrumStructure,
}

impl<'a> OracleContext<'a> {
    pub fn new(
        op: &'a AffineOperator,
        domain: &ParameterDomain,
        mu: &ParameterPoint,
        detailed: &'a EigenSolution,
        cluster_tol: f64,
    ) -> Result<Self> {
        let theta = domain.affine_coefficients(mu)?;
        let a_mu = op.combine(&theta);
        let solver = SpdSolver::new(&a_mu)?;
        let groups = cluster_spectrum(&detailed.values, cluster_tol);
        Ok(OracleContext {
            op,
            detailed,
            a_mu,
            solver,
            groups,
        })
    }

    pub fn detailed_group_of(&self, index: usize) -> (usize, usize) {
        let g = self.groups.group_of(index);
        (g.first, g.size)
    }

    /// Theorem bound for output `index` (0-based), given the lifted reduced
    /// vector and its reduced eigenvalue.
    pub fn bound_for(
        &self,
        lifted: &[f64],
        lambda_red: f64,
        index: usize,
    ) -> Result<OracleBound> {
        let group = self.groups.group_of(index);
        let beyond = group.first + group.size;
        if beyond >= self.detailed.values.len() {
            return Err(Error::InsufficientSpectrum(format!(
                "need detailed eigenvalues beyond index {beyond}"
            )));
        }
        let last = *self.detailed.values.last().unwrap();
        if last < 1.2 * lambda_red {
            return Err(Error::InsufficientSpectrum(format!(
                "detailed spectrum ends at {last:.6e}, too close to λ_red = {lambda_red:.6e}"
            )));
        }

        let d_tilde = self.detailed.values[beyond..]
            .iter()
            .map(|&l| ((l - lambda_red) / l).abs())
            .fold(f64::INFINITY, f64::min);

        let (dual_sq, _) = self.energy_residual(lifted, lambda_red);

        let lambda_first = self.detailed.values[group.first];
        let bound =
            dual_sq / d_tilde * (1.0 + dual_sq.sqrt() / (d_tilde * d_tilde * lambda_first.sqrt()));
        let bound_coarse = dual_sq / (d_tilde * d_tilde);
        Ok(OracleBound {
            bound,
            bound_coarse,
            gap: lambda_red - lambda_first,
            d_tilde,
            dual_norm_energy: dual_sq.sqrt(),
        })
    }

    /// `(‖r‖²_a′, Mû)` from a detailed Riesz solve in `a(·,·;μ)`.
    fn energy_residual(&self, lifted: &[f64], lambda_red: f64) -> (f64, Vec<f64>) {
        let mut rho = self.a_mu.matvec(lifted);
        let m_applied = self.op.mass().matvec(lifted);
        for (r, m) in rho.iter_mut().zip(&m_applied) {
            *r -= lambda_red * m;
        }
        let e = self.solver.solve_vec(&rho);
        let dual_sq: f64 = e.iter().zip(&rho).map(|(a, b)| a * b).sum::<f64>().max(0.0);
        (dual_sq, m_applied)
    }

    /// Energy-norm eigenvector bound: `‖û − Π_i û‖²_a ≤ ‖r‖²_a′ / d̂²` with
    /// d̂ excluding the whole group from both sides.
    pub fn eigenvector_bound_for(
        &self,
        lifted: &[f64],
        lambda_red: f64,
        index: usize,
    ) -> Result<EigenvectorBound> {
        let group = self.groups.group_of(index);
        let beyond = group.first + group.size;
        if beyond >= self.detailed.values.len() {
            return Err(Error::InsufficientSpectrum(format!(
                "need detailed eigenvalues beyond index {beyond}"
            )));
        }

        let d_hat = self
            .detailed
            .values
            .iter()
            .enumerate()
            .filter(|&(l, _)| l >= beyond || l < group.first)
            .map(|(_, &lv)| ((lv - lambda_red) / lv).abs())
            .fold(f64::INFINITY, f64::min);

        let (dual_sq, m_applied) = self.energy_residual(lifted, lambda_red);

        // Π_i û: m-orthogonal projection onto the detailed eigenspace U_i.
        let mut residual = lifted.to_vec();
        for l in group.indices() {
            let ul = self.detailed.vector(l);
            let c: f64 = m_applied.iter().zip(&ul).map(|(a, b)| a * b).sum();
            for (r, u) in residual.iter_mut().zip(&ul) {
                *r -= c * u;
            }
        }
        let energy_error_sq = self.a_mu.quadratic_form(&residual).max(0.0);

        Ok(EigenvectorBound {
            bound_sq: dual_sq / (d_hat * d_hat),
            energy_error_sq,
            d_hat,
        })
    }
}

#[derive(Debug, Clone)]
pub struct EigenvectorBound {
    /// `‖r‖²_a′ / d̂²`.
    pub bound_sq: f64,
    /// Left side `‖û − Π_i û‖²_a`.
    pub energy_error_sq: f64,
    pub d_hat: f64,
}

/// Certified estimate of the reduced model at one parameter, convenience
/// wrapper: reduced solve with lookahead head-room plus [`estimate`].
pub fn estimate_at(
    data: &OfflineEstimatorData,
    basis: &ReducedBasis,
    domain: &ParameterDomain,
    mu: &ParameterPoint,
    cluster_tol: f64,
    k: usize,
) -> Result<(ReducedEigenSolution, EstimateReport)> {
    let count = (k + LOOKAHEAD_CAP + 1).min(basis.dim());
    let reduced = basis.solve_at(domain, mu, count)?;
    let report = estimate(data, domain, mu, &reduced, cluster_tol, k)?;
    Ok((reduced, report))
}
