//! Greedy construction of the reduced space driven by the a-posteriori
//! estimators: the multi-choice variant picks one maximizer per output each
//! round, the single-choice variant only the global maximizer. Both support
//! the extended selection for multiple eigenvalues and POD initialization.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::assemble::AffineOperator;
use crate::eigensolve::{cluster_spectrum, EigenSolution, SolverOptions};
use crate::error::{Error, Result};
use crate::estimator::{self, OfflineEstimatorData, LOOKAHEAD_CAP};
use crate::parameter::{ParameterDomain, SampleSet};
use crate::pod::{self, solve_past_gap};
use crate::rb::{ColumnSource, ReducedBasis};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    MultiChoice,
    SingleChoice,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeedMode {
    /// POD of extended snapshots on a small training set (the default).
    PodInit,
    /// Eigenfunctions of the reference parameter, as in the plain listings.
    ReferenceEigenfunctions,
}

#[derive(Debug, Clone)]
pub struct GreedyConfig {
    /// Number of outputs of interest K.
    pub n_outputs: usize,
    pub max_dim: usize,
    /// Estimator stopping tolerance ε_tol.
    pub target_tol: f64,
    /// Relative clustering tolerance ε_λ.
    pub cluster_tol: f64,
    /// Projection guard ε_proj for new basis columns.
    pub proj_tol: f64,
    pub init_dim: usize,
    pub variant: Variant,
    pub extended: bool,
    pub seed_mode: SeedMode,
    pub solver: SolverOptions,
}

impl GreedyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_outputs < 1 {
            return Err(Error::Parameter("need at least one output".into()));
        }
        if !(self.target_tol > 0.0) {
            return Err(Error::Parameter("target tolerance must be positive".into()));
        }
        let floor = (1.5 * (self.n_outputs + 1) as f64).ceil() as usize;
        if self.init_dim < floor {
            return Err(Error::Parameter(format!(
                "init_dim = {} below the required 1.5·(K+𝔯) = {floor}",
                self.init_dim
            )));
        }
        if self.max_dim < self.init_dim {
            return Err(Error::Parameter("max_dim below init_dim".into()));
        }
        Ok(())
    }
}

/// One selection: training index, output index, columns actually added.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Selection {
    pub train_index: usize,
    pub output: usize,
    pub added: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub dim_after: usize,
    pub eta_max: f64,
    pub selections: Vec<Selection>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct GreedyTrace {
    pub steps: Vec<StepRecord>,
    /// Accumulated number of chosen eigenfunctions per output index.
    pub output_counts: Vec<usize>,
    pub detailed_solves: usize,
    pub converged: bool,
    pub final_eta_max: f64,
}

/// POD (or reference-eigenfunction) initialization of the greedy basis.
///
/// The initial space must roughly approximate components up to K+𝔯, so the
/// snapshots cover a couple of outputs beyond K, with extended collection.
pub fn initialize(
    op: &AffineOperator,
    domain: &ParameterDomain,
    config: &GreedyConfig,
    pod_sample: &SampleSet,
) -> Result<ReducedBasis> {
    config.validate()?;
    match config.seed_mode {
        SeedMode::PodInit => {
            let k_snap = config.n_outputs + 2;
            let snapshots = pod::collect_snapshots(
                op,
                domain,
                pod_sample,
                k_snap,
                config.cluster_tol,
                true,
                &config.solver,
            )?;
            pod::pod_compress(op, &snapshots, config.init_dim)
        }
        SeedMode::ReferenceEigenfunctions => {
            let theta = domain.affine_coefficients(domain.reference())?;
            let sol = solve_past_gap(
                op,
                &theta,
                config.n_outputs + 2,
                config.cluster_tol,
                &config.solver,
            )?;
            let mut basis = ReducedBasis::empty(op);
            for i in 0..(config.n_outputs + 2).min(sol.count()) {
                basis.extend(
                    op,
                    &sol.vector(i),
                    config.proj_tol,
                    ColumnSource::ReferenceSeed { output: i },
                )?;
            }
            Ok(basis)
        }
    }
}

/// Extended selection: all eigenfunctions of the cluster around the target
/// index pass through the ε_proj filter; already well-approximated directions
/// are skipped. Returns the number of columns added.
pub fn extended_select(
    op: &AffineOperator,
    basis: &mut ReducedBasis,
    offline: &mut OfflineEstimatorData,
    detailed: &EigenSolution,
    target: usize,
    cluster_tol: f64,
    proj_tol: f64,
    source: impl Fn(usize) -> ColumnSource,
) -> Result<usize> {
    let structure = cluster_spectrum(&detailed.values, cluster_tol);
    let group = structure.group_of(target);
    let mut added = 0;
    for j in group.indices() {
        if basis.extend(op, &detailed.vector(j), proj_tol, source(j))? {
            offline.extend_with(op, basis)?;
            added += 1;
        }
    }
    Ok(added)
}

struct SweepResult {
    /// Per-output maximizer `(train_index, eta)`, skipping dead pairs.
    per_output: Vec<Option<(usize, f64)>>,
    eta_max: f64,
}

/// Evaluates all estimators over the training set against the current basis.
/// Reduced solves are shared between the distance computation and the η
/// evaluation; the argmax tie-break is the lowest training index, then the
/// lowest output index.
fn sweep(
    domain: &ParameterDomain,
    basis: &ReducedBasis,
    offline: &OfflineEstimatorData,
    training: &SampleSet,
    config: &GreedyConfig,
    dead: &HashSet<(usize, usize)>,
) -> Result<SweepResult> {
    let k = config.n_outputs;
    let count = (k + LOOKAHEAD_CAP + 1).min(basis.dim());
    let mut per_output: Vec<Option<(usize, f64)>> = vec![None; k];
    let mut eta_max: f64 = 0.0;
    for (ti, mu) in training.points.iter().enumerate() {
        let reduced = basis.solve_at(domain, mu, count)?;
        let report = estimator::estimate(offline, domain, mu, &reduced, config.cluster_tol, k)?;
        for (i, out) in report.outputs.iter().enumerate() {
            let Some(eta) = out.eta else { continue };
            eta_max = eta_max.max(eta);
            if dead.contains(&(ti, i)) {
                continue;
            }
            let better = match per_output[i] {
                None => true,
                Some((_, best)) => eta > best,
            };
            if better {
                per_output[i] = Some((ti, eta));
            }
        }
    }
    Ok(SweepResult {
        per_output,
        eta_max,
    })
}

pub fn run_multi_choice(
    op: &AffineOperator,
    domain: &ParameterDomain,
    config: &GreedyConfig,
    training: &SampleSet,
    basis: &mut ReducedBasis,
    offline: &mut OfflineEstimatorData,
) -> Result<GreedyTrace> {
    run(op, domain, config, training, basis, offline, Variant::MultiChoice)
}

pub fn run_single_choice(
    op: &AffineOperator,
    domain: &ParameterDomain,
    config: &GreedyConfig,
    training: &SampleSet,
    basis: &mut ReducedBasis,
    offline: &mut OfflineEstimatorData,
) -> Result<GreedyTrace> {
    run(op, domain, config, training, basis, offline, Variant::SingleChoice)
}

pub fn run(
    op: &AffineOperator,
    domain: &ParameterDomain,
    config: &GreedyConfig,
    training: &SampleSet,
    basis: &mut ReducedBasis,
    offline: &mut OfflineEstimatorData,
    variant: Variant,
) -> Result<GreedyTrace> {
    config.validate()?;
    let k = config.n_outputs;
    let mut trace = GreedyTrace {
        output_counts: vec![0; k],
        ..Default::default()
    };
    // (train_index, output) pairs already used or known not to contribute.
    let mut dead: HashSet<(usize, usize)> = HashSet::new();
    let mut step = 0usize;

    loop {
        let swept = sweep(domain, basis, offline, training, config, &dead)?;
        trace.final_eta_max = swept.eta_max;
        if swept.eta_max < config.target_tol {
            trace.converged = true;
            trace.steps.push(StepRecord {
                step,
                dim_after: basis.dim(),
                eta_max: swept.eta_max,
                selections: Vec::new(),
            });
            break;
        }

        // Candidate (μ, i) pairs of this round.
        let candidates: Vec<(usize, usize, f64)> = match variant {
            Variant::MultiChoice => swept
                .per_output
                .iter()
                .enumerate()
                .filter_map(|(i, c)| c.map(|(ti, eta)| (ti, i, eta)))
                .filter(|&(_, _, eta)| eta > config.target_tol)
                .collect(),
            Variant::SingleChoice => {
                // Ties resolve to the lower training index, then the lower
                // output index.
                let mut best: Option<(usize, usize, f64)> = None;
                for (i, c) in swept.per_output.iter().enumerate() {
                    let Some((ti, eta)) = *c else { continue };
                    let replace = match best {
                        None => true,
                        Some((bti, bi, beta)) => {
                            eta > beta || (eta == beta && (ti, i) < (bti, bi))
                        }
                    };
                    if replace {
                        best = Some((ti, i, eta));
                    }
                }
                best.into_iter().collect()
            }
        };
        if candidates.is_empty() {
            return Err(Error::GreedyStalled);
        }

        let mut selections = Vec::new();
        let mut solved_cache: Vec<(usize, EigenSolution)> = Vec::new();
        for (ti, i, _eta) in &candidates {
            let (ti, i) = (*ti, *i);
            dead.insert((ti, i));
            let detailed = match solved_cache.iter().find(|(c_ti, _)| *c_ti == ti) {
                Some((_, sol)) => sol.clone(),
                None => {
                    let theta = domain.affine_coefficients(&training.points[ti])?;
                    let sol = solve_past_gap(op, &theta, k, config.cluster_tol, &config.solver)?;
                    trace.detailed_solves += 1;
                    solved_cache.push((ti, sol));
                    solved_cache.last().unwrap().1.clone()
                }
            };
            let added = if config.extended {
                let mu = training.points[ti].clone();
                extended_select(
                    op,
                    basis,
                    offline,
                    &detailed,
                    i,
                    config.cluster_tol,
                    config.proj_tol,
                    |output| ColumnSource::Greedy {
                        mu: mu.clone(),
                        output,
                        step,
                    },
                )?
            } else {
                let mu = training.points[ti].clone();
                let grew = basis.extend(
                    op,
                    &detailed.vector(i),
                    config.proj_tol,
                    ColumnSource::Greedy {
                        mu,
                        output: i,
                        step,
                    },
                )?;
                if grew {
                    offline.extend_with(op, basis)?;
                    1
                } else {
                    0
                }
            };
            if added > 0 {
                trace.output_counts[i] += 1;
            }
            selections.push(Selection {
                train_index: ti,
                output: i,
                added,
            });
            // Clusters are never split; the size check comes after a full
            // selection.
            if basis.dim() >= config.max_dim {
                break;
            }
        }

        trace.steps.push(StepRecord {
            step,
            dim_after: basis.dim(),
            eta_max: swept.eta_max,
            selections,
        });
        step += 1;
        if basis.dim() >= config.max_dim {
            break;
        }
    }
    Ok(trace)
}
