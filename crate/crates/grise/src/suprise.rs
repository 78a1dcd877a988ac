//! Multi-round structure and parameter recovery.
//!
//! One round per interaction order level: solve the per-node screening
//! problem on the surviving factors, average each maximal clique's span
//! parameters over the clique's vertices, and drop spans whose averaged l2
//! norm falls below `alpha / 2` (ties are kept; the removal test is strictly
//! below). Removal is atomic per span. Rounds are a sequential barrier; the
//! per-node solves inside a round run in parallel.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::giso::LocalProblem;
use crate::model::{
    BasisKind, BasisTag, CliqueStructure, FactorId, GraphicalModel, ModelFamily,
};
use crate::projection::ConstraintDescriptor;
use crate::sampler::SampleSet;
use crate::solver::{grise, SolverOptions};

/// Hyperparameters of a recovery run.
#[derive(Debug, Clone, PartialEq)]
pub struct SupriseConfig {
    /// Minimal clique intensity: no true clique has averaged span norm
    /// below `alpha`; the removal threshold is `alpha / 2`.
    pub alpha: f64,
    /// l1 prior radius per node.
    pub gamma_hat: f64,
    /// Maximum interaction strength input (user-supplied or a bound).
    pub gamma: f64,
    /// Clique-conditioning constant; `None` selects the basis default
    /// (1 for monomial, `exp(-2 gamma)/q` for indicator) and is required
    /// for custom bases.
    pub rho_npc: Option<f64>,
    /// Replaces the theoretical solver accuracy. The guarantee is void when
    /// set; the theoretical value is impractically small except at tiny
    /// `gamma`.
    pub epsilon_override: Option<f64>,
    /// Hard iteration cap per solve (guarantee void when set).
    pub max_iterations: Option<usize>,
    /// Plateau early stopping (off keeps the proven iteration count).
    pub early_stop: bool,
}

impl SupriseConfig {
    pub fn new(alpha: f64, gamma_hat: f64, gamma: f64) -> Self {
        SupriseConfig {
            alpha,
            gamma_hat,
            gamma,
            rho_npc: None,
            epsilon_override: None,
            max_iterations: None,
            early_stop: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) {
            return Err(Error::InvalidConfig("alpha must be positive".into()));
        }
        if !(self.gamma_hat > 0.0) {
            return Err(Error::InvalidConfig("gamma_hat must be positive".into()));
        }
        if self.gamma < 0.0 {
            return Err(Error::InvalidConfig("gamma must be nonnegative".into()));
        }
        Ok(())
    }

    /// Solver accuracy for the run:
    /// `rho alpha^2 exp(-gamma (2L - 1)) / (20 (1 + gamma_hat) q^(L-1))`,
    /// unless overridden.
    pub fn epsilon(&self, family: &ModelFamily) -> Result<f64> {
        if let Some(eps) = self.epsilon_override {
            if !(eps > 0.0 && eps <= 1.0) {
                return Err(Error::EpsilonOutOfRange(eps));
            }
            return Ok(eps);
        }
        let q = family.alphabet().max_size() as f64;
        let order = family.graph().interaction_order();
        if order == 0 {
            return Err(Error::InvalidConfig("family has no factors".into()));
        }
        let rho = match (self.rho_npc, family.basis()) {
            (Some(rho), _) => {
                if !(rho > 0.0) {
                    return Err(Error::InvalidConfig("rho_npc must be positive".into()));
                }
                rho
            }
            (None, BasisKind::Monomial) => 1.0,
            (None, BasisKind::Indicator) => (-2.0 * self.gamma).exp() / q,
            (None, BasisKind::Custom) => {
                return Err(Error::InvalidConfig(
                    "rho_npc is required for custom bases".into(),
                ))
            }
        };
        let l = order as f64;
        let eps = rho * self.alpha * self.alpha * (-self.gamma * (2.0 * l - 1.0)).exp()
            / (20.0 * (1.0 + self.gamma_hat) * q.powf(l - 1.0));
        if !(eps > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "derived epsilon {eps} is not positive"
            )));
        }
        Ok(eps.min(1.0))
    }
}

/// Per-node parameter estimates, keyed by vertex then factor id.
pub type NodeEstimates = BTreeMap<usize, BTreeMap<FactorId, f64>>;

/// Componentwise mean over the clique's vertices of each span factor's
/// estimate.
pub fn clique_average(
    clique: &[usize],
    span: &[FactorId],
    estimates: &NodeEstimates,
) -> Result<Vec<f64>> {
    let mut avg = vec![0.0; span.len()];
    for &u in clique {
        let node = estimates.get(&u).ok_or_else(|| Error::MissingEstimate {
            vertex: u,
            clique: clique.to_vec(),
        })?;
        for (slot, &k) in avg.iter_mut().zip(span) {
            let value = node.get(&k).ok_or_else(|| Error::MissingEstimate {
                vertex: u,
                clique: clique.to_vec(),
            })?;
            *slot += value;
        }
    }
    for slot in avg.iter_mut() {
        *slot /= clique.len() as f64;
    }
    Ok(avg)
}

/// Apply the `alpha / 2` test to every maximal clique: returns the span
/// factors to remove and the averaged norms per clique. Cliques at exactly
/// `alpha / 2` survive.
pub fn round_removals(
    structure: &CliqueStructure,
    estimates: &NodeEstimates,
    alpha: f64,
) -> Result<(Vec<FactorId>, Vec<(Vec<usize>, f64)>)> {
    let mut removable = Vec::new();
    let mut norms = Vec::new();
    for (clique, span) in structure.spans() {
        let avg = clique_average(clique, span, estimates)?;
        let norm = avg.iter().map(|x| x * x).sum::<f64>().sqrt();
        norms.push((clique.clone(), norm));
        if norm < alpha / 2.0 {
            removable.extend_from_slice(span);
        }
    }
    Ok((removable, norms))
}

/// Log of one round: every averaged clique norm and the cliques removed.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundLog {
    pub round: usize,
    pub norms: Vec<(Vec<usize>, f64)>,
    pub removed: Vec<Vec<usize>>,
    /// True when the round found no factors left to consider.
    pub short_circuited: bool,
}

/// Compact account of one per-node solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveSummary {
    pub round: usize,
    pub vertex: usize,
    pub dimension: usize,
    pub iterations: usize,
    pub best_value: f64,
    pub l1_norm: f64,
    pub constraint_residual: f64,
}

/// One estimated maximal factor in the output.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatedFactor {
    pub factor: FactorId,
    pub scope: Vec<usize>,
    /// Letter assignment for indicator factors.
    pub assignment: Option<Vec<u8>>,
    pub theta_avg: f64,
}

/// Output of a recovery run.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureReport {
    /// Recovered maximal cliques of the final factor set.
    pub cliques: Vec<Vec<usize>>,
    /// Averaged parameters of the surviving maximal factors.
    pub parameters: Vec<EstimatedFactor>,
    pub rounds: Vec<RoundLog>,
    pub solves: Vec<SolveSummary>,
    /// Solver accuracy actually used.
    pub epsilon: f64,
    /// Rounds dictated by the interaction order.
    pub rounds_planned: usize,
    pub alpha: f64,
}

impl StructureReport {
    /// The estimate as a theta map over family factor ids (zero elsewhere).
    pub fn theta_map(&self) -> BTreeMap<FactorId, f64> {
        self.parameters
            .iter()
            .map(|p| (p.factor, p.theta_avg))
            .collect()
    }
}

/// Recover structure and parameters from samples.
pub fn run_suprise(
    family: &ModelFamily,
    samples: &SampleSet,
    config: &SupriseConfig,
) -> Result<StructureReport> {
    run_with(family, config, |vertex, ids, targets, constraints| {
        LocalProblem::from_samples_with(
            family,
            samples,
            vertex,
            ids,
            targets,
            config.gamma_hat,
            constraints,
        )
    })
}

/// Recover structure from the exact population objective of an enumerable
/// truth model (sampling noise removed; solver and thresholding unchanged).
pub fn run_suprise_population(
    truth: &GraphicalModel,
    config: &SupriseConfig,
    cap: Option<u128>,
) -> Result<StructureReport> {
    run_with(truth.family(), config, |vertex, ids, targets, constraints| {
        LocalProblem::population_with(
            truth,
            vertex,
            ids,
            targets,
            config.gamma_hat,
            constraints,
            cap,
        )
    })
}

fn constraints_for(
    family: &ModelFamily,
    ids: &[FactorId],
) -> Result<ConstraintDescriptor> {
    match family.basis() {
        BasisKind::Indicator => ConstraintDescriptor::indicator_zero_sum(family, ids),
        _ => Ok(ConstraintDescriptor::Trivial),
    }
}

fn run_with<F>(family: &ModelFamily, config: &SupriseConfig, build: F) -> Result<StructureReport>
where
    F: Fn(usize, Vec<FactorId>, Vec<FactorId>, ConstraintDescriptor) -> Result<LocalProblem>
        + Sync,
{
    config.validate()?;
    let graph = family.graph();
    let p = graph.vertex_count();
    let order = graph.interaction_order();
    if order == 0 {
        return Err(Error::InvalidConfig("family has no factors".into()));
    }
    let epsilon = config.epsilon(family)?;
    let options = SolverOptions {
        epsilon,
        max_iterations: config.max_iterations,
        early_stop: config.early_stop,
    };
    let mut active = vec![true; graph.factor_count()];
    let mut rounds = Vec::with_capacity(order);
    let mut solves = Vec::new();
    let mut estimates: NodeEstimates = BTreeMap::new();
    for round in 0..order {
        let active_ids: Vec<FactorId> =
            (0..graph.factor_count()).filter(|&k| active[k]).collect();
        if active_ids.is_empty() {
            rounds.push(RoundLog {
                round,
                norms: Vec::new(),
                removed: Vec::new(),
                short_circuited: true,
            });
            continue;
        }
        let structure = graph.clique_structure_of(&active_ids);
        let node_results: Vec<(usize, Vec<FactorId>, crate::solver::SolverReport)> = (0..p)
            .into_par_iter()
            .map(|u| {
                let ids: Vec<FactorId> = graph
                    .incident(u)
                    .iter()
                    .copied()
                    .filter(|&k| active[k])
                    .collect();
                if ids.is_empty() {
                    return Ok((u, ids, empty_report()));
                }
                let targets = structure.targets_of(u, graph);
                let constraints = constraints_for(family, &ids)?;
                let problem = build(u, ids.clone(), targets, constraints)?;
                let report = grise(&problem, &options).map_err(|e| {
                    Error::SolverFailure(format!("round {round}, vertex {u}: {e}"))
                })?;
                Ok((u, ids, report))
            })
            .collect::<Result<Vec<_>>>()?;
        estimates.clear();
        for (u, ids, report) in node_results {
            solves.push(SolveSummary {
                round,
                vertex: u,
                dimension: ids.len(),
                iterations: report.iterations,
                best_value: report.best_value,
                l1_norm: report.l1_norm,
                constraint_residual: report.constraint_residual,
            });
            let map: BTreeMap<FactorId, f64> =
                ids.into_iter().zip(report.theta).collect();
            estimates.insert(u, map);
        }
        let (removable, norms) = round_removals(&structure, &estimates, config.alpha)?;
        let removed: Vec<Vec<usize>> = {
            let mut seen = Vec::new();
            for &k in &removable {
                let scope = graph.factor(k).scope().to_vec();
                if !seen.contains(&scope) {
                    seen.push(scope);
                }
            }
            seen
        };
        for &k in &removable {
            active[k] = false;
        }
        rounds.push(RoundLog {
            round,
            norms,
            removed,
            short_circuited: false,
        });
    }
    // Final structure and averaged parameters from the last round's
    // estimates.
    let final_ids: Vec<FactorId> = (0..graph.factor_count()).filter(|&k| active[k]).collect();
    let structure = graph.clique_structure_of(&final_ids);
    let mut parameters = Vec::new();
    for (clique, span) in structure.spans() {
        let avg = clique_average(clique, span, &estimates)?;
        for (&k, &value) in span.iter().zip(&avg) {
            let assignment = match graph.factor(k).tag() {
                BasisTag::Indicator(letters) => Some(letters.clone()),
                _ => None,
            };
            parameters.push(EstimatedFactor {
                factor: k,
                scope: graph.factor(k).scope().to_vec(),
                assignment,
                theta_avg: value,
            });
        }
    }
    Ok(StructureReport {
        cliques: structure.maximal_cliques(),
        parameters,
        rounds,
        solves,
        epsilon,
        rounds_planned: order,
        alpha: config.alpha,
    })
}

fn empty_report() -> crate::solver::SolverReport {
    crate::solver::SolverReport {
        theta: Vec::new(),
        best_value: 1.0,
        best_log_value: 0.0,
        best_iteration: 0,
        iterations: 0,
        eta_first: 0.0,
        eta_last: 0.0,
        l1_norm: 0.0,
        l1_exceeds_prior: false,
        constraint_residual: 0.0,
        solve_seconds: 0.0,
        projection_seconds: 0.0,
    }
}

/// Structure and parameter error metrics of a report against a known truth.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Max over cliques of the span l2 parameter error.
    pub linf2_error: f64,
    /// Global l2 parameter error over maximal factors.
    pub l2_error: f64,
    /// `l2_error <= chi * alpha / 2`, when `chi` was supplied.
    pub within_pairwise_budget: Option<bool>,
}

/// Compare a recovery report to the generating model. The report must refer
/// to the same family (same graph, alphabet, basis).
pub fn evaluate_estimate(
    truth: &GraphicalModel,
    report: &StructureReport,
    chi: Option<f64>,
) -> Result<EstimateMetrics> {
    let graph = truth.graph();
    for est in &report.parameters {
        if est.factor >= graph.factor_count()
            || graph.factor(est.factor).scope() != est.scope.as_slice()
        {
            return Err(Error::FamilyMismatch(format!(
                "estimated factor {} does not match the truth family",
                est.factor
            )));
        }
    }
    let truth_cliques = truth.structure();
    let predicted = &report.cliques;
    let hits = predicted
        .iter()
        .filter(|c| truth_cliques.contains(c))
        .count();
    let precision = if predicted.is_empty() {
        1.0
    } else {
        hits as f64 / predicted.len() as f64
    };
    let recall = if truth_cliques.is_empty() {
        1.0
    } else {
        hits as f64 / truth_cliques.len() as f64
    };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    let theta_map = report.theta_map();
    // Union of truth and predicted cliques; spans come from the family.
    let mut cliques: Vec<Vec<usize>> = truth_cliques.clone();
    for c in predicted {
        if !cliques.contains(c) {
            cliques.push(c.clone());
        }
    }
    let mut linf2_sq = 0.0f64;
    let mut total_sq = 0.0;
    for clique in &cliques {
        let span = graph.span_of_scope(clique);
        let mut err_sq = 0.0;
        for &k in &span {
            let est = theta_map.get(&k).copied().unwrap_or(0.0);
            let diff = est - truth.theta()[k];
            err_sq += diff * diff;
        }
        linf2_sq = linf2_sq.max(err_sq);
        total_sq += err_sq;
    }
    let l2_error = total_sq.sqrt();
    let within_pairwise_budget = chi.map(|chi| l2_error <= chi * report.alpha / 2.0);
    Ok(EstimateMetrics {
        precision,
        recall,
        f1,
        linf2_error: linf2_sq.sqrt(),
        l2_error,
        within_pairwise_budget,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Alphabet, Factor, FactorGraph, GraphicalModel};

    fn pairwise_family(p: usize, fields: bool) -> ModelFamily {
        let mut factors = Vec::new();
        if fields {
            for i in 0..p {
                factors.push(Factor::monomial(vec![i]).unwrap());
            }
        }
        for a in 0..p {
            for b in (a + 1)..p {
                factors.push(Factor::monomial(vec![a, b]).unwrap());
            }
        }
        let graph = FactorGraph::new(p, factors).unwrap();
        ModelFamily::new(graph, Alphabet::uniform(p, 2).unwrap(), BasisKind::Monomial).unwrap()
    }

    fn estimates_from(pairs: &[(usize, &[(FactorId, f64)])]) -> NodeEstimates {
        pairs
            .iter()
            .map(|(u, kv)| (*u, kv.iter().copied().collect()))
            .collect()
    }

    #[test]
    fn clique_average_examples() {
        // identical per-node estimates average to themselves
        let est = estimates_from(&[(0, &[(5, 0.4)]), (1, &[(5, 0.4)])]);
        assert_eq!(clique_average(&[0, 1], &[5], &est).unwrap(), vec![0.4]);
        // 0.5 and 0.7 average to 0.6
        let est = estimates_from(&[(0, &[(5, 0.5)]), (1, &[(5, 0.7)])]);
        let avg = clique_average(&[0, 1], &[5], &est).unwrap();
        assert!((avg[0] - 0.6).abs() < 1e-15);
        // missing node estimate is an error
        let est = estimates_from(&[(0, &[(5, 0.5)])]);
        assert!(matches!(
            clique_average(&[0, 1], &[5], &est).unwrap_err(),
            Error::MissingEstimate { vertex: 1, .. }
        ));
    }

    #[test]
    fn threshold_soundness_with_synthetic_estimates() {
        // Three candidate edges; estimates within alpha/2 of a truth whose
        // live cliques have norm >= alpha: exactly the dead clique goes.
        let family = pairwise_family(3, false);
        let graph = family.graph();
        let structure = graph.clique_structure();
        let alpha = 0.4;
        // truth: edge {0,1} = 0.5, edge {1,2} = -0.45, edge {0,2} = 0
        let truth = [(vec![0, 1], 0.5), (vec![1, 2], -0.45), (vec![0, 2], 0.0)];
        let mut estimates: NodeEstimates = BTreeMap::new();
        for u in 0..3 {
            let mut node = BTreeMap::new();
            for &k in graph.incident(u) {
                let scope = graph.factor(k).scope().to_vec();
                let base = truth.iter().find(|(s, _)| *s == scope).unwrap().1;
                // perturb by strictly less than alpha/2, sign varying by node
                let noise = if u % 2 == 0 { 0.19 } else { -0.19 };
                node.insert(k, base + noise);
            }
            estimates.insert(u, node);
        }
        let (removable, norms) = round_removals(&structure, &estimates, alpha).unwrap();
        let removed_scopes: Vec<Vec<usize>> = removable
            .iter()
            .map(|&k| graph.factor(k).scope().to_vec())
            .collect();
        assert_eq!(removed_scopes, vec![vec![0, 2]]);
        assert_eq!(norms.len(), 3);

        // a clique exactly at alpha/2 is kept
        let mut estimates: NodeEstimates = BTreeMap::new();
        for u in 0..3 {
            let mut node = BTreeMap::new();
            for &k in graph.incident(u) {
                node.insert(k, alpha / 2.0);
            }
            estimates.insert(u, node);
        }
        let (removable, _) = round_removals(&structure, &estimates, alpha).unwrap();
        assert!(removable.is_empty());
    }

    #[test]
    fn zero_model_population_returns_empty_structure() {
        let family = pairwise_family(3, true);
        let truth = GraphicalModel::new(family.clone(), vec![0.0; 6]).unwrap();
        let mut config = SupriseConfig::new(0.4, 1.0, 0.0);
        config.epsilon_override = Some(0.05);
        let report = run_suprise_population(&truth, &config, None).unwrap();
        assert!(report.cliques.is_empty(), "cliques: {:?}", report.cliques);
        assert_eq!(report.rounds_planned, 2);
        assert_eq!(report.rounds.len(), 2);
    }

    #[test]
    fn chain_population_recovers_exact_structure() {
        // Truth: edges {0,1} and {1,2} at 0.6, no third edge, no fields.
        // Population mode removes sampling noise, so thresholding is exact.
        let family = pairwise_family(3, true);
        let mut theta = vec![0.0; 6];
        // factor order: fields 0..3, then edges (0,1), (0,2), (1,2)
        theta[3] = 0.6;
        theta[5] = 0.6;
        let truth = GraphicalModel::new(family.clone(), theta).unwrap();
        let mut config = SupriseConfig::new(0.4, 2.0, 1.2);
        config.epsilon_override = Some(0.002);
        let report = run_suprise_population(&truth, &config, None).unwrap();
        assert_eq!(report.cliques, vec![vec![0, 1], vec![1, 2]]);
        // round 0 decides edges, round 1 decides leftover fields
        assert_eq!(report.rounds.len(), 2);
        assert!(report.rounds[0].removed.contains(&vec![0, 2]));
        let metrics = evaluate_estimate(&truth, &report, None).unwrap();
        assert_eq!(metrics.f1, 1.0);
        assert!(metrics.linf2_error <= 0.2, "error {}", metrics.linf2_error);
    }

    #[test]
    fn monotone_shrinkage_of_active_sets() {
        let family = pairwise_family(4, true);
        let mut theta = vec![0.0; 10];
        theta[4] = 0.5; // edge (0,1)
        theta[9] = -0.5; // edge (2,3)
        let truth = GraphicalModel::new(family.clone(), theta).unwrap();
        let mut config = SupriseConfig::new(0.4, 1.5, 0.5);
        config.epsilon_override = Some(0.01);
        let report = run_suprise_population(&truth, &config, None).unwrap();
        // removals only ever shrink: every clique removed in round t is
        // absent from the norms of round t+1
        for w in report.rounds.windows(2) {
            for removed in &w[0].removed {
                assert!(w[1].norms.iter().all(|(c, _)| c != removed));
            }
        }
        assert_eq!(report.cliques, vec![vec![0, 1], vec![2, 3]]);
    }

    #[test]
    fn empty_rounds_short_circuit() {
        // Edge-only family, zero truth: round 0 removes everything, the
        // second round finds no factors and is logged as short-circuited.
        let family = pairwise_family(3, false);
        let truth = GraphicalModel::new(family.clone(), vec![0.0; 3]).unwrap();
        let mut config = SupriseConfig::new(0.4, 1.0, 0.0);
        config.epsilon_override = Some(0.1);
        let report = run_suprise_population(&truth, &config, None).unwrap();
        assert!(report.cliques.is_empty());
        assert_eq!(report.rounds.len(), 2);
        assert!(!report.rounds[0].short_circuited);
        assert!(report.rounds[1].short_circuited);
    }

    #[test]
    fn evaluate_metrics_examples() {
        let family = pairwise_family(3, false);
        let mut theta = vec![0.0; 3];
        theta[0] = 0.5; // (0,1)
        theta[2] = 0.5; // (1,2)
        let truth = GraphicalModel::new(family.clone(), theta).unwrap();
        // perfect report
        let perfect = StructureReport {
            cliques: vec![vec![0, 1], vec![1, 2]],
            parameters: vec![
                EstimatedFactor {
                    factor: 0,
                    scope: vec![0, 1],
                    assignment: None,
                    theta_avg: 0.5,
                },
                EstimatedFactor {
                    factor: 2,
                    scope: vec![1, 2],
                    assignment: None,
                    theta_avg: 0.5,
                },
            ],
            rounds: Vec::new(),
            solves: Vec::new(),
            epsilon: 0.01,
            rounds_planned: 2,
            alpha: 0.4,
        };
        let metrics = evaluate_estimate(&truth, &perfect, None).unwrap();
        assert_eq!(metrics.f1, 1.0);
        assert_eq!(metrics.linf2_error, 0.0);
        assert_eq!(metrics.l2_error, 0.0);

        // half-recall report
        let half = StructureReport {
            cliques: vec![vec![0, 1]],
            parameters: vec![EstimatedFactor {
                factor: 0,
                scope: vec![0, 1],
                assignment: None,
                theta_avg: 0.5,
            }],
            ..perfect.clone()
        };
        let metrics = evaluate_estimate(&truth, &half, None).unwrap();
        assert_eq!(metrics.precision, 1.0);
        assert_eq!(metrics.recall, 0.5);

        // empty report
        let empty = StructureReport {
            cliques: Vec::new(),
            parameters: Vec::new(),
            ..perfect.clone()
        };
        let metrics = evaluate_estimate(&truth, &empty, None).unwrap();
        assert_eq!(metrics.recall, 0.0);
        assert_eq!(metrics.f1, 0.0);
    }

    #[test]
    fn evaluate_rejects_family_mismatch() {
        let family = pairwise_family(3, false);
        let truth = GraphicalModel::new(family, vec![0.5, 0.0, 0.0]).unwrap();
        let report = StructureReport {
            cliques: vec![vec![0, 1]],
            parameters: vec![EstimatedFactor {
                factor: 0,
                scope: vec![0, 2], // wrong scope for factor 0
                assignment: None,
                theta_avg: 0.5,
            }],
            rounds: Vec::new(),
            solves: Vec::new(),
            epsilon: 0.1,
            rounds_planned: 2,
            alpha: 0.4,
        };
        assert!(matches!(
            evaluate_estimate(&truth, &report, None).unwrap_err(),
            Error::FamilyMismatch(_)
        ));
    }

    #[test]
    fn config_epsilon_formula() {
        let family = pairwise_family(3, true);
        let config = SupriseConfig::new(0.4, 3.0, 1.0);
        // monomial default rho = 1, L = 2, q = 2:
        // eps = 0.16 * exp(-3) / (20 * 4 * 2)
        let want = 0.16 * (-3.0f64).exp() / 160.0;
        let got = config.epsilon(&family).unwrap();
        assert!((got - want).abs() < 1e-15);
        // custom basis requires rho
        let (degenerate, _) = crate::testkit::degenerate_pair_family();
        assert!(config.epsilon(&degenerate).is_err());
    }

    #[test]
    fn surviving_cliques_meet_threshold() {
        let family = pairwise_family(3, true);
        let mut theta = vec![0.0; 6];
        theta[3] = 0.7;
        let truth = GraphicalModel::new(family.clone(), theta).unwrap();
        let mut config = SupriseConfig::new(0.4, 1.5, 0.7);
        config.epsilon_override = Some(0.005);
        let report = run_suprise_population(&truth, &config, None).unwrap();
        for est in &report.parameters {
            let span: Vec<_> = report
                .parameters
                .iter()
                .filter(|e| e.scope == est.scope)
                .collect();
            let norm: f64 = span.iter().map(|e| e.theta_avg * e.theta_avg).sum::<f64>().sqrt();
            assert!(norm >= config.alpha / 2.0);
        }
    }
}
