//! Entropic descent over the lifted simplex, and the per-node estimator.
//!
//! The l1-constrained minimization of the screening objective is lifted to
//! the probability simplex via `theta = gamma_hat * (x+ - x-)` with a slack
//! coordinate `y`, and solved by multiplicative-weight updates driven by the
//! normalized gradient `v = grad S / S` (whose infinity-norm is at most 1).
//! With `T = ceil(6 eps^-2 ln(2 K_u + 1))` iterations the best iterate is an
//! eps-optimal solution. Constraint sets that admit an equi-cost projection
//! are handled by projecting the unconstrained solution afterwards, which
//! leaves the objective value unchanged.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::giso::LocalProblem;
use crate::projection::{project, zero_sum_residual, ConstraintDescriptor};

/// Lifted simplex variables: nonnegative `x+`, `x-` and slack `y` with
/// `y + sum_k (x+_k + x-_k) = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexState {
    x_plus: Vec<f64>,
    x_minus: Vec<f64>,
    y: f64,
}

impl SimplexState {
    /// Uniform initialization: every coordinate equals `1 / (2 dim + 1)`.
    pub fn initial(dim: usize) -> Self {
        let w = 1.0 / (2.0 * dim as f64 + 1.0);
        SimplexState {
            x_plus: vec![w; dim],
            x_minus: vec![w; dim],
            y: w,
        }
    }

    pub fn dimension(&self) -> usize {
        self.x_plus.len()
    }

    pub fn x_plus(&self) -> &[f64] {
        &self.x_plus
    }

    pub fn x_minus(&self) -> &[f64] {
        &self.x_minus
    }

    pub fn slack(&self) -> f64 {
        self.y
    }

    /// Recover the parameters: `theta = gamma_hat (x+ - x-)`; the simplex
    /// constraint makes `|theta|_1 <= gamma_hat` automatic.
    pub fn theta(&self, gamma_hat: f64) -> Vec<f64> {
        self.x_plus
            .iter()
            .zip(&self.x_minus)
            .map(|(p, m)| gamma_hat * (p - m))
            .collect()
    }

    /// `y + sum(x+ + x-)`; equals 1 up to rounding at every iterate.
    pub fn simplex_sum(&self) -> f64 {
        self.y + self.x_plus.iter().sum::<f64>() + self.x_minus.iter().sum::<f64>()
    }

    /// One multiplicative update along gradient direction `v` with step
    /// `eta`, then renormalization. Coordinates that underflow to zero stay
    /// zero; the slack prevents total collapse.
    pub fn step(&mut self, eta: f64, v: &[f64]) {
        let mut z = self.y;
        for (xp, &vk) in self.x_plus.iter_mut().zip(v) {
            *xp *= (-eta * vk).exp();
            z += *xp;
        }
        for (xm, &vk) in self.x_minus.iter_mut().zip(v) {
            *xm *= (eta * vk).exp();
            z += *xm;
        }
        for xp in self.x_plus.iter_mut() {
            *xp /= z;
        }
        for xm in self.x_minus.iter_mut() {
            *xm /= z;
        }
        self.y /= z;
    }
}

/// Iteration count guaranteeing an eps-optimal solution:
/// `T = ceil(6 eps^-2 ln(2 dim + 1))`. The guarantee is stated for
/// `0 < eps <= 1`.
pub fn iterations_for_epsilon(epsilon: f64, dim: usize) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::EpsilonOutOfRange(epsilon));
    }
    let t = 6.0 * epsilon.powi(-2) * (2.0 * dim as f64 + 1.0).ln();
    Ok(t.ceil() as usize)
}

/// Step size at iteration `t` (1-based): `sqrt(2 ln(2 dim + 1) / t)`, the
/// closed form of the update `eta_{t+1} = eta_t sqrt(t / (t+1))`.
pub fn step_size(dim: usize, t: usize) -> f64 {
    (2.0 * (2.0 * dim as f64 + 1.0).ln() / t as f64).sqrt()
}

/// Solve settings. `epsilon` drives both the iteration count and the
/// optional plateau detector; `max_iterations` overrides the guaranteed
/// count (voiding the guarantee); `early_stop` enables the plateau detector
/// (best value unchanged by `epsilon/10` over the last 20% of iterations)
/// and is off by default so the proven bound is the default behavior.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub epsilon: f64,
    pub max_iterations: Option<usize>,
    pub early_stop: bool,
}

impl SolverOptions {
    pub fn new(epsilon: f64) -> Self {
        SolverOptions {
            epsilon,
            max_iterations: None,
            early_stop: false,
        }
    }
}

/// Outcome of one per-node solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverReport {
    /// Returned estimate (projected when the constraint set requires it).
    pub theta: Vec<f64>,
    /// Best objective value among the iterates (unchanged by projection).
    pub best_value: f64,
    pub best_log_value: f64,
    /// 1-based index of the best iterate.
    pub best_iteration: usize,
    /// Iterations actually run.
    pub iterations: usize,
    pub eta_first: f64,
    pub eta_last: f64,
    /// l1 norm of the returned estimate.
    pub l1_norm: f64,
    /// Projection can push the l1 norm above the prior; recorded, never
    /// enforced.
    pub l1_exceeds_prior: bool,
    /// Largest zero-sum violation of the returned estimate.
    pub constraint_residual: f64,
    pub solve_seconds: f64,
    pub projection_seconds: f64,
}

/// Core loop, ignoring the problem's constraint descriptor (the l1 ball is
/// the only active constraint here).
fn descend(problem: &LocalProblem, options: &SolverOptions) -> Result<SolverReport> {
    let start = Instant::now();
    let dim = problem.dimension();
    let gamma_hat = problem.gamma_hat();
    if dim == 0 {
        return Ok(SolverReport {
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
            solve_seconds: start.elapsed().as_secs_f64(),
            projection_seconds: 0.0,
        });
    }
    let total = match options.max_iterations {
        Some(t) => {
            if t == 0 {
                return Err(Error::InvalidConfig("max iterations must be positive".into()));
            }
            iterations_for_epsilon(options.epsilon, dim)?;
            t
        }
        None => iterations_for_epsilon(options.epsilon, dim)?,
    };
    let mut state = SimplexState::initial(dim);
    let mut eta = step_size(dim, 1);
    let eta_first = eta;
    let mut v = vec![0.0; dim];
    let mut best_value = f64::INFINITY;
    let mut best_state = state.clone();
    let mut best_iteration = 0usize;
    // Plateau detector bookkeeping.
    let mut mark_value = f64::INFINITY;
    let mut mark_iteration = 0usize;
    let mut ran = 0usize;
    for t in 1..=total {
        ran = t;
        let theta = state.theta(gamma_hat);
        let value = problem.value_and_log_gradient(&theta, &mut v);
        if !value.is_finite() {
            return Err(Error::SolverFailure(format!(
                "objective became non-finite at iteration {t} (vertex {})",
                problem.vertex()
            )));
        }
        if value < best_value {
            best_value = value;
            best_state = state.clone();
            best_iteration = t;
        }
        if options.early_stop {
            if mark_value - best_value >= options.epsilon / 10.0 {
                mark_value = best_value;
                mark_iteration = t;
            }
            if t >= 50 && (t - mark_iteration) * 5 >= t {
                break;
            }
        }
        state.step(eta, &v);
        eta *= (t as f64 / (t as f64 + 1.0)).sqrt();
    }
    let theta = best_state.theta(gamma_hat);
    let l1: f64 = theta.iter().map(|x| x.abs()).sum();
    Ok(SolverReport {
        best_log_value: best_value.ln(),
        best_value,
        theta,
        best_iteration,
        iterations: ran,
        eta_first,
        eta_last: step_size(dim, ran.max(1)),
        l1_norm: l1,
        l1_exceeds_prior: l1 > gamma_hat * (1.0 + 1e-12),
        constraint_residual: 0.0,
        solve_seconds: start.elapsed().as_secs_f64(),
        projection_seconds: 0.0,
    })
}

/// Entropic descent for the l1-ball-only problem. Rejects problems carrying
/// additional constraints; those go through [`grise`].
pub fn entropic_descent(problem: &LocalProblem, options: &SolverOptions) -> Result<SolverReport> {
    if !problem.constraints().is_trivial() {
        return Err(Error::UnsupportedConstraint(
            "entropic descent solves the l1-ball problem; use grise for constrained problems"
                .into(),
        ));
    }
    descend(problem, options)
}

/// The per-node estimator: entropic descent, then (for parametrically
/// complete constraint sets) the equi-cost projection onto the constraints.
/// The projected estimate has the same objective value, so eps-optimality
/// carries over.
pub fn grise(problem: &LocalProblem, options: &SolverOptions) -> Result<SolverReport> {
    match problem.constraints() {
        ConstraintDescriptor::Trivial => descend(problem, options),
        ConstraintDescriptor::CustomProjector(None) => Err(Error::UnsupportedConstraint(
            "custom projector not registered".into(),
        )),
        descriptor => {
            let mut report = descend(problem, options)?;
            let begin = Instant::now();
            report.theta = project(&report.theta, descriptor)?;
            report.projection_seconds = begin.elapsed().as_secs_f64();
            report.l1_norm = report.theta.iter().map(|x| x.abs()).sum();
            report.l1_exceeds_prior = report.l1_norm > problem.gamma_hat() * (1.0 + 1e-12);
            report.constraint_residual = zero_sum_residual(&report.theta, descriptor);
            Ok(report)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Alphabet, BasisKind, Factor, FactorGraph, GraphicalModel, ModelFamily};
    use crate::sampler::{sample_exact, Provenance, SampleSet};

    fn two_node_problem(n: usize, seed: u64) -> LocalProblem {
        let graph = FactorGraph::new(
            2,
            vec![
                Factor::monomial(vec![0]).unwrap(),
                Factor::monomial(vec![0, 1]).unwrap(),
            ],
        )
        .unwrap();
        let family =
            ModelFamily::new(graph, Alphabet::uniform(2, 2).unwrap(), BasisKind::Monomial).unwrap();
        let model = GraphicalModel::new(family.clone(), vec![0.3, 0.5]).unwrap();
        let samples = sample_exact(&model, n, seed, None).unwrap();
        LocalProblem::from_samples(&family, &samples, 0, 1.0, ConstraintDescriptor::Trivial)
            .unwrap()
    }

    #[test]
    fn iteration_counts_match_formula() {
        assert_eq!(iterations_for_epsilon(0.1, 10).unwrap(), 1827);
        assert_eq!(iterations_for_epsilon(1.0, 1).unwrap(), 7);
        assert_eq!(iterations_for_epsilon(0.5, 4).unwrap(), 53);
        assert!(iterations_for_epsilon(0.0, 3).is_err());
        assert!(iterations_for_epsilon(1.5, 3).is_err());
        assert!(iterations_for_epsilon(-0.1, 3).is_err());
    }

    #[test]
    fn initial_state_and_step_size() {
        let state = SimplexState::initial(1);
        assert_eq!(state.x_plus(), &[1.0 / 3.0]);
        assert_eq!(state.x_minus(), &[1.0 / 3.0]);
        assert_eq!(state.slack(), 1.0 / 3.0);
        assert!((step_size(1, 1) - 1.4823038073675112).abs() < 1e-14);
    }

    #[test]
    fn step_size_closed_form_matches_recursion() {
        let dim = 5;
        let mut eta = step_size(dim, 1);
        for t in 1..200usize {
            assert!((eta - step_size(dim, t)).abs() < 1e-12);
            eta *= (t as f64 / (t as f64 + 1.0)).sqrt();
        }
    }

    #[test]
    fn simplex_preserved_under_random_steps() {
        let mut state = SimplexState::initial(4);
        for t in 1..500usize {
            let v: Vec<f64> = (0..4)
                .map(|j| ((t * 31 + j * 17) % 13) as f64 / 13.0 - 0.5)
                .collect();
            state.step(step_size(4, t), &v);
            assert!((state.simplex_sum() - 1.0).abs() < 1e-12);
            assert!(state.x_plus().iter().all(|&x| x >= 0.0));
            assert!(state.x_minus().iter().all(|&x| x >= 0.0));
            assert!(state.slack() >= 0.0);
            let theta = state.theta(2.5);
            let l1: f64 = theta.iter().map(|x| x.abs()).sum();
            assert!(l1 <= 2.5 + 1e-12);
        }
    }

    #[test]
    fn zero_design_is_fixed_point() {
        // A constant custom factor has g == 0, so the gradient vanishes and
        // the state never moves; the estimate is exactly zero.
        let graph = FactorGraph::new(
            2,
            vec![Factor::custom(vec![0, 1], vec![0.25; 4]).unwrap()],
        )
        .unwrap();
        let family =
            ModelFamily::new(graph, Alphabet::uniform(2, 2).unwrap(), BasisKind::Custom).unwrap();
        let samples = SampleSet::new(
            vec![0, 1, 1, 0, 1, 1],
            Alphabet::uniform(2, 2).unwrap(),
            Provenance::external("test"),
        )
        .unwrap();
        let problem =
            LocalProblem::from_samples(&family, &samples, 0, 1.0, ConstraintDescriptor::Trivial)
                .unwrap();
        let report = entropic_descent(&problem, &SolverOptions::new(0.5)).unwrap();
        assert_eq!(report.theta, vec![0.0]);
        assert_eq!(report.best_value, 1.0);
    }

    #[test]
    fn deterministic_reports() {
        let problem = two_node_problem(500, 3);
        let a = entropic_descent(&problem, &SolverOptions::new(0.2)).unwrap();
        let b = entropic_descent(&problem, &SolverOptions::new(0.2)).unwrap();
        // identical up to wall-clock timings
        assert_eq!(a.theta, b.theta);
        assert_eq!(a.best_value, b.best_value);
        assert_eq!(a.best_iteration, b.best_iteration);
        assert_eq!(a.iterations, b.iterations);
    }

    #[test]
    fn achieves_epsilon_against_grid_reference() {
        let problem = two_node_problem(10_000, 7);
        let epsilon = 0.05;
        let report = entropic_descent(&problem, &SolverOptions::new(epsilon)).unwrap();
        let (_, ref_value) = crate::testkit::grid_reference(&problem, 30);
        assert!(report.best_value <= ref_value + epsilon);
        assert!(report.l1_norm <= 1.0 + 1e-12);
        // the returned value really is the objective at the returned theta
        let check = problem.evaluate(&report.theta);
        assert!((check.value - report.best_value).abs() < 1e-12);
    }

    #[test]
    fn grise_equals_entropic_descent_on_trivial_constraints() {
        let problem = two_node_problem(800, 5);
        let options = SolverOptions::new(0.1);
        let a = grise(&problem, &options).unwrap();
        let b = entropic_descent(&problem, &options).unwrap();
        assert_eq!(a.theta, b.theta);
        assert_eq!(a.best_value, b.best_value);
        assert_eq!(a.best_iteration, b.best_iteration);
    }

    #[test]
    fn grise_projects_indicator_solutions() {
        // q = 2 single-edge indicator family, all four assignments present.
        let mut factors = Vec::new();
        for s in 0..4u8 {
            factors.push(Factor::indicator(vec![0, 1], vec![s / 2, s % 2]).unwrap());
        }
        let graph = FactorGraph::new(2, factors).unwrap();
        let family =
            ModelFamily::new(graph, Alphabet::uniform(2, 2).unwrap(), BasisKind::Indicator)
                .unwrap();
        // A zero-sum truth table: diag(+t, -t, -t, +t) pattern.
        let t = 0.4;
        let model =
            GraphicalModel::new(family.clone(), vec![t, -t, -t, t]).unwrap();
        let samples = sample_exact(&model, 4000, 13, None).unwrap();
        let constraints =
            ConstraintDescriptor::indicator_zero_sum(&family, family.graph().incident(0)).unwrap();
        let problem =
            LocalProblem::from_samples(&family, &samples, 0, 2.0, constraints).unwrap();
        let report = grise(&problem, &SolverOptions::new(0.1)).unwrap();
        assert!(report.constraint_residual < 1e-10);
        // equi-cost: objective unchanged by the projection
        let value_at_projected = problem.evaluate(&report.theta).value;
        assert!((value_at_projected - report.best_value).abs() < 1e-12);
    }

    #[test]
    fn unregistered_custom_projector_rejected() {
        let graph = FactorGraph::new(
            2,
            vec![Factor::custom(vec![0, 1], vec![0.5, -0.5, -0.5, 0.5]).unwrap()],
        )
        .unwrap();
        let family =
            ModelFamily::new(graph, Alphabet::uniform(2, 2).unwrap(), BasisKind::Custom).unwrap();
        let samples = SampleSet::new(
            vec![0, 1],
            Alphabet::uniform(2, 2).unwrap(),
            Provenance::external("test"),
        )
        .unwrap();
        let problem = LocalProblem::from_samples(
            &family,
            &samples,
            0,
            1.0,
            ConstraintDescriptor::CustomProjector(None),
        )
        .unwrap();
        assert!(grise(&problem, &SolverOptions::new(0.5)).is_err());
        assert!(entropic_descent(&problem, &SolverOptions::new(0.5)).is_err());
    }

    #[test]
    fn near_uniform_model_estimates_near_zero() {
        let graph = FactorGraph::new(
            2,
            vec![
                Factor::monomial(vec![0]).unwrap(),
                Factor::monomial(vec![0, 1]).unwrap(),
            ],
        )
        .unwrap();
        let family =
            ModelFamily::new(graph, Alphabet::uniform(2, 2).unwrap(), BasisKind::Monomial).unwrap();
        let model = GraphicalModel::new(family.clone(), vec![0.0, 0.0]).unwrap();
        let samples = sample_exact(&model, 20_000, 29, None).unwrap();
        let problem =
            LocalProblem::from_samples(&family, &samples, 0, 1.0, ConstraintDescriptor::Trivial)
                .unwrap();
        let report = entropic_descent(&problem, &SolverOptions::new(0.02)).unwrap();
        assert!(report.theta.iter().all(|t| t.abs() < 0.1));
        assert!((report.best_value - 1.0).abs() < 0.05);
    }

    #[test]
    fn early_stop_plateaus() {
        let problem = two_node_problem(200, 19);
        let mut options = SolverOptions::new(0.05);
        options.early_stop = true;
        let stopped = grise(&problem, &options).unwrap();
        options.early_stop = false;
        let full = grise(&problem, &options).unwrap();
        assert!(stopped.iterations <= full.iterations);
        // plateau exit still close to the full answer
        assert!((stopped.best_value - full.best_value).abs() <= options.epsilon);
    }
}
