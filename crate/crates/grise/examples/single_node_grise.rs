//! One per-node solve, end to end: build the screening problem for a single
//! vertex, run entropic descent at a few accuracies, and watch the achieved
//! objective close in on a long-run reference.
//!
//! Usage: single_node_grise [n]

use grise::generate::{embed_in_family, generate_model, pairwise_family, GeneratorSpec, Topology};
use grise::giso::LocalProblem;
use grise::model::BasisKind;
use grise::projection::ConstraintDescriptor;
use grise::sampler::sample_exact;
use grise::solver::{entropic_descent, iterations_for_epsilon, SolverOptions};

fn main() -> grise::Result<()> {
    let n: usize = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(20_000);

    let spec = GeneratorSpec {
        topology: Topology::Chain,
        p: 5,
        q: 2,
        basis: BasisKind::Monomial,
        coupling_range: (0.4, 0.7),
        field_range: (0.1, 0.2),
        fields: true,
        seed: 3,
    };
    let truth = embed_in_family(
        &generate_model(&spec)?,
        &pairwise_family(5, 2, BasisKind::Monomial, true)?,
    )?;
    let samples = sample_exact(&truth, n, 99, None)?;

    let vertex = 2;
    let problem = LocalProblem::from_samples(
        truth.family(),
        &samples,
        vertex,
        3.0,
        ConstraintDescriptor::Trivial,
    )?;
    println!(
        "vertex {} problem: {} parameters, {} distinct rows from {n} samples",
        vertex + 1,
        problem.dimension(),
        problem.row_count()
    );

    let reference = entropic_descent(&problem, &SolverOptions::new(0.005))?;
    println!(
        "reference: S = {:.6} after {} iterations",
        reference.best_value, reference.iterations
    );
    for epsilon in [0.5, 0.1, 0.02] {
        let t = iterations_for_epsilon(epsilon, problem.dimension())?;
        let run = entropic_descent(&problem, &SolverOptions::new(epsilon))?;
        println!(
            "epsilon {epsilon:>4}: T = {t:>7}, S = {:.6}, gap = {:.2e} (within epsilon: {})",
            run.best_value,
            run.best_value - reference.best_value,
            run.best_value - reference.best_value <= epsilon,
        );
    }

    // Compare the estimate against the truth on this vertex.
    let run = entropic_descent(&problem, &SolverOptions::new(0.02))?;
    println!("theta_hat vs theta* per factor:");
    for (&k, est) in problem.factor_ids().iter().zip(&run.theta) {
        let scope: Vec<usize> = truth.graph().factor(k).scope().iter().map(|v| v + 1).collect();
        println!(
            "  scope {scope:?}: {est:+.4} (truth {:+.4})",
            truth.theta()[k]
        );
    }
    Ok(())
}
