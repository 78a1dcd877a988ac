//! End-to-end structure recovery on a 3x3 grid: generate a random-sign
//! grid model, draw exact samples, run the multi-round learner over the
//! full pairwise candidate family, and score the result.
//!
//! Usage: structure_recovery [seed] [n] [epsilon]

use std::time::Instant;

use grise::generate::{embed_in_family, generate_model, pairwise_family, GeneratorSpec, Topology};
use grise::model::BasisKind;
use grise::sampler::sample_exact;
use grise::suprise::{evaluate_estimate, run_suprise, SupriseConfig};

fn main() -> grise::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);
    let n: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(50_000);
    let epsilon: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0.004);

    // Truth: 3x3 grid, coupling magnitudes in [0.4, 0.7], random signs, no
    // fields. The learner searches all 36 pairs plus 9 fields.
    let truth_spec = GeneratorSpec {
        topology: Topology::Grid,
        p: 9,
        q: 2,
        basis: BasisKind::Monomial,
        coupling_range: (0.4, 0.7),
        field_range: (0.0, 0.0),
        fields: false,
        seed,
    };
    let sparse_truth = generate_model(&truth_spec)?;
    let family = pairwise_family(9, 2, BasisKind::Monomial, true)?;
    let truth = embed_in_family(&sparse_truth, &family)?;
    println!("truth cliques: {:?}", truth.structure());

    let t0 = Instant::now();
    let samples = sample_exact(&truth, n, seed.wrapping_add(1000), None)?;
    println!("sampled n = {n} in {:.2}s", t0.elapsed().as_secs_f64());

    let config = SupriseConfig {
        alpha: 0.4,
        gamma_hat: 3.0,
        gamma: 2.8,
        rho_npc: None,
        epsilon_override: Some(epsilon),
        max_iterations: None,
        early_stop: false,
    };
    let t1 = Instant::now();
    let report = run_suprise(&family, &samples, &config)?;
    println!(
        "learned in {:.2}s (epsilon = {epsilon}, {} solves)",
        t1.elapsed().as_secs_f64(),
        report.solves.len()
    );
    println!("recovered cliques: {:?}", report.cliques);

    let metrics = evaluate_estimate(&truth, &report, None)?;
    println!(
        "precision {:.3}  recall {:.3}  f1 {:.3}  linf2 {:.4}  l2 {:.4}",
        metrics.precision, metrics.recall, metrics.f1, metrics.linf2_error, metrics.l2_error
    );
    Ok(())
}
