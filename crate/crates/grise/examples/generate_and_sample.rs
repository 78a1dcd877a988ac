//! Generate a random chain model, draw samples with both samplers, and
//! write the model and sample files the CLI commands consume.
//!
//! Usage: generate_and_sample [seed]

use grise::generate::{generate_model, GeneratorSpec, Topology};
use grise::io;
use grise::model::{interaction_strength_bound, BasisKind};
use grise::sampler::{sample_exact, sample_gibbs, GibbsConfig};

fn main() -> grise::Result<()> {
    let seed: u64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(7);

    let spec = GeneratorSpec {
        topology: Topology::Chain,
        p: 5,
        q: 2,
        basis: BasisKind::Monomial,
        coupling_range: (0.4, 0.7),
        field_range: (0.1, 0.3),
        fields: true,
        seed,
    };
    let model = generate_model(&spec)?;
    println!(
        "generated chain: {} vertices, {} factors",
        model.graph().vertex_count(),
        model.graph().factor_count()
    );

    let strength = interaction_strength_bound(&model, None)?;
    println!(
        "interaction strength gamma = {:.4} (exact: {})",
        strength.global, strength.exact
    );

    let exact = sample_exact(&model, 10_000, seed, None)?;
    let gibbs = sample_gibbs(
        &model,
        10_000,
        &GibbsConfig::defaults(model.graph().vertex_count(), seed),
    )?;

    // Compare a pair correlation between the two samplers.
    let corr = |s: &grise::sampler::SampleSet| -> f64 {
        s.rows()
            .map(|r| (2.0 * r[0] as f64 - 1.0) * (2.0 * r[1] as f64 - 1.0))
            .sum::<f64>()
            / s.len() as f64
    };
    println!(
        "E[s1 s2]: exact sampler {:.4}, gibbs sampler {:.4}",
        corr(&exact),
        corr(&gibbs)
    );

    let dir = std::env::temp_dir();
    let model_path = dir.join("grise-example-model.json");
    let samples_path = dir.join("grise-example-samples.txt");
    io::write_model(&model_path, &model)?;
    io::write_samples(&samples_path, &exact)?;
    println!("wrote {} and {}", model_path.display(), samples_path.display());
    Ok(())
}
