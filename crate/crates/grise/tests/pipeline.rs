//! Cross-module and file-level integration: CLI pipelines, format round
//! trips, replayability, and the statistical consistency checks that tie
//! the empirical objective to its population limit.

use std::fs;
use std::path::PathBuf;

use grise::basis::BasisTables;
use grise::generate::{generate_model, pairwise_family, GeneratorSpec, Topology};
use grise::giso::LocalProblem;
use grise::io;
use grise::model::{
    next_config, Alphabet, BasisKind, Factor, FactorGraph, GraphicalModel, ModelFamily,
};
use grise::oracle::{enumerate_distribution, fisher_gram, population_giso};
use grise::projection::ConstraintDescriptor;
use grise::sampler::{conditional_distribution, sample_exact};
use grise::testkit;

fn workdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("grise-pipeline-{name}-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run_cli(args: &[&str]) -> grise::Result<()> {
    let mut argv = vec!["grise"];
    argv.extend_from_slice(args);
    grise::cli::run_from(argv)
}

#[test]
fn gen_sample_learn_eval_pipeline() {
    let dir = workdir("pipeline");
    let model = dir.join("model.json");
    let fam = dir.join("family.json");
    let samples = dir.join("samples.txt");
    let report = dir.join("report.json");
    let metrics = dir.join("metrics.json");

    // Truth: 4-chain without fields, embedded in the full pairwise family.
    run_cli(&[
        "gen-model",
        "--topology",
        "chain",
        "-p",
        "4",
        "--no-fields",
        "--coupling-range",
        "0.5,0.7",
        "--seed",
        "3",
        "-o",
        model.to_str().unwrap(),
    ])
    .unwrap();
    // Family file: same truth embedded into all pairs + fields.
    let truth = io::read_model(&model).unwrap();
    let family = pairwise_family(4, 2, BasisKind::Monomial, true).unwrap();
    let embedded = grise::generate::embed_in_family(&truth, &family).unwrap();
    io::write_model(&fam, &embedded).unwrap();

    run_cli(&[
        "sample",
        "--model",
        fam.to_str().unwrap(),
        "-n",
        "20000",
        "--seed",
        "9",
        "-o",
        samples.to_str().unwrap(),
    ])
    .unwrap();

    run_cli(&[
        "learn",
        "--samples",
        samples.to_str().unwrap(),
        "--family-file",
        fam.to_str().unwrap(),
        "--mode",
        "suprise",
        "--alpha",
        "0.4",
        "--gamma-hat",
        "2.5",
        "--epsilon",
        "0.02",
        "-o",
        report.to_str().unwrap(),
    ])
    .unwrap();

    run_cli(&[
        "eval",
        "--truth",
        fam.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
        "--chi",
        "2",
        "-o",
        metrics.to_str().unwrap(),
    ])
    .unwrap();

    let metrics_json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&metrics).unwrap()).unwrap();
    assert_eq!(metrics_json["f1"], 1.0);
    assert!(metrics_json["linf2_error"].as_f64().unwrap() < 0.2);
    // every stage wrote its manifest
    for path in [&model, &samples, &report, &metrics] {
        let manifest = PathBuf::from(format!("{}.manifest.json", path.display()));
        assert!(manifest.exists(), "missing {}", manifest.display());
    }
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn learn_reports_are_replayable() {
    let dir = workdir("replay");
    let fam = dir.join("family.json");
    let samples = dir.join("samples.txt");
    let truth_spec = GeneratorSpec {
        topology: Topology::Chain,
        p: 3,
        q: 2,
        basis: BasisKind::Monomial,
        coupling_range: (0.5, 0.6),
        field_range: (0.1, 0.2),
        fields: true,
        seed: 5,
    };
    let truth = generate_model(&truth_spec).unwrap();
    io::write_model(&fam, &truth).unwrap();
    io::write_samples(&samples, &sample_exact(&truth, 5000, 2, None).unwrap()).unwrap();
    let out1 = dir.join("a.json");
    let out2 = dir.join("b.json");
    for out in [&out1, &out2] {
        run_cli(&[
            "learn",
            "--samples",
            samples.to_str().unwrap(),
            "--family-file",
            fam.to_str().unwrap(),
            "--mode",
            "suprise",
            "--alpha",
            "0.3",
            "--gamma-hat",
            "2.0",
            "--epsilon",
            "0.05",
            "-o",
            out.to_str().unwrap(),
        ])
        .unwrap();
    }
    assert_eq!(
        fs::read_to_string(&out1).unwrap(),
        fs::read_to_string(&out2).unwrap()
    );
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn gen_model_same_seed_byte_identical() {
    let dir = workdir("genrepro");
    let a = dir.join("a.json");
    let b = dir.join("b.json");
    for out in [&a, &b] {
        run_cli(&[
            "gen-model",
            "--topology",
            "erdos",
            "--degree",
            "2.5",
            "-p",
            "8",
            "--seed",
            "11",
            "-o",
            out.to_str().unwrap(),
        ])
        .unwrap();
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn model_file_write_load_write_fixpoint() {
    let dir = workdir("fixpoint");
    let path = dir.join("m.json");
    let spec = GeneratorSpec {
        topology: Topology::Grid,
        p: 4,
        q: 3,
        basis: BasisKind::Indicator,
        coupling_range: (0.3, 0.9),
        field_range: (0.05, 0.3),
        fields: true,
        seed: 17,
    };
    let model = generate_model(&spec).unwrap();
    io::write_model(&path, &model).unwrap();
    let first = fs::read(&path).unwrap();
    let reloaded = io::read_model(&path).unwrap();
    io::write_model(&path, &reloaded).unwrap();
    assert_eq!(first, fs::read(&path).unwrap());
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn grise_mode_single_node_and_validation_errors() {
    let dir = workdir("grisemode");
    let fam = dir.join("family.json");
    let samples = dir.join("samples.txt");
    let out = dir.join("node.json");
    let family = pairwise_family(3, 2, BasisKind::Monomial, true).unwrap();
    let mut theta = vec![0.0; family.graph().factor_count()];
    theta[3] = 0.6; // edge (0,1)
    let truth = GraphicalModel::new(family.clone(), theta).unwrap();
    io::write_model(&fam, &truth).unwrap();
    io::write_samples(&samples, &sample_exact(&truth, 8000, 4, None).unwrap()).unwrap();

    run_cli(&[
        "learn",
        "--samples",
        samples.to_str().unwrap(),
        "--family-file",
        fam.to_str().unwrap(),
        "--mode",
        "grise",
        "--node",
        "1",
        "--gamma-hat",
        "2.0",
        "--epsilon",
        "0.02",
        "-o",
        out.to_str().unwrap(),
    ])
    .unwrap();
    let node: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(node["vertex"], 1);
    let edge_estimate = node["parameters"]
        .as_array()
        .unwrap()
        .iter()
        .find(|p| p["scope"] == serde_json::json!([1, 2]))
        .unwrap()["theta"]
        .as_f64()
        .unwrap();
    assert!((edge_estimate - 0.6).abs() < 0.15, "estimate {edge_estimate}");

    // suprise mode without --alpha is a validation error with exit code 3
    let err = run_cli(&[
        "learn",
        "--samples",
        samples.to_str().unwrap(),
        "--family-file",
        fam.to_str().unwrap(),
        "--mode",
        "suprise",
        "--gamma-hat",
        "2.0",
        "--epsilon",
        "0.02",
        "-o",
        out.to_str().unwrap(),
    ])
    .unwrap_err();
    assert_eq!(err.exit_code(), 3);
    // grise mode without --node likewise
    let err = run_cli(&[
        "learn",
        "--samples",
        samples.to_str().unwrap(),
        "--family-file",
        fam.to_str().unwrap(),
        "--mode",
        "grise",
        "--gamma-hat",
        "2.0",
        "--epsilon",
        "0.02",
        "-o",
        out.to_str().unwrap(),
    ])
    .unwrap_err();
    assert_eq!(err.exit_code(), 3);
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn learn_aborts_on_denormalized_family() {
    let dir = workdir("denorm");
    let fam = dir.join("family.json");
    let samples = dir.join("samples.txt");
    // custom factor with |g| > 1
    let graph = FactorGraph::new(
        2,
        vec![Factor::custom(vec![0, 1], vec![3.0, -3.0, -3.0, 3.0]).unwrap()],
    )
    .unwrap();
    let family =
        ModelFamily::new(graph, Alphabet::uniform(2, 2).unwrap(), BasisKind::Custom).unwrap();
    let truth = GraphicalModel::new(family.clone(), vec![0.1]).unwrap();
    io::write_model(&fam, &truth).unwrap();
    io::write_samples(&samples, &sample_exact(&truth, 100, 1, None).unwrap()).unwrap();
    let err = run_cli(&[
        "learn",
        "--samples",
        samples.to_str().unwrap(),
        "--family-file",
        fam.to_str().unwrap(),
        "--mode",
        "grise",
        "--node",
        "1",
        "--gamma-hat",
        "1.0",
        "--epsilon",
        "0.1",
        "-o",
        dir.join("out.json").to_str().unwrap(),
    ])
    .unwrap_err();
    assert_eq!(err.exit_code(), 3);
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn npc_and_oracle_commands() {
    let dir = workdir("diag");
    let fam = dir.join("model.json");
    let spec = GeneratorSpec {
        topology: Topology::Chain,
        p: 3,
        q: 2,
        basis: BasisKind::Monomial,
        coupling_range: (0.4, 0.6),
        field_range: (0.1, 0.2),
        fields: true,
        seed: 23,
    };
    io::write_model(&fam, &generate_model(&spec).unwrap()).unwrap();
    let npc_out = dir.join("npc.json");
    run_cli(&[
        "npc",
        "--model",
        fam.to_str().unwrap(),
        "-o",
        npc_out.to_str().unwrap(),
    ])
    .unwrap();
    let npc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&npc_out).unwrap()).unwrap();
    for v in 1..=3 {
        let entry = &npc[v.to_string()];
        assert!((entry["rho_exact"].as_f64().unwrap() - 1.0).abs() < 1e-10);
        assert_eq!(entry["degenerate"], false);
        assert_eq!(entry["min_clique"], serde_json::json!([v]));
    }

    let oracle_out = dir.join("dist.json");
    run_cli(&[
        "oracle",
        "--model",
        fam.to_str().unwrap(),
        "-o",
        oracle_out.to_str().unwrap(),
    ])
    .unwrap();
    let dist: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&oracle_out).unwrap()).unwrap();
    let probs = dist["probs"].as_array().unwrap();
    assert_eq!(probs.len(), 8);
    let total: f64 = probs.iter().map(|p| p.as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12);
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn conditional_invariance_between_parameterizations() {
    // Conditionals computed from raw f tables equal conditionals computed
    // from locally centered g tables: the centering terms cancel.
    let (family, theta) = testkit::degenerate_pair_family();
    let model = GraphicalModel::new(family, theta).unwrap();
    let tables = BasisTables::build(model.family()).unwrap();
    let sizes = model.alphabet().sizes().to_vec();
    let mut config = vec![0u8; 2];
    loop {
        for u in 0..2usize {
            let via_f = conditional_distribution(&model, u, &config).unwrap();
            // independent route: g-energy conditional
            let q = model.alphabet().size(u);
            let mut logits = vec![0.0; q];
            for (b, slot) in logits.iter_mut().enumerate() {
                let mut cfg = config.clone();
                cfg[u] = b as u8;
                let mut energy = 0.0;
                for &k in model.graph().incident(u) {
                    let factor = model.graph().factor(k);
                    let ft = tables.factor(k);
                    let pos = factor.scope_position(u).unwrap();
                    let sub: Vec<u8> = factor.scope().iter().map(|&v| cfg[v]).collect();
                    energy += model.theta()[k] * ft.g(pos)[ft.config_index(&sub)];
                }
                *slot = energy;
            }
            let max = logits.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x));
            let z: f64 = logits.iter().map(|&x| (x - max).exp()).sum();
            for (b, &logit) in logits.iter().enumerate() {
                let via_g = (logit - max).exp() / z;
                assert!(
                    (via_f[b] - via_g).abs() < 1e-12,
                    "config {config:?} vertex {u} symbol {b}"
                );
            }
        }
        if !next_config(&mut config, &sizes) {
            break;
        }
    }
}

#[test]
fn enumerated_conditionals_match_sampler() {
    // P(sigma_u | rest) from the enumerated joint equals the sampler's
    // conditional everywhere.
    let family = pairwise_family(3, 2, BasisKind::Monomial, true).unwrap();
    let mut theta = vec![0.0; family.graph().factor_count()];
    theta[0] = 0.3;
    theta[3] = 0.6;
    theta[5] = -0.5;
    let model = GraphicalModel::new(family, theta).unwrap();
    let dist = enumerate_distribution(&model, None).unwrap();
    let sizes = model.alphabet().sizes().to_vec();
    let mut config = vec![0u8; 3];
    loop {
        for u in 0..3usize {
            let cond = conditional_distribution(&model, u, &config).unwrap();
            // joint-based conditional
            let mut joint = Vec::new();
            for b in 0..2u8 {
                let mut cfg = config.clone();
                cfg[u] = b;
                joint.push(dist.probs()[dist.index_of(&cfg)]);
            }
            let total: f64 = joint.iter().sum();
            for (b, &j) in joint.iter().enumerate() {
                assert!((cond[b] - j / total).abs() < 1e-12);
            }
        }
        if !next_config(&mut config, &sizes) {
            break;
        }
    }
}

#[test]
fn binary_exit_codes() {
    // Drive the installed binary itself: validation failures exit 3,
    // successes exit 0.
    let exe = env!("CARGO_BIN_EXE_grise");
    let dir = workdir("binary");
    let model = dir.join("model.json");
    let status = std::process::Command::new(exe)
        .args([
            "gen-model",
            "--topology",
            "chain",
            "-p",
            "3",
            "--seed",
            "1",
            "-o",
            model.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));

    let status = std::process::Command::new(exe)
        .args(["oracle", "--model", "/nonexistent.json", "-o", "/dev/null"])
        .stderr(std::process::Stdio::null())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));

    // grid with a non-square p is a validation failure
    let status = std::process::Command::new(exe)
        .args([
            "gen-model",
            "--topology",
            "grid",
            "-p",
            "7",
            "--seed",
            "1",
            "-o",
            dir.join("bad.json").to_str().unwrap(),
        ])
        .stderr(std::process::Stdio::null())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn empirical_objective_converges_to_population() {
    // |S_n - S_inf| at the true parameters shrinks like n^{-1/2}: medians
    // over 20 seeds decrease monotonically across n = 1e3, 1e4, 1e5.
    let family = pairwise_family(3, 2, BasisKind::Monomial, true).unwrap();
    let mut theta = vec![0.0; family.graph().factor_count()];
    theta[3] = 0.5;
    theta[5] = -0.4;
    let truth = GraphicalModel::new(family.clone(), theta).unwrap();
    let theta_u = testkit::truth_subvector(&truth, 0);
    let (population_value, _) = population_giso(&truth, 0, &theta_u, None).unwrap();
    let mut medians = Vec::new();
    for &n in &[1000usize, 10_000, 100_000] {
        let mut gaps: Vec<f64> = (0..20u64)
            .map(|seed| {
                let samples = sample_exact(&truth, n, 1000 + seed, None).unwrap();
                let problem = LocalProblem::from_samples(
                    &family,
                    &samples,
                    0,
                    2.0,
                    ConstraintDescriptor::Trivial,
                )
                .unwrap();
                (problem.evaluate(&theta_u).value - population_value).abs()
            })
            .collect();
        gaps.sort_by(|a, b| a.partial_cmp(b).unwrap());
        medians.push(gaps[10]);
    }
    assert!(
        medians[0] > medians[1] && medians[1] > medians[2],
        "medians {medians:?}"
    );
}

#[test]
fn gram_concentration_at_large_n() {
    // max-entry deviation between the empirical and exact Grams below 0.02
    // at n = 1e5.
    let family = pairwise_family(4, 2, BasisKind::Monomial, true).unwrap();
    let mut theta = vec![0.0; family.graph().factor_count()];
    theta[4] = 0.5; // (0,1)
    theta[6] = -0.4; // (0,3)
    theta[8] = 0.3; // (1,3)
    let truth = GraphicalModel::new(family.clone(), theta).unwrap();
    let samples = sample_exact(&truth, 100_000, 31, None).unwrap();
    for vertex in 0..4 {
        let problem = LocalProblem::from_samples(
            &family,
            &samples,
            vertex,
            2.0,
            ConstraintDescriptor::Trivial,
        )
        .unwrap();
        let empirical = problem.weighted_gram();
        let exact = fisher_gram(&truth, vertex, None).unwrap();
        let mut worst = 0.0f64;
        for (er, xr) in empirical.iter().zip(&exact) {
            for (e, x) in er.iter().zip(xr) {
                worst = worst.max((e - x).abs());
            }
        }
        assert!(worst < 0.02, "vertex {vertex}: gram deviation {worst}");
    }
}

#[test]
fn exact_sampler_frequencies_match_enumeration() {
    let family = pairwise_family(3, 2, BasisKind::Monomial, false).unwrap();
    let truth = GraphicalModel::new(family, vec![0.0, 0.0, 0.0]).unwrap();
    let dist = enumerate_distribution(&truth, None).unwrap();
    let n = 1_000_000usize;
    let samples = sample_exact(&truth, n, 13, None).unwrap();
    let mut counts = vec![0u64; 8];
    for row in samples.rows() {
        counts[dist.index_of(row)] += 1;
    }
    for &c in &counts {
        let freq = c as f64 / n as f64;
        assert!((freq - 0.125).abs() < 0.002, "frequency {freq}");
    }
}
