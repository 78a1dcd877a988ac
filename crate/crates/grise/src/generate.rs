//! Reproducible synthetic model generators for the CLI, the examples and
//! the test suites. Couplings are drawn uniformly from `[a, b]` in magnitude
//! with a fair sign coin; indicator tables are drawn, centered to zero-sum,
//! and rescaled so the span l2 norm lands in the coupling range.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{
    Alphabet, BasisKind, Factor, FactorGraph, GraphicalModel, ModelFamily,
};
use crate::projection::project_indicator;

/// Edge layout of a generated model.
#[derive(Debug, Clone, PartialEq)]
pub enum Topology {
    /// Path `1-2-...-p`.
    Chain,
    /// Square grid; `p` must be a perfect square.
    Grid,
    /// Every pair independently with probability `degree / (p - 1)`.
    Erdos { degree: f64 },
}

/// Everything a generation run needs; same spec + same seed = same model.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub topology: Topology,
    pub p: usize,
    pub q: usize,
    pub basis: BasisKind,
    /// Coupling magnitudes are uniform in this closed interval.
    pub coupling_range: (f64, f64),
    /// Field magnitudes, when fields are included.
    pub field_range: (f64, f64),
    pub fields: bool,
    pub seed: u64,
}

impl GeneratorSpec {
    fn validate(&self) -> Result<()> {
        if self.p < 2 {
            return Err(Error::InvalidConfig("need at least 2 vertices".into()));
        }
        if self.q < 2 {
            return Err(Error::InvalidConfig("need alphabet size at least 2".into()));
        }
        if self.basis == BasisKind::Monomial && self.q != 2 {
            return Err(Error::InvalidConfig(
                "monomial basis requires q = 2".into(),
            ));
        }
        if self.basis == BasisKind::Custom {
            return Err(Error::InvalidConfig(
                "generation covers monomial and indicator bases".into(),
            ));
        }
        for (lo, hi) in [self.coupling_range, self.field_range] {
            if !(0.0 <= lo && lo <= hi) {
                return Err(Error::InvalidConfig(format!(
                    "bad magnitude range [{lo}, {hi}]"
                )));
            }
        }
        if let Topology::Grid = self.topology {
            let side = (self.p as f64).sqrt().round() as usize;
            if side * side != self.p {
                return Err(Error::InvalidConfig(format!(
                    "grid topology needs a square p, got {}",
                    self.p
                )));
            }
        }
        if let Topology::Erdos { degree } = self.topology {
            if !(degree > 0.0) {
                return Err(Error::InvalidConfig("erdos degree must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Edge list of a topology (sorted pairs, deterministic order).
pub fn topology_edges(
    topology: &Topology,
    p: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<(usize, usize)> {
    match topology {
        Topology::Chain => (0..p - 1).map(|i| (i, i + 1)).collect(),
        Topology::Grid => {
            let side = (p as f64).sqrt().round() as usize;
            let mut edges = Vec::new();
            for r in 0..side {
                for c in 0..side {
                    let v = r * side + c;
                    if c + 1 < side {
                        edges.push((v, v + 1));
                    }
                    if r + 1 < side {
                        edges.push((v, v + side));
                    }
                }
            }
            edges
        }
        Topology::Erdos { degree } => {
            let prob = (degree / (p as f64 - 1.0)).min(1.0);
            let mut edges = Vec::new();
            for a in 0..p {
                for b in (a + 1)..p {
                    if rng.gen::<f64>() < prob {
                        edges.push((a, b));
                    }
                }
            }
            edges
        }
    }
}

fn magnitude(rng: &mut ChaCha8Rng, range: (f64, f64)) -> f64 {
    if range.0 == range.1 {
        range.0
    } else {
        rng.gen_range(range.0..range.1)
    }
}

fn signed_magnitude(rng: &mut ChaCha8Rng, range: (f64, f64)) -> f64 {
    let m = magnitude(rng, range);
    if rng.gen::<bool>() {
        m
    } else {
        -m
    }
}

/// Zero-sum random table over a scope, rescaled to span l2 norm `target`.
fn random_centered_table(rng: &mut ChaCha8Rng, sizes: &[usize], target: f64) -> Vec<f64> {
    loop {
        let len: usize = sizes.iter().product();
        let raw: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let centered = project_indicator(&raw, sizes).expect("sizes match");
        let norm: f64 = centered.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-9 {
            return centered.iter().map(|x| x * target / norm).collect();
        }
    }
}

/// Generate a model: the factor list covers the drawn edges (plus fields by
/// default); parameters are drawn per the spec's ranges.
pub fn generate_model(spec: &GeneratorSpec) -> Result<GraphicalModel> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let edges = topology_edges(&spec.topology, spec.p, &mut rng);
    let alphabet = Alphabet::uniform(spec.p, spec.q)?;
    let mut factors = Vec::new();
    let mut theta = Vec::new();
    match spec.basis {
        BasisKind::Monomial => {
            if spec.fields {
                for v in 0..spec.p {
                    factors.push(Factor::monomial(vec![v])?);
                    theta.push(signed_magnitude(&mut rng, spec.field_range));
                }
            }
            for &(a, b) in &edges {
                factors.push(Factor::monomial(vec![a, b])?);
                theta.push(signed_magnitude(&mut rng, spec.coupling_range));
            }
        }
        BasisKind::Indicator => {
            if spec.fields {
                for v in 0..spec.p {
                    let sizes = vec![spec.q];
                    let target = magnitude(&mut rng, spec.field_range);
                    let table = random_centered_table(&mut rng, &sizes, target);
                    for (s, &value) in table.iter().enumerate() {
                        factors.push(Factor::indicator(vec![v], vec![s as u8])?);
                        theta.push(value);
                    }
                }
            }
            for &(a, b) in &edges {
                let sizes = vec![spec.q, spec.q];
                let target = magnitude(&mut rng, spec.coupling_range);
                let table = random_centered_table(&mut rng, &sizes, target);
                for (idx, &value) in table.iter().enumerate() {
                    let letters = vec![(idx / spec.q) as u8, (idx % spec.q) as u8];
                    factors.push(Factor::indicator(vec![a, b], letters)?);
                    theta.push(value);
                }
            }
        }
        BasisKind::Custom => unreachable!("rejected by validate"),
    }
    let graph = FactorGraph::new(spec.p, factors)?;
    let family = ModelFamily::new(graph, alphabet, spec.basis)?;
    GraphicalModel::new(family, theta)
}

/// The full pairwise candidate family: every vertex pair (and every field
/// unless `fields` is false), with all assignments for the indicator basis.
/// Parameters are zero; this is the search family handed to the learner.
pub fn pairwise_family(p: usize, q: usize, basis: BasisKind, fields: bool) -> Result<ModelFamily> {
    if basis == BasisKind::Monomial && q != 2 {
        return Err(Error::InvalidConfig("monomial basis requires q = 2".into()));
    }
    let mut factors = Vec::new();
    match basis {
        BasisKind::Monomial => {
            if fields {
                for v in 0..p {
                    factors.push(Factor::monomial(vec![v])?);
                }
            }
            for a in 0..p {
                for b in (a + 1)..p {
                    factors.push(Factor::monomial(vec![a, b])?);
                }
            }
        }
        BasisKind::Indicator => {
            if fields {
                for v in 0..p {
                    for s in 0..q {
                        factors.push(Factor::indicator(vec![v], vec![s as u8])?);
                    }
                }
            }
            for a in 0..p {
                for b in (a + 1)..p {
                    for s1 in 0..q {
                        for s2 in 0..q {
                            factors.push(Factor::indicator(vec![a, b], vec![s1 as u8, s2 as u8])?);
                        }
                    }
                }
            }
        }
        BasisKind::Custom => {
            return Err(Error::InvalidConfig(
                "pairwise family covers monomial and indicator bases".into(),
            ))
        }
    }
    let graph = FactorGraph::new(p, factors)?;
    ModelFamily::new(graph, Alphabet::uniform(p, q)?, basis)
}

/// Embed a generated model into a larger candidate family: the returned
/// model has the family's factor set with the truth's parameters where
/// factors coincide and zero elsewhere.
pub fn embed_in_family(truth: &GraphicalModel, family: &ModelFamily) -> Result<GraphicalModel> {
    if truth.alphabet() != family.alphabet() || truth.basis() != family.basis() {
        return Err(Error::FamilyMismatch(
            "alphabet or basis differs between truth and family".into(),
        ));
    }
    let mut theta = vec![0.0; family.graph().factor_count()];
    'outer: for (k, factor) in truth.graph().factors().iter().enumerate() {
        if truth.theta()[k] == 0.0 {
            continue;
        }
        for (j, candidate) in family.graph().factors().iter().enumerate() {
            if candidate == factor {
                theta[j] = truth.theta()[k];
                continue 'outer;
            }
        }
        return Err(Error::FamilyMismatch(format!(
            "truth factor with scope {:?} is outside the family",
            factor.scope()
        )));
    }
    GraphicalModel::new(family.clone(), theta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_counts() {
        let spec = GeneratorSpec {
            topology: Topology::Chain,
            p: 5,
            q: 2,
            basis: BasisKind::Monomial,
            coupling_range: (0.4, 0.7),
            field_range: (0.1, 0.3),
            fields: true,
            seed: 1,
        };
        let model = generate_model(&spec).unwrap();
        // 5 fields + 4 edges
        assert_eq!(model.graph().factor_count(), 9);
        for (k, f) in model.graph().factors().iter().enumerate() {
            let mag = model.theta()[k].abs();
            if f.scope().len() == 1 {
                assert!((0.1..=0.3).contains(&mag));
            } else {
                assert!((0.4..=0.7).contains(&mag));
            }
        }
        let no_fields = generate_model(&GeneratorSpec {
            fields: false,
            ..spec.clone()
        })
        .unwrap();
        assert_eq!(no_fields.graph().factor_count(), 4);
    }

    #[test]
    fn grid_three_by_three() {
        let spec = GeneratorSpec {
            topology: Topology::Grid,
            p: 9,
            q: 2,
            basis: BasisKind::Monomial,
            coupling_range: (0.4, 0.7),
            field_range: (0.0, 0.0),
            fields: false,
            seed: 2,
        };
        let model = generate_model(&spec).unwrap();
        assert_eq!(model.graph().factor_count(), 12);
        assert!(generate_model(&GeneratorSpec { p: 8, ..spec.clone() }).is_err());
    }

    #[test]
    fn same_seed_same_model() {
        let spec = GeneratorSpec {
            topology: Topology::Erdos { degree: 2.0 },
            p: 7,
            q: 2,
            basis: BasisKind::Monomial,
            coupling_range: (0.3, 0.6),
            field_range: (0.1, 0.2),
            fields: true,
            seed: 42,
        };
        assert_eq!(generate_model(&spec).unwrap(), generate_model(&spec).unwrap());
        let other = GeneratorSpec { seed: 43, ..spec.clone() };
        assert_ne!(generate_model(&spec).unwrap(), generate_model(&other).unwrap());
    }

    #[test]
    fn indicator_tables_are_zero_sum_with_target_norm() {
        let spec = GeneratorSpec {
            topology: Topology::Chain,
            p: 4,
            q: 3,
            basis: BasisKind::Indicator,
            coupling_range: (0.5, 0.8),
            field_range: (0.1, 0.2),
            fields: true,
            seed: 7,
        };
        let model = generate_model(&spec).unwrap();
        // per edge scope: 9 factors summing to zero along each letter axis
        let structure = model.graph().clique_structure();
        for (clique, span) in structure.spans() {
            if clique.len() != 2 {
                continue;
            }
            let values: Vec<f64> = span.iter().map(|&k| model.theta()[k]).collect();
            let norm: f64 = values.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((0.5..=0.8).contains(&norm), "norm {norm}");
            for s1 in 0..3usize {
                let col_sum: f64 = (0..3).map(|s2| values[s1 * 3 + s2]).sum();
                let row_sum: f64 = (0..3).map(|s2| values[s2 * 3 + s1]).sum();
                assert!(col_sum.abs() < 1e-12 && row_sum.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn embedding_places_truth_in_family() {
        let spec = GeneratorSpec {
            topology: Topology::Chain,
            p: 4,
            q: 2,
            basis: BasisKind::Monomial,
            coupling_range: (0.4, 0.7),
            field_range: (0.0, 0.0),
            fields: false,
            seed: 5,
        };
        let truth = generate_model(&spec).unwrap();
        let family = pairwise_family(4, 2, BasisKind::Monomial, true).unwrap();
        let embedded = embed_in_family(&truth, &family).unwrap();
        assert_eq!(embedded.graph().factor_count(), 4 + 6);
        assert_eq!(embedded.structure(), truth.structure());
    }
}
