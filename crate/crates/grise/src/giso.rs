//! The per-node screening objective over a sample set.
//!
//! A local problem holds the design of one node: for every sample row the
//! values of the locally centered basis functions of the node's incident
//! factors. Rows that agree on the joint scope of those factors are grouped
//! with multiplicity weights, so the empirical objective
//! `S_n = (1/n) sum_t exp(-<theta, G_t>)` and the population objective (the
//! same sum with exact configuration probabilities as weights) run through
//! one code path.

use std::collections::BTreeMap;

use crate::basis::BasisTables;
use crate::error::{Error, Result};
use crate::model::{next_config, FactorId, GraphicalModel, ModelFamily};
use crate::oracle::enumerate_distribution;
use crate::projection::ConstraintDescriptor;
use crate::sampler::SampleSet;

/// Exponent clamp; the feasible set bounds exponents by gamma_hat, this
/// guards direct evaluations at wild theta.
const EXP_CLAMP: f64 = 700.0;

/// One node's screening problem: factor list, design rows with weights,
/// prior radius and constraint set.
#[derive(Debug, Clone)]
pub struct LocalProblem {
    vertex: usize,
    factor_ids: Vec<FactorId>,
    targets: Vec<FactorId>,
    /// Row-major design, `rows x dimension`.
    design: Vec<f64>,
    weights: Vec<f64>,
    total_weight: f64,
    gamma_hat: f64,
    constraints: ConstraintDescriptor,
}

/// Value and gradient of the objective and of its logarithm at one point.
#[derive(Debug, Clone)]
pub struct ObjectiveEvaluation {
    pub value: f64,
    pub log_value: f64,
    pub gradient: Vec<f64>,
    /// `gradient / value`; infinity-norm at most 1 by normalization.
    pub log_gradient: Vec<f64>,
}

impl LocalProblem {
    /// Build the design for `vertex` from samples, with the default factor
    /// set (all incident factors) and default targets (maximal factors
    /// containing the vertex).
    pub fn from_samples(
        family: &ModelFamily,
        samples: &SampleSet,
        vertex: usize,
        gamma_hat: f64,
        constraints: ConstraintDescriptor,
    ) -> Result<Self> {
        let ids = family.graph().incident(vertex).to_vec();
        let targets = family
            .graph()
            .clique_structure()
            .targets_of(vertex, family.graph());
        Self::from_samples_with(family, samples, vertex, ids, targets, gamma_hat, constraints)
    }

    /// As [`LocalProblem::from_samples`] with an explicit factor subset and
    /// target set, as the multi-round algorithm needs.
    pub fn from_samples_with(
        family: &ModelFamily,
        samples: &SampleSet,
        vertex: usize,
        factor_ids: Vec<FactorId>,
        targets: Vec<FactorId>,
        gamma_hat: f64,
        constraints: ConstraintDescriptor,
    ) -> Result<Self> {
        check_gamma_hat(gamma_hat)?;
        if samples.vertex_count() != family.vertex_count() {
            return Err(Error::InvalidSampleSet(format!(
                "samples have {} columns, family has {} vertices",
                samples.vertex_count(),
                family.vertex_count()
            )));
        }
        let joint = joint_scope(family, &factor_ids);
        // Validate symbols against the family alphabet, naming the first
        // offending row.
        for (t, row) in samples.rows().enumerate() {
            for &v in &joint {
                if row[v] as usize >= family.alphabet().size(v) {
                    return Err(Error::BadSymbol {
                        row: t,
                        vertex: v,
                        symbol: row[v] as usize,
                        q: family.alphabet().size(v),
                    });
                }
            }
        }
        let mut grouped: BTreeMap<Vec<u8>, f64> = BTreeMap::new();
        for row in samples.rows() {
            let key: Vec<u8> = joint.iter().map(|&v| row[v]).collect();
            *grouped.entry(key).or_insert(0.0) += 1.0;
        }
        Self::from_grouped(
            family,
            vertex,
            factor_ids,
            targets,
            gamma_hat,
            constraints,
            &joint,
            grouped,
            samples.len() as f64,
        )
    }

    /// Population problem: weights are the exact marginal probabilities of
    /// the joint-scope configurations under `truth`.
    pub fn population(
        truth: &GraphicalModel,
        vertex: usize,
        gamma_hat: f64,
        constraints: ConstraintDescriptor,
        cap: Option<u128>,
    ) -> Result<Self> {
        let ids = truth.graph().incident(vertex).to_vec();
        let targets = truth
            .graph()
            .clique_structure()
            .targets_of(vertex, truth.graph());
        Self::population_with(truth, vertex, ids, targets, gamma_hat, constraints, cap)
    }

    /// Population problem with explicit factor and target sets.
    pub fn population_with(
        truth: &GraphicalModel,
        vertex: usize,
        factor_ids: Vec<FactorId>,
        targets: Vec<FactorId>,
        gamma_hat: f64,
        constraints: ConstraintDescriptor,
        cap: Option<u128>,
    ) -> Result<Self> {
        check_gamma_hat(gamma_hat)?;
        let family = truth.family();
        let joint = joint_scope(family, &factor_ids);
        let dist = enumerate_distribution(truth, cap)?;
        let sizes = family.alphabet().sizes().to_vec();
        let mut grouped: BTreeMap<Vec<u8>, f64> = BTreeMap::new();
        let mut config = vec![0u8; sizes.len()];
        let mut idx = 0;
        loop {
            let key: Vec<u8> = joint.iter().map(|&v| config[v]).collect();
            *grouped.entry(key).or_insert(0.0) += dist.probs()[idx];
            idx += 1;
            if !next_config(&mut config, &sizes) {
                break;
            }
        }
        let total: f64 = grouped.values().sum();
        Self::from_grouped(
            family,
            vertex,
            factor_ids,
            targets,
            gamma_hat,
            constraints,
            &joint,
            grouped,
            total,
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn from_grouped(
        family: &ModelFamily,
        vertex: usize,
        factor_ids: Vec<FactorId>,
        targets: Vec<FactorId>,
        gamma_hat: f64,
        constraints: ConstraintDescriptor,
        joint: &[usize],
        grouped: BTreeMap<Vec<u8>, f64>,
        total_weight: f64,
    ) -> Result<Self> {
        let tables = BasisTables::build(family)?;
        let graph = family.graph();
        let dim = factor_ids.len();
        // Per factor: positions of its scope vertices inside the joint scope.
        let gather: Vec<(usize, Vec<usize>)> = factor_ids
            .iter()
            .map(|&k| {
                let pos = graph
                    .factor(k)
                    .scope_position(vertex)
                    .ok_or_else(|| Error::InvalidConfig(format!(
                        "factor {k} does not contain vertex {vertex}"
                    )))?;
                let positions = graph
                    .factor(k)
                    .scope()
                    .iter()
                    .map(|&v| joint.binary_search(&v).expect("scope inside joint"))
                    .collect();
                Ok((pos, positions))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut design = Vec::with_capacity(grouped.len() * dim);
        let mut weights = Vec::with_capacity(grouped.len());
        for (key, w) in grouped {
            for (j, &k) in factor_ids.iter().enumerate() {
                let (upos, positions) = &gather[j];
                let ft = tables.factor(k);
                let mut idx = 0usize;
                for (&p, &q) in positions.iter().zip(ft.sizes()) {
                    idx = idx * q + key[p] as usize;
                }
                design.push(ft.g(*upos)[idx]);
            }
            weights.push(w);
        }
        Ok(LocalProblem {
            vertex,
            factor_ids,
            targets,
            design,
            weights,
            total_weight,
            gamma_hat,
            constraints,
        })
    }

    pub fn vertex(&self) -> usize {
        self.vertex
    }

    /// Ids of the node's factors, in design column order (`K_u`).
    pub fn factor_ids(&self) -> &[FactorId] {
        &self.factor_ids
    }

    /// Ids of the target factors (`T_u`); the rest are residual.
    pub fn targets(&self) -> &[FactorId] {
        &self.targets
    }

    /// Number of parameters.
    pub fn dimension(&self) -> usize {
        self.factor_ids.len()
    }

    /// Number of distinct design rows.
    pub fn row_count(&self) -> usize {
        self.weights.len()
    }

    pub fn gamma_hat(&self) -> f64 {
        self.gamma_hat
    }

    pub fn constraints(&self) -> &ConstraintDescriptor {
        &self.constraints
    }

    fn row(&self, r: usize) -> &[f64] {
        &self.design[r * self.dimension()..(r + 1) * self.dimension()]
    }

    /// Objective, gradient, and their logarithmic counterparts at `theta`.
    pub fn evaluate(&self, theta: &[f64]) -> ObjectiveEvaluation {
        assert_eq!(theta.len(), self.dimension(), "theta dimension mismatch");
        let dim = self.dimension();
        let mut value = 0.0;
        let mut gradient = vec![0.0; dim];
        for (r, &w) in self.weights.iter().enumerate() {
            let row = self.row(r);
            let mut z = 0.0;
            for (t, g) in theta.iter().zip(row) {
                z += t * g;
            }
            let e = w * (-z.clamp(-EXP_CLAMP, EXP_CLAMP)).exp();
            value += e;
            for (slot, g) in gradient.iter_mut().zip(row) {
                *slot -= g * e;
            }
        }
        value /= self.total_weight;
        for slot in gradient.iter_mut() {
            *slot /= self.total_weight;
        }
        let log_gradient: Vec<f64> = gradient.iter().map(|g| g / value).collect();
        ObjectiveEvaluation {
            value,
            log_value: value.ln(),
            gradient,
            log_gradient,
        }
    }

    /// Allocation-free evaluation for solver loops: returns the objective
    /// value and writes the normalized gradient `grad S / S` into `v`.
    pub fn value_and_log_gradient(&self, theta: &[f64], v: &mut [f64]) -> f64 {
        debug_assert_eq!(theta.len(), self.dimension());
        debug_assert_eq!(v.len(), self.dimension());
        let dim = self.dimension();
        let mut value = 0.0;
        v.fill(0.0);
        for (r, &w) in self.weights.iter().enumerate() {
            let row = &self.design[r * dim..(r + 1) * dim];
            let mut z = 0.0;
            for (t, g) in theta.iter().zip(row) {
                z += t * g;
            }
            let e = w * (-z.clamp(-EXP_CLAMP, EXP_CLAMP)).exp();
            value += e;
            for (slot, g) in v.iter_mut().zip(row) {
                *slot -= g * e;
            }
        }
        for slot in v.iter_mut() {
            *slot /= value;
        }
        value / self.total_weight
    }

    /// Residual of the first-order Taylor expansion at `theta_star` in the
    /// direction `delta`; nonnegative by convexity.
    pub fn taylor_residual(&self, theta_star: &[f64], delta: &[f64]) -> f64 {
        assert_eq!(theta_star.len(), self.dimension());
        assert_eq!(delta.len(), self.dimension());
        let base = self.evaluate(theta_star);
        let shifted: Vec<f64> = theta_star.iter().zip(delta).map(|(a, b)| a + b).collect();
        let inner: f64 = base.gradient.iter().zip(delta).map(|(g, d)| g * d).sum();
        self.evaluate(&shifted).value - base.value - inner
    }

    /// Weighted empirical Gram of the design, `H[k1][k2] = (1/W) sum_t w_t
    /// G[t][k1] G[t][k2]`.
    pub fn weighted_gram(&self) -> Vec<Vec<f64>> {
        let dim = self.dimension();
        let mut gram = vec![vec![0.0; dim]; dim];
        for (r, &w) in self.weights.iter().enumerate() {
            let row = self.row(r);
            for a in 0..dim {
                for b in a..dim {
                    gram[a][b] += w * row[a] * row[b];
                }
            }
        }
        for a in 0..dim {
            for b in a..dim {
                gram[a][b] /= self.total_weight;
                gram[b][a] = gram[a][b];
            }
        }
        gram
    }

    /// Largest |<theta, G_t>| over the design rows.
    pub fn max_local_energy(&self, theta: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.row_count() {
            let z: f64 = theta.iter().zip(self.row(r)).map(|(t, g)| t * g).sum();
            worst = worst.max(z.abs());
        }
        worst
    }

    /// Largest `|G[t][k]|` in the design; at most 1 for normalized bases.
    pub fn max_abs_entry(&self) -> f64 {
        self.design.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
    }
}

fn check_gamma_hat(gamma_hat: f64) -> Result<()> {
    if !(gamma_hat > 0.0) || !gamma_hat.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "gamma_hat must be positive and finite, got {gamma_hat}"
        )));
    }
    Ok(())
}

/// Sorted union of the scopes of the listed factors.
fn joint_scope(family: &ModelFamily, ids: &[FactorId]) -> Vec<usize> {
    let mut joint: Vec<usize> = Vec::new();
    for &k in ids {
        for &v in family.graph().factor(k).scope() {
            if !joint.contains(&v) {
                joint.push(v);
            }
        }
    }
    joint.sort_unstable();
    joint
}
