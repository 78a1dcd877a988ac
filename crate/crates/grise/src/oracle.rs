//! Brute-force ground truth for small models: exact distribution, partition
//! function, marginals, population screening objective and conditional Gram
//! matrices. Exact or nothing; no approximate inference lives here.
//!
//! Configurations are ordered lexicographically with the last vertex fastest,
//! so probability vectors are comparable across runs.

use crate::basis::BasisTables;
use crate::error::{Error, Result};
use crate::model::{next_config, GraphicalModel, DEFAULT_ENUMERATION_CAP};

/// Exactly enumerated distribution of a model.
#[derive(Debug, Clone)]
pub struct ExactDistribution {
    sizes: Vec<usize>,
    probs: Vec<f64>,
    log_z: f64,
}

impl ExactDistribution {
    /// Probability vector over all configurations, in enumeration order.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn log_partition(&self) -> f64 {
        self.log_z
    }

    /// Alphabet sizes, defining the configuration indexing.
    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Configuration at enumeration index `idx`.
    pub fn config(&self, idx: usize) -> Vec<u8> {
        crate::basis::config_of_index(idx, &self.sizes)
    }

    /// Enumeration index of a full configuration.
    pub fn index_of(&self, config: &[u8]) -> usize {
        crate::basis::config_index(config, &self.sizes)
    }

    /// Exact marginal distribution of one vertex.
    pub fn marginal(&self, vertex: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.sizes[vertex]];
        let mut config = vec![0u8; self.sizes.len()];
        let mut idx = 0;
        loop {
            out[config[vertex] as usize] += self.probs[idx];
            idx += 1;
            if !next_config(&mut config, &self.sizes) {
                break;
            }
        }
        out
    }

    /// Expectation of an arbitrary statistic of the full configuration.
    pub fn expect(&self, stat: impl Fn(&[u8]) -> f64) -> f64 {
        let mut config = vec![0u8; self.sizes.len()];
        let mut acc = 0.0;
        let mut idx = 0;
        loop {
            acc += self.probs[idx] * stat(&config);
            idx += 1;
            if !next_config(&mut config, &self.sizes) {
                break;
            }
        }
        acc
    }
}

fn check_cap(model: &GraphicalModel, cap: Option<u128>) -> Result<usize> {
    let cap = cap.unwrap_or(DEFAULT_ENUMERATION_CAP);
    let size = model.alphabet().state_space();
    if size > cap {
        return Err(Error::StateSpaceTooLarge { size, cap });
    }
    Ok(size as usize)
}

/// Unnormalized log weight of one configuration.
pub(crate) fn log_weight(model: &GraphicalModel, tables: &BasisTables, config: &[u8]) -> f64 {
    let graph = model.graph();
    let mut energy = 0.0;
    for (k, factor) in graph.factors().iter().enumerate() {
        let theta = model.theta()[k];
        if theta == 0.0 {
            continue;
        }
        let sub: Vec<u8> = factor.scope().iter().map(|&v| config[v]).collect();
        energy += theta * tables.factor(k).f()[tables.factor(k).config_index(&sub)];
    }
    energy
}

/// Enumerate the exact distribution of a model whose joint state space is
/// within `cap` (default [`DEFAULT_ENUMERATION_CAP`]). Log-sum-exp stabilized.
pub fn enumerate_distribution(
    model: &GraphicalModel,
    cap: Option<u128>,
) -> Result<ExactDistribution> {
    let total = check_cap(model, cap)?;
    let tables = BasisTables::build(model.family())?;
    let sizes = model.alphabet().sizes().to_vec();
    let mut log_weights = Vec::with_capacity(total);
    let mut config = vec![0u8; sizes.len()];
    loop {
        log_weights.push(log_weight(model, &tables, &config));
        if !next_config(&mut config, &sizes) {
            break;
        }
    }
    let max = log_weights.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x));
    let mut z = 0.0;
    for lw in &log_weights {
        z += (lw - max).exp();
    }
    let log_z = max + z.ln();
    let probs: Vec<f64> = log_weights.iter().map(|lw| (lw - max).exp() / z).collect();
    Ok(ExactDistribution {
        sizes,
        probs,
        log_z,
    })
}

/// Population screening objective at one vertex: the expectation under the
/// exact distribution of `exp(-sum_k theta_k g_uk)`, with its gradient.
/// The per-sample empirical objective is the same sum with sample weights.
pub fn population_giso(
    model: &GraphicalModel,
    vertex: usize,
    theta_u: &[f64],
    cap: Option<u128>,
) -> Result<(f64, Vec<f64>)> {
    let dist = enumerate_distribution(model, cap)?;
    let tables = BasisTables::build(model.family())?;
    let graph = model.graph();
    let ids = graph.incident(vertex);
    if theta_u.len() != ids.len() {
        return Err(Error::InvalidConfig(format!(
            "theta_u has {} entries, vertex {vertex} has {} incident factors",
            theta_u.len(),
            ids.len()
        )));
    }
    let sizes = model.alphabet().sizes();
    let mut value = 0.0;
    let mut grad = vec![0.0; ids.len()];
    let mut config = vec![0u8; sizes.len()];
    let mut idx = 0;
    loop {
        let mut local = 0.0;
        let mut gs = Vec::with_capacity(ids.len());
        for (j, &k) in ids.iter().enumerate() {
            let factor = graph.factor(k);
            let sub: Vec<u8> = factor.scope().iter().map(|&v| config[v]).collect();
            let ft = tables.factor(k);
            let pos = factor.scope_position(vertex).expect("incident");
            let g = ft.g(pos)[ft.config_index(&sub)];
            gs.push(g);
            local += theta_u[j] * g;
        }
        let w = dist.probs[idx] * (-local).exp();
        value += w;
        for (j, g) in gs.iter().enumerate() {
            grad[j] -= g * w;
        }
        idx += 1;
        if !next_config(&mut config, sizes) {
            break;
        }
    }
    Ok((value, grad))
}

/// Exact Gram matrix of the locally centered functions at a vertex:
/// `H[k1][k2] = E[g_uk1 g_uk2]` under the model distribution.
pub fn fisher_gram(
    model: &GraphicalModel,
    vertex: usize,
    cap: Option<u128>,
) -> Result<Vec<Vec<f64>>> {
    let dist = enumerate_distribution(model, cap)?;
    let tables = BasisTables::build(model.family())?;
    let graph = model.graph();
    let ids = graph.incident(vertex);
    let m = ids.len();
    let sizes = model.alphabet().sizes();
    let mut gram = vec![vec![0.0; m]; m];
    let mut config = vec![0u8; sizes.len()];
    let mut idx = 0;
    loop {
        let mut gs = Vec::with_capacity(m);
        for &k in ids {
            let factor = graph.factor(k);
            let sub: Vec<u8> = factor.scope().iter().map(|&v| config[v]).collect();
            let ft = tables.factor(k);
            let pos = factor.scope_position(vertex).expect("incident");
            gs.push(ft.g(pos)[ft.config_index(&sub)]);
        }
        let w = dist.probs[idx];
        for a in 0..m {
            for b in a..m {
                gram[a][b] += w * gs[a] * gs[b];
            }
        }
        idx += 1;
        if !next_config(&mut config, sizes) {
            break;
        }
    }
    for a in 0..m {
        for b in 0..a {
            gram[a][b] = gram[b][a];
        }
    }
    Ok(gram)
}
