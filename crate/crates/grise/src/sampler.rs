//! I.i.d. and Gibbs sampling from a model.
//!
//! All randomness flows from a single 64-bit seed through `ChaCha8Rng`
//! (counter-based, seedable), so sample sets are bit-reproducible across
//! runs and platforms. The Gibbs sampler uses systematic sweeps in vertex
//! order. Burn-in and thinning defaults (`100*p` sweeps, every 10th sweep)
//! are heuristics adequate for weakly coupled desk-scale models, not
//! rigorous guarantees; the learner's theory assumes i.i.d. samples and how
//! much thinning suffices for that transfer is an open question documented
//! here rather than guessed at.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::basis::BasisTables;
use crate::error::{Error, Result};
use crate::model::{Alphabet, GraphicalModel};
use crate::oracle::enumerate_distribution;

/// Where a sample set came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub generator: String,
    pub seed: Option<u64>,
}

impl Provenance {
    pub fn external(description: impl Into<String>) -> Self {
        Provenance {
            generator: description.into(),
            seed: None,
        }
    }
}

/// An n x p matrix of symbols with the alphabet they live in.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    n: usize,
    p: usize,
    data: Vec<u8>,
    alphabet: Alphabet,
    provenance: Provenance,
}

impl SampleSet {
    /// Validate and wrap raw row-major symbol data.
    pub fn new(
        data: Vec<u8>,
        alphabet: Alphabet,
        provenance: Provenance,
    ) -> Result<Self> {
        let p = alphabet.vertex_count();
        if data.is_empty() || !data.len().is_multiple_of(p) {
            return Err(Error::InvalidSampleSet(format!(
                "data length {} is not a positive multiple of p = {p}",
                data.len()
            )));
        }
        let n = data.len() / p;
        for (t, row) in data.chunks(p).enumerate() {
            for (v, &s) in row.iter().enumerate() {
                if s as usize >= alphabet.size(v) {
                    return Err(Error::BadSymbol {
                        row: t,
                        vertex: v,
                        symbol: s as usize,
                        q: alphabet.size(v),
                    });
                }
            }
        }
        Ok(SampleSet {
            n,
            p,
            data,
            alphabet,
            provenance,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn vertex_count(&self) -> usize {
        self.p
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn row(&self, t: usize) -> &[u8] {
        &self.data[t * self.p..(t + 1) * self.p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u8]> {
        self.data.chunks(self.p)
    }
}

/// Gibbs chain settings: systematic sweeps, one retained sample every
/// `thinning` sweeps after `burn_in` sweeps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GibbsConfig {
    pub burn_in: usize,
    pub thinning: usize,
    pub seed: u64,
}

impl GibbsConfig {
    /// Defaults: burn_in = 100*p sweeps, thinning = 10.
    pub fn defaults(p: usize, seed: u64) -> Self {
        GibbsConfig {
            burn_in: 100 * p,
            thinning: 10,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.thinning == 0 {
            return Err(Error::InvalidConfig("thinning must be at least 1".into()));
        }
        Ok(())
    }
}

/// Conditional distribution of `sigma_vertex` given the rest of `config`,
/// computed from the factors incident to the vertex only and stabilized by
/// subtracting the maximum exponent.
pub fn conditional_distribution(
    model: &GraphicalModel,
    vertex: usize,
    config: &[u8],
) -> Result<Vec<f64>> {
    if config.len() != model.graph().vertex_count() {
        return Err(Error::InvalidConfig(format!(
            "configuration has {} symbols for p = {}",
            config.len(),
            model.graph().vertex_count()
        )));
    }
    for (v, &s) in config.iter().enumerate() {
        if s as usize >= model.alphabet().size(v) {
            return Err(Error::BadSymbol {
                row: 0,
                vertex: v,
                symbol: s as usize,
                q: model.alphabet().size(v),
            });
        }
    }
    let tables = BasisTables::build(model.family())?;
    let mut out = vec![0.0; model.alphabet().size(vertex)];
    let mut scratch = config.to_vec();
    conditional_into(model, &tables, vertex, &mut scratch, &mut out);
    Ok(out)
}

/// Hot-path conditional: `config` is used as scratch (the vertex entry is
/// restored on exit), `out` must have length `q_vertex`.
pub(crate) fn conditional_into(
    model: &GraphicalModel,
    tables: &BasisTables,
    vertex: usize,
    config: &mut [u8],
    out: &mut [f64],
) {
    let graph = model.graph();
    let q = out.len();
    let saved = config[vertex];
    for (b, slot) in out.iter_mut().enumerate() {
        config[vertex] = b as u8;
        let mut energy = 0.0;
        for &k in graph.incident(vertex) {
            let factor = graph.factor(k);
            let theta = model.theta()[k];
            if theta == 0.0 {
                continue;
            }
            let ft = tables.factor(k);
            let mut idx = 0usize;
            for (&v, &qv) in factor.scope().iter().zip(ft.sizes()) {
                idx = idx * qv + config[v] as usize;
            }
            energy += theta * ft.f()[idx];
        }
        *slot = energy;
    }
    config[vertex] = saved;
    let max = out.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x));
    let mut z = 0.0;
    for slot in out.iter_mut() {
        *slot = (*slot - max).exp();
        z += *slot;
    }
    for slot in out.iter_mut() {
        *slot /= z;
    }
    debug_assert!(q == out.len());
}

/// Draw `n` i.i.d. samples by inverse CDF on the exactly enumerated
/// distribution. Rejects models whose state space exceeds the enumeration
/// cap; use [`sample_gibbs`] for those.
pub fn sample_exact(
    model: &GraphicalModel,
    n: usize,
    seed: u64,
    cap: Option<u128>,
) -> Result<SampleSet> {
    if n == 0 {
        return Err(Error::InvalidSampleSet("need n >= 1".into()));
    }
    let dist = enumerate_distribution(model, cap)?;
    let mut cdf = Vec::with_capacity(dist.probs().len());
    let mut acc = 0.0;
    for &p in dist.probs() {
        acc += p;
        cdf.push(acc);
    }
    let p = model.graph().vertex_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(n * p);
    for _ in 0..n {
        let u: f64 = rng.gen();
        let idx = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
        data.extend_from_slice(&dist.config(idx));
    }
    SampleSet::new(
        data,
        model.alphabet().clone(),
        Provenance {
            generator: "exact".into(),
            seed: Some(seed),
        },
    )
}

/// Run a single systematic-sweep Gibbs chain and collect `n` samples.
pub fn sample_gibbs(model: &GraphicalModel, n: usize, config: &GibbsConfig) -> Result<SampleSet> {
    if n == 0 {
        return Err(Error::InvalidSampleSet("need n >= 1".into()));
    }
    config.validate()?;
    let tables = BasisTables::build(model.family())?;
    let p = model.graph().vertex_count();
    let alphabet = model.alphabet();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    // Uniform random initial state.
    let mut state: Vec<u8> = (0..p)
        .map(|v| rng.gen_range(0..alphabet.size(v)) as u8)
        .collect();
    let mut cond = vec![0.0; alphabet.max_size()];
    let mut sweep = |state: &mut Vec<u8>, rng: &mut ChaCha8Rng| {
        for v in 0..p {
            let q = alphabet.size(v);
            conditional_into(model, &tables, v, state, &mut cond[..q]);
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut chosen = q - 1;
            for (b, &c) in cond[..q].iter().enumerate() {
                acc += c;
                if u < acc {
                    chosen = b;
                    break;
                }
            }
            state[v] = chosen as u8;
        }
    };
    for _ in 0..config.burn_in {
        sweep(&mut state, &mut rng);
    }
    let mut data = Vec::with_capacity(n * p);
    for _ in 0..n {
        for _ in 0..config.thinning {
            sweep(&mut state, &mut rng);
        }
        data.extend_from_slice(&state);
    }
    SampleSet::new(
        data,
        alphabet.clone(),
        Provenance {
            generator: format!(
                "gibbs(burn_in={}, thinning={})",
                config.burn_in, config.thinning
            ),
            seed: Some(config.seed),
        },
    )
}
