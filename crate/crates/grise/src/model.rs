//! Factor-graph combinatorics for parameterized families of discrete models.
//!
//! A family is a bipartite graph between vertices and factors plus a basis
//! kind; a model adds a parameter vector indexed by factor id. Structure
//! notions (maximal factors, maximal cliques, spans) are defined through
//! factor neighborhoods only, so clique computation is pairwise scope
//! containment, never a general graph clique search.

use std::collections::BTreeMap;

use crate::basis::BasisTables;
use crate::error::{Error, Result};

/// Default cap on joint state spaces that exact enumeration will touch.
pub const DEFAULT_ENUMERATION_CAP: u128 = 1 << 20;

/// Factor ids are positions in the owning graph's factor list.
pub type FactorId = usize;

/// Node-dependent alphabet sizes; symbols are `0..q_i - 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    sizes: Vec<usize>,
}

impl Alphabet {
    /// Per-vertex sizes, each at least 2 and at most 256 (symbols are `u8`).
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::InvalidAlphabet("no vertices".into()));
        }
        for (i, &q) in sizes.iter().enumerate() {
            if q < 2 {
                return Err(Error::InvalidAlphabet(format!(
                    "vertex {i} has alphabet size {q}, need at least 2"
                )));
            }
            if q > 256 {
                return Err(Error::InvalidAlphabet(format!(
                    "vertex {i} has alphabet size {q}, symbol encoding caps at 256"
                )));
            }
        }
        Ok(Alphabet { sizes })
    }

    /// Same size `q` on all `p` vertices.
    pub fn uniform(p: usize, q: usize) -> Result<Self> {
        Self::new(vec![q; p])
    }

    pub fn vertex_count(&self) -> usize {
        self.sizes.len()
    }

    pub fn size(&self, vertex: usize) -> usize {
        self.sizes[vertex]
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Largest alphabet size `q`.
    pub fn max_size(&self) -> usize {
        *self.sizes.iter().max().expect("nonempty")
    }

    /// Number of joint configurations over all vertices.
    pub fn state_space(&self) -> u128 {
        self.sizes.iter().map(|&q| q as u128).product()
    }

    /// Number of joint configurations over a vertex subset.
    pub fn subset_space(&self, vertices: &[usize]) -> u128 {
        vertices.iter().map(|&v| self.sizes[v] as u128).product()
    }
}

/// Which closed-form (or table) the factor payloads follow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKind {
    /// Products of spins `2*symbol - 1`; binary alphabets only.
    Monomial,
    /// Products of centered univariate indicators pinned at an assignment.
    Indicator,
    /// Dense value table per factor.
    Custom,
}

impl BasisKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            BasisKind::Monomial => "monomial",
            BasisKind::Indicator => "indicator",
            BasisKind::Custom => "custom",
        }
    }
}

/// Basis-specific payload of a factor. Two factors with identical scope but
/// different payloads are distinct members of the same clique span.
#[derive(Debug, Clone, PartialEq)]
pub enum BasisTag {
    Monomial,
    /// One prescribed letter per scope vertex, encoded as symbols.
    Indicator(Vec<u8>),
    /// Values over scope configurations, row-major, last scope index fastest.
    Custom(Vec<f64>),
}

/// A basis function's incidence: its scope (sorted, distinct vertices) plus
/// the payload selecting the function on that scope.
#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    scope: Vec<usize>,
    tag: BasisTag,
}

impl Factor {
    pub fn new(scope: Vec<usize>, tag: BasisTag) -> Result<Self> {
        if scope.is_empty() {
            return Err(Error::InvalidScope("empty scope".into()));
        }
        if !scope.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidScope(format!(
                "scope {scope:?} must be strictly increasing"
            )));
        }
        Ok(Factor { scope, tag })
    }

    /// Monomial factor on a scope.
    pub fn monomial(scope: Vec<usize>) -> Result<Self> {
        Self::new(scope, BasisTag::Monomial)
    }

    /// Indicator factor with a letter assignment.
    pub fn indicator(scope: Vec<usize>, assignment: Vec<u8>) -> Result<Self> {
        Self::new(scope, BasisTag::Indicator(assignment))
    }

    /// Custom table factor.
    pub fn custom(scope: Vec<usize>, table: Vec<f64>) -> Result<Self> {
        Self::new(scope, BasisTag::Custom(table))
    }

    /// The neighborhood of the factor (sorted vertex list).
    pub fn scope(&self) -> &[usize] {
        &self.scope
    }

    pub fn tag(&self) -> &BasisTag {
        &self.tag
    }

    /// Position of `vertex` within the scope, if present.
    pub fn scope_position(&self, vertex: usize) -> Option<usize> {
        self.scope.binary_search(&vertex).ok()
    }
}

/// Bipartite vertex/factor incidence structure of a model family.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorGraph {
    p: usize,
    factors: Vec<Factor>,
    /// `incidence[i]` lists the ids of factors whose scope contains vertex i.
    incidence: Vec<Vec<FactorId>>,
}

impl FactorGraph {
    /// Build the graph, computing per-vertex incidence. Factor order is
    /// preserved from the input; ids are list positions.
    pub fn new(p: usize, factors: Vec<Factor>) -> Result<Self> {
        for f in &factors {
            if let Some(&v) = f.scope.iter().find(|&&v| v >= p) {
                return Err(Error::VertexOutOfRange { vertex: v, p });
            }
        }
        // Duplicate detection: same scope AND same payload.
        let mut seen: BTreeMap<&[usize], Vec<usize>> = BTreeMap::new();
        for (id, f) in factors.iter().enumerate() {
            let bucket = seen.entry(f.scope.as_slice()).or_default();
            if let Some(&other) = bucket.iter().find(|&&o| factors[o].tag == f.tag) {
                return Err(Error::DuplicateFactor {
                    first: other,
                    second: id,
                });
            }
            bucket.push(id);
        }
        let mut incidence = vec![Vec::new(); p];
        for (id, f) in factors.iter().enumerate() {
            for &v in &f.scope {
                incidence[v].push(id);
            }
        }
        Ok(FactorGraph {
            p,
            factors,
            incidence,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.p
    }

    pub fn factor_count(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn factor(&self, id: FactorId) -> &Factor {
        &self.factors[id]
    }

    /// Ids of factors incident to `vertex` (the set `K_i`).
    pub fn incident(&self, vertex: usize) -> &[FactorId] {
        &self.incidence[vertex]
    }

    /// Interaction order `L`: largest scope size (0 for a factorless graph).
    pub fn interaction_order(&self) -> usize {
        self.factors.iter().map(|f| f.scope.len()).max().unwrap_or(0)
    }

    /// Restriction to a factor subset; same vertices, incidence rebuilt,
    /// relative factor order preserved. Ids are re-assigned by position.
    pub fn induced_subgraph(&self, keep: &[FactorId]) -> Result<FactorGraph> {
        let mut mask = vec![false; self.factors.len()];
        for &id in keep {
            if id >= self.factors.len() {
                return Err(Error::UnknownFactor(id));
            }
            mask[id] = true;
        }
        let kept = self
            .factors
            .iter()
            .enumerate()
            .filter(|(id, _)| mask[*id])
            .map(|(_, f)| f.clone())
            .collect();
        FactorGraph::new(self.p, kept)
    }

    /// Maximal factors, cliques and spans of the whole graph.
    pub fn clique_structure(&self) -> CliqueStructure {
        let all: Vec<FactorId> = (0..self.factors.len()).collect();
        self.clique_structure_of(&all)
    }

    /// Clique structure of the subgraph induced by `active`, reported in the
    /// original factor ids. Equivalent to `induced_subgraph(active)` followed
    /// by `clique_structure`, without re-indexing.
    pub fn clique_structure_of(&self, active: &[FactorId]) -> CliqueStructure {
        let mut maximal_factors = Vec::new();
        for &k in active {
            let sk = &self.factors[k].scope;
            let dominated = active.iter().any(|&k2| {
                k2 != k && is_strict_subset(sk, &self.factors[k2].scope)
            });
            if !dominated {
                maximal_factors.push(k);
            }
        }
        let mut spans: BTreeMap<Vec<usize>, Vec<FactorId>> = BTreeMap::new();
        for &k in &maximal_factors {
            spans
                .entry(self.factors[k].scope.clone())
                .or_default()
                .push(k);
        }
        CliqueStructure {
            maximal_factors,
            spans,
        }
    }

    /// Distinct scopes present in the graph, smallest-first. Every scope is a
    /// potential maximal clique of some induced subgraph, which is the set the
    /// clique-conditioning diagnostics minimize over.
    pub fn distinct_scopes(&self) -> Vec<Vec<usize>> {
        let mut scopes: Vec<Vec<usize>> = Vec::new();
        for f in &self.factors {
            if !scopes.contains(&f.scope) {
                scopes.push(f.scope.clone());
            }
        }
        scopes.sort();
        scopes
    }

    /// Ids of factors whose scope equals `scope` exactly.
    pub fn span_of_scope(&self, scope: &[usize]) -> Vec<FactorId> {
        (0..self.factors.len())
            .filter(|&k| self.factors[k].scope == scope)
            .collect()
    }
}

/// `a` strictly contained in `b`, both sorted.
fn is_strict_subset(a: &[usize], b: &[usize]) -> bool {
    if a.len() >= b.len() {
        return false;
    }
    let mut it = b.iter();
    a.iter().all(|x| it.any(|y| y == x))
}

/// Maximal factors with their cliques and spans.
#[derive(Debug, Clone, PartialEq)]
pub struct CliqueStructure {
    maximal_factors: Vec<FactorId>,
    spans: BTreeMap<Vec<usize>, Vec<FactorId>>,
}

impl CliqueStructure {
    /// Factors whose neighborhood is not strictly contained in another's.
    pub fn maximal_factors(&self) -> &[FactorId] {
        &self.maximal_factors
    }

    /// Sorted list of maximal cliques (vertex sets).
    pub fn maximal_cliques(&self) -> Vec<Vec<usize>> {
        self.spans.keys().cloned().collect()
    }

    /// Clique -> ids of the factors sharing it as neighborhood.
    pub fn spans(&self) -> &BTreeMap<Vec<usize>, Vec<FactorId>> {
        &self.spans
    }

    /// Maximal factors containing `vertex`; the per-node target set.
    pub fn targets_of(&self, vertex: usize, graph: &FactorGraph) -> Vec<FactorId> {
        self.maximal_factors
            .iter()
            .copied()
            .filter(|&k| graph.factor(k).scope_position(vertex).is_some())
            .collect()
    }
}

/// A family: incidence structure, alphabets, basis kind. Carries no
/// parameters; a model is a family plus theta.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFamily {
    graph: FactorGraph,
    alphabet: Alphabet,
    basis: BasisKind,
}

impl ModelFamily {
    pub fn new(graph: FactorGraph, alphabet: Alphabet, basis: BasisKind) -> Result<Self> {
        if alphabet.vertex_count() != graph.vertex_count() {
            return Err(Error::InvalidAlphabet(format!(
                "alphabet covers {} vertices, graph has {}",
                alphabet.vertex_count(),
                graph.vertex_count()
            )));
        }
        for (id, f) in graph.factors().iter().enumerate() {
            validate_payload(id, f, &alphabet, basis)?;
        }
        Ok(ModelFamily {
            graph,
            alphabet,
            basis,
        })
    }

    pub fn graph(&self) -> &FactorGraph {
        &self.graph
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn basis(&self) -> BasisKind {
        self.basis
    }

    pub fn vertex_count(&self) -> usize {
        self.graph.vertex_count()
    }

    /// Family restricted to a factor subset (alphabet and basis unchanged).
    pub fn restrict(&self, keep: &[FactorId]) -> Result<ModelFamily> {
        Ok(ModelFamily {
            graph: self.graph.induced_subgraph(keep)?,
            alphabet: self.alphabet.clone(),
            basis: self.basis,
        })
    }
}

fn validate_payload(id: usize, f: &Factor, alphabet: &Alphabet, basis: BasisKind) -> Result<()> {
    match (basis, f.tag()) {
        (BasisKind::Monomial, BasisTag::Monomial) => {
            if let Some(&v) = f.scope().iter().find(|&&v| alphabet.size(v) != 2) {
                return Err(Error::InvalidBasisPayload {
                    factor: id,
                    reason: format!(
                        "monomial basis needs binary alphabets, vertex {v} has q = {}",
                        alphabet.size(v)
                    ),
                });
            }
            Ok(())
        }
        (BasisKind::Indicator, BasisTag::Indicator(letters)) => {
            if letters.len() != f.scope().len() {
                return Err(Error::InvalidBasisPayload {
                    factor: id,
                    reason: format!(
                        "assignment has {} letters for scope of size {}",
                        letters.len(),
                        f.scope().len()
                    ),
                });
            }
            for (&s, &v) in letters.iter().zip(f.scope()) {
                if (s as usize) >= alphabet.size(v) {
                    return Err(Error::InvalidBasisPayload {
                        factor: id,
                        reason: format!(
                            "letter {s} out of range for vertex {v} (q = {})",
                            alphabet.size(v)
                        ),
                    });
                }
            }
            Ok(())
        }
        (BasisKind::Custom, BasisTag::Custom(table)) => {
            let expect = alphabet.subset_space(f.scope());
            if table.len() as u128 != expect {
                return Err(Error::InvalidBasisPayload {
                    factor: id,
                    reason: format!("table has {} entries, scope needs {expect}", table.len()),
                });
            }
            Ok(())
        }
        (kind, _) => Err(Error::InvalidBasisPayload {
            factor: id,
            reason: format!("payload does not match declared {} basis", kind.as_str()),
        }),
    }
}

/// A concrete model: family plus parameters `theta`, one per factor.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphicalModel {
    family: ModelFamily,
    theta: Vec<f64>,
}

impl GraphicalModel {
    pub fn new(family: ModelFamily, theta: Vec<f64>) -> Result<Self> {
        if theta.len() != family.graph().factor_count() {
            return Err(Error::ThetaLengthMismatch {
                got: theta.len(),
                expected: family.graph().factor_count(),
            });
        }
        Ok(GraphicalModel { family, theta })
    }

    pub fn family(&self) -> &ModelFamily {
        &self.family
    }

    pub fn graph(&self) -> &FactorGraph {
        self.family.graph()
    }

    pub fn alphabet(&self) -> &Alphabet {
        self.family.alphabet()
    }

    pub fn basis(&self) -> BasisKind {
        self.family.basis()
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Ids of factors with nonzero parameters; their induced subgraph is the
    /// model's own factor graph, whose maximal cliques are the structure.
    pub fn support(&self) -> Vec<FactorId> {
        (0..self.theta.len())
            .filter(|&k| self.theta[k] != 0.0)
            .collect()
    }

    /// Maximal cliques of the factors actually present in the model.
    pub fn structure(&self) -> Vec<Vec<usize>> {
        self.graph()
            .clique_structure_of(&self.support())
            .maximal_cliques()
    }
}

/// Per-vertex interaction strength and whether it is exact or an l1 bound.
#[derive(Debug, Clone, PartialEq)]
pub struct StrengthBound {
    pub vertex: usize,
    pub value: f64,
    /// True when computed by exhaustive enumeration of the joint scope.
    pub exact: bool,
}

/// Per-vertex and global maximum interaction strength report.
#[derive(Debug, Clone, PartialEq)]
pub struct StrengthReport {
    pub per_vertex: Vec<StrengthBound>,
    pub global: f64,
    /// True when every per-vertex value is exact.
    pub exact: bool,
}

/// Max over configurations of |sum_k theta_k g_uk| per vertex, exact by
/// enumeration over the joint scope of `K_u` when that space is within `cap`
/// (default [`DEFAULT_ENUMERATION_CAP`]), otherwise the l1 upper bound
/// sum_k |theta_k| max|g_uk|.
pub fn interaction_strength_bound(
    model: &GraphicalModel,
    cap: Option<u128>,
) -> Result<StrengthReport> {
    let cap = cap.unwrap_or(DEFAULT_ENUMERATION_CAP);
    let tables = BasisTables::build(model.family())?;
    let graph = model.graph();
    let alphabet = model.alphabet();
    let mut per_vertex = Vec::with_capacity(graph.vertex_count());
    for u in 0..graph.vertex_count() {
        let ids = graph.incident(u);
        if ids.is_empty() {
            per_vertex.push(StrengthBound {
                vertex: u,
                value: 0.0,
                exact: true,
            });
            continue;
        }
        // Joint scope of K_u.
        let mut joint: Vec<usize> = Vec::new();
        for &k in ids {
            for &v in graph.factor(k).scope() {
                if !joint.contains(&v) {
                    joint.push(v);
                }
            }
        }
        joint.sort_unstable();
        let space = alphabet.subset_space(&joint);
        if space <= cap {
            let sizes: Vec<usize> = joint.iter().map(|&v| alphabet.size(v)).collect();
            let pos_of = |v: usize| joint.binary_search(&v).expect("in joint scope");
            let mut config = vec![0u8; joint.len()];
            let mut best = 0.0f64;
            loop {
                let mut energy = 0.0;
                for &k in ids {
                    let ft = tables.factor(k);
                    let sub: Vec<u8> = graph.factor(k).scope().iter().map(|&v| config[pos_of(v)]).collect();
                    let idx = ft.config_index(&sub);
                    let gpos = graph.factor(k).scope_position(u).expect("u in scope");
                    energy += model.theta()[k] * ft.g(gpos)[idx];
                }
                best = best.max(energy.abs());
                if !next_config(&mut config, &sizes) {
                    break;
                }
            }
            per_vertex.push(StrengthBound {
                vertex: u,
                value: best,
                exact: true,
            });
        } else {
            let bound: f64 = ids
                .iter()
                .map(|&k| {
                    let ft = tables.factor(k);
                    let gpos = graph.factor(k).scope_position(u).expect("u in scope");
                    model.theta()[k].abs() * ft.max_abs_g(gpos)
                })
                .sum();
            per_vertex.push(StrengthBound {
                vertex: u,
                value: bound,
                exact: false,
            });
        }
    }
    let global = per_vertex.iter().map(|b| b.value).fold(0.0, f64::max);
    let exact = per_vertex.iter().all(|b| b.exact);
    Ok(StrengthReport {
        per_vertex,
        global,
        exact,
    })
}

/// Advance a mixed-radix configuration, last position fastest. Returns false
/// after the last configuration.
pub fn next_config(config: &mut [u8], sizes: &[usize]) -> bool {
    for i in (0..config.len()).rev() {
        if (config[i] as usize) + 1 < sizes[i] {
            config[i] += 1;
            return true;
        }
        config[i] = 0;
    }
    false
}
