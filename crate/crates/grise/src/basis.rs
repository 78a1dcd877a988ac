//! Basis function evaluation and centering.
//!
//! Every factor's basis function is expanded once into a dense table over its
//! scope configurations (row-major, last scope index fastest). From the `f`
//! table we derive, per scope vertex `i`, the local centering function `phi`
//! (the alphabet average over `sigma_i`) and the locally centered `g = f -
//! phi`, plus the globally centered `h` through inclusion-exclusion over the
//! scope powerset. Tables are immutable after construction and shared freely.

use crate::error::{Error, Result};
use crate::model::{next_config, Alphabet, BasisTag, Factor, FactorId, ModelFamily};

/// Centered univariate indicator: `1 - 1/q` when `sigma == s`, else `-1/q`.
pub fn phi_indicator(q: usize, s: u8, sigma: u8) -> f64 {
    if sigma == s {
        1.0 - 1.0 / q as f64
    } else {
        -1.0 / q as f64
    }
}

/// Spin encoding for binary alphabets: symbol 0 -> -1, symbol 1 -> +1.
pub fn spin(symbol: u8) -> f64 {
    2.0 * symbol as f64 - 1.0
}

/// Evaluate a factor's basis function at a configuration of its scope.
pub fn eval_f(factor: &Factor, alphabet: &Alphabet, config: &[u8]) -> Result<f64> {
    let scope = factor.scope();
    if config.len() != scope.len() {
        return Err(Error::InvalidScope(format!(
            "configuration has {} symbols for scope of size {}",
            config.len(),
            scope.len()
        )));
    }
    for (pos, (&sym, &v)) in config.iter().zip(scope).enumerate() {
        if sym as usize >= alphabet.size(v) {
            return Err(Error::BadSymbol {
                row: 0,
                vertex: v,
                symbol: sym as usize,
                q: alphabet.size(v),
            });
        }
        let _ = pos;
    }
    match factor.tag() {
        BasisTag::Monomial => Ok(config.iter().map(|&s| spin(s)).product()),
        BasisTag::Indicator(letters) => Ok(config
            .iter()
            .zip(letters)
            .zip(scope)
            .map(|((&sigma, &s), &v)| phi_indicator(alphabet.size(v), s, sigma))
            .product()),
        BasisTag::Custom(table) => {
            let sizes: Vec<usize> = scope.iter().map(|&v| alphabet.size(v)).collect();
            let idx = config_index(config, &sizes);
            table
                .get(idx)
                .copied()
                .ok_or_else(|| Error::InvalidBasisPayload {
                    factor: 0,
                    reason: format!("table entry {idx} missing"),
                })
        }
    }
}

/// Row-major index of a scope configuration, last scope index fastest.
pub fn config_index(config: &[u8], sizes: &[usize]) -> usize {
    let mut idx = 0usize;
    for (&c, &q) in config.iter().zip(sizes) {
        idx = idx * q + c as usize;
    }
    idx
}

/// Inverse of [`config_index`].
pub fn config_of_index(mut idx: usize, sizes: &[usize]) -> Vec<u8> {
    let mut config = vec![0u8; sizes.len()];
    for pos in (0..sizes.len()).rev() {
        config[pos] = (idx % sizes[pos]) as u8;
        idx /= sizes[pos];
    }
    config
}

fn table_len(sizes: &[usize]) -> usize {
    sizes.iter().product()
}

/// Expand a factor into its dense `f` table.
fn f_table(factor: &Factor, alphabet: &Alphabet) -> Result<Vec<f64>> {
    let sizes: Vec<usize> = factor.scope().iter().map(|&v| alphabet.size(v)).collect();
    let mut values = Vec::with_capacity(table_len(&sizes));
    let mut config = vec![0u8; sizes.len()];
    loop {
        values.push(eval_f(factor, alphabet, &config)?);
        if !next_config(&mut config, &sizes) {
            break;
        }
    }
    Ok(values)
}

/// The `phi` (over the reduced scope) and `g` (over the full scope) tables of
/// one factor centered at one of its scope vertices.
#[derive(Debug, Clone)]
pub struct CenteredSlice {
    /// Local centering function, indexed by the scope configuration with the
    /// centered position removed.
    pub phi: Vec<f64>,
    /// Locally centered function over the full scope configuration.
    pub g: Vec<f64>,
}

/// Reduced index of `config` with position `skip` removed.
fn reduced_index(config: &[u8], sizes: &[usize], skip: usize) -> usize {
    let mut idx = 0usize;
    for (pos, (&c, &q)) in config.iter().zip(sizes).enumerate() {
        if pos != skip {
            idx = idx * q + c as usize;
        }
    }
    idx
}

fn center_table(values: &[f64], sizes: &[usize], pos: usize) -> CenteredSlice {
    let q = sizes[pos] as f64;
    let reduced_len = table_len(sizes) / sizes[pos];
    let mut phi = vec![0.0; reduced_len];
    let mut config = vec![0u8; sizes.len()];
    let mut idx = 0;
    loop {
        phi[reduced_index(&config, sizes, pos)] += values[idx] / q;
        idx += 1;
        if !next_config(&mut config, sizes) {
            break;
        }
    }
    let mut g = vec![0.0; values.len()];
    let mut config = vec![0u8; sizes.len()];
    let mut idx = 0;
    loop {
        g[idx] = values[idx] - phi[reduced_index(&config, sizes, pos)];
        idx += 1;
        if !next_config(&mut config, sizes) {
            break;
        }
    }
    CenteredSlice { phi, g }
}

/// Local centering of a factor at vertex `vertex` (which must be in scope):
/// `phi = alphabet mean over sigma_vertex of f`, `g = f - phi`.
pub fn local_center(factor: &Factor, alphabet: &Alphabet, vertex: usize) -> Result<CenteredSlice> {
    let pos = factor
        .scope_position(vertex)
        .ok_or_else(|| Error::InvalidScope(format!("vertex {vertex} not in scope")))?;
    let sizes: Vec<usize> = factor.scope().iter().map(|&v| alphabet.size(v)).collect();
    let f = f_table(factor, alphabet)?;
    Ok(center_table(&f, &sizes, pos))
}

/// Globally centered table via inclusion-exclusion over the nonempty subsets
/// of the scope: each subset `r` contributes `(-1)^|r| / |A_r|` times the
/// partial sum of `f` over the variables in `r`.
pub fn global_center_table(values: &[f64], sizes: &[usize]) -> Vec<f64> {
    let m = sizes.len();
    let mut h = values.to_vec();
    for mask in 1u32..(1 << m) {
        let r: Vec<usize> = (0..m).filter(|&pos| mask >> pos & 1 == 1).collect();
        let a_r: usize = r.iter().map(|&pos| sizes[pos]).product();
        let sign = if r.len() % 2 == 1 { -1.0 } else { 1.0 };
        let coeff = sign / a_r as f64;
        // Partial sum over the variables in r, indexed by the rest.
        let rest: Vec<usize> = (0..m).filter(|&pos| mask >> pos & 1 == 0).collect();
        let rest_sizes: Vec<usize> = rest.iter().map(|&pos| sizes[pos]).collect();
        let mut partial = vec![0.0; table_len(&rest_sizes)];
        let mut config = vec![0u8; m];
        let mut idx = 0;
        loop {
            let rkey: Vec<u8> = rest.iter().map(|&pos| config[pos]).collect();
            partial[config_index(&rkey, &rest_sizes)] += values[idx];
            idx += 1;
            if !next_config(&mut config, sizes) {
                break;
            }
        }
        let mut config = vec![0u8; m];
        let mut idx = 0;
        loop {
            let rkey: Vec<u8> = rest.iter().map(|&pos| config[pos]).collect();
            h[idx] += coeff * partial[config_index(&rkey, &rest_sizes)];
            idx += 1;
            if !next_config(&mut config, sizes) {
                break;
            }
        }
    }
    h
}

/// Globally centered table of a factor.
pub fn global_center(factor: &Factor, alphabet: &Alphabet) -> Result<Vec<f64>> {
    let sizes: Vec<usize> = factor.scope().iter().map(|&v| alphabet.size(v)).collect();
    let f = f_table(factor, alphabet)?;
    Ok(global_center_table(&f, &sizes))
}

/// Cached dense tables of one factor: `f`, per-position `g`, and `h`.
#[derive(Debug, Clone)]
pub struct FactorTables {
    sizes: Vec<usize>,
    f: Vec<f64>,
    g: Vec<Vec<f64>>,
    h: Vec<f64>,
    max_abs_g: Vec<f64>,
}

impl FactorTables {
    fn build(factor: &Factor, alphabet: &Alphabet) -> Result<Self> {
        let sizes: Vec<usize> = factor.scope().iter().map(|&v| alphabet.size(v)).collect();
        let f = f_table(factor, alphabet)?;
        let mut g = Vec::with_capacity(sizes.len());
        let mut max_abs_g = Vec::with_capacity(sizes.len());
        for pos in 0..sizes.len() {
            let slice = center_table(&f, &sizes, pos);
            max_abs_g.push(slice.g.iter().fold(0.0f64, |m, &x| m.max(x.abs())));
            g.push(slice.g);
        }
        let h = global_center_table(&f, &sizes);
        Ok(FactorTables {
            sizes,
            f,
            g,
            h,
            max_abs_g,
        })
    }

    /// Alphabet sizes along the scope.
    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Row-major index of a scope configuration.
    pub fn config_index(&self, config: &[u8]) -> usize {
        config_index(config, &self.sizes)
    }

    pub fn f(&self) -> &[f64] {
        &self.f
    }

    /// Locally centered table for the scope position `pos`.
    pub fn g(&self, pos: usize) -> &[f64] {
        &self.g[pos]
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn max_abs_g(&self, pos: usize) -> f64 {
        self.max_abs_g[pos]
    }
}

/// All factor tables of a family, computed once.
#[derive(Debug, Clone)]
pub struct BasisTables {
    factors: Vec<FactorTables>,
}

impl BasisTables {
    pub fn build(family: &ModelFamily) -> Result<Self> {
        let factors = family
            .graph()
            .factors()
            .iter()
            .map(|f| FactorTables::build(f, family.alphabet()))
            .collect::<Result<Vec<_>>>()?;
        Ok(BasisTables { factors })
    }

    pub fn factor(&self, id: FactorId) -> &FactorTables {
        &self.factors[id]
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }
}

/// Max |g_ik| for one (vertex, factor) incidence.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationEntry {
    pub factor: FactorId,
    pub vertex: usize,
    pub max_abs_g: f64,
    /// True when `max_abs_g > 1 + 1e-12`.
    pub violates: bool,
}

/// Per-incidence normalization report. Violations warn in library use; the
/// CLI learn path treats them as validation failures.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationReport {
    pub entries: Vec<NormalizationEntry>,
}

pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

impl NormalizationReport {
    pub fn violations(&self) -> Vec<&NormalizationEntry> {
        self.entries.iter().filter(|e| e.violates).collect()
    }

    pub fn is_normalized(&self) -> bool {
        self.entries.iter().all(|e| !e.violates)
    }
}

/// Check `max |g_ik| <= 1` for every incidence of the family.
pub fn check_normalization(family: &ModelFamily) -> Result<NormalizationReport> {
    let tables = BasisTables::build(family)?;
    let mut entries = Vec::new();
    for (id, factor) in family.graph().factors().iter().enumerate() {
        for (pos, &vertex) in factor.scope().iter().enumerate() {
            let max_abs_g = tables.factor(id).max_abs_g(pos);
            entries.push(NormalizationEntry {
                factor: id,
                vertex,
                max_abs_g,
                violates: max_abs_g > 1.0 + NORMALIZATION_TOLERANCE,
            });
        }
    }
    Ok(NormalizationReport { entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Alphabet, Factor};

    /// Independent route to the globally centered table: subtract the axis
    /// mean one variable at a time.
    fn sequential_center(values: &[f64], sizes: &[usize]) -> Vec<f64> {
        let mut out = values.to_vec();
        for pos in 0..sizes.len() {
            out = center_table(&out, sizes, pos).g;
        }
        out
    }

    #[test]
    fn monomial_eval() {
        let f = Factor::monomial(vec![0, 2]).unwrap();
        let alphabet = Alphabet::uniform(3, 2).unwrap();
        // symbols (1, 0) -> spins (+1, -1) -> product -1
        assert_eq!(eval_f(&f, &alphabet, &[1, 0]).unwrap(), -1.0);
        // all symbols 1 -> +1 for any scope
        let f3 = Factor::monomial(vec![0, 1, 2]).unwrap();
        assert_eq!(eval_f(&f3, &alphabet, &[1, 1, 1]).unwrap(), 1.0);
    }

    #[test]
    fn indicator_eval() {
        let alphabet = Alphabet::uniform(1, 3).unwrap();
        let f = Factor::indicator(vec![0], vec![1]).unwrap();
        assert!((eval_f(&f, &alphabet, &[1]).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((eval_f(&f, &alphabet, &[2]).unwrap() + 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn custom_eval_and_size_check() {
        let alphabet = Alphabet::uniform(2, 2).unwrap();
        let f = Factor::custom(vec![0, 1], vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_eq!(eval_f(&f, &alphabet, &[1, 0]).unwrap(), 0.3);
        let short = Factor::custom(vec![0, 1], vec![0.1]).unwrap();
        assert!(eval_f(&short, &alphabet, &[1, 1]).is_err());
    }

    #[test]
    fn bad_symbol_rejected() {
        let alphabet = Alphabet::uniform(2, 2).unwrap();
        let f = Factor::monomial(vec![0, 1]).unwrap();
        assert!(eval_f(&f, &alphabet, &[0, 2]).is_err());
    }

    #[test]
    fn monomial_centering_is_identity() {
        // phi == 0 for monomials, so g == f at every scope vertex.
        let alphabet = Alphabet::uniform(3, 2).unwrap();
        let f = Factor::monomial(vec![0, 1, 2]).unwrap();
        let table = f_table(&f, &alphabet).unwrap();
        for v in 0..3 {
            let slice = local_center(&f, &alphabet, v).unwrap();
            assert!(slice.phi.iter().all(|&x| x.abs() < 1e-15));
            assert_eq!(slice.g, table);
        }
    }

    #[test]
    fn indicator_centering_is_identity() {
        let alphabet = Alphabet::new(vec![3, 4]).unwrap();
        let f = Factor::indicator(vec![0, 1], vec![2, 1]).unwrap();
        let table = f_table(&f, &alphabet).unwrap();
        for v in 0..2 {
            let slice = local_center(&f, &alphabet, v).unwrap();
            assert!(slice.phi.iter().all(|&x| x.abs() < 1e-15));
            for (a, b) in slice.g.iter().zip(&table) {
                assert!((a - b).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn noncentered_example_table() {
        // f(sigma, s) = sigma * (s - 1) over spins; centered at the second
        // vertex: phi = -sigma, g = sigma * s. Config order: (0,0) (0,1)
        // (1,0) (1,1) -> spins (-,-) (-,+) (+,-) (+,+).
        let alphabet = Alphabet::uniform(2, 2).unwrap();
        let table: Vec<f64> = [(-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0), (1.0, 1.0)]
            .iter()
            .map(|&(sigma, s): &(f64, f64)| sigma * (s - 1.0))
            .collect();
        let f = Factor::custom(vec![0, 1], table).unwrap();
        let slice = local_center(&f, &alphabet, 1).unwrap();
        // phi indexed by sigma alone
        assert_eq!(slice.phi, vec![1.0, -1.0]); // -sigma
        assert_eq!(slice.g, vec![1.0, -1.0, -1.0, 1.0]); // sigma*s

        // Globally centered is also sigma*s.
        let h = global_center(&f, &alphabet).unwrap();
        assert_eq!(h, vec![1.0, -1.0, -1.0, 1.0]);
    }

    #[test]
    fn builtin_bases_are_globally_centered() {
        // f == g == h for the monomial and indicator bases.
        let alphabet = Alphabet::uniform(3, 2).unwrap();
        let f = Factor::monomial(vec![0, 1, 2]).unwrap();
        let table = f_table(&f, &alphabet).unwrap();
        assert_eq!(global_center(&f, &alphabet).unwrap(), table);

        let alphabet = Alphabet::new(vec![3, 4]).unwrap();
        let f = Factor::indicator(vec![0, 1], vec![1, 3]).unwrap();
        let table = f_table(&f, &alphabet).unwrap();
        for (h, f) in global_center(&f, &alphabet).unwrap().iter().zip(&table) {
            assert!((h - f).abs() < 1e-15);
        }
    }

    #[test]
    fn vertex_not_in_scope_rejected() {
        let alphabet = Alphabet::uniform(3, 2).unwrap();
        let f = Factor::monomial(vec![0, 1]).unwrap();
        assert!(local_center(&f, &alphabet, 2).is_err());
    }

    #[test]
    fn constant_annihilated_by_global_centering() {
        let alphabet = Alphabet::new(vec![2, 3]).unwrap();
        let f = Factor::custom(vec![0, 1], vec![0.7; 6]).unwrap();
        let h = global_center(&f, &alphabet).unwrap();
        assert!(h.iter().all(|&x| x.abs() < 1e-15));
    }

    #[test]
    fn global_centering_matches_sequential_route() {
        let sizes = vec![2, 3, 2];
        let values: Vec<f64> = (0..12).map(|i| ((i * 37 % 11) as f64 - 5.0) / 7.0).collect();
        let ie = global_center_table(&values, &sizes);
        let seq = sequential_center(&values, &sizes);
        for (a, b) in ie.iter().zip(&seq) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn global_centering_idempotent() {
        let sizes = vec![3, 2];
        let values: Vec<f64> = (0..6).map(|i| (i as f64).sin()).collect();
        let h = global_center_table(&values, &sizes);
        let hh = global_center_table(&h, &sizes);
        for (a, b) in h.iter().zip(&hh) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn centering_sums_vanish() {
        let sizes = vec![2, 3, 4];
        let values: Vec<f64> = (0..24).map(|i| ((i * 13 % 17) as f64 - 8.0) / 9.0).collect();
        let h = global_center_table(&values, &sizes);
        for pos in 0..3 {
            let g = center_table(&values, &sizes, pos).g;
            assert!(partial_sums_vanish(&g, &sizes, pos));
            assert!(partial_sums_vanish(&h, &sizes, pos));
        }
    }

    fn partial_sums_vanish(table: &[f64], sizes: &[usize], pos: usize) -> bool {
        let reduced_len: usize = table_len(sizes) / sizes[pos];
        let mut sums = vec![0.0; reduced_len];
        let mut config = vec![0u8; sizes.len()];
        let mut idx = 0;
        loop {
            sums[reduced_index(&config, sizes, pos)] += table[idx];
            idx += 1;
            if !next_config(&mut config, sizes) {
                break;
            }
        }
        sums.iter().all(|&s| s.abs() < 1e-12)
    }

    #[test]
    fn normalization_report_values() {
        use crate::model::{BasisKind, FactorGraph, ModelFamily};
        // Monomial: max |g| = 1 exactly.
        let graph = FactorGraph::new(2, vec![Factor::monomial(vec![0, 1]).unwrap()]).unwrap();
        let family =
            ModelFamily::new(graph, Alphabet::uniform(2, 2).unwrap(), BasisKind::Monomial).unwrap();
        let report = check_normalization(&family).unwrap();
        assert!(report.is_normalized());
        assert!(report.entries.iter().all(|e| (e.max_abs_g - 1.0).abs() < 1e-15));

        // Indicator pairwise q = 2: max |g| = 1/4.
        let graph = FactorGraph::new(
            2,
            vec![Factor::indicator(vec![0, 1], vec![0, 0]).unwrap()],
        )
        .unwrap();
        let family =
            ModelFamily::new(graph, Alphabet::uniform(2, 2).unwrap(), BasisKind::Indicator)
                .unwrap();
        let report = check_normalization(&family).unwrap();
        assert!(report.entries.iter().all(|e| (e.max_abs_g - 0.25).abs() < 1e-15));

        // Custom with |f| <= 1/2 stays within the bound.
        let graph = FactorGraph::new(
            2,
            vec![Factor::custom(vec![0, 1], vec![0.5, -0.5, 0.25, -0.25]).unwrap()],
        )
        .unwrap();
        let family =
            ModelFamily::new(graph, Alphabet::uniform(2, 2).unwrap(), BasisKind::Custom).unwrap();
        assert!(check_normalization(&family).unwrap().is_normalized());

        // A wild table gets flagged.
        let graph = FactorGraph::new(
            2,
            vec![Factor::custom(vec![0, 1], vec![3.0, 0.0, 0.0, 0.0]).unwrap()],
        )
        .unwrap();
        let family =
            ModelFamily::new(graph, Alphabet::uniform(2, 2).unwrap(), BasisKind::Custom).unwrap();
        assert!(!check_normalization(&family).unwrap().is_normalized());
    }

    #[test]
    fn config_index_round_trip() {
        let sizes = vec![3, 2, 4];
        for idx in 0..24 {
            let config = config_of_index(idx, &sizes);
            assert_eq!(config_index(&config, &sizes), idx);
        }
    }
}
