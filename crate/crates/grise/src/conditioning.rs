//! Identifiability diagnostics on enumerable models: clique parameterization
//! matrices, nonsingular-parameterization-of-cliques constants, and local
//! learnability constants.
//!
//! The clique set these diagnostics minimize over is every distinct factor
//! scope of the family, since any scope can surface as a maximal clique of
//! some induced subgraph during multi-round screening; with field factors
//! present this reproduces the closed-form constants for the built-in bases
//! (1 for the monomial basis, at least `exp(-2 gamma)/q` for the indicator
//! basis). For the indicator basis all quadratic forms are restricted to the
//! zero-sum subspace the parameters live in; elsewhere the full space is
//! used, so duplicated factors surface as zero eigenvalues.

use crate::basis::{config_index, BasisTables};
use crate::error::{Error, Result};
use crate::linalg::{min_restricted_rayleigh, smallest_eigenvalue, zero_sum_basis};
use crate::model::{
    interaction_strength_bound, next_config, BasisKind, BasisTag, FactorId, GraphicalModel,
    ModelFamily,
};
use crate::oracle::{enumerate_distribution, fisher_gram};
use crate::projection::ConstraintDescriptor;

/// Values below this are reported as degenerate parameterizations.
pub const DEGENERACY_TOLERANCE: f64 = 1e-10;

/// Gram matrix of the globally centered span functions of one clique,
/// summed over the clique configurations.
#[derive(Debug, Clone)]
pub struct CliqueMatrix {
    pub clique: Vec<usize>,
    pub span: Vec<FactorId>,
    pub matrix: Vec<Vec<f64>>,
    /// Smallest eigenvalue on the feasible parameter subspace (zero-sum for
    /// complete indicator spans, the full space otherwise).
    pub lambda_min: f64,
}

/// Orthonormal basis of the feasible parameter subspace of a span: for a
/// complete indicator span the tensor zero-sum basis mapped onto span
/// positions, otherwise the identity.
fn span_subspace(family: &ModelFamily, span: &[FactorId]) -> Vec<Vec<f64>> {
    let identity = || {
        (0..span.len())
            .map(|i| {
                let mut v = vec![0.0; span.len()];
                v[i] = 1.0;
                v
            })
            .collect::<Vec<_>>()
    };
    if family.basis() != BasisKind::Indicator || span.is_empty() {
        return identity();
    }
    let scope = family.graph().factor(span[0]).scope().to_vec();
    let sizes: Vec<usize> = scope.iter().map(|&v| family.alphabet().size(v)).collect();
    let total: usize = sizes.iter().product();
    if span.len() != total {
        return identity();
    }
    let mut position_of_assignment = vec![usize::MAX; total];
    for (pos, &k) in span.iter().enumerate() {
        match family.graph().factor(k).tag() {
            BasisTag::Indicator(letters) => {
                let idx = config_index(letters, &sizes);
                if position_of_assignment[idx] != usize::MAX {
                    return identity();
                }
                position_of_assignment[idx] = pos;
            }
            _ => return identity(),
        }
    }
    zero_sum_basis(&sizes)
        .into_iter()
        .map(|v| {
            let mut mapped = vec![0.0; span.len()];
            for (idx, &x) in v.iter().enumerate() {
                mapped[position_of_assignment[idx]] = x;
            }
            mapped
        })
        .collect()
}

/// Exact clique parameterization matrix `G[k][k'] = sum over clique
/// configurations of h_k h_k'`, with its smallest (subspace-restricted)
/// eigenvalue.
pub fn clique_matrix(
    family: &ModelFamily,
    clique: &[usize],
    cap: Option<u128>,
) -> Result<CliqueMatrix> {
    let cap = cap.unwrap_or(crate::model::DEFAULT_ENUMERATION_CAP);
    let space = family.alphabet().subset_space(clique);
    if space > cap {
        return Err(Error::StateSpaceTooLarge { size: space, cap });
    }
    let span = family.graph().span_of_scope(clique);
    if span.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "no factors have scope {clique:?}"
        )));
    }
    let tables = BasisTables::build(family)?;
    let m = span.len();
    let mut matrix = vec![vec![0.0; m]; m];
    let sizes: Vec<usize> = clique.iter().map(|&v| family.alphabet().size(v)).collect();
    let mut config = vec![0u8; clique.len()];
    loop {
        let hs: Vec<f64> = span
            .iter()
            .map(|&k| {
                let ft = tables.factor(k);
                ft.h()[ft.config_index(&config)]
            })
            .collect();
        for a in 0..m {
            for b in a..m {
                matrix[a][b] += hs[a] * hs[b];
            }
        }
        if !next_config(&mut config, &sizes) {
            break;
        }
    }
    for a in 0..m {
        for b in 0..a {
            matrix[a][b] = matrix[b][a];
        }
    }
    let basis = span_subspace(family, &span);
    let restricted = crate::linalg::restrict(&matrix, &basis);
    let lambda_min = smallest_eigenvalue(&restricted);
    Ok(CliqueMatrix {
        clique: clique.to_vec(),
        span,
        matrix,
        lambda_min,
    })
}

/// Exact per-vertex clique-conditioning constant: the minimum over cliques
/// containing the vertex of the smallest restricted eigenvalue of
/// `M[k][k'] = sum_{sigma_i} P(sigma_i) sum_{sigma_{c minus i}} h_k h_k'`.
/// Enumerable models only.
pub fn npc_exact(model: &GraphicalModel, vertex: usize, cap: Option<u128>) -> Result<f64> {
    Ok(npc_vertex(model, vertex, cap)?.rho_exact)
}

/// Per-vertex conditioning numbers: the exact constant, the eigenvalue
/// lower bound `exp(-2 gamma)/q_i * min_c lambda_min(G^c)`, and the
/// minimizing clique.
#[derive(Debug, Clone)]
pub struct NpcVertexReport {
    pub vertex: usize,
    pub rho_exact: f64,
    pub rho_bound: f64,
    pub min_clique: Vec<usize>,
    pub degenerate: bool,
}

/// Compute the conditioning report for one vertex.
pub fn npc_vertex(
    model: &GraphicalModel,
    vertex: usize,
    cap: Option<u128>,
) -> Result<NpcVertexReport> {
    let family = model.family();
    let dist = enumerate_distribution(model, cap)?;
    let marginal = dist.marginal(vertex);
    let tables = BasisTables::build(family)?;
    let gamma = interaction_strength_bound(model, cap)?.global;
    let q_i = family.alphabet().size(vertex) as f64;
    let mut rho_exact = f64::INFINITY;
    let mut rho_bound = f64::INFINITY;
    let mut min_clique = Vec::new();
    let mut seen_any = false;
    for clique in family.graph().distinct_scopes() {
        if !clique.contains(&vertex) {
            continue;
        }
        seen_any = true;
        let span = family.graph().span_of_scope(&clique);
        let m = span.len();
        let sizes: Vec<usize> = clique.iter().map(|&v| family.alphabet().size(v)).collect();
        let vpos = clique.binary_search(&vertex).expect("vertex in clique");
        // Per-letter partial Gram over the rest of the clique.
        let mut per_letter = vec![vec![vec![0.0; m]; m]; sizes[vpos]];
        let mut config = vec![0u8; clique.len()];
        loop {
            let hs: Vec<f64> = span
                .iter()
                .map(|&k| {
                    let ft = tables.factor(k);
                    ft.h()[ft.config_index(&config)]
                })
                .collect();
            let slot = &mut per_letter[config[vpos] as usize];
            for a in 0..m {
                for b in a..m {
                    slot[a][b] += hs[a] * hs[b];
                }
            }
            if !next_config(&mut config, &sizes) {
                break;
            }
        }
        let mut cond = vec![vec![0.0; m]; m];
        for (letter, w) in marginal.iter().enumerate() {
            for a in 0..m {
                for b in a..m {
                    cond[a][b] += w * per_letter[letter][a][b];
                }
            }
        }
        for a in 0..m {
            for b in 0..a {
                cond[a][b] = cond[b][a];
            }
        }
        let basis = span_subspace(family, &span);
        let value = smallest_eigenvalue(&crate::linalg::restrict(&cond, &basis));
        if value < rho_exact {
            rho_exact = value;
            min_clique = clique.clone();
        }
        let cm = clique_matrix(family, &clique, cap)?;
        rho_bound = rho_bound.min((-2.0 * gamma).exp() / q_i * cm.lambda_min);
    }
    if !seen_any {
        return Err(Error::InvalidConfig(format!(
            "vertex {vertex} appears in no factor scope"
        )));
    }
    Ok(NpcVertexReport {
        vertex,
        rho_exact,
        rho_bound,
        min_clique,
        degenerate: rho_exact <= DEGENERACY_TOLERANCE,
    })
}

/// Which norm the learnability constant is measured in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LlcNorm {
    L2,
    /// Max over cliques of the l2 norm on each clique's span.
    Linf2,
}

/// Orthonormal basis of the feasible subspace over the vertex's incident
/// factors: block zero-sum bases for indicator scope groups, the identity
/// otherwise.
fn incident_subspace(family: &ModelFamily, ids: &[FactorId]) -> Result<Vec<Vec<f64>>> {
    let dim = ids.len();
    if family.basis() != BasisKind::Indicator {
        return Ok((0..dim)
            .map(|i| {
                let mut v = vec![0.0; dim];
                v[i] = 1.0;
                v
            })
            .collect());
    }
    let descriptor = ConstraintDescriptor::indicator_zero_sum(family, ids)?;
    let groups = match &descriptor {
        ConstraintDescriptor::IndicatorZeroSum(groups) => groups,
        _ => unreachable!(),
    };
    let mut basis = Vec::new();
    for g in groups {
        for v in zero_sum_basis(&g.sizes) {
            let mut mapped = vec![0.0; dim];
            for (idx, &x) in v.iter().enumerate() {
                mapped[g.coords[idx]] = x;
            }
            basis.push(mapped);
        }
    }
    Ok(basis)
}

/// Local learnability constant at a vertex: the minimum of the exact Gram
/// quadratic form `x' E[g g'] x` over feasible `x` normalized on the target
/// block. For the l2 norm this is the smallest eigenvalue of the Schur
/// complement onto the target block; for the linf2 norm the minimum over
/// target cliques of the per-span Schur complement. Free (residual)
/// coordinates are minimized out exactly; singular residual blocks fall back
/// to the pseudo-inverse.
pub fn llc_constant(
    model: &GraphicalModel,
    vertex: usize,
    targets: &[FactorId],
    norm: LlcNorm,
    cap: Option<u128>,
) -> Result<f64> {
    let family = model.family();
    let ids = family.graph().incident(vertex).to_vec();
    if targets.is_empty() {
        return Err(Error::InvalidConfig("empty target set".into()));
    }
    let positions: Vec<usize> = targets
        .iter()
        .map(|t| {
            ids.iter()
                .position(|k| k == t)
                .ok_or_else(|| Error::InvalidConfig(format!(
                    "target factor {t} is not incident to vertex {vertex}"
                )))
        })
        .collect::<Result<Vec<_>>>()?;
    let gram = fisher_gram(model, vertex, cap)?;
    let basis = incident_subspace(family, &ids)?;
    match norm {
        LlcNorm::L2 => min_restricted_rayleigh(&gram, &basis, &positions).ok_or_else(|| {
            Error::InvalidConfig("target normalization infeasible on the constraint subspace".into())
        }),
        LlcNorm::Linf2 => {
            // Group target factors by scope (clique spans).
            let mut groups: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
            for (&t, &pos) in targets.iter().zip(&positions) {
                let scope = family.graph().factor(t).scope().to_vec();
                match groups.iter_mut().find(|(s, _)| *s == scope) {
                    Some((_, v)) => v.push(pos),
                    None => groups.push((scope, vec![pos])),
                }
            }
            let mut best = f64::INFINITY;
            for (_, coords) in &groups {
                let value =
                    min_restricted_rayleigh(&gram, &basis, coords).ok_or_else(|| {
                        Error::InvalidConfig(
                            "target normalization infeasible on the constraint subspace".into(),
                        )
                    })?;
                best = best.min(value);
            }
            Ok(best)
        }
    }
}

/// Numeric check of the clique-conditioning lower bounds on the
/// learnability constants.
#[derive(Debug, Clone)]
pub struct LlcBoundsReport {
    pub vertex: usize,
    pub gamma: f64,
    pub rho_npc: f64,
    pub llc_linf2: f64,
    /// `rho_npc (exp(-2 gamma)/q)^(L-1)`.
    pub linf2_lower_bound: f64,
    pub linf2_holds: bool,
    /// l2 data, present for pairwise models when `chi` was supplied.
    pub llc_l2: Option<f64>,
    pub l2_lower_bound: Option<f64>,
    pub l2_holds: Option<bool>,
}

const BOUND_SLACK: f64 = 1e-8;

/// Verify the learnability lower bounds at one vertex, with targets set to
/// the maximal factors containing it. `chi` (a vertex chromatic number of
/// the model graph) enables the pairwise l2 check.
pub fn verify_llc_bounds(
    model: &GraphicalModel,
    vertex: usize,
    chi: Option<f64>,
    cap: Option<u128>,
) -> Result<LlcBoundsReport> {
    let family = model.family();
    let graph = family.graph();
    let targets = graph.clique_structure().targets_of(vertex, graph);
    let gamma = interaction_strength_bound(model, cap)?.global;
    let q = family.alphabet().max_size() as f64;
    let order = graph.interaction_order();
    let rho_npc = npc_exact(model, vertex, cap)?;
    let llc_linf2 = llc_constant(model, vertex, &targets, LlcNorm::Linf2, cap)?;
    let linf2_lower_bound =
        rho_npc * ((-2.0 * gamma).exp() / q).powi(order.saturating_sub(1) as i32);
    let linf2_holds = llc_linf2 >= linf2_lower_bound - BOUND_SLACK;
    let (llc_l2, l2_lower_bound, l2_holds) = match chi {
        Some(chi) if order <= 2 => {
            let value = llc_constant(model, vertex, &targets, LlcNorm::L2, cap)?;
            let bound = rho_npc / chi * (-2.0 * gamma).exp() / q;
            (Some(value), Some(bound), Some(value >= bound - BOUND_SLACK))
        }
        _ => (None, None, None),
    };
    Ok(LlcBoundsReport {
        vertex,
        gamma,
        rho_npc,
        llc_linf2,
        linf2_lower_bound,
        linf2_holds,
        llc_l2,
        l2_lower_bound,
        l2_holds,
    })
}
