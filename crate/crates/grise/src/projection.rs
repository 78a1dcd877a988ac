//! Equi-cost projections onto parametrically complete constraint sets.
//!
//! For the indicator basis, the parameters of the factors sharing one scope
//! form an array over letter assignments; the projector contracts that array
//! with the centered indicator matrix along every scope axis. The projected
//! array is zero-sum over each axis and induces the same local energy, so the
//! screening objective is unchanged.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::{BasisTag, FactorGraph, FactorId, ModelFamily};

/// The factors of one scope, viewed as an array over letter assignments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScopeGroup {
    /// Scope vertices (sorted).
    pub scope: Vec<usize>,
    /// Alphabet sizes along the scope.
    pub sizes: Vec<usize>,
    /// For each assignment index (row-major, last scope index fastest), the
    /// coordinate of that factor inside the local parameter vector.
    pub coords: Vec<usize>,
}

/// A user-registered equi-cost projection.
pub type ProjectorFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Constraint set attached to a local problem.
#[derive(Clone)]
pub enum ConstraintDescriptor {
    /// Only the l1 ball; no linear constraints.
    Trivial,
    /// Zero-sum constraints over each indicator scope group.
    IndicatorZeroSum(Vec<ScopeGroup>),
    /// A user-registered equi-cost projector, or none (rejected on use).
    CustomProjector(Option<ProjectorFn>),
}

impl fmt::Debug for ConstraintDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstraintDescriptor::Trivial => write!(f, "Trivial"),
            ConstraintDescriptor::IndicatorZeroSum(groups) => f
                .debug_tuple("IndicatorZeroSum")
                .field(&groups.len())
                .finish(),
            ConstraintDescriptor::CustomProjector(p) => f
                .debug_tuple("CustomProjector")
                .field(&p.is_some())
                .finish(),
        }
    }
}

impl ConstraintDescriptor {
    pub fn is_trivial(&self) -> bool {
        matches!(self, ConstraintDescriptor::Trivial)
    }

    /// Build the zero-sum groups for the listed factors of an indicator
    /// family. Every scope must carry all of its assignments, otherwise no
    /// equi-cost projection exists.
    pub fn indicator_zero_sum(family: &ModelFamily, ids: &[FactorId]) -> Result<Self> {
        let groups = scope_groups(family.graph(), family.alphabet().sizes(), ids)?;
        Ok(ConstraintDescriptor::IndicatorZeroSum(groups))
    }
}

fn scope_groups(
    graph: &FactorGraph,
    alphabet: &[usize],
    ids: &[FactorId],
) -> Result<Vec<ScopeGroup>> {
    let mut groups: Vec<ScopeGroup> = Vec::new();
    let mut assigned: Vec<Vec<bool>> = Vec::new();
    for (pos, &k) in ids.iter().enumerate() {
        let factor = graph.factor(k);
        let letters = match factor.tag() {
            BasisTag::Indicator(letters) => letters,
            _ => {
                return Err(Error::UnsupportedConstraint(format!(
                    "factor {k} is not an indicator factor"
                )))
            }
        };
        let scope = factor.scope().to_vec();
        let sizes: Vec<usize> = scope.iter().map(|&v| alphabet[v]).collect();
        let gi = match groups.iter().position(|g| g.scope == scope) {
            Some(gi) => gi,
            None => {
                let len: usize = sizes.iter().product();
                groups.push(ScopeGroup {
                    scope: scope.clone(),
                    sizes: sizes.clone(),
                    coords: vec![usize::MAX; len],
                });
                assigned.push(vec![false; len]);
                groups.len() - 1
            }
        };
        let idx = crate::basis::config_index(letters, &groups[gi].sizes);
        if assigned[gi][idx] {
            return Err(Error::NotParametricallyComplete(format!(
                "scope {scope:?} carries assignment {letters:?} twice"
            )));
        }
        assigned[gi][idx] = true;
        groups[gi].coords[idx] = pos;
    }
    for (g, seen) in groups.iter().zip(&assigned) {
        if seen.iter().any(|&s| !s) {
            return Err(Error::NotParametricallyComplete(format!(
                "scope {:?} has {} of {} assignments",
                g.scope,
                seen.iter().filter(|&&s| s).count(),
                seen.len()
            )));
        }
    }
    Ok(groups)
}

/// Contract a row-major tensor with the symmetric centered-indicator matrix
/// `Phi` (size q x q) along one axis.
fn apply_phi_axis(values: &[f64], sizes: &[usize], axis: usize) -> Vec<f64> {
    let q = sizes[axis];
    let inner: usize = sizes[axis + 1..].iter().product();
    let outer: usize = sizes[..axis].iter().product();
    let mut out = vec![0.0; values.len()];
    for o in 0..outer {
        for i in 0..inner {
            let base = o * q * inner + i;
            let mut total = 0.0;
            for s in 0..q {
                total += values[base + s * inner];
            }
            let mean = total / q as f64;
            for s in 0..q {
                out[base + s * inner] = values[base + s * inner] - mean;
            }
        }
    }
    out
}

/// Project a per-assignment parameter array of one scope onto the zero-sum
/// subspace: `[P theta]_sigma = sum_s theta_s prod_i Phi(s_i, sigma_i)`.
/// Since `Phi` is a projector on each axis this is centering along every
/// axis; the array size must cover all assignments of the scope.
pub fn project_indicator(theta_group: &[f64], sizes: &[usize]) -> Result<Vec<f64>> {
    let expect: usize = sizes.iter().product();
    if theta_group.len() != expect {
        return Err(Error::NotParametricallyComplete(format!(
            "group has {} entries, scope needs {expect}",
            theta_group.len()
        )));
    }
    let mut out = theta_group.to_vec();
    for axis in 0..sizes.len() {
        out = apply_phi_axis(&out, sizes, axis);
    }
    Ok(out)
}

/// Equi-cost projection of a local parameter vector. Trivial constraints are
/// the identity; zero-sum constraints project each scope group; a registered
/// custom projector is applied as-is. The projected vector may have a larger
/// l1 norm than the input; callers record it rather than re-project.
pub fn project(theta_u: &[f64], descriptor: &ConstraintDescriptor) -> Result<Vec<f64>> {
    match descriptor {
        ConstraintDescriptor::Trivial => Ok(theta_u.to_vec()),
        ConstraintDescriptor::IndicatorZeroSum(groups) => {
            let mut out = theta_u.to_vec();
            for g in groups {
                let gathered: Vec<f64> = g.coords.iter().map(|&c| theta_u[c]).collect();
                let projected = project_indicator(&gathered, &g.sizes)?;
                for (&c, &x) in g.coords.iter().zip(&projected) {
                    out[c] = x;
                }
            }
            Ok(out)
        }
        ConstraintDescriptor::CustomProjector(Some(p)) => Ok(p(theta_u)),
        ConstraintDescriptor::CustomProjector(None) => Err(Error::UnsupportedConstraint(
            "custom projector not registered".into(),
        )),
    }
}

/// Largest absolute zero-sum residual over all groups, axes and reduced
/// configurations; the feasibility measure reported post-projection.
pub fn zero_sum_residual(theta_u: &[f64], descriptor: &ConstraintDescriptor) -> f64 {
    let groups = match descriptor {
        ConstraintDescriptor::IndicatorZeroSum(groups) => groups,
        _ => return 0.0,
    };
    let mut worst = 0.0f64;
    for g in groups {
        let values: Vec<f64> = g.coords.iter().map(|&c| theta_u[c]).collect();
        for axis in 0..g.sizes.len() {
            let q = g.sizes[axis];
            let inner: usize = g.sizes[axis + 1..].iter().product();
            let outer: usize = g.sizes[..axis].iter().product();
            for o in 0..outer {
                for i in 0..inner {
                    let base = o * q * inner + i;
                    let sum: f64 = (0..q).map(|s| values[base + s * inner]).sum();
                    worst = worst.max(sum.abs());
                }
            }
        }
    }
    worst
}
