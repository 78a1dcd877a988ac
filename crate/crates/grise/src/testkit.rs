//! Independent oracles shared by unit, integration and acceptance tests:
//! low-dimensional grid search for reference minimizers, finite-difference
//! gradients, and a chi-square quantile routine. Test support only; not part
//! of the stable API.
#![doc(hidden)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::giso::LocalProblem;
use crate::model::{Alphabet, BasisKind, Factor, FactorGraph, GraphicalModel, ModelFamily};

/// The classic degenerate two-variable family: three non-centered custom
/// factors on one binary pair whose locally centered functions are linearly
/// dependent, so per-node conditionals cannot identify the parameters.
/// Returns the family and a parameter vector with all three factors active.
/// Config order (last vertex fastest): spins (-,-), (-,+), (+,-), (+,+).
pub fn degenerate_pair_family() -> (ModelFamily, Vec<f64>) {
    // f1(sigma, s) = sigma (s - 1), f2 = s (sigma - 1), f3 = sigma + s
    let f1 = vec![2.0, 0.0, -2.0, 0.0];
    let f2 = vec![2.0, -2.0, 0.0, 0.0];
    let f3 = vec![-2.0, 0.0, 0.0, 2.0];
    let graph = FactorGraph::new(
        2,
        vec![
            Factor::custom(vec![0, 1], f1).unwrap(),
            Factor::custom(vec![0, 1], f2).unwrap(),
            Factor::custom(vec![0, 1], f3).unwrap(),
        ],
    )
    .unwrap();
    let family =
        ModelFamily::new(graph, Alphabet::uniform(2, 2).unwrap(), BasisKind::Custom).unwrap();
    (family, vec![0.2, 0.3, 0.1])
}

/// A small random enumerable model: p in 2..=4, mixed bases, fields plus a
/// random subset of pairs (and sometimes one triple, raising the interaction
/// order to 3). All bases normalized; custom tables live in [-1/2, 1/2].
pub fn random_enumerable_model(seed: u64) -> GraphicalModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let basis = match seed % 3 {
        0 => BasisKind::Monomial,
        1 => BasisKind::Indicator,
        _ => BasisKind::Custom,
    };
    let p = rng.gen_range(2..=4usize);
    let q = if basis == BasisKind::Monomial {
        2
    } else {
        rng.gen_range(2..=3usize)
    };
    let alphabet = Alphabet::uniform(p, q).unwrap();
    let mut scopes: Vec<Vec<usize>> = (0..p).map(|v| vec![v]).collect();
    for a in 0..p {
        for b in (a + 1)..p {
            if rng.gen::<f64>() < 0.7 {
                scopes.push(vec![a, b]);
            }
        }
    }
    if p >= 3 && rng.gen::<f64>() < 0.4 {
        scopes.push(vec![0, 1, 2]);
    }
    let mut factors = Vec::new();
    let mut theta = Vec::new();
    for scope in &scopes {
        match basis {
            BasisKind::Monomial => {
                factors.push(Factor::monomial(scope.clone()).unwrap());
                theta.push(rng.gen_range(-0.6..0.6));
            }
            BasisKind::Indicator => {
                let sizes: Vec<usize> = scope.iter().map(|&v| alphabet.size(v)).collect();
                let len: usize = sizes.iter().product();
                let raw: Vec<f64> = (0..len).map(|_| rng.gen_range(-0.4..0.4)).collect();
                let centered = crate::projection::project_indicator(&raw, &sizes).unwrap();
                for (idx, &value) in centered.iter().enumerate() {
                    let letters = crate::basis::config_of_index(idx, &sizes);
                    factors.push(Factor::indicator(scope.clone(), letters).unwrap());
                    theta.push(value);
                }
            }
            BasisKind::Custom => {
                let sizes: Vec<usize> = scope.iter().map(|&v| alphabet.size(v)).collect();
                let len: usize = sizes.iter().product();
                let table: Vec<f64> = (0..len).map(|_| rng.gen_range(-0.5..0.5)).collect();
                factors.push(Factor::custom(scope.clone(), table).unwrap());
                theta.push(rng.gen_range(-0.6..0.6));
            }
        }
    }
    let graph = FactorGraph::new(p, factors).unwrap();
    let family = ModelFamily::new(graph, alphabet, basis).unwrap();
    GraphicalModel::new(family, theta).unwrap()
}

/// A random per-node problem over a small monomial or indicator family:
/// dimension at most 12, at most `n` samples, plus a random evaluation
/// point inside the l1 ball. Returns the problem and that point.
pub fn random_desk_problem(seed: u64, n: usize) -> (LocalProblem, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x9e3779b97f4a7c15));
    let indicator = seed % 2 == 1;
    let (family, truth) = if indicator {
        // q = 2 indicator: field group (2) + two edges (4 each) at node 0.
        let p = 4;
        let alphabet = Alphabet::uniform(p, 2).unwrap();
        let mut factors = Vec::new();
        for s in 0..2u8 {
            factors.push(Factor::indicator(vec![0], vec![s]).unwrap());
        }
        for other in [1usize, 2] {
            for s in 0..4u8 {
                factors.push(Factor::indicator(vec![0, other], vec![s / 2, s % 2]).unwrap());
            }
        }
        for s in 0..4u8 {
            factors.push(Factor::indicator(vec![2, 3], vec![s / 2, s % 2]).unwrap());
        }
        let graph = FactorGraph::new(p, factors).unwrap();
        let family = ModelFamily::new(graph, alphabet, BasisKind::Indicator).unwrap();
        let mut theta = Vec::new();
        for _ in 0..family.graph().factor_count() {
            theta.push(rng.gen_range(-0.3..0.3));
        }
        // center each group so truth is feasible
        let all: Vec<usize> = (0..family.graph().factor_count()).collect();
        let descriptor =
            crate::projection::ConstraintDescriptor::indicator_zero_sum(&family, &all).unwrap();
        let theta = crate::projection::project(&theta, &descriptor).unwrap();
        let model = GraphicalModel::new(family.clone(), theta).unwrap();
        (family, model)
    } else {
        // monomial on p in 4..=6: fields + a random half of the pairs
        let p = rng.gen_range(4..=6usize);
        let alphabet = Alphabet::uniform(p, 2).unwrap();
        let mut factors = Vec::new();
        for v in 0..p {
            factors.push(Factor::monomial(vec![v]).unwrap());
        }
        for a in 0..p {
            for b in (a + 1)..p {
                if rng.gen::<f64>() < 0.5 {
                    factors.push(Factor::monomial(vec![a, b]).unwrap());
                }
            }
        }
        let graph = FactorGraph::new(p, factors).unwrap();
        let family = ModelFamily::new(graph, alphabet, BasisKind::Monomial).unwrap();
        let theta: Vec<f64> = (0..family.graph().factor_count())
            .map(|_| rng.gen_range(-0.6..0.6))
            .collect();
        let model = GraphicalModel::new(family.clone(), theta).unwrap();
        (family, model)
    };
    let samples =
        crate::sampler::sample_exact(&truth, n.max(1), seed.wrapping_mul(31).wrapping_add(7), None)
            .unwrap();
    let gamma_hat = rng.gen_range(1.0..2.5);
    let constraints = if indicator {
        crate::projection::ConstraintDescriptor::indicator_zero_sum(
            &family,
            family.graph().incident(0),
        )
        .unwrap()
    } else {
        crate::projection::ConstraintDescriptor::Trivial
    };
    let problem =
        LocalProblem::from_samples(&family, &samples, 0, gamma_hat, constraints).unwrap();
    // random point in the l1 ball
    let dim = problem.dimension();
    let mut point: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let l1: f64 = point.iter().map(|x| x.abs()).sum();
    let scale = rng.gen_range(0.1..0.9) * gamma_hat / l1.max(1e-9);
    for x in point.iter_mut() {
        *x *= scale;
    }
    (problem, point)
}

/// True parameters of the vertex-0 subvector of a model, aligned with the
/// problem's factor order.
pub fn truth_subvector(model: &GraphicalModel, vertex: usize) -> Vec<f64> {
    model
        .graph()
        .incident(vertex)
        .iter()
        .map(|&k| model.theta()[k])
        .collect()
}

/// Reference minimizer over the l1 ball for problems with at most two
/// parameters: multi-scale grid refinement, independent of the descent path.
/// Returns the minimizer and its objective value.
pub fn grid_reference(problem: &LocalProblem, rounds: usize) -> (Vec<f64>, f64) {
    let dim = problem.dimension();
    assert!((1..=2).contains(&dim), "grid reference covers dim 1..=2");
    let radius = problem.gamma_hat();
    let mut center = vec![0.0; dim];
    let mut half = radius;
    let mut best = (center.clone(), problem.evaluate(&center).value);
    let grid = 21i64;
    for _ in 0..rounds {
        for i in -grid..=grid {
            let x = center[0] + half * i as f64 / grid as f64;
            if dim == 1 {
                if x.abs() <= radius + 1e-15 {
                    let value = problem.evaluate(&[x]).value;
                    if value < best.1 {
                        best = (vec![x], value);
                    }
                }
                continue;
            }
            for j in -grid..=grid {
                let y = center[1] + half * j as f64 / grid as f64;
                if x.abs() + y.abs() <= radius + 1e-15 {
                    let value = problem.evaluate(&[x, y]).value;
                    if value < best.1 {
                        best = (vec![x, y], value);
                    }
                }
            }
        }
        center = best.0.clone();
        half *= 0.25;
    }
    best
}

/// Central finite-difference gradient of the objective.
pub fn fd_gradient(problem: &LocalProblem, theta: &[f64], step: f64) -> Vec<f64> {
    (0..theta.len())
        .map(|j| {
            let mut up = theta.to_vec();
            let mut dn = theta.to_vec();
            up[j] += step;
            dn[j] -= step;
            (problem.evaluate(&up).value - problem.evaluate(&dn).value) / (2.0 * step)
        })
        .collect()
}

/// Lower regularized incomplete gamma P(a, x), by series for `x < a + 1`
/// and by Lentz continued fraction otherwise.
pub fn regularized_gamma_p(a: f64, x: f64) -> f64 {
    assert!(a > 0.0 && x >= 0.0);
    if x == 0.0 {
        return 0.0;
    }
    let log_prefix = a * x.ln() - x - ln_gamma(a);
    if x < a + 1.0 {
        // series expansion
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut n = a;
        for _ in 0..500 {
            n += 1.0;
            term *= x / n;
            sum += term;
            if term.abs() < sum.abs() * 1e-16 {
                break;
            }
        }
        sum * log_prefix.exp()
    } else {
        // continued fraction for Q(a, x)
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        1.0 - log_prefix.exp() * h
    }
}

/// Lanczos log-gamma.
pub fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 6] = [
        76.18009172947146,
        -86.50532032941677,
        24.01409824083091,
        -1.231739572450155,
        0.1208650973866179e-2,
        -0.5395239384953e-5,
    ];
    let mut y = x;
    let tmp = x + 5.5;
    let tmp = tmp - (x + 0.5) * tmp.ln();
    let mut ser = 1.000000000190015;
    for c in COEFFS {
        y += 1.0;
        ser += c / y;
    }
    -tmp + (2.5066282746310005 * ser / x).ln()
}

/// Quantile of the chi-square distribution with `dof` degrees of freedom at
/// probability `p`, by bisection on the regularized gamma CDF.
pub fn chi_square_quantile(dof: usize, p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0);
    let k = dof as f64;
    let (mut lo, mut hi) = (0.0f64, k + 40.0 * (2.0 * k).sqrt() + 200.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if regularized_gamma_p(k / 2.0, mid / 2.0) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Pearson chi-square statistic of observed counts against expected
/// probabilities for `n` draws.
pub fn chi_square_statistic(observed: &[u64], expected_probs: &[f64], n: u64) -> f64 {
    observed
        .iter()
        .zip(expected_probs)
        .map(|(&o, &p)| {
            let e = p * n as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi_square_quantiles_match_tables() {
        // Standard table values at the 0.999 level.
        assert!((chi_square_quantile(15, 0.999) - 37.697).abs() < 5e-3);
        assert!((chi_square_quantile(7, 0.999) - 24.322).abs() < 5e-3);
        assert!((chi_square_quantile(3, 0.999) - 16.266).abs() < 5e-3);
        // And a median sanity check: chi2 median ~ dof for larger dof.
        assert!((chi_square_quantile(100, 0.5) - 99.334).abs() < 0.05);
    }

    #[test]
    fn gamma_p_endpoints() {
        assert_eq!(regularized_gamma_p(2.5, 0.0), 0.0);
        assert!(regularized_gamma_p(2.5, 1e6) > 1.0 - 1e-12);
        // P(0.5, x/2) is the chi2(1) CDF: P(chi2(1) <= 3.841) ~ 0.95
        assert!((regularized_gamma_p(0.5, 3.841 / 2.0) - 0.95).abs() < 2e-4);
    }
}
