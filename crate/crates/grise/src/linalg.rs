//! Dense symmetric eigen-solves for the small matrices the conditioning
//! diagnostics produce (span sizes up to ~q^L). Cyclic Jacobi rotations;
//! accuracy is checked against closed forms in the tests.

/// Eigen decomposition of a symmetric matrix; `values` ascending, `vectors`
/// the matching orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

/// Cyclic Jacobi eigenvalue iteration. Panics on non-square input; the
/// matrix is symmetrized before iterating so tiny asymmetries from
/// accumulation order are harmless.
pub fn symmetric_eigen(matrix: &[Vec<f64>]) -> SymmetricEigen {
    let n = matrix.len();
    let mut a: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| 0.5 * (matrix[i][j] + matrix[j][i]))
                .collect()
        })
        .collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    if n <= 1 {
        return SymmetricEigen {
            values: a.first().map(|r| vec![r[0]]).unwrap_or_default(),
            vectors: v,
        };
    }
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |m, &x| m.max(x.abs()))
        .max(1e-300);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[i][j] * a[i][j];
            }
        }
        if off.sqrt() <= 1e-15 * scale * n as f64 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k][p];
                    let vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i][i].partial_cmp(&a[j][j]).expect("finite eigenvalues"));
    let values: Vec<f64> = order.iter().map(|&i| a[i][i]).collect();
    let vectors: Vec<Vec<f64>> = order
        .iter()
        .map(|&col| (0..n).map(|row| v[row][col]).collect())
        .collect();
    SymmetricEigen { values, vectors }
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn smallest_eigenvalue(matrix: &[Vec<f64>]) -> f64 {
    symmetric_eigen(matrix).values[0]
}

/// `basis^T m basis` for column vectors `basis`.
pub fn restrict(m: &[Vec<f64>], basis: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = basis.len();
    let n = m.len();
    let mut out = vec![vec![0.0; k]; k];
    for a in 0..k {
        // m * basis[a]
        let mut mb = vec![0.0; n];
        for (i, row) in m.iter().enumerate() {
            let mut acc = 0.0;
            for (j, &x) in row.iter().enumerate() {
                acc += x * basis[a][j];
            }
            mb[i] = acc;
        }
        for b in 0..k {
            let mut acc = 0.0;
            for i in 0..n {
                acc += basis[b][i] * mb[i];
            }
            out[b][a] = acc;
        }
    }
    out
}

/// Minimum of `x^T m x` over the span of `basis` subject to
/// `sum_{i in norm_coords} x_i^2 = 1`. Returns `None` when the norm block
/// vanishes on the subspace (the normalization is infeasible). Singular
/// free blocks are handled by a pseudo-inverse Schur complement.
pub fn min_restricted_rayleigh(
    m: &[Vec<f64>],
    basis: &[Vec<f64>],
    norm_coords: &[usize],
) -> Option<f64> {
    let k = basis.len();
    if k == 0 {
        return None;
    }
    let a = restrict(m, basis);
    // b = U_T^T U_T in subspace coordinates
    let mut b = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..k {
            let mut acc = 0.0;
            for &c in norm_coords {
                acc += basis[i][c] * basis[j][c];
            }
            b[i][j] = acc;
        }
    }
    let eig_b = symmetric_eigen(&b);
    let tol = eig_b.values.last().copied().unwrap_or(0.0).max(0.0) * 1e-12;
    let pos: Vec<usize> = (0..k).filter(|&i| eig_b.values[i] > tol.max(1e-300)).collect();
    if pos.is_empty() {
        return None;
    }
    let null: Vec<usize> = (0..k).filter(|i| !pos.contains(i)).collect();
    // Transform a into the eigenbasis of b.
    let vecs: Vec<&Vec<f64>> = eig_b.vectors.iter().collect();
    let in_eigbasis = |i: usize, j: usize| -> f64 {
        let mut acc = 0.0;
        for r in 0..k {
            for c in 0..k {
                acc += vecs[i][r] * a[r][c] * vecs[j][c];
            }
        }
        acc
    };
    let app: Vec<Vec<f64>> = pos
        .iter()
        .map(|&i| pos.iter().map(|&j| in_eigbasis(i, j)).collect())
        .collect();
    let schur = if null.is_empty() {
        app
    } else {
        let a00: Vec<Vec<f64>> = null
            .iter()
            .map(|&i| null.iter().map(|&j| in_eigbasis(i, j)).collect())
            .collect();
        let a_p0: Vec<Vec<f64>> = pos
            .iter()
            .map(|&i| null.iter().map(|&j| in_eigbasis(i, j)).collect())
            .collect();
        let pinv = pseudo_inverse(&a00);
        // app - a_p0 * pinv * a_p0^T
        let np = pos.len();
        let nn = null.len();
        let mut out = app;
        for r in 0..np {
            for c in 0..np {
                let mut corr = 0.0;
                for i in 0..nn {
                    for j in 0..nn {
                        corr += a_p0[r][i] * pinv[i][j] * a_p0[c][j];
                    }
                }
                out[r][c] -= corr;
            }
        }
        out
    };
    // Whiten by the positive eigenvalues of b and take the smallest eigenvalue.
    let np = pos.len();
    let mut whitened = vec![vec![0.0; np]; np];
    for r in 0..np {
        for c in 0..np {
            whitened[r][c] =
                schur[r][c] / (eig_b.values[pos[r]].sqrt() * eig_b.values[pos[c]].sqrt());
        }
    }
    Some(smallest_eigenvalue(&whitened))
}

/// Moore-Penrose pseudo-inverse of a symmetric matrix via its eigensystem.
pub fn pseudo_inverse(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = m.len();
    if n == 0 {
        return Vec::new();
    }
    let eig = symmetric_eigen(m);
    let scale = eig
        .values
        .iter()
        .fold(0.0f64, |mx, &x| mx.max(x.abs()))
        .max(1e-300);
    let mut out = vec![vec![0.0; n]; n];
    for (idx, &val) in eig.values.iter().enumerate() {
        if val.abs() <= 1e-12 * scale {
            continue;
        }
        let vec = &eig.vectors[idx];
        for r in 0..n {
            for c in 0..n {
                out[r][c] += vec[r] * vec[c] / val;
            }
        }
    }
    out
}

/// Orthonormal Helmert-style basis of the zero-sum subspace of dimension
/// `q` (the orthogonal complement of the all-ones vector), `q - 1` vectors.
pub fn zero_sum_basis_1d(q: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(q - 1);
    for j in 1..q {
        let mut v = vec![0.0; q];
        let norm = (j as f64 * (j as f64 + 1.0)).sqrt();
        for slot in v.iter_mut().take(j) {
            *slot = 1.0 / norm;
        }
        v[j] = -(j as f64) / norm;
        out.push(v);
    }
    out
}

/// Orthonormal basis of the tensor-product zero-sum subspace over a scope of
/// alphabet sizes: all tensor products of per-axis zero-sum basis vectors,
/// `prod (q_i - 1)` vectors each of length `prod q_i` (row-major indexing,
/// last axis fastest).
pub fn zero_sum_basis(sizes: &[usize]) -> Vec<Vec<f64>> {
    let per_axis: Vec<Vec<Vec<f64>>> = sizes.iter().map(|&q| zero_sum_basis_1d(q)).collect();
    let total: usize = sizes.iter().product();
    let mut out: Vec<Vec<f64>> = vec![vec![1.0; total]];
    // Start from the all-ones seed and refine axis by axis.
    for (axis, axis_basis) in per_axis.iter().enumerate() {
        let inner: usize = sizes[axis + 1..].iter().product();
        let q = sizes[axis];
        let mut next = Vec::with_capacity(out.len() * axis_basis.len());
        for partial in &out {
            for hv in axis_basis {
                let mut v = vec![0.0; total];
                for (idx, slot) in v.iter_mut().enumerate() {
                    let s = idx / inner % q;
                    *slot = partial[idx] * hv[s];
                }
                next.push(v);
            }
        }
        out = next;
    }
    out
}
