//! Small dense linear algebra on flat row-major buffers.
//!
//! Everything here works on matrices of at most a few hundred rows and
//! ~14 columns, so plain O(n³) routines are the right tool.

use crate::error::{Error, Result};
use crate::math;
use alloc::vec;
use alloc::vec::Vec;

/// Plain Cholesky, lower triangular. Returns `None` when the matrix is
/// not (numerically) positive definite.
pub fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i * n + j];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(sum > 0.0) || !sum.is_finite() {
                    return None;
                }
                l[i * n + i] = math::sqrt(sum);
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Some(l)
}

/// Solve L x = b in place for lower-triangular L.
pub fn forward_substitute(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let mut acc = b[i];
        for j in 0..i {
            acc -= l[i * n + j] * b[j];
        }
        b[i] = acc / l[i * n + i];
    }
}

/// Solve Lᵀ x = b in place for lower-triangular L.
pub fn backward_substitute_t(l: &[f64], n: usize, b: &mut [f64]) {
    for i in (0..n).rev() {
        let mut acc = b[i];
        for j in i + 1..n {
            acc -= l[j * n + i] * b[j];
        }
        b[i] = acc / l[i * n + i];
    }
}

/// Replace `a` by (a + aᵀ)/2.
pub fn symmetrize(a: &mut [f64], n: usize) {
    for i in 0..n {
        for j in 0..i {
            let m = 0.5 * (a[i * n + j] + a[j * n + i]);
            a[i * n + j] = m;
            a[j * n + i] = m;
        }
    }
}

/// Sample mean and covariance (divisor n−1) of `rows` vectors of length
/// `dim`, stored flat. A single row yields a zero covariance.
pub fn mean_cov(data: &[f64], rows: usize, dim: usize) -> (Vec<f64>, Vec<f64>) {
    let mut mean = vec![0.0; dim];
    for r in 0..rows {
        for d in 0..dim {
            mean[d] += data[r * dim + d];
        }
    }
    for d in 0..dim {
        mean[d] /= rows as f64;
    }
    let mut cov = vec![0.0; dim * dim];
    if rows > 1 {
        for r in 0..rows {
            for i in 0..dim {
                let di = data[r * dim + i] - mean[i];
                for j in 0..=i {
                    cov[i * dim + j] += di * (data[r * dim + j] - mean[j]);
                }
            }
        }
        let denom = (rows - 1) as f64;
        for i in 0..dim {
            for j in 0..=i {
                cov[i * dim + j] /= denom;
                cov[j * dim + i] = cov[i * dim + j];
            }
        }
    }
    (mean, cov)
}

/// Inverse of an SPD matrix through its Cholesky factor.
pub fn spd_inverse(a: &[f64], n: usize) -> Result<Vec<f64>> {
    let chol = cholesky(a, n).ok_or_else(|| Error::NotPositiveDefinite {
        dim: n,
        matrix: a.to_vec(),
    })?;
    let mut inv = vec![0.0; n * n];
    for col in 0..n {
        let mut e = vec![0.0; n];
        e[col] = 1.0;
        forward_substitute(&chol, n, &mut e);
        backward_substitute_t(&chol, n, &mut e);
        for row in 0..n {
            inv[row * n + col] = e[row];
        }
    }
    symmetrize(&mut inv, n);
    Ok(inv)
}

/// Least-squares fit by column-equilibrated Householder QR with column
/// pivoting. Rank-deficient systems get the basic solution: pivoted-out
/// coefficients are zero and `rank_deficient` is set.
#[derive(Debug, Clone)]
pub struct OlsFit {
    pub coeffs: Vec<f64>,
    pub rank: usize,
    pub rank_deficient: bool,
}

pub fn ols_fit(design: &[f64], nrows: usize, ncols: usize, response: &[f64]) -> Result<OlsFit> {
    if nrows < ncols {
        return Err(Error::InvalidParam(alloc::format!(
            "ols needs rows >= columns, got {nrows} x {ncols}"
        )));
    }
    if design.len() != nrows * ncols || response.len() != nrows {
        return Err(Error::Dimension {
            expected: nrows * ncols,
            got: design.len(),
        });
    }

    // Equilibrate columns to unit norm; Ricker summaries put 1, y, y², y³
    // in one design matrix and would otherwise wreck the conditioning.
    let mut a = design.to_vec();
    let mut scale = vec![1.0; ncols];
    for c in 0..ncols {
        let mut norm = 0.0;
        for r in 0..nrows {
            norm += a[r * ncols + c] * a[r * ncols + c];
        }
        norm = math::sqrt(norm);
        if norm > 0.0 {
            scale[c] = norm;
            for r in 0..nrows {
                a[r * ncols + c] /= norm;
            }
        }
    }

    let mut b = response.to_vec();
    let mut perm: Vec<usize> = (0..ncols).collect();
    let mut col_norms: Vec<f64> = (0..ncols)
        .map(|c| (0..nrows).map(|r| a[r * ncols + c] * a[r * ncols + c]).sum())
        .collect();

    let tol = 1e-12 * math::sqrt(col_norms.iter().cloned().fold(0.0, f64::max)).max(1e-300);
    let mut rank = ncols;

    for k in 0..ncols {
        // pivot: remaining column with the largest trailing norm
        let mut best = k;
        for c in k + 1..ncols {
            if col_norms[c] > col_norms[best] {
                col_norms[best] = col_norms[best]; // no-op to keep symmetry obvious
                best = c;
            }
        }
        if best != k {
            for r in 0..nrows {
                a.swap(r * ncols + k, r * ncols + best);
            }
            perm.swap(k, best);
            col_norms.swap(k, best);
        }

        // Householder vector for column k below row k
        let mut norm = 0.0;
        for r in k..nrows {
            norm += a[r * ncols + k] * a[r * ncols + k];
        }
        norm = math::sqrt(norm);
        if norm <= tol {
            rank = k;
            break;
        }
        let alpha = if a[k * ncols + k] >= 0.0 { -norm } else { norm };
        let mut v = vec![0.0; nrows - k];
        v[0] = a[k * ncols + k] - alpha;
        for r in k + 1..nrows {
            v[r - k] = a[r * ncols + k];
        }
        let vtv: f64 = v.iter().map(|x| x * x).sum();
        if vtv > 0.0 {
            for c in k..ncols {
                let mut dot = 0.0;
                for r in k..nrows {
                    dot += v[r - k] * a[r * ncols + c];
                }
                let f = 2.0 * dot / vtv;
                for r in k..nrows {
                    a[r * ncols + c] -= f * v[r - k];
                }
            }
            let mut dot = 0.0;
            for r in k..nrows {
                dot += v[r - k] * b[r];
            }
            let f = 2.0 * dot / vtv;
            for r in k..nrows {
                b[r] -= f * v[r - k];
            }
        }
        a[k * ncols + k] = alpha;
        for c in k + 1..ncols {
            col_norms[c] -= a[k * ncols + c] * a[k * ncols + c];
        }
    }

    // trailing diagonal entries below tolerance also reduce the rank
    while rank > 0 && math::abs(a[(rank - 1) * ncols + (rank - 1)]) <= tol {
        rank -= 1;
    }

    let mut sol = vec![0.0; ncols];
    for i in (0..rank).rev() {
        let mut acc = b[i];
        for j in i + 1..rank {
            acc -= a[i * ncols + j] * sol[j];
        }
        sol[i] = acc / a[i * ncols + i];
    }

    let mut coeffs = vec![0.0; ncols];
    for (pos, &orig) in perm.iter().enumerate() {
        if pos < rank {
            coeffs[orig] = sol[pos] / scale[orig];
        }
    }
    Ok(OlsFit {
        coeffs,
        rank,
        rank_deficient: rank < ncols,
    })
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi sweeps.
/// Returns eigenvalues (ascending) and row-major eigenvectors (row i is
/// the eigenvector of eigenvalue i).
pub fn sym_eigen(a: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut m = a.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    for _sweep in 0..64 {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += m[i * n + j] * m[i * n + j];
            }
        }
        if off < 1e-26 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if math::abs(apq) < 1e-300 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = 0.5 * (aqq - app) / apq;
                let t = if theta >= 0.0 {
                    1.0 / (theta + math::sqrt(1.0 + theta * theta))
                } else {
                    -1.0 / (-theta + math::sqrt(1.0 + theta * theta))
                };
                let c = 1.0 / math::sqrt(1.0 + t * t);
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i * n + i].partial_cmp(&m[j * n + j]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| m[i * n + i]).collect();
    let mut vecs = vec![0.0; n * n];
    for (row, &i) in order.iter().enumerate() {
        for k in 0..n {
            vecs[row * n + k] = v[k * n + i];
        }
    }
    (vals, vecs)
}

/// Quadratic form xᵀ A x.
pub fn quad_form(a: &[f64], n: usize, x: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            row += a[i * n + j] * x[j];
        }
        acc += x[i] * row;
    }
    acc
}
