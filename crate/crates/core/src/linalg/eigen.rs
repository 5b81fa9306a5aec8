//! Dense symmetric eigensolver: Householder reduction to tridiagonal form
//! followed by the implicit-shift QL iteration.

use super::SymmetricMatrix;
use crate::error::{Error, Result};

/// Max QL sweeps spent on a single eigenvalue before giving up.
const MAX_QL_SWEEPS: usize = 60;

/// Eigenvalues in ascending order with matching orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    /// Row-major `p x p`; column `k` is the eigenvector of `values[k]`.
    vectors: Vec<f64>,
    dim: usize,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Eigenvector `k` as an owned vector.
    pub fn vector(&self, k: usize) -> Vec<f64> {
        (0..self.dim).map(|i| self.vectors[i * self.dim + k]).collect()
    }

    #[inline]
    pub fn vector_entry(&self, i: usize, k: usize) -> f64 {
        self.vectors[i * self.dim + k]
    }

    /// `Q diag(f(values)) Q^T`.
    pub fn reconstruct_with(&self, mut f: impl FnMut(f64) -> f64) -> Result<SymmetricMatrix> {
        let p = self.dim;
        let mapped: Vec<f64> = self.values.iter().map(|&v| f(v)).collect();
        // Scale columns once, then take row dot products.
        let mut scaled = self.vectors.clone();
        for i in 0..p {
            for k in 0..p {
                scaled[i * p + k] *= mapped[k];
            }
        }
        SymmetricMatrix::from_fn(p, |i, j| {
            let a = &scaled[i * p..(i + 1) * p];
            let b = &self.vectors[j * p..(j + 1) * p];
            a.iter().zip(b).map(|(x, y)| x * y).sum()
        })
    }

    pub fn reconstruct(&self) -> Result<SymmetricMatrix> {
        self.reconstruct_with(|v| v)
    }
}

/// Full eigendecomposition, eigenvalues ascending.
pub fn full_eigen(m: &SymmetricMatrix) -> Result<EigenDecomposition> {
    let p = m.dim();
    let mut v = m.as_slice().to_vec();
    let mut d = vec![0.0; p];
    let mut e = vec![0.0; p];
    tridiagonalize(p, &mut v, &mut d, &mut e, true);
    ql_implicit(p, &mut v, &mut d, &mut e, true)?;
    sort_ascending(p, &mut d, Some(&mut v));
    Ok(EigenDecomposition { values: d, vectors: v, dim: p })
}

/// Eigenvalues only, ascending. Skips eigenvector accumulation.
pub fn eigenvalues(m: &SymmetricMatrix) -> Result<Vec<f64>> {
    let p = m.dim();
    let mut v = m.as_slice().to_vec();
    let mut d = vec![0.0; p];
    let mut e = vec![0.0; p];
    tridiagonalize(p, &mut v, &mut d, &mut e, false);
    ql_implicit(p, &mut v, &mut d, &mut e, false)?;
    sort_ascending(p, &mut d, None);
    Ok(d)
}

/// Eigen-decomposition of a symmetric tridiagonal matrix given its diagonal
/// and sub-diagonal (`off[i]` couples `i` and `i + 1`).
pub(crate) fn tridiagonal_eigen(diag: &[f64], off: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let p = diag.len();
    let mut d = diag.to_vec();
    // QL expects e[i] = coupling between i-1 and i, e[0] unused.
    let mut e = vec![0.0; p];
    e[1..p].copy_from_slice(&off[..p - 1]);
    let mut v = vec![0.0; p * p];
    for i in 0..p {
        v[i * p + i] = 1.0;
    }
    ql_implicit(p, &mut v, &mut d, &mut e, true)?;
    sort_ascending(p, &mut d, Some(&mut v));
    Ok((d, v))
}

/// Householder reduction of the row-major matrix in `v` to tridiagonal form.
/// On return `d` is the diagonal, `e[1..]` the sub-diagonal, and (when
/// `accumulate`) `v` holds the orthogonal transformation.
fn tridiagonalize(n: usize, v: &mut [f64], d: &mut [f64], e: &mut [f64], accumulate: bool) {
    let idx = |i: usize, j: usize| i * n + j;
    for j in 0..n {
        d[j] = v[idx(n - 1, j)];
    }

    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[idx(i - 1, j)];
                v[idx(i, j)] = 0.0;
                v[idx(j, i)] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }

            for j in 0..i {
                f = d[j];
                v[idx(j, i)] = f;
                g = e[j] + v[idx(j, j)] * f;
                for k in j + 1..i {
                    g += v[idx(k, j)] * d[k];
                    e[k] += v[idx(k, j)] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[idx(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[idx(i - 1, j)];
                v[idx(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }

    if !accumulate {
        for j in 0..n {
            d[j] = v[idx(j, j)];
        }
        e[0] = 0.0;
        return;
    }

    for i in 0..n.saturating_sub(1) {
        v[idx(n - 1, i)] = v[idx(i, i)];
        v[idx(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[idx(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[idx(k, i + 1)] * v[idx(k, j)];
                }
                for k in 0..=i {
                    v[idx(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[idx(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[idx(n - 1, j)];
        v[idx(n - 1, j)] = 0.0;
    }
    v[idx(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

/// Implicit-shift QL on the tridiagonal `(d, e)`; rotations are applied to
/// the columns of `v` when `vectors` is set.
fn ql_implicit(n: usize, v: &mut [f64], d: &mut [f64], e: &mut [f64], vectors: bool) -> Result<()> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0;
    let mut tst1 = 0.0_f64;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        // e[n - 1] == 0 guarantees m < n.
        if m > l {
            let mut sweeps = 0;
            loop {
                sweeps += 1;
                if sweeps > MAX_QL_SWEEPS {
                    return Err(Error::EigenNoConvergence { dim: n });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if vectors {
                        for k in 0..n {
                            let row = k * n;
                            h = v[row + i + 1];
                            v[row + i + 1] = s * v[row + i] + c * h;
                            v[row + i] = c * v[row + i] - s * h;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if !(e[l].abs() > eps * tst1) {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    if d.iter().any(|x| !x.is_finite()) {
        return Err(Error::EigenNoConvergence { dim: n });
    }
    Ok(())
}

fn sort_ascending(n: usize, d: &mut [f64], v: Option<&mut Vec<f64>>) {
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let sorted: Vec<f64> = order.iter().map(|&k| d[k]).collect();
    d.copy_from_slice(&sorted);
    if let Some(v) = v {
        let old = v.clone();
        for i in 0..n {
            for (new_k, &old_k) in order.iter().enumerate() {
                v[i * n + new_k] = old[i * n + old_k];
            }
        }
    }
}
