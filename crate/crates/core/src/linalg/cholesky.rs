use super::SymmetricMatrix;
use crate::error::{Error, Result};

/// Lower-triangular Cholesky factor `L` with `A = L L^T`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    dim: usize,
    /// Row-major, upper part unused.
    lower: Vec<f64>,
}

impl Cholesky {
    /// Fails with [`Error::NotPositiveDefinite`] when a pivot is not
    /// strictly positive; the reported eigenvalue is the offending pivot.
    pub fn factor(a: &SymmetricMatrix) -> Result<Self> {
        let n = a.dim();
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = a.get(j, j);
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > 0.0) {
                return Err(Error::NotPositiveDefinite { min_eigenvalue: d });
            }
            let djj = d.sqrt();
            l[j * n + j] = djj;
            for i in j + 1..n {
                let mut s = a.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / djj;
            }
        }
        Ok(Self { dim: n, lower: l })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j > i {
            0.0
        } else {
            self.lower[i * self.dim + j]
        }
    }

    /// `y = L z`.
    pub fn mul_lower(&self, z: &[f64], y: &mut [f64]) {
        let n = self.dim;
        for i in 0..n {
            y[i] = self.lower[i * n..i * n + i + 1].iter().zip(z).map(|(a, b)| a * b).sum();
        }
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.lower[i * n + k] * y[k];
            }
            y[i] = s / self.lower[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.lower[k * n + i] * y[k];
            }
            y[i] = s / self.lower[i * n + i];
        }
        y
    }

    /// `A^{-1}`, column by column.
    pub fn inverse(&self) -> Result<SymmetricMatrix> {
        let n = self.dim;
        let mut cols = Vec::with_capacity(n);
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            cols.push(self.solve(&e));
        }
        SymmetricMatrix::from_fn(n, |i, j| 0.5 * (cols[j][i] + cols[i][j]))
    }
}
