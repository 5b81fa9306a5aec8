use crate::error::{Error, Result};

/// Dense real symmetric `p x p` matrix.
///
/// Both triangles are stored, but every constructor writes `(i, j)` and
/// `(j, i)` from the same value, so `get(i, j) == get(j, i)` holds bit for
/// bit. The type is immutable after construction; all transformations return
/// a new matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymmetricMatrix {
    /// Builds a matrix from the upper triangle of `f` (called with `i <= j`).
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Dimension("matrix dimension must be positive".into()));
        }
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in i..dim {
                let v = f(i, j);
                if !v.is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
                data[i * dim + j] = v;
                data[j * dim + i] = v;
            }
        }
        Ok(Self { dim, data })
    }

    /// Same as [`from_fn`](Self::from_fn) for callers that already guarantee
    /// finite entries and a positive dimension.
    pub(crate) fn from_fn_trusted(dim: usize, f: impl FnMut(usize, usize) -> f64) -> Self {
        Self::from_fn(dim, f).expect("trusted matrix construction produced invalid entries")
    }

    /// Symmetrizes a dense row-major buffer as `(a + a^T) / 2`.
    ///
    /// Fails when `|a_ij - a_ji|` exceeds `tolerance` anywhere.
    pub fn from_dense(dim: usize, values: &[f64], tolerance: f64) -> Result<Self> {
        if dim == 0 || values.len() != dim * dim {
            return Err(Error::Dimension(format!(
                "expected {dim}x{dim} = {} values, got {}",
                dim * dim,
                values.len()
            )));
        }
        let mut max_asymmetry = 0.0_f64;
        for i in 0..dim {
            for j in i + 1..dim {
                let d = (values[i * dim + j] - values[j * dim + i]).abs();
                if d.is_nan() {
                    max_asymmetry = f64::NAN;
                } else if d > max_asymmetry {
                    max_asymmetry = d;
                }
            }
        }
        for (k, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite { row: k / dim, col: k % dim });
            }
        }
        if max_asymmetry > tolerance {
            return Err(Error::Asymmetric { max_asymmetry, tolerance });
        }
        Self::from_fn(dim, |i, j| {
            if i == j {
                values[i * dim + i]
            } else {
                0.5 * (values[i * dim + j] + values[j * dim + i])
            }
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], tolerance: f64) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Dimension(format!("matrix is not square: {dim} rows with unequal lengths")));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::from_dense(dim, &flat, tolerance)
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn_trusted(dim, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_fn_trusted(dim, |_, _| 0.0)
    }

    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        Self::from_fn(diag.len(), |i, j| if i == j { diag[i] } else { 0.0 })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Row `i`, which is also column `i`.
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Row-major view of all `p * p` entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// `tr(m^2)`, i.e. the sum of squared entries.
    pub fn trace_of_square(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    /// `y = m x`.
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    /// `x^T m x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        (0..self.dim)
            .map(|i| x[i] * self.row(i).iter().zip(x).map(|(a, b)| a * b).sum::<f64>())
            .sum()
    }

    /// Applies `f(i, j, value)` to the upper triangle and mirrors the result.
    pub fn map_entries(&self, mut f: impl FnMut(usize, usize, f64) -> f64) -> Result<Self> {
        Self::from_fn(self.dim, |i, j| f(i, j, self.get(i, j)))
    }

    /// `alpha * m + shift * I`.
    pub fn scale_and_shift(&self, alpha: f64, shift: f64) -> Result<Self> {
        self.map_entries(|i, j, v| if i == j { alpha * v + shift } else { alpha * v })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        Self::from_fn(self.dim, |i, j| self.get(i, j) - other.get(i, j))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        Self::from_fn(self.dim, |i, j| self.get(i, j) + other.get(i, j))
    }

    /// Symmetric product `(a b + b a) / 2`, exact `a b` when the two commute.
    pub fn sym_product(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        let p = self.dim;
        Self::from_fn(p, |i, j| {
            let ab: f64 = (0..p).map(|k| self.get(i, k) * other.get(k, j)).sum();
            let ba: f64 = (0..p).map(|k| other.get(i, k) * self.get(k, j)).sum();
            0.5 * (ab + ba)
        })
    }

    /// Indices `(i, j)`, `i < j`, with nonzero entries.
    pub fn off_diagonal_support(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.dim {
            for j in i + 1..self.dim {
                if self.get(i, j) != 0.0 {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Whether the off-diagonal zero patterns of `self` and `other` coincide exactly.
    pub fn same_off_diagonal_support(&self, other: &Self) -> bool {
        self.dim == other.dim
            && (0..self.dim).all(|i| {
                (i + 1..self.dim).all(|j| (self.get(i, j) == 0.0) == (other.get(i, j) == 0.0))
            })
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Gershgorin interval `[lo, hi]` containing every eigenvalue.
    pub fn gershgorin_bounds(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.dim {
            let radius: f64 = self
                .row(i)
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, v)| v.abs())
                .sum();
            let c = self.get(i, i);
            lo = lo.min(c - radius);
            hi = hi.max(c + radius);
        }
        (lo, hi)
    }

    fn check_same_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::Dimension(format!(
                "dimension mismatch: {} vs {}",
                self.dim, other.dim
            )));
        }
        Ok(())
    }
}
