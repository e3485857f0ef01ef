//! Dense design matrices and the least-squares solver used by every estimator.
//!
//! Least squares goes through a Householder QR factorization of the design
//! matrix. The factorization depends only on `X`, so estimators that refit
//! against many relabelings of `y` factor once and call
//! [`LeastSquares::solve`] repeatedly. Permuting the rows of `X` leaves `R`
//! unchanged, which is what makes this valid for the hard EM update as well.

use crate::error::{ensure_len, Error, Result};

/// Pivots with `|r_kk|` below this fraction of the largest column norm are
/// treated as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Lower bound applied to the noise variance wherever a sampler divides by it.
pub const SIGMA2_FLOOR: f64 = 1e-12;

/// An `n x d` matrix of input features stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DesignMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch(format!(
                "design matrix must be at least 1x1, got {rows}x{cols}"
            )));
        }
        ensure_len("design matrix data", rows * cols, data.len())?;
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / cols,
                column: pos % cols,
                value: data[pos],
            });
        }
        Ok(DesignMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            ensure_len(&format!("row {i}"), cols, row.len())?;
            data.extend_from_slice(row);
        }
        DesignMatrix::new(rows.len(), cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// `X w`.
    pub fn matvec(&self, w: &[f64]) -> Result<Vec<f64>> {
        ensure_len("weights", self.cols, w.len())?;
        Ok(self
            .data
            .chunks_exact(self.cols)
            .map(|row| dot(row, w))
            .collect())
    }

    /// New matrix whose row `i` is row `indices[i]` of `self`.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            if i >= self.rows {
                return Err(Error::IndexOutOfRange {
                    index: i,
                    len: self.rows,
                });
            }
            data.extend_from_slice(self.row(i));
        }
        DesignMatrix::new(indices.len(), self.cols, data)
    }

    /// New matrix keeping only the listed columns, in the listed order.
    pub fn select_columns(&self, columns: &[usize]) -> Result<Self> {
        if let Some(&bad) = columns.iter().find(|&&c| c >= self.cols) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                len: self.cols,
            });
        }
        let mut data = Vec::with_capacity(self.rows * columns.len());
        for i in 0..self.rows {
            data.extend(columns.iter().map(|&c| self.get(i, c)));
        }
        DesignMatrix::new(self.rows, columns.len(), data)
    }

    /// Appends a trailing column of ones.
    pub fn with_intercept(&self) -> Self {
        let mut data = Vec::with_capacity(self.rows * (self.cols + 1));
        for i in 0..self.rows {
            data.extend_from_slice(self.row(i));
            data.push(1.0);
        }
        DesignMatrix {
            rows: self.rows,
            cols: self.cols + 1,
            data,
        }
    }
}

/// Output of an ordinary least-squares fit.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionFit {
    pub weights: Vec<f64>,
    /// `residual_ss / (n - d)`.
    pub sigma2: f64,
    pub residual_ss: f64,
}

impl RegressionFit {
    /// Noise variance as seen by the samplers: floored at [`SIGMA2_FLOOR`].
    pub fn sampler_sigma2(&self) -> f64 {
        self.sigma2.max(SIGMA2_FLOOR)
    }
}

/// Householder QR factorization of a design matrix, reusable across label vectors.
#[derive(Debug, Clone)]
pub struct LeastSquares<'a> {
    x: &'a DesignMatrix,
    /// Column-major `n x d`: `R` on and above the diagonal, reflectors below.
    qr: Vec<f64>,
    tau: Vec<f64>,
}

impl<'a> LeastSquares<'a> {
    pub fn new(x: &'a DesignMatrix) -> Result<Self> {
        let (n, d) = (x.rows, x.cols);
        if n <= d {
            return Err(Error::DimensionMismatch(format!(
                "least squares needs more rows than columns, got n = {n}, d = {d}"
            )));
        }
        let mut qr = vec![0.0; n * d];
        for i in 0..n {
            for j in 0..d {
                qr[j * n + i] = x.get(i, j);
            }
        }
        let scale = (0..d)
            .map(|j| norm(&qr[j * n..(j + 1) * n]))
            .fold(0.0_f64, f64::max);
        let tolerance = RANK_TOLERANCE * scale;
        let mut tau = vec![0.0; d];

        for k in 0..d {
            let (done, rest) = qr.split_at_mut((k + 1) * n);
            let col = &mut done[k * n..];
            let alpha = col[k];
            let col_norm = norm(&col[k..]);
            if col_norm <= tolerance {
                return Err(Error::RankDeficient {
                    column: k,
                    pivot: col_norm,
                    tolerance,
                });
            }
            let beta = if alpha >= 0.0 { -col_norm } else { col_norm };
            let v0 = alpha - beta;
            for v in &mut col[k + 1..] {
                *v /= v0;
            }
            col[k] = beta;
            tau[k] = (beta - alpha) / beta;
            for other in rest.chunks_exact_mut(n) {
                reflect(&col[k + 1..], tau[k], &mut other[k..]);
            }
        }
        Ok(LeastSquares { x, qr, tau })
    }

    pub fn design(&self) -> &'a DesignMatrix {
        self.x
    }

    /// Minimizes `||X w - y||^2` and estimates the noise variance.
    pub fn solve(&self, y: &[f64]) -> Result<RegressionFit> {
        let (n, d) = (self.x.rows, self.x.cols);
        ensure_len("labels", n, y.len())?;
        let mut z = y.to_vec();
        for k in 0..d {
            let col = &self.qr[k * n..(k + 1) * n];
            reflect(&col[k + 1..], self.tau[k], &mut z[k..]);
        }
        let mut w = vec![0.0; d];
        for k in (0..d).rev() {
            let mut acc = z[k];
            for (j, wj) in w.iter().enumerate().skip(k + 1) {
                acc -= self.qr[j * n + k] * wj;
            }
            w[k] = acc / self.qr[k * n + k];
        }
        let rss = residual_ss(self.x, &w, y)?;
        Ok(RegressionFit {
            weights: w,
            sigma2: rss / (n - d) as f64,
            residual_ss: rss,
        })
    }
}

/// Indices of a maximal set of linearly independent columns, chosen greedily
/// left to right under the same tolerance as [`LeastSquares::new`].
pub fn independent_columns(x: &DesignMatrix) -> Vec<usize> {
    let (n, d) = (x.rows, x.cols);
    let columns: Vec<Vec<f64>> = (0..d).map(|j| x.column(j)).collect();
    let scale = columns.iter().map(|c| norm(c)).fold(0.0_f64, f64::max);
    let tolerance = RANK_TOLERANCE * scale;
    // Accepted reflectors as (full column storage, tau); reflector r acts on rows r...
    let mut reflectors: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut keep = Vec::new();
    for (j, mut col) in columns.into_iter().enumerate() {
        let r = reflectors.len();
        if r == n {
            break;
        }
        for (k, (v, tau)) in reflectors.iter().enumerate() {
            reflect(&v[k + 1..], *tau, &mut col[k..]);
        }
        let col_norm = norm(&col[r..]);
        if col_norm <= tolerance {
            continue;
        }
        let alpha = col[r];
        let beta = if alpha >= 0.0 { -col_norm } else { col_norm };
        let v0 = alpha - beta;
        for v in &mut col[r + 1..] {
            *v /= v0;
        }
        reflectors.push((col, (beta - alpha) / beta));
        keep.push(j);
    }
    keep
}

/// Applies `I - tau v v^T` (with implicit `v[0] = 1`) to `target`.
fn reflect(tail: &[f64], tau: f64, target: &mut [f64]) {
    if tau == 0.0 {
        return;
    }
    let (head, rest) = target.split_first_mut().expect("non-empty reflector target");
    let s = tau * (*head + dot(tail, rest));
    *head -= s;
    for (t, v) in rest.iter_mut().zip(tail) {
        *t -= s * v;
    }
}

/// Ordinary least squares: `w = argmin ||X w - y||^2`, `sigma2 = ||X w - y||^2 / (n - d)`.
pub fn ols_fit(x: &DesignMatrix, y: &[f64]) -> Result<RegressionFit> {
    LeastSquares::new(x)?.solve(y)
}

/// `||X w - y||^2` as a sum of per-row squared residuals.
pub fn residual_ss(x: &DesignMatrix, w: &[f64], y: &[f64]) -> Result<f64> {
    ensure_len("weights", x.cols, w.len())?;
    ensure_len("labels", x.rows, y.len())?;
    Ok(x
        .data
        .chunks_exact(x.cols)
        .zip(y)
        .map(|(row, yi)| {
            let r = dot(row, w) - yi;
            r * r
        })
        .sum())
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Euclidean distance `||a - b||_2`.
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
