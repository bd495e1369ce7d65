//! Fitness rank normalization, behavior whitening, and the density kernel.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Floor applied to per-column standard deviations before dividing.
pub const STD_FLOOR: f64 = 1e-8;

/// Row-major `n x d` matrix of behavior characteristics.
#[derive(Debug, Clone, PartialEq)]
pub struct BcMatrix {
    n: usize,
    d: usize,
    data: Vec<f64>,
}

impl BcMatrix {
    pub fn new(n: usize, d: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::InvalidValue(format!(
                "BC matrix must be at least 1x1, got {n}x{d}"
            )));
        }
        check_dim("BC matrix data", n * d, data.len())?;
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidValue("BC matrix has non-finite entries".into()));
        }
        Ok(BcMatrix { n, d, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let d = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * d);
        for r in rows {
            check_dim("BC row", d, r.as_ref().len())?;
            data.extend_from_slice(r.as_ref());
        }
        BcMatrix::new(rows.len(), d, data)
    }

    pub fn column(values: &[f64]) -> Result<Self> {
        BcMatrix::new(values.len(), 1, values.to_vec())
    }

    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn cols(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.d)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn col_mean(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.d];
        for row in self.iter_rows() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        let n = self.n as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        mean
    }

    /// Population (divisor `n`) variance of each column.
    pub fn col_var(&self) -> Vec<f64> {
        let mean = self.col_mean();
        let mut var = vec![0.0; self.d];
        for row in self.iter_rows() {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let n = self.n as f64;
        var.iter_mut().for_each(|s| *s /= n);
        var
    }

    pub fn var_trace(&self) -> f64 {
        self.col_var().iter().sum()
    }

    /// Scales every entry by `factor`.
    pub fn scaled(&self, factor: f64) -> BcMatrix {
        BcMatrix {
            n: self.n,
            d: self.d,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }
}

/// Per-column statistics used by [`whiten`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhitenStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl WhitenStats {
    pub fn apply(&self, bcs: &BcMatrix) -> Result<BcMatrix> {
        check_dim("whiten stats", self.mean.len(), bcs.cols())?;
        let mut data = Vec::with_capacity(bcs.data.len());
        for row in bcs.iter_rows() {
            for ((v, m), s) in row.iter().zip(&self.mean).zip(&self.std) {
                data.push((v - m) / s);
            }
        }
        Ok(BcMatrix { data, ..*bcs })
    }

    pub fn invert(&self, whitened: &BcMatrix) -> Result<BcMatrix> {
        check_dim("whiten stats", self.mean.len(), whitened.cols())?;
        let mut data = Vec::with_capacity(whitened.data.len());
        for row in whitened.iter_rows() {
            for ((v, m), s) in row.iter().zip(&self.mean).zip(&self.std) {
                data.push(v * s + m);
            }
        }
        Ok(BcMatrix { data, ..*whitened })
    }
}

/// Maps values to `rank / (n - 1) - 0.5` with tied values sharing their mean rank.
pub fn rank_normalize(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    if n <= 1 {
        return vec![0.0; n];
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let mean_rank = (start + end - 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = mean_rank;
        }
        start = end;
    }
    let denom = (n - 1) as f64;
    ranks.into_iter().map(|r| r / denom - 0.5).collect()
}

/// Standardizes each column to mean 0 and population std 1.
pub fn whiten(bcs: &BcMatrix) -> Result<(BcMatrix, WhitenStats)> {
    if bcs.rows() < 2 {
        return Err(Error::InvalidValue("whitening needs at least 2 rows".into()));
    }
    let stats = whiten_stats(bcs);
    let out = stats.apply(bcs)?;
    Ok((out, stats))
}

pub fn whiten_stats(bcs: &BcMatrix) -> WhitenStats {
    WhitenStats {
        mean: bcs.col_mean(),
        std: bcs
            .col_var()
            .into_iter()
            .map(|v| v.sqrt().max(STD_FLOOR))
            .collect(),
    }
}

/// Subtracts the column means only.
pub fn center(bcs: &BcMatrix) -> BcMatrix {
    let stats = WhitenStats {
        mean: bcs.col_mean(),
        std: vec![1.0; bcs.cols()],
    };
    stats.apply(bcs).expect("stats built from the same matrix")
}

/// Isotropic Gaussian kernel with standard deviation `bandwidth`.
pub fn gaussian_kernel(u: &[f64], bandwidth: f64) -> f64 {
    let h2 = bandwidth * bandwidth;
    let sq: f64 = u.iter().map(|v| v * v).sum();
    (2.0 * std::f64::consts::PI * h2).powf(-(u.len() as f64) / 2.0) * (-sq / (2.0 * h2)).exp()
}
