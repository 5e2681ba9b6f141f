//! Pairwise kernel: sample covariances, normalized ranks, Spearman
//! correlations and the four summary statistics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::error::{Error, Result};

/// The four raw statistics of one dataset.
///
/// `s_n`/`l_n` are the sum of squares and the largest magnitude of the
/// off-diagonal sample covariances; `t_n`/`m_n` are the same for Spearman
/// correlations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatisticQuartet {
    pub s_n: f64,
    pub l_n: f64,
    pub t_n: f64,
    pub m_n: f64,
}

/// Sum of squares and maximum magnitude over the `p(p-1)/2` unordered pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairSummary {
    pub sum_sq: f64,
    pub max_abs: f64,
    /// Zero-based pair `(i, j)`, `i < j`, attaining `max_abs` (first in
    /// row-major order on ties).
    pub argmax: (usize, usize),
}

impl PairSummary {
    fn empty() -> Self {
        Self {
            sum_sq: 0.0,
            max_abs: -1.0,
            argmax: (0, 0),
        }
    }

    fn merge(self, other: Self) -> Self {
        Self {
            sum_sq: self.sum_sq + other.sum_sq,
            max_abs: self.max_abs.max(other.max_abs),
            argmax: if other.max_abs > self.max_abs {
                other.argmax
            } else {
                self.argmax
            },
        }
    }
}

/// Normalized ranks `√(12/(n²−1))·(F − (n+1)/2)`, column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RankMatrix {
    n: usize,
    p: usize,
    values: Vec<f64>,
    has_ties: bool,
}

impl RankMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn column(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    /// True when some column contained ties and midranks were used; the
    /// column sum / mean-square identities then hold only approximately.
    pub fn has_ties(&self) -> bool {
        self.has_ties
    }
}

/// The rank-normalization factor `√(12/(n²−1))`.
pub fn rank_scale(n: usize) -> f64 {
    let n = n as f64;
    (12.0 / (n * n - 1.0)).sqrt()
}

/// The fixed grid of normalized ranks for ranks `1..=n`.
pub fn rank_grid(n: usize) -> Vec<f64> {
    let scale = rank_scale(n);
    let center = (n as f64 + 1.0) / 2.0;
    (1..=n).map(|k| scale * (k as f64 - center)).collect()
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let k = 4 * c;
        acc[0] += a[k] * b[k];
        acc[1] += a[k + 1] * b[k + 1];
        acc[2] += a[k + 2] * b[k + 2];
        acc[3] += a[k + 3] * b[k + 3];
    }
    let mut tail = 0.0;
    for k in 4 * chunks..a.len() {
        tail += a[k] * b[k];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn check_index(index: usize, len: usize) -> Result<()> {
    if index < len {
        Ok(())
    } else {
        Err(Error::IndexOutOfRange { index, len })
    }
}

/// `X_i'X_j / n` for zero-based columns `i`, `j`.
pub fn sample_cov_entry(x: &DataMatrix, i: usize, j: usize) -> Result<f64> {
    check_index(i, x.p())?;
    check_index(j, x.p())?;
    Ok(dot(x.column(i), x.column(j)) / x.n() as f64)
}

/// `(1/n) Σ_k N_ki N_kj` for zero-based columns `i`, `j`.
pub fn spearman_entry(r: &RankMatrix, i: usize, j: usize) -> Result<f64> {
    check_index(i, r.p())?;
    check_index(j, r.p())?;
    Ok(dot(r.column(i), r.column(j)) / r.n() as f64)
}

/// Ranks each column (1 = smallest, midranks for ties) and normalizes.
pub fn compute_ranks(x: &DataMatrix) -> RankMatrix {
    let n = x.n();
    let scale = rank_scale(n);
    let center = (n as f64 + 1.0) / 2.0;
    let mut values = vec![0.0; n * x.p()];
    let mut has_ties = false;
    let mut order: Vec<usize> = Vec::with_capacity(n);

    for (col, out) in x.columns().zip(values.chunks_exact_mut(n)) {
        order.clear();
        order.extend(0..n);
        order.sort_unstable_by(|&a, &b| col[a].total_cmp(&col[b]));
        let mut start = 0;
        while start < n {
            let mut end = start + 1;
            while end < n && col[order[end]] == col[order[start]] {
                end += 1;
            }
            if end - start > 1 {
                has_ties = true;
            }
            // ranks start+1 ..= end share their average
            let rank = (start + 1 + end) as f64 / 2.0;
            for &k in &order[start..end] {
                out[k] = scale * (rank - center);
            }
            start = end;
        }
    }

    RankMatrix {
        n,
        p: x.p(),
        values,
        has_ties,
    }
}

/// Square-sum and max-magnitude of `(1/n)·col_i'col_j` over all `i < j`.
///
/// Work is split by the first index `i`; partial results are merged in
/// increasing `i`, so the result is bit-identical for any thread count.
pub fn pair_summary(columns: &[&[f64]], n: usize) -> PairSummary {
    let p = columns.len();
    let inv_n = 1.0 / n as f64;
    let partials: Vec<PairSummary> = (0..p.saturating_sub(1))
        .into_par_iter()
        .map(|i| {
            let ci = columns[i];
            let mut acc = PairSummary::empty();
            for (j, cj) in columns.iter().enumerate().skip(i + 1) {
                let v = dot(ci, cj) * inv_n;
                acc.sum_sq += v * v;
                if v.abs() > acc.max_abs {
                    acc.max_abs = v.abs();
                    acc.argmax = (i, j);
                }
            }
            acc
        })
        .collect();
    partials
        .into_iter()
        .fold(PairSummary::empty(), PairSummary::merge)
}

/// Covariance pass: `(S_n, L_n)` on `x` as given (callers standardize first
/// when needed).
pub fn covariance_summary(x: &DataMatrix) -> PairSummary {
    let cols: Vec<&[f64]> = x.columns().collect();
    pair_summary(&cols, x.n())
}

/// Rank pass: `(T_n, M_n)`.
pub fn spearman_summary(r: &RankMatrix) -> PairSummary {
    let cols: Vec<&[f64]> = (0..r.p()).map(|i| r.column(i)).collect();
    pair_summary(&cols, r.n())
}

/// Computes all four statistics of `x`.
pub fn quartet(x: &DataMatrix) -> StatisticQuartet {
    let cov = covariance_summary(x);
    let ranks = compute_ranks(x);
    let sp = spearman_summary(&ranks);
    StatisticQuartet {
        s_n: cov.sum_sq,
        l_n: cov.max_abs,
        t_n: sp.sum_sq,
        m_n: sp.max_abs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cols(n: usize, data: &[&[f64]]) -> DataMatrix {
        DataMatrix::from_columns(n, data.len(), data.concat()).unwrap()
    }

    #[test]
    fn covariance_entries() {
        let x = cols(4, &[&[1.0, -1.0, 1.0, -1.0], &[1.0, -1.0, 1.0, -1.0]]);
        assert_eq!(sample_cov_entry(&x, 0, 1).unwrap(), 1.0);
        let y = cols(2, &[&[1.0, -1.0], &[1.0, 1.0]]);
        assert_eq!(sample_cov_entry(&y, 0, 1).unwrap(), 0.0);
        assert_eq!(
            sample_cov_entry(&y, 0, 2).unwrap_err(),
            Error::IndexOutOfRange { index: 2, len: 2 }
        );
    }

    #[test]
    fn ranks_of_small_column() {
        let x = cols(3, &[&[10.0, 30.0, 20.0], &[1.0, 2.0, 3.0]]);
        let r = compute_ranks(&x);
        let s = 1.5f64.sqrt();
        assert_eq!(r.column(0), &[-s, s, 0.0]);
        assert_eq!(r.column(1), rank_grid(3).as_slice());
        assert!(!r.has_ties());
    }

    #[test]
    fn ties_get_midranks() {
        let x = cols(4, &[&[1.0, 2.0, 2.0, 3.0], &[4.0, 3.0, 2.0, 1.0]]);
        let r = compute_ranks(&x);
        assert!(r.has_ties());
        let g = rank_grid(4);
        let mid = (g[1] + g[2]) / 2.0;
        assert_eq!(r.column(0), &[g[0], mid, mid, g[3]]);
    }

    #[test]
    fn spearman_entries() {
        let x = cols(
            4,
            &[
                &[1.0, 2.0, 3.0, 4.0],
                &[2.0, 1.0, 4.0, 3.0],
                &[4.0, 3.0, 2.0, 1.0],
            ],
        );
        let r = compute_ranks(&x);
        assert!((spearman_entry(&r, 0, 0).unwrap() - 1.0).abs() < 1e-15);
        assert!((spearman_entry(&r, 0, 1).unwrap() - 0.6).abs() < 1e-15);
        assert!((spearman_entry(&r, 0, 2).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn duplicated_column_quartet() {
        let c = [1.0, -1.0, 1.0, -1.0];
        let q = quartet(&cols(4, &[&c, &c]));
        assert_eq!(q.s_n, 1.0);
        assert_eq!(q.l_n, 1.0);
        // two tied blocks: midranks give N² = 12/15 instead of 1
        assert!((q.m_n - 0.8).abs() < 1e-15);

        let c = [0.4, -1.3, 2.2, -0.1];
        let q = quartet(&cols(4, &[&c, &c]));
        assert!((q.t_n - 1.0).abs() < 1e-15);
        assert!((q.m_n - 1.0).abs() < 1e-15);
    }

    #[test]
    fn reversed_column_has_perfect_discordance() {
        let a = [0.3, 1.7, -2.0, 0.9, 5.0];
        let b: Vec<f64> = a.iter().map(|v| -v * 3.0).collect();
        let x = cols(5, &[&a, &b]);
        let r = compute_ranks(&x);
        assert!((spearman_entry(&r, 0, 1).unwrap() + 1.0).abs() < 1e-15);
        assert!((quartet(&x).m_n - 1.0).abs() < 1e-15);
    }

    #[test]
    fn argmax_reports_strongest_pair() {
        let x = cols(
            4,
            &[
                &[1.0, -1.0, 1.0, -1.0],
                &[1.0, 1.0, -1.0, -1.0],
                &[0.9, -1.1, 1.0, -0.8],
            ],
        );
        assert_eq!(covariance_summary(&x).argmax, (0, 2));
    }
}
