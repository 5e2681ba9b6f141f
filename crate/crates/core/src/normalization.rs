//! Centering and scaling constants for the quadratic statistics.
//!
//! A [`NormalizationPlan`] maps a raw square-sum `S` (or `T`) to
//! `scale · (n·S − center)`, which is approximately standard normal under
//! independence.

use serde::{Deserialize, Serialize};

use crate::data::ColumnMoments;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// `p > n^{5/3}`: scale from the fourth-moment term alone.
    LargeP,
    General,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MomentSource {
    /// Column fourth moments, either estimated or known for the model.
    FourthMoments,
    /// Exact moments of the normalized rank grid.
    ExactRankMoments,
    /// Permutation moments of Pearson correlations between empirically
    /// standardized columns.
    StandardizedPermutation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationPlan {
    pub n: usize,
    pub p: usize,
    pub center: f64,
    pub scale: f64,
    pub regime: Regime,
    pub variance_term: Option<f64>,
    pub moment_source: MomentSource,
}

impl NormalizationPlan {
    /// `scale · (n·sum_sq − center)`.
    pub fn normalize(&self, sum_sq: f64) -> f64 {
        self.scale * (self.n as f64 * sum_sq - self.center)
    }
}

/// `p(p−1)/2` as a float.
pub fn pair_count(p: usize) -> f64 {
    let p = p as f64;
    p * (p - 1.0) / 2.0
}

fn check_dims(n: usize, p: usize, min_n: usize) -> Result<()> {
    if n < min_n || p < 2 {
        return Err(Error::invalid(
            "dimensions",
            format!("need n >= {min_n} and p >= 2, got n = {n}, p = {p}"),
        ));
    }
    Ok(())
}

/// True when `p > n^{5/3}`.
pub fn is_large_p(n: usize, p: usize) -> bool {
    (p as f64) > (n as f64).powf(5.0 / 3.0)
}

/// Plan for `S_n` on data with (population) zero mean and unit variance,
/// built from column fourth moments.
pub fn cov_plan(n: usize, p: usize, moments: &ColumnMoments) -> Result<NormalizationPlan> {
    check_dims(n, p, 2)?;
    if moments.p() != p {
        return Err(Error::invalid(
            "moments",
            format!("have {} columns, expected {p}", moments.p()),
        ));
    }
    let nf = n as f64;
    let pf = p as f64;
    let pairs = pair_count(p);
    let excess: Vec<f64> = moments.m4.iter().map(|m| m - 1.0).collect();
    let sum: f64 = excess.iter().sum();

    if is_large_p(n, p) {
        if sum <= 0.0 {
            return Err(Error::DegenerateScale(format!(
                "sum of (m4 - 1) is {sum} in the large-p regime; the general regime formula \
                 does not need it to be positive"
            )));
        }
        return Ok(NormalizationPlan {
            n,
            p,
            center: pairs,
            scale: nf.sqrt() / ((pf - 1.0) * sum.sqrt()),
            regime: Regime::LargeP,
            variance_term: None,
            moment_source: MomentSource::FourthMoments,
        });
    }

    let sum_sq: f64 = excess.iter().map(|e| e * e).sum();
    let cross = (sum * sum - sum_sq) / 2.0;
    let pp1 = pf * (pf - 1.0);
    let v =
        4.0 * (nf * nf - nf) / pp1 + 4.0 * nf * cross / (pp1 * pp1) + 4.0 * nf * sum / (pf * pf);
    if !(v > 0.0) {
        return Err(Error::DegenerateScale(format!("V_n = {v} is not positive")));
    }
    Ok(NormalizationPlan {
        n,
        p,
        center: pairs,
        scale: nf / (pairs * v.sqrt()),
        regime: Regime::General,
        variance_term: Some(v),
        moment_source: MomentSource::FourthMoments,
    })
}

/// Plan for `S_n` on empirically standardized columns.
///
/// After standardization `n·σ̂²` has permutation mean `n/(n−1)` for any
/// continuous column distribution and distinct pairs are uncorrelated, so
/// `Var(n·S_n) = C(p,2)·Var(n·r²)`. The per-pair variance uses the exact
/// Gaussian value `2n²(n−2)/((n−1)²(n+1))`.
pub fn cov_plan_standardized(n: usize, p: usize) -> Result<NormalizationPlan> {
    check_dims(n, p, 3)?;
    let nf = n as f64;
    let pairs = pair_count(p);
    let pair_var = 2.0 * nf * nf * (nf - 2.0) / ((nf - 1.0) * (nf - 1.0) * (nf + 1.0));
    let v = nf * nf * pair_var / pairs;
    Ok(NormalizationPlan {
        n,
        p,
        center: pairs * nf / (nf - 1.0),
        scale: nf / (pairs * v.sqrt()),
        regime: Regime::General,
        variance_term: Some(v),
        moment_source: MomentSource::StandardizedPermutation,
    })
}

/// Exact moments of the normalized rank grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankMomentConstants {
    /// `E N₁₁⁴`
    pub e_n4: f64,
    /// `E N₁₁² N₂₁²` (two distinct rows of one column)
    pub e_n2n2: f64,
}

/// Closed forms from `Σ_{k=1}^n (k − (n+1)/2)⁴ = n(n²−1)(3n²−7)/240`.
pub fn rank_moment_constants(n: usize) -> Result<RankMomentConstants> {
    check_dims(n, 2, 2)?;
    let nf = n as f64;
    let e_n4 = 3.0 * (3.0 * nf * nf - 7.0) / (5.0 * (nf * nf - 1.0));
    // Σc² = n, so Σ_{k≠l} c_k² c_l² = n² − Σc⁴
    let e_n2n2 = (nf * nf - nf * e_n4) / (nf * (nf - 1.0));
    Ok(RankMomentConstants { e_n4, e_n2n2 })
}

/// Plan for `T_n`; the `O(1/p²)` remainder of `V_n'` is dropped.
pub fn rank_plan(n: usize, p: usize) -> Result<NormalizationPlan> {
    check_dims(n, p, 3)?;
    let c = rank_moment_constants(n)?;
    let nf = n as f64;
    let pf = p as f64;
    let pairs = pair_count(p);
    let v = (4.0 * nf * nf * c.e_n2n2 + 2.0 * nf * (c.e_n4 - 1.0).powi(2) - 4.0 * nf)
        / (pf * (pf - 1.0));
    if !(v > 0.0) {
        return Err(Error::DegenerateScale(format!(
            "V_n' = {v} is not positive"
        )));
    }
    Ok(NormalizationPlan {
        n,
        p,
        center: pairs * (1.0 + 1.0 / (nf - 1.0)),
        scale: nf / (pairs * v.sqrt()),
        regime: Regime::General,
        variance_term: Some(v),
        moment_source: MomentSource::ExactRankMoments,
    })
}
