//! Limiting laws: the standard normal, the χ²(1) tail, the finite-`p`
//! intermediate law of `nL_n² − 4 log p + log log p`, its Gumbel limit,
//! and the convolution of the normal with the intermediate law.
//!
//! Upper tails are always evaluated through `erfc` and `expm1`; the
//! intermediate law multiplies tails near `1e−9` by `O(p²)` pair counts, so
//! `1 − Φ` by subtraction is useless there.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{check_alpha, Error, Result};
use crate::quadrature::{NormalQuadrature, MAX_ORDER};

/// Default number of Gauss–Hermite nodes for the convolution.
pub const DEFAULT_QUADRATURE_ORDER: usize = 128;

/// Widest bracket searched by quantile solvers.
const BRACKET_LIMIT: f64 = 100.0;

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * FRAC_1_SQRT_2)
}

/// `1 − Φ(z)` without cancellation.
pub fn normal_tail(z: f64) -> f64 {
    0.5 * libm::erfc(z * FRAC_1_SQRT_2)
}

/// Upper `alpha` quantile of the standard normal.
pub fn normal_upper_quantile(alpha: f64) -> Result<f64> {
    upper_quantile(normal_tail, alpha, -10.0, 10.0)
}

/// `P(χ²(1) ≥ x) = 2(1 − Φ(√x))`.
pub fn chi2_1_tail(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::invalid(
            "x",
            format!("chi-square argument must be >= 0, got {x}"),
        ));
    }
    Ok(libm::erfc((0.5 * x).sqrt()))
}

/// `exp(−e^{−y/2}/√(8π))`.
pub fn gumbel_cdf(y: f64) -> f64 {
    (-(-y / 2.0).exp() / (8.0 * PI).sqrt()).exp()
}

/// `F(y) = exp(−(p²−p)/2 · P(χ²(1) ≥ 4 log p − log log p + y))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntermediateLaw {
    p: usize,
    shift: f64,
    pairs: f64,
}

impl IntermediateLaw {
    pub fn new(p: usize) -> Result<Self> {
        if p < 2 {
            return Err(Error::invalid("p", format!("need p >= 2, got {p}")));
        }
        Ok(Self {
            p,
            shift: extreme_shift(p),
            pairs: crate::normalization::pair_count(p),
        })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// `4 log p − log log p`.
    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Expected number of exceedances `λ(y)`; the χ² argument is clamped
    /// at zero.
    pub fn lambda(&self, y: f64) -> f64 {
        let cut = (self.shift + y).max(0.0);
        self.pairs * libm::erfc((0.5 * cut).sqrt())
    }

    pub fn cdf(&self, y: f64) -> f64 {
        (-self.lambda(y)).exp()
    }

    pub fn survival(&self, y: f64) -> f64 {
        -(-self.lambda(y)).exp_m1()
    }

    pub fn upper_quantile(&self, alpha: f64) -> Result<f64> {
        upper_quantile(|y| self.survival(y), alpha, -10.0, 20.0)
    }
}

/// `4 log p − log log p`, the centering of `n·L_n²`.
pub fn extreme_shift(p: usize) -> f64 {
    let lp = (p as f64).ln();
    4.0 * lp - lp.ln()
}

pub fn intermediate_cdf(y: f64, p: usize) -> Result<f64> {
    Ok(IntermediateLaw::new(p)?.cdf(y))
}

/// Law of `Z + G` with `Z ~ N(0,1)` independent of `G ~ F`.
#[derive(Debug, Clone)]
pub struct ConvolutionLaw {
    extreme: IntermediateLaw,
    rule: NormalQuadrature,
}

impl ConvolutionLaw {
    pub fn new(p: usize) -> Result<Self> {
        Self::with_order(p, DEFAULT_QUADRATURE_ORDER)
    }

    pub fn with_order(p: usize, order: usize) -> Result<Self> {
        if !(2..=MAX_ORDER).contains(&order) {
            return Err(Error::invalid(
                "order",
                format!("quadrature order must be in 2..={MAX_ORDER}, got {order}"),
            ));
        }
        Ok(Self {
            extreme: IntermediateLaw::new(p)?,
            rule: NormalQuadrature::new(order),
        })
    }

    pub fn extreme(&self) -> &IntermediateLaw {
        &self.extreme
    }

    /// `H(c) = E F(c − Z)`.
    pub fn cdf(&self, c: f64) -> f64 {
        self.rule.expect(|z| self.extreme.cdf(c - z))
    }

    /// `1 − H(c)`, integrated from `1 − F` directly.
    pub fn survival(&self, c: f64) -> f64 {
        self.rule.expect(|z| self.extreme.survival(c - z))
    }

    pub fn upper_quantile(&self, alpha: f64) -> Result<f64> {
        upper_quantile(|c| self.survival(c), alpha, -10.0, 20.0)
    }
}

/// The α upper quantile of `Φ ⋆ F` for dimension `p`.
pub fn convolution_upper_quantile(alpha: f64, p: usize) -> Result<f64> {
    ConvolutionLaw::new(p)?.upper_quantile(alpha)
}

/// The limiting laws as one evaluable type.
#[derive(Debug, Clone)]
pub enum LimitLaw {
    Normal,
    Intermediate(IntermediateLaw),
    Gumbel,
    Convolution(ConvolutionLaw),
}

impl LimitLaw {
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            LimitLaw::Normal => normal_cdf(x),
            LimitLaw::Intermediate(law) => law.cdf(x),
            LimitLaw::Gumbel => gumbel_cdf(x),
            LimitLaw::Convolution(law) => law.cdf(x),
        }
    }

    pub fn survival(&self, x: f64) -> f64 {
        match self {
            LimitLaw::Normal => normal_tail(x),
            LimitLaw::Intermediate(law) => law.survival(x),
            LimitLaw::Gumbel => -(-(-x / 2.0).exp() / (8.0 * PI).sqrt()).exp_m1(),
            LimitLaw::Convolution(law) => law.survival(x),
        }
    }

    pub fn upper_quantile(&self, alpha: f64) -> Result<f64> {
        upper_quantile(|x| self.survival(x), alpha, -10.0, 20.0)
    }
}

/// Smallest `c` (to adjacent-float resolution) with `survival(c) <= alpha`
/// for a nonincreasing `survival`.
///
/// Returning the right end of the final bracket makes `x >= c` equivalent
/// to `survival(x) <= alpha` for every `x`, so thresholds and p-values
/// never disagree.
pub fn upper_quantile<F>(survival: F, alpha: f64, lo: f64, hi: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    check_alpha(alpha)?;
    let (mut lo, mut hi) = (lo, hi);
    while survival(lo) <= alpha {
        if lo <= -BRACKET_LIMIT {
            return Err(Error::Numeric(format!(
                "upper quantile for alpha = {alpha} lies below {}",
                -BRACKET_LIMIT
            )));
        }
        lo = (2.0 * lo - 1.0).max(-BRACKET_LIMIT);
    }
    while survival(hi) > alpha {
        if hi >= BRACKET_LIMIT {
            return Err(Error::Numeric(format!(
                "upper quantile for alpha = {alpha} lies above {BRACKET_LIMIT}"
            )));
        }
        hi = (2.0 * hi + 1.0).min(BRACKET_LIMIT);
    }
    for _ in 0..2000 {
        let mid = lo + (hi - lo) / 2.0;
        if mid <= lo || mid >= hi {
            break;
        }
        if survival(mid) <= alpha {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
