//! Decision procedures: the quadratic tests (`S_n`, `T_n`), the
//! extreme-value tests (`L_n`, `M_n`) and the combined tests `TS¹`, `TS²`.
//!
//! Normalized statistics:
//!
//! * quadratic: `b_n(n·S_n − a_n)` (resp. `β_n(n·T_n − α_n)`), compared
//!   with `N(0, 1)`;
//! * extreme: `n·L_n² − 4 log p + log log p` (resp. `M_n`), compared with
//!   the intermediate law `F` or its simulated counterpart;
//! * combined: the sum of the two, compared with `Φ ⋆ F`.
//!
//! Every threshold is the smallest value whose upper-tail probability is at
//! most `alpha` under the same law used for the p-value, so
//! `reject ⇔ normalized ≥ threshold ⇔ p_value ≤ alpha` holds exactly.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::data::{column_moments, standardize, ColumnMoments, DataMatrix};
use crate::empirical::{
    EmpiricalConvolution, EmpiricalExtremeLaw, EmpiricalTail, StatisticKind,
    DEFAULT_CONVOLUTION_DRAWS,
};
use crate::error::{check_alpha, Error, Result};
use crate::limits::{
    extreme_shift, normal_tail, normal_upper_quantile, ConvolutionLaw, IntermediateLaw,
};
use crate::normalization::{cov_plan, cov_plan_standardized, rank_plan, NormalizationPlan};
use crate::statistics::{compute_ranks, covariance_summary, spearman_summary, PairSummary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StatisticId {
    #[serde(rename = "S")]
    S,
    #[serde(rename = "L")]
    L,
    #[serde(rename = "TS1")]
    Ts1,
    #[serde(rename = "T")]
    T,
    #[serde(rename = "M")]
    M,
    #[serde(rename = "TS2")]
    Ts2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Quadratic,
    Extreme,
    Combined,
}

impl StatisticId {
    /// Table order.
    pub const ALL: [StatisticId; 6] = [
        StatisticId::S,
        StatisticId::L,
        StatisticId::Ts1,
        StatisticId::T,
        StatisticId::M,
        StatisticId::Ts2,
    ];
    pub const RANK: [StatisticId; 3] = [StatisticId::T, StatisticId::M, StatisticId::Ts2];

    pub fn kind(self) -> StatisticKind {
        match self {
            StatisticId::S | StatisticId::L | StatisticId::Ts1 => StatisticKind::Covariance,
            _ => StatisticKind::Spearman,
        }
    }

    pub fn family(self) -> Family {
        match self {
            StatisticId::S | StatisticId::T => Family::Quadratic,
            StatisticId::L | StatisticId::M => Family::Extreme,
            StatisticId::Ts1 | StatisticId::Ts2 => Family::Combined,
        }
    }

    pub fn of(kind: StatisticKind, family: Family) -> Self {
        match (kind, family) {
            (StatisticKind::Covariance, Family::Quadratic) => StatisticId::S,
            (StatisticKind::Covariance, Family::Extreme) => StatisticId::L,
            (StatisticKind::Covariance, Family::Combined) => StatisticId::Ts1,
            (StatisticKind::Spearman, Family::Quadratic) => StatisticId::T,
            (StatisticKind::Spearman, Family::Extreme) => StatisticId::M,
            (StatisticKind::Spearman, Family::Combined) => StatisticId::Ts2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            StatisticId::S => "S",
            StatisticId::L => "L",
            StatisticId::Ts1 => "TS1",
            StatisticId::T => "T",
            StatisticId::M => "M",
            StatisticId::Ts2 => "TS2",
        }
    }
}

impl fmt::Display for StatisticId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StatisticId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let id = match s.trim().to_ascii_uppercase().as_str() {
            "S" | "S_N" => StatisticId::S,
            "L" | "L_N" => StatisticId::L,
            "TS1" => StatisticId::Ts1,
            "T" | "T_N" => StatisticId::T,
            "M" | "M_N" => StatisticId::M,
            "TS2" => StatisticId::Ts2,
            _ => {
                return Err(Error::invalid(
                    "statistic",
                    format!("unknown statistic {s:?}; expected one of S, L, TS1, T, M, TS2"),
                ))
            }
        };
        Ok(id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Law {
    Analytic,
    Empirical,
}

impl fmt::Display for Law {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Law::Analytic => "analytic",
            Law::Empirical => "empirical",
        })
    }
}

/// Which null law backs the extreme and the combined tests. Quadratic
/// tests always use `N(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LawChoice {
    pub extreme: Law,
    pub combined: Law,
}

impl Default for LawChoice {
    fn default() -> Self {
        Self {
            extreme: Law::Empirical,
            combined: Law::Empirical,
        }
    }
}

impl LawChoice {
    pub fn analytic() -> Self {
        Self {
            extreme: Law::Analytic,
            combined: Law::Analytic,
        }
    }

    pub fn for_family(&self, family: Family) -> Law {
        match family {
            Family::Quadratic => Law::Analytic,
            Family::Extreme => self.extreme,
            Family::Combined => self.combined,
        }
    }
}

/// How covariance statistics are formed from the input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CovarianceMode {
    /// Standardize each column empirically; normalize with
    /// [`cov_plan_standardized`].
    Standardize,
    /// Use the data as given (assumed mean 0, variance 1); normalize with
    /// [`cov_plan`] from sample fourth moments or a known value.
    Raw { known_m4: Option<f64> },
}

impl CovarianceMode {
    pub fn standardizes(&self) -> bool {
        matches!(self, CovarianceMode::Standardize)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub statistic: StatisticId,
    /// `S_n`, `L_n`, `T_n` or `M_n`; for combined tests the combined value.
    pub raw_value: f64,
    pub normalized_value: f64,
    pub threshold: f64,
    pub reject: bool,
    pub p_value: f64,
    pub law: Law,
    /// Seed of the simulated law, when one was used.
    pub seed: Option<u64>,
}

/// Simulated tail tables for the empirical laws.
#[derive(Debug, Clone, Default)]
pub struct TailSet {
    pub covariance: Option<Arc<EmpiricalTail>>,
    pub spearman: Option<Arc<EmpiricalTail>>,
}

impl TailSet {
    pub fn get(&self, kind: StatisticKind) -> Option<&Arc<EmpiricalTail>> {
        match kind {
            StatisticKind::Covariance => self.covariance.as_ref(),
            StatisticKind::Spearman => self.spearman.as_ref(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TestConfig {
    pub alpha: f64,
    pub laws: LawChoice,
    pub covariance: CovarianceMode,
    /// Number of `(Z, G)` draws for the empirical convolution.
    pub convolution_draws: usize,
    /// Seed for the empirical convolution draws.
    pub seed: u64,
    /// Require `m >= 100·p²` for empirical laws.
    pub strict: bool,
}

impl TestConfig {
    pub fn new(alpha: f64) -> Self {
        Self {
            alpha,
            laws: LawChoice::default(),
            covariance: CovarianceMode::Standardize,
            convolution_draws: DEFAULT_CONVOLUTION_DRAWS,
            seed: 0,
            strict: false,
        }
    }
}

#[derive(Debug, Clone)]
enum ExtremeNull {
    Analytic(IntermediateLaw),
    Empirical(Arc<EmpiricalTail>, usize),
}

impl ExtremeNull {
    fn survival(&self, y: f64) -> f64 {
        match self {
            ExtremeNull::Analytic(law) => law.survival(y),
            ExtremeNull::Empirical(tail, p) => EmpiricalExtremeLaw::new(tail, *p)
                .expect("validated at calibration")
                .survival(y),
        }
    }
}

#[derive(Debug, Clone)]
enum CombinedNull {
    Analytic(ConvolutionLaw),
    Empirical(EmpiricalConvolution),
}

impl CombinedNull {
    fn survival(&self, v: f64) -> f64 {
        match self {
            CombinedNull::Analytic(law) => law.survival(v),
            CombinedNull::Empirical(conv) => conv.survival(v),
        }
    }
}

/// Thresholds and null laws of the three tests of one statistic kind, for
/// fixed `(n, p, alpha)`. Built once and reused across datasets.
#[derive(Debug, Clone)]
pub struct KindCalibration {
    pub kind: StatisticKind,
    quadratic_threshold: f64,
    extreme: ExtremeNull,
    extreme_threshold: f64,
    extreme_law: Law,
    combined: CombinedNull,
    combined_threshold: f64,
    combined_law: Law,
    seed: u64,
    rank_plan: Option<NormalizationPlan>,
}

impl KindCalibration {
    pub fn new(
        kind: StatisticKind,
        n: usize,
        p: usize,
        config: &TestConfig,
        tails: &TailSet,
    ) -> Result<Self> {
        check_alpha(config.alpha)?;
        let alpha = config.alpha;
        let uses_empirical =
            config.laws.extreme == Law::Empirical || config.laws.combined == Law::Empirical;
        let tail = if uses_empirical {
            let tail = tails.get(kind).ok_or_else(|| {
                Error::invalid(
                    "tails",
                    format!("empirical law needs a {} tail table", kind.as_str()),
                )
            })?;
            if tail.n != n {
                return Err(Error::invalid(
                    "tails",
                    format!(
                        "{} tail was simulated for n = {}, data has n = {n}",
                        kind.as_str(),
                        tail.n
                    ),
                ));
            }
            if kind == StatisticKind::Covariance
                && tail.standardized != config.covariance.standardizes()
            {
                return Err(Error::invalid(
                    "tails",
                    "covariance tail standardization does not match the covariance mode",
                ));
            }
            if config.strict {
                tail.check_resolution(p)?;
            }
            Some(tail.clone())
        } else {
            None
        };

        let analytic = IntermediateLaw::new(p)?;
        let (extreme, extreme_threshold) = match (config.laws.extreme, &tail) {
            (Law::Empirical, Some(t)) => {
                let law = EmpiricalExtremeLaw::new(t, p)?;
                (
                    ExtremeNull::Empirical(t.clone(), p),
                    law.upper_quantile(alpha)?,
                )
            }
            _ => (
                ExtremeNull::Analytic(analytic),
                analytic.upper_quantile(alpha)?,
            ),
        };
        let (combined, combined_threshold) = match (config.laws.combined, &tail) {
            (Law::Empirical, Some(t)) => {
                let law = EmpiricalExtremeLaw::new(t, p)?;
                let conv =
                    EmpiricalConvolution::simulate(&law, config.convolution_draws, config.seed)?;
                let c = conv.upper_quantile(alpha)?;
                (CombinedNull::Empirical(conv), c)
            }
            _ => {
                let conv = ConvolutionLaw::new(p)?;
                let c = conv.upper_quantile(alpha)?;
                (CombinedNull::Analytic(conv), c)
            }
        };
        let rank_plan = match kind {
            StatisticKind::Spearman => Some(rank_plan(n, p)?),
            StatisticKind::Covariance => None,
        };

        Ok(Self {
            kind,
            quadratic_threshold: normal_upper_quantile(alpha)?,
            extreme,
            extreme_threshold,
            extreme_law: config.laws.extreme,
            combined,
            combined_threshold,
            combined_law: config.laws.combined,
            seed: config.seed,
            rank_plan,
        })
    }

    pub fn threshold(&self, family: Family) -> f64 {
        match family {
            Family::Quadratic => self.quadratic_threshold,
            Family::Extreme => self.extreme_threshold,
            Family::Combined => self.combined_threshold,
        }
    }
}

/// Normalized values of one statistic kind on one dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KindValues {
    pub summary: PairSummary,
    pub plan: NormalizationPlan,
    pub quadratic: f64,
    pub extreme: f64,
}

impl KindValues {
    pub fn combined(&self) -> f64 {
        self.quadratic + self.extreme
    }

    fn from_summary(summary: PairSummary, plan: NormalizationPlan) -> Self {
        let n = plan.n as f64;
        Self {
            summary,
            plan,
            quadratic: plan.normalize(summary.sum_sq),
            extreme: n * summary.max_abs * summary.max_abs - extreme_shift(plan.p),
        }
    }
}

/// Covariance pass with the requested input treatment.
pub fn covariance_values(x: &DataMatrix, mode: CovarianceMode) -> Result<KindValues> {
    let (n, p) = (x.n(), x.p());
    match mode {
        CovarianceMode::Standardize => {
            let z = standardize(x)?;
            Ok(KindValues::from_summary(
                covariance_summary(&z),
                cov_plan_standardized(n, p)?,
            ))
        }
        CovarianceMode::Raw { known_m4 } => {
            let moments = match known_m4 {
                Some(m4) => ColumnMoments::known(p, m4),
                None => column_moments(x),
            };
            Ok(KindValues::from_summary(
                covariance_summary(x),
                cov_plan(n, p, &moments)?,
            ))
        }
    }
}

/// Rank pass.
pub fn spearman_values(x: &DataMatrix) -> Result<KindValues> {
    let plan = rank_plan(x.n(), x.p())?;
    Ok(KindValues::from_summary(
        spearman_summary(&compute_ranks(x)),
        plan,
    ))
}

fn outcome(
    statistic: StatisticId,
    raw_value: f64,
    normalized_value: f64,
    threshold: f64,
    p_value: f64,
    law: Law,
    seed: Option<u64>,
) -> TestOutcome {
    TestOutcome {
        statistic,
        raw_value,
        normalized_value,
        threshold,
        reject: normalized_value >= threshold,
        p_value: p_value.clamp(0.0, 1.0),
        law,
        seed,
    }
}

impl KindCalibration {
    /// The outcome of `family` for precomputed values.
    pub fn decide(&self, values: &KindValues, family: Family) -> TestOutcome {
        let id = StatisticId::of(self.kind, family);
        let seed_for = |law: Law| (law == Law::Empirical).then_some(self.seed);
        match family {
            Family::Quadratic => outcome(
                id,
                values.summary.sum_sq,
                values.quadratic,
                self.quadratic_threshold,
                normal_tail(values.quadratic),
                Law::Analytic,
                None,
            ),
            Family::Extreme => outcome(
                id,
                values.summary.max_abs,
                values.extreme,
                self.extreme_threshold,
                self.extreme.survival(values.extreme),
                self.extreme_law,
                seed_for(self.extreme_law),
            ),
            Family::Combined => {
                let v = values.combined();
                outcome(
                    id,
                    v,
                    v,
                    self.combined_threshold,
                    self.combined.survival(v),
                    self.combined_law,
                    seed_for(self.combined_law),
                )
            }
        }
    }

    pub fn rank_plan(&self) -> Option<&NormalizationPlan> {
        self.rank_plan.as_ref()
    }
}

/// Calibrated tests for fixed `(n, p, alpha)`.
#[derive(Debug, Clone)]
pub struct TestSuite {
    n: usize,
    p: usize,
    config: TestConfig,
    covariance: Option<KindCalibration>,
    spearman: Option<KindCalibration>,
}

impl TestSuite {
    /// Calibrates the kinds needed by `statistics`.
    pub fn calibrate(
        n: usize,
        p: usize,
        config: &TestConfig,
        tails: &TailSet,
        statistics: &[StatisticId],
    ) -> Result<Self> {
        if statistics.is_empty() {
            return Err(Error::invalid(
                "statistics",
                "select at least one statistic",
            ));
        }
        let needs = |kind| statistics.iter().any(|s| s.kind() == kind);
        let build = |kind| -> Result<Option<KindCalibration>> {
            if needs(kind) {
                Ok(Some(KindCalibration::new(kind, n, p, config, tails)?))
            } else {
                Ok(None)
            }
        };
        Ok(Self {
            n,
            p,
            config: config.clone(),
            covariance: build(StatisticKind::Covariance)?,
            spearman: build(StatisticKind::Spearman)?,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn config(&self) -> &TestConfig {
        &self.config
    }

    pub fn calibration(&self, kind: StatisticKind) -> Option<&KindCalibration> {
        match kind {
            StatisticKind::Covariance => self.covariance.as_ref(),
            StatisticKind::Spearman => self.spearman.as_ref(),
        }
    }

    /// Runs `statistics` on `x`, sharing one covariance pass and one rank
    /// pass. Outcomes follow the order of `statistics`.
    pub fn run(&self, x: &DataMatrix, statistics: &[StatisticId]) -> Result<Vec<TestOutcome>> {
        if x.n() != self.n || x.p() != self.p {
            return Err(Error::invalid(
                "data",
                format!(
                    "suite calibrated for {}x{}, data is {}x{}",
                    self.n,
                    self.p,
                    x.n(),
                    x.p()
                ),
            ));
        }
        let cov = match &self.covariance {
            Some(_)
                if statistics
                    .iter()
                    .any(|s| s.kind() == StatisticKind::Covariance) =>
            {
                Some(covariance_values(x, self.config.covariance)?)
            }
            _ => None,
        };
        let rank = match &self.spearman {
            Some(_)
                if statistics
                    .iter()
                    .any(|s| s.kind() == StatisticKind::Spearman) =>
            {
                Some(spearman_values(x)?)
            }
            _ => None,
        };
        statistics
            .iter()
            .map(|&id| {
                let (cal, values) = match id.kind() {
                    StatisticKind::Covariance => (self.covariance.as_ref(), cov.as_ref()),
                    StatisticKind::Spearman => (self.spearman.as_ref(), rank.as_ref()),
                };
                match (cal, values) {
                    (Some(cal), Some(values)) => Ok(cal.decide(values, id.family())),
                    _ => Err(Error::invalid(
                        "statistics",
                        format!("{id} was not calibrated in this suite"),
                    )),
                }
            })
            .collect()
    }
}

fn single(
    x: &DataMatrix,
    alpha: f64,
    kind: StatisticKind,
    family: Family,
    law: Law,
    tail: Option<&EmpiricalTail>,
    mode: CovarianceMode,
) -> Result<TestOutcome> {
    let mut config = TestConfig::new(alpha);
    config.covariance = mode;
    config.laws = LawChoice {
        extreme: law,
        combined: law,
    };
    let mut tails = TailSet::default();
    if let Some(t) = tail {
        let t = Arc::new(t.clone());
        match kind {
            StatisticKind::Covariance => tails.covariance = Some(t),
            StatisticKind::Spearman => tails.spearman = Some(t),
        }
    }
    let id = StatisticId::of(kind, family);
    let suite = TestSuite::calibrate(x.n(), x.p(), &config, &tails, &[id])?;
    Ok(suite.run(x, &[id])?.remove(0))
}

/// Quadratic test (`S_n` or `T_n`) against `N(0, 1)`.
pub fn test_quadratic(
    x: &DataMatrix,
    alpha: f64,
    kind: StatisticKind,
    mode: CovarianceMode,
) -> Result<TestOutcome> {
    single(x, alpha, kind, Family::Quadratic, Law::Analytic, None, mode)
}

/// Extreme-value test (`L_n` or `M_n`). `tail` is required for the
/// empirical law.
pub fn test_extreme(
    x: &DataMatrix,
    alpha: f64,
    kind: StatisticKind,
    law: Law,
    tail: Option<&EmpiricalTail>,
    mode: CovarianceMode,
) -> Result<TestOutcome> {
    single(x, alpha, kind, Family::Extreme, law, tail, mode)
}

/// Combined test (`TS¹` or `TS²`).
pub fn test_combined(
    x: &DataMatrix,
    alpha: f64,
    kind: StatisticKind,
    law: Law,
    tail: Option<&EmpiricalTail>,
    mode: CovarianceMode,
) -> Result<TestOutcome> {
    single(x, alpha, kind, Family::Combined, law, tail, mode)
}

/// All six tests in table order.
pub fn run_all(x: &DataMatrix, config: &TestConfig, tails: &TailSet) -> Result<Vec<TestOutcome>> {
    let suite = TestSuite::calibrate(x.n(), x.p(), config, tails, &StatisticId::ALL)?;
    suite.run(x, &StatisticId::ALL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::empirical::{simulate_tail, NormalSampler, TailSpec};
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(n: usize, p: usize, seed: u64) -> DataMatrix {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let v: Vec<f64> = (0..n * p)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        DataMatrix::from_columns(n, p, v).unwrap()
    }

    #[test]
    fn statistic_names_round_trip() {
        for id in StatisticId::ALL {
            assert_eq!(id.as_str().parse::<StatisticId>().unwrap(), id);
            assert_eq!(StatisticId::of(id.kind(), id.family()), id);
        }
        assert!("Q".parse::<StatisticId>().is_err());
    }

    #[test]
    fn quadratic_threshold_is_normal_quantile() {
        let x = gaussian(40, 6, 1);
        let out = test_quadratic(
            &x,
            0.05,
            StatisticKind::Spearman,
            CovarianceMode::Standardize,
        )
        .unwrap();
        assert!((out.threshold - 1.644_853_626_951_472).abs() < 1e-12);
        assert_eq!(out.law, Law::Analytic);
        assert_eq!(out.reject, out.p_value <= 0.05);
    }

    #[test]
    fn extreme_value_is_monotone_in_max() {
        let x = gaussian(50, 8, 2);
        let out = test_extreme(
            &x,
            0.05,
            StatisticKind::Covariance,
            Law::Analytic,
            None,
            CovarianceMode::Raw { known_m4: None },
        )
        .unwrap();
        let expected = 50.0 * out.raw_value * out.raw_value - extreme_shift(8);
        assert!((out.normalized_value - expected).abs() < 1e-12);
    }

    #[test]
    fn empirical_law_requires_table() {
        let x = gaussian(30, 5, 3);
        let err = test_extreme(
            &x,
            0.05,
            StatisticKind::Spearman,
            Law::Empirical,
            None,
            CovarianceMode::Standardize,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidArgument { name: "tails", .. }));
    }

    #[test]
    fn mismatched_tail_is_rejected() {
        let x = gaussian(30, 5, 3);
        let tail = simulate_tail(
            &TailSpec::new(31, 100, StatisticKind::Spearman, 1),
            &NormalSampler,
        )
        .unwrap();
        assert!(test_extreme(
            &x,
            0.05,
            StatisticKind::Spearman,
            Law::Empirical,
            Some(&tail),
            CovarianceMode::Standardize
        )
        .is_err());
        let raw = simulate_tail(
            &TailSpec::new(30, 100, StatisticKind::Covariance, 1),
            &NormalSampler,
        )
        .unwrap();
        assert!(test_extreme(
            &x,
            0.05,
            StatisticKind::Covariance,
            Law::Empirical,
            Some(&raw),
            CovarianceMode::Standardize
        )
        .is_err());
    }

    #[test]
    fn strong_pair_is_detected() {
        let mut x = gaussian(200, 10, 4);
        let c0 = x.column(0).to_vec();
        let rho: f64 = 0.9;
        x = x
            .map_columns(|i, src, dst| {
                if i == 1 {
                    for k in 0..src.len() {
                        dst[k] = rho * c0[k] + (1.0 - rho * rho).sqrt() * src[k];
                    }
                } else {
                    dst.copy_from_slice(src);
                }
            })
            .unwrap();
        let out = test_quadratic(
            &x,
            0.05,
            StatisticKind::Covariance,
            CovarianceMode::Standardize,
        )
        .unwrap();
        assert!(out.reject);
    }

    #[test]
    fn run_all_analytic_contract() {
        let x = gaussian(60, 12, 5);
        let mut config = TestConfig::new(0.05);
        config.laws = LawChoice::analytic();
        let outs = run_all(&x, &config, &TailSet::default()).unwrap();
        assert_eq!(outs.len(), 6);
        for (o, id) in outs.iter().zip(StatisticId::ALL) {
            assert_eq!(o.statistic, id);
            assert!((0.0..=1.0).contains(&o.p_value));
            assert_eq!(o.reject, o.p_value <= 0.05, "{id}");
            assert_eq!(o.seed, None);
        }
    }

    #[test]
    fn wrong_shape_is_rejected() {
        let config = TestConfig {
            laws: LawChoice::analytic(),
            ..TestConfig::new(0.1)
        };
        let suite =
            TestSuite::calibrate(20, 4, &config, &TailSet::default(), &[StatisticId::T]).unwrap();
        assert!(suite.run(&gaussian(20, 5, 1), &[StatisticId::T]).is_err());
        assert!(suite.run(&gaussian(20, 4, 1), &[StatisticId::S]).is_err());
    }
}
