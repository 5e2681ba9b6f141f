//! Data-generating models and the size/power harness.
//!
//! | model | rows |
//! |-------|------|
//! | 1a | i.i.d. `N(0, 1)` entries |
//! | 1b | i.i.d. standard Cauchy entries |
//! | 2a | Gaussian, `σ₁₂ = 2.5√(log p / n)`, identity otherwise |
//! | 2b | Cauchy `z`; `x₁ = z₁ + √(log p/n) z₂`, `x₂ = z₂ + √(log p/n) z₁` |
//! | 3a | Gaussian, `Σ = I + (2 log p / p)·11'` |
//! | 3b | Cauchy `z`; `x_j = z_j + (1/(10p)) Σ_{i≠j} z_i` |
//!
//! Cauchy models are evaluated on the rank statistics only.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;
use std::sync::Arc;

use rand_distr::{Cauchy, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::empirical::{
    default_tail_size, simulate_tail, NormalSampler, StatisticKind, TailCache, TailSpec,
    DEFAULT_CONVOLUTION_DRAWS,
};
use crate::error::{check_alpha, Error, Result};
use crate::rng::{derive_seed, substream, StreamRng};
use crate::testing::{CovarianceMode, LawChoice, StatisticId, TailSet, TestConfig, TestSuite};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelId {
    #[serde(rename = "1a")]
    M1a,
    #[serde(rename = "1b")]
    M1b,
    #[serde(rename = "2a")]
    M2a,
    #[serde(rename = "2b")]
    M2b,
    #[serde(rename = "3a")]
    M3a,
    #[serde(rename = "3b")]
    M3b,
}

impl ModelId {
    pub const ALL: [ModelId; 6] = [
        ModelId::M1a,
        ModelId::M1b,
        ModelId::M2a,
        ModelId::M2b,
        ModelId::M3a,
        ModelId::M3b,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelId::M1a => "1a",
            ModelId::M1b => "1b",
            ModelId::M2a => "2a",
            ModelId::M2b => "2b",
            ModelId::M3a => "3a",
            ModelId::M3b => "3b",
        }
    }

    pub fn is_cauchy(self) -> bool {
        matches!(self, ModelId::M1b | ModelId::M2b | ModelId::M3b)
    }

    /// Statistics evaluated for this model, in table order.
    pub fn statistics(self) -> &'static [StatisticId] {
        if self.is_cauchy() {
            &StatisticId::RANK
        } else {
            &StatisticId::ALL
        }
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        ModelId::ALL
            .into_iter()
            .find(|m| m.as_str() == t)
            .ok_or_else(|| {
                Error::invalid(
                    "model",
                    format!("unknown model {s:?}; valid ids are 1a, 1b, 2a, 2b, 3a, 3b"),
                )
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelSpec {
    pub id: ModelId,
    pub n: usize,
    pub p: usize,
}

impl ModelSpec {
    pub fn new(id: ModelId, n: usize, p: usize) -> Result<Self> {
        if n < 3 || p < 2 {
            return Err(Error::invalid(
                "model",
                format!("need n >= 3 and p >= 2, got n = {n}, p = {p}"),
            ));
        }
        let spec = Self { id, n, p };
        if id == ModelId::M2a {
            let rho = spec.planted_correlation();
            if !(rho < 1.0) {
                return Err(Error::invalid(
                    "model",
                    format!("model 2a needs n > 6.25 log p; 2.5 sqrt(log p / n) = {rho}"),
                ));
            }
        }
        Ok(spec)
    }

    fn log_p(&self) -> f64 {
        (self.p as f64).ln()
    }

    /// `σ₁₂ = 2.5√(log p / n)` of model 2a.
    pub fn planted_correlation(&self) -> f64 {
        2.5 * (self.log_p() / self.n as f64).sqrt()
    }

    /// Off-diagonal covariance `2 log p / p` of model 3a.
    pub fn dense_covariance(&self) -> f64 {
        2.0 * self.log_p() / self.p as f64
    }
}

fn fill_cauchy(rng: &mut StreamRng, out: &mut [f64]) {
    let dist = Cauchy::new(0.0, 1.0).expect("valid Cauchy parameters");
    for v in out {
        *v = dist.sample(rng);
    }
}

fn fill_normal(rng: &mut StreamRng, out: &mut [f64]) {
    for v in out {
        *v = StandardNormal.sample(rng);
    }
}

/// Draws an `n x p` dataset from `spec`.
pub fn generate(spec: &ModelSpec, seed: u64) -> Result<DataMatrix> {
    let ModelSpec { id, n, p } = *spec;
    let mut rng = substream(seed, "model", 0);
    let mut values = vec![0.0; n * p];
    let mut row = vec![0.0; p];
    let root_lp_n = (spec.log_p() / n as f64).sqrt();
    let rho = spec.planted_correlation();
    let loading = spec.dense_covariance().sqrt();
    let mix = 1.0 / (10.0 * p as f64);

    for k in 0..n {
        match id {
            ModelId::M1a => fill_normal(&mut rng, &mut row),
            ModelId::M1b => fill_cauchy(&mut rng, &mut row),
            ModelId::M2a => {
                fill_normal(&mut rng, &mut row);
                row[1] = rho * row[0] + (1.0 - rho * rho).sqrt() * row[1];
            }
            ModelId::M2b => {
                fill_cauchy(&mut rng, &mut row);
                let (z1, z2) = (row[0], row[1]);
                row[0] = z1 + root_lp_n * z2;
                row[1] = z2 + root_lp_n * z1;
            }
            ModelId::M3a => {
                fill_normal(&mut rng, &mut row);
                let w: f64 = StandardNormal.sample(&mut rng);
                for v in row.iter_mut() {
                    *v += loading * w;
                }
            }
            ModelId::M3b => {
                fill_cauchy(&mut rng, &mut row);
                let total: f64 = row.iter().sum();
                for v in row.iter_mut() {
                    *v += mix * (total - *v);
                }
            }
        }
        for (i, &v) in row.iter().enumerate() {
            values[i * n + k] = v;
        }
    }
    DataMatrix::from_columns(n, p, values)
}

/// Harness settings.
#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub n: usize,
    pub alpha: f64,
    pub reps: usize,
    pub seed: u64,
    pub laws: LawChoice,
    /// Tail table size; `None` uses the default rule at the largest `p`.
    pub tail_size: Option<usize>,
    pub convolution_draws: usize,
    /// Persist tail tables here when set.
    pub cache: Option<TailCache>,
}

impl SimulationConfig {
    pub fn new(n: usize, alpha: f64, reps: usize, seed: u64) -> Self {
        Self {
            n,
            alpha,
            reps,
            seed,
            laws: LawChoice::default(),
            tail_size: None,
            convolution_draws: DEFAULT_CONVOLUTION_DRAWS,
            cache: None,
        }
    }
}

/// Covariance statistics are computed on empirically standardized data,
/// as for user data.
pub const HARNESS_COVARIANCE_MODE: CovarianceMode = CovarianceMode::Standardize;

/// Builds the tail tables needed for `statistics` at sample size `n`.
pub fn build_tails(
    n: usize,
    m: usize,
    seed: u64,
    statistics: &[StatisticId],
    cache: Option<&TailCache>,
) -> Result<TailSet> {
    let mut tails = TailSet::default();
    for kind in [StatisticKind::Covariance, StatisticKind::Spearman] {
        if !statistics.iter().any(|s| s.kind() == kind) {
            continue;
        }
        let spec = TailSpec::new(n, m, kind, derive_seed(seed, "tail", kind as u64))
            .standardized(HARNESS_COVARIANCE_MODE.standardizes());
        let tail = match cache {
            Some(cache) => cache.load_or_simulate(&spec, &NormalSampler)?.0,
            None => simulate_tail(&spec, &NormalSampler)?,
        };
        match kind {
            StatisticKind::Covariance => tails.covariance = Some(Arc::new(tail)),
            StatisticKind::Spearman => tails.spearman = Some(Arc::new(tail)),
        }
    }
    Ok(tails)
}

/// Seed of replicate `r` of `(model, p)`.
pub fn replicate_seed(master: u64, model: ModelId, p: usize, r: usize) -> u64 {
    derive_seed(master, &format!("replicate-{model}-{p}"), r as u64)
}

/// Test suite for one `p`, calibrated once and shared by all replicates.
pub fn calibrate(
    config: &SimulationConfig,
    p: usize,
    tails: &TailSet,
    statistics: &[StatisticId],
) -> Result<TestSuite> {
    let test_config = TestConfig {
        alpha: config.alpha,
        laws: config.laws,
        covariance: HARNESS_COVARIANCE_MODE,
        convolution_draws: config.convolution_draws,
        seed: derive_seed(config.seed, "convolution", p as u64),
        strict: false,
    };
    TestSuite::calibrate(config.n, p, &test_config, tails, statistics)
}

/// Rejection counts for one `(model, p)` cell, aligned with `statistics`.
pub fn run_cell(
    suite: &TestSuite,
    model: ModelId,
    statistics: &[StatisticId],
    reps: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    let spec = ModelSpec::new(model, suite.n(), suite.p())?;
    let rows: Vec<Result<Vec<bool>>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let x = generate(&spec, replicate_seed(seed, model, spec.p, r))?;
            Ok(suite
                .run(&x, statistics)?
                .iter()
                .map(|o| o.reject)
                .collect())
        })
        .collect();
    let mut counts = vec![0usize; statistics.len()];
    for row in rows {
        for (c, hit) in counts.iter_mut().zip(row?) {
            *c += usize::from(hit);
        }
    }
    Ok(counts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub model: ModelId,
    pub p: usize,
    pub statistic: StatisticId,
    pub frequency: f64,
    pub std_error: f64,
    pub reps: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimulationReport {
    pub rows: Vec<ReportRow>,
}

/// `√(f(1−f)/R)`.
pub fn monte_carlo_se(frequency: f64, reps: usize) -> f64 {
    (frequency * (1.0 - frequency) / reps as f64).sqrt()
}

impl SimulationReport {
    pub fn frequency(&self, model: ModelId, p: usize, statistic: StatisticId) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.model == model && r.p == p && r.statistic == statistic)
            .map(|r| r.frequency)
    }

    pub const CSV_HEADER: &'static str = "model,p,statistic,frequency,std_error,reps,seed";

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{}", Self::CSV_HEADER)?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.model, r.p, r.statistic, r.frequency, r.std_error, r.reps, r.seed
            )?;
        }
        Ok(())
    }

    pub fn read_csv<R: Read>(source: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(source);
        let headers = reader
            .headers()
            .map_err(|e| Error::Format(e.to_string()))?
            .clone();
        let expected: Vec<&str> = Self::CSV_HEADER.split(',').collect();
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(Error::Format(format!(
                "report header must be `{}`",
                Self::CSV_HEADER
            )));
        }
        let mut rows = Vec::new();
        for (line, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| Error::Format(e.to_string()))?;
            let field = |i: usize| rec.get(i).unwrap_or("");
            let num = |i: usize| -> Result<f64> {
                field(i).parse().map_err(|_| {
                    Error::Format(format!("line {}: bad number {:?}", line + 2, field(i)))
                })
            };
            let int = |i: usize| -> Result<u64> {
                field(i).parse().map_err(|_| {
                    Error::Format(format!("line {}: bad integer {:?}", line + 2, field(i)))
                })
            };
            rows.push(ReportRow {
                model: field(0).parse()?,
                p: int(1)? as usize,
                statistic: field(2).parse()?,
                frequency: num(3)?,
                std_error: num(4)?,
                reps: int(5)? as usize,
                seed: int(6)?,
            });
        }
        Ok(Self { rows })
    }
}

/// Runs every `(model, p)` cell of the grid.
pub fn run_grid(
    models: &[ModelId],
    statistics: &[StatisticId],
    p_grid: &[usize],
    config: &SimulationConfig,
) -> Result<SimulationReport> {
    check_alpha(config.alpha)?;
    if config.reps == 0 {
        return Err(Error::invalid("reps", "need at least one replicate"));
    }
    let wanted = |model: ModelId| -> Vec<StatisticId> {
        model
            .statistics()
            .iter()
            .copied()
            .filter(|s| statistics.contains(s))
            .collect()
    };
    let mut all: Vec<StatisticId> = models.iter().flat_map(|&m| wanted(m)).collect();
    all.sort();
    all.dedup();

    let mut report = SimulationReport::default();
    if all.is_empty() || p_grid.is_empty() {
        return Ok(report);
    }
    let m = config
        .tail_size
        .unwrap_or_else(|| default_tail_size(*p_grid.iter().max().expect("nonempty grid")));
    let tails = build_tails(config.n, m, config.seed, &all, config.cache.as_ref())?;

    for &p in p_grid {
        let suite = calibrate(config, p, &tails, &all)?;
        for &model in models {
            let stats = wanted(model);
            if stats.is_empty() {
                continue;
            }
            let counts = run_cell(&suite, model, &stats, config.reps, config.seed)?;
            for (statistic, count) in stats.into_iter().zip(counts) {
                let frequency = count as f64 / config.reps as f64;
                report.rows.push(ReportRow {
                    model,
                    p,
                    statistic,
                    frequency,
                    std_error: monte_carlo_se(frequency, config.reps),
                    reps: config.reps,
                    seed: config.seed,
                });
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Text,
    Csv,
}

impl FromStr for TableFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "text" | "txt" => Ok(TableFormat::Text),
            "csv" => Ok(TableFormat::Csv),
            _ => Err(Error::invalid(
                "format",
                format!("unknown format {s:?}; use text or csv"),
            )),
        }
    }
}

/// Renders the report as a wide table: one row per `p`, one column per
/// `(model, statistic)` in table order.
pub fn report_tables(report: &SimulationReport, format: TableFormat) -> String {
    let mut columns: Vec<(ModelId, StatisticId)> = Vec::new();
    let mut ps: Vec<usize> = Vec::new();
    for r in &report.rows {
        if !columns.contains(&(r.model, r.statistic)) {
            columns.push((r.model, r.statistic));
        }
        if !ps.contains(&r.p) {
            ps.push(r.p);
        }
    }
    columns.sort();
    ps.sort_unstable();

    let header: Vec<String> = std::iter::once("p".to_string())
        .chain(columns.iter().map(|(m, s)| format!("{m}:{s}")))
        .collect();
    let body: Vec<Vec<String>> = ps
        .iter()
        .map(|&p| {
            std::iter::once(p.to_string())
                .chain(columns.iter().map(|&(m, s)| {
                    report
                        .frequency(m, p, s)
                        .map_or_else(|| "-".to_string(), |f| format!("{f:.4}"))
                }))
                .collect()
        })
        .collect();

    let mut out = String::new();
    match format {
        TableFormat::Csv => {
            for line in std::iter::once(&header).chain(&body) {
                out.push_str(&line.join(","));
                out.push('\n');
            }
        }
        TableFormat::Text => {
            let widths: Vec<usize> = (0..header.len())
                .map(|c| {
                    std::iter::once(&header)
                        .chain(&body)
                        .map(|row| row[c].len())
                        .max()
                        .unwrap_or(0)
                })
                .collect();
            for line in std::iter::once(&header).chain(&body) {
                let cells: Vec<String> = line
                    .iter()
                    .zip(&widths)
                    .map(|(cell, &w)| format!("{cell:>w$}"))
                    .collect();
                out.push_str(cells.join("  ").trim_end());
                out.push('\n');
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_ids_parse() {
        for m in ModelId::ALL {
            assert_eq!(m.as_str().parse::<ModelId>().unwrap(), m);
        }
        let err = "9z".parse::<ModelId>().unwrap_err().to_string();
        assert!(err.contains("1a, 1b, 2a, 2b, 3a, 3b"));
    }

    #[test]
    fn planted_correlation_bound() {
        assert!(ModelSpec::new(ModelId::M2a, 10, 100).is_err());
        let spec = ModelSpec::new(ModelId::M2a, 200, 100).unwrap();
        assert!((spec.planted_correlation() - 0.379_356_782_346_286_56).abs() < 1e-12);
    }

    #[test]
    fn generation_is_seeded() {
        let spec = ModelSpec::new(ModelId::M3b, 20, 7).unwrap();
        assert_eq!(generate(&spec, 3).unwrap(), generate(&spec, 3).unwrap());
        assert_ne!(generate(&spec, 3).unwrap(), generate(&spec, 4).unwrap());
    }

    #[test]
    fn cauchy_models_use_rank_statistics() {
        assert_eq!(ModelId::M2b.statistics(), &StatisticId::RANK);
        assert_eq!(ModelId::M2a.statistics().len(), 6);
    }

    #[test]
    fn empty_report_renders_header() {
        let r = SimulationReport::default();
        assert_eq!(report_tables(&r, TableFormat::Csv), "p\n");
        assert_eq!(report_tables(&r, TableFormat::Text), "p\n");
    }

    #[test]
    fn one_cell_report() {
        let r = SimulationReport {
            rows: vec![ReportRow {
                model: ModelId::M1a,
                p: 50,
                statistic: StatisticId::S,
                frequency: 0.05,
                std_error: monte_carlo_se(0.05, 100),
                reps: 100,
                seed: 1,
            }],
        };
        let t = report_tables(&r, TableFormat::Csv);
        assert_eq!(t, "p,1a:S\n50,0.0500\n");
        assert_eq!(report_tables(&r, TableFormat::Text).lines().count(), 2);
    }

    #[test]
    fn single_replicate_frequency_is_binary() {
        let mut config = SimulationConfig::new(40, 0.05, 1, 11);
        config.tail_size = Some(20_000);
        config.convolution_draws = 5_000;
        let report = run_grid(
            &[ModelId::M1a, ModelId::M3b],
            &StatisticId::ALL,
            &[10],
            &config,
        )
        .unwrap();
        assert_eq!(report.rows.len(), 9);
        for row in &report.rows {
            assert!(row.frequency == 0.0 || row.frequency == 1.0);
        }
    }
}
