//! `hdtest` command-line front end.
//!
//! Exit status: 0 when the computation finished (a rejection is a result,
//! not an error), 2 for usage, input or validation problems, 3 for numeric
//! failures.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hdtest::empirical::{
    default_tail_size, empirical_threshold, simulate_tail, CacheStatus, EmpiricalTail,
    NormalSampler, StatisticKind, TailCache, TailSpec, DEFAULT_CONVOLUTION_DRAWS,
};
use hdtest::limits::{convolution_upper_quantile, normal_upper_quantile, IntermediateLaw};
use hdtest::rng::derive_seed;
use hdtest::simulation::{
    report_tables, run_grid, ModelId, ReportRow, SimulationConfig, SimulationReport, TableFormat,
};
use hdtest::testing::{
    CovarianceMode, Law, LawChoice, StatisticId, TailSet, TestConfig, TestOutcome, TestSuite,
};
use hdtest::{load_matrix, Error};
use serde::Serialize;

/// Version of every `--json` document.
const SCHEMA: u32 = 1;
const CACHE_ENV: &str = "HDTEST_CACHE_DIR";

#[derive(Parser)]
#[command(
    name = "hdtest",
    version,
    about = "High-dimensional independence tests"
)]
struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test mutual independence of the columns of a data matrix.
    Test(TestArgs),
    /// Compute thresholds, building or reusing cached tail tables.
    Threshold(ThresholdArgs),
    /// Estimate size and power on the simulation models.
    Simulate(SimulateArgs),
    /// Render a simulation report as a wide table.
    Report(ReportArgs),
}

#[derive(Args)]
struct TestArgs {
    /// CSV file, one observation per row (`-` for stdin).
    #[arg(long)]
    input: PathBuf,
    /// Treat rows of the file as variables and columns as observations.
    #[arg(long)]
    transpose: bool,
    #[arg(long, default_value_t = 0.05, value_parser = parse_alpha)]
    alpha: f64,
    /// `all`, or a comma list of S, L, TS1, T, M, TS2.
    // qualified so clap takes the whole comma list as one value
    #[arg(long, default_value = "all", value_parser = parse_stats)]
    stats: ::std::vec::Vec<StatisticId>,
    /// Law of the extreme and combined tests.
    #[arg(long, value_enum, default_value_t = LawArg::Empirical)]
    laws: LawArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Tail-table size (default `max(10⁶, 100·p²)`, capped at 10⁸).
    #[arg(long)]
    m: Option<usize>,
    /// Draws for the empirical convolution.
    #[arg(long, default_value_t = DEFAULT_CONVOLUTION_DRAWS)]
    draws: usize,
    /// Use the data as given (mean 0, variance 1 assumed) instead of
    /// standardizing each column.
    #[arg(long)]
    no_standardize: bool,
    /// Require `m >= 100·p²`.
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ThresholdArgs {
    #[arg(long)]
    p: usize,
    /// Sample size; needed for empirical laws.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0.05, value_parser = parse_alpha)]
    alpha: f64,
    #[arg(long, value_enum, default_value_t = FamilyArg::Combined)]
    family: FamilyArg,
    #[arg(long, value_enum, default_value_t = LawArg::Analytic)]
    law: LawArg,
    #[arg(long, value_enum, default_value_t = KindArg::Covariance)]
    kind: KindArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_CONVOLUTION_DRAWS)]
    draws: usize,
    /// Covariance tables for unstandardized data.
    #[arg(long)]
    no_standardize: bool,
    /// Cache directory (default: $HDTEST_CACHE_DIR; no caching when unset).
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SimulateArgs {
    /// Comma list of 1a, 1b, 2a, 2b, 3a, 3b.
    #[arg(long, default_value = "1a,1b", value_parser = parse_models)]
    models: ::std::vec::Vec<ModelId>,
    /// Comma list of dimensions.
    #[arg(long, default_value = "50,100,200", value_parser = parse_dims)]
    p: ::std::vec::Vec<usize>,
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long, default_value_t = 500)]
    reps: usize,
    #[arg(long, default_value_t = 0.05, value_parser = parse_alpha)]
    alpha: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// `all`, or a comma list of statistics.
    #[arg(long, default_value = "all", value_parser = parse_stats)]
    stats: ::std::vec::Vec<StatisticId>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_CONVOLUTION_DRAWS)]
    draws: usize,
    /// Full protocol: all six models, p = 50..1000, 1000 replicates.
    #[arg(long)]
    full: bool,
    /// Long-format CSV destination (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// Long-format report CSV (`-` for stdin).
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Text)]
    format: FormatArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum LawArg {
    Analytic,
    Empirical,
}

impl From<LawArg> for Law {
    fn from(l: LawArg) -> Self {
        match l {
            LawArg::Analytic => Law::Analytic,
            LawArg::Empirical => Law::Empirical,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Quadratic,
    Extreme,
    Combined,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Covariance,
    Spearman,
}

impl From<KindArg> for StatisticKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Covariance => StatisticKind::Covariance,
            KindArg::Spearman => StatisticKind::Spearman,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Csv,
}

fn parse_alpha(s: &str) -> Result<f64, String> {
    let a: f64 = s
        .parse()
        .map_err(|_| format!("alpha must be a number, got {s:?}"))?;
    if a > 0.0 && a < 1.0 {
        Ok(a)
    } else {
        Err(format!(
            "alpha must lie in the open interval (0, 1), got {a}"
        ))
    }
}

fn parse_list<T>(s: &str, parse: impl Fn(&str) -> Result<T, Error>) -> Result<Vec<T>, String> {
    let items: Vec<T> = s
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| parse(t).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    if items.is_empty() {
        Err("the list must not be empty".into())
    } else {
        Ok(items)
    }
}

fn parse_stats(s: &str) -> Result<Vec<StatisticId>, String> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(StatisticId::ALL.to_vec());
    }
    let mut ids = parse_list(s, str::parse)?;
    // table order, no repeats
    ids.sort();
    ids.dedup();
    Ok(ids)
}

fn parse_models(s: &str) -> Result<Vec<ModelId>, String> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(ModelId::ALL.to_vec());
    }
    parse_list(s, str::parse)
}

fn parse_dims(s: &str) -> Result<Vec<usize>, String> {
    parse_list(s, |t| {
        t.trim()
            .parse::<usize>()
            .ok()
            .filter(|&p| p >= 2)
            .ok_or_else(|| Error::InvalidArgument {
                name: "p",
                reason: format!("dimension must be an integer >= 2, got {t:?}"),
            })
    })
}

/// Failure carrying its exit status.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Numeric(_) | Error::DegenerateScale(_) => 3,
            _ => 2,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Self {
            code: 2,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

type CmdResult = Result<(), Failure>;

fn open_input(path: &Path) -> io::Result<Box<dyn Read>> {
    if path.as_os_str() == "-" {
        Ok(Box::new(io::stdin().lock()))
    } else {
        Ok(Box::new(BufReader::new(File::open(path).map_err(|e| {
            io::Error::new(e.kind(), format!("{}: {e}", path.display()))
        })?)))
    }
}

fn emit_json<T: Serialize>(value: &T) -> CmdResult {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| usage(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

fn cache_from(explicit: Option<PathBuf>) -> Option<TailCache> {
    explicit
        .or_else(|| std::env::var_os(CACHE_ENV).map(PathBuf::from))
        .map(TailCache::new)
}

/// Simulates (or loads) the tail table for `kind`.
fn obtain_tail(
    spec: &TailSpec,
    cache: Option<&TailCache>,
) -> Result<(EmpiricalTail, Option<CacheStatus>), Failure> {
    match cache {
        Some(cache) => {
            let (tail, status) = cache.load_or_simulate(spec, &NormalSampler)?;
            if let CacheStatus::Recomputed(reason) = &status {
                eprintln!("warning: tail cache unusable ({reason}); recomputed");
            }
            Ok((tail, Some(status)))
        }
        None => Ok((simulate_tail(spec, &NormalSampler)?, None)),
    }
}

fn tail_spec(n: usize, m: usize, kind: StatisticKind, seed: u64, standardize: bool) -> TailSpec {
    TailSpec::new(n, m, kind, derive_seed(seed, "tail", kind as u64)).standardized(standardize)
}

#[derive(Serialize)]
struct TestDocument<'a> {
    schema: u32,
    command: &'static str,
    n: usize,
    p: usize,
    alpha: f64,
    seed: u64,
    standardize: bool,
    tail_size: Option<usize>,
    outcomes: &'a [TestOutcome],
}

fn cmd_test(args: TestArgs) -> CmdResult {
    let x = load_matrix(open_input(&args.input)?, !args.transpose)?;
    let (n, p) = (x.n(), x.p());
    let law: Law = args.laws.into();
    let mut config = TestConfig::new(args.alpha);
    config.laws = LawChoice {
        extreme: law,
        combined: law,
    };
    config.covariance = if args.no_standardize {
        CovarianceMode::Raw { known_m4: None }
    } else {
        CovarianceMode::Standardize
    };
    config.convolution_draws = args.draws;
    config.seed = derive_seed(args.seed, "convolution", p as u64);
    config.strict = args.strict;

    let uses_tables = law == Law::Empirical;
    let m = args.m.unwrap_or_else(|| default_tail_size(p));
    let cache = cache_from(None);
    let mut tails = TailSet::default();
    if uses_tables {
        for kind in [StatisticKind::Covariance, StatisticKind::Spearman] {
            if !args.stats.iter().any(|s| s.kind() == kind) {
                continue;
            }
            let spec = tail_spec(n, m, kind, args.seed, config.covariance.standardizes());
            let tail = Arc::new(obtain_tail(&spec, cache.as_ref())?.0);
            match kind {
                StatisticKind::Covariance => tails.covariance = Some(tail),
                StatisticKind::Spearman => tails.spearman = Some(tail),
            }
        }
    }
    let suite = TestSuite::calibrate(n, p, &config, &tails, &args.stats)?;
    let outcomes = suite.run(&x, &args.stats)?;

    if args.json {
        return emit_json(&TestDocument {
            schema: SCHEMA,
            command: "test",
            n,
            p,
            alpha: args.alpha,
            seed: args.seed,
            standardize: !args.no_standardize,
            tail_size: uses_tables.then_some(m),
            outcomes: &outcomes,
        });
    }
    let mut out = io::stdout().lock();
    writeln!(out, "n = {n}, p = {p}, alpha = {}", args.alpha)?;
    writeln!(
        out,
        "{:<10} {:>14} {:>12} {:>10} {:>10} {:>7}  law",
        "statistic", "raw", "normalized", "threshold", "p-value", "reject"
    )?;
    for o in &outcomes {
        writeln!(
            out,
            "{:<10} {:>14.6} {:>12.4} {:>10.4} {:>10.4} {:>7}  {}",
            o.statistic.to_string(),
            o.raw_value,
            o.normalized_value,
            o.threshold,
            o.p_value,
            if o.reject { "yes" } else { "no" },
            o.law
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ThresholdDocument {
    schema: u32,
    command: &'static str,
    family: &'static str,
    law: Law,
    kind: Option<StatisticKind>,
    n: Option<usize>,
    p: usize,
    alpha: f64,
    threshold: f64,
    tail_size: Option<usize>,
    seed: Option<u64>,
    cache: Option<&'static str>,
}

fn cmd_threshold(args: ThresholdArgs) -> CmdResult {
    if args.p < 2 {
        return Err(usage(format!("p must be at least 2, got {}", args.p)));
    }
    let law: Law = match args.family {
        FamilyArg::Quadratic => Law::Analytic,
        _ => args.law.into(),
    };
    let mut doc = ThresholdDocument {
        schema: SCHEMA,
        command: "threshold",
        family: match args.family {
            FamilyArg::Quadratic => "quadratic",
            FamilyArg::Extreme => "extreme",
            FamilyArg::Combined => "combined",
        },
        law,
        kind: None,
        n: args.n,
        p: args.p,
        alpha: args.alpha,
        threshold: f64::NAN,
        tail_size: None,
        seed: None,
        cache: None,
    };
    doc.threshold = match (args.family, law) {
        (FamilyArg::Quadratic, _) => normal_upper_quantile(args.alpha)?,
        (FamilyArg::Extreme, Law::Analytic) => {
            IntermediateLaw::new(args.p)?.upper_quantile(args.alpha)?
        }
        (FamilyArg::Combined, Law::Analytic) => convolution_upper_quantile(args.alpha, args.p)?,
        (family, Law::Empirical) => {
            let n = args
                .n
                .ok_or_else(|| usage("--n is required for the empirical law"))?;
            let kind: StatisticKind = args.kind.into();
            let m = args.m.unwrap_or_else(|| default_tail_size(args.p));
            let spec = tail_spec(n, m, kind, args.seed, !args.no_standardize);
            let cache = cache_from(args.cache_dir.clone());
            let (tail, status) = obtain_tail(&spec, cache.as_ref())?;
            doc.kind = Some(kind);
            doc.tail_size = Some(m);
            doc.seed = Some(args.seed);
            doc.cache = status.map(|s| match s {
                CacheStatus::Hit => "hit",
                CacheStatus::Miss => "miss",
                CacheStatus::Recomputed(_) => "recomputed",
            });
            let combined = matches!(family, FamilyArg::Combined);
            let conv_seed = derive_seed(args.seed, "convolution", args.p as u64);
            empirical_threshold(&tail, args.alpha, args.p, combined, args.draws, conv_seed)?
        }
    };
    if args.json {
        emit_json(&doc)
    } else {
        if let Some(status) = doc.cache {
            eprintln!("tail cache: {status}");
        }
        println!("{}", doc.threshold);
        Ok(())
    }
}

#[derive(Serialize)]
struct SimulateDocument<'a> {
    schema: u32,
    command: &'static str,
    n: usize,
    alpha: f64,
    reps: usize,
    seed: u64,
    rows: &'a [ReportRow],
}

fn cmd_simulate(mut args: SimulateArgs) -> CmdResult {
    if args.full {
        args.models = ModelId::ALL.to_vec();
        args.p = vec![50, 100, 200, 400, 600, 800, 1000];
        args.reps = 1000;
    }
    if args.reps == 0 {
        return Err(usage("reps must be at least 1"));
    }
    let mut config = SimulationConfig::new(args.n, args.alpha, args.reps, args.seed);
    config.tail_size = args.m;
    config.convolution_draws = args.draws;
    config.cache = cache_from(None);
    let report = run_grid(&args.models, &args.stats, &args.p, &config)?;

    if args.json {
        emit_json(&SimulateDocument {
            schema: SCHEMA,
            command: "simulate",
            n: args.n,
            alpha: args.alpha,
            reps: args.reps,
            seed: args.seed,
            rows: &report.rows,
        })?;
    }
    match &args.out {
        Some(path) => {
            let file = File::create(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            report.write_csv(BufWriter::new(file))?;
            if !args.json {
                print!("{}", report_tables(&report, TableFormat::Text));
            }
        }
        None if !args.json => report.write_csv(io::stdout().lock())?,
        None => {}
    }
    Ok(())
}

fn cmd_report(args: ReportArgs) -> CmdResult {
    let report = SimulationReport::read_csv(open_input(&args.input)?)?;
    let format = match args.format {
        FormatArg::Text => TableFormat::Text,
        FormatArg::Csv => TableFormat::Csv,
    };
    print!("{}", report_tables(&report, format));
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if threads == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: cannot configure {threads} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::Test(a) => cmd_test(a),
        Command::Threshold(a) => cmd_threshold(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Report(a) => cmd_report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
