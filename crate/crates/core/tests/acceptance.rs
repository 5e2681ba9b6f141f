//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so the report reads top to
//! bottom; exits non-zero when any criterion fails.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use hdtest::empirical::{simulate_tail, NormalSampler, StatisticKind, TailSpec};
use hdtest::limits::{
    chi2_1_tail, convolution_upper_quantile, gumbel_cdf, intermediate_cdf, upper_quantile,
    IntermediateLaw,
};
use hdtest::normalization::rank_moment_constants;
use hdtest::rng::derive_seed;
use hdtest::simulation::{
    calibrate, generate, run_cell, ModelId, ModelSpec, SimulationConfig, HARNESS_COVARIANCE_MODE,
};
use hdtest::statistics::{compute_ranks, rank_grid, sample_cov_entry, spearman_entry};
use hdtest::testing::{covariance_values, spearman_values, StatisticId, TailSet, TestSuite};
use hdtest::{quartet, DataMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

const SEED: u64 = 42;
const N: usize = 200;
const ALPHA: f64 = 0.05;
/// Tail-table size. The default rule (`100·p²`) leaves only ~10 table
/// samples beyond the 5% cut at p = 200; this keeps the empirical
/// thresholds' own noise well inside the size band.
const TAIL_SIZE: usize = 20_000_000;

struct Report {
    failures: usize,
}

impl Report {
    fn line(&mut self, id: u32, pass: bool, title: &str, detail: String) {
        if !pass {
            self.failures += 1;
        }
        println!(
            "{} criterion {id}: {title} -- {detail}",
            if pass { "PASS" } else { "FAIL" }
        );
    }
}

fn tails() -> TailSet {
    let started = Instant::now();
    let cov = TailSpec::new(
        N,
        TAIL_SIZE,
        StatisticKind::Covariance,
        derive_seed(SEED, "tail", 0),
    )
    .standardized(HARNESS_COVARIANCE_MODE.standardizes());
    let rank = TailSpec::new(
        N,
        TAIL_SIZE,
        StatisticKind::Spearman,
        derive_seed(SEED, "tail", 1),
    );
    let set = TailSet {
        covariance: Some(Arc::new(
            simulate_tail(&cov, &NormalSampler).expect("covariance tail"),
        )),
        spearman: Some(Arc::new(
            simulate_tail(&rank, &NormalSampler).expect("rank tail"),
        )),
    };
    eprintln!(
        "  tail tables (m = {TAIL_SIZE}) in {:.0?}",
        started.elapsed()
    );
    set
}

fn suite(p: usize, tails: &TailSet, stats: &[StatisticId]) -> TestSuite {
    let config = SimulationConfig::new(N, ALPHA, 0, SEED);
    calibrate(&config, p, tails, stats).expect("calibration")
}

fn frequencies(
    tails: &TailSet,
    model: ModelId,
    p: usize,
    stats: &[StatisticId],
    reps: usize,
) -> Vec<(StatisticId, f64)> {
    let s = suite(p, tails, stats);
    let counts = run_cell(&s, model, stats, reps, SEED).expect("replicates");
    stats
        .iter()
        .zip(counts)
        .map(|(&id, c)| (id, c as f64 / reps as f64))
        .collect()
}

fn fmt(freqs: &[(StatisticId, f64)]) -> String {
    freqs
        .iter()
        .map(|(id, f)| format!("{id}={f:.3}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn null_size(report: &mut Report, tails: &TailSet, id: u32, model: ModelId) {
    let mut pass = true;
    let mut detail = Vec::new();
    for p in [50, 100, 200] {
        let freqs = frequencies(tails, model, p, model.statistics(), 500);
        pass &= freqs.iter().all(|&(_, f)| (f - ALPHA).abs() <= 0.03);
        detail.push(format!("p={p}: {}", fmt(&freqs)));
    }
    let title = if model.is_cauchy() {
        "null size, Cauchy (T, M, TS2)"
    } else {
        "null size, Gaussian (all six)"
    };
    report.line(
        id,
        pass,
        title,
        format!("band 0.05±0.03, R=500; {}", detail.join("; ")),
    );
}

fn power(report: &mut Report, tails: &TailSet) {
    let stats = [StatisticId::S, StatisticId::L, StatisticId::Ts1];
    let f = frequencies(tails, ModelId::M2a, 200, &stats, 300);
    let pass = f[1].1 >= 0.85 && f[2].1 >= 0.85 && f[0].1 <= 0.25;
    report.line(
        3,
        pass,
        "sparse power, Model 2a p=200",
        format!("need L,TS1 >= 0.85, S <= 0.25, R=300; {}", fmt(&f)),
    );

    let f = frequencies(tails, ModelId::M3a, 200, &stats, 300);
    let pass = f[0].1 >= 0.95 && f[2].1 >= 0.95 && f[1].1 <= 0.45;
    report.line(
        4,
        pass,
        "dense power, Model 3a p=200",
        format!("need S,TS1 >= 0.95, L <= 0.45, R=300; {}", fmt(&f)),
    );
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

fn quantile(v: &[f64], q: f64) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s[((s.len() as f64 * q) as usize).min(s.len() - 1)]
}

/// sup over a 5×5 grid of marginal quantiles of |P(A≤a, B≤b) − P(A≤a)P(B≤b)|.
fn grid_gap(a: &[f64], b: &[f64]) -> f64 {
    let m = a.len() as f64;
    let qs = [1.0 / 6.0, 2.0 / 6.0, 3.0 / 6.0, 4.0 / 6.0, 5.0 / 6.0];
    let mut gap = 0.0f64;
    for &qa in &qs {
        let za = quantile(a, qa);
        for &qb in &qs {
            let yb = quantile(b, qb);
            let pa = a.iter().filter(|&&v| v <= za).count() as f64 / m;
            let pb = b.iter().filter(|&&v| v <= yb).count() as f64 / m;
            let joint = a
                .iter()
                .zip(b)
                .filter(|(&u, &v)| u <= za && v <= yb)
                .count() as f64
                / m;
            gap = gap.max((joint - pa * pb).abs());
        }
    }
    gap
}

fn independence(report: &mut Report) -> bool {
    const REPS: usize = 2000;
    let p = 200;
    let spec = ModelSpec::new(ModelId::M1a, N, p).unwrap();
    let draws: Vec<[f64; 4]> = (0..REPS)
        .into_par_iter()
        .map(|r| {
            let x = generate(&spec, derive_seed(SEED, "independence", r as u64)).unwrap();
            let c = covariance_values(&x, HARNESS_COVARIANCE_MODE).unwrap();
            let s = spearman_values(&x).unwrap();
            [c.quadratic, c.extreme, s.quadratic, s.extreme]
        })
        .collect();
    let col = |k: usize| draws.iter().map(|d| d[k]).collect::<Vec<f64>>();
    let (s, l, t, m) = (col(0), col(1), col(2), col(3));
    let (r1, g1) = (correlation(&s, &l), grid_gap(&s, &l));
    let (r2, g2) = (correlation(&t, &m), grid_gap(&t, &m));
    let pass = r1.abs() <= 0.1 && g1 <= 0.05 && r2.abs() <= 0.1 && g2 <= 0.05;
    report.line(
        5,
        pass,
        "asymptotic independence, n=p=200, R=2000",
        format!("need |corr| <= 0.1, grid gap <= 0.05; (S,L): corr={r1:.4} gap={g1:.4}; (T,M): corr={r2:.4} gap={g2:.4}"),
    );
    pass
}

fn numerics(report: &mut Report) -> bool {
    // exp(−1/√(8π)), 30-digit evaluation
    let g0 = gumbel_cdf(0.0);
    let gumbel_ok = (g0 - 0.819_163_861_376_411_2).abs() < 1e-10;
    let chi = chi2_1_tail(3.841459).unwrap();
    let chi_ok = (chi - 0.05).abs() < 1e-6;

    let gaps: Vec<f64> = [1_000, 10_000, 100_000]
        .iter()
        .map(|&p| {
            (0..=400)
                .map(|k| -5.0 + 20.0 * k as f64 / 400.0)
                .map(|y| (gumbel_cdf(y) - intermediate_cdf(y, p).unwrap()).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    let gap_ok = gaps[0] > gaps[1] && gaps[1] > gaps[2];

    const DRAWS: usize = 1_000_000;
    let p = 200;
    let c = convolution_upper_quantile(ALPHA, p).unwrap();
    let law = IntermediateLaw::new(p).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(SEED, "mc-convolution", 0));
    let mut hits = 0usize;
    for _ in 0..DRAWS {
        let z: f64 = StandardNormal.sample(&mut rng);
        let u: f64 = rng.random::<f64>().clamp(1e-15, 1.0 - 1e-15);
        let g = upper_quantile(|y| law.survival(y), 1.0 - u, -20.0, 40.0).unwrap();
        hits += usize::from(z + g >= c);
    }
    let freq = hits as f64 / DRAWS as f64;
    let se = (ALPHA * (1.0 - ALPHA) / DRAWS as f64).sqrt();
    let mc_ok = (freq - ALPHA).abs() <= 3.0 * se;

    let pass = gumbel_ok && chi_ok && gap_ok && mc_ok;
    report.line(
        6,
        pass,
        "distribution numerics",
        format!(
            "gumbel(0)={g0:.12} [{}]; chi2_1_tail(3.841459)={chi:.9} [{}]; sup gaps p=1e3,1e4,1e5: {:.5},{:.5},{:.5} [{}]; \
             c_0.05={c:.5}, MC P(Z+G>=c)={freq:.5} vs 0.05±{:.5} [{}]",
            ok(gumbel_ok), ok(chi_ok), gaps[0], gaps[1], gaps[2], ok(gap_ok), 3.0 * se, ok(mc_ok)
        ),
    );
    pass
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "FAIL"
    }
}

fn naive_rank(x: &[f64], k: usize) -> f64 {
    1.0 + x.iter().filter(|&&v| v < x[k]).count() as f64
}

fn oracles(report: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(SEED, "oracle", 0));
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(3..=30usize);
        let p = rng.random_range(2..=8usize);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..p).map(|_| rng.random_range(-3.0..3.0)).collect())
            .collect();
        let x = DataMatrix::from_rows(&rows).unwrap();
        let ranks = compute_ranks(&x);
        let (mut s, mut l, mut t, mut m) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for i in 0..p {
            for j in i + 1..p {
                let cov = (0..n).map(|k| rows[k][i] * rows[k][j]).sum::<f64>() / n as f64;
                let d2: f64 = (0..n)
                    .map(|k| {
                        let a: Vec<f64> = rows.iter().map(|r| r[i]).collect();
                        let b: Vec<f64> = rows.iter().map(|r| r[j]).collect();
                        (naive_rank(&a, k) - naive_rank(&b, k)).powi(2)
                    })
                    .sum();
                let nf = n as f64;
                let rho = 1.0 - 6.0 * d2 / (nf * (nf * nf - 1.0));
                worst = worst.max((sample_cov_entry(&x, i, j).unwrap() - cov).abs());
                worst = worst.max((spearman_entry(&ranks, i, j).unwrap() - rho).abs());
                s += cov * cov;
                l = l.max(cov.abs());
                t += rho * rho;
                m = m.max(rho.abs());
            }
        }
        let q = quartet(&x);
        for (a, b) in [(q.s_n, s), (q.l_n, l), (q.t_n, t), (q.m_n, m)] {
            worst = worst.max((a - b).abs());
        }
    }

    let mut worst_rank = 0.0f64;
    for n in 3..=10_000usize {
        let c = rank_grid(n);
        let nf = n as f64;
        let s2: f64 = c.iter().map(|v| v * v).sum();
        let s4: f64 = c.iter().map(|v| v.powi(4)).sum();
        let k = rank_moment_constants(n).unwrap();
        worst_rank = worst_rank.max((k.e_n4 - s4 / nf).abs());
        worst_rank = worst_rank.max((k.e_n2n2 - (s2 * s2 - s4) / (nf * (nf - 1.0))).abs());
    }
    let pass = worst < 1e-12 && worst_rank < 1e-12;
    report.line(
        7,
        pass,
        "oracle equivalence",
        format!("100 matrices n<=30, p<=8: max |diff| = {worst:.2e}; rank constants n=3..1e4: max |diff| = {worst_rank:.2e}; need < 1e-12"),
    );
}

fn main() -> ExitCode {
    let mut report = Report { failures: 0 };
    let started = Instant::now();
    let tails = tails();

    null_size(&mut report, &tails, 1, ModelId::M1a);
    null_size(&mut report, &tails, 2, ModelId::M1b);
    power(&mut report, &tails);
    drop(tails);
    let independence_ok = independence(&mut report);
    let numerics_ok = numerics(&mut report);
    oracles(&mut report);
    let covered = independence_ok && numerics_ok;
    report.line(
        8,
        covered,
        "convergence rates (unspecified constants) not reproducible by design",
        "no quantitative rate check; covered by the property suites of criteria 5-6".into(),
    );

    eprintln!("  acceptance suite finished in {:.0?}", started.elapsed());
    if report.failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{} criterion line(s) failed", report.failures);
        ExitCode::FAILURE
    }
}
