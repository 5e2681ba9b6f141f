//! Simulated null tails for the extreme-value and combined tests.
//!
//! Under independence, `σ̂_ij` (or `r_ij`) depends only on the pair of
//! columns `(X_i, X_j)`, so the expected number of exceedances
//! `λ_n(y) = Σ_{i<j} P(n·σ̂_ij² > 4 log p − log log p + y)` can be estimated
//! from `m` simulated independent pairs. The table of simulated values
//! depends on `n` and the statistic only, so one table serves every `p`.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Cauchy, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::standardize_into;
use crate::error::{check_alpha, Error, Result};
use crate::limits::extreme_shift;
use crate::normalization::pair_count;
use crate::rng::{substream, StreamRng};
use crate::statistics::{dot, rank_grid};

/// DKW confidence parameter δ.
pub const DKW_DELTA: f64 = 0.01;
/// Largest default table size.
pub const MAX_DEFAULT_TAIL_SIZE: usize = 100_000_000;
/// Default number of normal draws for the empirical convolution.
pub const DEFAULT_CONVOLUTION_DRAWS: usize = 1_000_000;
/// Default number of independently seeded shards per table.
pub const DEFAULT_SHARDS: usize = 64;
/// Exceedance counts below this are flagged as low resolution.
pub const LOW_RESOLUTION_COUNT: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StatisticKind {
    Covariance,
    Spearman,
}

impl StatisticKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StatisticKind::Covariance => "covariance",
            StatisticKind::Spearman => "spearman",
        }
    }

    fn code(self) -> u8 {
        match self {
            StatisticKind::Covariance => 0,
            StatisticKind::Spearman => 1,
        }
    }

    fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(StatisticKind::Covariance),
            1 => Some(StatisticKind::Spearman),
            _ => None,
        }
    }
}

/// Draws one column of `n` values from a hypothesized null marginal.
pub trait NullSampler: Send + Sync {
    /// Stable identifier, part of the cache key.
    fn id(&self) -> &str;
    fn fill(&self, rng: &mut StreamRng, out: &mut [f64]);
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NormalSampler;

impl NullSampler for NormalSampler {
    fn id(&self) -> &str {
        "normal"
    }

    fn fill(&self, rng: &mut StreamRng, out: &mut [f64]) {
        for v in out {
            *v = StandardNormal.sample(rng);
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CauchySampler;

impl NullSampler for CauchySampler {
    fn id(&self) -> &str {
        "cauchy"
    }

    fn fill(&self, rng: &mut StreamRng, out: &mut [f64]) {
        let dist = Cauchy::new(0.0, 1.0).expect("valid Cauchy parameters");
        for v in out {
            *v = dist.sample(rng);
        }
    }
}

/// What to simulate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TailSpec {
    pub n: usize,
    pub m: usize,
    pub kind: StatisticKind,
    pub seed: u64,
    /// Standardize simulated covariance columns, mirroring a pipeline that
    /// standardizes its input. Ignored for the Spearman kind.
    pub standardize: bool,
    pub shards: usize,
}

impl TailSpec {
    pub fn new(n: usize, m: usize, kind: StatisticKind, seed: u64) -> Self {
        Self {
            n,
            m,
            kind,
            seed,
            standardize: false,
            shards: DEFAULT_SHARDS,
        }
    }

    pub fn standardized(mut self, yes: bool) -> Self {
        self.standardize = yes && self.kind == StatisticKind::Covariance;
        self
    }
}

/// `max(10⁶, 100·p²)`, capped at [`MAX_DEFAULT_TAIL_SIZE`].
pub fn default_tail_size(p: usize) -> usize {
    let want = (100 * p.saturating_mul(p)).max(1_000_000);
    if want > MAX_DEFAULT_TAIL_SIZE {
        log::warn!(
            "tail size 100*p^2 = {want} capped at {MAX_DEFAULT_TAIL_SIZE}; the empirical law \
             is coarser than recommended for p = {p}"
        );
        MAX_DEFAULT_TAIL_SIZE
    } else {
        want
    }
}

/// `√(log(2/δ)/(2m))`.
pub fn dkw_epsilon(m: usize) -> f64 {
    ((2.0 / DKW_DELTA).ln() / (2.0 * m as f64)).sqrt()
}

/// Ascending simulated values of `n·σ̂₁₂²` (or `n·r₁₂²`).
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalTail {
    pub n: usize,
    pub kind: StatisticKind,
    pub seed: u64,
    pub sampler_id: String,
    pub standardized: bool,
    pub dkw_epsilon: f64,
    sorted_samples: Vec<f64>,
}

impl EmpiricalTail {
    pub fn m(&self) -> usize {
        self.sorted_samples.len()
    }

    pub fn sorted_samples(&self) -> &[f64] {
        &self.sorted_samples
    }

    /// Number of samples strictly above `shift + y`, with the cut clamped at
    /// zero. Comparisons are made on `s − shift` so that a threshold taken
    /// from a sample value compares consistently.
    fn count_above(&self, shift: f64, y: f64) -> usize {
        let y = y.max(-shift);
        let idx = self.sorted_samples.partition_point(|&s| s - shift <= y);
        self.m() - idx
    }

    /// Errors when `m < 100·p²`.
    pub fn check_resolution(&self, p: usize) -> Result<()> {
        let need = 100 * p * p;
        if self.m() < need {
            return Err(Error::invalid(
                "m",
                format!(
                    "strict mode needs m >= 100 p^2 = {need}, table has {}",
                    self.m()
                ),
            ));
        }
        Ok(())
    }

    fn from_samples(spec: &TailSpec, sampler_id: &str, mut samples: Vec<f64>) -> Self {
        samples.sort_unstable_by(f64::total_cmp);
        Self {
            n: spec.n,
            kind: spec.kind,
            seed: spec.seed,
            sampler_id: sampler_id.to_string(),
            standardized: spec.standardize,
            dkw_epsilon: dkw_epsilon(samples.len()),
            sorted_samples: samples,
        }
    }
}

fn shard_sizes(m: usize, shards: usize) -> Vec<usize> {
    let shards = shards.clamp(1, m.max(1));
    (0..shards)
        .map(|s| m / shards + usize::from(s < m % shards))
        .collect()
}

/// Simulates `m` independent null pairs.
///
/// Spearman pairs ignore the sampler: the ranks of a continuous i.i.d.
/// column form a uniform permutation, so one fixed grid is paired with a
/// shuffled copy. Shard `s` uses substream `(seed, "tail-<kind>", s)`.
pub fn simulate_tail(spec: &TailSpec, sampler: &dyn NullSampler) -> Result<EmpiricalTail> {
    if spec.m == 0 {
        return Err(Error::invalid("m", "need at least one simulated pair"));
    }
    if spec.n < 2 {
        return Err(Error::invalid("n", format!("need n >= 2, got {}", spec.n)));
    }
    let n = spec.n;
    let label = format!("tail-{}", spec.kind.as_str());
    let sizes = shard_sizes(spec.m, spec.shards);

    let shards: Vec<Result<Vec<f64>>> = sizes
        .par_iter()
        .enumerate()
        .map(|(s, &count)| {
            let mut rng = substream(spec.seed, &label, s as u64);
            let mut out = Vec::with_capacity(count);
            match spec.kind {
                StatisticKind::Spearman => {
                    let grid = rank_grid(n);
                    let mut perm = grid.clone();
                    for _ in 0..count {
                        perm.shuffle(&mut rng);
                        let d = dot(&grid, &perm);
                        out.push(d * d / n as f64);
                    }
                }
                StatisticKind::Covariance => {
                    let mut x = vec![0.0; n];
                    let mut y = vec![0.0; n];
                    let mut zx = vec![0.0; n];
                    let mut zy = vec![0.0; n];
                    for _ in 0..count {
                        sampler.fill(&mut rng, &mut x);
                        sampler.fill(&mut rng, &mut y);
                        let d = if spec.standardize {
                            if x.iter().all(|&v| v == x[0]) || y.iter().all(|&v| v == y[0]) {
                                return Err(Error::invalid(
                                    "sampler",
                                    format!("`{}` produced a constant column", sampler.id()),
                                ));
                            }
                            standardize_into(&x, &mut zx);
                            standardize_into(&y, &mut zy);
                            dot(&zx, &zy)
                        } else {
                            dot(&x, &y)
                        };
                        out.push(d * d / n as f64);
                    }
                }
            }
            Ok(out)
        })
        .collect();

    let mut samples = Vec::with_capacity(spec.m);
    for shard in shards {
        samples.extend(shard?);
    }
    let id = match spec.kind {
        StatisticKind::Spearman => "permutation",
        StatisticKind::Covariance => sampler.id(),
    };
    Ok(EmpiricalTail::from_samples(spec, id, samples))
}

/// Estimate of `λ_n(y)` and `F̂(y) = exp(−λ̂)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaEstimate {
    pub lambda: f64,
    pub f_hat: f64,
    pub count: usize,
    /// Fewer than [`LOW_RESOLUTION_COUNT`] exceedances backed the estimate.
    pub low_resolution: bool,
}

/// The empirical extreme-value law of `n·L_n² − 4 log p + log log p` for a
/// given `p`, backed by a simulated tail.
#[derive(Debug, Clone, Copy)]
pub struct EmpiricalExtremeLaw<'a> {
    tail: &'a EmpiricalTail,
    p: usize,
    shift: f64,
    pairs: f64,
}

impl<'a> EmpiricalExtremeLaw<'a> {
    pub fn new(tail: &'a EmpiricalTail, p: usize) -> Result<Self> {
        if p < 2 {
            return Err(Error::invalid("p", format!("need p >= 2, got {p}")));
        }
        Ok(Self {
            tail,
            p,
            shift: extreme_shift(p),
            pairs: pair_count(p),
        })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn tail(&self) -> &EmpiricalTail {
        self.tail
    }

    fn lambda_for(&self, count: usize) -> f64 {
        self.pairs * count as f64 / self.tail.m() as f64
    }

    pub fn lambda(&self, y: f64) -> LambdaEstimate {
        let count = self.tail.count_above(self.shift, y);
        let lambda = self.lambda_for(count);
        LambdaEstimate {
            lambda,
            f_hat: (-lambda).exp(),
            count,
            low_resolution: count < LOW_RESOLUTION_COUNT,
        }
    }

    pub fn cdf(&self, y: f64) -> f64 {
        self.lambda(y).f_hat
    }

    /// `1 − F̂(y)`.
    pub fn survival(&self, y: f64) -> f64 {
        let lambda = self.lambda_for(self.tail.count_above(self.shift, y));
        -(-lambda).exp_m1()
    }

    fn survival_of_count(&self, count: usize) -> f64 {
        -(-self.lambda_for(count)).exp_m1()
    }

    /// The largest exceedance count whose survival stays `<= alpha`, or
    /// `None` when even a count of zero is too many.
    fn max_count(&self, alpha: f64) -> usize {
        let m = self.tail.m();
        let guess = (m as f64 * -(-alpha).ln_1p() / self.pairs).floor();
        let mut k = if guess >= m as f64 { m } else { guess as usize };
        while k > 0 && self.survival_of_count(k) > alpha {
            k -= 1;
        }
        while k < m && self.survival_of_count(k + 1) <= alpha {
            k += 1;
        }
        k
    }

    /// Smallest `y` with `1 − F̂(y) <= alpha`.
    ///
    /// `F̂` is a right-continuous step function, so for every `v`,
    /// `v >= threshold` exactly when `survival(v) <= alpha`.
    pub fn upper_quantile(&self, alpha: f64) -> Result<f64> {
        check_alpha(alpha)?;
        let k = self.max_count(alpha);
        let m = self.tail.m();
        if k >= m {
            return Ok(f64::NEG_INFINITY);
        }
        let s = self.tail.sorted_samples[m - k - 1];
        if s <= 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(s - self.shift)
    }

    /// Inverse-transform draw from `F̂` for a uniform `u ∈ (0, 1)`.
    pub fn quantile_draw(&self, u: f64) -> f64 {
        let m = self.tail.m();
        let limit = m as f64 * -u.ln() / self.pairs;
        let k = if limit >= m as f64 {
            m
        } else {
            limit.floor() as usize
        };
        if k >= m {
            -self.shift
        } else {
            self.tail.sorted_samples[m - k - 1] - self.shift
        }
    }
}

/// `λ̂_n(y)` and `F̂(y)` for dimension `p`.
pub fn empirical_lambda(tail: &EmpiricalTail, p: usize, y: f64) -> Result<LambdaEstimate> {
    Ok(EmpiricalExtremeLaw::new(tail, p)?.lambda(y))
}

/// Empirical law of `Z + G`, `Z ~ N(0,1)` independent of `G ~ F̂`, stored as
/// sorted simulated sums.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalConvolution {
    sorted_sums: Vec<f64>,
}

impl EmpiricalConvolution {
    /// Draws `draws` pairs from substream `(seed, "convolution", 0)`.
    pub fn simulate(law: &EmpiricalExtremeLaw<'_>, draws: usize, seed: u64) -> Result<Self> {
        if draws == 0 {
            return Err(Error::invalid(
                "quad_normal_samples",
                "need at least one draw",
            ));
        }
        let mut rng = substream(seed, "convolution", 0);
        let mut sums = Vec::with_capacity(draws);
        for _ in 0..draws {
            let z: f64 = StandardNormal.sample(&mut rng);
            // open interval (0, 1)
            let u: f64 = loop {
                let u: f64 = rng.random();
                if u > 0.0 {
                    break u;
                }
            };
            sums.push(z + law.quantile_draw(u));
        }
        sums.sort_unstable_by(f64::total_cmp);
        Ok(Self { sorted_sums: sums })
    }

    pub fn draws(&self) -> usize {
        self.sorted_sums.len()
    }

    /// Fraction of simulated sums strictly above `v`.
    pub fn survival(&self, v: f64) -> f64 {
        let idx = self.sorted_sums.partition_point(|&t| t <= v);
        (self.draws() - idx) as f64 / self.draws() as f64
    }

    /// Smallest `c` with `survival(c) <= alpha`.
    pub fn upper_quantile(&self, alpha: f64) -> Result<f64> {
        check_alpha(alpha)?;
        let b = self.draws();
        let k = (alpha * b as f64).floor() as usize;
        if k >= b {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(self.sorted_sums[b - k - 1])
    }
}

/// Empirical threshold for the extreme test (`combined = false`) or the
/// combined test (`combined = true`).
pub fn empirical_threshold(
    tail: &EmpiricalTail,
    alpha: f64,
    p: usize,
    combined: bool,
    quad_normal_samples: usize,
    seed: u64,
) -> Result<f64> {
    check_alpha(alpha)?;
    let law = EmpiricalExtremeLaw::new(tail, p)?;
    let k = law.max_count(alpha);
    if k < LOW_RESOLUTION_COUNT {
        log::warn!(
            "the alpha = {alpha} tail for p = {p} rests on {k} of {} samples; \
             increase the tail size",
            tail.m()
        );
    }
    if combined {
        EmpiricalConvolution::simulate(&law, quad_normal_samples, seed)?.upper_quantile(alpha)
    } else {
        law.upper_quantile(alpha)
    }
}

const MAGIC: &[u8; 8] = b"HDTAIL\0\0";
const CACHE_VERSION: u32 = 1;

impl EmpiricalTail {
    /// Binary layout, little endian: magic, version `u32`, kind `u8`,
    /// standardized `u8`, n `u64`, m `u64`, seed `u64`, sampler-id length
    /// `u32` and UTF-8 bytes, then `m` `f64` samples in ascending order.
    pub fn write_to<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&CACHE_VERSION.to_le_bytes())?;
        w.write_all(&[self.kind.code(), u8::from(self.standardized)])?;
        w.write_all(&(self.n as u64).to_le_bytes())?;
        w.write_all(&(self.m() as u64).to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        w.write_all(&(self.sampler_id.len() as u32).to_le_bytes())?;
        w.write_all(self.sampler_id.as_bytes())?;
        let mut buf = Vec::with_capacity(8 * 8192);
        for chunk in self.sorted_samples.chunks(8192) {
            buf.clear();
            for v in chunk {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        w.flush()
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let bad = |what: &str| Error::Format(format!("tail cache: {what}"));
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)
            .map_err(|_| bad("truncated header"))?;
        if &magic != MAGIC {
            return Err(bad("bad magic"));
        }
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b4).map_err(|_| bad("truncated header"))?;
        let version = u32::from_le_bytes(b4);
        if version != CACHE_VERSION {
            return Err(bad(&format!("version {version}, expected {CACHE_VERSION}")));
        }
        let mut flags = [0u8; 2];
        r.read_exact(&mut flags)
            .map_err(|_| bad("truncated header"))?;
        let kind = StatisticKind::from_code(flags[0]).ok_or_else(|| bad("unknown kind"))?;
        let mut read_u64 = |r: &mut R| -> Result<u64> {
            r.read_exact(&mut b8).map_err(|_| bad("truncated header"))?;
            Ok(u64::from_le_bytes(b8))
        };
        let n = read_u64(&mut r)? as usize;
        let m = read_u64(&mut r)? as usize;
        let seed = read_u64(&mut r)?;
        r.read_exact(&mut b4).map_err(|_| bad("truncated header"))?;
        let id_len = u32::from_le_bytes(b4) as usize;
        if id_len > 1024 {
            return Err(bad("sampler id too long"));
        }
        let mut id = vec![0u8; id_len];
        r.read_exact(&mut id).map_err(|_| bad("truncated header"))?;
        let sampler_id = String::from_utf8(id).map_err(|_| bad("sampler id is not UTF-8"))?;

        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() != 8 * m {
            return Err(bad(&format!(
                "expected {} sample bytes, found {}",
                8 * m,
                bytes.len()
            )));
        }
        let samples: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        if samples.windows(2).any(|w| w[0] > w[1]) || samples.iter().any(|v| !(*v >= 0.0)) {
            return Err(bad("samples are not sorted nonnegative values"));
        }
        Ok(Self {
            n,
            kind,
            seed,
            sampler_id,
            standardized: flags[1] != 0,
            dkw_epsilon: dkw_epsilon(m),
            sorted_samples: samples,
        })
    }
}

/// How a table was obtained from a [`TailCache`].
#[derive(Debug, Clone, PartialEq)]
pub enum CacheStatus {
    Hit,
    Miss,
    /// The file existed but could not be used; the reason is attached.
    Recomputed(String),
}

/// Directory of tail tables keyed by `(n, kind, m, seed, sampler, standardize)`.
#[derive(Debug, Clone)]
pub struct TailCache {
    dir: PathBuf,
}

impl TailCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, spec: &TailSpec, sampler: &dyn NullSampler) -> PathBuf {
        let id = match spec.kind {
            StatisticKind::Spearman => "permutation",
            StatisticKind::Covariance => sampler.id(),
        };
        let std = if spec.standardize { "-std" } else { "" };
        self.dir.join(format!(
            "tail-{}-n{}-m{}-s{}-{}{}-k{}.bin",
            spec.kind.as_str(),
            spec.n,
            spec.m,
            spec.seed,
            id,
            std,
            spec.shards
        ))
    }

    fn matches(tail: &EmpiricalTail, spec: &TailSpec, sampler: &dyn NullSampler) -> bool {
        let id = match spec.kind {
            StatisticKind::Spearman => "permutation",
            StatisticKind::Covariance => sampler.id(),
        };
        tail.n == spec.n
            && tail.m() == spec.m
            && tail.kind == spec.kind
            && tail.seed == spec.seed
            && tail.sampler_id == id
            && tail.standardized == spec.standardize
    }

    /// Loads the table for `spec`, simulating and storing it when missing or
    /// unreadable.
    pub fn load_or_simulate(
        &self,
        spec: &TailSpec,
        sampler: &dyn NullSampler,
    ) -> Result<(EmpiricalTail, CacheStatus)> {
        let path = self.path_for(spec, sampler);
        let status = match fs::File::open(&path) {
            Ok(file) => match EmpiricalTail::read_from(io::BufReader::new(file)) {
                Ok(tail) if Self::matches(&tail, spec, sampler) => {
                    return Ok((tail, CacheStatus::Hit));
                }
                Ok(_) => CacheStatus::Recomputed("cached key does not match".into()),
                Err(e) => CacheStatus::Recomputed(e.to_string()),
            },
            Err(_) => CacheStatus::Miss,
        };
        if let CacheStatus::Recomputed(reason) = &status {
            log::warn!("ignoring tail cache {}: {reason}", path.display());
        }
        let tail = simulate_tail(spec, sampler)?;
        fs::create_dir_all(&self.dir)?;
        let tmp = path.with_extension("tmp");
        {
            let file = fs::File::create(&tmp)?;
            tail.write_to(io::BufWriter::new(file))?;
        }
        fs::rename(&tmp, &path)?;
        Ok((tail, status))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_tail(kind: StatisticKind, n: usize, m: usize, seed: u64) -> EmpiricalTail {
        simulate_tail(&TailSpec::new(n, m, kind, seed), &NormalSampler).unwrap()
    }

    #[test]
    fn rejects_empty_table() {
        let spec = TailSpec::new(10, 0, StatisticKind::Spearman, 1);
        assert!(simulate_tail(&spec, &NormalSampler).is_err());
    }

    #[test]
    fn constant_sampler_is_reported() {
        struct Zero;
        impl NullSampler for Zero {
            fn id(&self) -> &str {
                "zero"
            }
            fn fill(&self, _: &mut StreamRng, out: &mut [f64]) {
                out.fill(0.0);
            }
        }
        let spec = TailSpec::new(10, 5, StatisticKind::Covariance, 1).standardized(true);
        assert!(simulate_tail(&spec, &Zero).is_err());
    }

    #[test]
    fn same_seed_same_table() {
        let a = small_tail(StatisticKind::Covariance, 20, 5000, 9);
        let b = small_tail(StatisticKind::Covariance, 20, 5000, 9);
        let c = small_tail(StatisticKind::Covariance, 20, 5000, 10);
        assert_eq!(a.sorted_samples(), b.sorted_samples());
        assert_ne!(a.sorted_samples(), c.sorted_samples());
        assert!(a.sorted_samples().windows(2).all(|w| w[0] <= w[1]));
        assert!(a.sorted_samples()[0] >= 0.0);
    }

    #[test]
    fn dkw_shrinks_with_m() {
        assert!(dkw_epsilon(1000) > dkw_epsilon(10_000));
        assert!((dkw_epsilon(1) - (200f64.ln() / 2.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn default_size_rule() {
        assert_eq!(default_tail_size(50), 1_000_000);
        assert_eq!(default_tail_size(200), 4_000_000);
        assert_eq!(default_tail_size(5000), MAX_DEFAULT_TAIL_SIZE);
    }

    #[test]
    fn lambda_edges() {
        let tail = small_tail(StatisticKind::Covariance, 30, 2000, 3);
        let law = EmpiricalExtremeLaw::new(&tail, 20).unwrap();
        let high = law.lambda(1e6);
        assert_eq!(high.count, 0);
        assert_eq!(high.f_hat, 1.0);
        assert!(high.low_resolution);
        let low = law.lambda(-law.shift - 1.0);
        assert_eq!(low.count, 2000);
        assert!((low.lambda - 190.0).abs() < 1e-12);
        assert!(low.f_hat < 1e-80);
    }

    #[test]
    fn quantile_is_coherent_with_survival() {
        let tail = small_tail(StatisticKind::Spearman, 12, 20_000, 5);
        let law = EmpiricalExtremeLaw::new(&tail, 10).unwrap();
        for alpha in [0.01, 0.05, 0.2, 0.5] {
            let c = law.upper_quantile(alpha).unwrap();
            assert!(law.survival(c) <= alpha);
            assert!(law.survival(c.next_down()) > alpha);
        }
    }

    #[test]
    fn median_round_trip() {
        let tail = small_tail(StatisticKind::Covariance, 25, 50_000, 8);
        let law = EmpiricalExtremeLaw::new(&tail, 15).unwrap();
        let y = law.upper_quantile(0.5).unwrap();
        let f = law.cdf(y);
        // one step of F̂ changes λ̂ by C(p,2)/m
        let step = pair_count(15) / tail.m() as f64;
        assert!(f >= 0.5 && f - 0.5 <= step);
    }

    #[test]
    fn empirical_convolution_is_coherent() {
        let tail = small_tail(StatisticKind::Spearman, 15, 20_000, 2);
        let law = EmpiricalExtremeLaw::new(&tail, 8).unwrap();
        let conv = EmpiricalConvolution::simulate(&law, 10_000, 4).unwrap();
        let c = conv.upper_quantile(0.05).unwrap();
        assert!(conv.survival(c) <= 0.05);
        assert!(conv.survival(c.next_down()) > 0.05);
    }

    #[test]
    fn cache_round_trip_and_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let cache = TailCache::new(dir.path());
        let spec = TailSpec::new(10, 300, StatisticKind::Covariance, 1);
        let (a, status) = cache.load_or_simulate(&spec, &NormalSampler).unwrap();
        assert_eq!(status, CacheStatus::Miss);
        let (b, status) = cache.load_or_simulate(&spec, &NormalSampler).unwrap();
        assert_eq!(status, CacheStatus::Hit);
        assert_eq!(a, b);

        let path = cache.path_for(&spec, &NormalSampler);
        fs::write(&path, b"garbage").unwrap();
        let (c, status) = cache.load_or_simulate(&spec, &NormalSampler).unwrap();
        assert!(matches!(status, CacheStatus::Recomputed(_)));
        assert_eq!(a, c);
    }

    #[test]
    fn version_mismatch_is_rejected() {
        let tail = small_tail(StatisticKind::Spearman, 6, 10, 1);
        let mut bytes = Vec::new();
        tail.write_to(&mut bytes).unwrap();
        assert_eq!(EmpiricalTail::read_from(bytes.as_slice()).unwrap(), tail);
        bytes[8] = 99;
        assert!(EmpiricalTail::read_from(bytes.as_slice()).is_err());
    }
}
