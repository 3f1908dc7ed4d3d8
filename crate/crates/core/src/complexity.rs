//! Monte-Carlo estimation of per-dimension model complexity and the on-disk
//! cache that amortizes it.
//!
//! For sample `k` a parameter `z_k` is drawn from the generative prior, a
//! realization `s_k` is simulated from it, and the MDL estimator is fitted on
//! `s_k`. In log space
//!
//! ```text
//! log Q_k = -nll_i(theta_hat; s_k) + log v_i(theta_hat) + nll_i(z_k; s_k)
//! COMP    = log mean_k exp(log Q_k)
//! ```
//!
//! Only dimension `i` enters `Q`: the other dimensions of `p(s | z)` cancel
//! against the per-dimension decomposition of the maximized likelihood.
//!
//! The stream of sample `k` is seeded from `(master, k)` alone, so every
//! `(i, gamma_i)` job sees the same `(z_k, s_k)` pairs. One simulation then
//! serves every pattern, and estimates for nested patterns are coupled.

use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::estimator::{fit_dimension, log_luckiness, FitConfig};
use crate::likelihood::DimensionStats;
use crate::model::{ComplexityEstimate, GenerativePrior, LuckinessSpec, RowPattern};
use crate::seed::{tags, SeedSpec};
use crate::simulate::{draw_process, simulate};

/// Version of the cache record layout and of the sampling procedure.
pub const SCHEMA_VERSION: u32 = 1;

/// Share of non-converged inner fits tolerated per job.
pub const MAX_FAILURE_PERCENT: usize = 1;

/// Short hex digest of a serializable value.
pub fn digest<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("serializable");
    hex::encode(&Sha256::digest(&bytes)[..8])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityJobConfig {
    pub dim: usize,
    pub horizon: f64,
    pub prior: GenerativePrior,
    pub luckiness: LuckinessSpec,
    pub model_prior_id: String,
    pub n_samples: usize,
    pub master_seed: u64,
    pub fit: FitConfig,
}

impl ComplexityJobConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidConfig("dim must be at least 1".into()));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::InvalidConfig(format!("horizon must be positive, got {}", self.horizon)));
        }
        if self.n_samples == 0 {
            return Err(Error::InvalidConfig("n_samples must be at least 1".into()));
        }
        self.prior.validate(self.dim)?;
        if !(self.prior.mu_range[0] > 0.0) {
            return Err(Error::InvalidConfig(
                "mu_range lower bound must be > 0 so every sample has positive likelihood".into(),
            ));
        }
        self.fit.validate()
    }

    pub fn beta(&self) -> Result<Vec<Vec<f64>>> {
        self.prior.beta.resolve(self.dim)
    }

    pub fn key(&self, i: usize, pattern: &RowPattern) -> CacheKey {
        CacheKey {
            schema: SCHEMA_VERSION,
            dim: self.dim,
            horizon: self.horizon,
            beta_digest: digest(&self.beta().unwrap_or_default()),
            luckiness: self.luckiness,
            prior_digest: digest(&self.prior),
            n_samples: self.n_samples,
            master_seed: self.master_seed,
            dimension: i,
            pattern: pattern.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CacheKey {
    pub schema: u32,
    pub dim: usize,
    pub horizon: f64,
    pub beta_digest: String,
    pub luckiness: LuckinessSpec,
    pub prior_digest: String,
    pub n_samples: usize,
    pub master_seed: u64,
    pub dimension: usize,
    pub pattern: String,
}

impl CacheKey {
    /// Exact-match lookup string.
    pub fn canonical(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }
}

/// One JSON line of the cache file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheRecord {
    pub key: CacheKey,
    pub comp: f64,
    pub stderr: f64,
    pub n: usize,
}

/// Per-dimension complexity values resolved for a set of model spaces.
pub type ComplexityTable = Vec<BTreeMap<RowPattern, ComplexityEstimate>>;

#[derive(Debug, Clone, Default)]
pub struct ComplexityCache {
    entries: BTreeMap<String, CacheRecord>,
}

impl ComplexityCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: &CacheKey) -> Option<ComplexityEstimate> {
        self.entries.get(&key.canonical()).map(|r| ComplexityEstimate {
            comp: r.comp,
            stderr: r.stderr,
            n_samples: r.n,
            log_q: None,
        })
    }

    pub fn contains(&self, key: &CacheKey) -> bool {
        self.entries.contains_key(&key.canonical())
    }

    /// Inserts unless the key is already present; returns whether it was new.
    pub fn insert(&mut self, key: CacheKey, est: &ComplexityEstimate) -> bool {
        let canonical = key.canonical();
        if self.entries.contains_key(&canonical) {
            return false;
        }
        self.entries.insert(
            canonical,
            CacheRecord {
                key,
                comp: est.comp,
                stderr: est.stderr,
                n: est.n_samples,
            },
        );
        true
    }

    pub fn records(&self) -> impl Iterator<Item = &CacheRecord> {
        self.entries.values()
    }

    /// Reads a JSON-lines cache; a missing file is an empty cache.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cache = ComplexityCache::new();
        let file = match std::fs::File::open(path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(cache),
            Err(e) => return Err(e.into()),
        };
        for line in BufReader::new(file).lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: CacheRecord = serde_json::from_str(&line)?;
            cache.entries.entry(rec.key.canonical()).or_insert(rec);
        }
        Ok(cache)
    }

    /// Appends records to a JSON-lines file.
    pub fn append_records<'a>(path: &Path, records: impl IntoIterator<Item = &'a CacheRecord>) -> Result<()> {
        let mut file = OpenOptions::new().create(true).append(true).open(path)?;
        let mut buf = String::new();
        for r in records {
            buf.push_str(&serde_json::to_string(r)?);
            buf.push('\n');
        }
        file.write_all(buf.as_bytes())?;
        file.flush()?;
        Ok(())
    }

    /// Looks up every `(i, pattern)` of the given spaces; on any miss, lists all missing keys.
    pub fn resolve(&self, cfg: &ComplexityJobConfig, spaces: &[Vec<RowPattern>]) -> Result<ComplexityTable> {
        let mut missing = Vec::new();
        let mut table = vec![BTreeMap::new(); spaces.len()];
        for (i, space) in spaces.iter().enumerate() {
            for g in space {
                match self.get(&cfg.key(i, g)) {
                    Some(est) => {
                        table[i].insert(g.clone(), est);
                    }
                    None => missing.push(format!("(dimension {i}, pattern {g})")),
                }
            }
        }
        if missing.is_empty() {
            Ok(table)
        } else {
            Err(Error::CacheMiss { missing })
        }
    }
}

/// `log mean exp(log_q)` and its delta-method standard error `sd(Q) / (mean(Q) sqrt(N))`.
pub fn log_mean_exp(log_q: &[f64]) -> (f64, f64) {
    let n = log_q.len();
    assert!(n > 0, "log_mean_exp of an empty sample");
    let m = log_q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return (m, 0.0);
    }
    let w: Vec<f64> = log_q.iter().map(|&l| (l - m).exp()).collect();
    let mean = w.iter().sum::<f64>() / n as f64;
    let stderr = if n > 1 {
        let var = w.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
        var.sqrt() / (mean * (n as f64).sqrt())
    } else {
        0.0
    };
    (m + mean.ln(), stderr)
}

/// Per-sample outcome for each requested `(dimension, pattern)`.
#[derive(Debug, Clone)]
struct SampleOutcome {
    log_q: Vec<Vec<f64>>,
    failed: Vec<Vec<bool>>,
}

fn run_sample(cfg: &ComplexityJobConfig, beta: &[Vec<f64>], k: usize, jobs: &[(usize, Vec<RowPattern>)]) -> Result<SampleOutcome> {
    let seed = SeedSpec::new(cfg.master_seed, [tags::COMPLEXITY_SAMPLE, k as u64]);
    let (_, z) = draw_process(&cfg.prior, cfg.dim, &seed.child(0))?;
    let s = simulate(&z, cfg.horizon, &seed.child(1))?;

    let mut log_q = Vec::with_capacity(jobs.len());
    let mut failed = Vec::with_capacity(jobs.len());
    for (i, patterns) in jobs {
        let stats = DimensionStats::new(&s, *i, &beta[*i])?;
        let truth = z.row(*i);
        let truth_nll = stats.nll(&truth);
        let mut lq = Vec::with_capacity(patterns.len());
        let mut fl = Vec::with_capacity(patterns.len());
        for g in patterns {
            let fit = fit_dimension(&stats, g, cfg.luckiness, &cfg.fit)?;
            // the truth projected onto the pattern's cone is feasible, so the
            // fitted objective can never be worse than it
            let proj = truth.restricted_to(g);
            let bound = stats.nll(&proj) - log_luckiness(cfg.luckiness, &proj, g);
            let consistent = fit.objective <= bound + 1e-9 * (1.0 + bound.abs());
            lq.push(-fit.objective.min(bound) + truth_nll);
            fl.push(!(fit.converged && consistent));
        }
        log_q.push(lq);
        failed.push(fl);
    }
    Ok(SampleOutcome { log_q, failed })
}

/// Runs all samples for a batch of jobs and summarizes each job.
fn estimate_batch(cfg: &ComplexityJobConfig, jobs: &[(usize, Vec<RowPattern>)]) -> Result<Vec<Vec<ComplexityEstimate>>> {
    cfg.validate()?;
    for (i, patterns) in jobs {
        if *i >= cfg.dim {
            return Err(Error::IndexOutOfRange { index: *i, dim: cfg.dim });
        }
        if let Some(g) = patterns.iter().find(|g| g.len() != cfg.dim) {
            return Err(Error::DimensionMismatch {
                expected: cfg.dim,
                found: g.len(),
            });
        }
    }
    let beta = cfg.beta()?;
    let samples: Vec<SampleOutcome> = (0..cfg.n_samples)
        .into_par_iter()
        .map(|k| run_sample(cfg, &beta, k, jobs))
        .collect::<Result<_>>()?;

    let n = cfg.n_samples;
    let mut out = Vec::with_capacity(jobs.len());
    for (a, (_, patterns)) in jobs.iter().enumerate() {
        let mut row = Vec::with_capacity(patterns.len());
        for b in 0..patterns.len() {
            let log_q: Vec<f64> = samples.iter().map(|s| s.log_q[a][b]).collect();
            let failed = samples.iter().filter(|s| s.failed[a][b]).count();
            if failed * 100 > MAX_FAILURE_PERCENT * n {
                return Err(Error::TooManyFailures { failed, total: n });
            }
            let (comp, stderr) = log_mean_exp(&log_q);
            row.push(ComplexityEstimate {
                comp,
                stderr,
                n_samples: n,
                log_q: Some(log_q),
            });
        }
        out.push(row);
    }
    Ok(out)
}

/// Estimates the model complexity of row pattern `gamma` for dimension `i`.
pub fn estimate_comp(gamma: &RowPattern, i: usize, cfg: &ComplexityJobConfig) -> Result<ComplexityEstimate> {
    let mut out = estimate_batch(cfg, &[(i, vec![gamma.clone()])])?;
    Ok(out.remove(0).remove(0))
}

/// Estimates every pattern of every dimension, sharing simulations across patterns.
pub fn estimate_all(cfg: &ComplexityJobConfig, spaces: &[Vec<RowPattern>]) -> Result<Vec<Vec<ComplexityEstimate>>> {
    let jobs: Vec<(usize, Vec<RowPattern>)> = spaces.iter().cloned().enumerate().collect();
    estimate_batch(cfg, &jobs)
}

/// Builds a cache holding an entry for every `(i, gamma_i)` of `spaces`.
pub fn precompute_cache(cfg: &ComplexityJobConfig, spaces: &[Vec<RowPattern>]) -> Result<ComplexityCache> {
    let mut cache = ComplexityCache::new();
    extend_cache(cfg, spaces, &mut cache)?;
    Ok(cache)
}

/// Computes the entries of `spaces` that `cache` lacks and inserts them.
/// Returns the new records in `(dimension, pattern)` order.
pub fn extend_cache(cfg: &ComplexityJobConfig, spaces: &[Vec<RowPattern>], cache: &mut ComplexityCache) -> Result<Vec<CacheRecord>> {
    if spaces.len() != cfg.dim {
        return Err(Error::DimensionMismatch {
            expected: cfg.dim,
            found: spaces.len(),
        });
    }
    let jobs: Vec<(usize, Vec<RowPattern>)> = spaces
        .iter()
        .enumerate()
        .map(|(i, s)| (i, s.iter().filter(|g| !cache.contains(&cfg.key(i, g))).cloned().collect::<Vec<_>>()))
        .filter(|(_, s)| !s.is_empty())
        .collect();
    if jobs.is_empty() {
        return Ok(Vec::new());
    }
    let estimates = estimate_batch(cfg, &jobs)?;
    let mut added = Vec::new();
    for ((i, patterns), ests) in jobs.iter().zip(estimates) {
        for (g, est) in patterns.iter().zip(ests) {
            let key = cfg.key(*i, g);
            if cache.insert(key.clone(), &est) {
                added.push(CacheRecord {
                    key,
                    comp: est.comp,
                    stderr: est.stderr,
                    n: est.n_samples,
                });
            }
        }
    }
    Ok(added)
}

/// Precomputes into a JSON-lines file. With `resume`, existing entries are
/// kept and only missing keys are computed; otherwise the file is replaced.
pub fn precompute_file(cfg: &ComplexityJobConfig, spaces: &[Vec<RowPattern>], path: &Path, resume: bool) -> Result<ComplexityCache> {
    let mut cache = if resume {
        ComplexityCache::load(path)?
    } else {
        if path.exists() {
            std::fs::remove_file(path)?;
        }
        ComplexityCache::new()
    };
    let added = extend_cache(cfg, spaces, &mut cache)?;
    ComplexityCache::append_records(path, &added)?;
    Ok(cache)
}
