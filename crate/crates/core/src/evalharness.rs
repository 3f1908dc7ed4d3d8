//! Synthetic benchmark: draw a ground-truth process, simulate it, run
//! discovery, and grade the recovered graph by F1 against a random baseline.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::complexity::{ComplexityCache, ComplexityJobConfig, ComplexityTable};
use crate::discovery::{discover_with_table, ModelSpace};
use crate::error::{Error, Result};
use crate::estimator::FitConfig;
use crate::model::{Adjacency, GenerativePrior, LuckinessSpec, ModelPrior, RowPattern, Scenario};
use crate::seed::{tags, SeedSpec};
use crate::simulate::{draw_process, simulate};

/// `2 TP / (2 TP + FP + FN)` over all `p^2` entries, 1 counting as positive.
/// Two all-zero matrices score 1.
pub fn f1(pred: &Adjacency, truth: &Adjacency) -> Result<f64> {
    if pred.dim() != truth.dim() {
        return Err(Error::DimensionMismatch {
            expected: truth.dim(),
            found: pred.dim(),
        });
    }
    let p = truth.dim();
    let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
    for i in 0..p {
        for j in 0..p {
            match (pred.get(i, j), truth.get(i, j)) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fneg += 1,
                (false, false) => {}
            }
        }
    }
    let denom = 2 * tp + fp + fneg;
    Ok(if denom == 0 { 1.0 } else { 2.0 * tp as f64 / denom as f64 })
}

/// A uniformly random matrix with as many ones as `truth`.
pub fn random_adjacency_like(truth: &Adjacency, seed: &SeedSpec) -> Adjacency {
    let p = truth.dim();
    let mut bits = vec![false; p * p];
    let mut rng = seed.rng();
    for c in rand::seq::index::sample(&mut rng, p * p, truth.count_ones()) {
        bits[c] = true;
    }
    let rows = bits.chunks(p).map(|r| RowPattern::new(r.to_vec())).collect();
    Adjacency::from_rows(rows).expect("square")
}

/// F1 of [`random_adjacency_like`] against `truth`.
pub fn random_baseline_f1(truth: &Adjacency, seed: &SeedSpec) -> f64 {
    f1(&random_adjacency_like(truth, seed), truth).expect("same shape")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub dim: usize,
    pub horizon: f64,
    pub prior: GenerativePrior,
    pub n_trials: usize,
    pub n_samples: usize,
    pub master_seed: u64,
    pub space: ModelSpace,
    pub luckiness: LuckinessSpec,
    pub model_prior: ModelPrior,
    pub fit: FitConfig,
}

impl BenchmarkConfig {
    /// Desk-scale run: `p = 4`, `N = 200`, 20 trials, default scenario with self-loops.
    pub fn desk(horizon: f64, master_seed: u64) -> Self {
        BenchmarkConfig {
            dim: 4,
            horizon,
            prior: GenerativePrior::standard(Scenario::Default { edge_prob: 0.3 }),
            n_trials: 20,
            n_samples: 200,
            master_seed,
            space: ModelSpace::SparseBounded {
                max_parents: Some(3),
                force_self: true,
            },
            luckiness: LuckinessSpec::Uniform,
            model_prior: ModelPrior::Uniform,
            fit: FitConfig::default(),
        }
    }

    /// Full-size run: `p = 7`, `N = 1000`, 100 trials. Long-running.
    pub fn full_scale(horizon: f64, master_seed: u64) -> Self {
        BenchmarkConfig {
            dim: 7,
            n_trials: 100,
            n_samples: 1000,
            space: ModelSpace::SparseBounded {
                max_parents: Some(6),
                force_self: true,
            },
            ..BenchmarkConfig::desk(horizon, master_seed)
        }
    }

    pub fn job_config(&self) -> ComplexityJobConfig {
        ComplexityJobConfig {
            dim: self.dim,
            horizon: self.horizon,
            prior: self.prior.clone(),
            luckiness: self.luckiness,
            model_prior_id: self.model_prior.id(),
            n_samples: self.n_samples,
            master_seed: self.master_seed,
            fit: self.fit,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trials == 0 {
            return Err(Error::InvalidConfig("n_trials must be at least 1".into()));
        }
        self.model_prior.validate()?;
        self.job_config().validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub trial: usize,
    /// 64-bit summary of the trial's seed stream.
    pub seed: u64,
    pub f1: f64,
    pub random_f1: f64,
    pub discovery_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialFailure {
    pub trial: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSummary {
    pub n_trials: usize,
    pub failures: usize,
    pub mean_f1: f64,
    pub stderr_f1: f64,
    pub mean_random_f1: f64,
    pub stderr_random_f1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkReport {
    pub rows: Vec<TrialRow>,
    pub failed: Vec<TrialFailure>,
    pub summary: BenchmarkSummary,
}

/// Mean and standard error of the mean.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

fn run_trial(cfg: &BenchmarkConfig, spaces: &[Vec<RowPattern>], table: &ComplexityTable, beta: &[Vec<f64>], t: usize) -> Result<TrialRow> {
    let seed = SeedSpec::new(cfg.master_seed, [tags::BENCHMARK_TRIAL, t as u64]);
    let (truth, z) = draw_process(&cfg.prior, cfg.dim, &seed.child(0))?;
    let x = simulate(&z, cfg.horizon, &seed.child(1))?;
    let start = Instant::now();
    let found = discover_with_table(&x, spaces, &cfg.model_prior, cfg.luckiness, beta, table, &cfg.fit)?;
    let discovery_seconds = start.elapsed().as_secs_f64();
    Ok(TrialRow {
        trial: t,
        seed: seed.derived(),
        f1: f1(&found.adjacency, &truth)?,
        random_f1: random_baseline_f1(&truth, &seed.child(2)),
        discovery_seconds,
    })
}

/// Runs every trial; a failing trial is recorded and the rest continue.
/// Complexity values must all be present in `cache`.
pub fn run_benchmark(cfg: &BenchmarkConfig, cache: &ComplexityCache) -> Result<BenchmarkReport> {
    cfg.validate()?;
    let job = cfg.job_config();
    let spaces = cfg.space.spaces(cfg.dim)?;
    let table = cache.resolve(&job, &spaces)?;
    let beta = job.beta()?;

    let outcomes: Vec<Result<TrialRow>> = (0..cfg.n_trials)
        .into_par_iter()
        .map(|t| run_trial(cfg, &spaces, &table, &beta, t))
        .collect();
    let mut rows = Vec::new();
    let mut failed = Vec::new();
    for (t, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(r) => rows.push(r),
            Err(e) => failed.push(TrialFailure {
                trial: t,
                error: e.to_string(),
            }),
        }
    }
    let (mean_f1, stderr_f1) = mean_stderr(&rows.iter().map(|r| r.f1).collect::<Vec<_>>());
    let (mean_random_f1, stderr_random_f1) = mean_stderr(&rows.iter().map(|r| r.random_f1).collect::<Vec<_>>());
    Ok(BenchmarkReport {
        summary: BenchmarkSummary {
            n_trials: cfg.n_trials,
            failures: failed.len(),
            mean_f1,
            stderr_f1,
            mean_random_f1,
            stderr_random_f1,
        },
        rows,
        failed,
    })
}

/// Writes per-trial rows as CSV.
pub fn write_trials_csv<W: Write>(w: W, rows: &[TrialRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["trial", "seed", "f1", "random_f1", "discovery_seconds"])?;
    for r in rows {
        out.write_record([
            r.trial.to_string(),
            r.seed.to_string(),
            r.f1.to_string(),
            r.random_f1.to_string(),
            r.discovery_seconds.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
