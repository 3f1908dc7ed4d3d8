//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 for invalid input, 2 for runtime failures.
//! Diagnostics go to standard error; results go to files or standard output.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::complexity::{precompute_file, ComplexityCache, SCHEMA_VERSION};
use crate::config::RunConfig;
use crate::discovery::{discover, write_scores_csv};
use crate::error::{Error, Result};
use crate::evalharness::{run_benchmark, write_trials_csv, BenchmarkConfig, BenchmarkSummary, TrialFailure};
use crate::ingest::{read_series_csv, shocks_from_series, SeriesData};
use crate::likelihood::{nll_dim, DimensionView};
use crate::model::{Adjacency, EventData, ExpMhpParams};
use crate::seed::{tags, SeedSpec};
use crate::simulate::{draw_process, simulate};

const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (schema 1)");

#[derive(Debug, Parser)]
#[command(name = "hawkes-mdl", version = VERSION, about = "Granger-causal discovery for exponential Hawkes processes by MDL")]
struct Cli {
    /// Worker threads; falls back to HAWKES_MDL_THREADS, then to all cores.
    #[arg(long, global = true, env = "HAWKES_MDL_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Overrides {
    /// Run configuration (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    horizon: Option<f64>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl Overrides {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if self.dim.is_some() {
            cfg.dim = self.dim;
        }
        if self.horizon.is_some() {
            cfg.horizon = self.horizon;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        Ok(cfg)
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw a process from the generative prior (or read one) and simulate it.
    Simulate {
        #[command(flatten)]
        run: Overrides,
        /// Simulate these parameters instead of drawing from the prior.
        #[arg(long)]
        params: Option<PathBuf>,
        /// Events output (JSON).
        #[arg(long)]
        out: PathBuf,
        /// Sidecar with provenance and the ground truth; defaults to <out>.meta.json.
        #[arg(long)]
        meta: Option<PathBuf>,
    },
    /// Negative log-likelihood of events under parameters.
    Nll {
        #[arg(long)]
        events: PathBuf,
        #[arg(long)]
        params: PathBuf,
    },
    /// Estimate and cache model complexities for every pattern of the model space.
    Precompute {
        #[command(flatten)]
        run: Overrides,
        /// Cache file (JSON lines).
        #[arg(long)]
        out: PathBuf,
        /// Keep existing entries and compute only missing keys.
        #[arg(long)]
        resume: bool,
    },
    /// Infer the causal graph of an event file.
    Discover {
        #[arg(long)]
        events: PathBuf,
        #[arg(long)]
        cache: PathBuf,
        #[command(flatten)]
        run: Overrides,
        /// Adjacency output (JSON).
        #[arg(long)]
        out: PathBuf,
        /// Optional per-pattern score table (CSV).
        #[arg(long)]
        scores: Option<PathBuf>,
    },
    /// Synthetic benchmark: per-trial CSV plus a summary JSON.
    Benchmark {
        #[command(flatten)]
        run: Overrides,
        #[arg(long)]
        cache: PathBuf,
        /// Per-trial results (CSV).
        #[arg(long)]
        out: PathBuf,
        /// Summary output; defaults to <out>.summary.json.
        #[arg(long)]
        summary: Option<PathBuf>,
        /// Compute cache entries the benchmark needs but the cache lacks.
        #[arg(long)]
        fill_cache: bool,
        /// Use p = 7, N = 1000, 100 trials. Long-running.
        #[arg(long)]
        full_scale: bool,
    },
    /// Convert sampled series to events by rolling-window shock identification.
    Ingest {
        #[arg(long)]
        csv: PathBuf,
        /// Window length in samples.
        #[arg(long)]
        window: usize,
        /// Top fraction registered as shocks.
        #[arg(long, default_value_t = 0.2)]
        quantile: f64,
        /// Time units per sample.
        #[arg(long, default_value_t = 1.0)]
        time_scale: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Input {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| match e.classify() {
        serde_json::error::Category::Data => {
            // validation errors raised inside try_from surface as data errors
            Error::InvalidEventData(format!("{}: {e}", path.display()))
        }
        _ => Error::InvalidConfig(format!("{}: {e}", path.display())),
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

#[derive(Serialize)]
struct Provenance {
    schema: u32,
    config_digest: String,
    master_seed: u64,
}

impl Provenance {
    fn of(cfg: &RunConfig) -> Self {
        Provenance {
            schema: SCHEMA_VERSION,
            config_digest: cfg.digest(),
            master_seed: cfg.seed,
        }
    }
}

#[derive(Serialize)]
struct SimulateMeta {
    #[serde(flatten)]
    provenance: Provenance,
    truth: Adjacency,
    params: ExpMhpParams,
}

#[derive(Serialize)]
struct DiscoverOutput {
    #[serde(flatten)]
    adjacency: Adjacency,
    #[serde(flatten)]
    provenance: Provenance,
}

#[derive(Serialize)]
struct BenchmarkOutput<'a> {
    #[serde(flatten)]
    provenance: Provenance,
    config: &'a BenchmarkConfig,
    #[serde(flatten)]
    summary: &'a BenchmarkSummary,
    failed: &'a [TrialFailure],
}

#[derive(Serialize)]
struct NllOutput {
    nll: f64,
    per_dimension: Vec<f64>,
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Simulate { run, params, out, meta } => {
            let cfg = run.resolve()?;
            let horizon = cfg.require_horizon()?;
            let seed = SeedSpec::new(cfg.seed, [tags::CLI_SIMULATE]);
            let params = match params {
                Some(p) => read_json::<ExpMhpParams>(&p)?,
                None => draw_process(&cfg.generative_prior, cfg.require_dim()?, &seed.child(0))?.1,
            };
            let x = simulate(&params, horizon, &seed.child(1))?;
            write_json(&out, &x)?;
            let meta_path = meta.unwrap_or_else(|| with_suffix(&out, ".meta.json"));
            write_json(
                &meta_path,
                &SimulateMeta {
                    provenance: Provenance::of(&cfg),
                    truth: params.support(),
                    params,
                },
            )?;
            eprintln!("simulated {} events over [0, {horizon}] -> {}", x.total_events(), out.display());
        }
        Command::Nll { events, params } => {
            let x: EventData = read_json(&events)?;
            let theta: ExpMhpParams = read_json(&params)?;
            if theta.dim() != x.dim() {
                return Err(Error::DimensionMismatch {
                    expected: x.dim(),
                    found: theta.dim(),
                });
            }
            let per_dimension: Vec<f64> = (0..x.dim())
                .map(|i| Ok(nll_dim(&theta.row(i), &DimensionView::unrestricted(&x, i)?, &theta.beta()[i])))
                .collect::<Result<_>>()?;
            let out = NllOutput {
                nll: per_dimension.iter().sum(),
                per_dimension,
            };
            println!("{}", serde_json::to_string(&out)?);
        }
        Command::Precompute { run, out, resume } => {
            let cfg = run.resolve()?;
            let job = cfg.job_config()?;
            let spaces = cfg.model_space.spaces(job.dim)?;
            let cache = precompute_file(&job, &spaces, &out, resume)?;
            eprintln!("cache {} holds {} entries", out.display(), cache.len());
        }
        Command::Discover {
            events,
            cache,
            run,
            out,
            scores,
        } => {
            let x: EventData = read_json(&events)?;
            let mut cfg = run.resolve()?;
            if cfg.dim.is_some_and(|d| d != x.dim()) {
                return Err(Error::DimensionMismatch {
                    expected: cfg.dim.unwrap_or_default(),
                    found: x.dim(),
                });
            }
            cfg.dim = Some(x.dim());
            cfg.horizon = Some(x.horizon());
            let job = cfg.job_config()?;
            let cache = ComplexityCache::load(&cache)?;
            let found = discover(&x, cfg.model_space, &cfg.model_prior, &cache, &job)?;
            write_json(
                &out,
                &DiscoverOutput {
                    adjacency: found.adjacency.clone(),
                    provenance: Provenance::of(&cfg),
                },
            )?;
            if let Some(path) = scores {
                write_scores_csv(create(&path)?, &found.scores)?;
            }
            for (i, row) in found.adjacency.rows().iter().enumerate() {
                eprintln!("dimension {i}: {row}");
            }
        }
        Command::Benchmark {
            run,
            cache,
            out,
            summary,
            fill_cache,
            full_scale,
        } => {
            let mut cfg = run.resolve()?;
            if full_scale {
                let preset = BenchmarkConfig::full_scale(cfg.horizon.unwrap_or(400.0), cfg.seed);
                cfg.dim = Some(preset.dim);
                cfg.horizon = Some(preset.horizon);
                cfg.n_samples = preset.n_samples;
                cfg.n_trials = preset.n_trials;
                cfg.model_space = preset.space;
                eprintln!("full-scale benchmark: expect hours of compute");
            }
            let bench = cfg.benchmark_config()?;
            let store = if fill_cache {
                precompute_file(&bench.job_config(), &bench.space.spaces(bench.dim)?, &cache, true)?
            } else {
                ComplexityCache::load(&cache)?
            };
            let report = run_benchmark(&bench, &store)?;
            write_trials_csv(create(&out)?, &report.rows)?;
            let summary_path = summary.unwrap_or_else(|| with_suffix(&out, ".summary.json"));
            write_json(
                &summary_path,
                &BenchmarkOutput {
                    provenance: Provenance::of(&cfg),
                    config: &bench,
                    summary: &report.summary,
                    failed: &report.failed,
                },
            )?;
            let s = &report.summary;
            eprintln!(
                "mean F1 {:.4} +- {:.4}, random {:.4}, failures {}/{}",
                s.mean_f1, s.stderr_f1, s.mean_random_f1, s.failures, s.n_trials
            );
        }
        Command::Ingest {
            csv,
            window,
            quantile,
            time_scale,
            out,
        } => {
            let file = File::open(&csv).map_err(|source| Error::Input {
                path: csv.display().to_string(),
                source,
            })?;
            let (names, values) = read_series_csv(file)?;
            let series = SeriesData::with_time_scale(names, values, window, quantile, time_scale)?;
            let x = shocks_from_series(&series)?;
            write_json(&out, &x)?;
            eprintln!("{} events in {} dimensions -> {}", x.total_events(), x.dim(), out.display());
        }
    }
    Ok(())
}

fn configure_threads(threads: Option<usize>) -> Result<()> {
    if let Some(k) = threads {
        if k == 0 {
            return Err(Error::InvalidConfig("--threads must be at least 1".into()));
        }
        // a pool may already exist when called from a test harness
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
    }
    Ok(())
}

/// Parses `argv` and runs the subcommand. Returns the process exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = configure_threads(cli.threads).and_then(|_| run(cli.command));
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                1
            } else {
                2
            }
        }
    }
}
