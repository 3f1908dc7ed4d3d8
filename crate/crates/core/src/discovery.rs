//! Per-dimension MDL model selection and assembly of the inferred graph.
//!
//! The objective of row pattern `gamma_i` for dimension `i` is
//!
//! ```text
//! L_i(gamma_i; x) = -log pi_i(gamma_i) + nll_i(theta_hat; x) - log v_i(theta_hat) + COMP_i(gamma_i)
//! ```
//!
//! The joint objective separates over dimensions, so each row is chosen by an
//! independent exhaustive search over its model space.

use std::cmp::Ordering;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::complexity::{ComplexityCache, ComplexityJobConfig, ComplexityTable};
use crate::error::{Error, Result};
use crate::estimator::{fit_dimension, FitConfig};
use crate::likelihood::DimensionStats;
use crate::model::{Adjacency, ComplexityEstimate, EventData, LuckinessSpec, MdlScore, ModelPrior, RowParams, RowPattern};

/// Largest `p` for which the full space `{0,1}^p` is enumerated.
pub const MAX_FULL_DIM: usize = 16;

/// Candidate row patterns per dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpace {
    /// All `2^p` patterns.
    Full,
    /// At most `max_parents` off-diagonal ones (unbounded when absent); the
    /// diagonal is forced on with `force_self`, free otherwise.
    SparseBounded {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_parents: Option<usize>,
        force_self: bool,
    },
}

impl Default for ModelSpace {
    fn default() -> Self {
        ModelSpace::SparseBounded {
            max_parents: None,
            force_self: true,
        }
    }
}

fn choose_into(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if cur.len() == k {
        out.push(cur.clone());
        return;
    }
    for c in start..n {
        if n - c < k - cur.len() {
            break;
        }
        cur.push(c);
        choose_into(n, k, c + 1, cur, out);
        cur.pop();
    }
}

impl ModelSpace {
    /// Patterns admissible for dimension `i`, sorted lexicographically.
    pub fn patterns(&self, p: usize, i: usize) -> Result<Vec<RowPattern>> {
        if i >= p {
            return Err(Error::IndexOutOfRange { index: i, dim: p });
        }
        let mut out = match *self {
            ModelSpace::Full => {
                if p > MAX_FULL_DIM {
                    return Err(Error::InvalidConfig(format!(
                        "full model space has 2^{p} patterns per dimension; use sparse_bounded for p > {MAX_FULL_DIM}"
                    )));
                }
                (0..1u32 << p)
                    .map(|b| RowPattern::new((0..p).map(|j| b >> (p - 1 - j) & 1 == 1).collect()))
                    .collect::<Vec<_>>()
            }
            ModelSpace::SparseBounded { max_parents, force_self } => {
                let others: Vec<usize> = (0..p).filter(|&j| j != i).collect();
                let diag: &[bool] = if force_self { &[true] } else { &[false, true] };
                let mut out = Vec::new();
                for k in 0..=max_parents.unwrap_or(others.len()).min(others.len()) {
                    let mut subsets = Vec::new();
                    choose_into(others.len(), k, 0, &mut Vec::new(), &mut subsets);
                    for s in subsets {
                        for &d in diag {
                            let mut bits = vec![false; p];
                            bits[i] = d;
                            for c in s.iter() {
                                bits[others[*c]] = true;
                            }
                            out.push(RowPattern::new(bits));
                        }
                    }
                }
                out
            }
        };
        out.sort();
        Ok(out)
    }

    /// One pattern list per dimension.
    pub fn spaces(&self, p: usize) -> Result<Vec<Vec<RowPattern>>> {
        (0..p).map(|i| self.patterns(p, i)).collect()
    }
}

/// One scored candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreEntry {
    pub pattern: RowPattern,
    /// `total` is `+inf` when the fit did not converge; the parts are kept.
    pub score: MdlScore,
    pub converged: bool,
    pub theta_hat: RowParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Discovery {
    pub adjacency: Adjacency,
    /// Per dimension, one entry per pattern of its space, in space order.
    pub scores: Vec<Vec<ScoreEntry>>,
}

/// Scores one pattern from precomputed statistics.
pub fn score_pattern(
    stats: &DimensionStats,
    gamma: &RowPattern,
    space: &[RowPattern],
    prior: &ModelPrior,
    v: LuckinessSpec,
    comp: &ComplexityEstimate,
    fit: &FitConfig,
) -> Result<ScoreEntry> {
    let f = fit_dimension(stats, gamma, v, fit)?;
    let mut score = MdlScore::new(prior.neg_log_prob(gamma, space), f.neg_log_lik, f.neg_log_luck, comp.comp);
    if !f.converged {
        score.total = f64::INFINITY;
    }
    Ok(ScoreEntry {
        pattern: gamma.clone(),
        score,
        converged: f.converged,
        theta_hat: f.theta_hat,
    })
}

/// `L_i(gamma_i; x)` for a single pattern.
#[allow(clippy::too_many_arguments)]
pub fn mdl_objective_dim(
    x: &EventData,
    i: usize,
    gamma: &RowPattern,
    space: &[RowPattern],
    prior: &ModelPrior,
    v: LuckinessSpec,
    beta_row: &[f64],
    comp: &ComplexityEstimate,
    fit: &FitConfig,
) -> Result<MdlScore> {
    let stats = DimensionStats::new(x, i, beta_row)?;
    Ok(score_pattern(&stats, gamma, space, prior, v, comp, fit)?.score)
}

/// Lower total first, then fewer ones, then lexicographically smaller.
fn preference(a: &ScoreEntry, b: &ScoreEntry) -> Ordering {
    a.score
        .total
        .total_cmp(&b.score.total)
        .then(a.pattern.count_ones().cmp(&b.pattern.count_ones()))
        .then(a.pattern.cmp(&b.pattern))
}

/// Runs the per-dimension searches against a resolved complexity table.
pub fn discover_with_table(
    x: &EventData,
    spaces: &[Vec<RowPattern>],
    prior: &ModelPrior,
    v: LuckinessSpec,
    beta: &[Vec<f64>],
    table: &ComplexityTable,
    fit: &FitConfig,
) -> Result<Discovery> {
    let p = x.dim();
    for n in [spaces.len(), beta.len(), table.len()] {
        if n != p {
            return Err(Error::DimensionMismatch { expected: p, found: n });
        }
    }
    prior.validate()?;
    if let Some(i) = spaces.iter().position(|s| s.is_empty()) {
        return Err(Error::EmptyModelSpace { dim: i });
    }
    let mut missing = Vec::new();
    for (i, space) in spaces.iter().enumerate() {
        for g in space {
            if g.len() != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    found: g.len(),
                });
            }
            if !table[i].contains_key(g) {
                missing.push(format!("(dimension {i}, pattern {g})"));
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::CacheMiss { missing });
    }

    let stats: Vec<DimensionStats> = (0..p)
        .into_par_iter()
        .map(|i| DimensionStats::new(x, i, &beta[i]))
        .collect::<Result<_>>()?;
    let jobs: Vec<(usize, &RowPattern)> = spaces
        .iter()
        .enumerate()
        .flat_map(|(i, s)| s.iter().map(move |g| (i, g)))
        .collect();
    let entries: Vec<ScoreEntry> = jobs
        .par_iter()
        .map(|&(i, g)| score_pattern(&stats[i], g, &spaces[i], prior, v, &table[i][g], fit))
        .collect::<Result<_>>()?;

    let mut scores: Vec<Vec<ScoreEntry>> = spaces.iter().map(|s| Vec::with_capacity(s.len())).collect();
    for ((i, _), e) in jobs.iter().zip(entries) {
        scores[*i].push(e);
    }
    let rows = scores
        .iter()
        .map(|s| s.iter().min_by(|a, b| preference(a, b)).expect("nonempty").pattern.clone())
        .collect();
    Ok(Discovery {
        adjacency: Adjacency::from_rows(rows)?,
        scores,
    })
}

/// Runs discovery, looking every complexity value up in `cache`.
pub fn discover(
    x: &EventData,
    space: ModelSpace,
    prior: &ModelPrior,
    cache: &ComplexityCache,
    cfg: &ComplexityJobConfig,
) -> Result<Discovery> {
    if x.dim() != cfg.dim {
        return Err(Error::DimensionMismatch {
            expected: cfg.dim,
            found: x.dim(),
        });
    }
    if x.horizon() != cfg.horizon {
        return Err(Error::InvalidConfig(format!(
            "event horizon {} differs from the complexity horizon {}",
            x.horizon(),
            cfg.horizon
        )));
    }
    let spaces = space.spaces(cfg.dim)?;
    let table = cache.resolve(cfg, &spaces)?;
    discover_with_table(x, &spaces, prior, cfg.luckiness, &cfg.beta()?, &table, &cfg.fit)
}

/// Writes score tables as CSV.
pub fn write_scores_csv<W: Write>(w: W, scores: &[Vec<ScoreEntry>]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["dimension", "pattern", "negLogPrior", "negLogLik", "negLogLuck", "comp", "total"])?;
    for (i, table) in scores.iter().enumerate() {
        for e in table {
            let s = &e.score;
            out.write_record([
                i.to_string(),
                e.pattern.to_string(),
                s.neg_log_prior.to_string(),
                s.neg_log_lik.to_string(),
                s.neg_log_luck.to_string(),
                s.comp.to_string(),
                s.total.to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}
