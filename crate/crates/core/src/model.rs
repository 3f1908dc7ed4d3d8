//! Domain types shared by every stage of the pipeline.
//!
//! Everything here is immutable once constructed. Constructors validate, so a
//! value of [`EventData`] or [`ExpMhpParams`] always satisfies its invariants.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Wire form of [`EventData`]: `{"horizon": .., "dim": .., "events": [[..], ..]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawEventData {
    pub horizon: f64,
    pub dim: usize,
    pub events: Vec<Vec<f64>>,
}

/// One realization of a `p`-dimensional point process observed on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawEventData", into = "RawEventData")]
pub struct EventData {
    horizon: f64,
    events: Vec<Vec<f64>>,
}

impl EventData {
    pub fn new(horizon: f64, events: Vec<Vec<f64>>) -> Result<Self> {
        let dim = events.len();
        validate_event_data(RawEventData { horizon, dim, events })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn dim(&self) -> usize {
        self.events.len()
    }

    pub fn events(&self) -> &[Vec<f64>] {
        &self.events
    }

    /// Event times of dimension `i`.
    pub fn dimension(&self, i: usize) -> &[f64] {
        &self.events[i]
    }

    pub fn total_events(&self) -> usize {
        self.events.iter().map(Vec::len).sum()
    }
}

/// Checks every [`EventData`] invariant and reports the first violation.
pub fn validate_event_data(raw: RawEventData) -> Result<EventData> {
    let RawEventData { horizon, dim, events } = raw;
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::InvalidEventData(format!(
            "horizon must be finite and positive, got {horizon}"
        )));
    }
    if dim == 0 {
        return Err(Error::InvalidEventData("dim must be at least 1".into()));
    }
    if events.len() != dim {
        return Err(Error::InvalidEventData(format!(
            "dimension mismatch: dim = {dim} but {} event sequences given",
            events.len()
        )));
    }
    for (i, seq) in events.iter().enumerate() {
        for (k, &t) in seq.iter().enumerate() {
            if !(t.is_finite() && (0.0..=horizon).contains(&t)) {
                return Err(Error::InvalidEventData(format!(
                    "timestamp {t} (dimension {i}, index {k}) outside [0, {horizon}]"
                )));
            }
            if k > 0 && seq[k - 1] >= t {
                return Err(Error::InvalidEventData(format!(
                    "non-monotone sequence in dimension {i}: {} then {t} at index {k}",
                    seq[k - 1]
                )));
            }
        }
    }
    Ok(EventData { horizon, events })
}

impl TryFrom<RawEventData> for EventData {
    type Error = Error;

    fn try_from(raw: RawEventData) -> Result<Self> {
        validate_event_data(raw)
    }
}

impl From<EventData> for RawEventData {
    fn from(x: EventData) -> Self {
        RawEventData {
            horizon: x.horizon,
            dim: x.events.len(),
            events: x.events,
        }
    }
}

/// Parameters of one dimension: baseline `mu` and the influence row `alpha[j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowParams {
    pub mu: f64,
    pub alpha: Vec<f64>,
}

impl RowParams {
    pub fn zeros(p: usize) -> Self {
        RowParams { mu: 0.0, alpha: vec![0.0; p] }
    }

    /// Copy with every coordinate outside `pattern` set to zero.
    pub fn restricted_to(&self, pattern: &RowPattern) -> Self {
        RowParams {
            mu: self.mu,
            alpha: self
                .alpha
                .iter()
                .zip(pattern.bits())
                .map(|(&a, &on)| if on { a } else { 0.0 })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RawParams {
    mu: Vec<f64>,
    alpha: Vec<Vec<f64>>,
    beta: Vec<Vec<f64>>,
}

/// Exponential-kernel multivariate Hawkes parameters with a known decay matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct ExpMhpParams {
    mu: Vec<f64>,
    alpha: Vec<Vec<f64>>,
    beta: Vec<Vec<f64>>,
}

impl ExpMhpParams {
    pub fn new(mu: Vec<f64>, alpha: Vec<Vec<f64>>, beta: Vec<Vec<f64>>) -> Result<Self> {
        let p = mu.len();
        if p == 0 {
            return Err(Error::InvalidParams("mu must have at least one entry".into()));
        }
        let square = |m: &[Vec<f64>]| m.len() == p && m.iter().all(|r| r.len() == p);
        if !square(&alpha) || !square(&beta) {
            return Err(Error::InvalidParams(format!(
                "alpha and beta must both be {p}x{p}"
            )));
        }
        if mu.iter().any(|&m| !(m.is_finite() && m >= 0.0)) {
            return Err(Error::InvalidParams("mu must be finite and >= 0".into()));
        }
        if alpha.iter().flatten().any(|&a| !(a.is_finite() && a >= 0.0)) {
            return Err(Error::InvalidParams("alpha must be finite and >= 0".into()));
        }
        if beta.iter().flatten().any(|&b| !(b.is_finite() && b > 0.0)) {
            return Err(Error::InvalidParams("beta must be finite and > 0".into()));
        }
        Ok(ExpMhpParams { mu, alpha, beta })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn alpha(&self) -> &[Vec<f64>] {
        &self.alpha
    }

    pub fn beta(&self) -> &[Vec<f64>] {
        &self.beta
    }

    pub fn row(&self, i: usize) -> RowParams {
        RowParams {
            mu: self.mu[i],
            alpha: self.alpha[i].clone(),
        }
    }

    /// Sparsity pattern of `alpha` (entry is 1 iff `alpha_ij > 0`).
    pub fn support(&self) -> Adjacency {
        Adjacency::from_rows(
            self.alpha
                .iter()
                .map(|r| RowPattern::new(r.iter().map(|&a| a > 0.0).collect()))
                .collect(),
        )
        .expect("alpha is square")
    }
}

impl TryFrom<RawParams> for ExpMhpParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        ExpMhpParams::new(raw.mu, raw.alpha, raw.beta)
    }
}

impl From<ExpMhpParams> for RawParams {
    fn from(p: ExpMhpParams) -> Self {
        RawParams {
            mu: p.mu,
            alpha: p.alpha,
            beta: p.beta,
        }
    }
}

/// Candidate parent set of one dimension: bit `j` is set when dimension `j`
/// may excite this one. Ordering is lexicographic over the bits.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RowPattern(Vec<bool>);

impl RowPattern {
    pub fn new(bits: Vec<bool>) -> Self {
        RowPattern(bits)
    }

    pub fn empty(p: usize) -> Self {
        RowPattern(vec![false; p])
    }

    pub fn full(p: usize) -> Self {
        RowPattern(vec![true; p])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn get(&self, j: usize) -> bool {
        self.0[j]
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    /// Indices of the set bits.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, &b)| b).map(|(j, _)| j)
    }

    /// True when every set bit of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &RowPattern) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(&a, &b)| !a || b)
    }

    /// Parses a string of `0`/`1` characters.
    pub fn parse(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::InvalidConfig(format!("bad pattern bit {c:?} in {s:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(RowPattern)
    }
}

impl fmt::Display for RowPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RawAdjacency {
    dim: usize,
    rows: Vec<Vec<u8>>,
}

/// Binary `p x p` causal graph; entry `(i, j)` is 1 iff `j` may Granger-cause `i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawAdjacency", into = "RawAdjacency")]
pub struct Adjacency {
    rows: Vec<RowPattern>,
}

impl Adjacency {
    pub fn from_rows(rows: Vec<RowPattern>) -> Result<Self> {
        let p = rows.len();
        if p == 0 {
            return Err(Error::InvalidConfig("adjacency must have dim >= 1".into()));
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != p) {
            return Err(Error::DimensionMismatch {
                expected: p,
                found: bad.len(),
            });
        }
        Ok(Adjacency { rows })
    }

    pub fn identity(p: usize) -> Self {
        Adjacency {
            rows: (0..p)
                .map(|i| RowPattern::new((0..p).map(|j| i == j).collect()))
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> &RowPattern {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[RowPattern] {
        &self.rows
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.rows[i].get(j)
    }

    pub fn count_ones(&self) -> usize {
        self.rows.iter().map(RowPattern::count_ones).sum()
    }
}

impl TryFrom<RawAdjacency> for Adjacency {
    type Error = Error;

    fn try_from(raw: RawAdjacency) -> Result<Self> {
        if raw.rows.len() != raw.dim {
            return Err(Error::DimensionMismatch {
                expected: raw.dim,
                found: raw.rows.len(),
            });
        }
        let rows = raw
            .rows
            .into_iter()
            .map(|r| {
                r.into_iter()
                    .map(|v| match v {
                        0 => Ok(false),
                        1 => Ok(true),
                        _ => Err(Error::InvalidConfig(format!("adjacency entry {v} is not 0/1"))),
                    })
                    .collect::<Result<Vec<_>>>()
                    .map(RowPattern::new)
            })
            .collect::<Result<Vec<_>>>()?;
        Adjacency::from_rows(rows)
    }
}

impl From<Adjacency> for RawAdjacency {
    fn from(a: Adjacency) -> Self {
        RawAdjacency {
            dim: a.rows.len(),
            rows: a
                .rows
                .iter()
                .map(|r| r.bits().iter().map(|&b| u8::from(b)).collect())
                .collect(),
        }
    }
}

/// Luckiness function `v`. Both choices are log-concave and factorize over dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LuckinessSpec {
    /// `v = 1`.
    Uniform,
    /// `v(theta) = prod exp(-mu_i) prod exp(-alpha_ij)` over the free coordinates.
    ExpPenalty,
}

impl LuckinessSpec {
    pub fn name(&self) -> &'static str {
        match self {
            LuckinessSpec::Uniform => "uniform",
            LuckinessSpec::ExpPenalty => "exp_penalty",
        }
    }
}

/// Per-dimension prior over row patterns, normalized over the admissible space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelPrior {
    #[default]
    Uniform,
    /// Each bit set independently with probability `edge_prob`, renormalized over the space.
    EdgeBernoulli { edge_prob: f64 },
}

impl ModelPrior {
    pub fn id(&self) -> String {
        match self {
            ModelPrior::Uniform => "uniform".into(),
            ModelPrior::EdgeBernoulli { edge_prob } => format!("edge_bernoulli({edge_prob})"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelPrior::Uniform => Ok(()),
            ModelPrior::EdgeBernoulli { edge_prob } if *edge_prob > 0.0 && *edge_prob < 1.0 => Ok(()),
            ModelPrior::EdgeBernoulli { edge_prob } => Err(Error::InvalidConfig(format!(
                "edge_prob must be in (0, 1), got {edge_prob}"
            ))),
        }
    }

    /// `-log pi_i(pattern)` where `space` is the admissible set `Gamma_i`.
    pub fn neg_log_prob(&self, pattern: &RowPattern, space: &[RowPattern]) -> f64 {
        match self {
            ModelPrior::Uniform => (space.len() as f64).ln(),
            ModelPrior::EdgeBernoulli { edge_prob } => {
                let (lq, l1q) = (edge_prob.ln(), (1.0 - edge_prob).ln());
                let logw = |g: &RowPattern| {
                    let k = g.count_ones() as f64;
                    k * lq + (g.len() as f64 - k) * l1q
                };
                let m = space.iter().map(logw).fold(f64::NEG_INFINITY, f64::max);
                let log_z = m + space.iter().map(|g| (logw(g) - m).exp()).sum::<f64>().ln();
                log_z - logw(pattern)
            }
        }
    }
}

/// How ground-truth graphs are drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Scenario {
    /// Each off-diagonal entry is Bernoulli(`edge_prob`).
    Default { edge_prob: f64 },
    /// Per row, in-degree uniform on `0..=max_parents`, then a uniform subset of the other columns.
    Sparse { max_parents: usize },
}

/// Decay matrix: a single constant for every entry, or a full matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DecaySpec {
    Constant(f64),
    Matrix(Vec<Vec<f64>>),
}

impl DecaySpec {
    pub fn resolve(&self, p: usize) -> Result<Vec<Vec<f64>>> {
        let m = match self {
            DecaySpec::Constant(b) => vec![vec![*b; p]; p],
            DecaySpec::Matrix(m) => {
                if m.len() != p || m.iter().any(|r| r.len() != p) {
                    return Err(Error::InvalidConfig(format!("beta matrix must be {p}x{p}")));
                }
                m.clone()
            }
        };
        if m.iter().flatten().any(|&b| !(b.is_finite() && b > 0.0)) {
            return Err(Error::InvalidConfig("beta entries must be finite and > 0".into()));
        }
        Ok(m)
    }
}

/// Data-generating hierarchy: graph, then parameters on that graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerativePrior {
    pub scenario: Scenario,
    pub alpha_range: [f64; 2],
    pub mu_range: [f64; 2],
    pub beta: DecaySpec,
    pub self_excite: bool,
}

impl GenerativePrior {
    /// Synthetic protocol defaults: alpha ~ U[0.1, 0.2], mu ~ U[0.5, 1.0], beta = 1, self-loops on.
    pub fn standard(scenario: Scenario) -> Self {
        GenerativePrior {
            scenario,
            alpha_range: [0.1, 0.2],
            mu_range: [0.5, 1.0],
            beta: DecaySpec::Constant(1.0),
            self_excite: true,
        }
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        match self.scenario {
            Scenario::Default { edge_prob } if !(0.0..=1.0).contains(&edge_prob) => {
                return Err(Error::InvalidConfig(format!(
                    "edge_prob must be in [0, 1], got {edge_prob}"
                )))
            }
            Scenario::Sparse { max_parents } if max_parents >= p => {
                return Err(Error::InvalidConfig(format!(
                    "max_parents = {max_parents} must be < p = {p}"
                )))
            }
            _ => {}
        }
        for (name, [lo, hi]) in [("alpha_range", self.alpha_range), ("mu_range", self.mu_range)] {
            if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo <= hi) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must satisfy 0 <= lo <= hi, got [{lo}, {hi}]"
                )));
            }
        }
        self.beta.resolve(p).map(|_| ())
    }
}

/// Monte-Carlo estimate of a per-dimension model complexity, in nats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityEstimate {
    pub comp: f64,
    pub stderr: f64,
    pub n_samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_q: Option<Vec<f64>>,
}

/// Per-dimension MDL objective and its four parts (nats).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MdlScore {
    pub total: f64,
    pub neg_log_prior: f64,
    pub neg_log_lik: f64,
    pub neg_log_luck: f64,
    pub comp: f64,
}

impl MdlScore {
    pub fn new(neg_log_prior: f64, neg_log_lik: f64, neg_log_luck: f64, comp: f64) -> Self {
        MdlScore {
            total: neg_log_prior + neg_log_lik + neg_log_luck + comp,
            neg_log_prior,
            neg_log_lik,
            neg_log_luck,
            comp,
        }
    }
}
