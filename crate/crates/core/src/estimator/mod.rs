//! MDL estimator: the minimizer of `nll_i(theta) - log v_i(theta)` over the
//! cone of row parameters allowed by a row pattern.

pub mod optimizer;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::likelihood::DimensionStats;
use crate::model::{EventData, LuckinessSpec, RowParams, RowPattern};
use optimizer::{minimize_nonnegative, Objective};

/// Starting point of the fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitRule {
    /// `mu = n_i / (2T) + 1e-3`, free alphas `0.01`.
    #[default]
    Scaled,
    /// Fixed starting values; `mu` must be positive when dimension `i` has events.
    Fixed { mu: f64, alpha: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    /// Bound on the projected-gradient infinity norm.
    pub tol: f64,
    pub max_iter: usize,
    pub init: InitRule,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            tol: 1e-8,
            max_iter: 2000,
            init: InitRule::Scaled,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(Error::InvalidConfig(format!(
                "fit needs tol > 0 and max_iter >= 1, got tol = {}, max_iter = {}",
                self.tol, self.max_iter
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub theta_hat: RowParams,
    /// `nll(theta_hat) - log v(theta_hat)`.
    pub objective: f64,
    pub neg_log_lik: f64,
    pub neg_log_luck: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// `log v_i(theta_i)` restricted to the coordinates freed by `gamma_i`.
pub fn log_luckiness(v: LuckinessSpec, theta: &RowParams, gamma: &RowPattern) -> f64 {
    match v {
        LuckinessSpec::Uniform => 0.0,
        LuckinessSpec::ExpPenalty => -theta.mu - gamma.ones().map(|j| theta.alpha[j]).sum::<f64>(),
    }
}

struct RowObjective<'a> {
    stats: &'a DimensionStats,
    free: Vec<usize>,
    luckiness: LuckinessSpec,
}

impl Objective for RowObjective<'_> {
    fn n_vars(&self) -> usize {
        self.free.len() + 1
    }

    fn eval(&self, x: &[f64], grad: Option<&mut [f64]>) -> f64 {
        let mut grad = grad;
        let nll = self.stats.eval_free(&self.free, x, grad.as_deref_mut());
        match self.luckiness {
            LuckinessSpec::Uniform => nll,
            LuckinessSpec::ExpPenalty => {
                if let Some(g) = grad {
                    g.iter_mut().for_each(|gc| *gc += 1.0);
                }
                nll + x.iter().sum::<f64>()
            }
        }
    }
}

/// Fits one row pattern using precomputed statistics of the dimension.
pub fn fit_dimension(
    stats: &DimensionStats,
    gamma: &RowPattern,
    v: LuckinessSpec,
    cfg: &FitConfig,
) -> Result<FitResult> {
    cfg.validate()?;
    let p = stats.dim();
    if gamma.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            found: gamma.len(),
        });
    }
    let free: Vec<usize> = gamma.ones().collect();
    let (mu0, alpha0) = match cfg.init {
        InitRule::Scaled => (stats.n_target() as f64 / (2.0 * stats.horizon()) + 1e-3, 0.01),
        InitRule::Fixed { mu, alpha } => (mu, alpha),
    };
    let mut x0 = vec![alpha0; free.len() + 1];
    x0[0] = mu0;

    let objective = RowObjective {
        stats,
        free: free.clone(),
        luckiness: v,
    };
    let out = minimize_nonnegative(&objective, &x0, cfg.tol, cfg.max_iter)
        .ok_or(Error::Infeasible { dim: stats.index() })?;

    let mut theta_hat = RowParams::zeros(p);
    theta_hat.mu = out.x[0];
    for (c, &j) in free.iter().enumerate() {
        theta_hat.alpha[j] = out.x[c + 1];
    }
    let neg_log_lik = stats.nll(&theta_hat);
    let neg_log_luck = 0.0 - log_luckiness(v, &theta_hat, gamma);
    Ok(FitResult {
        objective: neg_log_lik + neg_log_luck,
        theta_hat,
        neg_log_lik,
        neg_log_luck,
        converged: out.converged,
        iterations: out.iterations,
    })
}

/// Computes the MDL estimator of dimension `i` under row pattern `gamma`.
pub fn mdl_fit(
    x: &EventData,
    i: usize,
    gamma: &RowPattern,
    v: LuckinessSpec,
    beta: &[Vec<f64>],
    cfg: &FitConfig,
) -> Result<FitResult> {
    if i >= x.dim() {
        return Err(Error::IndexOutOfRange { index: i, dim: x.dim() });
    }
    if beta.len() != x.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            found: beta.len(),
        });
    }
    let stats = DimensionStats::new(x, i, &beta[i])?;
    fit_dimension(&stats, gamma, v, cfg)
}
