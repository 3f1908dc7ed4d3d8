//! Ground-truth graphs, parameters and exp-MHP realizations.
//!
//! Sampling follows the synthetic hierarchy graph -> parameters -> events.
//! Event times come from Ogata's modified thinning: between events the
//! total intensity of an exponential-kernel process only decays, so the
//! intensity right after the last accepted point bounds it until the next one.

use nalgebra::DMatrix;
use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{Adjacency, EventData, ExpMhpParams, GenerativePrior, RowPattern, Scenario};
use crate::seed::SeedSpec;

/// Hard cap on the total number of simulated events.
pub const EVENT_CAP: usize = 10_000_000;

/// Rejection attempts allowed when drawing a stationary process.
pub const MAX_STATIONARY_ATTEMPTS: usize = 1000;

/// Draws a ground-truth graph.
///
/// With `self_excite` the diagonal is forced to 1. Otherwise the diagonal is
/// drawn like any other entry under `Default` and left empty under `Sparse`.
pub fn draw_graph(prior: &GenerativePrior, p: usize, seed: &SeedSpec) -> Result<Adjacency> {
    if p == 0 {
        return Err(Error::InvalidConfig("p must be at least 1".into()));
    }
    prior.validate(p)?;
    let mut rng = seed.rng();
    let rows = (0..p)
        .map(|i| {
            let mut bits = vec![false; p];
            match prior.scenario {
                Scenario::Default { edge_prob } => {
                    for (j, b) in bits.iter_mut().enumerate() {
                        if i == j && prior.self_excite {
                            continue;
                        }
                        *b = rng.random_bool(edge_prob);
                    }
                }
                Scenario::Sparse { max_parents } => {
                    let k = rng.random_range(0..=max_parents);
                    for c in index::sample(&mut rng, p - 1, k) {
                        // skip over the diagonal
                        let j = if c >= i { c + 1 } else { c };
                        bits[j] = true;
                    }
                }
            }
            if prior.self_excite {
                bits[i] = true;
            }
            RowPattern::new(bits)
        })
        .collect();
    Adjacency::from_rows(rows)
}

fn uniform(rng: &mut impl Rng, [lo, hi]: [f64; 2]) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Draws `alpha` on the support of `graph` and `mu` for every dimension.
pub fn draw_params(prior: &GenerativePrior, graph: &Adjacency, seed: &SeedSpec) -> Result<ExpMhpParams> {
    let p = graph.dim();
    prior.validate(p)?;
    let beta = prior.beta.resolve(p)?;
    let mut rng = seed.rng();
    let alpha = graph
        .rows()
        .iter()
        .map(|row| {
            row.bits()
                .iter()
                .map(|&on| if on { uniform(&mut rng, prior.alpha_range) } else { 0.0 })
                .collect()
        })
        .collect();
    let mu = (0..p).map(|_| uniform(&mut rng, prior.mu_range)).collect();
    ExpMhpParams::new(mu, alpha, beta)
}

/// Spectral radius of the branching matrix `[alpha_ij / beta_ij]`.
pub fn spectral_radius(params: &ExpMhpParams) -> f64 {
    let p = params.dim();
    let m = DMatrix::from_fn(p, p, |i, j| params.alpha()[i][j] / params.beta()[i][j]);
    m.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Draws graph and parameters, redrawing both until the process is subcritical.
pub fn draw_process(prior: &GenerativePrior, p: usize, seed: &SeedSpec) -> Result<(Adjacency, ExpMhpParams)> {
    for attempt in 0..MAX_STATIONARY_ATTEMPTS {
        let s = seed.child(attempt as u64);
        let graph = draw_graph(prior, p, &s.child(0))?;
        let params = draw_params(prior, &graph, &s.child(1))?;
        if spectral_radius(&params) < 1.0 {
            return Ok((graph, params));
        }
    }
    Err(Error::NoStationaryDraw {
        attempts: MAX_STATIONARY_ATTEMPTS,
    })
}

/// Simulates one realization on `[0, horizon]` starting from an empty history.
pub fn simulate(params: &ExpMhpParams, horizon: f64, seed: &SeedSpec) -> Result<EventData> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::InvalidConfig(format!("horizon must be positive, got {horizon}")));
    }
    let radius = spectral_radius(params);
    if radius >= 1.0 {
        return Err(Error::Explosive { radius });
    }
    let p = params.dim();
    let (mu, alpha, beta) = (params.mu(), params.alpha(), params.beta());
    let mut rng = seed.rng();

    // excitation[i * p + j]: contribution of past events of j to lambda_i
    let mut excitation = vec![0.0; p * p];
    let mut lambda = mu.to_vec();
    let mut events: Vec<Vec<f64>> = vec![Vec::new(); p];
    let mut total = 0usize;
    let mut t = 0.0;
    let mut bound: f64 = lambda.iter().sum();

    while bound > 0.0 {
        let u: f64 = rng.random();
        if u == 0.0 {
            continue;
        }
        let wait = -(1.0 - u).ln() / bound;
        let next = t + wait;
        if next > horizon {
            break;
        }
        if next == t {
            continue;
        }
        t = next;
        for i in 0..p {
            let mut l = mu[i];
            for j in 0..p {
                let e = &mut excitation[i * p + j];
                if *e != 0.0 {
                    *e *= (-beta[i][j] * wait).exp();
                    l += *e;
                }
            }
            lambda[i] = l;
        }
        let current: f64 = lambda.iter().sum();
        assert!(
            current <= bound * (1.0 + 1e-12),
            "thinning bound {bound} below intensity {current} at t = {t}"
        );

        if rng.random::<f64>() * bound <= current {
            let mut pick = rng.random::<f64>() * current;
            let mut d = p - 1;
            for (i, &l) in lambda.iter().enumerate() {
                if pick < l {
                    d = i;
                    break;
                }
                pick -= l;
            }
            events[d].push(t);
            total += 1;
            if total > EVENT_CAP {
                return Err(Error::EventCap { cap: EVENT_CAP });
            }
            for i in 0..p {
                if alpha[i][d] > 0.0 {
                    excitation[i * p + d] += alpha[i][d];
                    lambda[i] += alpha[i][d];
                }
            }
        }
        bound = lambda.iter().sum();
    }
    EventData::new(horizon, events)
}
