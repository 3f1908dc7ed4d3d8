//! Independent reference implementations used as test oracles. Nothing here
//! calls into the library's likelihood code.
#![allow(dead_code)]

use hawkes_mdl::{EventData, ExpMhpParams, RowParams, SeedSpec};
use rand::Rng;

/// Intensity of dimension `i` at `t`, summing over sources with `s < t`
/// (or `s <= t` when `closed`).
pub fn direct_intensity(mu: f64, alpha: &[f64], beta: &[f64], x: &EventData, i: usize, t: f64, closed: bool) -> f64 {
    let _ = i;
    let mut lam = mu;
    for (j, src) in x.events().iter().enumerate() {
        for &s in src {
            if s < t || (closed && s == t) {
                lam += alpha[j] * (-beta[j] * (t - s)).exp();
            }
        }
    }
    lam
}

#[allow(clippy::too_many_arguments)]
fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, eps: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * eps {
        return left + right + (left + right - whole) / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1) + simpson(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1)
}

/// Adaptive Simpson quadrature of a smooth function on `[a, b]`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, eps: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson(f, a, b, fa, fm, fb, whole, eps, 40)
}

/// `int_0^T lambda_i - sum_l log lambda_i(t_l)` with the integral done numerically,
/// piecewise between consecutive event times where the intensity is smooth.
pub fn quadrature_nll(theta: &RowParams, beta: &[f64], x: &EventData, i: usize) -> f64 {
    let mut cuts: Vec<f64> = x.events().iter().flatten().copied().collect();
    cuts.push(0.0);
    cuts.push(x.horizon());
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut integral = 0.0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        // inside (a, b] the sources are exactly the events at or before a
        let f = |t: f64| {
            let mut lam = theta.mu;
            for (j, src) in x.events().iter().enumerate() {
                for &s in src.iter().take_while(|&&s| s <= a) {
                    lam += theta.alpha[j] * (-beta[j] * (t - s)).exp();
                }
            }
            lam
        };
        integral += adaptive_simpson(&f, a, b, 1e-13);
    }
    let log_sum: f64 = x
        .dimension(i)
        .iter()
        .map(|&t| direct_intensity(theta.mu, &theta.alpha, beta, x, i, t, false).ln())
        .sum();
    integral - log_sum
}

/// Closed-form NLL of dimension `i` evaluated by the direct double sum.
pub fn naive_nll(theta: &RowParams, beta: &[f64], x: &EventData, i: usize) -> f64 {
    let t_end = x.horizon();
    let mut comp = theta.mu * t_end;
    for (j, src) in x.events().iter().enumerate() {
        for &s in src {
            comp += theta.alpha[j] / beta[j] * (1.0 - (-beta[j] * (t_end - s)).exp());
        }
    }
    let mut log_sum = 0.0;
    for &t in x.dimension(i) {
        log_sum += direct_intensity(theta.mu, &theta.alpha, beta, x, i, t, false).ln();
    }
    comp - log_sum
}

/// Gradient of [`naive_nll`] in `(mu, alpha_0, .., alpha_{p-1})` by the direct double sum.
pub fn naive_grad(theta: &RowParams, beta: &[f64], x: &EventData, i: usize) -> Vec<f64> {
    let p = x.dim();
    let t_end = x.horizon();
    let mut g = vec![0.0; p + 1];
    g[0] = t_end;
    for j in 0..p {
        g[j + 1] = x.dimension(j).iter().map(|&s| (1.0 - (-beta[j] * (t_end - s)).exp()) / beta[j]).sum();
    }
    for &t in x.dimension(i) {
        let lam = direct_intensity(theta.mu, &theta.alpha, beta, x, i, t, false);
        g[0] -= 1.0 / lam;
        for j in 0..p {
            let e: f64 = x.dimension(j).iter().filter(|&&s| s < t).map(|&s| (-beta[j] * (t - s)).exp()).sum();
            g[j + 1] -= e / lam;
        }
    }
    g
}

/// Central finite differences of `f` at `x` with step `h`.
pub fn central_diff(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|c| {
            let mut up = x.to_vec();
            let mut dn = x.to_vec();
            up[c] += h;
            dn[c] -= h;
            (f(&up) - f(&dn)) / (2.0 * h)
        })
        .collect()
}

/// Events placed uniformly at random, `n_j` per dimension, rounded so that
/// coincident times across dimensions also occur.
pub fn random_events(rng: &mut impl Rng, p: usize, horizon: f64, max_total: usize) -> EventData {
    let mut events = Vec::with_capacity(p);
    let per = max_total / p;
    for _ in 0..p {
        let n = rng.random_range(0..=per);
        let mut ts: Vec<f64> = (0..n).map(|_| (rng.random::<f64>() * horizon * 64.0).floor() / 64.0).collect();
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        events.push(ts);
    }
    EventData::new(horizon, events).unwrap()
}

/// Random row parameters with `mu > 0` and some zero alphas.
pub fn random_row(rng: &mut impl Rng, p: usize) -> RowParams {
    RowParams {
        mu: rng.random_range(0.05..2.0),
        alpha: (0..p).map(|_| if rng.random_bool(0.25) { 0.0 } else { rng.random_range(0.0..1.5) }).collect(),
    }
}

pub fn random_beta_row(rng: &mut impl Rng, p: usize) -> Vec<f64> {
    (0..p).map(|_| rng.random_range(0.3..3.0)).collect()
}

pub fn rng(tag: u64) -> rand_chacha::ChaCha8Rng {
    SeedSpec::new(0x7e57, [tag]).rng()
}

/// Joint negative log-likelihood of all dimensions, written as one sum over
/// all events rather than per dimension.
pub fn joint_nll(params: &ExpMhpParams, x: &EventData) -> f64 {
    let p = x.dim();
    let t_end = x.horizon();
    let mut total = params.mu().iter().sum::<f64>() * t_end;
    for i in 0..p {
        for j in 0..p {
            let (a, b) = (params.alpha()[i][j], params.beta()[i][j]);
            total += x.dimension(j).iter().map(|&s| a / b * (1.0 - (-b * (t_end - s)).exp())).sum::<f64>();
        }
    }
    let mut all: Vec<(f64, usize)> = x.events().iter().enumerate().flat_map(|(i, ts)| ts.iter().map(move |&t| (t, i))).collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (t, i) in all {
        total -= direct_intensity(params.mu()[i], &params.alpha()[i], &params.beta()[i], x, i, t, false).ln();
    }
    total
}
