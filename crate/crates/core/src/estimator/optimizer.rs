//! Projected gradient descent on the nonnegative orthant.
//!
//! Trial points are `P(x - s g)` with `P` the clamp at zero. The first trial
//! step of each iteration is the Barzilai-Borwein step from the previous
//! move; it is halved until the Armijo condition holds along the projection
//! arc. Infeasible trials (objective `+inf`) are treated as failed trials.

/// A convex objective on `R^n_{>=0}` that may return `+inf` outside its domain.
pub trait Objective {
    fn n_vars(&self) -> usize;

    /// Value at `x`; fills `grad` when given and the value is finite.
    fn eval(&self, x: &[f64], grad: Option<&mut [f64]>) -> f64;
}

/// Armijo sufficient-decrease parameter.
pub const ARMIJO: f64 = 1e-4;
/// Backtracking factor.
pub const BACKTRACK: f64 = 0.5;
const MAX_BACKTRACKS: usize = 80;
const STEP_MIN: f64 = 1e-20;
const STEP_MAX: f64 = 1e20;

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Infinity norm of the first-order optimality violation on the cone:
/// `|g_c|` where `x_c > 0`, `max(-g_c, 0)` where `x_c = 0`.
pub fn kkt_residual(x: &[f64], g: &[f64]) -> f64 {
    x.iter()
        .zip(g)
        .map(|(&xc, &gc)| if xc > 0.0 { gc.abs() } else { (-gc).max(0.0) })
        .fold(0.0, f64::max)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Rounding slack on objective comparisons. Near the optimum the decrease
/// promised by Armijo drops below the resolution of `f`, and without this the
/// search would stall before the gradient test can be met.
fn rounding_slack(f: f64) -> f64 {
    64.0 * f64::EPSILON * (1.0 + f.abs())
}

/// Minimizes `obj` over the nonnegative orthant starting from `x0`.
/// Returns `None` when the projected start point is infeasible.
pub fn minimize_nonnegative<O: Objective>(obj: &O, x0: &[f64], tol: f64, max_iter: usize) -> Option<Outcome> {
    let n = obj.n_vars();
    assert_eq!(x0.len(), n, "start point has wrong length");
    let mut x: Vec<f64> = x0.iter().map(|&v| v.max(0.0)).collect();
    let mut g = vec![0.0; n];
    let mut f = obj.eval(&x, Some(&mut g));
    if !f.is_finite() {
        return None;
    }

    let mut step = 1.0 / kkt_residual(&x, &g).max(1.0);
    let mut trial = vec![0.0; n];
    let mut gt = vec![0.0; n];
    let mut d = vec![0.0; n];

    for iter in 0..max_iter {
        if kkt_residual(&x, &g) <= tol {
            return Some(Outcome {
                x,
                value: f,
                converged: true,
                iterations: iter,
            });
        }

        let mut s = step;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            for c in 0..n {
                trial[c] = (x[c] - s * g[c]).max(0.0);
                d[c] = trial[c] - x[c];
            }
            let gd = dot(&g, &d);
            if gd >= 0.0 {
                // no descent left along the arc at this scale
                s *= BACKTRACK;
                continue;
            }
            let ft = obj.eval(&trial, Some(&mut gt));
            if ft.is_finite() && ft <= f + ARMIJO * gd + rounding_slack(f) {
                accepted = Some(ft);
                break;
            }
            s *= BACKTRACK;
        }
        let Some(ft) = accepted else {
            return Some(Outcome {
                x,
                value: f,
                converged: false,
                iterations: iter,
            });
        };

        // Barzilai-Borwein step for the next iteration
        let mut ss = 0.0;
        let mut sy = 0.0;
        for c in 0..n {
            let sc = trial[c] - x[c];
            ss += sc * sc;
            sy += sc * (gt[c] - g[c]);
        }
        step = if sy > 0.0 { ss / sy } else { s / BACKTRACK };
        step = step.clamp(STEP_MIN, STEP_MAX);

        std::mem::swap(&mut x, &mut trial);
        std::mem::swap(&mut g, &mut gt);
        f = ft;
    }

    let converged = kkt_residual(&x, &g) <= tol;
    Some(Outcome {
        x,
        value: f,
        converged,
        iterations: max_iter,
    })
}
