//! Profit maximization over signal accuracy and commission.
//!
//! The profit surface jumps to zero revenue across the feasibility boundary
//! and the cost diverges at the edges of the unit square, so the search is a
//! deterministic grid scan followed by a derivative-free Nelder-Mead polish
//! started from the best grid point.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hull::ConvexRegion;
use super::{profit_with, CostModel, ProfitReport};
use crate::market::{canonicalize, MarketParams, SignalPolicy};

/// Default grid spacing.
pub const DEFAULT_RESOLUTION: f64 = 1.0 / 256.0;
/// Iterations of the local refinement.
pub const REFINE_ITERATIONS: usize = 200;

/// Best policy found by the optimizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub alpha_star: f64,
    pub beta_star: f64,
    /// Optimal commission-to-benefit ratio, when the commission was optimized.
    pub s_star: Option<f64>,
    pub profit: f64,
    pub revenue: f64,
    pub cost: f64,
    pub grid_resolution: f64,
    /// Set when no policy beats staying at the natural accuracy with no
    /// investment and zero profit.
    pub zero_fallback: bool,
}

impl Optimum {
    pub fn policy(&self) -> SignalPolicy {
        SignalPolicy {
            alpha: self.alpha_star,
            beta: self.beta_star,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    alpha: f64,
    beta: f64,
    report: ProfitReport,
}

/// Total order on candidates: higher profit, then lower cost, then lower
/// beta, then lower alpha.
fn rank(a: &Candidate, b: &Candidate) -> Ordering {
    a.report
        .profit
        .total_cmp(&b.report.profit)
        .then(b.report.cost.total_cmp(&a.report.cost))
        .then(b.beta.total_cmp(&a.beta))
        .then(b.alpha.total_cmp(&a.alpha))
}

fn better(a: Candidate, b: Candidate) -> Candidate {
    if rank(&a, &b) == Ordering::Less {
        b
    } else {
        a
    }
}

struct Objective<'a> {
    params: MarketParams,
    model: &'a CostModel,
    region: ConvexRegion,
}

impl Objective<'_> {
    fn eval(&self, alpha: f64, beta: f64) -> Candidate {
        let policy = SignalPolicy { alpha, beta };
        Candidate {
            alpha,
            beta,
            report: profit_with(self.params, policy, self.model, &self.region),
        }
    }

    /// Profit on the canonical half `0 < beta < alpha < 1` of the open unit
    /// square, `-inf` elsewhere.
    fn value(&self, x: [f64; 2]) -> f64 {
        if x[1] > 0.0 && x[1] < x[0] && x[0] < 1.0 {
            self.eval(x[0], x[1]).report.profit
        } else {
            f64::NEG_INFINITY
        }
    }
}

fn grid_values(h: f64) -> Vec<f64> {
    let n = (1.0 / h).floor() as usize;
    (1..=n).map(|k| k as f64 * h).filter(|v| *v < 1.0 - 1e-12).collect()
}

/// Maximizes `f` with a Nelder-Mead simplex started at `x0` with edge `scale`.
fn nelder_mead(f: impl Fn([f64; 2]) -> f64, x0: [f64; 2], scale: f64, iterations: usize) -> [f64; 2] {
    let mut simplex: Vec<([f64; 2], f64)> = [x0, [x0[0] + scale, x0[1]], [x0[0], x0[1] + scale]]
        .into_iter()
        .map(|x| (x, f(x)))
        .collect();
    let lerp = |a: [f64; 2], b: [f64; 2], t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];

    for _ in 0..iterations {
        // Best first.
        simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
        let centroid = lerp(simplex[0].0, simplex[1].0, 0.5);
        let worst = simplex[2];

        let reflected = lerp(centroid, worst.0, -1.0);
        let fr = f(reflected);
        if fr > simplex[0].1 {
            let expanded = lerp(centroid, worst.0, -2.0);
            let fe = f(expanded);
            simplex[2] = if fe > fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr > simplex[1].1 {
            simplex[2] = (reflected, fr);
        } else {
            let contracted = if fr > worst.1 {
                lerp(centroid, reflected, 0.5)
            } else {
                lerp(centroid, worst.0, 0.5)
            };
            let fc = f(contracted);
            if fc > worst.1.max(fr) {
                simplex[2] = (contracted, fc);
            } else {
                let best = simplex[0].0;
                for vertex in simplex.iter_mut().skip(1) {
                    let x = lerp(best, vertex.0, 0.5);
                    *vertex = (x, f(x));
                }
            }
        }
    }
    simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
    simplex[0].0
}

/// Finds the profit-maximizing accuracy pair for a fixed commission.
///
/// Revenue and cost are both invariant under swapping the two rating labels,
/// so only the half `alpha > beta` is searched. Scans every interior grid
/// point `(i h, j h)` there, polishes the best one with
/// [`REFINE_ITERATIONS`] Nelder-Mead iterations and compares against the
/// natural accuracy. When nothing earns a positive profit the platform stays
/// at its natural accuracy and earns zero.
pub fn optimize_signals(params: MarketParams, cost_model: &CostModel, resolution: f64) -> Optimum {
    let h = resolution.clamp(f64::MIN_POSITIVE, 0.1);
    let objective = Objective {
        params,
        model: cost_model,
        region: cost_model.free_region(),
    };
    let values = grid_values(h);

    let grid_best = values
        .par_iter()
        .map(|&alpha| {
            values
                .iter()
                .take_while(|&&beta| beta < alpha)
                .map(|&beta| objective.eval(alpha, beta))
                .reduce(better)
        })
        .flatten()
        .reduce_with(better)
        .expect("grid has a point below the diagonal");

    let refined = nelder_mead(
        |x| objective.value(x),
        [grid_best.alpha, grid_best.beta],
        h,
        REFINE_ITERATIONS,
    );
    let natural = {
        let (p, _) = canonicalize(cost_model.natural_policy());
        objective.eval(p.alpha, p.beta)
    };
    let mut best = better(grid_best, objective.eval(refined[0], refined[1]));
    if natural.report.profit >= best.report.profit {
        best = natural;
    }

    if best.report.profit > 0.0 {
        Optimum {
            alpha_star: best.alpha,
            beta_star: best.beta,
            s_star: None,
            profit: best.report.profit,
            revenue: best.report.revenue,
            cost: best.report.cost,
            grid_resolution: h,
            zero_fallback: false,
        }
    } else {
        Optimum {
            alpha_star: cost_model.alpha0,
            beta_star: cost_model.beta0,
            s_star: None,
            profit: 0.0,
            revenue: 0.0,
            cost: 0.0,
            grid_resolution: h,
            zero_fallback: true,
        }
    }
}

/// Jointly optimizes the commission, expressed as `s = c / r`, and the
/// accuracy pair. Values of `s` outside `[0, 1)` are skipped. Ties in profit
/// go to the smaller `s`.
pub fn optimize_with_commission(r: f64, cost_model: &CostModel, s_grid: &[f64], resolution: f64) -> Option<Optimum> {
    s_grid
        .iter()
        .filter(|s| (0.0..1.0).contains(*s))
        .map(|&s| {
            let params = MarketParams { r, c: s * r };
            Optimum {
                s_star: Some(s),
                ..optimize_signals(params, cost_model, resolution)
            }
        })
        .fold(None, |acc: Option<Optimum>, o| match acc {
            Some(best) if best.profit >= o.profit => Some(best),
            _ => Some(o),
        })
}
