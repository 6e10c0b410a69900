//! Random parameter draws and first-principles reference computations shared
//! by the integration tests. Nothing here calls into the closed forms of the
//! library; only its plain data types are reused.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use repmarket::{MarketParams, SignalPolicy};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A market with `r > c` and a policy with `alpha > beta` whose feasibility
/// slack `alpha (r - c) - beta (1 - c)` is at least `margin`.
pub fn feasible_point(rng: &mut ChaCha8Rng, margin: f64) -> (MarketParams, SignalPolicy) {
    loop {
        let r = rng.random_range(0.1..0.99);
        let c = rng.random_range(0.0..r);
        let alpha = rng.random_range(0.05..0.99);
        let beta_max = (alpha * (r - c) - margin) / (1.0 - c);
        if beta_max <= 0.0 {
            continue;
        }
        let beta = rng.random_range(0.0..beta_max);
        return (MarketParams { r, c }, SignalPolicy { alpha, beta });
    }
}

/// Any market and policy, feasible or not, with rates bounded away from 0
/// and 1.
pub fn any_point(rng: &mut ChaCha8Rng) -> (MarketParams, SignalPolicy) {
    let r = rng.random_range(0.05..0.99);
    let c = rng.random_range(0.0..0.99);
    let alpha = rng.random_range(0.01..0.99);
    let beta = rng.random_range(0.01..0.99);
    (MarketParams { r, c }, SignalPolicy { alpha, beta })
}

/// Bayes' rule for the probability that a seller is good given its rating.
pub fn posterior(shown_good: bool, alpha: f64, beta: f64, xi: f64) -> f64 {
    let (pg, pb) = if shown_good {
        (alpha, beta)
    } else {
        (1.0 - alpha, 1.0 - beta)
    };
    pg * xi / (pg * xi + pb * (1.0 - xi))
}

/// Expected payoff of a buyer who buys after seeing the rating.
pub fn buyer_gain(shown_good: bool, r: f64, alpha: f64, beta: f64, xi: f64) -> f64 {
    let p = posterior(shown_good, alpha, beta, xi);
    p * r - (1.0 - p)
}

/// Probability of purchase: buy on a positive expected gain, toss a coin when
/// indifferent.
pub fn buy_probability(gain: f64) -> f64 {
    if gain.abs() <= 1e-12 {
        0.5
    } else if gain > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// The `xi` at which a buyer seeing the rating becomes indifferent, by
/// bisection on the sign of the expected gain.
pub fn indifference_share(shown_good: bool, r: f64, alpha: f64, beta: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if buyer_gain(shown_good, r, alpha, beta, mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Share of good sellers at which buyers seeing the bad rating are exactly
/// indifferent, for `alpha > beta`.
pub fn equilibrium_share(r: f64, alpha: f64, beta: f64) -> f64 {
    (1.0 - beta) / ((1.0 - beta) + r * (1.0 - alpha))
}

/// Central finite difference.
pub fn central_difference(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Relative error with an absolute floor for values near zero.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-8)
}

type Point = (f64, f64);

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

fn in_triangle(p: Point, a: Point, b: Point, c: Point) -> bool {
    let d1 = cross(a, b, p);
    let d2 = cross(b, c, p);
    let d3 = cross(c, a, p);
    let tol = 1e-12;
    let has_neg = d1 < -tol || d2 < -tol || d3 < -tol;
    let has_pos = d1 > tol || d2 > tol || d3 > tol;
    !(has_neg && has_pos)
}

fn dist(a: Point, b: Point) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

/// Distance from `p` to the convex hull of four generators.
///
/// Membership: a point of the plane lies in the hull of four points iff it
/// lies in one of the triangles they span. Distance: the nearest hull point
/// lies on a segment between two generators; each segment is sampled at
/// `samples` points and the best sample refined by ternary search.
pub fn hull_distance_by_sampling(p: Point, generators: [Point; 4], samples: usize) -> f64 {
    let triangles = [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)];
    if triangles
        .iter()
        .any(|&(i, j, k)| in_triangle(p, generators[i], generators[j], generators[k]))
    {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    for i in 0..4 {
        for j in i + 1..4 {
            let (a, b) = (generators[i], generators[j]);
            let at = |t: f64| (a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1));
            let mut best_k = 0;
            let mut best_d = f64::INFINITY;
            for k in 0..=samples {
                let d = dist(p, at(k as f64 / samples as f64));
                if d < best_d {
                    best_d = d;
                    best_k = k;
                }
            }
            let step = 1.0 / samples as f64;
            let (mut lo, mut hi) = (
                (best_k as f64 * step - step).max(0.0),
                (best_k as f64 * step + step).min(1.0),
            );
            for _ in 0..100 {
                let m1 = lo + (hi - lo) / 3.0;
                let m2 = hi - (hi - lo) / 3.0;
                if dist(p, at(m1)) < dist(p, at(m2)) {
                    hi = m2;
                } else {
                    lo = m1;
                }
            }
            best = best.min(best_d).min(dist(p, at(0.5 * (lo + hi))));
        }
    }
    best
}

/// Signalling cost rebuilt from the sampled hull distance.
pub fn cost_by_sampling(alpha: f64, beta: f64, model: &repmarket::CostModel) -> f64 {
    let generators = [
        (0.0, 0.0),
        (1.0, 1.0),
        (model.alpha0, model.beta0),
        (1.0 - model.alpha0, 1.0 - model.beta0),
    ];
    let d = hull_distance_by_sampling((alpha, beta), generators, 2000);
    if d == 0.0 || model.kappa == 0.0 {
        return 0.0;
    }
    let spread = alpha * beta * (1.0 - alpha) * (1.0 - beta);
    model.kappa * d.powf(model.p) / spread.powf(model.q)
}

pub fn random_cost_model(rng: &mut ChaCha8Rng) -> repmarket::CostModel {
    repmarket::CostModel {
        alpha0: rng.random_range(0.05..0.95),
        beta0: rng.random_range(0.05..0.95),
        kappa: rng.random_range(0.01..2.0),
        p: rng.random_range(1.0..3.0),
        q: rng.random_range(0.1..1.0),
    }
}
