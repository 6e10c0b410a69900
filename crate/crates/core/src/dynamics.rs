//! Replicator dynamics of seller types.
//!
//! The share of good sellers among active ones, `xi`, obeys
//! `xi' = xi (1 - xi) (pi_good - pi_bad)` whatever the inactive share. The
//! payoffs are piecewise constant in `xi`, switching at the two purchase
//! thresholds, so solutions are taken in the Filippov sense: on a threshold the
//! velocity of `xi` may be any point of the interval spanned by its one-sided
//! limits.
//!
//! [`integrate`] advances the full two-variable system with fixed-step RK4
//! inside each region of constant payoffs, locates threshold crossings by
//! bisection and, when both sides push towards a threshold, slides along it
//! with `xi` held fixed while the inactive share keeps decaying.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::market::{
    canonicalize, effective_thresholds, feasibility_sides, is_feasible, seller_payoffs_total, MarketParams,
    SellerDistribution, SellerPayoffs, SignalPolicy, Thresholds, THRESHOLD_TOLERANCE,
};

/// Default RK4 step.
pub const DEFAULT_STEP: f64 = 1e-2;
/// Crossing times are located to this precision.
pub const EVENT_TIME_TOLERANCE: f64 = 1e-10;
/// Rates below this sup-norm count towards convergence.
pub const CONVERGENCE_RATE: f64 = 1e-10;
/// Consecutive quiet steps after which integration stops.
pub const CONVERGENCE_STEPS: usize = 100;

/// A closed interval of admissible velocities of `xi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilippovValue {
    pub lower: f64,
    pub upper: f64,
}

impl FilippovValue {
    pub fn singleton(v: f64) -> Self {
        Self { lower: v, upper: v }
    }

    fn hull(a: f64, b: f64) -> Self {
        Self {
            lower: a.min(b),
            upper: a.max(b),
        }
    }

    pub fn is_singleton(&self) -> bool {
        self.lower == self.upper
    }

    pub fn contains(&self, v: f64, tol: f64) -> bool {
        v >= self.lower - tol && v <= self.upper + tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    /// `xi` reached the good-rating purchase threshold.
    HitGoodThreshold,
    /// `xi` reached the bad-rating purchase threshold.
    HitBadThreshold,
    /// The state started sliding along a threshold.
    SlidingStart,
    /// The state entered the region where no purchases happen and stopped.
    AbsorbedNoTrade,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
}

/// Output of [`integrate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<SellerDistribution>,
    /// Velocity of `xi` used by the integrator at each recorded state.
    pub xi_rates: Vec<f64>,
    pub events: Vec<Event>,
    /// Whether integration stopped early because the rates vanished.
    pub converged: bool,
}

impl Trajectory {
    pub fn final_state(&self) -> SellerDistribution {
        *self
            .states
            .last()
            .expect("a trajectory holds at least its initial state")
    }

    pub fn final_xi(&self) -> Option<f64> {
        self.final_state().xi()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EquilibriumKind {
    InteriorCoexistence,
    NoTrade,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumResult {
    pub kind: EquilibriumKind,
    /// Equilibrium share of good sellers, present for interior coexistence.
    pub xi_star: Option<f64>,
    /// Purchase thresholds of the canonically oriented policy.
    pub thresholds: Thresholds,
    /// `alpha (r - c)` on the canonical orientation.
    pub condition_lhs: f64,
    /// `beta (1 - c)` on the canonical orientation.
    pub condition_rhs: f64,
    /// Set when the coexistence point sits on the all-good vertex, which
    /// happens only for a perfect true-positive rate.
    pub boundary: bool,
}

impl EquilibriumResult {
    pub fn is_interior(&self) -> bool {
        self.kind == EquilibriumKind::InteriorCoexistence
    }
}

/// Right-hand side of the replicator equation, returning the rates of the
/// good and inactive shares (the bad share follows from the simplex).
///
/// On the faces where the posterior of one rating is undefined the rates are
/// taken from the terms that do not involve the undefined payoff: with no bad
/// sellers `x_good' = x_good (1 - x_good) pi_good` and
/// `x_inactive' = -x_inactive x_good pi_good`; with no good sellers
/// `x_good' = 0` and `x_inactive' = -x_inactive x_bad pi_bad`.
pub fn replicator_rhs(state: &SellerDistribution, params: MarketParams, policy: SignalPolicy) -> (f64, f64) {
    let (policy, _) = canonicalize(policy);
    let SellerDistribution { good, bad, inactive } = *state;
    match state.xi() {
        None => (0.0, 0.0),
        Some(_) if good == 0.0 => {
            let pay = seller_payoffs_total(params, policy, 0.0);
            (0.0, -inactive * bad * pay.bad)
        }
        Some(_) if bad == 0.0 => {
            let pay = seller_payoffs_total(params, policy, 1.0);
            (good * (1.0 - good) * pay.good, -inactive * good * pay.good)
        }
        Some(xi) => {
            let pay = seller_payoffs_total(params, policy, xi);
            field(good, inactive, pay)
        }
    }
}

/// Replicator field with frozen payoffs, in `(x_good, x_inactive)`.
fn field(good: f64, inactive: f64, pay: SellerPayoffs) -> (f64, f64) {
    let bad = 1.0 - good - inactive;
    (
        good * ((1.0 - good) * (pay.good - pay.bad) + inactive * pay.bad),
        -inactive * (good * pay.good + bad * pay.bad),
    )
}

/// Classical velocity of `xi` away from the thresholds.
pub fn xi_rate(xi: f64, params: MarketParams, policy: SignalPolicy) -> f64 {
    let (policy, _) = canonicalize(policy);
    xi * (1.0 - xi) * seller_payoffs_total(params, policy, xi).difference()
}

/// Regions of constant payoffs for a canonical policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Region {
    /// Below the good-rating threshold: nobody buys.
    NoTrade,
    /// Between the thresholds: only good-rated sellers sell.
    Middle,
    /// Above the bad-rating threshold: everyone sells.
    Top,
}

/// Switching structure of the reduced dynamics for one parameter point.
#[derive(Debug, Clone, Copy)]
struct Switching {
    params: MarketParams,
    policy: SignalPolicy,
    th: Thresholds,
}

impl Switching {
    fn new(params: MarketParams, policy: SignalPolicy) -> Self {
        let (policy, _) = canonicalize(policy);
        Self {
            params,
            policy,
            th: effective_thresholds(params, policy),
        }
    }

    fn payoffs(&self, region: Region) -> SellerPayoffs {
        let (good, bad) = (self.params.good_sale_payoff(), self.params.bad_sale_payoff());
        match region {
            Region::NoTrade => SellerPayoffs { good: 0.0, bad: 0.0 },
            Region::Middle => SellerPayoffs {
                good: self.policy.alpha * good,
                bad: self.policy.beta * bad,
            },
            Region::Top => SellerPayoffs { good, bad },
        }
    }

    fn advantage(&self, region: Region) -> f64 {
        self.payoffs(region).difference()
    }

    /// Region strictly containing `xi`, or the threshold `xi` sits on.
    fn locate(&self, xi: f64) -> Location {
        let (lo, hi) = (self.th.good_signal, self.th.bad_signal);
        if (xi - hi).abs() <= THRESHOLD_TOLERANCE {
            Location::On(Threshold::Bad)
        } else if (xi - lo).abs() <= THRESHOLD_TOLERANCE {
            Location::On(Threshold::Good)
        } else if xi > hi {
            Location::In(Region::Top)
        } else if xi > lo {
            Location::In(Region::Middle)
        } else {
            Location::In(Region::NoTrade)
        }
    }

    fn value(&self, t: Threshold) -> f64 {
        match t {
            Threshold::Good => self.th.good_signal,
            Threshold::Bad => self.th.bad_signal,
        }
    }

    /// Regions just below and just above a threshold. When the thresholds
    /// coincide the middle region is empty.
    fn sides(&self, t: Threshold) -> (Region, Region) {
        let degenerate = (self.th.bad_signal - self.th.good_signal).abs() <= THRESHOLD_TOLERANCE;
        match t {
            _ if degenerate => (Region::NoTrade, Region::Top),
            Threshold::Good => (Region::NoTrade, Region::Middle),
            Threshold::Bad => (Region::Middle, Region::Top),
        }
    }

    /// Open interval of `xi` covered by a region.
    fn bounds(&self, region: Region) -> (f64, f64) {
        match region {
            Region::NoTrade => (f64::NEG_INFINITY, self.th.good_signal),
            Region::Middle => (self.th.good_signal, self.th.bad_signal),
            Region::Top => (self.th.bad_signal, f64::INFINITY),
        }
    }

    fn crossed(&self, region: Region, xi: f64) -> Option<Threshold> {
        let (lo, hi) = self.bounds(region);
        if xi <= lo + THRESHOLD_TOLERANCE && region != Region::NoTrade {
            Some(match region {
                Region::Top => Threshold::Bad,
                _ => Threshold::Good,
            })
        } else if xi >= hi - THRESHOLD_TOLERANCE && region != Region::Top {
            Some(match region {
                Region::NoTrade => Threshold::Good,
                _ if self.sides(Threshold::Good).1 == Region::Top => Threshold::Good,
                _ => Threshold::Bad,
            })
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Threshold {
    Good,
    Bad,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Location {
    In(Region),
    On(Threshold),
}

/// Set of admissible velocities of `xi` for the reduced dynamics on the face
/// without inactive sellers.
pub fn filippov_map(xi: f64, params: MarketParams, policy: SignalPolicy) -> FilippovValue {
    let sw = Switching::new(params, policy);
    let scale = xi * (1.0 - xi);
    match sw.locate(xi) {
        Location::In(region) => FilippovValue::singleton(scale * sw.advantage(region)),
        Location::On(t) => {
            let (below, above) = sw.sides(t);
            FilippovValue::hull(scale * sw.advantage(below), scale * sw.advantage(above))
        }
    }
}

/// Unique asymptotically stable equilibrium of the market, if any.
pub fn stable_equilibrium(params: MarketParams, policy: SignalPolicy) -> EquilibriumResult {
    let (canonical, _) = canonicalize(policy);
    let th = effective_thresholds(params, canonical);
    let (lhs, rhs) = feasibility_sides(params, canonical);
    let interior = is_feasible(params, policy);
    EquilibriumResult {
        kind: if interior {
            EquilibriumKind::InteriorCoexistence
        } else {
            EquilibriumKind::NoTrade
        },
        xi_star: interior.then_some(th.bad_signal),
        thresholds: th,
        condition_lhs: lhs,
        condition_rhs: rhs,
        boundary: interior && th.bad_signal >= 1.0 - THRESHOLD_TOLERANCE,
    }
}

/// How the integrator is currently moving.
#[derive(Debug, Clone, Copy)]
enum Mode {
    /// Smooth motion inside a region of constant payoffs.
    Free(Region),
    /// `xi` is invariant; the inactive share evolves with the given payoffs.
    Fixed { xi: f64, pay: SellerPayoffs },
}

#[derive(Debug, Clone, Copy)]
struct Point {
    good: f64,
    inactive: f64,
}

impl Point {
    fn from_dist(d: &SellerDistribution) -> Self {
        Self {
            good: d.good,
            inactive: d.inactive,
        }
    }

    fn dist(&self) -> SellerDistribution {
        let inactive = self.inactive.clamp(0.0, 1.0);
        let good = self.good.clamp(0.0, 1.0 - inactive);
        SellerDistribution::from_good_inactive(good, inactive)
    }

    fn xi(&self) -> Option<f64> {
        self.dist().xi()
    }

    /// Moves the point onto `xi = target` keeping the inactive share.
    fn project(&self, target: f64) -> Self {
        Self {
            good: target * (1.0 - self.inactive),
            inactive: self.inactive,
        }
    }
}

fn rk4(p: Point, h: f64, f: impl Fn(Point) -> (f64, f64)) -> Point {
    let add = |p: Point, k: (f64, f64), s: f64| Point {
        good: p.good + s * k.0,
        inactive: p.inactive + s * k.1,
    };
    let k1 = f(p);
    let k2 = f(add(p, k1, h / 2.0));
    let k3 = f(add(p, k2, h / 2.0));
    let k4 = f(add(p, k3, h));
    Point {
        good: p.good + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        inactive: p.inactive + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
    }
}

fn fixed_field(xi: f64, pay: SellerPayoffs) -> impl Fn(Point) -> (f64, f64) {
    let mean = xi * pay.good + (1.0 - xi) * pay.bad;
    move |p: Point| {
        let di = -p.inactive * (1.0 - p.inactive) * mean;
        (-xi * di, di)
    }
}

struct Integrator {
    sw: Switching,
    events: Vec<Event>,
}

impl Integrator {
    /// Chooses how to continue from a point that sits exactly on a threshold.
    fn resolve(&mut self, t: Threshold, time: f64) -> Mode {
        let (below, above) = self.sw.sides(t);
        let (down, up) = (self.sw.advantage(below), self.sw.advantage(above));
        let xi = self.sw.value(t);
        if up > 0.0 && xi < 1.0 {
            Mode::Free(above)
        } else if down < 0.0 && xi > 0.0 {
            Mode::Free(below)
        } else {
            // Both sides point at (or along) the threshold: slide with the
            // convex combination of the two payoff vectors that keeps xi fixed.
            let weight_up = if up < 0.0 && down > 0.0 {
                down / (down - up)
            } else {
                0.0
            };
            let (pb, pa) = (self.sw.payoffs(below), self.sw.payoffs(above));
            let pay = SellerPayoffs {
                good: weight_up * pa.good + (1.0 - weight_up) * pb.good,
                bad: weight_up * pa.bad + (1.0 - weight_up) * pb.bad,
            };
            let kind = if below == Region::NoTrade && weight_up == 0.0 {
                EventKind::AbsorbedNoTrade
            } else {
                EventKind::SlidingStart
            };
            self.events.push(Event { time, kind });
            Mode::Fixed { xi, pay }
        }
    }

    fn initial_mode(&mut self, p: Point) -> Mode {
        let Some(xi) = p.xi() else {
            return Mode::Fixed {
                xi: 0.0,
                pay: SellerPayoffs { good: 0.0, bad: 0.0 },
            };
        };
        if p.good <= 0.0 || xi >= 1.0 {
            // Vertices of the active face are invariant.
            let pay = seller_payoffs_total(self.sw.params, self.sw.policy, xi);
            return Mode::Fixed { xi, pay };
        }
        match self.sw.locate(xi) {
            Location::In(Region::NoTrade) => {
                self.events.push(Event {
                    time: 0.0,
                    kind: EventKind::AbsorbedNoTrade,
                });
                Mode::Fixed {
                    xi,
                    pay: self.sw.payoffs(Region::NoTrade),
                }
            }
            Location::In(region) => Mode::Free(region),
            Location::On(t) => self.resolve(t, 0.0),
        }
    }
}

/// Integrates the replicator dynamics from `initial` up to `horizon`.
pub fn integrate(
    initial: SellerDistribution,
    params: MarketParams,
    policy: SignalPolicy,
    horizon: f64,
    step: f64,
) -> Result<Trajectory> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(ModelError::InvalidStep(step));
    }
    if !(horizon >= 0.0) {
        return Err(ModelError::InvalidParameter {
            name: "horizon",
            reason: format!("{horizon} is negative"),
        });
    }
    initial.validate()?;

    let mut it = Integrator {
        sw: Switching::new(params, policy),
        events: Vec::new(),
    };
    let mut p = Point::from_dist(&initial);
    let mut mode = it.initial_mode(p);
    let mut time = 0.0;
    let mut quiet = 0usize;
    let mut converged = false;

    let rate_of = |it: &Integrator, mode: Mode, p: Point| -> ((f64, f64), f64) {
        match mode {
            Mode::Free(region) => {
                let pay = it.sw.payoffs(region);
                let xi = p.xi().unwrap_or(0.0);
                (field(p.good, p.inactive, pay), xi * (1.0 - xi) * pay.difference())
            }
            Mode::Fixed { xi, pay } => (fixed_field(xi, pay)(p), 0.0),
        }
    };

    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![p.dist()],
        xi_rates: vec![rate_of(&it, mode, p).1],
        events: Vec::new(),
        converged: false,
    };

    while time < horizon {
        let h = step.min(horizon - time);
        let (next, dt) = match mode {
            Mode::Fixed { xi, pay } => {
                let mut q = rk4(p, h, fixed_field(xi, pay));
                q.inactive = q.inactive.clamp(0.0, 1.0);
                (q.project(xi), h)
            }
            Mode::Free(region) => {
                let pay = it.sw.payoffs(region);
                let f = move |q: Point| field(q.good, q.inactive, pay);
                let q = rk4(p, h, f);
                match q.xi().and_then(|xi| it.sw.crossed(region, xi)) {
                    None => (q, h),
                    Some(t) => {
                        let target = it.sw.value(t);
                        let below = p.xi().unwrap_or(0.0) < target;
                        let (mut lo, mut hi) = (0.0, h);
                        while hi - lo > EVENT_TIME_TOLERANCE {
                            let mid = 0.5 * (lo + hi);
                            let xi = rk4(p, mid, f).xi().unwrap_or(0.0);
                            if (xi < target) == below {
                                lo = mid;
                            } else {
                                hi = mid;
                            }
                        }
                        let tau = hi;
                        let hit = rk4(p, tau, f).project(target);
                        it.events.push(Event {
                            time: time + tau,
                            kind: match t {
                                Threshold::Good => EventKind::HitGoodThreshold,
                                Threshold::Bad => EventKind::HitBadThreshold,
                            },
                        });
                        mode = it.resolve(t, time + tau);
                        (hit, tau)
                    }
                }
            }
        };
        if dt <= 0.0 {
            break;
        }
        p = next;
        time += dt;
        let ((dg, di), dxi) = rate_of(&it, mode, p);
        traj.times.push(time);
        traj.states.push(p.dist());
        traj.xi_rates.push(dxi);

        if dg.abs().max(di.abs()) < CONVERGENCE_RATE {
            quiet += 1;
            if quiet >= CONVERGENCE_STEPS {
                converged = true;
                break;
            }
        } else {
            quiet = 0;
        }
    }

    traj.events = it.events;
    traj.converged = converged;
    Ok(traj)
}
