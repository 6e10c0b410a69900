//! Buyer inference and seller payoffs for a single platform-mediated
//! transaction.
//!
//! A buyer is matched with a random active seller. The seller is good
//! (delivers, both sides gain `r`) or bad (keeps the payment: the buyer loses
//! 1, the seller gains 1). The platform shows a binary rating: good sellers
//! receive the good rating with probability `alpha` (true-positive rate), bad
//! sellers with probability `beta` (false-positive rate). Knowing the share
//! `xi` of good sellers among active ones, the buyer purchases when the
//! expected payoff given the rating is positive and flips a fair coin when it
//! is exactly zero. Every sale pays the platform a commission `c`.

use serde::{Deserialize, Serialize};

use crate::error::{check_probability, ModelError, Result};

/// Distance below which a share is considered to sit exactly on a purchase
/// threshold.
pub const THRESHOLD_TOLERANCE: f64 = 1e-12;

/// Tolerance on the sum of a [`SellerDistribution`].
pub const SIMPLEX_TOLERANCE: f64 = 1e-12;

/// Economic primitives of a transaction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketParams {
    /// Benefit of a good-faith transaction to each side, in `(0, 1)`.
    pub r: f64,
    /// Commission paid by the seller to the platform on every sale.
    pub c: f64,
}

impl MarketParams {
    pub fn new(r: f64, c: f64) -> Result<Self> {
        let params = Self { r, c };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r > 0.0 && self.r < 1.0) {
            return Err(ModelError::InvalidParameter {
                name: "r",
                reason: format!("{} is not in (0, 1)", self.r),
            });
        }
        if !(self.c >= 0.0) || !self.c.is_finite() {
            return Err(ModelError::InvalidParameter {
                name: "c",
                reason: format!("{} is not a finite nonnegative commission", self.c),
            });
        }
        Ok(())
    }

    /// Seller payoff of a completed sale by a good seller.
    pub fn good_sale_payoff(&self) -> f64 {
        self.r - self.c
    }

    /// Seller payoff of a completed sale by a bad seller.
    pub fn bad_sale_payoff(&self) -> f64 {
        1.0 - self.c
    }
}

/// True- and false-positive rates of the reputation system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalPolicy {
    pub alpha: f64,
    pub beta: f64,
}

impl SignalPolicy {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        let policy = Self { alpha, beta };
        policy.validate()?;
        Ok(policy)
    }

    pub fn validate(&self) -> Result<()> {
        check_probability("alpha", self.alpha)?;
        check_probability("beta", self.beta)
    }

    /// The same classifier with its two labels swapped.
    pub fn flipped(&self) -> Self {
        Self {
            alpha: 1.0 - self.alpha,
            beta: 1.0 - self.beta,
        }
    }

    /// Probability that a seller drawn from a population with good share `xi`
    /// is shown `signal`.
    pub fn signal_probability(&self, signal: Signal, xi: f64) -> f64 {
        let good = (self.alpha - self.beta) * xi + self.beta;
        match signal {
            Signal::Good => good,
            Signal::Bad => 1.0 - good,
        }
    }

    /// Probability that a seller of the given active type is shown `signal`.
    pub fn emission(&self, seller_good: bool, signal: Signal) -> f64 {
        let p_good = if seller_good { self.alpha } else { self.beta };
        match signal {
            Signal::Good => p_good,
            Signal::Bad => 1.0 - p_good,
        }
    }
}

/// Rating displayed next to a seller.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Signal {
    /// The "good" rating.
    Good,
    /// The "bad" rating.
    Bad,
}

impl Signal {
    pub const ALL: [Signal; 2] = [Signal::Good, Signal::Bad];
}

/// Population shares of good, bad and inactive sellers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SellerDistribution {
    pub good: f64,
    pub bad: f64,
    pub inactive: f64,
}

impl SellerDistribution {
    pub fn new(good: f64, bad: f64, inactive: f64) -> Result<Self> {
        let dist = Self { good, bad, inactive };
        dist.validate()?;
        Ok(dist)
    }

    /// Builds the distribution from the good and inactive shares, deriving the
    /// bad share from the simplex constraint.
    pub fn from_good_inactive(good: f64, inactive: f64) -> Self {
        Self {
            good,
            bad: (1.0 - good - inactive).max(0.0),
            inactive,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_probability("x_good", self.good)?;
        check_probability("x_bad", self.bad)?;
        check_probability("x_inactive", self.inactive)?;
        let sum = self.good + self.bad + self.inactive;
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(ModelError::InvalidParameter {
                name: "seller distribution",
                reason: format!("shares sum to {sum}, not 1"),
            });
        }
        Ok(())
    }

    pub fn active(&self) -> f64 {
        self.good + self.bad
    }

    /// Share of good sellers among active ones; `None` when nobody is active.
    pub fn xi(&self) -> Option<f64> {
        let active = self.active();
        (active > 0.0).then(|| self.good / active)
    }
}

/// Purchase thresholds on `xi` for each rating.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Buyers shown the good rating purchase when `xi` exceeds this value.
    pub good_signal: f64,
    /// Buyers shown the bad rating purchase when `xi` exceeds this value.
    pub bad_signal: f64,
}

impl Thresholds {
    pub fn for_signal(&self, signal: Signal) -> f64 {
        match signal {
            Signal::Good => self.good_signal,
            Signal::Bad => self.bad_signal,
        }
    }
}

/// Expected per-transaction payoffs of the three seller types.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SellerPayoffs {
    pub good: f64,
    pub bad: f64,
}

impl SellerPayoffs {
    /// Inactive sellers never trade.
    pub const fn inactive(&self) -> f64 {
        0.0
    }

    pub fn difference(&self) -> f64 {
        self.good - self.bad
    }
}

/// Orients a policy so that the good rating is the more likely one for good
/// sellers. Returns the oriented policy and whether the labels were swapped.
/// Ties keep their orientation.
pub fn canonicalize(policy: SignalPolicy) -> (SignalPolicy, bool) {
    if policy.alpha >= policy.beta {
        (policy, false)
    } else {
        (policy.flipped(), true)
    }
}

/// Posterior probability that the matched seller is good after observing
/// `signal`.
pub fn posterior_good(signal: Signal, policy: SignalPolicy, xi: f64) -> Result<f64> {
    let joint = policy.emission(true, signal) * xi;
    let marginal = policy.signal_probability(signal, xi);
    if marginal <= 0.0 {
        return Err(ModelError::UndefinedPosterior { signal, xi });
    }
    Ok((joint / marginal).clamp(0.0, 1.0))
}

/// Buyer's expected payoff from purchasing after observing `signal`.
pub fn expected_buyer_payoff(signal: Signal, params: MarketParams, policy: SignalPolicy, xi: f64) -> Result<f64> {
    let p = posterior_good(signal, policy, xi)?;
    Ok(params.r * p - (1.0 - p))
}

/// Shares of good sellers above which buyers purchase, one per rating.
pub fn thresholds(params: MarketParams, policy: SignalPolicy) -> Result<Thresholds> {
    let SignalPolicy { alpha, beta } = policy;
    let good_den = params.r * alpha + beta;
    let bad_den = params.r * (1.0 - alpha) + (1.0 - beta);
    if good_den <= 0.0 || bad_den <= 0.0 {
        return Err(ModelError::DegeneratePolicy { alpha, beta });
    }
    Ok(Thresholds {
        good_signal: beta / good_den,
        bad_signal: (1.0 - beta) / bad_den,
    })
}

/// Thresholds that are defined for every policy. When one rating is never
/// shown its threshold is replaced by the other one; the replaced branch
/// carries zero probability weight wherever it is used.
pub(crate) fn effective_thresholds(params: MarketParams, policy: SignalPolicy) -> Thresholds {
    thresholds(params, policy).unwrap_or_else(|_| {
        let t = 1.0 / (1.0 + params.r);
        Thresholds {
            good_signal: t,
            bad_signal: t,
        }
    })
}

/// Probability that a buyer shown `signal` purchases: 1 above the threshold,
/// 1/2 on it and 0 below.
pub fn purchase_probability(signal: Signal, xi: f64, th: &Thresholds) -> f64 {
    let t = th.for_signal(signal);
    if (xi - t).abs() <= THRESHOLD_TOLERANCE {
        0.5
    } else if xi > t {
        1.0
    } else {
        0.0
    }
}

/// Expected per-transaction payoffs of good and bad sellers at share `xi`.
///
/// Each seller type earns its sale payoff weighted by the probability of each
/// rating and the buyers' purchase probability under that rating. This covers
/// both orderings of `alpha` and `beta` and the half-purchase rows on the
/// thresholds.
pub fn seller_payoffs(params: MarketParams, policy: SignalPolicy, xi: f64) -> Result<SellerPayoffs> {
    let th = thresholds(params, policy)?;
    Ok(payoffs_with(params, policy, xi, &th))
}

/// [`seller_payoffs`] for any policy, including the degenerate corners.
pub(crate) fn seller_payoffs_total(params: MarketParams, policy: SignalPolicy, xi: f64) -> SellerPayoffs {
    let th = effective_thresholds(params, policy);
    payoffs_with(params, policy, xi, &th)
}

fn payoffs_with(params: MarketParams, policy: SignalPolicy, xi: f64, th: &Thresholds) -> SellerPayoffs {
    let buy_good = purchase_probability(Signal::Good, xi, th);
    let buy_bad = purchase_probability(Signal::Bad, xi, th);
    let sale_rate = |p_good_signal: f64| p_good_signal * buy_good + (1.0 - p_good_signal) * buy_bad;
    SellerPayoffs {
        good: params.good_sale_payoff() * sale_rate(policy.alpha),
        bad: params.bad_sale_payoff() * sale_rate(policy.beta),
    }
}

/// Payoff advantage of good over bad sellers at share `xi`.
pub fn payoff_difference(params: MarketParams, policy: SignalPolicy, xi: f64) -> Result<f64> {
    seller_payoffs(params, policy, xi).map(|p| p.difference())
}

/// Left-hand and right-hand sides of the interior-equilibrium condition
/// `alpha (r - c) > beta (1 - c)` for an already oriented policy.
pub(crate) fn feasibility_sides(params: MarketParams, policy: SignalPolicy) -> (f64, f64) {
    (
        policy.alpha * params.good_sale_payoff(),
        policy.beta * params.bad_sale_payoff(),
    )
}

/// Whether good and bad sellers coexist at a stable interior equilibrium.
/// The condition is strict and evaluated on the canonical orientation.
pub fn is_feasible(params: MarketParams, policy: SignalPolicy) -> bool {
    let (canonical, _) = canonicalize(policy);
    let (lhs, rhs) = feasibility_sides(params, canonical);
    params.r > params.c && lhs > rhs
}
