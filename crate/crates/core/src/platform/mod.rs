//! Platform economics: commission revenue at the market equilibrium, the cost
//! of running a reputation system more accurate than its natural level, and
//! the resulting profit.

pub mod hull;
mod optimize;

use serde::{Deserialize, Serialize};

use self::hull::ConvexRegion;
pub use self::optimize::{optimize_signals, optimize_with_commission, Optimum, DEFAULT_RESOLUTION};
use crate::error::{check_probability, ModelError, Result};
use crate::market::{canonicalize, is_feasible, MarketParams, SignalPolicy};

/// Cost of signal accuracy.
///
/// Accuracy pairs in the convex hull of `(0, 0)`, `(1, 1)`, the natural
/// accuracy `(alpha0, beta0)` and its label-swapped twin are free, since any
/// of them is reachable by randomizing between free classifiers. Outside the
/// hull the cost is `kappa d^p / (alpha beta (1 - alpha) (1 - beta))^q` where
/// `d` is the distance to the hull.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub alpha0: f64,
    pub beta0: f64,
    pub kappa: f64,
    pub p: f64,
    pub q: f64,
}

impl CostModel {
    pub fn new(alpha0: f64, beta0: f64, kappa: f64, p: f64, q: f64) -> Result<Self> {
        let model = Self {
            alpha0,
            beta0,
            kappa,
            p,
            q,
        };
        model.validate()?;
        Ok(model)
    }

    /// A model under which every policy is free.
    pub fn costless() -> Self {
        Self {
            alpha0: 0.5,
            beta0: 0.5,
            kappa: 0.0,
            p: 1.0,
            q: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_probability("alpha0", self.alpha0)?;
        check_probability("beta0", self.beta0)?;
        let invalid = |name, reason: &str| {
            Err(ModelError::InvalidParameter {
                name,
                reason: reason.to_string(),
            })
        };
        if !(self.kappa >= 0.0) || !self.kappa.is_finite() {
            return invalid("kappa", "must be finite and nonnegative");
        }
        if !(self.p >= 1.0) || !self.p.is_finite() {
            return invalid("p", "must be at least 1");
        }
        if !(self.q > 0.0 && self.q <= 1.0) {
            return invalid("q", "must lie in (0, 1]");
        }
        Ok(())
    }

    /// The cost-free region.
    pub fn free_region(&self) -> ConvexRegion {
        ConvexRegion::hull_of(&[
            (0.0, 0.0),
            (self.alpha0, self.beta0),
            (1.0, 1.0),
            (1.0 - self.alpha0, 1.0 - self.beta0),
        ])
    }

    pub fn natural_policy(&self) -> SignalPolicy {
        SignalPolicy {
            alpha: self.alpha0,
            beta: self.beta0,
        }
    }
}

/// Revenue, cost and profit of one policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfitReport {
    pub revenue: f64,
    pub cost: f64,
    pub profit: f64,
    pub feasible: bool,
}

/// Largest false-positive rate compatible with positive revenue,
/// `alpha (r - c) / (1 - c)`, clamped to `[0, 1]`.
pub fn beta_bar(params: MarketParams, alpha: f64) -> Result<f64> {
    if params.c >= 1.0 {
        return Err(ModelError::CommissionTooLarge(params.c));
    }
    Ok((alpha * params.good_sale_payoff() / params.bad_sale_payoff()).clamp(0.0, 1.0))
}

/// Commission revenue per buyer visit at the stable equilibrium; zero when no
/// interior equilibrium exists.
///
/// At equilibrium `xi` sits on the bad-rating threshold, so good-rated sellers
/// always sell and bad-rated ones sell half the time.
pub fn revenue(params: MarketParams, policy: SignalPolicy) -> f64 {
    if !is_feasible(params, policy) {
        return 0.0;
    }
    let (SignalPolicy { alpha, beta }, _) = canonicalize(policy);
    let MarketParams { r, c } = params;
    let num = 2.0 * (1.0 - alpha) * c * r + (1.0 - beta) * c * (2.0 - (1.0 - alpha) * (1.0 + r));
    let den = 2.0 * ((1.0 - alpha) * r + (1.0 - beta));
    num / den
}

/// Partial derivatives of [`revenue`] with respect to `alpha` and `beta`.
///
/// Both are nonnegative for `alpha > beta`; for the label-swapped orientation
/// the signs reverse.
pub fn revenue_gradient(params: MarketParams, policy: SignalPolicy) -> Result<(f64, f64)> {
    if !is_feasible(params, policy) {
        return Err(ModelError::InfeasiblePoint {
            alpha: policy.alpha,
            beta: policy.beta,
        });
    }
    let (SignalPolicy { alpha, beta }, flipped) = canonicalize(policy);
    let MarketParams { r, c } = params;
    let den = 2.0 * ((1.0 - beta) + (1.0 - alpha) * r).powi(2);
    let d_alpha = (1.0 - beta).powi(2) * c * (1.0 + r) / den;
    let d_beta = (1.0 - alpha).powi(2) * c * r * (1.0 + r) / den;
    let sign = if flipped { -1.0 } else { 1.0 };
    Ok((sign * d_alpha, sign * d_beta))
}

/// Distance from a policy to the cost-free region (zero inside it).
pub fn hull_distance(policy: SignalPolicy, cost_model: &CostModel) -> f64 {
    cost_model.free_region().distance((policy.alpha, policy.beta))
}

/// Cost of operating a reputation system with the given accuracy.
pub fn signal_cost(policy: SignalPolicy, cost_model: &CostModel) -> f64 {
    cost_with(policy, cost_model, &cost_model.free_region())
}

pub(crate) fn cost_with(policy: SignalPolicy, model: &CostModel, region: &ConvexRegion) -> f64 {
    let d = region.distance((policy.alpha, policy.beta));
    if d == 0.0 || model.kappa == 0.0 {
        return 0.0;
    }
    let SignalPolicy { alpha, beta } = policy;
    let spread = alpha * beta * (1.0 - alpha) * (1.0 - beta);
    if spread <= 0.0 {
        return f64::INFINITY;
    }
    model.kappa * d.powf(model.p) / spread.powf(model.q)
}

/// Revenue net of signalling cost. Infeasible policies earn nothing but still
/// pay for their accuracy.
pub fn profit(params: MarketParams, policy: SignalPolicy, cost_model: &CostModel) -> ProfitReport {
    profit_with(params, policy, cost_model, &cost_model.free_region())
}

pub(crate) fn profit_with(
    params: MarketParams,
    policy: SignalPolicy,
    model: &CostModel,
    region: &ConvexRegion,
) -> ProfitReport {
    let revenue = revenue(params, policy);
    let cost = cost_with(policy, model, region);
    ProfitReport {
        revenue,
        cost,
        profit: revenue - cost,
        feasible: is_feasible(params, policy),
    }
}
