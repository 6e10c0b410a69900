//! Utility of buyers and sellers at the stable market equilibrium.

use serde::{Deserialize, Serialize};

use crate::dynamics::{stable_equilibrium, EquilibriumResult};
use crate::error::{ModelError, Result};
use crate::market::{canonicalize, MarketParams, SignalPolicy};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelfareReport {
    /// Expected buyer payoff per visit, counting visits without a purchase.
    pub u_buyer: f64,
    /// Population-average seller payoff.
    pub u_seller: f64,
    /// Contribution of good sellers to `u_seller`.
    pub u_good_seller: f64,
    pub equilibrium: EquilibriumResult,
}

/// Partial derivatives `(d/d alpha, d/d beta)` of the three utilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelfareGradients {
    pub buyer: (f64, f64),
    pub seller: (f64, f64),
    pub good_seller: (f64, f64),
}

/// Utilities at the stable equilibrium; all zero when no trade takes place.
pub fn welfare(params: MarketParams, policy: SignalPolicy) -> WelfareReport {
    let equilibrium = stable_equilibrium(params, policy);
    if !equilibrium.is_interior() {
        return WelfareReport {
            u_buyer: 0.0,
            u_seller: 0.0,
            u_good_seller: 0.0,
            equilibrium,
        };
    }
    let (SignalPolicy { alpha, beta }, _) = canonicalize(policy);
    let MarketParams { r, c } = params;
    let den = r * (1.0 - alpha) + (1.0 - beta);
    let u_seller =
        0.5 * ((1.0 - beta) * ((1.0 + alpha) * (r - c) - (1.0 + beta) * (1.0 - c)) / den + (1.0 + beta) * (1.0 - c));
    let u_buyer = 0.5 * ((1.0 - beta) * ((1.0 + alpha) * r + (1.0 + beta)) / den - (1.0 + beta));
    let u_good_seller = (1.0 - beta) * (1.0 + alpha) * (r - c) / (2.0 * den);
    WelfareReport {
        u_buyer,
        u_seller,
        u_good_seller,
        equilibrium,
    }
}

/// Closed-form partial derivatives of the utilities with respect to the
/// signal rates. For the label-swapped orientation every sign reverses.
pub fn welfare_gradients(params: MarketParams, policy: SignalPolicy) -> Result<WelfareGradients> {
    if !stable_equilibrium(params, policy).is_interior() {
        return Err(ModelError::InfeasiblePoint {
            alpha: policy.alpha,
            beta: policy.beta,
        });
    }
    let (SignalPolicy { alpha, beta }, flipped) = canonicalize(policy);
    let MarketParams { r, c } = params;
    let den = r * (1.0 - alpha) + (1.0 - beta);
    let den2 = den * den;

    let buyer = (
        (1.0 - beta) * r * (1.0 + r) / den2,
        -(1.0 - alpha) * r * (1.0 + r) / den2,
    );
    let seller = (
        -(1.0 - beta) * ((1.0 - beta) * c * (1.0 + r) - 2.0 * r * (r - beta)) / (2.0 * den2),
        (1.0 - alpha) * r * (2.0 * (1.0 - alpha * r) - (1.0 - alpha) * c * (1.0 + r)) / (2.0 * den2),
    );
    let good_seller = (
        (1.0 - beta) * (1.0 - beta + 2.0 * r) * (r - c) / (2.0 * den2),
        -(1.0 - alpha) * (1.0 + alpha) * r * (r - c) / (2.0 * den2),
    );

    let s = if flipped { -1.0 } else { 1.0 };
    let signed = |(a, b): (f64, f64)| (s * a, s * b);
    Ok(WelfareGradients {
        buyer: signed(buyer),
        seller: signed(seller),
        good_seller: signed(good_seller),
    })
}

/// Whether `d u_seller / d alpha` is guaranteed negative by the closed-form
/// sufficient condition: `c > 2 r^2 / (1 + r)`, or otherwise both rates above
/// `(c (1 + r) - 2 r^2) / (c (1 + r) - 2 r)`.
pub fn seller_utility_decreases_in_alpha(params: MarketParams, policy: SignalPolicy) -> bool {
    let MarketParams { r, c } = params;
    let bound = 2.0 * r * r / (1.0 + r);
    if c > bound {
        return true;
    }
    let level = (c * (1.0 + r) - 2.0 * r * r) / (c * (1.0 + r) - 2.0 * r);
    policy.alpha > level && policy.beta > level
}
