//! A trust-game market in which buyers rely on ratings issued by a for-profit
//! reputation platform.
//!
//! Sellers are either good, bad, or inactive. The platform shows each active
//! seller a good or bad rating: good sellers get a good rating with
//! probability `alpha`, bad sellers with probability `beta`. Buyers update
//! their belief about the seller and buy when the expected payoff is
//! positive. Seller types evolve by imitation of more successful types.
//!
//! - [`market`]: buyer inference, purchase decisions and seller payoffs.
//! - [`dynamics`]: the replicator flow, its discontinuous right-hand side and
//!   the stable equilibrium.
//! - [`platform`]: commission revenue, the cost of accuracy and profit
//!   maximization.
//! - [`welfare`]: buyer and seller utility at equilibrium.
//! - [`abm`]: a finite-population stochastic version of the market.
//!
//! ```
//! use repmarket::{stable_equilibrium, MarketParams, SignalPolicy};
//!
//! let params = MarketParams::new(0.85, 0.72)?;
//! let policy = SignalPolicy::new(0.6, 0.2)?;
//! let eq = stable_equilibrium(params, policy);
//! assert!((eq.xi_star.unwrap() - 0.8 / 1.14).abs() < 1e-12);
//! # Ok::<(), repmarket::ModelError>(())
//! ```

// `!(x > 0.0)` also rejects NaN, which is the point.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod abm;
pub mod dynamics;
mod error;
pub mod market;
pub mod platform;
pub mod welfare;

pub use crate::dynamics::{integrate, stable_equilibrium, EquilibriumKind, EquilibriumResult, Trajectory};
pub use crate::error::{ModelError, Result};
pub use crate::market::{MarketParams, SellerDistribution, Signal, SignalPolicy, Thresholds};
pub use crate::platform::{profit, revenue, CostModel, Optimum};
pub use crate::welfare::{welfare, WelfareReport};
