//! Finite-population stochastic market.
//!
//! `N` sellers play period after period. At the start of a period each active
//! seller receives a rating, then a Poisson number of buyer visits with mean
//! `lambda_per_seller`. Buyers know the current share of good sellers among
//! active ones and buy when the expected payoff under the displayed rating is
//! positive (a fair coin decides when it is exactly zero). At the end of the
//! period one focal seller compares its average per-sale payoff with a second,
//! randomly drawn seller and adopts that seller's type with the Fermi
//! probability `1 / (1 + exp(sigma (pi_focal - pi_other)))`.
//!
//! In the limit of many sellers the type shares follow the replicator
//! dynamics of [`crate::dynamics`], which the quasi-stationary statistics of
//! [`quasi_stationary`] let us check empirically.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::market::{
    effective_thresholds, purchase_probability, MarketParams, SellerDistribution, Signal, SignalPolicy, Thresholds,
};

/// How random quantities of a period are drawn.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    /// One draw per seller and per quantity, in seller-index order: all
    /// ratings, then all visit counts, then the purchase coins, then the
    /// imitation step.
    PerSeller,
    /// Draws the focal and model sellers first, simulates those two
    /// individually and the rest of the population by (type, rating) group
    /// totals. Same law for everything recorded, at constant cost per period.
    #[default]
    Aggregated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_sellers: u32,
    /// Expected buyer visits per active seller per period.
    pub lambda_per_seller: f64,
    /// Selection strength of the Fermi imitation rule.
    pub sigma: f64,
    pub periods: u64,
    pub seed: u64,
    /// Initial shares, rounded to seller counts.
    pub initial: SellerDistribution,
    #[serde(default)]
    pub sampling: Sampling,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let invalid = |name, reason: String| Err(ModelError::InvalidParameter { name, reason });
        if self.n_sellers < 2 {
            return invalid("n_sellers", format!("{} is below 2", self.n_sellers));
        }
        if !(self.lambda_per_seller > 0.0) || !self.lambda_per_seller.is_finite() {
            return invalid(
                "lambda_per_seller",
                format!("{} is not positive", self.lambda_per_seller),
            );
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return invalid("sigma", format!("{} is negative", self.sigma));
        }
        self.initial.validate()
    }

    /// Initial seller counts `(good, bad, inactive)`.
    pub fn initial_counts(&self) -> Counts {
        let n = self.n_sellers;
        let round = |x: f64| ((x * n as f64).round() as u32).min(n);
        let good = round(self.initial.good);
        let inactive = round(self.initial.inactive).min(n - good);
        Counts {
            good,
            bad: n - good - inactive,
            inactive,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub good: u32,
    pub bad: u32,
    pub inactive: u32,
}

impl Counts {
    pub fn total(&self) -> u32 {
        self.good + self.bad + self.inactive
    }

    pub fn xi(&self) -> Option<f64> {
        let active = self.good + self.bad;
        (active > 0).then(|| self.good as f64 / active as f64)
    }

    fn get(&self, t: SellerType) -> u32 {
        match t {
            SellerType::Good => self.good,
            SellerType::Bad => self.bad,
            SellerType::Inactive => self.inactive,
        }
    }

    fn slot(&mut self, t: SellerType) -> &mut u32 {
        match t {
            SellerType::Good => &mut self.good,
            SellerType::Bad => &mut self.bad,
            SellerType::Inactive => &mut self.inactive,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SellerType {
    Good,
    Bad,
    Inactive,
}

/// One period: the counts it started from and the sales it produced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimRecord {
    pub period: u64,
    pub counts: Counts,
    pub xi: Option<f64>,
    pub sales_good: u64,
    pub sales_bad: u64,
    pub revenue: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTrajectory {
    pub records: Vec<SimRecord>,
    /// Counts after the last imitation step.
    pub final_counts: Counts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuasiStationarySummary {
    pub mode_xi: f64,
    /// Counts of `xi` per bin of equal width on `[0, 1]`.
    pub histogram: Vec<u64>,
    /// Period range `[start, end)` analysed.
    pub window: (u64, u64),
    pub extinct_good: bool,
}

/// Probability that a focal seller with payoff `pi_focal` adopts the type of
/// a seller with payoff `pi_other`.
pub fn fermi_switch_probability(pi_focal: f64, pi_other: f64, sigma: f64) -> f64 {
    1.0 / (1.0 + (sigma * (pi_focal - pi_other)).exp())
}

/// Selection strength rescaled for the chance that a seller makes no sale in
/// a period, `sigma / (1 - exp(-lambda))`.
pub fn effective_sigma(sigma: f64, lambda_per_seller: f64) -> f64 {
    sigma / (1.0 - (-lambda_per_seller).exp())
}

/// Outcome of one active seller's period.
#[derive(Debug, Clone, Copy)]
struct Ledger {
    sales: u64,
}

struct Period<'a> {
    params: MarketParams,
    policy: SignalPolicy,
    th: Thresholds,
    xi: Option<f64>,
    lambda: f64,
    sigma: f64,
    rng: &'a mut ChaCha8Rng,
}

impl Period<'_> {
    fn buy_probability(&self, signal: Signal) -> f64 {
        self.xi.map_or(0.0, |xi| purchase_probability(signal, xi, &self.th))
    }

    fn signal_for(&mut self, t: SellerType) -> Signal {
        let p = match t {
            SellerType::Good => self.policy.alpha,
            _ => self.policy.beta,
        };
        if self.rng.random_bool(p) {
            Signal::Good
        } else {
            Signal::Bad
        }
    }

    fn visits(&mut self, mean: f64) -> u64 {
        if mean <= 0.0 {
            return 0;
        }
        Poisson::new(mean).expect("positive mean").sample(self.rng) as u64
    }

    fn sales(&mut self, visits: u64, signal: Signal) -> u64 {
        let p = self.buy_probability(signal);
        if p >= 1.0 {
            visits
        } else if p <= 0.0 || visits == 0 {
            0
        } else {
            Binomial::new(visits, p).expect("valid binomial").sample(self.rng)
        }
    }

    /// Average per-sale payoff, zero without sales.
    fn payoff(&self, t: SellerType, sales: u64) -> f64 {
        match t {
            _ if sales == 0 => 0.0,
            SellerType::Good => self.params.good_sale_payoff(),
            SellerType::Bad => self.params.bad_sale_payoff(),
            SellerType::Inactive => 0.0,
        }
    }

    /// Simulates one individual seller.
    fn individual(&mut self, t: SellerType) -> u64 {
        if t == SellerType::Inactive {
            return 0;
        }
        let signal = self.signal_for(t);
        let visits = self.visits(self.lambda);
        self.sales(visits, signal)
    }
}

/// Runs the stochastic market for `config.periods` periods.
pub fn run(config: &SimConfig, params: MarketParams, policy: SignalPolicy) -> Result<SimTrajectory> {
    config.validate()?;
    params.validate()?;
    policy.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let th = effective_thresholds(params, policy);
    let counts = config.initial_counts();
    let mut records = Vec::with_capacity(config.periods as usize);

    let final_counts = match config.sampling {
        Sampling::PerSeller => {
            let mut types: Vec<SellerType> = std::iter::repeat_n(SellerType::Good, counts.good as usize)
                .chain(std::iter::repeat_n(SellerType::Bad, counts.bad as usize))
                .chain(std::iter::repeat_n(SellerType::Inactive, counts.inactive as usize))
                .collect();
            let mut counts = counts;
            for period in 0..config.periods {
                let mut p = Period {
                    params,
                    policy,
                    th,
                    xi: counts.xi(),
                    lambda: config.lambda_per_seller,
                    sigma: config.sigma,
                    rng: &mut rng,
                };
                let (record, pair) = per_seller_period(&mut p, &types, period, counts);
                records.push(record);
                if let Some((focal, model)) = pair {
                    *counts.slot(types[focal]) -= 1;
                    *counts.slot(types[model]) += 1;
                    types[focal] = types[model];
                }
            }
            counts
        }
        Sampling::Aggregated => {
            let mut counts = counts;
            for period in 0..config.periods {
                let mut p = Period {
                    params,
                    policy,
                    th,
                    xi: counts.xi(),
                    lambda: config.lambda_per_seller,
                    sigma: config.sigma,
                    rng: &mut rng,
                };
                let (record, switch) = aggregated_period(&mut p, counts, period);
                records.push(record);
                if let Some((from, to)) = switch {
                    *counts.slot(from) -= 1;
                    *counts.slot(to) += 1;
                }
            }
            counts
        }
    };

    Ok(SimTrajectory { records, final_counts })
}

fn record(p: &Period<'_>, period: u64, counts: Counts, sales_good: u64, sales_bad: u64) -> SimRecord {
    SimRecord {
        period,
        counts,
        xi: counts.xi(),
        sales_good,
        sales_bad,
        revenue: p.params.c * (sales_good + sales_bad) as f64,
    }
}

/// Returns the period record and, when the focal seller switches, the
/// indices of the focal and model sellers.
fn per_seller_period(
    p: &mut Period<'_>,
    types: &[SellerType],
    period: u64,
    counts: Counts,
) -> (SimRecord, Option<(usize, usize)>) {
    let n = types.len();
    let signals: Vec<Option<Signal>> = types
        .iter()
        .map(|&t| (t != SellerType::Inactive).then(|| p.signal_for(t)))
        .collect();
    let visits: Vec<u64> = signals
        .iter()
        .map(|s| if s.is_some() { p.visits(p.lambda) } else { 0 })
        .collect();
    let ledgers: Vec<Ledger> = signals
        .iter()
        .zip(&visits)
        .map(|(s, &v)| Ledger {
            sales: s.map_or(0, |s| p.sales(v, s)),
        })
        .collect();

    let (mut sales_good, mut sales_bad) = (0, 0);
    for (t, l) in types.iter().zip(&ledgers) {
        match t {
            SellerType::Good => sales_good += l.sales,
            SellerType::Bad => sales_bad += l.sales,
            SellerType::Inactive => {}
        }
    }
    let rec = record(p, period, counts, sales_good, sales_bad);

    let focal = p.rng.random_range(0..n);
    let mut model = p.rng.random_range(0..n - 1);
    if model >= focal {
        model += 1;
    }
    let pi_focal = p.payoff(types[focal], ledgers[focal].sales);
    let pi_model = p.payoff(types[model], ledgers[model].sales);
    let switch = p
        .rng
        .random_bool(fermi_switch_probability(pi_focal, pi_model, p.sigma).clamp(0.0, 1.0));
    (rec, switch.then_some((focal, model)))
}

/// Returns the period record and, when the focal seller switches, its old and
/// new type.
fn aggregated_period(p: &mut Period<'_>, counts: Counts, period: u64) -> (SimRecord, Option<(SellerType, SellerType)>) {
    let n = counts.total();
    let pick = |rng: &mut ChaCha8Rng, c: &Counts, total: u32| {
        let u = rng.random_range(0..total);
        if u < c.good {
            SellerType::Good
        } else if u < c.good + c.bad {
            SellerType::Bad
        } else {
            SellerType::Inactive
        }
    };
    let focal = pick(p.rng, &counts, n);
    let mut rest = counts;
    *rest.slot(focal) -= 1;
    let model = pick(p.rng, &rest, n - 1);
    *rest.slot(model) -= 1;

    let focal_sales = p.individual(focal);
    let model_sales = p.individual(model);

    let group_sales = |p: &mut Period<'_>, t: SellerType| -> u64 {
        let size = rest.get(t) as u64;
        if size == 0 || t == SellerType::Inactive {
            return 0;
        }
        let rate = match t {
            SellerType::Good => p.policy.alpha,
            _ => p.policy.beta,
        };
        let good_rated = Binomial::new(size, rate).expect("valid binomial").sample(p.rng);
        let mut total = 0;
        for (signal, k) in [(Signal::Good, good_rated), (Signal::Bad, size - good_rated)] {
            let visits = p.visits(p.lambda * k as f64);
            total += p.sales(visits, signal);
        }
        total
    };
    let mut sales_good = group_sales(p, SellerType::Good);
    let mut sales_bad = group_sales(p, SellerType::Bad);
    for (t, s) in [(focal, focal_sales), (model, model_sales)] {
        match t {
            SellerType::Good => sales_good += s,
            SellerType::Bad => sales_bad += s,
            SellerType::Inactive => {}
        }
    }
    let rec = record(p, period, counts, sales_good, sales_bad);

    let prob = fermi_switch_probability(p.payoff(focal, focal_sales), p.payoff(model, model_sales), p.sigma);
    let switch = p.rng.random_bool(prob.clamp(0.0, 1.0)) && focal != model;
    (rec, switch.then_some((focal, model)))
}

/// Histogram of `xi` over the last quarter of the run and its mode.
pub fn quasi_stationary(traj: &SimTrajectory, bins: usize) -> Result<QuasiStationarySummary> {
    let len = traj.records.len();
    if len < 4 || bins == 0 {
        return Err(ModelError::EmptyWindow);
    }
    let start = len - len / 4;
    let mut histogram = vec![0u64; bins];
    let mut seen = false;
    for rec in &traj.records[start..] {
        if let Some(xi) = rec.xi {
            let idx = ((xi * bins as f64).floor() as usize).min(bins - 1);
            histogram[idx] += 1;
            seen = true;
        }
    }
    if !seen {
        return Err(ModelError::EmptyWindow);
    }
    let (best, _) = histogram
        .iter()
        .enumerate()
        .fold((0usize, 0u64), |acc, (i, &c)| if c > acc.1 { (i, c) } else { acc });
    Ok(QuasiStationarySummary {
        mode_xi: (best as f64 + 0.5) / bins as f64,
        histogram,
        window: (traj.records[start].period, traj.records[len - 1].period + 1),
        extinct_good: traj.final_counts.good == 0,
    })
}
