use std::path::PathBuf;

use rayon::prelude::*;
use repmarket::abm::{quasi_stationary, run, SimConfig};
use repmarket::market::{payoff_difference, seller_payoffs};
use repmarket::platform::{optimize_signals, optimize_with_commission};
use repmarket::{
    integrate, profit, stable_equilibrium, welfare, CostModel, EquilibriumKind, MarketParams, SignalPolicy, Thresholds,
};
use serde::Serialize;

use crate::config::{config_err, model_err, required, CliResult, ExperimentConfig};
use crate::output::{num, opt_num, write_csv, write_json};

#[derive(Debug, Serialize)]
pub struct EquilibriumDoc {
    pub kind: EquilibriumKind,
    pub xi_star: Option<f64>,
    pub thresholds: Thresholds,
    pub pi_good: f64,
    pub pi_bad: f64,
    pub revenue: f64,
    pub cost: f64,
    pub profit: f64,
    pub u_buyer: f64,
    pub u_seller: f64,
    pub u_good_seller: f64,
}

pub fn equilibrium(cfg: &ExperimentConfig) -> CliResult<()> {
    let params = cfg.market()?;
    let policy = cfg.policy()?;
    let model = cfg.cost_or_free()?;
    let eq = stable_equilibrium(params, policy);
    let (pi_good, pi_bad) = match eq.xi_star {
        Some(xi) if eq.is_interior() => {
            let p = seller_payoffs(params, policy, xi).map_err(model_err("policy"))?;
            (p.good, p.bad)
        }
        _ => (0.0, 0.0),
    };
    let report = profit(params, policy, &model);
    let w = welfare(params, policy);
    let doc = EquilibriumDoc {
        kind: eq.kind,
        xi_star: eq.xi_star,
        thresholds: eq.thresholds,
        pi_good,
        pi_bad,
        revenue: report.revenue,
        cost: report.cost,
        profit: report.profit,
        u_buyer: w.u_buyer,
        u_seller: w.u_seller,
        u_good_seller: w.u_good_seller,
    };
    write_json(cfg.out.as_deref(), &doc)
}

const SWEEP_AXES: [&str; 6] = ["alpha", "beta", "xi", "r", "kappa", "s"];
const SWEEP_QUANTITIES: [&str; 9] = [
    "revenue",
    "cost",
    "profit",
    "feasible",
    "u_buyer",
    "u_seller",
    "u_good_seller",
    "delta",
    "xi_star",
];

#[derive(Debug, Clone, Copy)]
struct Point {
    params: MarketParams,
    policy: SignalPolicy,
    model: CostModel,
    xi: Option<f64>,
}

impl Point {
    fn set(&mut self, axis: &str, v: f64) {
        match axis {
            "alpha" => self.policy.alpha = v,
            "beta" => self.policy.beta = v,
            "xi" => self.xi = Some(v),
            "r" => self.params.r = v,
            "kappa" => self.model.kappa = v,
            "s" => {}
            _ => unreachable!("axis names are checked up front"),
        }
    }

    fn validate(&self) -> CliResult<()> {
        self.params.validate().map_err(model_err("market"))?;
        self.policy.validate().map_err(model_err("policy"))?;
        self.model.validate().map_err(model_err("cost"))?;
        if let Some(xi) = self.xi {
            if !(0.0..=1.0).contains(&xi) {
                return Err(config_err(format!("sweep.xi: {xi} is not a share in [0, 1]")));
            }
        }
        Ok(())
    }

    fn quantity(&self, name: &str) -> String {
        let report = || profit(self.params, self.policy, &self.model);
        let w = || welfare(self.params, self.policy);
        match name {
            "revenue" => num(report().revenue),
            "cost" => num(report().cost),
            "profit" => num(report().profit),
            "feasible" => report().feasible.to_string(),
            "u_buyer" => num(w().u_buyer),
            "u_seller" => num(w().u_seller),
            "u_good_seller" => num(w().u_good_seller),
            "delta" => {
                let xi = self.xi.expect("checked up front");
                opt_num(payoff_difference(self.params, self.policy, xi).ok())
            }
            "xi_star" => opt_num(stable_equilibrium(self.params, self.policy).xi_star),
            _ => unreachable!("quantity names are checked up front"),
        }
    }
}

pub fn sweep(cfg: &ExperimentConfig) -> CliResult<()> {
    let sw = required(&cfg.sweep, "sweep")?;
    let axes = [sw.x.axis.as_str(), sw.y.axis.as_str()];
    for (key, axis) in ["sweep.x.axis", "sweep.y.axis"].iter().zip(axes) {
        if !SWEEP_AXES.contains(&axis) {
            return Err(config_err(format!(
                "{key}: `{axis}` is not one of {}",
                SWEEP_AXES.join(", ")
            )));
        }
    }
    if axes[0] == axes[1] {
        return Err(config_err(format!("sweep: both axes are `{}`", axes[0])));
    }
    if sw.quantities.is_empty() {
        return Err(config_err("sweep.quantities: empty"));
    }
    for q in &sw.quantities {
        if !SWEEP_QUANTITIES.contains(&q.as_str()) {
            return Err(config_err(format!(
                "sweep.quantities: `{q}` is not one of {}",
                SWEEP_QUANTITIES.join(", ")
            )));
        }
    }
    let has = |a: &str| axes.contains(&a);
    if sw.quantities.iter().any(|q| q == "delta") && !has("xi") && sw.xi.is_none() {
        return Err(config_err("sweep.xi: required for `delta` unless xi is an axis"));
    }

    let m = required(&cfg.market, "market")?;
    let policy = if has("alpha") && has("beta") {
        SignalPolicy { alpha: 0.5, beta: 0.5 }
    } else {
        let p = required(&cfg.policy, "policy")?;
        SignalPolicy {
            alpha: p.alpha,
            beta: p.beta,
        }
    };
    let base = Point {
        params: MarketParams { r: m.r, c: m.c },
        policy,
        model: cfg.cost_or_free()?,
        xi: sw.xi,
    };
    let xs = sw.x.values("sweep.x")?;
    let ys = sw.y.values("sweep.y")?;

    let mut points = Vec::with_capacity(xs.len() * ys.len());
    for &x in &xs {
        for &y in &ys {
            let mut p = base;
            p.set(axes[0], x);
            p.set(axes[1], y);
            if let Some(s) = [(axes[0], x), (axes[1], y)]
                .iter()
                .find(|(a, _)| *a == "s")
                .map(|(_, v)| *v)
            {
                if !(0.0..1.0).contains(&s) {
                    return Err(config_err(format!("sweep.s: {s} is not in [0, 1)")));
                }
                p.params.c = s * p.params.r;
            }
            p.validate()?;
            points.push((x, y, p));
        }
    }

    let rows: Vec<Vec<String>> = points
        .par_iter()
        .map(|(x, y, p)| {
            let mut row = vec![num(*x), num(*y)];
            row.extend(sw.quantities.iter().map(|q| p.quantity(q)));
            row
        })
        .collect();
    let mut header: Vec<&str> = axes.to_vec();
    header.extend(sw.quantities.iter().map(String::as_str));
    write_csv(cfg.out.as_deref(), &header, &rows)
}

pub fn optimize(cfg: &ExperimentConfig) -> CliResult<()> {
    let opt = required(&cfg.optimize, "optimize")?;
    let outer = (opt.x.axis.as_str(), opt.y.axis.as_str());
    if !matches!(outer, ("r", "kappa") | ("r", "s")) {
        return Err(config_err(format!(
            "optimize: axes must be (r, kappa) or (r, s), got ({}, {})",
            outer.0, outer.1
        )));
    }
    if !(opt.resolution > 0.0 && opt.resolution <= 0.5) {
        return Err(config_err(format!(
            "optimize.resolution: {} is not in (0, 0.5]",
            opt.resolution
        )));
    }
    let model = cfg.cost()?;
    let rs = opt.x.values("optimize.x")?;
    let ys = opt.y.values("optimize.y")?;
    let h = opt.resolution;

    if outer.1 == "kappa" {
        let c = required(&cfg.market, "market")?.c;
        let mut cells = Vec::new();
        for &r in &rs {
            let params = MarketParams::new(r, c).map_err(model_err("optimize.x"))?;
            for &kappa in &ys {
                let m = CostModel { kappa, ..model };
                m.validate().map_err(model_err("optimize.y"))?;
                cells.push((params, m));
            }
        }
        let rows: Vec<Vec<String>> = cells
            .par_iter()
            .map(|(params, m)| {
                let o = optimize_signals(*params, m, h);
                vec![
                    num(params.r),
                    num(m.kappa),
                    num(o.profit),
                    num(o.alpha_star),
                    num(o.beta_star),
                ]
            })
            .collect();
        let header = ["r", "kappa", "profit_star", "alpha_star", "beta_star"];
        write_csv(cfg.out.as_deref(), &header, &rows)
    } else {
        if let Some(s) = ys.iter().find(|s| !(0.0..1.0).contains(*s)) {
            return Err(config_err(format!("optimize.y: s = {s} is not in [0, 1)")));
        }
        for &r in &rs {
            MarketParams::new(r, 0.0).map_err(model_err("optimize.x"))?;
        }
        let rows: Vec<Vec<String>> = rs
            .par_iter()
            .map(|&r| {
                let o = optimize_with_commission(r, &model, &ys, h).expect("s grid is nonempty and in range");
                vec![
                    num(r),
                    num(model.kappa),
                    num(o.profit),
                    num(o.alpha_star),
                    num(o.beta_star),
                    opt_num(o.s_star),
                ]
            })
            .collect();
        let header = ["r", "kappa", "profit_star", "alpha_star", "beta_star", "s_star"];
        write_csv(cfg.out.as_deref(), &header, &rows)
    }
}

pub fn integrate_cmd(cfg: &ExperimentConfig) -> CliResult<()> {
    let sec = required(&cfg.integrate, "integrate")?;
    let params = cfg.market()?;
    let policy = cfg.policy()?;
    let init = sec.initial.distribution("integrate.initial")?;
    let traj = integrate(init, params, policy, sec.horizon, sec.step).map_err(model_err("integrate"))?;
    let rows: Vec<Vec<String>> = traj
        .times
        .iter()
        .zip(&traj.states)
        .map(|(t, s)| vec![num(*t), num(s.good), num(s.bad), num(s.inactive), opt_num(s.xi())])
        .collect();
    write_csv(cfg.out.as_deref(), &["t", "x_good", "x_bad", "x_inactive", "xi"], &rows)
}

pub fn simulate(cfg: &ExperimentConfig) -> CliResult<()> {
    let sec = required(&cfg.simulate, "simulate")?;
    let params = cfg.market()?;
    let policy = cfg.policy()?;
    if sec.periods < 4 {
        return Err(config_err(format!(
            "simulate.periods: {} periods leave the quasi-stationary window empty (EmptyWindow); need at least 4",
            sec.periods
        )));
    }
    if sec.bins == 0 {
        return Err(config_err("simulate.bins: must be at least 1"));
    }
    if sec.record_every == 0 {
        return Err(config_err("simulate.record_every: must be at least 1"));
    }
    let out = cfg
        .out
        .clone()
        .ok_or_else(|| config_err("out: simulate writes two files and needs an output path"))?;
    let summary_path = sec.summary_out.clone().unwrap_or_else(|| summary_path_for(&out));

    let sim = SimConfig {
        n_sellers: sec.n_sellers,
        lambda_per_seller: sec.lambda_per_seller,
        sigma: sec.sigma,
        periods: sec.periods,
        seed: cfg.seed,
        initial: sec.initial.distribution("simulate.initial")?,
        sampling: sec.sampling,
    };
    let traj = run(&sim, params, policy).map_err(model_err("simulate"))?;
    let summary = quasi_stationary(&traj, sec.bins).map_err(model_err("simulate"))?;

    let rows: Vec<Vec<String>> = traj
        .records
        .iter()
        .filter(|rec| rec.period % sec.record_every == 0)
        .map(|rec| {
            vec![
                rec.period.to_string(),
                rec.counts.good.to_string(),
                rec.counts.bad.to_string(),
                rec.counts.inactive.to_string(),
                opt_num(rec.xi),
                rec.sales_good.to_string(),
                rec.sales_bad.to_string(),
                num(rec.revenue),
            ]
        })
        .collect();
    let header = [
        "period",
        "N_G",
        "N_B",
        "N_I",
        "xi",
        "sales_good",
        "sales_bad",
        "revenue",
    ];
    write_csv(Some(&out), &header, &rows)?;
    write_json(Some(&summary_path), &summary)
}

fn summary_path_for(out: &std::path::Path) -> PathBuf {
    out.with_extension("summary.json")
}
