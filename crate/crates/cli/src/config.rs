//! Experiment files: a TOML document with one section per concern, plus
//! dotted-path overrides from the command line.

use std::fmt;
use std::path::{Path, PathBuf};

use repmarket::abm::Sampling;
use repmarket::{CostModel, MarketParams, ModelError, SellerDistribution, SignalPolicy};
use serde::Deserialize;
use toml::{Table, Value};

/// Failure classes, mapped to process exit codes.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Runtime(msg) => write!(f, "runtime error: {msg}"),
        }
    }
}

pub fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Model errors point back at the config section the values came from.
pub fn model_err(section: &str) -> impl Fn(ModelError) -> CliError + '_ {
    move |e| match &e {
        ModelError::InvalidParameter { name, reason } => config_err(format!("{section}.{name}: {reason}")),
        _ => config_err(format!("{section}: {e}")),
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    pub jobs: Option<usize>,
    pub market: Option<MarketSection>,
    pub policy: Option<PolicySection>,
    pub cost: Option<CostSection>,
    pub sweep: Option<SweepSection>,
    pub optimize: Option<OptimizeSection>,
    pub integrate: Option<IntegrateSection>,
    pub simulate: Option<SimulateSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketSection {
    pub r: f64,
    pub c: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySection {
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostSection {
    pub alpha0: f64,
    pub beta0: f64,
    pub kappa: f64,
    pub p: f64,
    pub q: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub axis: String,
    pub min: f64,
    pub max: f64,
    pub steps: usize,
    #[serde(default = "linear")]
    pub scale: Scale,
}

fn linear() -> Scale {
    Scale::Linear
}

impl AxisSpec {
    /// Grid values from `min` to `max` inclusive. A single step yields `min`.
    pub fn values(&self, section: &str) -> CliResult<Vec<f64>> {
        let path = format!("{section}.{}", self.axis);
        if self.steps == 0 {
            return Err(config_err(format!("{path}: steps must be at least 1")));
        }
        if !(self.min.is_finite() && self.max.is_finite()) || self.min > self.max {
            return Err(config_err(format!(
                "{path}: need finite min <= max, got [{}, {}]",
                self.min, self.max
            )));
        }
        if self.scale == Scale::Log && self.min <= 0.0 {
            return Err(config_err(format!("{path}: log scale needs min > 0")));
        }
        if self.steps == 1 {
            return Ok(vec![self.min]);
        }
        let n = (self.steps - 1) as f64;
        Ok((0..self.steps)
            .map(|i| {
                let t = i as f64 / n;
                match self.scale {
                    Scale::Linear => self.min + (self.max - self.min) * t,
                    Scale::Log => self.min * (self.max / self.min).powf(t),
                }
            })
            .collect())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub x: AxisSpec,
    pub y: AxisSpec,
    #[serde(default = "default_quantities")]
    pub quantities: Vec<String>,
    /// Share of good sellers for `delta` when `xi` is not an axis.
    pub xi: Option<f64>,
}

fn default_quantities() -> Vec<String> {
    ["revenue", "cost", "profit", "feasible"].map(String::from).to_vec()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeSection {
    pub x: AxisSpec,
    pub y: AxisSpec,
    #[serde(default = "default_resolution")]
    pub resolution: f64,
}

fn default_resolution() -> f64 {
    repmarket::platform::DEFAULT_RESOLUTION
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SharesSection {
    pub good: f64,
    pub bad: f64,
    pub inactive: f64,
}

impl SharesSection {
    pub fn distribution(&self, section: &str) -> CliResult<SellerDistribution> {
        SellerDistribution::new(self.good, self.bad, self.inactive).map_err(model_err(section))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrateSection {
    pub initial: SharesSection,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_step")]
    pub step: f64,
}

fn default_horizon() -> f64 {
    1000.0
}

fn default_step() -> f64 {
    repmarket::dynamics::DEFAULT_STEP
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub n_sellers: u32,
    pub lambda_per_seller: f64,
    pub sigma: f64,
    pub periods: u64,
    pub initial: SharesSection,
    #[serde(default)]
    pub sampling: Sampling,
    #[serde(default = "default_bins")]
    pub bins: usize,
    /// Write every k-th period to the trajectory CSV. The summary always uses
    /// every period.
    #[serde(default = "one")]
    pub record_every: u64,
    /// Where the summary JSON goes; defaults to the trajectory path with the
    /// extension `summary.json`.
    pub summary_out: Option<PathBuf>,
}

fn default_bins() -> usize {
    200
}

fn one() -> u64 {
    1
}

impl ExperimentConfig {
    pub fn market(&self) -> CliResult<MarketParams> {
        let m = required(&self.market, "market")?;
        MarketParams::new(m.r, m.c).map_err(model_err("market"))
    }

    pub fn policy(&self) -> CliResult<SignalPolicy> {
        let p = required(&self.policy, "policy")?;
        SignalPolicy::new(p.alpha, p.beta).map_err(model_err("policy"))
    }

    /// The cost section, or a costless platform when it is absent.
    pub fn cost_or_free(&self) -> CliResult<CostModel> {
        match &self.cost {
            Some(_) => self.cost(),
            None => Ok(CostModel::costless()),
        }
    }

    pub fn cost(&self) -> CliResult<CostModel> {
        let c = required(&self.cost, "cost")?;
        CostModel::new(c.alpha0, c.beta0, c.kappa, c.p, c.q).map_err(model_err("cost"))
    }
}

pub fn required<'a, T>(section: &'a Option<T>, name: &str) -> CliResult<&'a T> {
    section
        .as_ref()
        .ok_or_else(|| config_err(format!("missing section `{name}`")))
}

/// Reads the config file (if any), applies overrides in order and
/// deserializes the result.
pub fn load(path: Option<&Path>, overrides: &[String]) -> CliResult<ExperimentConfig> {
    let mut table = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| config_err(format!("{}: {e}", p.display())))?;
            text.parse::<Table>()
                .map_err(|e| config_err(format!("{}: {e}", p.display())))?
        }
        None => Table::new(),
    };
    for item in overrides {
        apply_override(&mut table, item)?;
    }
    parse(table)
}

pub fn parse(table: Table) -> CliResult<ExperimentConfig> {
    serde_path_to_error::deserialize(Value::Table(table)).map_err(|e| {
        let path = e.path().to_string();
        // toml appends its own location lines; the path above is more precise.
        let inner = e.into_inner().to_string();
        let msg = inner.lines().next().unwrap_or_default();
        if path == "." {
            config_err(msg)
        } else {
            config_err(format!("at `{path}`: {msg}"))
        }
    })
}

/// Applies `a.b.c=value`. The value is read as a TOML literal when it parses
/// as one and as a bare string otherwise.
pub fn apply_override(table: &mut Table, item: &str) -> CliResult<()> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| config_err(format!("--set `{item}`: expected key=value")))?;
    let key = key.trim();
    let value = format!("v = {}", raw.trim())
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.trim().to_string()));

    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(config_err(format!("--set `{item}`: empty key segment")));
    }
    let (last, parents) = parts.split_last().expect("split yields one part");
    let mut cursor = table;
    for (i, part) in parents.iter().enumerate() {
        let entry = cursor
            .entry(part.to_string())
            .or_insert_with(|| Value::Table(Table::new()));
        cursor = entry
            .as_table_mut()
            .ok_or_else(|| config_err(format!("--set `{item}`: `{}` is not a table", parts[..=i].join("."))))?;
    }
    cursor.insert(last.to_string(), value);
    Ok(())
}
