//! Experiment configuration (TOML).
//!
//! ```toml
//! seed = 42
//! trials = 100000
//! n = 32
//! d = 0.01
//! reward = { kind = "lognormal", mean = 1.0, sigma_log = 1.0 }
//!
//! [sweep]
//! parameter = "n"
//! values = [1, 4, 16, 64, 256]
//! ```
//!
//! Command-line flags override file keys, which override defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::market::{MultiBlockSpec, PoolSpec, PricingPolicy};
use crate::model::{calibrate_lognormal, load_empirical_csv, EconomyParams, RewardModel};
use crate::sim::{default_horizon, discount_horizon, holder_tickets, Quantity, SimOptions, HORIZON_TAIL, MIN_TRIALS, STREAM_TAIL};
use crate::{Error, Result};

/// Which subcommand a configuration is validated for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Analytic,
    Verify,
    Simulate,
    Sweep,
    Pricing,
    Pool,
    Multiblock,
}

impl Experiment {
    /// Everything except `simulate` values an infinite reward stream.
    pub fn needs_positive_discount(self) -> bool {
        !matches!(self, Experiment::Simulate)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RewardSpec {
    Constant { mean: f64 },
    Lognormal { mean: f64, sigma_log: f64 },
    Pareto { mean: f64, shape: f64 },
    /// CSV with a `reward_eth` column; relative paths resolve against the config file.
    Empirical { path: PathBuf },
}

impl RewardSpec {
    pub fn build(&self, base: Option<&Path>) -> Result<RewardModel> {
        match self {
            RewardSpec::Constant { mean } => RewardModel::constant(*mean),
            RewardSpec::Lognormal { mean, sigma_log } => calibrate_lognormal(*mean, *sigma_log),
            RewardSpec::Pareto { mean, shape } => RewardModel::pareto_with_mean(*mean, *shape),
            RewardSpec::Empirical { path } => {
                let path = match base {
                    Some(dir) if path.is_relative() => dir.join(path),
                    _ => path.clone(),
                };
                load_empirical_csv(path)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    N,
    D,
    Mu,
    SigmaLog,
    Beta,
    K,
    P,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::N => "n",
            SweepParameter::D => "d",
            SweepParameter::Mu => "mu",
            SweepParameter::SigmaLog => "sigma_log",
            SweepParameter::Beta => "beta",
            SweepParameter::K => "k",
            SweepParameter::P => "p",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolConfig {
    /// Tickets held by the pool.
    pub k: u64,
    /// Member payout shares; one member per ticket with equal shares if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shares: Option<Vec<f64>>,
}

impl PoolConfig {
    pub fn spec(&self) -> Result<PoolSpec> {
        match &self.shares {
            Some(s) => PoolSpec::new(s.clone()),
            None => PoolSpec::equal(self.k as usize),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportFormat {
    #[default]
    Csv,
    #[serde(alias = "jsonl")]
    JsonLines,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Report destination; standard output if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: ReportFormat,
    /// Fill the `runtime_ms` column. Off by default so reports are byte-stable.
    #[serde(default)]
    pub timing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantityName {
    #[default]
    TicketValue,
    TicketValueVariance,
    TimeToWin,
    HolderValue,
    RewardStreamNpv,
}

impl QuantityName {
    pub fn quantity(self, p: f64) -> Quantity {
        match self {
            QuantityName::TicketValue => Quantity::TicketValue,
            QuantityName::TicketValueVariance => Quantity::TicketValueVariance,
            QuantityName::TimeToWin => Quantity::TimeToWin,
            QuantityName::HolderValue => Quantity::HolderValue { p },
            QuantityName::RewardStreamNpv => Quantity::RewardStreamNpv,
        }
    }
}

fn default_seed() -> u64 {
    42
}
fn default_trials() -> u64 {
    100_000
}
fn default_workers() -> usize {
    1
}
fn default_fraction() -> f64 {
    0.25
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: u64,
    /// Worker threads for Monte Carlo; 0 uses every core.
    #[serde(default = "default_workers")]
    pub workers: usize,
    pub n: u64,
    pub d: f64,
    pub reward: RewardSpec,
    /// Fraction `p` of the tickets held by one party (control value, holder
    /// and multi-block experiments).
    #[serde(default = "default_fraction")]
    pub control_fraction: f64,
    /// Slot horizon override for simulation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<u64>,
    /// Quantity estimated by `simulate`.
    #[serde(default)]
    pub quantity: QuantityName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<PricingPolicy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multiblock: Option<MultiBlockSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pool: Option<PoolConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    /// `n = 32`, `d = 0.01`, unit constant reward, 10^5 trials, seed 42.
    fn default() -> Self {
        Self {
            seed: default_seed(),
            trials: default_trials(),
            workers: default_workers(),
            n: 32,
            d: 0.01,
            reward: RewardSpec::Constant { mean: 1.0 },
            control_fraction: default_fraction(),
            horizon: None,
            quantity: QuantityName::default(),
            policy: None,
            multiblock: None,
            pool: None,
            sweep: None,
            output: OutputSpec::default(),
            base_dir: None,
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<ReportFormat>,
    pub timing: bool,
    pub quantity: Option<QuantityName>,
}

/// Parses `text` as a configuration. Unknown or missing keys are reported
/// with their key path.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let de = toml::de::Deserializer::parse(text).map_err(|e| Error::config("<document>", e.message()))?;
    serde_path_to_error::deserialize(de).map_err(|e| {
        let key = e.path().to_string();
        let key = if key == "." { "<root>".to_owned() } else { key };
        Error::config(key, e.into_inner().message())
    })
}

/// Reads, overrides and validates a configuration for `experiment`.
pub fn load_config(path: impl AsRef<Path>, experiment: Experiment, overrides: &Overrides) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::config("<file>", format!("{}: {e}", path.display())))?;
    let mut cfg = parse_config(&text)?;
    cfg.base_dir = path.parent().map(Path::to_path_buf);
    cfg.apply(overrides);
    cfg.validate(experiment)?;
    Ok(cfg)
}

fn as_config(e: Error, fallback: &str) -> Error {
    match e {
        Error::InvalidParameter { name, reason } => Error::config(name, reason),
        Error::DiscountRate(_) => Error::config("d", e),
        Error::TooFewTrials { .. } => Error::config("trials", e),
        Error::PoolTooLarge { .. } => Error::config("pool.k", e),
        Error::Config { .. } => e,
        other => Error::config(fallback, other),
    }
}

fn integral(value: f64, key: &str) -> Result<u64> {
    if value.is_finite() && value >= 1.0 && value.fract() == 0.0 && value <= u64::MAX as f64 {
        Ok(value as u64)
    } else {
        Err(Error::config(key, format!("expected a positive integer, got {value}")))
    }
}

impl ExperimentConfig {
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(t) = o.trials {
            self.trials = t;
        }
        if let Some(w) = o.workers {
            self.workers = w;
        }
        if let Some(p) = &o.out {
            self.output.path = Some(p.clone());
        }
        if let Some(f) = o.format {
            self.output.format = f;
        }
        if o.timing {
            self.output.timing = true;
        }
        if let Some(q) = o.quantity {
            self.quantity = q;
        }
    }

    pub fn validate(&self, experiment: Experiment) -> Result<()> {
        if self.trials < MIN_TRIALS {
            return Err(as_config(Error::TooFewTrials { min: MIN_TRIALS, got: self.trials }, "trials"));
        }
        let params = self.params()?;
        if experiment.needs_positive_discount() {
            params.require_positive_discount().map_err(|e| as_config(e, "d"))?;
        }
        if !(0.0..=1.0).contains(&self.control_fraction) {
            return Err(Error::config("control_fraction", format!("must lie in [0, 1], got {}", self.control_fraction)));
        }
        if let Some(policy) = &self.policy {
            policy.validate().map_err(|e| as_config(e, "policy"))?;
        }
        if let Some(m) = &self.multiblock {
            m.validate().map_err(|e| as_config(e, "multiblock"))?;
        }
        if let Some(pool) = &self.pool {
            if pool.k == 0 || pool.k > self.n {
                return Err(Error::config("pool.k", format!("must lie in 1..={}, got {}", self.n, pool.k)));
            }
            pool.spec().map_err(|e| as_config(e, "pool.shares"))?;
        }
        if let Some(h) = self.horizon {
            if h == 0 {
                return Err(Error::config("horizon", "must be at least one slot"));
            }
        }
        if let Some(sweep) = &self.sweep {
            self.validate_sweep(sweep, experiment)?;
        }
        match experiment {
            Experiment::Sweep if self.sweep.is_none() => Err(Error::config("sweep", "the sweep experiment needs a [sweep] table")),
            Experiment::Pool if self.pool.is_none() => Err(Error::config("pool", "the pool experiment needs a [pool] table")),
            Experiment::Multiblock => {
                if self.multiblock.is_none() {
                    return Err(Error::config("multiblock", "the multiblock experiment needs a [multiblock] table"));
                }
                holder_tickets(self.control_fraction, self.n).map_err(|e| Error::config("control_fraction", e))?;
                Ok(())
            }
            Experiment::Simulate => {
                if self.quantity == QuantityName::HolderValue {
                    holder_tickets(self.control_fraction, self.n).map_err(|e| Error::config("control_fraction", e))?;
                }
                if self.quantity == QuantityName::RewardStreamNpv && self.d == 0.0 && self.horizon.is_none() {
                    return Err(Error::config("horizon", "an undiscounted reward stream needs an explicit horizon"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    fn validate_sweep(&self, sweep: &SweepSpec, experiment: Experiment) -> Result<()> {
        if sweep.values.is_empty() {
            return Err(Error::config("sweep.values", "sweep needs at least one value"));
        }
        for (i, &v) in sweep.values.iter().enumerate() {
            let key = format!("sweep.values[{i}]");
            self.with_swept(sweep.parameter, v)
                .and_then(|c| {
                    let mut c = c;
                    c.sweep = None;
                    let exp = if experiment == Experiment::Sweep { Experiment::Analytic } else { experiment };
                    c.validate(exp)?;
                    match sweep.parameter {
                        SweepParameter::P => holder_tickets(c.control_fraction, c.n).map(|_| ()).map_err(|e| Error::config("control_fraction", e)),
                        _ => Ok(()),
                    }
                })
                .map_err(|e| match e {
                    Error::Config { reason, .. } => Error::config(key.clone(), reason),
                    other => Error::config(key.clone(), other),
                })?;
        }
        Ok(())
    }

    /// Copy of this configuration with one parameter replaced.
    pub fn with_swept(&self, parameter: SweepParameter, value: f64) -> Result<Self> {
        let mut c = self.clone();
        match parameter {
            SweepParameter::N => c.n = integral(value, "n")?,
            SweepParameter::D => c.d = value,
            SweepParameter::Mu => {
                c.reward = match &c.reward {
                    RewardSpec::Constant { .. } => RewardSpec::Constant { mean: value },
                    RewardSpec::Lognormal { sigma_log, .. } => RewardSpec::Lognormal { mean: value, sigma_log: *sigma_log },
                    RewardSpec::Pareto { shape, .. } => RewardSpec::Pareto { mean: value, shape: *shape },
                    RewardSpec::Empirical { .. } => return Err(Error::config("reward", "cannot sweep the mean of an empirical reward")),
                }
            }
            SweepParameter::SigmaLog => match &c.reward {
                RewardSpec::Lognormal { mean, .. } => c.reward = RewardSpec::Lognormal { mean: *mean, sigma_log: value },
                _ => return Err(Error::config("reward", "sigma_log sweeps need a lognormal reward")),
            },
            SweepParameter::Beta => c.multiblock = Some(MultiBlockSpec { beta: value }),
            SweepParameter::K => {
                let k = integral(value, "pool.k")?;
                c.pool = Some(PoolConfig { k, shares: None });
            }
            SweepParameter::P => c.control_fraction = value,
        }
        Ok(c)
    }

    pub fn params(&self) -> Result<EconomyParams> {
        let reward = self.reward.build(self.base_dir.as_deref()).map_err(|e| as_config(e, "reward"))?;
        EconomyParams::new(self.n, self.d, reward).map_err(|e| as_config(e, "n"))
    }

    pub fn sim_options(&self) -> SimOptions {
        SimOptions::new(self.trials, self.seed)
            .workers(self.workers)
            .horizon(self.horizon)
            .multiblock(self.multiblock)
    }

    /// The configuration with defaults filled in, plus derived horizons, as TOML.
    pub fn resolved_toml(&self) -> String {
        #[derive(Serialize)]
        struct Derived {
            ticket_horizon: u64,
            #[serde(skip_serializing_if = "Option::is_none")]
            discount_horizon: Option<u64>,
            horizon_tail: f64,
            stream_tail: f64,
        }
        #[derive(Serialize)]
        struct Resolved<'a> {
            #[serde(flatten)]
            config: &'a ExperimentConfig,
            derived: Derived,
        }
        let resolved = Resolved {
            config: self,
            derived: Derived {
                ticket_horizon: self.horizon.unwrap_or_else(|| default_horizon(self.n, 1)),
                discount_horizon: discount_horizon(self.d, STREAM_TAIL),
                horizon_tail: HORIZON_TAIL,
                stream_tail: STREAM_TAIL,
            },
        };
        toml::to_string(&resolved).expect("configuration serializes")
    }
}
