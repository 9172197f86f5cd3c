//! Monte Carlo estimators over independent trajectories.

use serde::Serialize;

use super::exec::{map_indexed, StreamFactory};
use super::state::{init_state, HolderAssignment, MintRule, MARKET};
use super::stats::SampleStats;
use super::trajectory::{default_horizon, discount_horizon, run_trajectory, TrajectoryRecord, TrajectorySetup, STREAM_TAIL};
use crate::market::MultiBlockSpec;
use crate::model::EconomyParams;
use crate::{Error, Result};

pub const MIN_TRIALS: u64 = 100;

/// Label of the designated holder in holder-value experiments.
pub const HOLDER: &str = "holder";

/// Normal 97.5% quantile.
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "quantity")]
pub enum Quantity {
    /// Discounted payoff of ticket 0.
    TicketValue,
    /// Variance of the discounted payoff of ticket 0.
    TicketValueVariance,
    /// Slots until ticket 0 is drawn.
    TimeToWin,
    /// Discounted payoff of the `round(p n)` tickets initially held by one
    /// holder, who buys back each replacement to keep its share.
    HolderValue { p: f64 },
    /// Discounted sum of every slot's reward.
    RewardStreamNpv,
}

impl Quantity {
    pub fn name(&self) -> &'static str {
        match self {
            Quantity::TicketValue => "ticket_value",
            Quantity::TicketValueVariance => "ticket_value_variance",
            Quantity::TimeToWin => "time_to_win",
            Quantity::HolderValue { .. } => "holder_value",
            Quantity::RewardStreamNpv => "reward_stream_npv",
        }
    }

    /// Trajectory layout that realizes this quantity.
    pub fn setup(&self, params: &EconomyParams, opts: &SimOptions) -> Result<TrajectorySetup> {
        let n = params.n();
        match *self {
            Quantity::TicketValue | Quantity::TicketValueVariance | Quantity::TimeToWin => {
                let init = init_state(params, &HolderAssignment::uniform(MARKET, n))?.with_multiblock(opts.multiblock);
                let horizon = opts.horizon.unwrap_or_else(|| default_horizon(n, 1));
                TrajectorySetup::new(init, vec![0], horizon)
            }
            Quantity::HolderValue { p } => {
                let k = holder_tickets(p, n)?;
                let init = init_state(params, &HolderAssignment::split(HOLDER, k, MARKET, n))?
                    .with_mint_rule(&MintRule::ReplaceInKind)
                    .with_multiblock(opts.multiblock);
                let horizon = opts.horizon.unwrap_or_else(|| default_horizon(n, k));
                TrajectorySetup::new(init, (0..k).collect(), horizon)
            }
            Quantity::RewardStreamNpv => {
                let horizon = match opts.horizon {
                    Some(h) => h,
                    None => discount_horizon(params.d(), STREAM_TAIL).ok_or(Error::DiscountRate(params.d()))?,
                };
                let init = init_state(params, &HolderAssignment::uniform(MARKET, n))?.with_multiblock(opts.multiblock);
                Ok(TrajectorySetup::new(init, Vec::new(), horizon)?.full_horizon())
            }
        }
    }

    fn extract(&self, r: &TrajectoryRecord, horizon: u64) -> f64 {
        match self {
            Quantity::TicketValue | Quantity::TicketValueVariance | Quantity::HolderValue { .. } => r.discounted_payoff(),
            Quantity::TimeToWin => r.tracked_ticket_win_slot().unwrap_or(horizon) as f64,
            Quantity::RewardStreamNpv => r.total_discounted_rewards(),
        }
    }
}

/// Number of tickets a holder of fraction `p` controls: `round(p n)`, at least one.
pub fn holder_tickets(p: f64, n: u64) -> Result<u64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid("p", format!("holder fraction must lie in [0, 1], got {p}")));
    }
    let k = (p * n as f64).round() as u64;
    if k == 0 {
        return Err(Error::invalid("p", format!("p * n = {} rounds to zero tickets", p * n as f64)));
    }
    Ok(k)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimOptions {
    pub trials: u64,
    pub seed: u64,
    /// Worker threads; 0 uses every core. Results do not depend on it.
    pub workers: usize,
    /// Overrides the default horizon.
    pub horizon: Option<u64>,
    pub multiblock: Option<MultiBlockSpec>,
}

impl SimOptions {
    pub fn new(trials: u64, seed: u64) -> Self {
        Self {
            trials,
            seed,
            workers: 1,
            horizon: None,
            multiblock: None,
        }
    }

    pub fn workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn horizon(mut self, horizon: Option<u64>) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn multiblock(mut self, spec: Option<MultiBlockSpec>) -> Self {
        self.multiblock = spec;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials < MIN_TRIALS {
            return Err(Error::TooFewTrials {
                min: MIN_TRIALS,
                got: self.trials,
            });
        }
        Ok(())
    }
}

/// Per-trajectory outputs in trajectory-index order.
#[derive(Debug, Clone)]
pub struct Simulation<T> {
    pub values: Vec<T>,
    pub truncated: u64,
    pub horizon: u64,
}

/// Runs `opts.trials` independent trajectories of `setup` and maps each record
/// through `extract`. Trajectory `i` uses random stream `i` of `opts.seed`.
pub fn simulate<T, F>(params: &EconomyParams, setup: &TrajectorySetup, opts: &SimOptions, extract: F) -> Result<Simulation<T>>
where
    T: Send,
    F: Fn(&TrajectoryRecord) -> T + Sync + Send,
{
    opts.validate()?;
    let streams = StreamFactory::new(opts.seed);
    let out = map_indexed(opts.trials, opts.workers, |i| {
        let mut rng = streams.stream(i);
        let record = run_trajectory(params, setup, &mut rng);
        (extract(&record), record.truncated)
    });
    let truncated = out.iter().filter(|(_, t)| *t).count() as u64;
    Ok(Simulation {
        values: out.into_iter().map(|(v, _)| v).collect(),
        truncated,
        horizon: setup.horizon(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub ci95: (f64, f64),
    pub trials: u64,
    /// Trajectories that hit the horizon before resolving.
    pub truncated: u64,
    pub horizon: u64,
    /// Upper bound on the magnitude of the bias from truncating at `horizon`.
    pub bias_bound: f64,
}

impl Estimate {
    pub fn new(mean: f64, stderr: f64, trials: u64) -> Self {
        Self {
            mean,
            stderr,
            ci95: (mean - Z95 * stderr, mean + Z95 * stderr),
            trials,
            truncated: 0,
            horizon: 0,
            bias_bound: 0.0,
        }
    }

    pub fn of_mean(stats: &SampleStats) -> Self {
        Self::new(stats.mean, stats.stderr_mean(), stats.count)
    }

    pub fn of_variance(stats: &SampleStats) -> Self {
        Self::new(stats.variance, stats.stderr_variance(), stats.count)
    }

    /// `(mean - reference) / stderr`; `None` when the spread is zero and the
    /// values differ.
    pub fn z_score(&self, reference: f64) -> Option<f64> {
        z_score(self.mean, self.stderr, reference)
    }

    fn with_truncation(mut self, truncated: u64, horizon: u64, bias_bound: f64) -> Self {
        self.truncated = truncated;
        self.horizon = horizon;
        self.bias_bound = bias_bound;
        self
    }
}

pub fn z_score(mean: f64, stderr: f64, reference: f64) -> Option<f64> {
    if stderr > 0.0 {
        Some((mean - reference) / stderr)
    } else if (mean - reference).abs() <= 1e-12 * reference.abs().max(1.0) {
        Some(0.0)
    } else {
        None
    }
}

/// Monte Carlo estimate of `quantity`. Bit-identical for a fixed seed whatever
/// the worker count.
pub fn estimate(params: &EconomyParams, quantity: Quantity, opts: &SimOptions) -> Result<Estimate> {
    let setup = quantity.setup(params, opts)?;
    let horizon = setup.horizon();
    let sim = simulate(params, &setup, opts, |r| quantity.extract(r, horizon))?;
    let stats = SampleStats::from_samples(&sim.values);
    let base = match quantity {
        Quantity::TicketValueVariance => Estimate::of_variance(&stats),
        _ => Estimate::of_mean(&stats),
    };
    let bias = truncation_bias_bound(params, quantity, horizon, setup.tracked().len() as u64, opts.multiblock);
    Ok(base.with_truncation(sim.truncated, horizon, bias))
}

/// Bound on what the horizon can discard: the probability that a tracked
/// ticket is still live times the largest discounted payoff it could carry.
pub fn truncation_bias_bound(params: &EconomyParams, quantity: Quantity, horizon: u64, tracked: u64, multiblock: Option<MultiBlockSpec>) -> f64 {
    let n = params.n_f64();
    let survive = (1.0 - 1.0 / n).powf(horizon as f64);
    let mu = params.mu();
    let bonus = multiblock.map_or(1.0, |m| 1.0 + m.beta * horizon as f64);
    match quantity {
        Quantity::TicketValue => mu * survive,
        Quantity::TicketValueVariance => (params.reward_variance() + mu * mu) * survive,
        Quantity::TimeToWin => n * survive,
        Quantity::HolderValue { .. } => tracked as f64 * mu * bonus * survive,
        Quantity::RewardStreamNpv => {
            let d = params.d();
            if d > 0.0 {
                mu * bonus / (d * (1.0 + d).powf(horizon as f64))
            } else {
                f64::INFINITY
            }
        }
    }
}
