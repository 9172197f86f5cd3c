use serde::{Deserialize, Serialize};

use crate::analytics;
use crate::model::EconomyParams;
use crate::sim::{estimate, holder_tickets, Estimate, Quantity, SimOptions};
use crate::{Error, Result};

/// Superadditive bonus for winning consecutive slots.
///
/// A holder on a streak of `s` consecutive wins realizes `r (1 + beta (s - 1))`
/// for the slot's base reward `r`. `beta = 0` is the base model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiBlockSpec {
    pub beta: f64,
}

impl MultiBlockSpec {
    pub fn new(beta: f64) -> Result<Self> {
        let spec = Self { beta };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.beta.is_finite() && self.beta >= 0.0 {
            Ok(())
        } else {
            Err(Error::invalid("multiblock.beta", format!("must be finite and >= 0, got {}", self.beta)))
        }
    }

    pub fn realize(&self, reward: f64, streak: u64) -> f64 {
        reward * (1.0 + self.beta * streak.saturating_sub(1) as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MultiBlockReport {
    pub simulated_holder_npv: Estimate,
    /// Value of the same tickets without the bonus.
    pub additive_baseline: f64,
    pub premium: f64,
    pub premium_stderr: f64,
    pub holder_tickets: u64,
    /// `holder_tickets / n`, the fraction the baseline is evaluated at.
    pub effective_fraction: f64,
}

/// Simulated value of the tickets held by one party controlling a fraction
/// `p` of the pool, against the additive valuation of the same tickets.
///
/// The holder starts with `round(p n)` tickets and buys back each of its
/// winners' replacements; only the starting tickets' payoffs are credited.
pub fn multiblock_value_experiment(params: &EconomyParams, spec: MultiBlockSpec, p: f64, opts: &SimOptions) -> Result<MultiBlockReport> {
    spec.validate()?;
    params.require_positive_discount()?;
    let k = holder_tickets(p, params.n())?;
    let effective_fraction = k as f64 / params.n_f64();
    let additive_baseline = analytics::control_value(effective_fraction, params.mu(), params.d(), params.n_f64())?;
    let opts = opts.multiblock(Some(spec));
    let holder = estimate(params, Quantity::HolderValue { p }, &opts)?;
    Ok(MultiBlockReport {
        simulated_holder_npv: holder,
        additive_baseline,
        premium: holder.mean - additive_baseline,
        premium_stderr: holder.stderr,
        holder_tickets: k,
        effective_fraction,
    })
}
