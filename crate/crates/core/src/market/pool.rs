use serde::Serialize;

use crate::analytics;
use crate::model::EconomyParams;
use crate::sim::{default_horizon, init_state, simulate, squared_deviation_covariance, HolderAssignment, SampleStats, SimOptions, TrajectorySetup, MARKET};
use crate::{Error, Result};

/// Members of a ticket pool and their payout shares.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoolSpec {
    shares: Vec<f64>,
}

impl PoolSpec {
    pub fn new(shares: Vec<f64>) -> Result<Self> {
        if shares.is_empty() {
            return Err(Error::invalid("pool.shares", "a pool needs at least one member"));
        }
        if shares.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::invalid("pool.shares", "shares must be finite and >= 0"));
        }
        let total: f64 = shares.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("pool.shares", format!("shares must sum to 1, got {total}")));
        }
        Ok(Self { shares })
    }

    pub fn equal(members: usize) -> Result<Self> {
        if members == 0 {
            return Err(Error::invalid("pool.k", "a pool needs at least one member"));
        }
        // the last share absorbs rounding so the sum stays within tolerance
        let mut shares = vec![1.0 / members as f64; members];
        let head: f64 = shares[..members - 1].iter().sum();
        shares[members - 1] = 1.0 - head;
        Self::new(shares)
    }

    pub fn member_count(&self) -> usize {
        self.shares.len()
    }

    pub fn shares(&self) -> &[f64] {
        &self.shares
    }
}

/// Splits `reward_pv` pro rata. Every member but the last is paid a multiple
/// of the reward's ulp, which keeps all partial sums exact; the last member
/// takes the remainder, so the payouts summed in member order equal
/// `reward_pv` exactly.
pub fn pool_payout(pool: &PoolSpec, reward_pv: f64) -> Vec<f64> {
    let k = pool.shares.len();
    let mag = reward_pv.abs();
    let ulp = mag.next_up() - mag;
    let mut payouts: Vec<f64> = pool
        .shares
        .iter()
        .map(|s| if ulp.is_finite() && ulp > 0.0 { (s * reward_pv / ulp).round() * ulp } else { s * reward_pv })
        .collect();
    let head: f64 = payouts[..k - 1].iter().sum();
    let mut last = reward_pv - head;
    // only reachable when rounding pushed the head past the reward
    for _ in 0..64 {
        let sum = head + last;
        if sum == reward_pv {
            break;
        }
        last = if sum < reward_pv { last.next_up() } else { last.next_down() };
    }
    payouts[k - 1] = last;
    payouts
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoolVarianceReport {
    pub pool_tickets: u64,
    pub trials: u64,
    /// Variance of one ticket's discounted payoff.
    pub solo_variance: f64,
    pub solo_stderr: f64,
    /// Variance of a member's payout per ticket-equivalent.
    pub pooled_per_ticket_variance: f64,
    pub pooled_stderr: f64,
    pub ratio: f64,
    pub ratio_stderr: f64,
    /// `solo_variance - pooled_per_ticket_variance`.
    pub reduction: f64,
    pub reduction_stderr: f64,
    /// Analytic single-ticket variance for reference.
    pub solo_closed_form: f64,
    pub truncated: u64,
}

/// Pool of `k` of the `n` tickets with equal shares.
pub fn pooled_variance_experiment(params: &EconomyParams, k: u64, opts: &SimOptions) -> Result<PoolVarianceReport> {
    pooled_variance_experiment_with(params, k, &PoolSpec::equal(k as usize)?, opts)
}

/// Tickets `0..k` are pooled and paid out per `pool`; ticket 0 alone is the
/// solo comparison. Draw mechanics are untouched: pooling only redistributes
/// payoffs. Member 0's payout is scaled to one ticket-equivalent.
pub fn pooled_variance_experiment_with(params: &EconomyParams, k: u64, pool: &PoolSpec, opts: &SimOptions) -> Result<PoolVarianceReport> {
    let n = params.n();
    if k == 0 {
        return Err(Error::invalid("pool.k", "pool must hold at least one ticket"));
    }
    if k > n {
        return Err(Error::PoolTooLarge { k, n });
    }
    params.require_positive_discount()?;
    let init = init_state(params, &HolderAssignment::uniform(MARKET, n))?;
    let horizon = opts.horizon.unwrap_or_else(|| default_horizon(n, k));
    let setup = TrajectorySetup::new(init, (0..k).collect(), horizon)?;
    let member_tickets = pool.shares()[0] * k as f64;
    let sim = simulate(params, &setup, opts, |r| {
        let pooled: f64 = r.tracked.iter().map(|t| t.payoff).sum();
        let payouts = pool_payout(pool, pooled);
        (r.tracked[0].payoff, payouts[0] / member_tickets)
    })?;

    let solo: Vec<f64> = sim.values.iter().map(|v| v.0).collect();
    let pooled: Vec<f64> = sim.values.iter().map(|v| v.1).collect();
    let s = SampleStats::from_samples(&solo);
    let p = SampleStats::from_samples(&pooled);
    let n_trials = opts.trials as f64;

    // delta method on (solo variance, pooled variance)
    let var_s = s.stderr_variance().powi(2);
    let var_p = p.stderr_variance().powi(2);
    let cov = squared_deviation_covariance(&solo, &pooled, &s, &p) / n_trials;
    let ratio = p.variance / s.variance;
    let ratio_var = ratio * ratio * (var_p / (p.variance * p.variance) + var_s / (s.variance * s.variance) - 2.0 * cov / (p.variance * s.variance));
    let reduction_var = var_s + var_p - 2.0 * cov;

    Ok(PoolVarianceReport {
        pool_tickets: k,
        trials: opts.trials,
        solo_variance: s.variance,
        solo_stderr: var_s.sqrt(),
        pooled_per_ticket_variance: p.variance,
        pooled_stderr: var_p.sqrt(),
        ratio,
        ratio_stderr: ratio_var.max(0.0).sqrt(),
        reduction: s.variance - p.variance,
        reduction_stderr: reduction_var.max(0.0).sqrt(),
        solo_closed_form: analytics::ticket_value_variance(params.mu(), params.reward_variance(), params.d(), params.n_f64())?,
        truncated: sim.truncated,
    })
}
