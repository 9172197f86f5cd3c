//! Single-run experiments: simulation, pricing, pooling and multi-block bonuses.

use crate::analytics::{self, series::npv_rewards_series, series::ticket_value_series, series::DEFAULT_EPSILON};
use crate::market::{multiblock_value_experiment, pooled_variance_experiment_with, protocol_capture, MultiBlockSpec};
use crate::model::EconomyParams;
use crate::sim::{estimate, holder_tickets, z_score, Quantity};
use crate::Result;

use super::config::ExperimentConfig;
use super::report::{ReportRow, Z_LIMIT};

/// Analytic value of what `quantity` estimates, when one exists.
fn reference(params: &EconomyParams, quantity: Quantity, horizon: u64, multiblock: Option<MultiBlockSpec>) -> Result<Option<f64>> {
    let (mu, d, n) = (params.mu(), params.d(), params.n_f64());
    let bonus = multiblock.is_some_and(|m| m.beta != 0.0);
    Ok(match quantity {
        Quantity::TimeToWin => Some(analytics::expected_slots_to_win(n)?),
        _ if bonus => None,
        Quantity::RewardStreamNpv if d == 0.0 => Some(mu * horizon as f64),
        // finite-horizon annuity
        Quantity::RewardStreamNpv => Some(-mu * (-(horizon as f64) * d.ln_1p()).exp_m1() / d),
        _ if d == 0.0 => None,
        Quantity::TicketValue => Some(analytics::expected_ticket_value(mu, d, n)?),
        Quantity::TicketValueVariance => Some(analytics::ticket_value_variance(mu, params.reward_variance(), d, n)?),
        Quantity::HolderValue { p } => {
            let k = holder_tickets(p, params.n())? as f64;
            Some(analytics::control_value(k / n, mu, d, n)?)
        }
    })
}

/// One Monte Carlo estimate of the configured quantity.
pub fn run_simulate(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let params = cfg.params()?;
    let quantity = cfg.quantity.quantity(cfg.control_fraction);
    let est = estimate(&params, quantity, &cfg.sim_options())?;
    let mut row = ReportRow::new(quantity.name()).monte_carlo(est.mean, est.stderr, est.trials);
    if let Some(r) = reference(&params, quantity, est.horizon, cfg.multiblock)? {
        row = row.closed_form(r);
    }
    Ok(vec![row.judged()])
}

/// Protocol revenue under the configured pricing policy (fair value if none).
pub fn run_pricing(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let params = cfg.params()?;
    let policy = cfg.policy.unwrap_or_default();
    let capture = protocol_capture(&policy, &params)?;
    let (mu, d, n) = (params.mu(), params.d(), params.n_f64());
    let fair_series = ticket_value_series(mu, d, n, DEFAULT_EPSILON)?;
    let price_series = policy.price(fair_series)?;
    let annuity_series = npv_rewards_series(1.0, d, DEFAULT_EPSILON)?;
    let npv = analytics::npv_rewards(mu, d)?;

    let mut leakage = ReportRow::new("leakage").closed_form(capture.leakage);
    // the protocol cannot collect more than the rewards are worth
    leakage.pass = capture.leakage >= -1e-9 * npv;

    Ok(vec![
        ReportRow::new("ticket_price").closed_form(capture.price).oracle(price_series).judged(),
        ReportRow::new("initial_sale").closed_form(capture.initial_sale).oracle(n * price_series).judged(),
        ReportRow::new("per_slot_stream_npv")
            .closed_form(capture.per_slot_stream_npv)
            .oracle(price_series * annuity_series)
            .judged(),
        ReportRow::new("protocol_capture")
            .closed_form(capture.total)
            .oracle(price_series * (n + annuity_series))
            .judged(),
        leakage,
    ])
}

fn significance_row(label: &str, value: f64, stderr: f64, trials: u64) -> ReportRow {
    let mut row = ReportRow::new(label).monte_carlo(value, stderr, trials);
    row.z_score = z_score(value, stderr, 0.0);
    // a pool never adds variance and a bonus never removes value
    row.pass = row.z_score.is_some_and(|z| z >= -Z_LIMIT);
    row
}

/// Payoff variance of a pooled ticket against holding it alone.
pub fn run_pool(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let params = cfg.params()?;
    let pool = cfg.pool.as_ref().expect("validated pool table");
    let r = pooled_variance_experiment_with(&params, pool.k, &pool.spec()?, &cfg.sim_options())?;
    Ok(vec![
        ReportRow::new("solo_variance")
            .closed_form(r.solo_closed_form)
            .monte_carlo(r.solo_variance, r.solo_stderr, r.trials)
            .judged(),
        ReportRow::new("pooled_per_ticket_variance")
            .monte_carlo(r.pooled_per_ticket_variance, r.pooled_stderr, r.trials)
            .judged(),
        ReportRow::new("variance_ratio").monte_carlo(r.ratio, r.ratio_stderr, r.trials).judged(),
        significance_row("variance_reduction", r.reduction, r.reduction_stderr, r.trials),
    ])
}

/// Holder value with consecutive-slot bonuses against the additive valuation.
pub fn run_multiblock(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let params = cfg.params()?;
    let spec = cfg.multiblock.expect("validated multiblock table");
    let r = multiblock_value_experiment(&params, spec, cfg.control_fraction, &cfg.sim_options())?;
    let est = r.simulated_holder_npv;
    let holder = ReportRow::new("holder_value")
        .closed_form(r.additive_baseline)
        .monte_carlo(est.mean, est.stderr, est.trials)
        .judged_with(|z| z >= -Z_LIMIT);
    Ok(vec![
        holder,
        significance_row("multiblock_premium", r.premium, r.premium_stderr, est.trials),
    ])
}
