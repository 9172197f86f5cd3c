//! Closed forms checked against their defining series and Monte Carlo.

use crate::analytics::series;
use crate::analytics::{FormulaId, Valuation, ValuationInputs};
use crate::sim::{simulate, Estimate, Quantity, SampleStats};
use crate::Result;

use super::config::ExperimentConfig;
use super::report::ReportRow;

/// Evaluates one closed form. Swappable so a deliberately broken formula can
/// be fed through the suite.
pub type ClosedForm = fn(FormulaId, ValuationInputs) -> Result<f64>;

pub fn standard_closed_form(formula: FormulaId, inputs: ValuationInputs) -> Result<f64> {
    Valuation::compute(formula, inputs).map(|v| v.value)
}

/// Relative tail tolerance of the oracle sums. Tighter than the library
/// default because the variance oracles subtract two nearly equal moments.
pub const ORACLE_EPSILON: f64 = 1e-15;

/// The defining series behind `formula`, summed to [`ORACLE_EPSILON`].
pub fn series_oracle(formula: FormulaId, inputs: ValuationInputs) -> Result<f64> {
    let ValuationInputs { mu, var_r, d, n, p } = inputs;
    let eps = ORACLE_EPSILON;
    Ok(match formula {
        FormulaId::NpvRewards => series::npv_rewards_series(mu, d, eps)?,
        FormulaId::ExpectedTicketValue => series::ticket_value_series(mu, d, n, eps)?,
        FormulaId::TotalTicketValue => {
            let v = series::ticket_value_series(mu, d, n, eps)?;
            n * v + v / d
        }
        FormulaId::IssuedMarketCap => n * series::ticket_value_series(mu, d, n, eps)?,
        FormulaId::ExpectedSlotsToWin => series::time_to_win_moments_series(n, eps)?.0,
        FormulaId::SlotsToWinVariance => {
            let (m1, m2) = series::time_to_win_moments_series(n, eps)?;
            m2 - m1 * m1
        }
        FormulaId::TicketValueDerivativeN => series::ticket_value_derivative_series(mu, d, n, eps)?,
        FormulaId::ControlValue => p * n * series::ticket_value_series(mu, d, n, eps)?,
        FormulaId::ControlValueDerivativeN => p * series::issued_value_derivative_series(mu, d, n, eps)?,
        FormulaId::TicketValueSecondMoment => series::ticket_second_moment_series(mu, var_r, d, n, eps)?,
        FormulaId::TicketValueVariance => series::ticket_variance_series(mu, var_r, d, n, eps)?,
    })
}

/// Closed forms only, at the configured `p`.
pub fn run_analytic(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let inputs = ValuationInputs::from_params(&cfg.params()?, cfg.control_fraction);
    FormulaId::ALL
        .iter()
        .map(|&f| Ok(ReportRow::new(f.name()).closed_form(standard_closed_form(f, inputs)?).judged()))
        .collect()
}

/// Closed form and series oracle for every formula.
pub fn oracle_rows(cfg: &ExperimentConfig, closed: ClosedForm) -> Result<Vec<ReportRow>> {
    let inputs = ValuationInputs::from_params(&cfg.params()?, cfg.control_fraction);
    FormulaId::ALL
        .iter()
        .map(|&f| {
            Ok(ReportRow::new(f.name())
                .closed_form(closed(f, inputs)?)
                .oracle(series_oracle(f, inputs)?)
                .judged())
        })
        .collect()
}

/// Number of tickets the holder rows use: `round(p n)` kept within `1..=n`.
pub fn realizable_holding(p: f64, n: u64) -> u64 {
    ((p * n as f64).round() as u64).clamp(1, n)
}

/// Full suite with the standard closed forms.
pub fn run_verify(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    run_verify_with(cfg, standard_closed_form)
}

/// One row per formula: closed form, series oracle and, where the quantity is
/// observable in a trajectory, a Monte Carlo estimate.
///
/// Control-value rows are evaluated at `round(p n) / n`, the fraction a
/// holder of whole tickets can actually own.
pub fn run_verify_with(cfg: &ExperimentConfig, closed: ClosedForm) -> Result<Vec<ReportRow>> {
    let params = cfg.params()?;
    params.require_positive_discount()?;
    let n = params.n();
    let k = realizable_holding(cfg.control_fraction, n);
    let p = k as f64 / params.n_f64();
    let inputs = ValuationInputs::from_params(&params, p);
    let opts = cfg.sim_options();

    let ticket = Quantity::TicketValue;
    let setup = ticket.setup(&params, &opts)?;
    let horizon = setup.horizon();
    let sim = simulate(&params, &setup, &opts, |r| {
        (r.discounted_payoff(), r.tracked_ticket_win_slot().unwrap_or(horizon) as f64)
    })?;
    let payoff = SampleStats::from_iter_twice(|| sim.values.iter().map(|v| v.0));
    let payoff_sq = SampleStats::from_iter_twice(|| sim.values.iter().map(|v| v.0 * v.0));
    let wait = SampleStats::from_iter_twice(|| sim.values.iter().map(|v| v.1));
    let npv = crate::sim::estimate(&params, Quantity::RewardStreamNpv, &opts)?;
    let holder = crate::sim::estimate(&params, Quantity::HolderValue { p }, &opts)?;

    let mut rows = Vec::with_capacity(FormulaId::ALL.len());
    for f in FormulaId::ALL {
        let mc = match f {
            FormulaId::NpvRewards => Some(npv),
            FormulaId::ExpectedTicketValue => Some(Estimate::of_mean(&payoff)),
            FormulaId::ExpectedSlotsToWin => Some(Estimate::of_mean(&wait)),
            FormulaId::SlotsToWinVariance => Some(Estimate::of_variance(&wait)),
            FormulaId::ControlValue => Some(holder),
            FormulaId::TicketValueSecondMoment => Some(Estimate::of_mean(&payoff_sq)),
            FormulaId::TicketValueVariance => Some(Estimate::of_variance(&payoff)),
            _ => None,
        };
        let mut row = ReportRow::new(f.name())
            .closed_form(closed(f, inputs)?)
            .oracle(series_oracle(f, inputs)?);
        if let Some(e) = mc {
            row = row.monte_carlo(e.mean, e.stderr, e.trials);
        }
        rows.push(row.judged());
    }
    Ok(rows)
}
