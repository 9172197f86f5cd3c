//! Closed-form valuations of tickets and reward streams.
//!
//! Ticket counts are taken as `f64`: the protocol only issues whole tickets,
//! but the n-derivatives treat `n` as a continuous quantity and every formula
//! here is smooth in it.

pub mod series;

use serde::Serialize;

use crate::model::EconomyParams;
use crate::{Error, Result};

pub use series::truncated_series_sum;

fn check_mu(mu: f64) -> Result<()> {
    if mu.is_finite() && mu >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid("mu", format!("mean reward must be finite and >= 0, got {mu}")))
    }
}

fn check_d(d: f64) -> Result<()> {
    if d.is_finite() && d > 0.0 {
        Ok(())
    } else {
        Err(Error::DiscountRate(d))
    }
}

fn check_n(n: f64) -> Result<()> {
    if n.is_finite() && n >= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid("n", format!("ticket count must be >= 1, got {n}")))
    }
}

fn check_p(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::invalid("p", format!("controlled fraction must lie in [0, 1], got {p}")))
    }
}

fn check_var(var_r: f64) -> Result<()> {
    if var_r.is_finite() && var_r >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid("var_r", format!("reward variance must be finite and >= 0, got {var_r}")))
    }
}

/// Expected present value of every future reward, `mu / d`.
pub fn npv_rewards(mu: f64, d: f64) -> Result<f64> {
    check_mu(mu)?;
    check_d(d)?;
    Ok(mu / d)
}

/// Expected present value of one outstanding ticket, `mu / (n d + 1)`.
pub fn expected_ticket_value(mu: f64, d: f64, n: f64) -> Result<f64> {
    check_mu(mu)?;
    check_d(d)?;
    check_n(n)?;
    Ok(mu / (n * d + 1.0))
}

/// Value of all `n` issued tickets, `n mu / (n d + 1)`. Increases to `mu / d`.
pub fn issued_market_cap(mu: f64, d: f64, n: f64) -> Result<f64> {
    Ok(n * expected_ticket_value(mu, d, n)?)
}

/// Value of the tickets not yet minted: one ticket per future slot, each worth
/// `E[V_ticket]` when minted.
pub fn unissued_ticket_value(mu: f64, d: f64, n: f64) -> Result<f64> {
    Ok(expected_ticket_value(mu, d, n)? / d)
}

/// Issued plus unissued tickets. Equal to [`npv_rewards`] for every `n`.
pub fn total_ticket_value(mu: f64, d: f64, n: f64) -> Result<f64> {
    Ok(issued_market_cap(mu, d, n)? + unissued_ticket_value(mu, d, n)?)
}

/// Mean number of slots until a given ticket wins (geometric, `p = 1/n`).
pub fn expected_slots_to_win(n: f64) -> Result<f64> {
    check_n(n)?;
    Ok(n)
}

/// Variance of the waiting time, `(1 - p) / p^2 = n (n - 1)`.
pub fn slots_to_win_variance(n: f64) -> Result<f64> {
    check_n(n)?;
    Ok(n * (n - 1.0))
}

/// `d/dn E[V_ticket] = -mu d / (n d + 1)^2`.
pub fn ticket_value_derivative_n(mu: f64, d: f64, n: f64) -> Result<f64> {
    check_mu(mu)?;
    check_d(d)?;
    check_n(n)?;
    let denom = n * d + 1.0;
    Ok(-mu * d / (denom * denom))
}

/// Value of holding a fraction `p` of the outstanding tickets, `p n mu / (n d + 1)`.
pub fn control_value(p: f64, mu: f64, d: f64, n: f64) -> Result<f64> {
    check_p(p)?;
    Ok(p * issued_market_cap(mu, d, n)?)
}

/// `d/dn` of [`control_value`], `p mu / (n d + 1)^2`.
pub fn control_value_derivative_n(p: f64, mu: f64, d: f64, n: f64) -> Result<f64> {
    check_p(p)?;
    check_mu(mu)?;
    check_d(d)?;
    check_n(n)?;
    let denom = n * d + 1.0;
    Ok(p * mu / (denom * denom))
}

/// `E[V_ticket^2] = (Var R + mu^2) / (n d^2 + 2 n d + 1)`.
pub fn ticket_value_second_moment(mu: f64, var_r: f64, d: f64, n: f64) -> Result<f64> {
    check_mu(mu)?;
    check_var(var_r)?;
    check_d(d)?;
    check_n(n)?;
    Ok((var_r + mu * mu) / (n * d * (d + 2.0) + 1.0))
}

/// `Var(V_ticket) = (Var R + mu^2) / (n d^2 + 2 n d + 1) - mu^2 / (n d + 1)^2`.
///
/// Evaluated as `Var R / A + mu^2 n d^2 (n - 1) / (A B^2)` with
/// `A = n d^2 + 2 n d + 1`, `B = n d + 1`: the two forms are algebraically
/// equal, and this one is free of cancellation and exactly zero when
/// `Var R = 0` and `n = 1`.
pub fn ticket_value_variance(mu: f64, var_r: f64, d: f64, n: f64) -> Result<f64> {
    check_mu(mu)?;
    check_var(var_r)?;
    check_d(d)?;
    check_n(n)?;
    let a = n * d * (d + 2.0) + 1.0;
    let b = n * d + 1.0;
    Ok(var_r / a + mu * mu * n * d * d * (n - 1.0) / (a * b * b))
}

/// Which valuation produced a [`Valuation`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FormulaId {
    NpvRewards,
    ExpectedTicketValue,
    TotalTicketValue,
    IssuedMarketCap,
    ExpectedSlotsToWin,
    SlotsToWinVariance,
    TicketValueDerivativeN,
    ControlValue,
    ControlValueDerivativeN,
    TicketValueSecondMoment,
    TicketValueVariance,
}

impl FormulaId {
    pub const ALL: [FormulaId; 11] = [
        FormulaId::NpvRewards,
        FormulaId::ExpectedTicketValue,
        FormulaId::TotalTicketValue,
        FormulaId::IssuedMarketCap,
        FormulaId::ExpectedSlotsToWin,
        FormulaId::SlotsToWinVariance,
        FormulaId::TicketValueDerivativeN,
        FormulaId::ControlValue,
        FormulaId::ControlValueDerivativeN,
        FormulaId::TicketValueSecondMoment,
        FormulaId::TicketValueVariance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FormulaId::NpvRewards => "npv_rewards",
            FormulaId::ExpectedTicketValue => "expected_ticket_value",
            FormulaId::TotalTicketValue => "total_ticket_value",
            FormulaId::IssuedMarketCap => "issued_market_cap",
            FormulaId::ExpectedSlotsToWin => "expected_slots_to_win",
            FormulaId::SlotsToWinVariance => "slots_to_win_variance",
            FormulaId::TicketValueDerivativeN => "ticket_value_derivative_n",
            FormulaId::ControlValue => "control_value",
            FormulaId::ControlValueDerivativeN => "control_value_derivative_n",
            FormulaId::TicketValueSecondMoment => "ticket_value_second_moment",
            FormulaId::TicketValueVariance => "ticket_value_variance",
        }
    }
}

/// Inputs a valuation was computed from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValuationInputs {
    pub mu: f64,
    pub var_r: f64,
    pub d: f64,
    pub n: f64,
    pub p: f64,
}

impl ValuationInputs {
    pub fn from_params(params: &EconomyParams, p: f64) -> Self {
        Self {
            mu: params.mu(),
            var_r: params.reward_variance(),
            d: params.d(),
            n: params.n_f64(),
            p,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Valuation {
    pub value: f64,
    pub formula: FormulaId,
    pub inputs: ValuationInputs,
}

impl Valuation {
    pub fn compute(formula: FormulaId, inputs: ValuationInputs) -> Result<Self> {
        let ValuationInputs { mu, var_r, d, n, p } = inputs;
        let value = match formula {
            FormulaId::NpvRewards => npv_rewards(mu, d)?,
            FormulaId::ExpectedTicketValue => expected_ticket_value(mu, d, n)?,
            FormulaId::TotalTicketValue => total_ticket_value(mu, d, n)?,
            FormulaId::IssuedMarketCap => issued_market_cap(mu, d, n)?,
            FormulaId::ExpectedSlotsToWin => expected_slots_to_win(n)?,
            FormulaId::SlotsToWinVariance => slots_to_win_variance(n)?,
            FormulaId::TicketValueDerivativeN => ticket_value_derivative_n(mu, d, n)?,
            FormulaId::ControlValue => control_value(p, mu, d, n)?,
            FormulaId::ControlValueDerivativeN => control_value_derivative_n(p, mu, d, n)?,
            FormulaId::TicketValueSecondMoment => ticket_value_second_moment(mu, var_r, d, n)?,
            FormulaId::TicketValueVariance => ticket_value_variance(mu, var_r, d, n)?,
        };
        Ok(Self { value, formula, inputs })
    }
}

#[cfg(test)]
mod tests {
    use super::series::*;
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn npv_rewards_examples() {
        assert_eq!(npv_rewards(2.0, 0.05).unwrap(), 40.0);
        let oracle = npv_rewards_series(2.0, 0.05, DEFAULT_EPSILON).unwrap();
        assert!(close(oracle, 40.0, 1e-9), "{oracle}");
        assert_eq!(npv_rewards(0.0, 0.1).unwrap(), 0.0);
        assert!(matches!(npv_rewards(1.0, 0.0), Err(Error::DiscountRate(_))));
        assert!(matches!(npv_rewards(1.0, -0.5), Err(Error::DiscountRate(_))));
    }

    #[test]
    fn expected_ticket_value_examples() {
        let oracle = ticket_value_series(1.0, 0.01, 100.0, DEFAULT_EPSILON).unwrap();
        assert!(close(oracle, 0.5, 1e-9), "{oracle}");
        assert_eq!(expected_ticket_value(1.0, 0.01, 100.0).unwrap(), 0.5);
        assert_eq!(expected_ticket_value(1.0, 0.05, 1.0).unwrap(), 1.0 / 1.05);
        assert_eq!(expected_ticket_value(0.0, 0.02, 50.0).unwrap(), 0.0);
        assert!(expected_ticket_value(1.0, 0.0, 5.0).is_err());
        assert!(expected_ticket_value(1.0, 0.1, 0.5).is_err());
    }

    #[test]
    fn issued_market_cap_examples() {
        let cap = issued_market_cap(1.0, 0.01, 10_000.0).unwrap();
        assert!(close(cap, 10_000.0 / 101.0, 1e-15));
        let oracle = 10_000.0 * ticket_value_series(1.0, 0.01, 10_000.0, DEFAULT_EPSILON).unwrap();
        assert!(close(oracle, cap, 1e-9));
        assert_eq!(issued_market_cap(0.0, 0.5, 3.0).unwrap(), 0.0);
        let npv = npv_rewards(1.0, 0.01).unwrap();
        for k in 2..=7 {
            let n = 10f64.powi(k);
            let cap = issued_market_cap(1.0, 0.01, n).unwrap();
            assert!(cap < npv);
            let gap = (npv - cap) / npv;
            assert!(close(gap, 1.0 / (n * 0.01 + 1.0), 1e-9), "n={n}");
        }
    }

    #[test]
    fn total_ticket_value_examples() {
        let v = expected_ticket_value(1.0, 0.02, 7.0).unwrap();
        assert!(close(v, 0.877_192_982_456_140_4, 1e-15));
        let total = total_ticket_value(1.0, 0.02, 7.0).unwrap();
        assert!(close(total, 50.0, 1e-9));
        assert!(close(7.0 * v + v / 0.02, 50.0, 1e-9));
        assert!(close(total_ticket_value(1.0, 0.05, 1.0).unwrap(), 20.0, 1e-12));
        assert!(close(total_ticket_value(1.0, 0.05, 1e6).unwrap(), 20.0, 1e-12));
        assert_eq!(total_ticket_value(0.0, 0.01, 10.0).unwrap(), 0.0);
    }

    #[test]
    fn slots_to_win() {
        assert_eq!(expected_slots_to_win(10.0).unwrap(), 10.0);
        assert_eq!(expected_slots_to_win(1.0).unwrap(), 1.0);
        assert_eq!(slots_to_win_variance(10.0).unwrap(), 90.0);
        assert_eq!(slots_to_win_variance(1.0).unwrap(), 0.0);
        assert!(expected_slots_to_win(0.0).is_err());
    }

    fn central_difference(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn derivative_examples() {
        let a = ticket_value_derivative_n(1.0, 0.01, 100.0).unwrap();
        assert!(close(a, -0.0025, 1e-15));
        let fd = central_difference(|n| expected_ticket_value(1.0, 0.01, n).unwrap(), 100.0, 1e-4);
        assert!((fd - a).abs() < 1e-8, "{fd}");
        assert_eq!(ticket_value_derivative_n(0.0, 0.3, 4.0).unwrap(), 0.0);

        let c = control_value_derivative_n(0.5, 1.0, 0.01, 100.0).unwrap();
        assert!(close(c, 0.125, 1e-15));
        let fd = central_difference(|n| control_value(0.5, 1.0, 0.01, n).unwrap(), 100.0, 1e-4);
        assert!((fd - c).abs() < 1e-8, "{fd}");
        assert_eq!(control_value_derivative_n(0.0, 1.0, 0.3, 4.0).unwrap(), 0.0);
    }

    #[test]
    fn derivative_series_agree() {
        for (mu, d, n) in [(1.0, 0.01, 100.0), (2.5, 0.2, 3.0), (1.0, 0.001, 1.0), (0.3, 0.05, 37.0)] {
            let s = ticket_value_derivative_series(mu, d, n, DEFAULT_EPSILON).unwrap();
            assert!(close(s, ticket_value_derivative_n(mu, d, n).unwrap(), 1e-9), "{mu} {d} {n}");
            let s = issued_value_derivative_series(mu, d, n, DEFAULT_EPSILON).unwrap();
            assert!(close(s, control_value_derivative_n(1.0, mu, d, n).unwrap(), 1e-9));
        }
    }

    #[test]
    fn control_value_examples() {
        assert!(close(control_value(0.25, 1.0, 0.005, 200.0).unwrap(), 25.0, 1e-15));
        assert_eq!(control_value(0.0, 1.0, 0.005, 200.0).unwrap(), 0.0);
        assert_eq!(
            control_value(1.0, 2.0, 0.03, 17.0).unwrap(),
            issued_market_cap(2.0, 0.03, 17.0).unwrap()
        );
        assert!(control_value(1.5, 1.0, 0.01, 10.0).is_err());
        assert!(control_value(-0.1, 1.0, 0.01, 10.0).is_err());
        assert!(control_value_derivative_n(2.0, 1.0, 0.01, 10.0).is_err());
    }

    #[test]
    fn second_moment_examples() {
        let m = ticket_value_second_moment(1.0, 1.0, 0.1, 10.0).unwrap();
        assert!(close(m, 2.0 / 3.1, 1e-15));
        let oracle = ticket_second_moment_series(1.0, 1.0, 0.1, 10.0, DEFAULT_EPSILON).unwrap();
        assert!(close(oracle, m, 1e-9), "{oracle}");
        assert_eq!(ticket_value_second_moment(0.0, 0.0, 0.1, 10.0).unwrap(), 0.0);
        let m = ticket_value_second_moment(1.0, 0.0, 0.05, 1.0).unwrap();
        assert!(close(m, 1.0 / (1.05 * 1.05), 1e-15));
    }

    #[test]
    fn variance_examples() {
        assert_eq!(ticket_value_variance(1.0, 0.0, 0.01, 1.0).unwrap(), 0.0);
        let v = ticket_value_variance(1.0, 1.0, 0.1, 10.0).unwrap();
        assert!(close(v, 2.0 / 3.1 - 0.25, 1e-14));
        assert!(close(v, 0.395_161_290_322_580_6, 1e-12));
        let oracle = ticket_variance_series(1.0, 1.0, 0.1, 10.0, DEFAULT_EPSILON).unwrap();
        assert!(close(oracle, v, 1e-9));
        let timing_only = ticket_value_variance(1.0, 0.0, 0.1, 10.0).unwrap();
        assert!(close(timing_only, 1.0 / 3.1 - 0.25, 1e-13));
        assert!(close(timing_only, 0.072_580_645_161_290_3, 1e-12));
        assert!(timing_only > 0.0);
    }

    #[test]
    fn monotone_over_doubling_n() {
        let ns: Vec<f64> = (0..=20).map(|k| (1u64 << k) as f64).collect();
        for w in ns.windows(2) {
            assert!(expected_ticket_value(1.0, 0.01, w[1]).unwrap() < expected_ticket_value(1.0, 0.01, w[0]).unwrap());
            assert!(control_value(0.3, 1.0, 0.01, w[1]).unwrap() > control_value(0.3, 1.0, 0.01, w[0]).unwrap());
        }
    }

    #[test]
    fn valuation_dispatch() {
        let inputs = ValuationInputs { mu: 1.0, var_r: 1.0, d: 0.1, n: 10.0, p: 0.5 };
        for f in FormulaId::ALL {
            let v = Valuation::compute(f, inputs).unwrap();
            assert!(v.value.is_finite(), "{}", f.name());
        }
        let v = Valuation::compute(FormulaId::ExpectedSlotsToWin, inputs).unwrap();
        assert_eq!(v.value, 10.0);
    }

    proptest! {
        #[test]
        fn total_value_equals_npv(mu in 1e-3..1e3f64, d in 1e-4..1.0f64, n in 1u64..10_000_000) {
            let n = n as f64;
            let npv = npv_rewards(mu, d).unwrap();
            prop_assert!((total_ticket_value(mu, d, n).unwrap() - npv).abs() < 1e-9 * npv);
        }

        #[test]
        fn derivative_signs(mu in 1e-3..1e3f64, d in 1e-4..1.0f64, n in 1.0..1e6f64, p in 1e-3..1.0f64) {
            prop_assert!(ticket_value_derivative_n(mu, d, n).unwrap() < 0.0);
            prop_assert!(control_value_derivative_n(p, mu, d, n).unwrap() > 0.0);
        }

        #[test]
        fn variance_nonnegative(mu in 0.0..10.0f64, var_r in 0.0..10.0f64, d in 1e-4..1.0f64, n in 1u64..100_000) {
            let v = ticket_value_variance(mu, var_r, d, n as f64).unwrap();
            prop_assert!(v >= 0.0);
            if mu > 0.0 && (var_r > 0.0 || n > 1) {
                prop_assert!(v > 0.0);
            }
        }

        #[test]
        fn variance_matches_expanded_form(mu in 0.0..10.0f64, var_r in 0.0..10.0f64, d in 1e-3..1.0f64, n in 1u64..1_000) {
            let n = n as f64;
            let direct = (var_r + mu * mu) / (n * d * d + 2.0 * n * d + 1.0) - mu * mu / (n * n * d * d + 2.0 * n * d + 1.0);
            let stable = ticket_value_variance(mu, var_r, d, n).unwrap();
            let scale = (var_r + mu * mu).max(1e-300);
            prop_assert!((direct - stable).abs() <= 1e-12 * scale);
        }
    }
}
