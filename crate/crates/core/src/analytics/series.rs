//! Truncated geometric-envelope summation and the defining series of each
//! closed form. These sum the slot-by-slot expectations directly and never
//! call the closed forms they are used to check.

use crate::{Error, Result};

/// Default relative tail tolerance.
pub const DEFAULT_EPSILON: f64 = 1e-12;

const MAX_TERMS: u64 = 200_000_000;

/// Sums `term(1) + term(2) + ...` until the geometric tail bound drops below
/// `epsilon * |partial sum|`.
///
/// `ratio` is the envelope ratio: once `|term(t+1)| <= ratio * |term(t)|`
/// holds it must keep holding, so the remainder after `t` is at most
/// `|term(t)| * ratio / (1 - ratio)`. Stopping requires that local ratio to
/// have been observed.
pub fn truncated_series_sum<F>(term: F, ratio: f64, epsilon: f64) -> Result<f64>
where
    F: Fn(u64) -> f64,
{
    if !(ratio.is_finite() && (0.0..1.0).contains(&ratio)) {
        return Err(Error::Divergence(ratio));
    }
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::invalid("epsilon", format!("must be finite and > 0, got {epsilon}")));
    }
    let tail_factor = ratio / (1.0 - ratio);
    let mut sum = NeumaierSum::default();
    let mut prev = f64::NAN;
    for t in 1..=MAX_TERMS {
        let x = term(t);
        if !x.is_finite() {
            return Err(Error::invalid("series term", format!("term {t} is not finite ({x})")));
        }
        sum.add(x);
        let within_envelope = t >= 2 && (x == 0.0 || (prev != 0.0 && (x / prev).abs() <= ratio));
        if within_envelope && x.abs() * tail_factor <= epsilon * sum.value().abs() {
            return Ok(sum.value());
        }
        prev = x;
    }
    Err(Error::Divergence(ratio))
}

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = NeumaierSum::default();
        iter.into_iter().for_each(|x| s.add(x));
        s
    }
}

/// Probability a ticket has survived `t - 1` draws and wins draw `t`.
fn win_at(t: u64, n: f64) -> f64 {
    let survive = 1.0 - 1.0 / n;
    survive.powi((t - 1) as i32) / n
}

fn discount(t: u64, d: f64) -> f64 {
    (1.0 + d).powi(t as i32)
}

/// `sum_t mu / (1+d)^t`.
pub fn npv_rewards_series(mu: f64, d: f64, epsilon: f64) -> Result<f64> {
    positive_d(d)?;
    truncated_series_sum(|t| mu / discount(t, d), 1.0 / (1.0 + d), epsilon)
}

/// `sum_t P(W = t) mu / (1+d)^t`.
pub fn ticket_value_series(mu: f64, d: f64, n: f64, epsilon: f64) -> Result<f64> {
    positive_d(d)?;
    let ratio = (1.0 - 1.0 / n) / (1.0 + d);
    truncated_series_sum(|t| win_at(t, n) * mu / discount(t, d), ratio, epsilon)
}

/// `sum_t P(W = t) (Var R + mu^2) / (1+d)^(2t)`.
pub fn ticket_second_moment_series(mu: f64, var_r: f64, d: f64, n: f64, epsilon: f64) -> Result<f64> {
    positive_d(d)?;
    let raw = var_r + mu * mu;
    let ratio = (1.0 - 1.0 / n) / ((1.0 + d) * (1.0 + d));
    truncated_series_sum(|t| win_at(t, n) * raw / discount(2 * t, d), ratio, epsilon)
}

/// `E[V^2] - E[V]^2` with both moments taken from their series.
pub fn ticket_variance_series(mu: f64, var_r: f64, d: f64, n: f64, epsilon: f64) -> Result<f64> {
    let second = ticket_second_moment_series(mu, var_r, d, n, epsilon)?;
    let first = ticket_value_series(mu, d, n, epsilon)?;
    Ok(second - first * first)
}

/// `sum_t t P(T = t)` and `sum_t t^2 P(T = t)` for the geometric waiting time.
pub fn time_to_win_moments_series(n: f64, epsilon: f64) -> Result<(f64, f64)> {
    let q = 1.0 - 1.0 / n;
    let ratio = 0.5 * (1.0 + q);
    let first = truncated_series_sum(|t| t as f64 * win_at(t, n), ratio, epsilon)?;
    let second = truncated_series_sum(|t| (t * t) as f64 * win_at(t, n), ratio, epsilon)?;
    Ok((first, second))
}

/// Term-by-term n-derivative of `n * E[V_ticket]` (the value of holding all
/// n tickets), with n treated as continuous:
/// `sum_s s q^(s-1) / n^2 * mu / (1+d)^(s+1)`.
pub fn issued_value_derivative_series(mu: f64, d: f64, n: f64, epsilon: f64) -> Result<f64> {
    positive_d(d)?;
    let q = 1.0 - 1.0 / n;
    let ratio = 0.5 * (1.0 + q / (1.0 + d));
    truncated_series_sum(
        |s| s as f64 * q.powi((s - 1) as i32) / (n * n) * mu / discount(s + 1, d),
        ratio,
        epsilon,
    )
}

/// n-derivative of `E[V_ticket]` via `(nV)'/n - V/n`, both from series.
pub fn ticket_value_derivative_series(mu: f64, d: f64, n: f64, epsilon: f64) -> Result<f64> {
    let issued = issued_value_derivative_series(mu, d, n, epsilon)?;
    let value = ticket_value_series(mu, d, n, epsilon)?;
    Ok((issued - value) / n)
}

fn positive_d(d: f64) -> Result<()> {
    if d > 0.0 {
        Ok(())
    } else {
        Err(Error::DiscountRate(d))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_sum_of_discount_factors() {
        let s = truncated_series_sum(|t| 1.0 / 1.05f64.powi(t as i32), 1.0 / 1.05, DEFAULT_EPSILON).unwrap();
        assert!((s - 20.0).abs() < 1e-9, "{s}");
    }

    #[test]
    fn zero_series() {
        assert_eq!(truncated_series_sum(|_| 0.0, 0.5, DEFAULT_EPSILON).unwrap(), 0.0);
        assert_eq!(npv_rewards_series(0.0, 0.1, DEFAULT_EPSILON).unwrap(), 0.0);
    }

    #[test]
    fn ticket_proof_inner_sum() {
        // sum ((n-1)/(n(1+d)))^(t-1) = n(1+d)/(nd+1) = 50.5 at n=100, d=0.01
        let r = 99.0 / (100.0 * 1.01);
        let s = truncated_series_sum(|t| r.powi((t - 1) as i32), r, DEFAULT_EPSILON).unwrap();
        assert!((s - 50.5).abs() < 1e-9, "{s}");
    }

    #[test]
    fn rejects_non_contracting() {
        assert!(matches!(truncated_series_sum(|_| 1.0, 1.0, 1e-12), Err(Error::Divergence(_))));
        assert!(matches!(truncated_series_sum(|_| 1.0, 1.5, 1e-12), Err(Error::Divergence(_))));
        assert!(matches!(truncated_series_sum(|_| 1.0, -0.1, 1e-12), Err(Error::Divergence(_))));
        assert!(matches!(npv_rewards_series(1.0, 0.0, 1e-12), Err(Error::DiscountRate(_))));
    }

    #[test]
    fn time_to_win_moments() {
        let (m1, m2) = time_to_win_moments_series(10.0, DEFAULT_EPSILON).unwrap();
        assert!((m1 - 10.0).abs() < 1e-9);
        assert!((m2 - m1 * m1 - 90.0).abs() < 1e-8);
        let (m1, m2) = time_to_win_moments_series(1.0, DEFAULT_EPSILON).unwrap();
        assert_eq!((m1, m2), (1.0, 1.0));
    }

    #[test]
    fn single_ticket_series_is_one_term() {
        let v = ticket_value_series(1.0, 0.05, 1.0, DEFAULT_EPSILON).unwrap();
        assert_eq!(v, 1.0 / 1.05);
        // d/dn at n = 1 is -mu d / (1+d)^2
        let dv = ticket_value_derivative_series(1.0, 0.05, 1.0, DEFAULT_EPSILON).unwrap();
        assert!((dv + 0.05 / 1.1025).abs() < 1e-15, "{dv}");
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let xs = std::iter::once(1.0).chain(std::iter::repeat_n(1e-16, 10_000));
        let s: NeumaierSum = xs.collect();
        assert!((s.value() - (1.0 + 1e-12)).abs() < 1e-15);
    }
}
