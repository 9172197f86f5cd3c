use serde::{Deserialize, Serialize};

use crate::analytics;
use crate::model::EconomyParams;
use crate::{Error, Result};

/// Stationary primary-sale price rule, relative to the fair ticket value.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", from = "PolicyTable")]
pub enum PricingPolicy {
    #[default]
    FairValue,
    /// Price is the fair value less an absolute margin `pi`.
    FixedMargin { pi: f64 },
    /// Price is the fair value scaled by `1 - delta`.
    FixedDiscount { delta: f64 },
}

// Unit variants of internally tagged enums accept stray keys, so decoding goes
// through a mirror whose variants are all tables.
#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum PolicyTable {
    FairValue {},
    FixedMargin { pi: f64 },
    FixedDiscount { delta: f64 },
}

impl From<PolicyTable> for PricingPolicy {
    fn from(t: PolicyTable) -> Self {
        match t {
            PolicyTable::FairValue {} => PricingPolicy::FairValue,
            PolicyTable::FixedMargin { pi } => PricingPolicy::FixedMargin { pi },
            PolicyTable::FixedDiscount { delta } => PricingPolicy::FixedDiscount { delta },
        }
    }
}

impl PricingPolicy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PricingPolicy::FairValue => Ok(()),
            PricingPolicy::FixedMargin { pi } if pi.is_finite() && pi >= 0.0 => Ok(()),
            PricingPolicy::FixedMargin { pi } => Err(Error::invalid("policy.pi", format!("margin must be finite and >= 0, got {pi}"))),
            PricingPolicy::FixedDiscount { delta } if (0.0..=1.0).contains(&delta) => Ok(()),
            PricingPolicy::FixedDiscount { delta } => {
                Err(Error::invalid("policy.delta", format!("discount must lie in [0, 1], got {delta}")))
            }
        }
    }

    /// Sale price of a ticket whose fair value is `fair`.
    pub fn price(&self, fair: f64) -> Result<f64> {
        self.validate()?;
        match *self {
            PricingPolicy::FairValue => Ok(fair),
            PricingPolicy::FixedMargin { pi } if pi > fair => Err(Error::NegativePrice { margin: pi, value: fair }),
            PricingPolicy::FixedMargin { pi } => Ok(fair - pi),
            PricingPolicy::FixedDiscount { delta } => Ok(fair * (1.0 - delta)),
        }
    }
}

/// Protocol revenue from selling tickets under a pricing policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Capture {
    pub price: f64,
    /// Sale of the `n` genesis tickets.
    pub initial_sale: f64,
    /// Present value of selling one replacement ticket per slot forever.
    pub per_slot_stream_npv: f64,
    pub total: f64,
    /// Reward value not captured by the protocol.
    pub leakage: f64,
}

pub fn protocol_capture(policy: &PricingPolicy, params: &EconomyParams) -> Result<Capture> {
    params.require_positive_discount()?;
    let (mu, d, n) = (params.mu(), params.d(), params.n_f64());
    let fair = analytics::expected_ticket_value(mu, d, n)?;
    let price = policy.price(fair)?;
    let initial_sale = n * price;
    let per_slot_stream_npv = price / d;
    let total = initial_sale + per_slot_stream_npv;
    let leakage = analytics::npv_rewards(mu, d)? - total;
    Ok(Capture {
        price,
        initial_sale,
        per_slot_stream_npv,
        total,
        leakage,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::series::{npv_rewards_series, truncated_series_sum, DEFAULT_EPSILON};
    use crate::model::RewardModel;
    use proptest::prelude::*;

    fn params(n: u64, d: f64, mu: f64) -> EconomyParams {
        EconomyParams::new(n, d, RewardModel::constant(mu).unwrap()).unwrap()
    }

    #[test]
    fn fair_value_captures_everything() {
        for n in [1, 7, 100, 100_000] {
            let c = protocol_capture(&PricingPolicy::FairValue, &params(n, 0.05, 1.0)).unwrap();
            assert!((c.total - 20.0).abs() < 20.0 * 1e-9);
            assert!(c.leakage.abs() < 20.0 * 1e-9);
        }
    }

    #[test]
    fn fixed_margin_capture_and_leakage() {
        let c = protocol_capture(&PricingPolicy::FixedMargin { pi: 0.1 }, &params(100, 0.01, 1.0)).unwrap();
        assert!((c.price - 0.4).abs() < 1e-12);
        assert!((c.total - 80.0).abs() < 1e-9);
        assert!((c.leakage - 20.0).abs() < 1e-9);
        assert!((c.leakage - (100.0 * 0.1 + 0.1 / 0.01)).abs() < 1e-9);

        // the replacement-sale stream summed slot by slot
        let stream = truncated_series_sum(|t| 0.4 / 1.01f64.powi(t as i32), 1.0 / 1.01, DEFAULT_EPSILON).unwrap();
        assert!((stream - c.per_slot_stream_npv).abs() < 1e-9 * c.per_slot_stream_npv);
        let npv = npv_rewards_series(1.0, 0.01, DEFAULT_EPSILON).unwrap();
        assert!((npv - (100.0 * 0.4 + stream) - 20.0).abs() < 1e-9 * npv);
    }

    #[test]
    fn free_tickets_leak_everything() {
        let c = protocol_capture(&PricingPolicy::FixedDiscount { delta: 1.0 }, &params(10, 0.02, 1.0)).unwrap();
        assert_eq!(c.total, 0.0);
        assert_eq!(c.leakage, 50.0);
    }

    #[test]
    fn errors() {
        let p = params(100, 0.01, 1.0);
        assert!(matches!(
            protocol_capture(&PricingPolicy::FixedMargin { pi: 0.6 }, &p),
            Err(Error::NegativePrice { .. })
        ));
        assert!(protocol_capture(&PricingPolicy::FixedMargin { pi: -0.1 }, &p).is_err());
        assert!(protocol_capture(&PricingPolicy::FixedDiscount { delta: 1.5 }, &p).is_err());
        assert!(matches!(
            protocol_capture(&PricingPolicy::FairValue, &params(10, 0.0, 1.0)),
            Err(Error::DiscountRate(_))
        ));
    }

    #[test]
    fn policy_deserializes_from_toml() {
        let p: PricingPolicy = toml::from_str("kind = \"fixed_margin\"\npi = 0.1").unwrap();
        assert_eq!(p, PricingPolicy::FixedMargin { pi: 0.1 });
        assert!(toml::from_str::<PricingPolicy>("kind = \"fair_value\"\npi = 0.1").is_err());
    }

    proptest! {
        #[test]
        fn fair_capture_identity(mu in 1e-3..1e3f64, d in 1e-4..1.0f64, n in 1u64..1_000_000) {
            let p = params(n, d, mu);
            let c = protocol_capture(&PricingPolicy::FairValue, &p).unwrap();
            let npv = mu / d;
            prop_assert!((c.total - npv).abs() < 1e-9 * npv);
        }

        #[test]
        fn margin_leakage_decomposition(mu in 1e-2..1e2f64, d in 1e-3..1.0f64, n in 1u64..10_000, frac in 0.0..1.0f64) {
            let p = params(n, d, mu);
            let pi = frac * mu / (n as f64 * d + 1.0);
            let c = protocol_capture(&PricingPolicy::FixedMargin { pi }, &p).unwrap();
            let expected = n as f64 * pi + pi / d;
            prop_assert!((c.leakage - expected).abs() <= 1e-9 * (mu / d));
        }
    }
}
