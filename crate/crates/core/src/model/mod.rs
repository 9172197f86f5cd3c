//! Model constants, reward laws and discounting shared by the rest of the crate.

pub(crate) mod discount;
mod reward;

pub use discount::{present_value, DiscountCurve};
pub use reward::{calibrate_lognormal, load_empirical_csv, EmpiricalRewards, RewardModel, REWARD_COLUMN};

use crate::{Error, Result};

/// Constants of the ticket economy: `n` outstanding tickets, per-slot discount
/// rate `d` and the per-slot reward law.
#[derive(Debug, Clone)]
pub struct EconomyParams {
    n: u64,
    d: f64,
    reward: RewardModel,
}

impl EconomyParams {
    /// `d = 0` is accepted here for finite-horizon simulation; analytic
    /// valuations call [`EconomyParams::require_positive_discount`].
    pub fn new(n: u64, d: f64, reward: RewardModel) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n", "at least one ticket must be outstanding"));
        }
        if !(d.is_finite() && d >= 0.0) {
            return Err(Error::invalid("d", format!("discount rate must be finite and >= 0, got {d}")));
        }
        Ok(Self { n, d, reward })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn n_f64(&self) -> f64 {
        self.n as f64
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn reward(&self) -> &RewardModel {
        &self.reward
    }

    pub fn mu(&self) -> f64 {
        self.reward.mean()
    }

    pub fn reward_variance(&self) -> f64 {
        self.reward.variance()
    }

    pub fn curve(&self) -> DiscountCurve {
        DiscountCurve::new(self.d).expect("validated at construction")
    }

    pub fn require_positive_discount(&self) -> Result<()> {
        if self.d > 0.0 {
            Ok(())
        } else {
            Err(Error::DiscountRate(self.d))
        }
    }

    pub fn with_n(&self, n: u64) -> Result<Self> {
        Self::new(n, self.d, self.reward.clone())
    }

    pub fn with_d(&self, d: f64) -> Result<Self> {
        Self::new(self.n, d, self.reward.clone())
    }

    pub fn with_reward(&self, reward: RewardModel) -> Result<Self> {
        Self::new(self.n, self.d, reward)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_validation() {
        let r = RewardModel::constant(1.0).unwrap();
        assert!(EconomyParams::new(0, 0.01, r.clone()).is_err());
        assert!(EconomyParams::new(1, -0.1, r.clone()).is_err());
        let p = EconomyParams::new(1, 0.0, r.clone()).unwrap();
        assert!(matches!(p.require_positive_discount(), Err(Error::DiscountRate(_))));
        let p = EconomyParams::new(5, 0.02, r).unwrap();
        assert!(p.require_positive_discount().is_ok());
        assert_eq!(p.mu(), 1.0);
        assert_eq!(p.with_n(9).unwrap().n(), 9);
    }
}
