//! Per-slot execution-layer reward distributions.
//!
//! Rewards are dimensionless non-negative reals; units are up to the caller.

use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, LogNormal, Pareto};

use crate::{Error, Result};

/// Distribution of the reward `R` collected by the winning ticket at each slot.
///
/// Draws at distinct slots are i.i.d. `mean()` and `variance()` are the exact
/// moments of the configured law (population moments for `Empirical`).
#[derive(Debug, Clone)]
pub enum RewardModel {
    Constant { value: f64 },
    Lognormal { location: f64, sigma_log: f64, dist: LogNormal<f64> },
    Pareto { scale: f64, shape: f64, dist: Pareto<f64> },
    Empirical(EmpiricalRewards),
}

#[derive(Debug, Clone)]
pub struct EmpiricalRewards {
    values: Arc<[f64]>,
    mean: f64,
    variance: f64,
}

impl RewardModel {
    pub fn constant(value: f64) -> Result<Self> {
        if !(value.is_finite() && value >= 0.0) {
            return Err(Error::invalid("reward.mean", format!("must be finite and >= 0, got {value}")));
        }
        Ok(RewardModel::Constant { value })
    }

    /// Lognormal law whose mean is exactly `target_mean`.
    pub fn lognormal(target_mean: f64, sigma_log: f64) -> Result<Self> {
        calibrate_lognormal(target_mean, sigma_log)
    }

    /// Pareto law with the given scale (minimum) and shape. Shape must exceed 2
    /// so that the variance is finite.
    pub fn pareto(scale: f64, shape: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::invalid("reward.scale", format!("must be finite and > 0, got {scale}")));
        }
        if !(shape.is_finite() && shape > 2.0) {
            return Err(Error::invalid(
                "reward.shape",
                format!("must exceed 2 for a finite variance, got {shape}"),
            ));
        }
        let dist = Pareto::new(scale, shape).map_err(|e| Error::invalid("reward", e.to_string()))?;
        Ok(RewardModel::Pareto { scale, shape, dist })
    }

    /// Pareto law with the given mean; the scale is solved from the shape.
    pub fn pareto_with_mean(mean: f64, shape: f64) -> Result<Self> {
        if !(mean.is_finite() && mean > 0.0) {
            return Err(Error::invalid("reward.mean", format!("must be finite and > 0, got {mean}")));
        }
        if !(shape.is_finite() && shape > 2.0) {
            return Err(Error::invalid(
                "reward.shape",
                format!("must exceed 2 for a finite variance, got {shape}"),
            ));
        }
        Self::pareto(mean * (shape - 1.0) / shape, shape)
    }

    pub fn empirical(values: Vec<f64>) -> Result<Self> {
        EmpiricalRewards::new(values).map(RewardModel::Empirical)
    }

    pub fn mean(&self) -> f64 {
        match self {
            RewardModel::Constant { value } => *value,
            RewardModel::Lognormal { location, sigma_log, .. } => (location + 0.5 * sigma_log * sigma_log).exp(),
            RewardModel::Pareto { scale, shape, .. } => shape * scale / (shape - 1.0),
            RewardModel::Empirical(e) => e.mean,
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            RewardModel::Constant { .. } => 0.0,
            RewardModel::Lognormal { sigma_log, .. } => {
                let m = self.mean();
                m * m * (sigma_log * sigma_log).exp_m1()
            }
            RewardModel::Pareto { scale, shape, .. } => {
                scale * scale * shape / ((shape - 1.0) * (shape - 1.0) * (shape - 2.0))
            }
            RewardModel::Empirical(e) => e.variance,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            RewardModel::Constant { .. } => "constant",
            RewardModel::Lognormal { .. } => "lognormal",
            RewardModel::Pareto { .. } => "pareto",
            RewardModel::Empirical(_) => "empirical",
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            RewardModel::Constant { value } => *value,
            RewardModel::Lognormal { dist, .. } => dist.sample(rng),
            RewardModel::Pareto { dist, .. } => dist.sample(rng),
            RewardModel::Empirical(e) => e.values[rng.random_range(0..e.values.len())],
        }
    }
}

/// Lognormal model with mean exactly `target_mean` and log-scale spread `sigma_log`.
///
/// The location is `ln(target_mean) - sigma_log^2 / 2`, giving
/// `variance = target_mean^2 * (exp(sigma_log^2) - 1)`.
pub fn calibrate_lognormal(target_mean: f64, sigma_log: f64) -> Result<RewardModel> {
    if !(target_mean.is_finite() && target_mean > 0.0) {
        return Err(Error::invalid("reward.mean", format!("must be finite and > 0, got {target_mean}")));
    }
    if !(sigma_log.is_finite() && sigma_log > 0.0) {
        return Err(Error::invalid("reward.sigma_log", format!("must be finite and > 0, got {sigma_log}")));
    }
    let location = target_mean.ln() - 0.5 * sigma_log * sigma_log;
    let dist = LogNormal::new(location, sigma_log).map_err(|e| Error::invalid("reward", e.to_string()))?;
    Ok(RewardModel::Lognormal { location, sigma_log, dist })
}

impl EmpiricalRewards {
    fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("reward.values", "empirical rewards need at least one value"));
        }
        if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::invalid("reward.values", format!("rewards must be finite and >= 0, got {bad}")));
        }
        let stats = crate::sim::SampleStats::from_samples(&values);
        Ok(Self {
            values: values.into(),
            mean: stats.mean,
            variance: stats.population_variance(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Column header required in reward ingestion files.
pub const REWARD_COLUMN: &str = "reward_eth";

/// Reads a single-column CSV (`reward_eth` header) of non-negative rewards.
pub fn load_empirical_csv(path: impl AsRef<Path>) -> Result<RewardModel> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    read_empirical(file, path)
}

fn read_empirical<R: std::io::Read>(reader: R, path: &Path) -> Result<RewardModel> {
    let data_err = |line: u64, reason: String| Error::RewardData {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(|e| data_err(1, e.to_string()))?.clone();
    if headers.len() != 1 || &headers[0] != REWARD_COLUMN {
        return Err(data_err(1, format!("expected a single `{REWARD_COLUMN}` header, got {headers:?}")));
    }
    let mut values = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            data_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 1 {
            return Err(data_err(line, format!("expected 1 field, found {}", record.len())));
        }
        let value: f64 = record[0]
            .parse()
            .map_err(|_| data_err(line, format!("`{}` is not a decimal number", &record[0])))?;
        if !(value.is_finite() && value >= 0.0) {
            return Err(data_err(line, format!("reward must be finite and >= 0, got {value}")));
        }
        values.push(value);
    }
    if values.is_empty() {
        return Err(data_err(1, "no reward rows".into()));
    }
    RewardModel::empirical(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::SampleStats;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn draws(model: &RewardModel, count: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count).map(|_| model.sample(&mut rng)).collect()
    }

    fn assert_mean_within(model: &RewardModel, sigmas: f64) {
        let n = 1_000_000;
        let xs = draws(model, n, 7);
        assert!(xs.iter().all(|x| *x >= 0.0));
        let stats = SampleStats::from_samples(&xs);
        let bound = sigmas * (model.variance() / n as f64).sqrt();
        assert!(
            (stats.mean - model.mean()).abs() < bound.max(1e-15),
            "{}: sample mean {} vs {} (bound {bound})",
            model.kind(),
            stats.mean,
            model.mean()
        );
    }

    #[test]
    fn constant_always_returns_its_value() {
        let m = RewardModel::constant(3.0).unwrap();
        assert!(draws(&m, 100, 1).iter().all(|x| *x == 3.0));
        assert_eq!(m.variance(), 0.0);
    }

    #[test]
    fn lognormal_calibration_moments() {
        let m = calibrate_lognormal(2.0, 1.0).unwrap();
        assert!((m.mean() - 2.0).abs() < 1e-14);
        // 4 (e - 1)
        assert!((m.variance() - 6.873_127_313_836_179).abs() < 1e-12);

        let xs = draws(&m, 1_000_000, 11);
        let stats = SampleStats::from_samples(&xs);
        // sample variance of a heavy-ish tail; 5% is ~10 standard errors here
        assert!((stats.variance - m.variance()).abs() / m.variance() < 0.05, "{}", stats.variance);

        let tiny = calibrate_lognormal(1.0, 1e-6).unwrap();
        assert!(tiny.variance() < 1e-11);
    }

    #[test]
    fn lognormal_sample_mean_converges() {
        assert_mean_within(&calibrate_lognormal(1.0, 0.5).unwrap(), 3.0);
        assert_mean_within(&calibrate_lognormal(1.0, 1.0).unwrap(), 4.0);
    }

    #[test]
    fn every_model_sample_mean_within_four_sigma() {
        for m in [
            RewardModel::constant(1.5).unwrap(),
            calibrate_lognormal(0.7, 0.8).unwrap(),
            RewardModel::pareto_with_mean(1.0, 3.5).unwrap(),
            RewardModel::empirical(vec![0.0, 1.0, 2.5, 10.0]).unwrap(),
        ] {
            assert_mean_within(&m, 4.0);
        }
    }

    #[test]
    fn calibration_rejects_bad_inputs() {
        assert!(calibrate_lognormal(0.0, 1.0).is_err());
        assert!(calibrate_lognormal(-1.0, 1.0).is_err());
        assert!(calibrate_lognormal(1.0, 0.0).is_err());
        assert!(RewardModel::pareto(1.0, 2.0).is_err());
        assert!(RewardModel::pareto(0.0, 3.0).is_err());
        assert!(RewardModel::constant(-1.0).is_err());
        assert!(RewardModel::empirical(vec![]).is_err());
        assert!(RewardModel::empirical(vec![1.0, -2.0]).is_err());
    }

    #[test]
    fn pareto_moments() {
        let m = RewardModel::pareto(1.0, 3.0).unwrap();
        assert!((m.mean() - 1.5).abs() < 1e-15);
        // 3 / (4 * 1)
        assert!((m.variance() - 0.75).abs() < 1e-15);
        let m = RewardModel::pareto_with_mean(2.0, 4.0).unwrap();
        assert!((m.mean() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn empirical_resamples_ingested_values() {
        let m = RewardModel::empirical(vec![2.0, 2.0, 8.0]).unwrap();
        assert_eq!(m.mean(), 4.0);
        assert_eq!(m.variance(), 8.0);
        let xs = draws(&m, 300_000, 3);
        assert!(xs.iter().all(|x| *x == 2.0 || *x == 8.0));
        let mean = SampleStats::from_samples(&xs).mean;
        assert!((mean - 4.0).abs() < 4.0 * (8.0f64 / 300_000.0).sqrt());
    }

    #[test]
    fn csv_ingestion() {
        let ok = "reward_eth\n2\n2\n 8.0 \n";
        let m = read_empirical(ok.as_bytes(), Path::new("r.csv")).unwrap();
        assert_eq!(m.mean(), 4.0);

        let err = read_empirical("reward_eth\n1.0\nabc\n".as_bytes(), Path::new("r.csv")).unwrap_err();
        match err {
            Error::RewardData { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let err = read_empirical("reward_eth\n1.0\n-4\n".as_bytes(), Path::new("r.csv")).unwrap_err();
        assert!(err.to_string().starts_with("r.csv:3:"), "{err}");
        let err = read_empirical("reward_eth\n1.0,2.0\n".as_bytes(), Path::new("r.csv")).unwrap_err();
        assert!(matches!(err, Error::RewardData { line: 2, .. }), "{err}");
        assert!(read_empirical("value\n1.0\n".as_bytes(), Path::new("r.csv")).is_err());
        assert!(read_empirical("reward_eth\n".as_bytes(), Path::new("r.csv")).is_err());
    }

    #[test]
    fn csv_file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rewards.csv");
        std::fs::write(&path, "reward_eth\n0.5\n1.5\n").unwrap();
        let m = load_empirical_csv(&path).unwrap();
        assert_eq!(m.mean(), 1.0);
        assert!(load_empirical_csv(dir.path().join("missing.csv")).is_err());
    }
}
