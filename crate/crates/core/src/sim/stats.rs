use crate::analytics::series::NeumaierSum;

/// Sample moments computed in index order with compensated summation, so the
/// result depends only on the sequence of values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleStats {
    pub count: u64,
    pub mean: f64,
    /// Unbiased (n - 1) variance.
    pub variance: f64,
    /// Central second moment (divisor n).
    pub m2: f64,
    /// Central fourth moment (divisor n).
    pub m4: f64,
}

impl SampleStats {
    pub fn from_samples(xs: &[f64]) -> Self {
        Self::from_iter_twice(|| xs.iter().copied())
    }

    /// Two passes over the same sequence: mean first, then central moments.
    pub fn from_iter_twice<I, F>(values: F) -> Self
    where
        F: Fn() -> I,
        I: Iterator<Item = f64>,
    {
        let mut count = 0u64;
        let sum: NeumaierSum = values().inspect(|_| count += 1).collect();
        if count == 0 {
            return Self {
                count: 0,
                mean: f64::NAN,
                variance: f64::NAN,
                m2: f64::NAN,
                m4: f64::NAN,
            };
        }
        let n = count as f64;
        let mean = sum.value() / n;
        let mut s2 = NeumaierSum::default();
        let mut s4 = NeumaierSum::default();
        for x in values() {
            let dev = x - mean;
            let sq = dev * dev;
            s2.add(sq);
            s4.add(sq * sq);
        }
        let m2 = s2.value() / n;
        let variance = if count > 1 { s2.value() / (n - 1.0) } else { 0.0 };
        Self {
            count,
            mean,
            variance,
            m2,
            m4: s4.value() / n,
        }
    }

    pub fn population_variance(&self) -> f64 {
        self.m2
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }

    /// Standard error of the sample mean.
    pub fn stderr_mean(&self) -> f64 {
        (self.variance / self.count as f64).sqrt()
    }

    /// Large-sample standard error of the unbiased variance estimator,
    /// `sqrt((m4 - m2^2 (n - 3)/(n - 1)) / n)`.
    pub fn stderr_variance(&self) -> f64 {
        let n = self.count as f64;
        if self.count < 4 {
            return f64::NAN;
        }
        let v = (self.m4 - self.m2 * self.m2 * (n - 3.0) / (n - 1.0)) / n;
        v.max(0.0).sqrt()
    }
}

/// Sample covariance of squared deviations of two paired series, `/ n`.
/// Used for the delta method on variance ratios.
pub(crate) fn squared_deviation_covariance(xs: &[f64], ys: &[f64], x: &SampleStats, y: &SampleStats) -> f64 {
    let n = xs.len() as f64;
    let s: NeumaierSum = xs
        .iter()
        .zip(ys)
        .map(|(a, b)| {
            let da = (a - x.mean) * (a - x.mean) - x.m2;
            let db = (b - y.mean) * (b - y.mean) - y.m2;
            da * db
        })
        .collect();
    s.value() / n
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_samples_have_exact_mean_and_zero_spread() {
        let x = 1.0 / 1.01;
        let xs = vec![x; 100_000];
        let s = SampleStats::from_samples(&xs);
        assert_eq!(s.mean, x);
        assert_eq!(s.variance, 0.0);
        assert_eq!(s.stderr_mean(), 0.0);
    }

    #[test]
    fn small_sample_moments() {
        let s = SampleStats::from_samples(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]);
        assert_eq!(s.mean, 5.0);
        assert_eq!(s.m2, 4.0);
        assert!((s.variance - 32.0 / 7.0).abs() < 1e-15);
        // deviations -3 -1 -1 -1 0 0 2 4
        assert!((s.m4 - 356.0 / 8.0).abs() < 1e-12, "{}", s.m4);
    }

    #[test]
    fn empty_is_nan() {
        assert!(SampleStats::from_samples(&[]).mean.is_nan());
    }
}
