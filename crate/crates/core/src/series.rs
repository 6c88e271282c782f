use serde::{Deserialize, Serialize};

/// An ordered sequence of non-negative integer observations.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CountSeries(Vec<u64>);

impl CountSeries {
    pub fn new(values: Vec<u64>) -> Self {
        CountSeries(values)
    }

    pub fn values(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&x| x as f64).collect()
    }

    pub fn into_inner(self) -> Vec<u64> {
        self.0
    }

    /// Split into `(prefix, suffix)` with the suffix holding the last `tail` values.
    pub fn split_tail(&self, tail: usize) -> (CountSeries, CountSeries) {
        let cut = self.0.len().saturating_sub(tail);
        (
            CountSeries(self.0[..cut].to_vec()),
            CountSeries(self.0[cut..].to_vec()),
        )
    }

    pub fn mean(&self) -> f64 {
        mean(&self.to_f64())
    }

    pub fn acf(&self, max_lag: usize) -> Vec<f64> {
        sample_acf(&self.to_f64(), max_lag)
    }
}

impl From<Vec<u64>> for CountSeries {
    fn from(v: Vec<u64>) -> Self {
        CountSeries(v)
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance with denominator `n - 1`.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64
}

/// Sample autocorrelations `ρ̂(1..=max_lag)` using the usual biased autocovariance
/// estimator (denominator `n` at every lag).
pub fn sample_acf(xs: &[f64], max_lag: usize) -> Vec<f64> {
    let n = xs.len();
    let m = mean(xs);
    let c0: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (1..=max_lag)
        .map(|k| {
            if k >= n || c0 == 0.0 {
                return 0.0;
            }
            let ck: f64 = (k..n).map(|t| (xs[t] - m) * (xs[t - k] - m)).sum();
            ck / c0
        })
        .collect()
}
