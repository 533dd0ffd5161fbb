use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Quantile interpolation rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuartileMethod {
    /// Linear interpolation at rank `(n - 1) p` (0-based).
    #[default]
    Inclusive,
    /// Linear interpolation at rank `(n + 1) p` (1-based), clamped to the
    /// sample range.
    Exclusive,
}

/// Estimator family for the third and fourth moments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MomentEstimator {
    /// Adjusted Fisher-Pearson skewness and bias-corrected excess kurtosis.
    #[default]
    Sample,
    /// Plain moment ratios `m3 / m2^1.5` and `m4 / m2^2 - 3`.
    Population,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DescribeOptions {
    pub quartiles: QuartileMethod,
    pub moments: MomentEstimator,
}

/// Summary of one sample. Fields that need more data (or a nonzero spread)
/// than the sample provides are `None`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatsSummary {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator); needs n >= 2.
    pub std: Option<f64>,
    /// `mean / std`; needs std > 0.
    pub ratio: Option<f64>,
    pub min: f64,
    pub max: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    /// Needs n >= 3 and std > 0.
    pub skewness: Option<f64>,
    /// Excess kurtosis (normal = 0); needs n >= 4 and std > 0.
    pub kurtosis: Option<f64>,
}

pub fn describe(values: &[f64]) -> Result<StatsSummary> {
    describe_with(values, &DescribeOptions::default())
}

pub fn describe_with(values: &[f64], opts: &DescribeOptions) -> Result<StatsSummary> {
    if values.is_empty() {
        return Err(Error::Analytics("cannot describe an empty sample".into()));
    }
    if let Some(x) = values.iter().find(|x| !x.is_finite()) {
        return Err(Error::Analytics(format!("non-finite value {x}")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);

    let n = values.len();
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for x in values {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;

    let std = (n >= 2).then(|| (m2 * nf / (nf - 1.0)).sqrt());
    let spread = std.is_some_and(|s| s > 0.0);
    let ratio = std.filter(|_| spread).map(|s| mean / s);

    let g1 = m3 / m2.powf(1.5);
    let g2 = m4 / (m2 * m2) - 3.0;
    let skewness = (spread && n >= 3).then(|| match opts.moments {
        MomentEstimator::Sample => (nf * (nf - 1.0)).sqrt() / (nf - 2.0) * g1,
        MomentEstimator::Population => g1,
    });
    let kurtosis = (spread && n >= 4).then(|| match opts.moments {
        MomentEstimator::Sample => (nf - 1.0) / ((nf - 2.0) * (nf - 3.0)) * ((nf + 1.0) * g2 + 6.0),
        MomentEstimator::Population => g2,
    });

    Ok(StatsSummary {
        n,
        mean,
        std,
        ratio,
        min: sorted[0],
        max: sorted[n - 1],
        q1: quantile(&sorted, 0.25, opts.quartiles),
        median: quantile(&sorted, 0.5, opts.quartiles),
        q3: quantile(&sorted, 0.75, opts.quartiles),
        skewness,
        kurtosis,
    })
}

/// Quantile of an ascending, nonempty slice.
pub fn quantile(sorted: &[f64], p: f64, method: QuartileMethod) -> f64 {
    let n = sorted.len();
    assert!(n > 0, "quantile of empty slice");
    let rank = match method {
        QuartileMethod::Inclusive => (n - 1) as f64 * p,
        QuartileMethod::Exclusive => ((n + 1) as f64 * p - 1.0).clamp(0.0, (n - 1) as f64),
    };
    let lo = rank.floor() as usize;
    let frac = rank - lo as f64;
    if lo + 1 >= n || frac == 0.0 {
        sorted[lo.min(n - 1)]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}
