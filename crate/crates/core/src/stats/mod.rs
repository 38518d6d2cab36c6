//! Exponential fitting, binned frequencies and Anderson-Darling testing of
//! block generation times.

mod ad;
mod exponential;

pub use ad::{
    a2_two_sample, a2_variance, ad_one_sample, ad_two_sample, ad_two_sample_with, critical_values,
    p_bound_from_standardized, standardize_and_p, AdResult, PBound, TieHandling,
    SIGNIFICANCE_LEVELS,
};
pub use exponential::{
    expected_frequencies, exponential_cdf, fit_exponential_mean, histogram, histogram10,
    sample_geometric, Histogram,
};

use std::ops::Deref;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::Serialize;

use crate::error::{Error, Result};

/// A named, non-empty set of finite observations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleSet {
    pub name: String,
    values: Vec<f64>,
}

impl SampleSet {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if values.is_empty() {
            return Err(Error::Parameter(format!("sample set {name:?} is empty")));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Parameter(format!(
                "sample set {name:?} contains {v}"
            )));
        }
        Ok(Self { name, values })
    }

    /// Parses one value per line. A non-numeric first line is taken as a
    /// header; blank lines are skipped.
    pub fn from_csv(name: impl Into<String>, text: &str) -> Result<Self> {
        let mut values = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let field = line.split(',').next().unwrap_or("").trim();
            if field.is_empty() {
                continue;
            }
            match field.parse::<f64>() {
                Ok(v) => values.push(v),
                Err(_) if i == 0 => continue,
                Err(_) => {
                    return Err(Error::Parse(format!(
                        "line {}: {field:?} is not a number",
                        i + 1
                    )))
                }
            }
        }
        Self::new(name, values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl Deref for SampleSet {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.values
    }
}

pub fn mean_and_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// Observed-vs-expected table plus a two-sample test against a synthetic
/// exponential reference of equal size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BgtAnalysis {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub rate: f64,
    pub histogram: Histogram,
    pub expected: Vec<f64>,
    pub reference_seed: u64,
    pub ad: AdResult,
}

/// Minimum sample count accepted by [`analyze_bgt`].
pub const MIN_ANALYSIS_SAMPLES: usize = 10;

/// Fits `rate = 1 / mean`, bins the sample, computes expected exponential
/// counts per bin, and runs the two-sample test against `samples.len()`
/// draws from `Exp(rate)` seeded by `reference_seed`.
pub fn analyze_bgt(samples: &[f64], bins: usize, reference_seed: u64) -> Result<BgtAnalysis> {
    if samples.len() < MIN_ANALYSIS_SAMPLES {
        return Err(Error::Parameter(format!(
            "analysis needs at least {MIN_ANALYSIS_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    let histogram = histogram(samples, bins)?;
    let rate = fit_exponential_mean(samples)?;
    let expected = expected_frequencies(rate, &histogram.edges, samples.len())?;
    let mut rng = ChaCha8Rng::seed_from_u64(reference_seed);
    let exp = Exp::new(rate).map_err(|e| Error::Parameter(e.to_string()))?;
    let reference: Vec<f64> = (0..samples.len()).map(|_| exp.sample(&mut rng)).collect();
    let ad = ad_two_sample(samples, &reference)?;
    let (mean, std) = mean_and_std(samples);
    Ok(BgtAnalysis {
        count: samples.len(),
        mean,
        std,
        rate,
        histogram,
        expected,
        reference_seed,
        ad,
    })
}
