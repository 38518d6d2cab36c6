use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// Rate `1 / mean` of the exponential fitted by moments.
pub fn fit_exponential_mean(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Parameter("cannot fit an empty sample".into()));
    }
    if let Some(bad) = samples.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::Parameter(format!(
            "sample value {bad} is not a positive duration"
        )));
    }
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    Ok(1.0 / mean)
}

/// `G(x) = 1 - exp(-rate x)`, zero below the origin.
pub fn exponential_cdf(rate: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -(-rate * x).exp_m1()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    /// `bins + 1` ascending edges from the sample minimum to the maximum.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }
}

/// Equal-width histogram over `[min, max]`. Bins are half-open except the
/// last, which also holds the maximum.
pub fn histogram(samples: &[f64], bins: usize) -> Result<Histogram> {
    if bins == 0 {
        return Err(Error::Parameter("histogram needs at least one bin".into()));
    }
    if samples.is_empty() {
        return Err(Error::Parameter("cannot bin an empty sample".into()));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::Parameter(
            "sample contains a non-finite value".into(),
        ));
    }
    let min = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let max = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if min == max {
        return Err(Error::DegenerateRange(min));
    }
    let span = max - min;
    let mut edges: Vec<f64> = (0..bins)
        .map(|i| min + span * i as f64 / bins as f64)
        .collect();
    edges.push(max);
    let mut counts = vec![0usize; bins];
    for &x in samples {
        let idx = (((x - min) / span) * bins as f64).floor() as usize;
        counts[idx.min(bins - 1)] += 1;
    }
    Ok(Histogram { edges, counts })
}

/// Ten-bin histogram.
pub fn histogram10(samples: &[f64]) -> Result<Histogram> {
    histogram(samples, 10)
}

/// Expected bin counts `N (exp(-rate a) - exp(-rate b))` for each `[a, b)`.
pub fn expected_frequencies(rate: f64, edges: &[f64], total: usize) -> Result<Vec<f64>> {
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::Parameter(format!("rate {rate} must be positive")));
    }
    if edges.len() < 2 {
        return Err(Error::Parameter("need at least two bin edges".into()));
    }
    if edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Parameter(
            "bin edges must be finite and strictly ascending".into(),
        ));
    }
    Ok(edges
        .windows(2)
        .map(|w| total as f64 * (exponential_cdf(rate, w[1]) - exponential_cdf(rate, w[0])))
        .collect())
}

/// Draws from `Geometric(p)` on `{1, 2, ...}` by inversion.
pub fn sample_geometric<R: Rng + ?Sized>(rng: &mut R, p: f64) -> u64 {
    assert!(
        p > 0.0 && p <= 1.0,
        "geometric parameter {p} outside (0, 1]"
    );
    if p == 1.0 {
        return 1;
    }
    // 1 - U lies in (0, 1], keeping ln finite
    let u: f64 = 1.0 - rng.random::<f64>();
    let k = (u.ln() / (-p).ln_1p()).ceil();
    (k as u64).max(1)
}
