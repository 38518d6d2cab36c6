//! One- and two-sample Anderson-Darling statistics.
//!
//! The two-sample statistic is the k = 2 case of the Scholz-Stephens k-sample
//! test. It is standardized with the exact finite-sample variance under the
//! null and referred to the interpolated critical-value table for
//! `m = k - 1 = 1`.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Significance levels of the critical-value table, descending.
pub const SIGNIFICANCE_LEVELS: [f64; 7] = [0.25, 0.10, 0.05, 0.025, 0.01, 0.005, 0.001];

// t_m(alpha) = b0 + b1 / sqrt(m) + b2 / m
const B0: [f64; 7] = [0.675, 1.281, 1.645, 1.96, 2.326, 2.573, 3.085];
const B1: [f64; 7] = [-0.245, 0.25, 0.678, 1.149, 1.822, 2.364, 3.615];
const B2: [f64; 7] = [-0.105, -0.305, -0.362, -0.391, -0.396, -0.345, -0.154];

/// Critical values of the standardized statistic for `k` samples, aligned with
/// [`SIGNIFICANCE_LEVELS`].
pub fn critical_values(k: usize) -> [f64; 7] {
    assert!(k >= 2);
    let m = (k - 1) as f64;
    std::array::from_fn(|i| B0[i] + B1[i] / m.sqrt() + B2[i] / m)
}

/// Bounded p-value: exact inside the tabulated range, one-sided outside it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PBound {
    AtLeast(f64),
    Exact(f64),
    AtMost(f64),
}

impl PBound {
    /// Point value used for ordering and medians (the bound itself when capped).
    pub fn value(&self) -> f64 {
        match *self {
            PBound::AtLeast(p) | PBound::Exact(p) | PBound::AtMost(p) => p,
        }
    }

    /// True when the test rejects at level `alpha`.
    pub fn rejects_at(&self, alpha: f64) -> bool {
        match *self {
            PBound::AtLeast(_) => false,
            PBound::Exact(p) | PBound::AtMost(p) => p <= alpha,
        }
    }
}

impl fmt::Display for PBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PBound::AtLeast(p) => write!(f, "p >= {p}"),
            PBound::Exact(p) => write!(f, "p = {p:.4}"),
            PBound::AtMost(p) => write!(f, "p <= {p}"),
        }
    }
}

impl Serialize for PBound {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdResult {
    pub a2: f64,
    pub standardized: f64,
    pub p_bound: PBound,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
}

/// How tied observations enter the two-sample statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieHandling {
    /// Right-continuous empirical distributions integrated over the distinct
    /// pooled values. Equals the defining integral exactly, ties or not.
    #[default]
    RightContinuous,
    /// Midrank (averaged left/right) empirical distributions.
    Midrank,
}

/// One-sample statistic by the order-statistic formula
/// `-M - (1/M) sum (2i - 1) [ln F(x_(i)) + ln(1 - F(x_(M+1-i)))]`.
pub fn ad_one_sample<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Parameter(
            "one-sample test needs at least one value".into(),
        ));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let u: Vec<f64> = sorted
        .iter()
        .map(|&x| {
            let value = cdf(x);
            if value > 0.0 && value < 1.0 {
                Ok(value)
            } else {
                Err(Error::SingularWeight { x, value })
            }
        })
        .collect::<Result<_>>()?;
    let m = u.len();
    let sum: f64 = (0..m)
        .map(|i| (2 * i + 1) as f64 * (u[i].ln() + (-u[m - 1 - i]).ln_1p()))
        .sum();
    Ok(-(m as f64) - sum / m as f64)
}

fn check_sample(name: &str, xs: &[f64]) -> Result<()> {
    if xs.is_empty() {
        return Err(Error::Parameter(format!("sample {name} is empty")));
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::Parameter(format!(
            "sample {name} contains a non-finite value"
        )));
    }
    Ok(())
}

/// Raw two-sample statistic by the rank formula over distinct pooled values.
pub fn a2_two_sample(f: &[f64], g: &[f64], ties: TieHandling) -> Result<f64> {
    check_sample("f", f)?;
    check_sample("g", g)?;
    let mut fs = f.to_vec();
    let mut gs = g.to_vec();
    fs.sort_by(f64::total_cmp);
    gs.sort_by(f64::total_cmp);
    let mut pooled: Vec<f64> = fs.iter().chain(&gs).copied().collect();
    pooled.sort_by(f64::total_cmp);
    pooled.dedup();

    let total = (fs.len() + gs.len()) as f64;
    let samples = [&fs, &gs];
    // running counts: M_ij (<= z_j) per sample, B_j pooled
    let mut below = [0usize; 2];
    let mut pooled_below = 0usize;
    let mut sums = [0.0f64; 2];
    let last = pooled.len() - 1;

    for (j, &z) in pooled.iter().enumerate() {
        let mut equal = [0usize; 2];
        for (s, xs) in samples.iter().enumerate() {
            while below[s] + equal[s] < xs.len() && xs[below[s] + equal[s]] == z {
                equal[s] += 1;
            }
        }
        let l = (equal[0] + equal[1]) as f64;
        match ties {
            TieHandling::RightContinuous => {
                if j < last {
                    let b = (pooled_below as f64) + l;
                    for s in 0..2 {
                        let m_ij = (below[s] + equal[s]) as f64;
                        let n_i = samples[s].len() as f64;
                        let d = total * m_ij - n_i * b;
                        sums[s] += l * d * d / (b * (total - b));
                    }
                }
            }
            TieHandling::Midrank => {
                let b = pooled_below as f64 + l / 2.0;
                let denom = b * (total - b) - total * l / 4.0;
                if denom > 0.0 {
                    for s in 0..2 {
                        let m_ij = below[s] as f64 + equal[s] as f64 / 2.0;
                        let n_i = samples[s].len() as f64;
                        let d = total * m_ij - n_i * b;
                        sums[s] += l * d * d / denom;
                    }
                }
            }
        }
        below[0] += equal[0];
        below[1] += equal[1];
        pooled_below += equal[0] + equal[1];
    }

    let inner: f64 = sums[0] / fs.len() as f64 + sums[1] / gs.len() as f64;
    Ok(match ties {
        TieHandling::RightContinuous => inner / total,
        TieHandling::Midrank => inner * (total - 1.0) / (total * total),
    })
}

/// Null variance of the two-sample statistic with sample sizes `m` and `n`.
pub fn a2_variance(m: usize, n: usize) -> Result<f64> {
    let total = m + n;
    if m == 0 || n == 0 || total < 4 {
        return Err(Error::Parameter(format!(
            "standardization needs non-empty samples and at least 4 pooled values (got {m} + {n})"
        )));
    }
    let big_n = total as f64;
    let k = 2.0;
    let big_h = 1.0 / m as f64 + 1.0 / n as f64;
    // harmonic[i] = sum_{j=1}^{i} 1/j
    let mut harmonic = vec![0.0f64; total];
    for i in 1..total {
        harmonic[i] = harmonic[i - 1] + 1.0 / i as f64;
    }
    let h = harmonic[total - 1];
    let g: f64 = (1..total - 1)
        .map(|i| (h - harmonic[i]) / (big_n - i as f64))
        .sum();

    let a = (4.0 * g - 6.0) * (k - 1.0) + (10.0 - 6.0 * g) * big_h;
    let b = (2.0 * g - 4.0) * k * k + 8.0 * h * k + (2.0 * g - 14.0 * h - 4.0) * big_h - 8.0 * h
        + 4.0 * g
        - 6.0;
    let c = (6.0 * h + 2.0 * g - 2.0) * k * k
        + (4.0 * h - 4.0 * g + 6.0) * k
        + (2.0 * h - 6.0) * big_h
        + 4.0 * h;
    let d = (2.0 * h + 6.0) * k * k - 4.0 * h * k;
    Ok((a * big_n.powi(3) + b * big_n.powi(2) + c * big_n + d)
        / ((big_n - 1.0) * (big_n - 2.0) * (big_n - 3.0)))
}

/// Maps a standardized statistic onto the critical-value table.
///
/// Inside the table, `-ln p` is interpolated linearly between neighbouring
/// critical values; below the 0.25 value the result is `p >= 0.25`, above the
/// 0.001 value `p <= 0.001`.
pub fn p_bound_from_standardized(t: f64) -> PBound {
    let crit = critical_values(2);
    let last = crit.len() - 1;
    if t < crit[0] {
        return PBound::AtLeast(SIGNIFICANCE_LEVELS[0]);
    }
    if t > crit[last] {
        return PBound::AtMost(SIGNIFICANCE_LEVELS[last]);
    }
    if t == crit[last] {
        return PBound::Exact(SIGNIFICANCE_LEVELS[last]);
    }
    let i = crit
        .windows(2)
        .position(|w| t >= w[0] && t < w[1])
        .expect("t inside table");
    let (x0, x1) = (crit[i], crit[i + 1]);
    let (y0, y1) = (
        -SIGNIFICANCE_LEVELS[i].ln(),
        -SIGNIFICANCE_LEVELS[i + 1].ln(),
    );
    let y = y0 + (t - x0) / (x1 - x0) * (y1 - y0);
    PBound::Exact((-y).exp())
}

/// Centers `a2` on its null mean `k - 1 = 1`, scales by the null standard
/// deviation and bounds the p-value.
pub fn standardize_and_p(a2: f64, m: usize, n: usize) -> Result<(f64, PBound)> {
    let sigma = a2_variance(m, n)?.sqrt();
    let t = (a2 - 1.0) / sigma;
    Ok((t, p_bound_from_standardized(t)))
}

pub fn ad_two_sample(f: &[f64], g: &[f64]) -> Result<AdResult> {
    ad_two_sample_with(f, g, TieHandling::default())
}

pub fn ad_two_sample_with(f: &[f64], g: &[f64], ties: TieHandling) -> Result<AdResult> {
    let a2 = a2_two_sample(f, g, ties)?;
    let (standardized, p_bound) = standardize_and_p(a2, f.len(), g.len())?;
    Ok(AdResult {
        a2,
        standardized,
        p_bound,
        m: f.len(),
        n: g.len(),
    })
}
