//! Independent reference computations shared by test targets.
#![allow(dead_code)]

use eccpow::stats::exponential_cdf;
use eccpow::{decode, is_codeword, BitVector, DecoderConfig, ParityCheckMatrix};

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn step(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, depth)
}

/// `M * integral (F_M - F)^2 / (F (1 - F)) dF` over x, piece by piece between
/// order statistics, for an exponential reference with the given rate.
pub fn one_sample_by_quadrature(xs: &[f64], rate: f64) -> f64 {
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len() as f64;
    let mut knots = vec![0.0];
    knots.extend(&sorted);
    knots.push(sorted[sorted.len() - 1] + 80.0 / rate);
    let mut total = 0.0;
    for (i, w) in knots.windows(2).enumerate() {
        let fm = i as f64 / m;
        let integrand = move |x: f64| {
            let f = exponential_cdf(rate, x);
            let pdf = rate * (-rate * x).exp();
            if f <= 0.0 || f >= 1.0 {
                0.0
            } else {
                (fm - f).powi(2) * pdf / (f * (1.0 - f))
            }
        };
        if w[1] > w[0] {
            total += simpson(&integrand, w[0], w[1], 1e-13, 40);
        }
    }
    m * total
}

/// Direct evaluation of `(MN/K) sum (F_M - G_N)^2 / (H_K (1 - H_K)) dH_K` over
/// the jumps of the pooled step function, with right-continuous ECDFs.
pub fn two_sample_by_steps(f: &[f64], g: &[f64]) -> f64 {
    let (m, n) = (f.len() as f64, g.len() as f64);
    let k = m + n;
    let mut pooled: Vec<f64> = f.iter().chain(g).copied().collect();
    pooled.sort_by(f64::total_cmp);
    pooled.dedup();
    let ecdf = |xs: &[f64], z: f64| xs.iter().filter(|&&x| x <= z).count() as f64 / xs.len() as f64;
    let mut sum = 0.0;
    for &z in &pooled {
        let h = (m * ecdf(f, z) + n * ecdf(g, z)) / k;
        if h >= 1.0 {
            continue;
        }
        let jump = f.iter().chain(g).filter(|&&x| x == z).count() as f64 / k;
        sum += (ecdf(f, z) - ecdf(g, z)).powi(2) / (h * (1.0 - h)) * jump;
    }
    m * n / k * sum
}

/// All codewords of `h` by brute force over `2^n` words, as bitmasks.
pub fn null_space(h: &ParityCheckMatrix) -> Vec<u32> {
    let n = h.n();
    assert!(n <= 20);
    let row_masks: Vec<u32> = h
        .rows()
        .iter()
        .map(|r| r.iter().map(|&j| 1u32 << j).sum())
        .collect();
    (0u32..1 << n)
        .filter(|w| row_masks.iter().all(|m| (w & m).count_ones() % 2 == 0))
        .collect()
}

fn to_bits(mask: u32, n: usize) -> BitVector {
    BitVector::from_bits((0..n).map(|j| mask >> j & 1 == 1))
}

/// Outcome of flipping every bit of every codeword and decoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SingleErrorTally {
    pub code_size: usize,
    /// Corrupted words with exactly one codeword at distance 1.
    pub unique: usize,
    /// Of those, decoded back to that codeword.
    pub recovered: usize,
    /// Corrupted words equidistant from several codewords (repeated columns).
    pub ambiguous: usize,
    /// Of those, decoded with `converged` agreeing with the syndrome check.
    pub consistent: usize,
}

pub fn single_error_tally(h: &ParityCheckMatrix) -> SingleErrorTally {
    let n = h.n();
    let code = null_space(h);
    let cfg = DecoderConfig::default();
    let mut t = SingleErrorTally {
        code_size: code.len(),
        unique: 0,
        recovered: 0,
        ambiguous: 0,
        consistent: 0,
    };
    for &c in &code {
        assert!(is_codeword(h, &to_bits(c, n)).unwrap());
        for j in 0..n {
            let received = c ^ (1 << j);
            let out = decode(h, &to_bits(received, n), &cfg).unwrap();
            let nearest = code
                .iter()
                .filter(|&&w| (w ^ received).count_ones() == 1)
                .count();
            if nearest == 1 {
                t.unique += 1;
                t.recovered += (out.converged && out.codeword == to_bits(c, n)) as usize;
            } else {
                t.ambiguous += 1;
                t.consistent += (out.converged == is_codeword(h, &out.codeword).unwrap()) as usize;
            }
        }
    }
    t
}
