//! Min-sum message passing on the Tanner graph of a parity-check matrix.
//!
//! Messages are fixed-point log-likelihood ratios scaled by 2^8 and clamped to
//! +/-64, so decoding is bit-identical on every platform. Check nodes are
//! updated in ascending row order, then variable nodes in ascending column
//! order (flooding schedule).

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hashvector::{hash_vector, Digest256};
use crate::ldpc::{generate_pcm, is_codeword, BitVector, LdpcParams, ParityCheckMatrix};

/// One LLR unit in fixed point.
pub const LLR_ONE: i32 = 1 << 8;
/// Message magnitude bound.
pub const LLR_CLAMP: i32 = 64 * LLR_ONE;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoderConfig {
    pub max_iterations: u32,
    /// Assumed channel crossover probability, in `(0, 0.5)`.
    pub crossover: f64,
    /// Inclusive Hamming-weight bounds a converged codeword must satisfy.
    #[serde(default)]
    pub weight_window: Option<(usize, usize)>,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        Self {
            max_iterations: 20,
            crossover: 0.45,
            weight_window: None,
        }
    }
}

impl DecoderConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::Parameter("max_iterations must be at least 1".into()));
        }
        if !(self.crossover > 0.0 && self.crossover < 0.5) {
            return Err(Error::Parameter(format!(
                "crossover {} outside (0, 0.5)",
                self.crossover
            )));
        }
        if let Some((lo, hi)) = self.weight_window {
            if lo > hi || hi > n {
                return Err(Error::Parameter(format!(
                    "weight window [{lo}, {hi}] invalid for n = {n}"
                )));
            }
        }
        Ok(())
    }

    /// Channel LLR magnitude `ln((1 - eps) / eps)` in fixed point.
    pub fn channel_llr(&self) -> i32 {
        let llr = ((1.0 - self.crossover) / self.crossover).ln() * LLR_ONE as f64;
        (llr.round() as i32).clamp(1, LLR_CLAMP)
    }

    fn weight_ok(&self, c: &BitVector) -> bool {
        match self.weight_window {
            Some((lo, hi)) => (lo..=hi).contains(&c.weight()),
            None => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeOutcome {
    pub codeword: BitVector,
    pub converged: bool,
    pub iterations_used: u32,
}

/// Edge-indexed Tanner graph. Edges are numbered row-major.
#[derive(Debug, Clone)]
pub struct Decoder<'a> {
    h: &'a ParityCheckMatrix,
    row_start: Vec<usize>,
    edge_var: Vec<usize>,
    var_edges: Vec<Vec<usize>>,
}

impl<'a> Decoder<'a> {
    pub fn new(h: &'a ParityCheckMatrix) -> Self {
        let mut row_start = Vec::with_capacity(h.m() + 1);
        let mut edge_var = Vec::new();
        let mut var_edges = vec![Vec::new(); h.n()];
        for row in h.rows() {
            row_start.push(edge_var.len());
            for &j in row {
                var_edges[j].push(edge_var.len());
                edge_var.push(j);
            }
        }
        row_start.push(edge_var.len());
        Self {
            h,
            row_start,
            edge_var,
            var_edges,
        }
    }

    pub fn matrix(&self) -> &ParityCheckMatrix {
        self.h
    }

    pub fn decode(&self, r: &BitVector, cfg: &DecoderConfig) -> Result<DecodeOutcome> {
        let n = self.h.n();
        if r.len() != n {
            return Err(Error::Dimension {
                expected: n,
                actual: r.len(),
            });
        }
        cfg.validate(n)?;

        if is_codeword(self.h, r)? && cfg.weight_ok(r) {
            return Ok(DecodeOutcome {
                codeword: r.clone(),
                converged: true,
                iterations_used: 0,
            });
        }

        let mag = cfg.channel_llr();
        let channel: Vec<i32> = r.iter().map(|b| if b { -mag } else { mag }).collect();
        let mut v2c: Vec<i32> = self.edge_var.iter().map(|&j| channel[j]).collect();
        let mut c2v = vec![0i32; v2c.len()];
        let mut hard = r.clone();

        for iter in 1..=cfg.max_iterations {
            for w in self.row_start.windows(2) {
                let edges = w[0]..w[1];
                let mut negative = false;
                let (mut min1, mut min2, mut argmin) = (i32::MAX, i32::MAX, usize::MAX);
                for e in edges.clone() {
                    let v = v2c[e];
                    negative ^= v < 0;
                    let a = v.abs();
                    if a < min1 {
                        min2 = min1;
                        min1 = a;
                        argmin = e;
                    } else if a < min2 {
                        min2 = a;
                    }
                }
                for e in edges {
                    let m = if e == argmin { min2 } else { min1 };
                    c2v[e] = if negative ^ (v2c[e] < 0) { -m } else { m };
                }
            }

            for (j, edges) in self.var_edges.iter().enumerate() {
                let total: i32 = channel[j] + edges.iter().map(|&e| c2v[e]).sum::<i32>();
                let bit = match total.signum() {
                    -1 => true,
                    1 => false,
                    _ => r.get(j),
                };
                hard.set(j, bit);
                for &e in edges {
                    v2c[e] = (total - c2v[e]).clamp(-LLR_CLAMP, LLR_CLAMP);
                }
            }

            if is_codeword(self.h, &hard)? && cfg.weight_ok(&hard) {
                return Ok(DecodeOutcome {
                    codeword: hard,
                    converged: true,
                    iterations_used: iter,
                });
            }
        }

        Ok(DecodeOutcome {
            codeword: hard,
            converged: false,
            iterations_used: cfg.max_iterations,
        })
    }
}

/// Decodes hash vector `r` against `h`.
pub fn decode(h: &ParityCheckMatrix, r: &BitVector, cfg: &DecoderConfig) -> Result<DecodeOutcome> {
    Decoder::new(h).decode(r, cfg)
}

/// Per-trial random (seed, nonce) pair drawn from ChaCha8 stream `trial` of `rng_seed`.
pub fn trial_instance(rng_seed: u64, trial: u64) -> (Digest256, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    rng.set_stream(trial);
    let mut seed = [0u8; 32];
    rng.fill_bytes(&mut seed);
    (Digest256::from(seed), rng.next_u64())
}

fn trial_converges(
    params: LdpcParams,
    cfg: &DecoderConfig,
    rng_seed: u64,
    trial: u64,
) -> Result<bool> {
    let (seed, nonce) = trial_instance(rng_seed, trial);
    let h = generate_pcm(&seed, params)?;
    let r = hash_vector(&seed, nonce, params.n)?;
    Ok(decode(&h, &r, cfg)?.converged)
}

/// Monte-Carlo estimate of the per-nonce decoding success probability over
/// independent uniform (seed, nonce) pairs.
///
/// Each trial draws from its own ChaCha8 stream, so the estimate does not
/// depend on how trials are scheduled across threads.
pub fn estimate_success_probability(
    params: LdpcParams,
    cfg: &DecoderConfig,
    trials: u64,
    rng_seed: u64,
) -> Result<f64> {
    params.validate()?;
    cfg.validate(params.n)?;
    if trials == 0 {
        return Err(Error::Parameter("trials must be at least 1".into()));
    }
    #[cfg(feature = "parallel")]
    let hits = {
        use rayon::prelude::*;
        (0..trials)
            .into_par_iter()
            .map(|t| trial_converges(params, cfg, rng_seed, t).map(u64::from))
            .try_reduce(|| 0, |a, b| Ok(a + b))?
    };
    #[cfg(not(feature = "parallel"))]
    let hits = (0..trials).try_fold(0u64, |acc, t| {
        trial_converges(params, cfg, rng_seed, t).map(|ok| acc + ok as u64)
    })?;
    Ok(hits as f64 / trials as f64)
}
