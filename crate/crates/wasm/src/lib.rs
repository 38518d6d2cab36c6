//! Browser bindings for the demo page: solve one puzzle, run a small
//! network, compare two samples. Each returns a JSON string.

use eccpow::consensus::{mine, seal_hash, BlockHeader, DifficultyLevel, DifficultyTable};
use eccpow::simnet::{run_simulation, HashrateStep, SimConfig};
use eccpow::stats::{ad_two_sample_with, SampleSet, TieHandling};
use eccpow::{
    decode, estimate_success_probability, generate_pcm, hash_vector, keccak256, DecoderConfig,
    Digest256,
};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct Solution {
    seed: String,
    n: usize,
    wc: usize,
    wr: usize,
    rows: Vec<Vec<usize>>,
    nonce: u64,
    attempts: u64,
    hash_vector: String,
    codeword: String,
    iterations: u32,
    seal: String,
}

/// Mines one block whose puzzle is seeded by `keccak256(label)`.
pub fn solve_puzzle_json(
    label: &str,
    n: usize,
    nonce_start: u64,
    budget: u64,
) -> Result<String, String> {
    let params = DifficultyTable::default_params(n).map_err(|e| e.to_string())?;
    let level = DifficultyLevel {
        params,
        decoder: DecoderConfig::default(),
        success_prob: 0.5,
    };
    let template = BlockHeader {
        parent_hash: keccak256(label.as_bytes()),
        number: 1,
        timestamp_ms: 0,
        difficulty_level: 0,
        nonce: 0,
        codeword_digest: Digest256::ZERO,
    };
    let sealed = mine(&template, &level, nonce_start, budget)
        .map_err(|e| e.to_string())?
        .ok_or_else(|| format!("no solution within {budget} nonces"))?;
    let h = generate_pcm(&template.parent_hash, params).map_err(|e| e.to_string())?;
    let seal = seal_hash(&sealed);
    let r = hash_vector(&seal, sealed.nonce, n).map_err(|e| e.to_string())?;
    let out = decode(&h, &r, &level.decoder).map_err(|e| e.to_string())?;
    let solution = Solution {
        seed: template.parent_hash.to_hex(),
        n,
        wc: params.wc,
        wr: params.wr,
        rows: h.rows().to_vec(),
        nonce: sealed.nonce,
        attempts: sealed.nonce.wrapping_sub(nonce_start) + 1,
        hash_vector: r.to_string(),
        codeword: out.codeword.to_string(),
        iterations: out.iterations_used,
        seal: seal.to_hex(),
    };
    Ok(serde_json::to_string(&solution).expect("serializes"))
}

/// Fraction of random puzzles of length `n` that decode on the first nonce.
pub fn success_rate_json(n: usize, trials: u64, seed: u64) -> Result<String, String> {
    let params = DifficultyTable::default_params(n).map_err(|e| e.to_string())?;
    let p = estimate_success_probability(params, &DecoderConfig::default(), trials, seed)
        .map_err(|e| e.to_string())?;
    Ok(serde_json::json!({ "n": n, "trials": trials, "success_prob": p }).to_string())
}

#[derive(Serialize)]
struct NetworkRun<'a> {
    summary: &'a eccpow::simnet::SimSummary,
    heights: Vec<u64>,
    bgt_ms: Vec<u64>,
    levels: Vec<usize>,
}

/// The twelve-node testnet with a hashrate multiplier applied at `step_height`.
pub fn simulate_network_json(
    blocks: u64,
    cross_delay_ms: f64,
    step_height: u64,
    step_factor: f64,
    seed: u64,
) -> Result<String, String> {
    let mut config = SimConfig::fig2_like(seed);
    config.duration_s = 1e9;
    config.max_blocks = Some(blocks);
    for pair in &mut config.latency.pairs {
        if pair.from != pair.to {
            pair.mean_ms = cross_delay_ms;
            pair.jitter_ms = cross_delay_ms / 4.0;
        }
    }
    if step_factor != 1.0 {
        config.hashrate_steps.push(HashrateStep {
            at_height: step_height,
            factor: step_factor,
        });
    }
    let report = run_simulation(&config).map_err(|e| e.to_string())?;
    let canonical: Vec<_> = report.canonical().collect();
    let run = NetworkRun {
        summary: report.summary(),
        heights: canonical.iter().map(|b| b.height).collect(),
        bgt_ms: canonical.iter().map(|b| b.bgt_ms).collect(),
        levels: canonical.iter().map(|b| b.level).collect(),
    };
    Ok(serde_json::to_string(&run).expect("serializes"))
}

/// Two-sample Anderson-Darling test on newline- or comma-separated values.
pub fn compare_samples_json(f: &str, g: &str, midrank: bool) -> Result<String, String> {
    let parse = |name: &str, text: &str| {
        SampleSet::from_csv(name, &text.replace([',', ';', ' ', '\t'], "\n"))
    };
    let f = parse("f", f).map_err(|e| format!("first sample: {e}"))?;
    let g = parse("g", g).map_err(|e| format!("second sample: {e}"))?;
    let ties = if midrank {
        TieHandling::Midrank
    } else {
        TieHandling::RightContinuous
    };
    let result = ad_two_sample_with(&f, &g, ties).map_err(|e| e.to_string())?;
    Ok(serde_json::to_string(&result).expect("serializes"))
}

#[wasm_bindgen(js_name = solvePuzzle)]
pub fn solve_puzzle(
    label: &str,
    n: usize,
    nonce_start: u64,
    budget: u64,
) -> Result<String, JsError> {
    solve_puzzle_json(label, n, nonce_start, budget).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = successRate)]
pub fn success_rate(n: usize, trials: u64, seed: u64) -> Result<String, JsError> {
    success_rate_json(n, trials, seed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = simulateNetwork)]
pub fn simulate_network(
    blocks: u64,
    cross_delay_ms: f64,
    step_height: u64,
    step_factor: f64,
    seed: u64,
) -> Result<String, JsError> {
    simulate_network_json(blocks, cross_delay_ms, step_height, step_factor, seed)
        .map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = compareSamples)]
pub fn compare_samples(f: &str, g: &str, midrank: bool) -> Result<String, JsError> {
    compare_samples_json(f, g, midrank).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    #[test]
    fn puzzle_solution_is_a_codeword() {
        let v: Value =
            serde_json::from_str(&solve_puzzle_json("demo", 16, 0, 10_000).unwrap()).unwrap();
        let rows: Vec<Vec<usize>> = serde_json::from_value(v["rows"].clone()).unwrap();
        let c: Vec<bool> = v["codeword"]
            .as_str()
            .unwrap()
            .chars()
            .map(|b| b == '1')
            .collect();
        assert!(rows
            .iter()
            .all(|r| r.iter().filter(|&&j| c[j]).count() % 2 == 0));
        assert!(v["attempts"].as_u64().unwrap() >= 1);
        assert!(solve_puzzle_json("demo", 17, 0, 10).is_err());
    }

    #[test]
    fn network_run_reports_series() {
        let v: Value =
            serde_json::from_str(&simulate_network_json(120, 1200.0, 60, 2.0, 1).unwrap()).unwrap();
        assert_eq!(
            v["heights"].as_array().unwrap().len(),
            v["bgt_ms"].as_array().unwrap().len()
        );
        assert_eq!(v["summary"]["final_hashrate"], 5.0);
    }

    #[test]
    fn sample_comparison_accepts_loose_separators() {
        let v: Value =
            serde_json::from_str(&compare_samples_json("1, 2, 3", "1\n2\n3", false).unwrap())
                .unwrap();
        assert_eq!(v["a2"], 0.0);
        assert!(compare_samples_json("", "1", false)
            .unwrap_err()
            .starts_with("first sample"));
    }

    #[test]
    fn success_rate_is_a_probability() {
        let v: Value = serde_json::from_str(&success_rate_json(16, 500, 3).unwrap()).unwrap();
        let p = v["success_prob"].as_f64().unwrap();
        assert!(p > 0.05 && p < 0.4);
    }
}
