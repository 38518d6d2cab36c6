use std::time::Instant;

use eccpow::consensus::{mine_parallel, BlockHeader, DifficultyLevel, MinedBlock};
use eccpow::{keccak256, Digest256};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{CliError, CliResult};

/// Anything that can seal a header template from a starting nonce.
pub trait Sealer {
    fn seal(&mut self, template: &BlockHeader, nonce_start: u64) -> CliResult<MinedBlock>;
}

/// The real decoder-based miner.
pub struct DecoderSealer {
    pub level: DifficultyLevel,
    pub threads: usize,
}

impl Sealer for DecoderSealer {
    fn seal(&mut self, template: &BlockHeader, nonce_start: u64) -> CliResult<MinedBlock> {
        mine_parallel(template, &self.level, nonce_start, u64::MAX, self.threads)
            .map_err(CliError::runtime)?
            .ok_or_else(|| CliError::Runtime("nonce space exhausted".into()))
    }
}

/// Accepts the first nonce it is offered.
pub struct CertainSealer;

impl Sealer for CertainSealer {
    fn seal(&mut self, template: &BlockHeader, nonce_start: u64) -> CliResult<MinedBlock> {
        Ok(MinedBlock {
            header: BlockHeader {
                nonce: nonce_start,
                ..*template
            },
            attempts: 1,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BenchRecord {
    pub height: u64,
    pub attempts: u64,
    pub bgt_ms: f64,
}

/// Mines `blocks` consecutive blocks on a chain rooted at a seed-derived
/// genesis. Header timestamps advance one second per block so the puzzles,
/// and with one thread the attempt counts, depend only on `rng_seed`.
pub fn mine_chain<S: Sealer>(
    sealer: &mut S,
    level_index: u32,
    blocks: u64,
    rng_seed: u64,
) -> CliResult<Vec<BenchRecord>> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut parent = BlockHeader {
        parent_hash: keccak256(&rng_seed.to_be_bytes()),
        number: 0,
        timestamp_ms: 0,
        difficulty_level: level_index,
        nonce: 0,
        codeword_digest: Digest256::ZERO,
    };
    let mut records = Vec::with_capacity(blocks as usize);
    for _ in 0..blocks {
        let template = BlockHeader::child_of(&parent, parent.timestamp_ms + 1000, level_index);
        let started = Instant::now();
        let mined = sealer.seal(&template, rng.next_u64())?;
        records.push(BenchRecord {
            height: template.number,
            attempts: mined.attempts,
            bgt_ms: started.elapsed().as_secs_f64() * 1e3,
        });
        parent = mined.header;
    }
    Ok(records)
}

pub fn records_csv(records: &[BenchRecord]) -> String {
    let mut out = String::from("height,attempts,bgt_ms\n");
    for r in records {
        out.push_str(&format!("{},{},{:.3}\n", r.height, r.attempts, r.bgt_ms));
    }
    out
}
