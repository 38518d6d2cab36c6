//! Block headers, the sealing loop, seal verification and per-block
//! difficulty adjustment.

use std::path::Path;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::decoder::{estimate_success_probability, Decoder, DecoderConfig};
use crate::error::{Error, Result};
use crate::hashvector::{hash_vector, keccak256, Digest256, Nonce};
use crate::ldpc::{generate_pcm, is_codeword, LdpcParams};

/// A parent block generated faster than this raises the difficulty level.
pub const BGT_LOWER_MS: u64 = 9_000;
/// A parent block generated slower than this lowers the difficulty level.
pub const BGT_UPPER_MS: u64 = 18_000;

const SEAL_ENCODING_LEN: usize = 32 + 8 + 8 + 4;
const HEADER_ENCODING_LEN: usize = SEAL_ENCODING_LEN + 8 + 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BlockHeader {
    pub parent_hash: Digest256,
    pub number: u64,
    pub timestamp_ms: u64,
    pub difficulty_level: u32,
    pub nonce: Nonce,
    /// Keccak-256 of the MSB-first packed codeword.
    pub codeword_digest: Digest256,
}

impl BlockHeader {
    /// Unsealed header extending `parent`.
    pub fn child_of(parent: &BlockHeader, timestamp_ms: u64, difficulty_level: u32) -> Self {
        Self {
            parent_hash: parent.hash(),
            number: parent.number + 1,
            timestamp_ms,
            difficulty_level,
            nonce: 0,
            codeword_digest: Digest256::ZERO,
        }
    }

    /// `parent_hash || number || timestamp_ms || difficulty_level`, big-endian.
    pub fn seal_encoding(&self) -> [u8; SEAL_ENCODING_LEN] {
        let mut out = [0u8; SEAL_ENCODING_LEN];
        out[..32].copy_from_slice(self.parent_hash.as_bytes());
        out[32..40].copy_from_slice(&self.number.to_be_bytes());
        out[40..48].copy_from_slice(&self.timestamp_ms.to_be_bytes());
        out[48..52].copy_from_slice(&self.difficulty_level.to_be_bytes());
        out
    }

    /// Seal encoding followed by `nonce || codeword_digest`.
    pub fn encode(&self) -> [u8; HEADER_ENCODING_LEN] {
        let mut out = [0u8; HEADER_ENCODING_LEN];
        out[..SEAL_ENCODING_LEN].copy_from_slice(&self.seal_encoding());
        out[52..60].copy_from_slice(&self.nonce.to_be_bytes());
        out[60..].copy_from_slice(self.codeword_digest.as_bytes());
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() != HEADER_ENCODING_LEN {
            return Err(Error::Parse(format!(
                "header encoding must be {HEADER_ENCODING_LEN} bytes, got {}",
                bytes.len()
            )));
        }
        let u64_at = |i: usize| u64::from_be_bytes(bytes[i..i + 8].try_into().unwrap());
        let digest_at =
            |i: usize| Digest256::from(<[u8; 32]>::try_from(&bytes[i..i + 32]).unwrap());
        Ok(Self {
            parent_hash: digest_at(0),
            number: u64_at(32),
            timestamp_ms: u64_at(40),
            difficulty_level: u32::from_be_bytes(bytes[48..52].try_into().unwrap()),
            nonce: u64_at(52),
            codeword_digest: digest_at(60),
        })
    }

    /// One line of the sealed-header fixture format.
    pub fn to_hex(&self) -> String {
        hex::encode(self.encode())
    }

    pub fn from_hex(line: &str) -> Result<Self> {
        let bytes =
            hex::decode(line.trim()).map_err(|e| Error::Parse(format!("bad header hex: {e}")))?;
        Self::decode(&bytes)
    }

    /// Block hash over the full sealed encoding; the next block's `parent_hash`.
    pub fn hash(&self) -> Digest256 {
        keccak256(&self.encode())
    }
}

/// Keccak-256 of the header without nonce and codeword digest.
pub fn seal_hash(header: &BlockHeader) -> Digest256 {
    keccak256(&header.seal_encoding())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DifficultyLevel {
    pub params: LdpcParams,
    #[serde(default)]
    pub decoder: DecoderConfig,
    /// Expected per-nonce decoding success probability.
    pub success_prob: f64,
}

impl DifficultyLevel {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.decoder.validate(self.params.n)?;
        if !(self.success_prob > 0.0 && self.success_prob <= 1.0) {
            return Err(Error::Parameter(format!(
                "success probability {} outside (0, 1]",
                self.success_prob
            )));
        }
        Ok(())
    }

    pub fn expected_attempts(&self) -> f64 {
        expected_attempts(self)
    }
}

pub fn expected_attempts(level: &DifficultyLevel) -> f64 {
    1.0 / level.success_prob
}

/// Step-by-one controller: faster than 9 s goes one level harder, slower than
/// 18 s one level easier, clamped to `0..=max_index`.
pub fn adjust_difficulty(parent_level_index: usize, parent_bgt_ms: u64, max_index: usize) -> usize {
    let idx = parent_level_index.min(max_index);
    if parent_bgt_ms < BGT_LOWER_MS {
        (idx + 1).min(max_index)
    } else if parent_bgt_ms > BGT_UPPER_MS {
        idx.saturating_sub(1)
    } else {
        idx
    }
}

/// Levels ordered from easiest to hardest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTable")]
pub struct DifficultyTable {
    levels: Vec<DifficultyLevel>,
}

#[derive(Deserialize)]
struct RawTable {
    levels: Vec<DifficultyLevel>,
}

impl TryFrom<RawTable> for DifficultyTable {
    type Error = Error;
    fn try_from(raw: RawTable) -> Result<Self> {
        Self::new(raw.levels)
    }
}

const DEFAULT_TABLE_JSON: &str = include_str!("../data/difficulty_table.json");

impl DifficultyTable {
    pub fn new(levels: Vec<DifficultyLevel>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::Parameter("difficulty table is empty".into()));
        }
        for level in &levels {
            level.validate()?;
        }
        if levels
            .windows(2)
            .any(|w| w[1].success_prob >= w[0].success_prob)
        {
            return Err(Error::Parameter(
                "success probabilities must strictly decrease across levels".into(),
            ));
        }
        Ok(Self { levels })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn levels(&self) -> &[DifficultyLevel] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<&DifficultyLevel> {
        self.levels.get(index)
    }

    pub fn max_index(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn adjust(&self, parent_level_index: usize, parent_bgt_ms: u64) -> usize {
        adjust_difficulty(parent_level_index, parent_bgt_ms, self.max_index())
    }

    /// Parameters the shipped table uses for code length `n`: `wc = 3`, `wr = 4`
    /// when 4 divides `n`, otherwise the smallest divisor of `n` above 3.
    pub fn default_params(n: usize) -> Result<LdpcParams> {
        let wc = 3;
        let wr = if n.is_multiple_of(4) {
            4
        } else {
            (wc + 1..n)
                .find(|d| n.is_multiple_of(*d))
                .ok_or_else(|| Error::Parameter(format!("no row weight above {wc} divides {n}")))?
        };
        LdpcParams::new(n, wc, wr)
    }
}

/// Code lengths of the shipped table.
pub const DEFAULT_TABLE_LENGTHS: [usize; 6] = [16, 20, 24, 28, 32, 36];

/// Builds a table over `lengths` with [`DifficultyTable::default_params`],
/// filling each success probability by Monte-Carlo estimation.
pub fn build_table(
    lengths: &[usize],
    decoder: DecoderConfig,
    trials: u64,
    rng_seed: u64,
) -> Result<DifficultyTable> {
    let levels = lengths
        .iter()
        .map(|&n| {
            let params = DifficultyTable::default_params(n)?;
            let success_prob = estimate_success_probability(params, &decoder, trials, rng_seed)?;
            Ok(DifficultyLevel {
                params,
                decoder,
                success_prob,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    DifficultyTable::new(levels)
}

impl Default for DifficultyTable {
    fn default() -> Self {
        Self::from_json(DEFAULT_TABLE_JSON).expect("bundled difficulty table is valid")
    }
}

/// Scans nonces `nonce_start, nonce_start + 1, ...` (wrapping) until the
/// decoder converges or `attempt_budget` nonces have been tried.
pub fn mine(
    template: &BlockHeader,
    level: &DifficultyLevel,
    nonce_start: Nonce,
    attempt_budget: u64,
) -> Result<Option<BlockHeader>> {
    let h = generate_pcm(&template.parent_hash, level.params)?;
    let decoder = Decoder::new(&h);
    let seal = seal_hash(template);
    for k in 0..attempt_budget {
        let nonce = nonce_start.wrapping_add(k);
        if let Some(header) = try_nonce(&decoder, &seal, template, level, nonce)? {
            return Ok(Some(header));
        }
    }
    Ok(None)
}

fn try_nonce(
    decoder: &Decoder<'_>,
    seal: &Digest256,
    template: &BlockHeader,
    level: &DifficultyLevel,
    nonce: Nonce,
) -> Result<Option<BlockHeader>> {
    let r = hash_vector(seal, nonce, level.params.n)?;
    let out = decoder.decode(&r, &level.decoder)?;
    Ok(out.converged.then(|| BlockHeader {
        nonce,
        codeword_digest: keccak256(&out.codeword.to_bytes_msb()),
        ..*template
    }))
}

/// Result of a (possibly multi-worker) mining run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MinedBlock {
    pub header: BlockHeader,
    /// Nonces tried across all workers before the winner was accepted.
    pub attempts: u64,
}

/// Splits the budget into `threads` contiguous, disjoint nonce ranges.
///
/// With one worker the result equals [`mine`]. With several, the first worker
/// to converge wins and the others stop at their next nonce; which nonce wins
/// then depends on scheduling, but the seal is equally valid.
pub fn mine_parallel(
    template: &BlockHeader,
    level: &DifficultyLevel,
    nonce_start: Nonce,
    attempt_budget: u64,
    threads: usize,
) -> Result<Option<MinedBlock>> {
    let threads = threads.max(1) as u64;
    if threads == 1 || attempt_budget < threads {
        return Ok(
            mine(template, level, nonce_start, attempt_budget)?.map(|header| MinedBlock {
                attempts: header.nonce.wrapping_sub(nonce_start) + 1,
                header,
            }),
        );
    }
    let h = generate_pcm(&template.parent_hash, level.params)?;
    let decoder = Decoder::new(&h);
    let seal = seal_hash(template);
    let found = AtomicBool::new(false);
    let attempts = AtomicU64::new(0);
    let chunk = attempt_budget.div_ceil(threads);

    let results: Vec<Result<Option<BlockHeader>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|w| {
                let (decoder, seal, found, attempts) = (&decoder, &seal, &found, &attempts);
                scope.spawn(move || {
                    let begin = w * chunk;
                    let end = ((w + 1) * chunk).min(attempt_budget);
                    for k in begin..end {
                        if found.load(Ordering::Relaxed) {
                            return Ok(None);
                        }
                        attempts.fetch_add(1, Ordering::Relaxed);
                        let nonce = nonce_start.wrapping_add(k);
                        if let Some(header) = try_nonce(decoder, seal, template, level, nonce)? {
                            found.store(true, Ordering::Relaxed);
                            return Ok(Some(header));
                        }
                    }
                    Ok(None)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("mining worker panicked"))
            .collect()
    });

    let mut winner = None;
    for r in results {
        if let Some(header) = r? {
            // several workers may converge before seeing the flag; keep the lowest range
            winner.get_or_insert(header);
        }
    }
    Ok(winner.map(|header| MinedBlock {
        header,
        attempts: attempts.load(Ordering::Relaxed),
    }))
}

/// Re-derives the puzzle from the header and checks the claimed seal.
pub fn verify_seal(header: &BlockHeader, level: &DifficultyLevel) -> bool {
    let Ok(h) = generate_pcm(&header.parent_hash, level.params) else {
        return false;
    };
    let Ok(r) = hash_vector(&seal_hash(header), header.nonce, level.params.n) else {
        return false;
    };
    let Ok(out) = Decoder::new(&h).decode(&r, &level.decoder) else {
        return false;
    };
    out.converged
        && is_codeword(&h, &out.codeword).unwrap_or(false)
        && keccak256(&out.codeword.to_bytes_msb()) == header.codeword_digest
}
