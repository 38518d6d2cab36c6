use std::fmt::Write;

use serde::Serialize;

use crate::error::{Error, Result};

/// One mined block, canonical or stale.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockRecord {
    pub height: u64,
    pub miner: String,
    pub timestamp_ms: u64,
    /// Timestamp difference to the block's own parent.
    pub bgt_ms: u64,
    pub level: usize,
    /// Time until the last node received the block.
    pub max_prop_ms: f64,
    /// Receipt delay per node, in config order (zero for the miner).
    pub propagation_ms: Vec<f64>,
    pub stale: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelPoint {
    pub height: u64,
    pub timestamp_ms: u64,
    pub level: usize,
}

/// Share of blocks, in percent, whose last receipt fell in each bucket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PropagationStats {
    pub blocks: usize,
    pub within_1s: f64,
    pub from_1s_to_2s: f64,
    pub from_2s_to_4s: f64,
    pub over_4s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimSummary {
    pub total_blocks: usize,
    pub canonical_blocks: usize,
    pub stale_blocks: usize,
    pub fork_rate: Option<f64>,
    pub mean_bgt_ms: Option<f64>,
    pub median_bgt_ms: Option<f64>,
    /// Sum of configured node hashrates.
    pub initial_hashrate: f64,
    pub final_hashrate: f64,
    pub propagation: Option<PropagationStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    blocks: Vec<BlockRecord>,
    summary: SimSummary,
    difficulty_series: Vec<LevelPoint>,
}

impl SimReport {
    pub(crate) fn new(
        blocks: Vec<BlockRecord>,
        initial_hashrate: f64,
        final_hashrate: f64,
    ) -> Self {
        let canonical: Vec<&BlockRecord> = blocks.iter().filter(|b| !b.stale).collect();
        let difficulty_series = canonical
            .iter()
            .map(|b| LevelPoint {
                height: b.height,
                timestamp_ms: b.timestamp_ms,
                level: b.level,
            })
            .collect();
        let mut bgts: Vec<u64> = canonical.iter().map(|b| b.bgt_ms).collect();
        bgts.sort_unstable();
        let stale_blocks = blocks.len() - canonical.len();
        let summary = SimSummary {
            total_blocks: blocks.len(),
            canonical_blocks: canonical.len(),
            stale_blocks,
            fork_rate: (!blocks.is_empty()).then(|| stale_blocks as f64 / blocks.len() as f64),
            mean_bgt_ms: (!bgts.is_empty())
                .then(|| bgts.iter().map(|&b| b as f64).sum::<f64>() / bgts.len() as f64),
            median_bgt_ms: median(&bgts),
            initial_hashrate,
            final_hashrate,
            propagation: bucket(&blocks),
        };
        Self {
            blocks,
            summary,
            difficulty_series,
        }
    }

    /// All mined blocks in mining order.
    pub fn blocks(&self) -> &[BlockRecord] {
        &self.blocks
    }

    /// Canonical-chain blocks in height order.
    pub fn canonical(&self) -> impl Iterator<Item = &BlockRecord> {
        self.blocks.iter().filter(|b| !b.stale)
    }

    pub fn canonical_bgt_ms(&self) -> Vec<u64> {
        self.canonical().map(|b| b.bgt_ms).collect()
    }

    pub fn stale_count(&self) -> usize {
        self.summary.stale_blocks
    }

    pub fn summary(&self) -> &SimSummary {
        &self.summary
    }

    pub fn difficulty_series(&self) -> &[LevelPoint] {
        &self.difficulty_series
    }

    /// Per-block table `height,miner,bgt_ms,level,max_prop_ms,stale`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("height,miner,bgt_ms,level,max_prop_ms,stale\n");
        for b in &self.blocks {
            writeln!(
                out,
                "{},{},{},{},{:.3},{}",
                b.height, b.miner, b.bgt_ms, b.level, b.max_prop_ms, b.stale as u8
            )
            .expect("writing to a String");
        }
        out
    }

    /// Summary, propagation buckets and the canonical difficulty series.
    pub fn summary_json(&self) -> String {
        #[derive(Serialize)]
        struct Doc<'a> {
            summary: &'a SimSummary,
            difficulty_series: &'a [LevelPoint],
        }
        serde_json::to_string_pretty(&Doc {
            summary: &self.summary,
            difficulty_series: &self.difficulty_series,
        })
        .expect("report serializes")
    }
}

fn median(sorted: &[u64]) -> Option<f64> {
    let n = sorted.len();
    match n {
        0 => None,
        _ if n % 2 == 1 => Some(sorted[n / 2] as f64),
        _ => Some((sorted[n / 2 - 1] + sorted[n / 2]) as f64 / 2.0),
    }
}

fn bucket(blocks: &[BlockRecord]) -> Option<PropagationStats> {
    if blocks.is_empty() {
        return None;
    }
    let mut counts = [0usize; 4];
    for b in blocks {
        let i = match b.max_prop_ms {
            d if d <= 1000.0 => 0,
            d if d <= 2000.0 => 1,
            d if d <= 4000.0 => 2,
            _ => 3,
        };
        counts[i] += 1;
    }
    let pct = |c: usize| 100.0 * c as f64 / blocks.len() as f64;
    Some(PropagationStats {
        blocks: blocks.len(),
        within_1s: pct(counts[0]),
        from_1s_to_2s: pct(counts[1]),
        from_2s_to_4s: pct(counts[2]),
        over_4s: pct(counts[3]),
    })
}

/// Buckets each block's last-node arrival delay into `<= 1 s`, `1-2 s`,
/// `2-4 s` and `> 4 s`.
pub fn propagation_stats(report: &SimReport) -> Result<PropagationStats> {
    report
        .summary
        .propagation
        .ok_or_else(|| Error::Parameter("report contains no blocks".into()))
}

/// Stale blocks over all mined blocks.
pub fn fork_rate(report: &SimReport) -> Result<f64> {
    report
        .summary
        .fork_rate
        .ok_or_else(|| Error::Parameter("report contains no blocks".into()))
}
