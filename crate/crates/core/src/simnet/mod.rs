//! Deterministic discrete-event simulation of a small mining network.
//!
//! Mining is modelled statistically: on every new head a miner draws its
//! attempts-to-solve from `Geometric(p_level)` and converts them to seconds
//! with its hashrate. Blocks travel over sampled one-way delays, nodes follow
//! the chain with the greatest total hardness (sum of `1 / p` over its blocks),
//! and each block's level comes from the step controller applied to its
//! parent. All randomness flows from one ChaCha8 stream seeded by
//! `rng_seed`, consumed in event order.

mod config;
mod report;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use config::{
    DifficultySettings, HashrateStep, LatencyModel, LatencyPair, LinkDelay, NodeSpec, SimConfig,
    Topology,
};
pub use report::{
    fork_rate, propagation_stats, BlockRecord, LevelPoint, PropagationStats, SimReport, SimSummary,
};

use crate::consensus::BlockHeader;
use crate::error::Result;
use crate::hashvector::{keccak256, Digest256};
use crate::stats::sample_geometric;

#[derive(Debug, Clone)]
struct SimBlock {
    header: BlockHeader,
    hash: Digest256,
    parent: Option<usize>,
    miner: Option<usize>,
    mined_at: f64,
    level: usize,
    total_hardness: f64,
}

#[derive(Debug, Clone, Copy)]
enum EventKind {
    Found { node: usize, generation: u64 },
    Deliver { node: usize, block: usize },
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    /// Orders simultaneous finds fairly; zero for deliveries.
    tiebreak: u64,
    seq: u64,
    kind: EventKind,
}

impl Event {
    fn rank(&self) -> u8 {
        match self.kind {
            EventKind::Deliver { .. } => 0,
            EventKind::Found { .. } => 1,
        }
    }
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    // Reversed so the max-heap pops the earliest event. Solve times sit on
    // an attempt grid, so exact ties happen; deliveries go first so that a
    // block arriving at the same instant as a rival find cancels it.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.rank().cmp(&self.rank()))
            .then_with(|| other.tiebreak.cmp(&self.tiebreak))
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

#[derive(Debug, Clone, Default)]
struct NodeState {
    head: usize,
    generation: u64,
    /// Received blocks waiting for their parent, keyed by parent.
    pending: BTreeMap<usize, Vec<usize>>,
}

struct Sim<'a> {
    config: &'a SimConfig,
    prep: config::Prepared,
    rng: ChaCha8Rng,
    queue: BinaryHeap<Event>,
    seq: u64,
    blocks: Vec<SimBlock>,
    /// `arrival[block][node]`: receipt time in seconds.
    arrival: Vec<Vec<Option<f64>>>,
    attached: Vec<Vec<bool>>,
    nodes: Vec<NodeState>,
    multiplier: f64,
    next_step: usize,
    steps: Vec<HashrateStep>,
    mined: u64,
    stopped: bool,
}

/// Runs the simulation described by `config`.
pub fn run_simulation(config: &SimConfig) -> Result<SimReport> {
    let prep = config.prepare()?;
    let n = config.nodes.len();
    let genesis_header = BlockHeader {
        parent_hash: keccak256(&config.rng_seed.to_be_bytes()),
        number: 0,
        timestamp_ms: 0,
        difficulty_level: config.difficulty.genesis_level as u32,
        nonce: 0,
        codeword_digest: Digest256::ZERO,
    };
    let genesis = SimBlock {
        hash: genesis_header.hash(),
        header: genesis_header,
        parent: None,
        miner: None,
        mined_at: 0.0,
        level: config.difficulty.genesis_level,
        total_hardness: 0.0,
    };
    let mut steps = config.hashrate_steps.clone();
    steps.sort_by_key(|s| s.at_height);

    let mut sim = Sim {
        config,
        prep,
        rng: ChaCha8Rng::seed_from_u64(config.rng_seed),
        queue: BinaryHeap::new(),
        seq: 0,
        blocks: vec![genesis],
        arrival: vec![vec![Some(0.0); n]],
        attached: vec![vec![true; n]],
        nodes: vec![NodeState::default(); n],
        multiplier: 1.0,
        next_step: 0,
        steps,
        mined: 0,
        stopped: false,
    };
    for node in 0..n {
        sim.restart_mining(node, 0.0, false);
    }
    while let Some(ev) = sim.queue.pop() {
        match ev.kind {
            EventKind::Found { node, generation } => sim.on_found(ev.time, node, generation),
            EventKind::Deliver { node, block } => sim.on_deliver(ev.time, node, block),
        }
    }
    Ok(sim.into_report())
}

impl Sim<'_> {
    fn push(&mut self, time: f64, kind: EventKind) {
        self.seq += 1;
        let tiebreak = match kind {
            EventKind::Found { .. } => self.rng.next_u64(),
            EventKind::Deliver { .. } => 0,
        };
        self.queue.push(Event {
            time,
            tiebreak,
            seq: self.seq,
            kind,
        });
    }

    fn next_level(&self, head: usize) -> usize {
        let b = &self.blocks[head];
        match b.parent {
            Some(parent) if self.config.difficulty.adjust => {
                let bgt = b.header.timestamp_ms - self.blocks[parent].header.timestamp_ms;
                self.prep.table.adjust(b.level, bgt)
            }
            _ => b.level,
        }
    }

    fn success_prob(&self, level: usize) -> f64 {
        self.prep.table.levels()[level].success_prob
    }

    /// Schedules `node`'s next find on its current head. A miner interrupted
    /// by someone else's block is partway through an attempt, so its first
    /// attempt on the new head ends after a uniform fraction of an attempt;
    /// after its own find it starts on a fresh attempt.
    fn restart_mining(&mut self, node: usize, now: f64, interrupted: bool) {
        let state = &mut self.nodes[node];
        state.generation += 1;
        let generation = state.generation;
        let rate = self.config.nodes[node].hashrate * self.multiplier;
        if self.stopped || rate == 0.0 {
            return;
        }
        let p = self.success_prob(self.next_level(self.nodes[node].head));
        let attempts = sample_geometric(&mut self.rng, p) as f64;
        let attempts = if interrupted {
            // 1 - U lies in (0, 1]
            attempts - self.rng.random::<f64>()
        } else {
            attempts
        };
        self.push(now + attempts / rate, EventKind::Found { node, generation });
    }

    fn on_found(&mut self, now: f64, node: usize, generation: u64) {
        if self.stopped || generation != self.nodes[node].generation {
            return;
        }
        if now > self.config.duration_s {
            self.stopped = true;
            return;
        }
        let parent = self.nodes[node].head;
        let level = self.next_level(parent);
        let parent_block = &self.blocks[parent];
        let timestamp_ms = ((now * 1000.0).round() as u64).max(parent_block.header.timestamp_ms);
        let header = BlockHeader {
            parent_hash: parent_block.hash,
            number: parent_block.header.number + 1,
            timestamp_ms,
            difficulty_level: level as u32,
            nonce: self.mined,
            codeword_digest: keccak256(self.config.nodes[node].id.as_bytes()),
        };
        let total_hardness = parent_block.total_hardness + 1.0 / self.success_prob(level);
        let id = self.blocks.len();
        let height = header.number;
        self.blocks.push(SimBlock {
            hash: header.hash(),
            header,
            parent: Some(parent),
            miner: Some(node),
            mined_at: now,
            level,
            total_hardness,
        });
        let n = self.config.nodes.len();
        self.arrival.push(vec![None; n]);
        self.attached.push(vec![false; n]);
        self.arrival[id][node] = Some(now);

        self.mined += 1;
        if self.config.max_blocks.is_some_and(|m| self.mined >= m) {
            self.stopped = true;
        }
        let mut stepped = false;
        while let Some(step) = self.steps.get(self.next_step) {
            if height < step.at_height {
                break;
            }
            self.multiplier *= step.factor;
            self.next_step += 1;
            stepped = true;
        }

        self.broadcast(now, node, id);
        self.attach(now, node, id);
        if stepped {
            for other in 0..n {
                self.restart_mining(other, now, other != node);
            }
        }
    }

    fn broadcast(&mut self, now: f64, from: usize, block: usize) {
        let targets: Vec<usize> = match &self.prep.neighbors {
            None => (0..self.config.nodes.len())
                .filter(|&t| t != from)
                .collect(),
            Some(adj) => adj[from].clone(),
        };
        for to in targets {
            let delay_ms = self.prep.delay(from, to).sample(&mut self.rng);
            self.push(
                now + delay_ms / 1000.0,
                EventKind::Deliver { node: to, block },
            );
        }
    }

    fn on_deliver(&mut self, now: f64, node: usize, block: usize) {
        if self.arrival[block][node].is_some() {
            return;
        }
        self.arrival[block][node] = Some(now);
        if self.prep.neighbors.is_some() {
            self.broadcast(now, node, block);
        }
        let parent = self.blocks[block]
            .parent
            .expect("only genesis lacks a parent");
        if self.attached[parent][node] {
            self.attach(now, node, block);
        } else {
            self.nodes[node]
                .pending
                .entry(parent)
                .or_default()
                .push(block);
        }
    }

    /// Links `block` (and any buffered descendants) into `node`'s tree and
    /// applies fork choice.
    fn attach(&mut self, now: f64, node: usize, block: usize) {
        let old_head = self.nodes[node].head;
        let mut stack = vec![block];
        while let Some(b) = stack.pop() {
            self.attached[b][node] = true;
            if self.prefers(node, b, self.nodes[node].head) {
                self.nodes[node].head = b;
            }
            if let Some(children) = self.nodes[node].pending.remove(&b) {
                stack.extend(children);
            }
        }
        if self.nodes[node].head != old_head {
            let own = self.blocks[self.nodes[node].head].miner == Some(node);
            self.restart_mining(node, now, !own);
        }
    }

    /// Greater total hardness wins; on equal hardness the earlier arrival
    /// stays, and simultaneous arrivals go to the lower hash.
    fn prefers(&self, node: usize, candidate: usize, head: usize) -> bool {
        let (c, h) = (&self.blocks[candidate], &self.blocks[head]);
        match c.total_hardness.total_cmp(&h.total_hardness) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => {
                self.arrival[candidate][node] == self.arrival[head][node] && c.hash < h.hash
            }
        }
    }

    fn into_report(self) -> SimReport {
        let best = (1..self.blocks.len()).fold(0, |best, b| {
            let (x, y) = (&self.blocks[b], &self.blocks[best]);
            let better = match x.total_hardness.total_cmp(&y.total_hardness) {
                Ordering::Greater => true,
                Ordering::Less => false,
                Ordering::Equal => match x.mined_at.total_cmp(&y.mined_at) {
                    Ordering::Less => true,
                    Ordering::Greater => false,
                    Ordering::Equal => x.hash < y.hash,
                },
            };
            if better {
                b
            } else {
                best
            }
        });
        let mut canonical = vec![false; self.blocks.len()];
        let mut cursor = Some(best);
        while let Some(b) = cursor {
            canonical[b] = true;
            cursor = self.blocks[b].parent;
        }

        let records = self.blocks[1..]
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let id = i + 1;
                let parent = &self.blocks[b.parent.expect("mined block")];
                let propagation_ms: Vec<f64> = self.arrival[id]
                    .iter()
                    .map(|t| t.map_or(f64::INFINITY, |t| (t - b.mined_at) * 1000.0))
                    .collect();
                BlockRecord {
                    height: b.header.number,
                    miner: self.config.nodes[b.miner.expect("mined block")].id.clone(),
                    timestamp_ms: b.header.timestamp_ms,
                    bgt_ms: b.header.timestamp_ms - parent.header.timestamp_ms,
                    level: b.level,
                    max_prop_ms: propagation_ms.iter().copied().fold(0.0, f64::max),
                    propagation_ms,
                    stale: !canonical[id],
                }
            })
            .collect();

        let initial_hashrate: f64 = self.config.nodes.iter().map(|n| n.hashrate).sum();
        SimReport::new(
            records,
            initial_hashrate,
            initial_hashrate * self.multiplier,
        )
    }
}
