use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::consensus::DifficultyTable;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub id: String,
    /// Decoding attempts per second; zero for relay-only nodes.
    pub hashrate: f64,
    pub region: String,
}

/// One-way delay drawn from a normal distribution truncated at zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkDelay {
    pub mean_ms: f64,
    #[serde(default)]
    pub jitter_ms: f64,
}

impl LinkDelay {
    pub const ZERO: LinkDelay = LinkDelay {
        mean_ms: 0.0,
        jitter_ms: 0.0,
    };

    fn validate(&self, what: &str) -> Result<()> {
        if !(self.mean_ms >= 0.0 && self.mean_ms.is_finite()) {
            return Err(Error::Config(format!(
                "{what}.mean_ms must be finite and >= 0"
            )));
        }
        if !(self.jitter_ms >= 0.0 && self.jitter_ms.is_finite()) {
            return Err(Error::Config(format!(
                "{what}.jitter_ms must be finite and >= 0"
            )));
        }
        Ok(())
    }

    /// Draws a delay in milliseconds by rejecting negative normal samples.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.jitter_ms == 0.0 {
            return self.mean_ms;
        }
        let normal = Normal::new(self.mean_ms, self.jitter_ms).expect("validated delay");
        loop {
            let d = normal.sample(rng);
            if d >= 0.0 {
                return d;
            }
        }
    }
}

/// Symmetric delay between two regions (`from == to` for intra-region links).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatencyPair {
    pub from: String,
    pub to: String,
    pub mean_ms: f64,
    #[serde(default)]
    pub jitter_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatencyModel {
    #[serde(default)]
    pub pairs: Vec<LatencyPair>,
    /// Used for region pairs not listed in `pairs`.
    #[serde(default)]
    pub default: Option<LinkDelay>,
}

impl LatencyModel {
    pub fn zero() -> Self {
        Self {
            pairs: Vec::new(),
            default: Some(LinkDelay::ZERO),
        }
    }

    pub fn constant(mean_ms: f64, jitter_ms: f64) -> Self {
        Self {
            pairs: Vec::new(),
            default: Some(LinkDelay { mean_ms, jitter_ms }),
        }
    }

    /// Delay matrix over `regions` (indexed like the slice).
    pub(crate) fn resolve(&self, regions: &[String]) -> Result<Vec<Vec<LinkDelay>>> {
        if let Some(d) = &self.default {
            d.validate("latency.default")?;
        }
        let mut table: HashMap<(&str, &str), LinkDelay> = HashMap::new();
        for (i, p) in self.pairs.iter().enumerate() {
            let delay = LinkDelay {
                mean_ms: p.mean_ms,
                jitter_ms: p.jitter_ms,
            };
            delay.validate(&format!("latency.pairs[{i}]"))?;
            let key = if p.from <= p.to {
                (p.from.as_str(), p.to.as_str())
            } else {
                (p.to.as_str(), p.from.as_str())
            };
            if table.insert(key, delay).is_some() {
                return Err(Error::Config(format!(
                    "latency.pairs[{i}]: duplicate entry for {} <-> {}",
                    p.from, p.to
                )));
            }
        }
        regions
            .iter()
            .map(|a| {
                regions
                    .iter()
                    .map(|b| {
                        let key = if a <= b {
                            (a.as_str(), b.as_str())
                        } else {
                            (b.as_str(), a.as_str())
                        };
                        table.get(&key).copied().or(self.default).ok_or_else(|| {
                            Error::Config(format!(
                                "latency.pairs: no delay for {a} <-> {b} and no default"
                            ))
                        })
                    })
                    .collect()
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Topology {
    /// Every block goes straight from its miner to every other node.
    #[default]
    FullMesh,
    /// Undirected links by node id; blocks are flooded hop by hop.
    Adjacency(Vec<[String; 2]>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DifficultySettings {
    pub genesis_level: usize,
    /// Apply the per-block controller; when false every block uses `genesis_level`.
    #[serde(default = "default_true")]
    pub adjust: bool,
    /// Falls back to the bundled table when absent.
    #[serde(default)]
    pub table: Option<DifficultyTable>,
}

fn default_true() -> bool {
    true
}

/// Multiplies every node's hashrate once the first block at `at_height` is mined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HashrateStep {
    pub at_height: u64,
    pub factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub nodes: Vec<NodeSpec>,
    #[serde(default)]
    pub topology: Topology,
    #[serde(default)]
    pub latency: LatencyModel,
    pub difficulty: DifficultySettings,
    /// Simulated seconds after which no further blocks are mined.
    pub duration_s: f64,
    /// Optional cap on the number of mined blocks.
    #[serde(default)]
    pub max_blocks: Option<u64>,
    #[serde(default)]
    pub hashrate_steps: Vec<HashrateStep>,
    pub rng_seed: u64,
}

/// Validated view of a [`SimConfig`] with ids and regions resolved to indices.
#[derive(Debug, Clone)]
pub(crate) struct Prepared {
    pub table: DifficultyTable,
    pub delays: Vec<Vec<LinkDelay>>,
    pub region_of: Vec<usize>,
    /// Outgoing links per node; `None` for full mesh.
    pub neighbors: Option<Vec<Vec<usize>>>,
}

impl Prepared {
    pub fn delay(&self, from: usize, to: usize) -> &LinkDelay {
        &self.delays[self.region_of[from]][self.region_of[to]]
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.prepare().map(|_| ())
    }

    pub(crate) fn prepare(&self) -> Result<Prepared> {
        if self.nodes.is_empty() {
            return Err(Error::Config("nodes: at least one node is required".into()));
        }
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return Err(Error::Config(format!(
                "duration_s: must be positive and finite, got {}",
                self.duration_s
            )));
        }
        if self.max_blocks == Some(0) {
            return Err(Error::Config("max_blocks: must be at least 1".into()));
        }

        let mut index: BTreeMap<&str, usize> = BTreeMap::new();
        let mut regions: Vec<String> = Vec::new();
        let mut region_of = Vec::with_capacity(self.nodes.len());
        for (i, node) in self.nodes.iter().enumerate() {
            if index.insert(node.id.as_str(), i).is_some() {
                return Err(Error::Config(format!(
                    "nodes[{i}].id: duplicate id {:?}",
                    node.id
                )));
            }
            if !(node.hashrate >= 0.0 && node.hashrate.is_finite()) {
                return Err(Error::Config(format!(
                    "nodes[{i}].hashrate: must be finite and >= 0, got {}",
                    node.hashrate
                )));
            }
            let r = match regions.iter().position(|r| *r == node.region) {
                Some(r) => r,
                None => {
                    regions.push(node.region.clone());
                    regions.len() - 1
                }
            };
            region_of.push(r);
        }
        if self.nodes.iter().all(|n| n.hashrate == 0.0) {
            return Err(Error::Config(
                "nodes[].hashrate: at least one node must mine".into(),
            ));
        }

        for (i, step) in self.hashrate_steps.iter().enumerate() {
            if !(step.factor > 0.0 && step.factor.is_finite()) {
                return Err(Error::Config(format!(
                    "hashrate_steps[{i}].factor: must be positive"
                )));
            }
        }

        let table = self.difficulty.table.clone().unwrap_or_default();
        if self.difficulty.genesis_level > table.max_index() {
            return Err(Error::Config(format!(
                "difficulty.genesis_level: {} exceeds the highest level {}",
                self.difficulty.genesis_level,
                table.max_index()
            )));
        }

        let delays = self.latency.resolve(&regions)?;

        let neighbors = match &self.topology {
            Topology::FullMesh => None,
            Topology::Adjacency(edges) => {
                let mut adj = vec![Vec::new(); self.nodes.len()];
                for (k, [a, b]) in edges.iter().enumerate() {
                    let lookup = |id: &String| {
                        index.get(id.as_str()).copied().ok_or_else(|| {
                            Error::Config(format!("topology.adjacency[{k}]: unknown node {id:?}"))
                        })
                    };
                    let (a, b) = (lookup(a)?, lookup(b)?);
                    if a != b && !adj[a].contains(&b) {
                        adj[a].push(b);
                        adj[b].push(a);
                    }
                }
                for list in &mut adj {
                    list.sort_unstable();
                }
                if !connected(&adj) {
                    return Err(Error::Config(
                        "topology.adjacency: graph is not connected".into(),
                    ));
                }
                Some(adj)
            }
        };

        Ok(Prepared {
            table,
            delays,
            region_of,
            neighbors,
        })
    }

    /// Twelve nodes in the spirit of a small public testnet: two relay-only
    /// bootnodes and ten equal sealnodes, seven in "seoul" and three in
    /// "us-east", with a 1.2 s mean cross-region delay.
    pub fn fig2_like(rng_seed: u64) -> Self {
        let mut nodes = vec![
            NodeSpec {
                id: "boot-1".into(),
                hashrate: 0.0,
                region: "seoul".into(),
            },
            NodeSpec {
                id: "boot-2".into(),
                hashrate: 0.0,
                region: "seoul".into(),
            },
        ];
        for i in 1..=10 {
            nodes.push(NodeSpec {
                id: format!("seal-{i}"),
                hashrate: 0.25,
                region: if i <= 7 { "seoul" } else { "us-east" }.into(),
            });
        }
        let pair = |from: &str, to: &str, mean_ms, jitter_ms| LatencyPair {
            from: from.into(),
            to: to.into(),
            mean_ms,
            jitter_ms,
        };
        Self {
            nodes,
            topology: Topology::FullMesh,
            latency: LatencyModel {
                pairs: vec![
                    pair("seoul", "seoul", 40.0, 10.0),
                    pair("us-east", "us-east", 40.0, 10.0),
                    pair("seoul", "us-east", 1200.0, 300.0),
                ],
                default: None,
            },
            difficulty: DifficultySettings {
                genesis_level: 2,
                adjust: true,
                table: None,
            },
            duration_s: 3600.0,
            max_blocks: None,
            hashrate_steps: Vec::new(),
            rng_seed,
        }
    }
}

fn connected(adj: &[Vec<usize>]) -> bool {
    let mut seen = vec![false; adj.len()];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn single(hashrate: f64) -> SimConfig {
        SimConfig {
            nodes: vec![NodeSpec {
                id: "a".into(),
                hashrate,
                region: "r".into(),
            }],
            topology: Topology::FullMesh,
            latency: LatencyModel::zero(),
            difficulty: DifficultySettings {
                genesis_level: 0,
                adjust: true,
                table: None,
            },
            duration_s: 10.0,
            max_blocks: None,
            hashrate_steps: Vec::new(),
            rng_seed: 1,
        }
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(single(1.0).validate().is_ok());
        assert!(single(0.0).validate().is_err());
        assert!(single(-1.0).validate().is_err());

        let mut c = single(1.0);
        c.duration_s = 0.0;
        assert!(matches!(c.validate(), Err(Error::Config(m)) if m.starts_with("duration_s")));

        let mut c = single(1.0);
        c.nodes.clear();
        assert!(c.validate().is_err());

        let mut c = single(1.0);
        c.difficulty.genesis_level = 99;
        assert!(c.validate().is_err());

        let mut c = single(1.0);
        c.nodes.push(c.nodes[0].clone());
        assert!(c.validate().is_err());

        let mut c = single(1.0);
        c.latency = LatencyModel::default();
        assert!(c.validate().is_err(), "missing delay for r <-> r");

        let mut c = single(1.0);
        c.latency = LatencyModel::constant(-1.0, 0.0);
        assert!(c.validate().is_err());
    }

    #[test]
    fn adjacency_must_be_connected_and_known() {
        let mut c = SimConfig::fig2_like(1);
        let ids: Vec<String> = c.nodes.iter().map(|n| n.id.clone()).collect();
        let chain: Vec<[String; 2]> = ids
            .windows(2)
            .map(|w| [w[0].clone(), w[1].clone()])
            .collect();
        c.topology = Topology::Adjacency(chain.clone());
        assert!(c.validate().is_ok());

        c.topology = Topology::Adjacency(chain[1..].to_vec());
        assert!(c.validate().is_err());

        let mut bad = chain;
        bad.push(["seal-1".into(), "nobody".into()]);
        c.topology = Topology::Adjacency(bad);
        assert!(c.validate().is_err());
    }

    #[test]
    fn latency_pairs_are_symmetric() {
        let c = SimConfig::fig2_like(1);
        let p = c.prepare().unwrap();
        let seoul = 2;
        let us = 11;
        assert_eq!(p.delay(seoul, us), p.delay(us, seoul));
        assert_eq!(p.delay(seoul, us).mean_ms, 1200.0);
        assert_eq!(p.delay(seoul, 3).mean_ms, 40.0);
    }

    #[test]
    fn truncated_normal_is_non_negative() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = LinkDelay {
            mean_ms: 10.0,
            jitter_ms: 50.0,
        };
        assert!((0..10_000).all(|_| d.sample(&mut rng) >= 0.0));
        let fixed = LinkDelay {
            mean_ms: 1500.0,
            jitter_ms: 0.0,
        };
        assert_eq!(fixed.sample(&mut rng), 1500.0);
    }

    #[test]
    fn json_round_trip_uses_spec_keys() {
        let c = SimConfig::fig2_like(9);
        let v: serde_json::Value = serde_json::to_value(&c).unwrap();
        assert!(v["nodes"][0]["region"].is_string());
        assert!(v["latency"]["pairs"].is_array());
        assert!(v["difficulty"]["genesis_level"].is_number());
        assert!(v["duration_s"].is_number());
        let back: SimConfig = serde_json::from_value(v).unwrap();
        assert_eq!(back, c);
    }
}
