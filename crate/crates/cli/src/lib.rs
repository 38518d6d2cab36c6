//! Command implementations behind the `eccpow` binary.

pub mod bench;
mod error;
pub mod input;
mod manifest;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use eccpow::consensus::{build_table, DifficultyTable, DEFAULT_TABLE_LENGTHS};
use eccpow::simnet::{run_simulation, SimReport};
use eccpow::stats::{
    ad_two_sample_with, analyze_bgt, mean_and_std, AdResult, BgtAnalysis, TieHandling,
};
use eccpow::{generate_pcm, Digest256, LdpcParams};
use serde_json::json;

pub use bench::{mine_chain, records_csv, BenchRecord, CertainSealer, DecoderSealer, Sealer};
pub use error::{CliError, CliResult};
use manifest::OutputDir;
pub use manifest::RunManifest;

#[derive(Debug, Parser)]
#[command(
    name = "eccpow",
    version,
    about = "ECCPoW puzzles, mining benchmarks, network simulation and BGT statistics"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the parity-check matrix derived from a seed.
    Pcm {
        /// 32-byte seed as 64 hex digits.
        seed: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        wc: usize,
        #[arg(long)]
        wr: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mine consecutive blocks at a fixed difficulty level with the real decoder.
    MineBench {
        #[arg(long, default_value_t = 0)]
        level: usize,
        #[arg(long, default_value_t = 300)]
        blocks: u64,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Difficulty table JSON; defaults to the bundled table.
        #[arg(long, env = "ECCPOW_TABLE")]
        table: Option<PathBuf>,
    },
    /// Run the network simulator.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's rng_seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Difficulty table JSON, replacing any table in the config.
        #[arg(long, env = "ECCPOW_TABLE")]
        table: Option<PathBuf>,
    },
    /// Fit an exponential to BGT samples and test the fit.
    Analyze {
        /// CSV with one value per line or a header naming the column.
        samples: PathBuf,
        #[arg(long)]
        column: Option<String>,
        #[arg(long, default_value_t = 10)]
        bins: usize,
        /// Seed of the synthetic exponential reference sample.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Two-sample Anderson-Darling test between two CSV sample files.
    Adtest {
        f: PathBuf,
        g: PathBuf,
        #[arg(long)]
        column: Option<String>,
        /// Midrank tie handling instead of right-continuous ECDFs.
        #[arg(long)]
        midrank: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate success probabilities and emit a difficulty table.
    Table {
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_TABLE_LENGTHS)]
        lengths: Vec<usize>,
        #[arg(long, default_value_t = 200_000)]
        trials: u64,
        #[arg(long, default_value_t = 2021)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Runs one command; text meant for stdout is returned.
pub fn run(command: Command) -> CliResult<String> {
    match command {
        Command::Pcm {
            seed,
            n,
            wc,
            wr,
            out,
        } => cmd_pcm(&seed, n, wc, wr, out.as_deref()),
        Command::MineBench {
            level,
            blocks,
            threads,
            seed,
            out,
            table,
        } => {
            let table = input::load_table(table.as_deref())?;
            cmd_mine_bench(&table, level, blocks, threads, seed, &out)
        }
        Command::Simulate {
            config,
            seed,
            out,
            table,
        } => {
            let mut cfg = input::load_sim_config(&config)?;
            if let Some(path) = table {
                cfg.difficulty.table = Some(input::load_table(Some(&path))?);
            }
            if let Some(seed) = seed {
                cfg.rng_seed = seed;
            }
            cmd_simulate(&cfg, &out)
                .map(|r| serde_json::to_string_pretty(r.summary()).expect("serializes"))
        }
        Command::Analyze {
            samples,
            column,
            bins,
            seed,
            out,
        } => {
            let values = input::read_samples(&samples, column.as_deref())?;
            let analysis = cmd_analyze(&values, bins, seed, &out)?;
            Ok(serde_json::to_string_pretty(&analysis.ad).expect("serializes"))
        }
        Command::Adtest {
            f,
            g,
            column,
            midrank,
            out,
        } => {
            let fs = input::read_samples(&f, column.as_deref())?;
            let gs = input::read_samples(&g, column.as_deref())?;
            let ties = if midrank {
                TieHandling::Midrank
            } else {
                TieHandling::RightContinuous
            };
            let result = cmd_adtest(&fs, &gs, ties, out.as_deref())?;
            Ok(serde_json::to_string_pretty(&result).expect("serializes"))
        }
        Command::Table {
            lengths,
            trials,
            seed,
            out,
        } => cmd_table(&lengths, trials, seed, out.as_deref()),
    }
}

pub fn cmd_pcm(
    seed_hex: &str,
    n: usize,
    wc: usize,
    wr: usize,
    out: Option<&Path>,
) -> CliResult<String> {
    let seed = Digest256::from_hex(seed_hex).map_err(CliError::usage)?;
    let params = LdpcParams::new(n, wc, wr).map_err(CliError::usage)?;
    let dump = generate_pcm(&seed, params)
        .map_err(CliError::runtime)?
        .to_dump();
    if let Some(dir) = out {
        let mut files = OutputDir::create(
            dir,
            "pcm",
            json!({"seed": seed.to_hex(), "n": n, "wc": wc, "wr": wr}),
            None,
        )?;
        files.write("pcm.txt", &dump)?;
        files.finish()?;
    }
    Ok(dump.trim_end().to_string())
}

pub fn cmd_mine_bench(
    table: &DifficultyTable,
    level_index: usize,
    blocks: u64,
    threads: usize,
    seed: u64,
    out: &Path,
) -> CliResult<String> {
    let level = *table.get(level_index).ok_or_else(|| {
        CliError::Usage(format!(
            "--level {level_index}: table has levels 0..={}",
            table.max_index()
        ))
    })?;
    if blocks == 0 {
        return Err(CliError::Usage("--blocks must be at least 1".into()));
    }
    if threads == 0 {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    let config =
        json!({"level": level_index, "params": level, "blocks": blocks, "threads": threads});
    let mut files = OutputDir::create(out, "mine-bench", config, Some(seed))?;
    let mut sealer = DecoderSealer { level, threads };
    let records = mine_chain(&mut sealer, level_index as u32, blocks, seed)?;

    let attempts: Vec<f64> = records.iter().map(|r| r.attempts as f64).collect();
    let bgt: Vec<f64> = records.iter().map(|r| r.bgt_ms).collect();
    let (mean_attempts, std_attempts) = mean_and_std(&attempts);
    let (mean_bgt_ms, std_bgt_ms) = mean_and_std(&bgt);
    let summary = json!({
        "blocks": blocks,
        "level": level_index,
        "n": level.params.n,
        "wc": level.params.wc,
        "wr": level.params.wr,
        "success_prob": level.success_prob,
        "expected_attempts": level.expected_attempts(),
        "mean_attempts": mean_attempts,
        "std_attempts": std_attempts,
        "mean_bgt_ms": mean_bgt_ms,
        "std_bgt_ms": std_bgt_ms,
        "threads": threads,
    });
    let summary = serde_json::to_string_pretty(&summary).expect("serializes");
    files.write("bgt.csv", &records_csv(&records))?;
    files.write("summary.json", &(summary.clone() + "\n"))?;
    files.finish()?;
    Ok(summary)
}

pub fn cmd_simulate(config: &eccpow::simnet::SimConfig, out: &Path) -> CliResult<SimReport> {
    config.validate().map_err(CliError::usage)?;
    let resolved = serde_json::to_value(config).expect("serializes");
    let mut files = OutputDir::create(out, "simulate", resolved, Some(config.rng_seed))?;
    let report = run_simulation(config).map_err(CliError::runtime)?;

    let mut canonical = String::from("bgt_ms\n");
    for b in report.canonical() {
        canonical.push_str(&format!("{}\n", b.bgt_ms));
    }
    let mut series = String::from("height,timestamp_ms,level\n");
    for p in report.difficulty_series() {
        series.push_str(&format!("{},{},{}\n", p.height, p.timestamp_ms, p.level));
    }
    let mut buckets = String::from("bucket,percent\n");
    if let Some(p) = &report.summary().propagation {
        for (name, v) in [
            ("<=1s", p.within_1s),
            ("1-2s", p.from_1s_to_2s),
            ("2-4s", p.from_2s_to_4s),
            (">4s", p.over_4s),
        ] {
            buckets.push_str(&format!("{name},{v:.3}\n"));
        }
    }
    files.write("blocks.csv", &report.to_csv())?;
    files.write("canonical_bgt.csv", &canonical)?;
    files.write("propagation.csv", &buckets)?;
    files.write("difficulty.csv", &series)?;
    files.write("summary.json", &(report.summary_json() + "\n"))?;
    files.finish()?;
    Ok(report)
}

pub fn cmd_analyze(samples: &[f64], bins: usize, seed: u64, out: &Path) -> CliResult<BgtAnalysis> {
    if bins == 0 {
        return Err(CliError::Usage("--bins must be at least 1".into()));
    }
    let analysis = analyze_bgt(samples, bins, seed).map_err(CliError::runtime)?;
    let mut files = OutputDir::create(
        out,
        "analyze",
        json!({"bins": bins, "samples": samples.len()}),
        Some(seed),
    )?;
    let h = &analysis.histogram;
    let mut table = String::from("bin,lower,upper,observed,expected\n");
    for (i, (w, (obs, exp))) in h
        .edges
        .windows(2)
        .zip(h.counts.iter().zip(&analysis.expected))
        .enumerate()
    {
        table.push_str(&format!("{},{},{},{},{:.4}\n", i + 1, w[0], w[1], obs, exp));
    }
    let report = json!({
        "count": analysis.count,
        "mean": analysis.mean,
        "std": analysis.std,
        "rate": analysis.rate,
        "reference_seed": analysis.reference_seed,
        "ad": analysis.ad,
    });
    files.write("frequencies.csv", &table)?;
    files.write(
        "analysis.json",
        &(serde_json::to_string_pretty(&report).expect("serializes") + "\n"),
    )?;
    files.finish()?;
    Ok(analysis)
}

pub fn cmd_adtest(
    f: &[f64],
    g: &[f64],
    ties: TieHandling,
    out: Option<&Path>,
) -> CliResult<AdResult> {
    let result = ad_two_sample_with(f, g, ties).map_err(CliError::runtime)?;
    if let Some(dir) = out {
        let ties = matches!(ties, TieHandling::Midrank)
            .then_some("midrank")
            .unwrap_or("right-continuous");
        let mut files = OutputDir::create(
            dir,
            "adtest",
            json!({"ties": ties, "M": f.len(), "N": g.len()}),
            None,
        )?;
        files.write(
            "adtest.json",
            &(serde_json::to_string_pretty(&result).expect("serializes") + "\n"),
        )?;
        files.finish()?;
    }
    Ok(result)
}

pub fn cmd_table(
    lengths: &[usize],
    trials: u64,
    seed: u64,
    out: Option<&Path>,
) -> CliResult<String> {
    if trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    for &n in lengths {
        DifficultyTable::default_params(n)
            .map_err(|e| CliError::Usage(format!("--lengths {n}: {e}")))?;
    }
    let table =
        build_table(lengths, Default::default(), trials, seed).map_err(CliError::runtime)?;
    let text = table.to_json();
    if let Some(dir) = out {
        let mut files = OutputDir::create(
            dir,
            "table",
            json!({"lengths": lengths, "trials": trials}),
            Some(seed),
        )?;
        files.write("difficulty_table.json", &(text.clone() + "\n"))?;
        files.finish()?;
    }
    Ok(text)
}
