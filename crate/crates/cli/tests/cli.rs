use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use eccpow_cli::cmd_analyze;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use tempfile::TempDir;

fn eccpow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eccpow"))
        .args(args)
        .env_remove("ECCPOW_TABLE")
        .output()
        .unwrap()
}

fn core_fixture(name: &str) -> PathBuf {
    [
        env!("CARGO_MANIFEST_DIR"),
        "..",
        "core",
        "tests",
        "fixtures",
        name,
    ]
    .iter()
    .collect()
}

fn bundled_config() -> PathBuf {
    [env!("CARGO_MANIFEST_DIR"), "configs", "fig2-like.toml"]
        .iter()
        .collect()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn pcm_matches_golden_dumps() {
    for line in fs::read_to_string(core_fixture("pcm_index.txt"))
        .unwrap()
        .lines()
    {
        let f: Vec<&str> = line.split_whitespace().collect();
        let out = stdout(&eccpow(&[
            "pcm", f[1], "--n", f[2], "--wc", f[3], "--wr", f[4],
        ]));
        let golden = fs::read_to_string(core_fixture(&format!("pcm_{}.txt", f[0]))).unwrap();
        assert_eq!(out, golden, "{}", f[0]);
    }
}

#[test]
fn pcm_rejects_bad_input_with_usage_code() {
    assert_eq!(
        eccpow(&["pcm", "zz", "--n", "8", "--wc", "2", "--wr", "4"])
            .status
            .code(),
        Some(2)
    );
    let zero = "00".repeat(32);
    assert_eq!(
        eccpow(&["pcm", &zero, "--n", "9", "--wc", "2", "--wr", "4"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(eccpow(&["pcm"]).status.code(), Some(2));
    assert_eq!(eccpow(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn mine_bench_is_reproducible_with_one_thread() {
    let tmp = TempDir::new().unwrap();
    let run = |name: &str| {
        let dir = tmp.path().join(name);
        let d = dir.to_str().unwrap();
        stdout(&eccpow(&[
            "mine-bench",
            "--level",
            "0",
            "--blocks",
            "25",
            "--seed",
            "9",
            "--out",
            d,
        ]));
        assert!(dir.join("manifest.json").exists());
        let summary: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap();
        assert_eq!(summary["blocks"], 25);
        let csv = fs::read_to_string(dir.join("bgt.csv")).unwrap();
        assert!(csv.starts_with("height,attempts,bgt_ms\n"));
        csv.lines()
            .skip(1)
            .map(|l| l.split(',').nth(1).unwrap().to_string())
            .collect::<Vec<_>>()
    };
    let a = run("a");
    assert_eq!(a.len(), 25);
    assert_eq!(a, run("b"));
}

#[test]
fn mine_bench_level_checks_use_the_table_override() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("o");
    let out = out.to_str().unwrap();
    assert_eq!(
        eccpow(&["mine-bench", "--level", "99", "--blocks", "1", "--out", out])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        eccpow(&["mine-bench", "--blocks", "0", "--out", out])
            .status
            .code(),
        Some(2)
    );

    let table = write(
        tmp.path(),
        "table.json",
        r#"{"levels": [{"params": {"n": 16, "wc": 3, "wr": 4}, "decoder": {"max_iterations": 20, "crossover": 0.45, "weight_window": null}, "success_prob": 0.2}]}"#,
    );
    let with_env = |level: &str| {
        Command::new(env!("CARGO_BIN_EXE_eccpow"))
            .args([
                "mine-bench",
                "--level",
                level,
                "--blocks",
                "2",
                "--out",
                out,
            ])
            .env("ECCPOW_TABLE", &table)
            .output()
            .unwrap()
    };
    assert_eq!(with_env("1").status.code(), Some(2));
    stdout(&with_env("0"));

    let bad = write(tmp.path(), "bad.json", r#"{"levels": []}"#);
    let o = Command::new(env!("CARGO_BIN_EXE_eccpow"))
        .args(["mine-bench", "--blocks", "1", "--out", out])
        .env("ECCPOW_TABLE", &bad)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_bundled_config_writes_reports() {
    let tmp = TempDir::new().unwrap();
    let config = bundled_config();
    let run = |name: &str| {
        let dir = tmp.path().join(name);
        stdout(&eccpow(&[
            "simulate",
            "--config",
            config.to_str().unwrap(),
            "--out",
            dir.to_str().unwrap(),
        ]));
        dir
    };
    let (a, b) = (run("a"), run("b"));
    let csv = fs::read_to_string(a.join("blocks.csv")).unwrap();
    assert!(csv.starts_with("height,miner,bgt_ms,level,max_prop_ms,stale\n"));
    assert_eq!(csv, fs::read_to_string(b.join("blocks.csv")).unwrap());
    let buckets = fs::read_to_string(a.join("propagation.csv")).unwrap();
    assert_eq!(buckets.lines().count(), 5);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "simulate");
    assert_eq!(manifest["config"]["nodes"].as_array().unwrap().len(), 12);
    let miners = manifest["config"]["nodes"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|n| n["hashrate"].as_f64().unwrap() > 0.0)
        .count();
    assert_eq!(miners, 10);

    let reseeded = tmp.path().join("c");
    stdout(&eccpow(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--seed",
        "5",
        "--out",
        reseeded.to_str().unwrap(),
    ]));
    assert_ne!(
        csv,
        fs::read_to_string(reseeded.join("blocks.csv")).unwrap()
    );
}

#[test]
fn simulate_config_errors_name_the_key() {
    let tmp = TempDir::new().unwrap();
    let text = fs::read_to_string(bundled_config()).unwrap();
    let out = tmp.path().join("o");
    let check = |name: &str, body: &str, key: &str| {
        let path = write(tmp.path(), name, body);
        let o = eccpow(&[
            "simulate",
            "--config",
            &path,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(2), "{name}");
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains(key), "{name}: {err}");
    };
    check(
        "zero.toml",
        &text.replace("duration_s = 3600.0", "duration_s = 0.0"),
        "duration_s",
    );
    check(
        "typo.toml",
        &text.replace("genesis_level", "genesis_lvl"),
        "difficulty",
    );
    check(
        "type.toml",
        &text.replacen("hashrate = 0.25", "hashrate = \"x\"", 1),
        "nodes[2].hashrate",
    );
    check(
        "json.json",
        r#"{"nodes": [], "duration_s": 5, "rng_seed": -1}"#,
        "rng_seed",
    );
    assert_eq!(
        eccpow(&[
            "simulate",
            "--config",
            "/nonexistent.toml",
            "--out",
            "/tmp/x"
        ])
        .status
        .code(),
        Some(2)
    );
    assert!(!out.exists());
}

#[test]
fn analyze_reports_frequencies_and_rejects_constants() {
    let tmp = TempDir::new().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let exp = Exp::new(0.1).unwrap();
    let body: String = (0..300)
        .map(|_| format!("{:.3}\n", exp.sample(&mut rng)))
        .collect();
    let samples = write(tmp.path(), "s.csv", &format!("bgt_ms\n{body}"));
    let out = tmp.path().join("a");
    stdout(&eccpow(&[
        "analyze",
        &samples,
        "--seed",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]));
    let table = fs::read_to_string(out.join("frequencies.csv")).unwrap();
    let rows: Vec<Vec<f64>> = table
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 10);
    assert_eq!(rows.iter().map(|r| r[3]).sum::<f64>(), 300.0);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("analysis.json")).unwrap()).unwrap();
    assert_eq!(report["ad"]["M"], 300);
    assert_eq!(report["ad"]["N"], 300);
    assert!(report["rate"].as_f64().unwrap() > 0.08 && report["rate"].as_f64().unwrap() < 0.12);

    let constant = write(tmp.path(), "c.csv", &"5\n".repeat(20));
    assert_eq!(
        eccpow(&["analyze", &constant, "--out", out.to_str().unwrap()])
            .status
            .code(),
        Some(1)
    );
    let few = write(tmp.path(), "f.csv", "1\n2\n3\n");
    assert_eq!(
        eccpow(&["analyze", &few, "--out", out.to_str().unwrap()])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn analyze_exponential_data_is_mostly_not_rejected() {
    let tmp = TempDir::new().unwrap();
    let exp = Exp::new(0.1).unwrap();
    let capped = (0..100u64)
        .filter(|&seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(500 + seed);
            let xs: Vec<f64> = (0..300).map(|_| exp.sample(&mut rng)).collect();
            let a = cmd_analyze(&xs, 10, seed, &tmp.path().join(seed.to_string())).unwrap();
            a.ad.p_bound.value() >= 0.25
        })
        .count();
    assert!(capped > 50, "{capped}/100");
}

#[test]
fn adtest_outputs_and_errors() {
    let tmp = TempDir::new().unwrap();
    let f = write(tmp.path(), "f.csv", "x\n1\n2\n3\n");
    let r: serde_json::Value = serde_json::from_str(&stdout(&eccpow(&["adtest", &f, &f]))).unwrap();
    assert_eq!(r["a2"], 0.0);
    assert!((r["standardized"].as_f64().unwrap() - -1.7739371879672585).abs() < 1e-12);
    assert_eq!(r["p_bound"], "p >= 0.25");
    assert_eq!((r["M"].as_u64(), r["N"].as_u64()), (Some(3), Some(3)));

    let low = write(
        tmp.path(),
        "low.csv",
        &(1..=10).map(|i| format!("{i}\n")).collect::<String>(),
    );
    let high = write(
        tmp.path(),
        "high.csv",
        &(101..=110).map(|i| format!("{i}\n")).collect::<String>(),
    );
    let out = tmp.path().join("ad");
    let r: serde_json::Value = serde_json::from_str(&stdout(&eccpow(&[
        "adtest",
        &low,
        &high,
        "--midrank",
        "--out",
        out.to_str().unwrap(),
    ])))
    .unwrap();
    let p = r["p_bound"].as_str().unwrap();
    assert!(p.starts_with("p <=") || p.starts_with("p = 0.00"), "{p}");
    assert!(out.join("adtest.json").exists() && out.join("manifest.json").exists());

    let empty = write(tmp.path(), "e.csv", "");
    assert_eq!(eccpow(&["adtest", &f, &empty]).status.code(), Some(2));
    let broken = write(tmp.path(), "b.csv", "1\n2\nthree\n");
    let o = eccpow(&["adtest", &f, &broken]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("b.csv:3"));
}

#[test]
fn table_command_emits_a_loadable_table() {
    let text = stdout(&eccpow(&[
        "table",
        "--lengths",
        "16,20",
        "--trials",
        "2000",
        "--seed",
        "1",
    ]));
    let table = eccpow::consensus::DifficultyTable::from_json(&text).unwrap();
    assert_eq!(table.len(), 2);
    assert!(table.levels()[0].success_prob > table.levels()[1].success_prob);
    assert_eq!(eccpow(&["table", "--lengths", "17"]).status.code(), Some(2));
}
