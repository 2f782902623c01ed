use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ctl_core::distances::{compute_distance_matrix, read_distance_csv, DistanceParams};
use ctl_core::tasks::load_train_only;

fn ctl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ctl")).args(args).output().expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

const SYN: &str = r#"{"num_tasks": 5, "dim": 3, "n_train": 12, "n_test": 6, "num_clusters": 2,
    "tau_between": 2.0, "tau_within": 1.0, "noise_sigma": 0.5, "center_scale": 3.0}"#;

fn generated(dir: &Path, syn: &str) -> PathBuf {
    let cfg = write(dir, "syn.json", syn);
    let data = dir.join("data");
    let out = ctl(&["gen", "--config", p(&cfg), "--out", p(&data)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    data
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "run_manifest.json")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

#[test]
fn gen_writes_collection_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let data = generated(dir.path(), SYN);
    assert!(data.join("manifest.json").exists());
    assert!(data.join("ground_truth.json").exists());
    let manifest = ctl_cli::RunManifest::read(&data).unwrap();
    assert!(manifest.outputs.iter().all(|f| data.join(f).exists()));

    let cfg = dir.path().join("syn.json");
    let again = dir.path().join("again");
    assert!(ctl(&["gen", "--config", p(&cfg), "--out", p(&again)]).status.success());
    assert_eq!(files(&data), files(&again));

    let other = dir.path().join("other");
    assert!(ctl(&["--seed", "7", "gen", "--config", p(&cfg), "--out", p(&other)]).status.success());
    assert_ne!(files(&data), files(&other));
}

#[test]
fn missing_or_malformed_configs_exit_with_usage_status() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    assert_eq!(ctl(&["gen", "--config", "/nonexistent.json", "--out", p(&out)]).status.code(), Some(2));
    let bad = write(dir.path(), "bad.json", "{ not json");
    assert_eq!(ctl(&["run", "--config", p(&bad), "--out", p(&out)]).status.code(), Some(2));
    assert_eq!(ctl(&["verify", "--config", p(&bad), "--out", p(&out)]).status.code(), Some(2));
    let unknown_key = write(dir.path(), "k.json", r#"{"num_tasks": 3, "colour": 1}"#);
    assert_eq!(ctl(&["gen", "--config", p(&unknown_key), "--out", p(&out)]).status.code(), Some(2));
    assert_eq!(ctl(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn dist_of_single_task_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let data = generated(dir.path(), r#"{"num_tasks": 1, "dim": 2, "n_train": 5, "n_test": 3}"#);
    let out = dir.path().join("d.csv");
    assert!(ctl(&["dist", "--data", p(&data), "--metric", "mmd", "--out", p(&out)]).status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[1].parse::<f64>().unwrap(), 0.0);
}

#[test]
fn unknown_metric_lists_valid_names() {
    let dir = tempfile::tempdir().unwrap();
    let data = generated(dir.path(), SYN);
    let out = ctl(&["dist", "--data", p(&data), "--metric", "cosine", "--out", p(&dir.path().join("d.csv"))]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    for name in ctl_core::Metric::NAMES {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn dist_output_reloads_to_the_in_memory_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let data = generated(dir.path(), SYN);
    for metric in ctl_core::Metric::NAMES {
        let out = dir.path().join(format!("{metric}.csv"));
        assert!(ctl(&["dist", "--data", p(&data), "--metric", metric, "--out", p(&out)]).status.success());
        let expected = compute_distance_matrix(&load_train_only(&data).unwrap(), metric.parse().unwrap(), &DistanceParams::default()).unwrap();
        assert_eq!(read_distance_csv(&out, metric).unwrap(), expected);
    }
}

#[test]
fn distance_and_tree_phases_never_read_test_files() {
    let dir = tempfile::tempdir().unwrap();
    let data = generated(dir.path(), SYN);
    let before = ctl(&["tree", "--data", p(&data), "--kind", "mst", "--out", p(&dir.path().join("a.csv"))]);
    assert!(before.status.success());
    for entry in std::fs::read_dir(&data).unwrap() {
        let path = entry.unwrap().path();
        if path.to_string_lossy().ends_with("_test.csv") {
            std::fs::remove_file(path).unwrap();
        }
    }
    for metric in ctl_core::Metric::NAMES {
        let out = ctl(&["dist", "--data", p(&data), "--metric", metric, "--out", p(&dir.path().join("d.csv"))]);
        assert!(out.status.success(), "{metric}: {}", String::from_utf8_lossy(&out.stderr));
    }
    for kind in ["mst", "star", "random"] {
        let out = ctl(&["tree", "--data", p(&data), "--kind", kind, "--out", p(&dir.path().join(format!("{kind}.csv")))]);
        assert!(out.status.success(), "{kind}: {}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(std::fs::read(dir.path().join("a.csv")).unwrap(), std::fs::read(dir.path().join("mst.csv")).unwrap());
}

#[test]
fn tree_csv_has_root_header_and_spanning_edges() {
    let dir = tempfile::tempdir().unwrap();
    let data = generated(dir.path(), SYN);
    let out = dir.path().join("t.csv");
    assert!(ctl(&["tree", "--data", p(&data), "--kind", "star", "--metric", "target", "--out", p(&out)]).status.success());
    let text = std::fs::read_to_string(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# root=task_"));
    assert_eq!(lines[1], "parent,child,edge_length");
    assert_eq!(lines.len(), 2 + 4);
    let root = lines[0].trim_start_matches("# root=");
    assert!(lines[2..].iter().all(|l| l.starts_with(&format!("{root},"))));
}

const RUN: &str = r#"{"method": "mst", "metric": "gradient", "budget": 80, "num_seeds": 3,
    "synthetic": {"num_tasks": 8, "dim": 4, "n_train": 16, "n_test": 8, "num_clusters": 2,
                  "tau_between": 3.0, "tau_within": 1.0, "noise_sigma": 0.5, "center_scale": 5.0}}"#;

#[test]
fn run_writes_report_tables_and_trees() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.json", RUN);
    let out = dir.path().join("out");
    let res = ctl(&["run", "--config", p(&cfg), "--out", p(&out)]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let report: ctl_cli::RunReport = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report.per_seed_mean_rmse.len(), 3);
    assert_eq!(report.trees.len(), 3);
    let rows = std::fs::read_to_string(out.join(&report.per_task_csv)).unwrap();
    let mut lines = rows.lines();
    assert_eq!(lines.next(), Some("seed,task_id,test_rmse,budget,depth"));
    let mut sums = [0.0; 3];
    let mut budgets = [0u64; 3];
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        let s: usize = f[0].parse().unwrap();
        sums[s] += f[2].parse::<f64>().unwrap();
        budgets[s] += f[3].parse::<u64>().unwrap();
    }
    for s in 0..3 {
        assert!((sums[s] / 8.0 - report.per_seed_mean_rmse[s]).abs() < 1e-12);
        assert_eq!(budgets[s], 80);
    }
    let manifest = ctl_cli::RunManifest::read(&out).unwrap();
    assert!(manifest.outputs.iter().all(|f| out.join(f).exists()));
}

#[test]
fn run_flags_override_config_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.json", RUN);
    let out = dir.path().join("out");
    let res = ctl(&["--seed", "11", "run", "--config", p(&cfg), "--out", p(&out), "--method", "individual", "--num-seeds", "2", "--budget", "40"]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let report: ctl_cli::RunReport = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report.config.seed, 11);
    assert_eq!(report.config.budget, 40);
    assert_eq!(report.seeds.len(), 2);
    assert!(report.trees.is_empty());
    let low = ctl(&["run", "--config", p(&cfg), "--out", p(&out), "--budget", "3"]);
    assert_eq!(low.status.code(), Some(2));
}

#[test]
fn run_is_byte_reproducible_for_any_job_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.json", RUN);
    let mut reports = Vec::new();
    for (i, jobs) in ["1", "3", "1"].iter().enumerate() {
        let out = dir.path().join(format!("out{i}"));
        assert!(ctl(&["--jobs", jobs, "run", "--config", p(&cfg), "--out", p(&out)]).status.success());
        reports.push((std::fs::read(out.join("report.json")).unwrap(), std::fs::read(out.join("per_task.csv")).unwrap(), std::fs::read(out.join("trees/seed_002.csv")).unwrap()));
    }
    assert_eq!(reports[0], reports[1]);
    assert_eq!(reports[0], reports[2]);
}

#[test]
fn verify_default_passes_and_noisy_misses_only_warn() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v.json");
    let res = ctl(&["verify", "--out", p(&out)]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let reports: Vec<serde_json::Value> = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(reports.len(), 100);
    assert!(reports.iter().all(|r| r["satisfied"] == true));

    let noisy = write(dir.path(), "noisy.json", r#"{"chains": [{"length": 2, "dim": 3, "n_samples": 5, "noise_sigma": 2.0, "mc_draws": 2}]}"#);
    let res = ctl(&["verify", "--config", p(&noisy), "--out", p(&out)]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let empty = write(dir.path(), "empty.json", r#"{"chains": []}"#);
    assert_eq!(ctl(&["verify", "--config", p(&empty), "--out", p(&out)]).status.code(), Some(2));
}

#[test]
fn bench_rows_and_aggregates() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bench.json",
        r#"{"methods": ["individual", "star"], "budgets": [60], "num_seeds": 2,
            "synthetic": {"num_tasks": 6, "dim": 3, "n_train": 10, "n_test": 5, "tau_within": 1.0, "noise_sigma": 0.3}}"#,
    );
    let out = dir.path().join("b");
    let res = ctl(&["bench", "--config", p(&cfg), "--out", p(&out)]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let rows = std::fs::read_to_string(out.join("bench.csv")).unwrap();
    let lines: Vec<&str> = rows.lines().collect();
    assert_eq!(lines[0], ctl_cli::BENCH_HEADER);
    assert_eq!(lines.len(), 1 + 4);

    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    let mut s = summary.lines();
    assert_eq!(s.next(), Some(ctl_cli::SUMMARY_HEADER));
    for line in s {
        let f: Vec<&str> = line.split(',').collect();
        let vals: Vec<f64> = lines[1..]
            .iter()
            .map(|l| l.split(',').collect::<Vec<_>>())
            .filter(|r| r[0] == f[0] && r[1] == f[1] && r[2] == f[2])
            .map(|r| r[4].parse().unwrap())
            .collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let std = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (vals.len() as f64 - 1.0)).sqrt();
        assert!((mean - f[3].parse::<f64>().unwrap()).abs() < 1e-12);
        assert!((std - f[4].parse::<f64>().unwrap()).abs() < 1e-12);
        assert_eq!(f[5], "2");
    }
}
