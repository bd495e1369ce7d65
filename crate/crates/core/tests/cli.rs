use std::path::Path;
use std::process::{Command, Output};

use evoes::cli::RunManifest;

fn evoes(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evoes"))
        .args(args)
        .env_remove("EVOES_WORKERS")
        .output()
        .unwrap()
}

fn stdout_json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn small_walker_args(out: &Path) -> Vec<String> {
    [
        "--preset",
        "pointwalker-maxent",
        "--set",
        "population_size=40",
        "--set",
        "horizon=30",
        "--generations",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

#[test]
fn train_writes_manifest_and_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("a");
    let o = evoes(&["train", "--preset", "interference-maxvar", "--seed", "1", "--generations", "10", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report = stdout_json(&o);
    assert_eq!(report["generations"], 10);
    let manifest = RunManifest::load(out.join("manifest.json")).unwrap();
    assert_eq!(manifest.config.run_seed, 1);
    assert_eq!(manifest.config.learning_rate, 0.03);
    assert!(manifest.paths().count() >= 2);
    for p in manifest.paths() {
        assert!(p.exists(), "{}", p.display());
    }
    let bytes = std::fs::read(out.join("checkpoint.eves")).unwrap();
    assert_eq!(manifest.checkpoint_hash.unwrap(), evoes::cli::content_hash(&bytes));
    assert!(manifest.finished_at >= manifest.started_at);
}

#[test]
fn identical_manifests_mean_identical_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let mut hashes = Vec::new();
    for (i, workers) in ["1", "3"].iter().enumerate() {
        let out = dir.path().join(format!("r{i}"));
        let mut args = vec!["train".to_string(), "--workers".into(), workers.to_string()];
        args.extend(small_walker_args(&out));
        let o = evoes(&args.iter().map(String::as_str).collect::<Vec<_>>());
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        hashes.push(RunManifest::load(out.join("manifest.json")).unwrap().checkpoint_hash.unwrap());
    }
    assert_eq!(hashes[0], hashes[1]);
}

#[test]
fn workers_env_var_is_used() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("w");
    let mut args = vec!["train".to_string()];
    args.extend(small_walker_args(&out));
    let o = Command::new(env!("CARGO_BIN_EXE_evoes")).args(&args).env("EVOES_WORKERS", "2").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(RunManifest::load(out.join("manifest.json")).unwrap().workers, 2);
    let o = Command::new(env!("CARGO_BIN_EXE_evoes")).args(&args).env("EVOES_WORKERS", "lots").output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("EVOES_WORKERS"));
}

#[test]
fn downstream_subcommands_use_a_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("base");
    let mut args = vec!["train".to_string()];
    args.extend(small_walker_args(&out));
    assert_eq!(evoes(&args.iter().map(String::as_str).collect::<Vec<_>>()).status.code(), Some(0));
    let cp = out.join("checkpoint.eves");
    let cp = cp.to_str().unwrap();

    let eval_out = dir.path().join("eval");
    let o = evoes(&["evaluate", "--checkpoint", cp, "--samples", "150", "--bins", "10", "--out", eval_out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout_json(&o)["samples"], 150);
    let heatmap = evoes::experiments::Heatmap::from_csv(&std::fs::read_to_string(eval_out.join("heatmap.csv")).unwrap()).unwrap();
    assert_eq!(heatmap.total() + heatmap.out_of_range as u64, 150);
    for p in RunManifest::load(eval_out.join("manifest.json")).unwrap().paths() {
        assert!(p.exists());
    }

    let o = evoes(&["adapt", "--checkpoint", cp, "--objective", "-x", "--k", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout_json(&o)["all_scores"].as_array().unwrap().len(), 4);

    let seed_out = dir.path().join("seed");
    let o = evoes(&["seed-es", "--checkpoint", cp, "--generations", "3", "--out", seed_out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout_json(&o)["seeded_fitness"].as_array().unwrap().len(), 3);
    assert!(seed_out.join("seeded.csv").exists() && seed_out.join("fresh.csv").exists());

    let o = evoes(&["adapt", "--checkpoint", cp, "--objective", "+y"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn gmm_split_reports_components() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("gmm");
    let mut args = vec!["gmm-split".to_string(), "--mode".into(), "splitting".into(), "--split-at".into(), "1".into()];
    args.extend(small_walker_args(&out));
    let o = evoes(&args.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout_json(&o)["component_bcs"].as_array().unwrap().len(), 2);
    assert!(out.join("checkpoint.eves").exists());

    let mut args = vec!["gmm-split".to_string(), "--mode".into(), "splitting".into(), "--split-at".into(), "9".into()];
    args.extend(small_walker_args(&out));
    let o = evoes(&args.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("split_at"));
}

#[test]
fn theorem_demo_prints_json() {
    let o = evoes(&["theorem-demo", "--epsilon", "0.05", "--trials", "100"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    assert_eq!(v["passed"], true);
    for key in ["sup_error_pos", "sup_error_neg", "flip_rate_pos", "flip_rate_neg", "theorem_bound"] {
        assert!(v[key].is_number(), "{key}");
    }
    assert!(v["sup_error_pos"].as_f64().unwrap() < 0.05);
}

#[test]
fn gradcheck_runs_small() {
    let o = evoes(&["gradcheck", "--n", "2000"]);
    let v = stdout_json(&o);
    assert_eq!(v["checks"].as_array().unwrap().len(), 6);
    let expected = if v["passed"] == true { 0 } else { 2 };
    assert_eq!(o.status.code(), Some(expected));
}

#[test]
fn validation_errors_exit_one() {
    let o = evoes(&["train", "--frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--frobnicate"));

    let o = evoes(&["launch"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));

    let o = evoes(&["train", "--set", "population_size=0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("population_size"));

    let o = evoes(&["train", "--preset", "nope"]);
    assert_eq!(o.status.code(), Some(1));

    let o = evoes(&["theorem-demo", "--epsilon", "-1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn runtime_failures_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.eves");
    std::fs::write(&bad, b"EVESgarbage").unwrap();
    let o = evoes(&["adapt", "--checkpoint", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = evoes(&["adapt", "--checkpoint", dir.path().join("missing.eves").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
