// Copyright 2026 The bqctl Authors
// SPDX-License-Identifier: Apache-2.0

use std::path::Path;
use std::process::Command;

use sha2::{Digest, Sha256};

use bqctl_cli::{run_pipeline, run_stage, CliError, RunConfig, RunOptions, Stage};

const ENERGY2: &str =
    "seed = 0\n[instance]\nfamily = \"energy\"\nq = 2\n[round]\nmethod = \"sur\"\n";

fn digest(path: &Path) -> Vec<u8> {
    Sha256::digest(std::fs::read(path).unwrap()).to_vec()
}

fn csv_files(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with("_controls.csv"))
        .collect();
    names.sort();
    names
}

#[test]
fn energy2_pipeline_writes_three_stages_and_a_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig::parse(ENERGY2).unwrap();
    let outcome = run_pipeline(&cfg, &RunOptions::new(dir.path())).unwrap();
    assert_eq!(
        csv_files(dir.path()),
        [
            "improve_controls.csv",
            "relax_controls.csv",
            "round_controls.csv"
        ]
    );
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&outcome.summary_path).unwrap()).unwrap();
    let stages = summary["stages"].as_array().unwrap();
    assert_eq!(stages.len(), 3);
    for s in stages {
        for key in [
            "stage",
            "objective",
            "tv_value",
            "sos1_penalty",
            "epsilon",
            "iterations",
            "wall_seconds",
            "status",
        ] {
            assert!(!s[key].is_null(), "{key} missing in {s}");
        }
    }
    assert!(!stages[1]["bound_certificates"].is_null());
    let improve = &outcome.reports[2];
    assert!(improve.objective <= outcome.reports[1].objective);
    assert!(dir.path().join("plot_objective_tv.csv").exists());
}

#[test]
fn improve_off_leaves_exactly_two_stage_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig::parse(&format!("{ENERGY2}[improve]\nenabled = false\n")).unwrap();
    run_pipeline(&cfg, &RunOptions::new(dir.path())).unwrap();
    assert_eq!(
        csv_files(dir.path()),
        ["relax_controls.csv", "round_controls.csv"]
    );
    assert!(!dir.path().join("improve_report.json").exists());
}

#[test]
fn same_seed_gives_bitwise_identical_csvs() {
    let cfg = RunConfig::parse(
        "seed = 4\n[instance]\nfamily = \"circuit\"\nq = 1\nT = 20\n[round]\nmethod = \"mt\"\n",
    )
    .unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_pipeline(&cfg, &RunOptions::new(a.path())).unwrap();
    run_pipeline(&cfg, &RunOptions::new(b.path())).unwrap();
    let names = csv_files(a.path());
    assert_eq!(names.len(), 3);
    for name in names
        .iter()
        .map(String::as_str)
        .chain(["plot_objective_tv.csv", "target.txt"])
    {
        assert_eq!(
            digest(&a.path().join(name)),
            digest(&b.path().join(name)),
            "{name}"
        );
    }
}

#[test]
fn existing_artifacts_need_force() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig::parse(ENERGY2).unwrap();
    let mut opts = RunOptions::new(dir.path());
    run_pipeline(&cfg, &opts).unwrap();
    let before = digest(&dir.path().join("summary.json"));
    assert!(matches!(
        run_pipeline(&cfg, &opts),
        Err(CliError::Exists(_))
    ));
    assert_eq!(digest(&dir.path().join("summary.json")), before);
    opts.force = true;
    run_pipeline(&cfg, &opts).unwrap();
}

#[test]
fn stages_run_one_at_a_time() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig::parse(ENERGY2).unwrap();
    let opts = RunOptions::new(dir.path());
    let (relaxed, _) = run_stage(&cfg, &opts, Stage::Relax, None).unwrap();
    let (rounded, _) = run_stage(&cfg, &opts, Stage::Round, None).unwrap();
    let (improved, report) = run_stage(&cfg, &opts, Stage::Improve, None).unwrap();
    assert!(!relaxed.is_sos1_binary());
    assert!(rounded.is_sos1_binary() && improved.is_sos1_binary());
    assert!(report.history.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn failing_stage_keeps_partial_artifacts_and_records_the_failure() {
    let dir = tempfile::tempdir().unwrap();
    // A min-up time longer than the horizon leaves rounding infeasible.
    let cfg = RunConfig::parse(
        "[instance]\nfamily = \"energy\"\nT = 8\nt_minup = 20\n[round]\nmethod = \"mt\"\n",
    )
    .unwrap();
    let err = run_pipeline(&cfg, &RunOptions::new(dir.path())).unwrap_err();
    assert_eq!(err.kind(), "solver");
    assert!(dir.path().join("relax_controls.csv").exists());
    assert!(!dir.path().join("round_controls.csv").exists());
    let failure: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("failure.json")).unwrap())
            .unwrap();
    assert_eq!(failure["stage"], "round");
}

#[test]
fn binary_reports_errors_as_json_with_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(&config, "[instance]\nfamily = \"energy\"\nrhoo = 1\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_bqctl"))
        .args(["run", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["status"], "error");
    assert_eq!(err["kind"], "config");
}

#[test]
fn binary_runs_a_config_with_seed_override() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(&config, "[instance]\nfamily = \"circuit\"\nq = 1\nT = 12\n").unwrap();
    let run = |out: &str, seed: &str| {
        Command::new(env!("CARGO_BIN_EXE_bqctl"))
            .args(["run", "--seed", seed, "--time-limit", "30", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(dir.path().join(out))
            .output()
            .unwrap()
    };
    assert!(run("a", "1").status.success());
    assert!(run("b", "2").status.success());
    let target = |d: &str| std::fs::read(dir.path().join(d).join("target.txt")).unwrap();
    assert_ne!(target("a"), target("b"));
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = RunConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        bqctl_cli::pipeline::build_instance(&cfg, cfg.seed, None).unwrap();
        seen += 1;
    }
    assert!(seen >= 4);
}
