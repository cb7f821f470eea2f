use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;
use tmis::io::{write_model, write_policy};
use tmis_core::generate::single_path;

fn tmis(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tmis")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = tmis(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn error_of(args: &[&str]) -> serde_json::Value {
    let out = tmis(args);
    assert!(!out.status.success(), "{args:?} should fail");
    let stderr = String::from_utf8(out.stderr).unwrap();
    serde_json::from_str(stderr.lines().last().unwrap()).unwrap_or_else(|e| panic!("{e}: {stderr}"))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Benchmark files for `H = 6` plus a sampled dataset.
fn bench(dir: &TempDir) -> (String, String, String, String) {
    let d = dir.path();
    ok(&["make-env", "--horizon", "6", "--out-dir", s(d)]);
    let data = d.join("data.jsonl");
    ok(&["simulate", "--paper-h", "6", "-n", "300", "--seed", "4", "--out", s(&data)]);
    (
        s(&d.join("model.json")).into(),
        s(&d.join("mu.json")).into(),
        s(&d.join("pi.json")).into(),
        s(&data).into(),
    )
}

#[test]
fn split_with_one_fold_matches_tmis() {
    let dir = TempDir::new().unwrap();
    let (_, _, pi, data) = bench(&dir);
    let a = ok(&["evaluate", "--estimator", "tmis", "--data", &data, "--policy", &pi]);
    let b = ok(&["evaluate", "--estimator", "split-tmis", "--folds", "1", "--data", &data, "--policy", &pi]);
    assert_eq!(a.lines().next(), b.lines().next());
    let diag: serde_json::Value = serde_json::from_str(a.lines().nth(1).unwrap()).unwrap();
    assert_eq!(diag["n"], 300);
    assert_eq!(diag["H"], 6);
}

#[test]
fn single_path_round_trip() {
    let dir = TempDir::new().unwrap();
    let (mdp, pi) = single_path(5, 1.0);
    let (model, policy) = (dir.path().join("m.json"), dir.path().join("p.json"));
    write_model(&model, &mdp).unwrap();
    write_policy(&policy, &pi).unwrap();
    for ext in ["jsonl", "csv"] {
        let data = dir.path().join(format!("d.{ext}"));
        ok(&["simulate", "--model", s(&model), "--policy", s(&policy), "-n", "3", "--out", s(&data)]);
        for est in ["tmis", "split-tmis"] {
            let out = ok(&["evaluate", "--estimator", est, "--data", s(&data), "--policy", s(&policy)]);
            assert_eq!(out.lines().next().unwrap(), "5");
        }
        for est in ["is", "step-is", "smis"] {
            let out = ok(&[
                "evaluate", "--estimator", est, "--data", s(&data), "--policy", s(&policy), "--mu", s(&policy),
            ]);
            assert_eq!(out.lines().next().unwrap(), "5");
        }
    }
}

#[test]
fn logging_policy_flag_is_enforced() {
    let dir = TempDir::new().unwrap();
    let (_, mu, pi, data) = bench(&dir);
    let e = error_of(&["evaluate", "--estimator", "smis", "--data", &data, "--policy", &pi]);
    assert_eq!(e["error"]["kind"], "usage");
    let e = error_of(&["evaluate", "--estimator", "tmis", "--data", &data, "--policy", &pi, "--mu", &mu]);
    assert_eq!(e["error"]["kind"], "usage");
    let e = error_of(&["evaluate", "--estimator", "wis", "--data", &data, "--policy", &pi]);
    assert_eq!(e["error"]["kind"], "config");
    let e = error_of(&["evaluate", "--data", "/nonexistent.jsonl", "--policy", &pi]);
    assert_eq!(e["error"]["kind"], "io");
    let e = error_of(&["make-env", "--horizon", "5"]);
    assert_eq!(e["error"]["kind"], "config");
    ok(&["evaluate", "--estimator", "smis", "--data", &data, "--policy", &pi, "--mu", &mu]);
}

#[test]
fn same_seed_gives_identical_artifacts() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let read = |name: &str| std::fs::read(d.join(name)).unwrap();
    for name in ["a.csv", "b.csv"] {
        ok(&["simulate", "--paper-h", "8", "-n", "50", "--seed", "9", "--out", s(&d.join(name))]);
    }
    assert_eq!(read("a.csv"), read("b.csv"));
    ok(&["simulate", "--paper-h", "8", "-n", "50", "--seed", "10", "--out", s(&d.join("c.csv"))]);
    assert_ne!(read("a.csv"), read("c.csv"));

    let config = d.join("sweep.json");
    std::fs::write(
        &config,
        r#"{"estimators": ["tmis", "smis", "is"], "n_grid": [32, 64], "h_grid": [4, 8],
            "replications": 5, "master_seed": 2, "split": {"folds": 2}}"#,
    )
    .unwrap();
    for (name, workers) in [("s1.csv", "1"), ("s2.csv", "3")] {
        ok(&["sweep", "--config", s(&config), "--workers", workers, "--no-timing", "--out", s(&d.join(name))]);
    }
    assert_eq!(read("s1.csv"), read("s2.csv"));
    let text = String::from_utf8(read("s1.csv")).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "estimator,H,n,K,mean_estimate,true_value,rmse,relative_rmse,wall_seconds"
    );
    assert_eq!(text.lines().count(), 1 + 3 * 2 * 2);
}

#[test]
fn sweep_config_errors_are_reported() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("bad.json");
    std::fs::write(&config, r#"{"estimators": ["tmis"], "n_grid": [], "h_grid": [4], "replications": 1, "master_seed": 0}"#)
        .unwrap();
    let e = error_of(&["sweep", "--config", s(&config)]);
    assert!(e["error"]["message"].as_str().unwrap().contains("nonempty"));
    std::fs::write(&config, "{").unwrap();
    assert_eq!(error_of(&["sweep", "--config", s(&config)])["error"]["kind"], "parse");
}

#[test]
fn bounds_report_has_every_field() {
    let dir = TempDir::new().unwrap();
    let (model, mu, pi, _) = bench(&dir);
    let from_files: serde_json::Value =
        serde_json::from_str(&ok(&["bounds", "--model", &model, "--mu", &mu, "--pi", &pi, "-n", "4096"])).unwrap();
    let builtin: serde_json::Value = serde_json::from_str(&ok(&["bounds", "--paper-h", "6", "-n", "4096"])).unwrap();
    assert_eq!(from_files, builtin);
    for key in [
        "n",
        "crlb_asymptotic",
        "smis_asymptotic",
        "tmis_bound_leading",
        "tmis_bound_higher_order",
        "tmis_bound",
        "per_timestep_terms",
        "in_regime",
        "tau_s",
        "tau_a",
        "d_m",
        "d_m_sa",
    ] {
        assert!(builtin.get(key).is_some(), "missing {key}");
    }
    assert_eq!(builtin["tau_a"], 1.5);
}

#[test]
fn select_policy_enumerates_the_class() {
    let out = ok(&["select-policy", "--paper-h", "2", "-n", "64", "--seed", "1"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["num_policies"], 16);
    assert!(v["sup_error"].as_f64().unwrap() >= 0.0);
    let e = error_of(&["select-policy", "--paper-h", "8", "--cap", "1000"]);
    assert_eq!(e["error"]["kind"], "too_large");
}

#[test]
fn help_lists_flags_with_defaults() {
    let cases: [(&str, &[&str]); 6] = [
        ("simulate", &["--n <N>", "[default: 1000]", "--seed", "[default: 0]", "--p-seed", "[default: 100]"]),
        ("evaluate", &["--estimator", "[default: tmis]", "--folds", "[default: 1]", "--mu"]),
        ("sweep", &["--config", "--preset", "[default: n]", "--workers", "[default: 0]", "--no-timing"]),
        ("bounds", &["--model", "--paper-h", "--n <N>", "[default: 1024]"]),
        ("select-policy", &["--cap", "[default: 1000000]", "--folds"]),
        ("make-env", &["--horizon", "--out-dir", "[default: .]"]),
    ];
    for (cmd, needles) in cases {
        let text = ok(&[cmd, "--help"]);
        for needle in needles {
            assert!(text.contains(needle), "{cmd} --help lacks {needle}:\n{text}");
        }
    }
}

#[test]
fn sweep_over_model_files() {
    let dir = TempDir::new().unwrap();
    bench(&dir);
    let config = dir.path().join("files.json");
    std::fs::write(
        &config,
        r#"{"estimators": ["tmis", "smis"], "n_grid": [64], "h_grid": [6], "replications": 4, "master_seed": 1,
            "environment": {"kind": "files", "model": "model.json", "mu": "mu.json", "pi": "pi.json",
                            "mu_known": false}}"#,
    )
    .unwrap();
    let out = tmis(&["sweep", "--config", s(&config), "--no-timing"]);
    assert!(out.status.success());
    let csv = String::from_utf8(out.stdout).unwrap();
    let smis = csv.lines().find(|l| l.starts_with("smis,")).unwrap();
    assert!(smis.contains("NaN"), "{smis}");
    let marker: serde_json::Value = serde_json::from_str(String::from_utf8(out.stderr).unwrap().trim()).unwrap();
    assert_eq!(marker["row_error"]["estimator"], "smis");
    assert!(!csv.lines().find(|l| l.starts_with("tmis,")).unwrap().contains("NaN"));
}
