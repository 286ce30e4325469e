use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn evh(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evh"))
        .current_dir(dir)
        .args(args)
        .env("EVH_THREADS", "2")
        .output()
        .expect("spawn evh")
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn result(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("out/result.json")).unwrap()).unwrap()
}

fn table(dir: &Path, name: &str) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(dir.join("out/tables").join(format!("{name}.csv"))).unwrap();
    r.records()
        .map(|x| x.unwrap().iter().map(String::from).collect())
        .collect()
}

fn write_law(dir: &Path, name: &str, m0: [[f64; 2]; 2], sup: f64) -> PathBuf {
    let p = dir.join(name);
    let c = |x: f64| format!("[{x}, 0.0]");
    let text = format!(
        "{{\"dim\": 2, \"eps\": 2.0, \"K\": 0, \"coeffs\": [[[{}, {}], [{}, {}]]], \"sup_bound\": {sup}}}",
        c(m0[0][0]),
        c(m0[0][1]),
        c(m0[1][0]),
        c(m0[1][1])
    );
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn certify_identity_law() {
    let dir = tempfile::tempdir().unwrap();
    write_law(dir.path(), "law.json", [[1.0, 0.0], [0.0, 1.0]], 1.0);
    let out = evh(
        dir.path(),
        &[
            "run", "certify", "--law", "law.json", "--c", "1", "--d", "1",
        ],
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let doc = result(dir.path());
    assert_eq!(doc["status"], "ok");
    let cert = &doc["result"]["certificate"];
    assert_eq!(cert["nu1"].as_f64().unwrap(), 14.0 / 3.0);
    assert_eq!(cert["delta_hat"].as_f64().unwrap(), 1.0 / 6.0);
    assert_eq!(cert["r"].as_f64().unwrap(), 1.0 / 12.0);
    let rows = table(dir.path(), "certificate");
    assert!(rows.iter().any(|r| r[0] == "nu1" && r[1] == "4.66667e0"));
}

#[test]
fn hypothesis_violation_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    write_law(dir.path(), "law.json", [[1.0, 1.0], [0.0, 1.0]], 2.0);
    let out = evh(
        dir.path(),
        &[
            "run", "certify", "--law", "law.json", "--c", "1", "--d", "1",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("hypothesis violated"));
    let doc = result(dir.path());
    assert_eq!(doc["status"], "hypothesis_violated");
    assert!(doc["violated_condition"].is_string());
}

#[test]
fn internal_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("law.json"), "{\"dim\": 2").unwrap();
    let out = evh(
        dir.path(),
        &[
            "run", "certify", "--law", "law.json", "--c", "1", "--d", "1",
        ],
    );
    assert_eq!(out.status.code(), Some(1));

    std::fs::write(
        dir.path().join("bad.toml"),
        "experiment = \"certify\"\ngird = 4\n",
    )
    .unwrap();
    let out = evh(dir.path(), &["run", "--config", "bad.toml"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("gird") && err.contains("line 2"), "{err}");

    let out = evh(
        dir.path(),
        &["run", "heat_sweep", "--grid", "100", "--ladder", "4..64"],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ladder"));

    let out = evh(dir.path(), &["run", "certify", "--law", "missing.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn count_example() {
    let dir = tempfile::tempdir().unwrap();
    let out = evh(
        dir.path(),
        &[
            "run",
            "counterexample",
            "--preset",
            "count_ai",
            "--grid",
            "512",
            "--n",
            "64",
        ],
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let doc = result(dir.path());
    let eff = &doc["result"]["effective"];
    assert!((eff[0].as_f64().unwrap() - 18.0 / 13.0).abs() <= 1e-12);
    assert!((eff[1].as_f64().unwrap() - 14.0 / 13.0).abs() <= 1e-12);
    let count = table(dir.path(), "count");
    assert!(count.iter().flatten().any(|c| c == "1.38462e0"));
    assert!(count.iter().flatten().any(|c| c == "1.07692e0"));
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("periodic_pde.toml");
    let cfg = cfg.to_str().unwrap();
    let mut docs = Vec::new();
    for threads in ["1", "3"] {
        let out = Command::new(env!("CARGO_BIN_EXE_evh"))
            .current_dir(dir.path())
            .args(["run", "--config", cfg, "--out", "out"])
            .env("EVH_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(
            out.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        docs.push(std::fs::read(dir.path().join("out/result.json")).unwrap());
    }
    assert_eq!(docs[0], docs[1]);
}

#[test]
fn random_causality() {
    let dir = tempfile::tempdir().unwrap();
    let out = evh(
        dir.path(),
        &[
            "run",
            "causality",
            "--preset",
            "random",
            "--grid",
            "5",
            "--seed",
            "4",
        ],
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r = &result(dir.path())["result"];
    assert!(r["causal_residual"].as_f64().unwrap() <= 1e-7);
    assert!(r["anti_causal_residual"].as_f64().unwrap() >= 0.1);
}

#[test]
fn shipped_configs_parse() {
    for entry in std::fs::read_dir(configs()).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "toml") {
            let cfg = evh_cli::ExperimentConfig::from_file(&p).unwrap();
            cfg.validate()
                .unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        }
    }
}

#[test]
fn presets_listed() {
    let dir = tempfile::tempdir().unwrap();
    let out = evh(dir.path(), &["presets"]);
    let text = String::from_utf8_lossy(&out.stdout);
    for id in ["heat1d", "count_ai", "tpz"] {
        assert!(text.lines().any(|l| l == id), "{text}");
    }
}
