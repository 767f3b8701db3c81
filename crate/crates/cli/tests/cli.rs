use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_latticespread"));
    c.env_remove("LATTICESPREAD_THREADS").env_remove("RUST_LOG");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn error_line(o: &Output) -> String {
    stderr(o)
        .lines()
        .find(|l| l.starts_with("error: "))
        .unwrap_or_default()
        .to_string()
}

fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().unwrap() != "timing.json" {
                out.push((p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn list_prints_registry() {
    let o = run(&["list"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let names: Vec<&str> = text.lines().map(|l| l.split('\t').next().unwrap()).collect();
    assert_eq!(names.first(), Some(&"fig2a"));
    assert!(names.contains(&"sm_fig_s6_z"));
}

#[test]
fn usage_errors_exit_one_with_single_line() {
    for args in [
        vec!["bogus"],
        vec!["run"],
        vec!["simulate", "--model", "waveguide", "--times", "1,2,3"],
        vec!["--threads", "0", "list"],
        vec!["run", "--scenario", "nope"],
    ] {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", stderr(&o));
        let line = error_line(&o);
        assert!(line.starts_with("error: code=1 kind="), "{line}");
        assert!(o.stdout.is_empty());
    }
}

#[test]
fn config_flag_conflict_names_both_sources() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("wg.json");
    let o = run(&["run", "--scenario", "fig3a_wg", "--dry-run"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    fs::write(&cfg, serde_json::to_string(&v["config"]).unwrap()).unwrap();

    let o = run(&["run", "--config", cfg.to_str().unwrap(), "--alpha", "3", "--dry-run"]);
    assert_eq!(o.status.code(), Some(1));
    let line = error_line(&o);
    assert!(line.contains("--alpha") && line.contains("wg.json"), "{line}");

    // Flags override config values.
    let o = run(&["run", "--config", cfg.to_str().unwrap(), "--k-a", "0.4pi", "--dry-run"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let k = v["config"]["model"]["k_a"].as_f64().unwrap();
    assert!((k - 0.4 * std::f64::consts::PI).abs() < 1e-15);
}

#[test]
fn dry_run_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = run(&["run", "--scenario", "fig2a", "--out", out.to_str().unwrap(), "--dry-run"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["config"]["name"], "fig2a");
    assert!(!out.exists());
    for sub in [
        vec!["simulate", "--model", "power-law", "--alpha", "3", "--times", "1,2"],
        vec!["dispersion", "--model", "power-law", "--alpha", "3", "--out", "x.csv"],
        vec!["hessian", "--model", "power-law", "--alpha", "2", "--out", "h"],
        vec!["spa", "--model", "power-law", "--alpha", "3", "--times", "5", "--out", "s"],
        vec!["verify", "--suite", "all"],
        vec!["list"],
    ] {
        let mut args = sub.clone();
        args.push("--dry-run");
        let o = bin().current_dir(dir.path()).args(&args).output().unwrap();
        assert!(o.status.success(), "{sub:?}: {}", stderr(&o));
        serde_json::from_slice::<serde_json::Value>(&o.stdout).unwrap();
    }
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn simulate_is_byte_identical_with_one_thread_and_classifies() {
    let dir = tempfile::tempdir().unwrap();
    let mut trees = Vec::new();
    for i in 0..2 {
        let out = dir.path().join(format!("r{i}"));
        let o = run(&[
            "--threads", "1", "simulate", "--model", "power-law", "--alpha", "3", "--sites", "101",
            "--times", "2,4,6", "--out", out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(o.stdout.is_empty());
        trees.push(tree(&out.join("simulation")));
    }
    assert_eq!(trees[0], trees[1]);
    assert!(trees[0].iter().any(|(p, _)| p.ends_with("snapshot_002.csv")));

    let bundle = dir.path().join("r0/simulation");
    let o = run(&["classify", "--bundle", bundle.to_str().unwrap(), "--section", "chain"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(bundle.join("classification.json")).unwrap()).unwrap();
    assert_eq!(report["label"], "split");
    assert_eq!(report["inputs"].as_array().unwrap().len(), 3);
}

#[test]
fn thread_count_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d.csv");
    let o = bin()
        .env("LATTICESPREAD_THREADS", "2")
        .args(["dispersion", "--model", "powerlaw", "--alpha", "3", "--grid", "4096", "--derivs", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,re_omega,im_omega,d1,d2,subradiant"));
    assert_eq!(lines.count(), 4096);
    assert!(stderr(&o).contains("inflection point"));
}

#[test]
fn verify_nogo_passes() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("nogo.json");
    let o = run(&["verify", "--suite", "nogo", "--out", report.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["pass"], true);
    assert_eq!(v["nogo"].as_array().unwrap().len(), 10);
}

#[test]
fn runtime_failure_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "dispersion", "--model", "power-law", "--alpha", "2.5", "--out",
        dir.path().join("x.csv").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(error_line(&o).starts_with("error: code=2 kind="));
}

#[test]
fn hessian_and_spa_write_files() {
    let dir = tempfile::tempdir().unwrap();
    let h = dir.path().join("h");
    let o = run(&[
        "hessian", "--model", "power-law", "--alpha", "2", "--grid", "64", "--radius", "60", "--out",
        h.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["hessian.csv", "contours.json", "summary.json"] {
        assert!(h.join(f).exists(), "{f}");
    }
    let s = dir.path().join("s");
    let o = run(&[
        "spa", "--model", "power-law", "--alpha", "3", "--sites", "101", "--times", "5,10", "--grid", "1024",
        "--out", s.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(s.join("spa_001.csv").exists() && s.join("stationary.json").exists());
}
