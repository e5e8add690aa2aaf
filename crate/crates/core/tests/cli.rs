use std::path::Path;
use std::process::{Command, Output};

fn bilab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bilab")).args(args).output().expect("binary runs")
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

fn column(csv: &str, col: usize) -> Vec<f64> {
    csv.lines().skip(1).map(|l| l.split(',').nth(col).unwrap().parse().unwrap()).collect()
}

#[test]
fn constant_state_stays_constant() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("sim");
    let o = bilab(&["simulate", "--set", "u0=1", "--set", "t=0.2", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let traj = read(&out, "trajectory.csv");
    assert!(traj.starts_with("t,mean,l2,hs,min,max\n"));
    for col in 1..6 {
        assert!(column(&traj, col).iter().all(|v| (v - 1.0).abs() < 1e-12));
    }
    assert!(out.join("manifest.json").exists() && out.join("resolved.cfg").exists());
}

#[test]
fn runs_are_byte_identical_and_replayable() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    let args = ["synthesize", "--model", "ks", "--set", "phase=0.1 sin(x)"];
    for dir in [&a, &b] {
        let mut full = args.to_vec();
        full.extend(["--out", dir.to_str().unwrap()]);
        assert_eq!(bilab(&full).status.code(), Some(0));
    }
    let replay = bilab(&["synthesize", "--config", a.join("manifest.json").to_str().unwrap(), "--out", c.to_str().unwrap()]);
    assert_eq!(replay.status.code(), Some(0));
    for name in ["schedule.csv", "plan.json", "terminal_spectrum.csv", "manifest.json"] {
        assert_eq!(read(&a, name), read(&b, name), "{name}");
        assert_eq!(read(&a, name), read(&c, name), "{name}");
    }
}

#[test]
fn config_file_sections_are_read() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.cfg");
    std::fs::write(&cfg, "[run]\nu0 = 1 + 0.1 cos(x)\nt = 0.1\nk = 8\n[flow]\nrtol = 1e-8\n").unwrap();
    let out = tmp.path().join("o");
    let o = bilab(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let resolved = read(&out, "resolved.cfg");
    assert!(resolved.contains("rtol = 1e-8") && resolved.contains("k = 8"));
    assert_eq!(read(&out, "final_spectrum.csv").lines().count(), 10);
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("x");
    let o = out.to_str().unwrap();
    assert_eq!(bilab(&["simulate", "--set", "bogus=1", "--out", o]).status.code(), Some(2));
    assert_eq!(bilab(&["simulate", "--set", "u0=sin(", "--out", o]).status.code(), Some(2));
    assert_eq!(bilab(&["simulate", "--set", "k=8", "--set", "grid=10", "--out", o]).status.code(), Some(2));
    assert_eq!(bilab(&["global-pipeline", "--set", "u0=cos(x)", "--out", o]).status.code(), Some(3));
    // the conjugated-limit error does not halve per halving of δ
    let r = bilab(&["conjugate-limit", "--set", "require_halving=true", "--out", o]);
    assert_eq!(r.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&r.stdout).contains("halved: FAIL"));
}

#[test]
fn moment_sweep_keeps_input_order() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("m");
    let o = bilab(&["moment-control", "--set", "ts=2,0.5,1", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let table = read(&out, "moment_control.csv");
    assert_eq!(column(&table, 0), vec![2.0, 0.5, 1.0]);
    let series = column(&table, 1);
    let oracle = column(&table, 5);
    assert!(series.iter().zip(&oracle).all(|(s, o)| o <= s));
    for i in 0..3 {
        assert!(out.join(format!("signal_{i}.csv")).exists());
    }
    let law: serde_json::Value = serde_json::from_str(&read(&out, "cost_law.json")).unwrap();
    assert_eq!(law["cost_law"]["strictly_increasing"], true);
}

#[test]
fn saturation_check_certifies_ladder() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("s");
    let o = bilab(&["saturation-check", "--set", "n_max=3", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let table = read(&out, "derivation.csv");
    assert_eq!(table.lines().count(), 4);
    assert!(table.lines().skip(1).all(|l| !l.contains("false")));
    assert!(read(&out, "witnesses.sexpr").contains("; sin 3x"));
}

#[test]
fn local_exact_writes_iterations_and_pieces() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("l");
    let o = bilab(&["local-exact", "--set", "k=16", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let it = read(&out, "iterations.csv");
    assert!(it.starts_with("sweep,update_norm,ratio,"));
    assert!(column(&it, 2).iter().skip(1).all(|q| *q < 0.5));
    let sched: serde_json::Value = serde_json::from_str(&read(&out, "schedule.json")).unwrap();
    assert!(!sched["pieces"].as_array().unwrap().is_empty());
}
