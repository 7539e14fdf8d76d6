use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn livsic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_livsic")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, doc: &Value) -> String {
    let p = dir.join(name);
    fs::write(&p, serde_json::to_string_pretty(doc).unwrap()).unwrap();
    p.to_string_lossy().into_owned()
}

fn gen(kind: &str, dir: &Path, params: &[&str]) {
    let mut args = vec!["gen", kind, "--seed", "5", "--out", dir.to_str().unwrap()];
    for p in params {
        args.extend(["--param", p]);
    }
    let o = livsic(&args);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn list_experiments_names_every_id() {
    let o = livsic(&["list-experiments"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for id in ["metric-suite", "holonomy", "livsic-transfer", "measurable-rigidity", "closing-lemma", "distortion"] {
        assert!(text.contains(id), "{id} missing from {text}");
    }
}

#[test]
fn unknown_cocycle_is_a_config_error_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    gen("rotation-cocycle", dir.path(), &[]);
    let cfg = write(
        dir.path(),
        "bad.json",
        &json!({"experiment": "holonomy", "space": "space.json", "cocycles": {"F": "F.json"}, "params": {"cocycle": "H"}}),
    );
    let o = livsic(&["run", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("params.cocycle"), "{}", stderr(&o));
}

#[test]
fn malformed_inputs_exit_with_config_status() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    assert_eq!(livsic(&["run", "--config", missing.to_str().unwrap()]).status.code(), Some(2));

    let cfg = write(dir.path(), "unknown.json", &json!({"experiment": "no-such-experiment", "space": {"P": [[1, 1], [1, 1]]}}));
    let o = livsic(&["run", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("experiment"));

    let cfg = write(dir.path(), "neg.json", &json!({"experiment": "metric-suite", "space": {"P": [[1, 1], [1, 1]]}, "tolerances": {"tol": -1.0}}));
    let o = livsic(&["run", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("tolerances.tol"), "{}", stderr(&o));

    let cfg = write(dir.path(), "ok.json", &json!({"experiment": "metric-suite", "space": {"P": [[1, 1], [1, 1]]}, "params": {"triples": 5}}));
    let o = livsic(&["run", "--config", &cfg, "--tol", "speed=1"]);
    assert_eq!(o.status.code(), Some(2));

    assert_eq!(livsic(&["gen", "rotation-cocycle", "--param", "den=0", "--out", dir.path().to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn generated_pair_passes_and_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    gen("conjugated-pair", dir.path(), &["space=golden", "base=01"]);
    for f in ["space.json", "F.json", "G.json", "config.json"] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
    let out = dir.path().join("out");
    let o = livsic(&["run", "--config", dir.path().join("config.json").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("livsic-transfer: pass"));

    let report: Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["verdict"], "pass");
    assert_eq!(report["inputs_digest"].as_str().unwrap().len(), 64);
    let rows = report["rows"].as_array().unwrap();
    assert!(rows.iter().all(|r| r["pass"] == true));
    let csv = fs::read_to_string(out.join("rows.csv")).unwrap();
    assert!(csv.starts_with("name,residual,bound,pass\n"));
    assert_eq!(csv.lines().count(), rows.len() + 1);
    for t in ["transfer_samples.csv", "cohomology.csv", "agreement.csv"] {
        assert!(out.join(t).exists(), "{t} missing");
    }
}

#[test]
fn tightened_tolerance_turns_a_pass_into_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    gen("rotation-cocycle", dir.path(), &[]);
    let cfg = dir.path().join("config.json");
    let cfg = cfg.to_str().unwrap();
    let o = livsic(&["run", "--config", cfg]);
    assert!(o.status.success(), "{}", stdout(&o));
    let o = livsic(&["run", "--config", cfg, "--tol", "tol=1e-300"]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn same_seed_gives_identical_rows_and_tables() {
    let dir = tempfile::tempdir().unwrap();
    gen("corrupted-conjugacy", dir.path(), &[]);
    let cfg = dir.path().join("config.json");
    let run = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        let o = livsic(&["run", "--config", cfg.to_str().unwrap(), "--seed", seed, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stdout(&o));
        let mut report: Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
        report.as_object_mut().unwrap().remove("wall_clock_s");
        (report, fs::read_to_string(out.join("rows.csv")).unwrap(), fs::read_to_string(out.join("repairs.csv")).unwrap())
    };
    let a = run("a", "9");
    let b = run("b", "9");
    assert_eq!(a, b);
    let c = run("c", "10");
    assert_ne!(a.0["inputs_digest"], c.0["inputs_digest"]);
}

#[test]
fn fb_family_writes_the_tent_map() {
    let dir = tempfile::tempdir().unwrap();
    gen("fb-family", dir.path(), &["b=1/4"]);
    let doc: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("fb.json")).unwrap()).unwrap();
    // 3p/2 up to b, then p/2 + b up to 1/2
    assert_eq!(doc, json!({"breakpoints": [[0, 1], [1, 4], [1, 2]], "values": [[0, 1], [3, 8], [1, 2]]}));
}
