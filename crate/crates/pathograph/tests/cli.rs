use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pathograph::ingest::{load_cohort, write_cohort};
use serde_json::{json, Value};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_pathograph"));
    c.env_remove("PATHOGRAPH_JOBS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn write(path: &Path, v: &Value) {
    fs::write(path, serde_json::to_string(v).unwrap()).unwrap();
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Small cohort plus a fast run config.
fn fixture(dir: &Path) -> (PathBuf, PathBuf) {
    let spec = dir.join("spec.json");
    write(&spec, &json!({"subjects_per_class": 12, "subgraph_sizes": [8, 8, 8, 8], "planted": [1], "seed": 3}));
    let cohort = dir.join("cohort");
    ok(&["synth", "--spec", s(&spec), "--out", s(&cohort)]);
    let config = dir.join("config.json");
    write(&config, &json!({"folds": 3, "svm_folds": 3, "gcn": {"epochs": 8, "hidden": 8}}));
    (cohort.join("manifest.json"), config)
}

fn tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn strip_timing(v: &mut Value) {
    match v {
        Value::Object(m) => {
            m.remove("epoch_seconds");
            m.values_mut().for_each(strip_timing);
        }
        Value::Array(a) => a.iter_mut().for_each(strip_timing),
        _ => {}
    }
}

fn diagnostic(out: &Output) -> Value {
    let err = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(err.lines().last().unwrap()).unwrap()
}

#[test]
fn synth_writes_cohort_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, _) = fixture(dir.path());
    let cohort = manifest.parent().unwrap();
    for f in ["manifest.json", "atlas.json", "ground_truth.json", "subjects/sub-0-000.csv", "subjects/sub-1-011.csv"] {
        assert!(cohort.join(f).is_file(), "missing {f}");
    }
    let truth = read_json(&cohort.join("ground_truth.json"));
    assert_eq!(truth["planted"], json!([1]));
    let again = dir.path().join("again");
    ok(&["synth", "--spec", s(&dir.path().join("spec.json")), "--out", s(&again)]);
    assert_eq!(tree(cohort), tree(&again));
}

#[test]
fn missing_or_invalid_spec_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["synth", "--spec", s(&dir.path().join("nope.json")), "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(diagnostic(&out)["exit_code"], 2);
    let spec = dir.path().join("bad.json");
    write(&spec, &json!({"subjects_per_class": 5, "unknown": 1}));
    assert_eq!(run(&["synth", "--spec", s(&spec), "--out", s(dir.path())]).status.code(), Some(2));
}

#[test]
fn run_outputs_are_complete_and_reproducible_across_job_counts() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, config) = fixture(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&["run", "--manifest", s(&manifest), "--config", s(&config), "--jobs", "1", "--out", s(&a)]);
    ok(&["run", "--manifest", s(&manifest), "--config", s(&config), "--jobs", "3", "--out", s(&b)]);

    let metrics = read_json(&a.join("metrics.json"));
    let acc = metrics["acc_mean"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&acc));
    assert_eq!(metrics["folds"].as_array().unwrap().len(), 3);
    assert_eq!(metrics["variant"], "filter+distill");
    assert_eq!(metrics["scope"], "train_only");
    assert_eq!(read_json(&a.join("pathoscores.json"))["folds"].as_array().unwrap().len(), 3);
    assert_eq!(read_json(&a.join("distill_report.json"))["mode"], "inductive");

    let (ta, tb) = (tree(&a), tree(&b));
    assert_eq!(ta.keys().collect::<Vec<_>>(), tb.keys().collect::<Vec<_>>());
    for (name, bytes) in &ta {
        if name == "metrics.json" {
            let (mut x, mut y) = (read_json(&a.join(name)), read_json(&b.join(name)));
            strip_timing(&mut x);
            strip_timing(&mut y);
            assert_eq!(x, y);
        } else {
            assert_eq!(bytes, &tb[name], "{name} differs");
        }
    }

    let report = ok(&["report", s(&a)]);
    assert!(String::from_utf8_lossy(&report.stdout).contains("ACC"));
}

#[test]
fn disabled_stages_reproduce_the_plain_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, _) = fixture(dir.path());
    let plain = dir.path().join("plain.json");
    write(&plain, &json!({"filter": false, "distill": false, "folds": 3, "gcn": {"epochs": 8, "hidden": 8}}));
    let out = dir.path().join("out");
    ok(&["run", "--manifest", s(&manifest), "--config", s(&plain), "--out", s(&out)]);
    let m = read_json(&out.join("metrics.json"));
    assert_eq!(m["variant"], "plain");
    for f in m["folds"].as_array().unwrap() {
        assert_eq!(f["nodes"], 32);
        assert_eq!(f["feature_width"], 32);
    }
    assert_eq!(read_json(&out.join("pathoscores.json"))["enabled"], false);
}

#[test]
fn scope_and_mode_flags_are_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, config) = fixture(dir.path());
    let out = dir.path().join("out");
    ok(&[
        "run", "--manifest", s(&manifest), "--config", s(&config), "--scope", "full_cohort", "--mode", "transductive",
        "--out", s(&out),
    ]);
    let m = read_json(&out.join("metrics.json"));
    assert_eq!((m["scope"].as_str(), m["mode"].as_str()), (Some("full_cohort"), Some("transductive")));
    assert_eq!(read_json(&out.join("pathoscores.json"))["scope"], "full_cohort");
    assert_eq!(read_json(&out.join("distill_report.json"))["mode"], "transductive");
}

#[test]
fn sweeps_write_one_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, config) = fixture(dir.path());
    let out = dir.path().join("k");
    ok(&["sweep", "--manifest", s(&manifest), "--config", s(&config), "--param", "k", "--values", "1,2,3", "--out", s(&out)]);
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "parameter_value,acc_mean,acc_std,auc_mean,auc_std,f1_mean,f1_std,params,epoch_seconds,peak_bytes");
    assert_eq!(lines.len(), 4);

    let out = dir.path().join("rho");
    ok(&[
        "sweep", "--manifest", s(&manifest), "--config", s(&config), "--param", "rho", "--values", "0.1:0.6:0.1", "--out",
        s(&out),
    ]);
    let rows = read_json(&out.join("sweep.json"))["rows"].as_array().unwrap().len();
    assert_eq!(rows, 6);

    let bad = run(&["sweep", "--manifest", s(&manifest), "--param", "alpha", "--values", "1", "--out", s(&out)]);
    assert_eq!(bad.status.code(), Some(2));
    let atlas_communities =
        run(&["sweep", "--manifest", s(&manifest), "--param", "communities", "--values", "3", "--out", s(&out)]);
    assert_eq!(atlas_communities.status.code(), Some(2));
}

#[test]
fn load_write_load_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, _) = fixture(dir.path());
    let first = load_cohort(&manifest).unwrap();
    let copy = dir.path().join("copy");
    write_cohort(&copy, &first.cohort, first.partition.as_ref()).unwrap();
    let second = load_cohort(&copy.join("manifest.json")).unwrap();
    assert_eq!(first.partition, second.partition);
    assert_eq!(first.cohort.len(), second.cohort.len());
    for (a, b) in first.cohort.graphs.iter().zip(&second.cohort.graphs) {
        assert_eq!((&a.subject_id, a.label, a.group), (&b.subject_id, b.label, b.group));
        assert_eq!(a.adjacency(), b.adjacency());
    }
}

fn timeseries_csv(n: usize, t: usize, phase: f64) -> String {
    let mut out = (0..n).map(|i| format!("roi{i}")).collect::<Vec<_>>().join(",") + "\n";
    for k in 0..t {
        let row: Vec<String> = (0..n).map(|i| format!("{}", ((k * (i + 1)) as f64 * 0.37 + phase).sin())).collect();
        out += &(row.join(",") + "\n");
    }
    out
}

#[test]
fn mixed_manifest_loads_and_node_mismatch_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("a.csv"), timeseries_csv(3, 20, 0.0)).unwrap();
    fs::write(d.join("b.csv"), "1,0.5,0.2\n0.5,1,0.1\n0.2,0.1,1\n").unwrap();
    fs::write(d.join("c.csv"), "1,0.5\n0.5,1\n").unwrap();
    let entry = |id: &str, path: &str, kind: &str| json!({"id": id, "label": 0, "group": 0, "path": path, "kind": kind});
    write(
        &d.join("mixed.json"),
        &json!({"class_names": ["a"], "subjects": [entry("a", "a.csv", "timeseries"), entry("b", "b.csv", "adjacency")]}),
    );
    let loaded = load_cohort(&d.join("mixed.json")).unwrap();
    assert_eq!((loaded.cohort.len(), loaded.cohort.node_count()), (2, 3));

    write(
        &d.join("mismatch.json"),
        &json!({"class_names": ["a"], "subjects": [entry("b", "b.csv", "adjacency"), entry("c", "c.csv", "adjacency")]}),
    );
    let out = run(&["run", "--manifest", s(&d.join("mismatch.json")), "--out", s(&d.join("out"))]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(diagnostic(&out)["error"], "data");
}
