use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

use tempered_core::channels::{identity, omega3_channel, pauli_z, Channel};
use tempered_core::io::{channel_to_json, state_to_json};
use tempered_core::states::{max_entangled, omega3, DensityOperator};

fn tempered(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tempered"))
        .args(args)
        .env_remove("TB_SDP_TOL")
        .output()
        .expect("binary runs")
}

fn write(dir: &TempDir, name: &str, v: &Value) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, serde_json::to_string(v).unwrap()).unwrap();
    p
}

fn state_file(dir: &TempDir, name: &str, rho: &DensityOperator) -> PathBuf {
    write(dir, name, &state_to_json(rho))
}

fn channel_file(dir: &TempDir, name: &str, c: &Channel) -> PathBuf {
    write(dir, name, &channel_to_json(c, "kraus"))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn value_of(out: &Output) -> f64 {
    assert!(out.status.success(), "exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    v["value"].as_f64().unwrap_or_else(|| panic!("no value in {v}"))
}

#[test]
fn state_examples() {
    let dir = TempDir::new().unwrap();
    let w = state_file(&dir, "omega3.json", &omega3());
    let v = value_of(&tempered(&["state", "--measure", "tneg", "--input", s(&w)]));
    assert!((v - 2.0).abs() <= 1e-5, "{v}");

    let product = write(
        &dir,
        "product.json",
        &json!({ "format": "cmat-v1", "rows": 4, "cols": 4, "dims": [2, 2],
                 "re": [[1, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0]] }),
    );
    let v = value_of(&tempered(&["state", "--measure", "neg", "--input", s(&product)]));
    assert!((v - 1.0).abs() <= 1e-12);

    let phi = state_file(&dir, "phi3.json", &max_entangled(3).unwrap());
    let v = value_of(&tempered(&["state", "--measure", "rob", "--input", s(&phi)]));
    assert!((v - 2.0).abs() <= 1e-5, "{v}");
}

#[test]
fn channel_examples() {
    let dir = TempDir::new().unwrap();
    let w = channel_file(&dir, "omega3chan.json", &omega3_channel());
    let v = value_of(&tempered(&["channel", "--measure", "q-ub", "--input", s(&w)]));
    assert!(v <= 0.5850, "{v}");

    let id3 = channel_file(&dir, "id3.json", &identity(3).unwrap());
    let v = value_of(&tempered(&["channel", "--measure", "rob", "--input", s(&id3)]));
    assert!((v - 2.0).abs() <= 1e-4, "{v}");

    let id2 = channel_file(&dir, "id2.json", &identity(2).unwrap());
    let z2 = channel_file(&dir, "z2.json", &pauli_z());
    let v = value_of(&tempered(&["channel", "--measure", "diamond", "--input", s(&id2), "--other", s(&z2)]));
    assert!((v - 2.0).abs() <= 1e-4, "{v}");
}

#[test]
fn malformed_input_names_the_field() {
    let dir = TempDir::new().unwrap();
    let cases = [
        (json!({ "format": "cmat-v1", "rows": 4, "cols": 4, "re": [[1, 0], [0, 0]] }), "re"),
        (json!({ "format": "cmat-v1", "rows": 4, "cols": 4 }), "re"),
        (json!({ "format": "cmat-v2", "rows": 1, "cols": 1, "re": [[1]] }), "format"),
    ];
    for (i, (doc, field)) in cases.iter().enumerate() {
        let p = write(&dir, &format!("bad{i}.json"), doc);
        let out = tempered(&["state", "--measure", "neg", "--input", s(&p)]);
        assert_eq!(out.status.code(), Some(1));
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains(field), "{err}");
    }

    let p = write(&dir, "chan.json", &json!({ "format": "chan-v1", "din": 2, "dout": 2, "data": [] }));
    let out = tempered(&["channel", "--measure", "rob", "--input", s(&p)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("kind"));

    let out = tempered(&["state", "--measure", "neg", "--input", s(&dir.path().join("missing.json"))]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn output_is_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let c = channel_file(&dir, "omega3chan.json", &omega3_channel());
    let args = ["--seed", "5", "channel", "--measure", "tneg", "--input", s(&c)];
    let a = tempered(&args);
    let b = tempered(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);

    let out = dir.path().join("out.json");
    let r = tempered(&["-o", s(&out), "state", "--measure", "logneg", "--input", s(&state_file(&dir, "w.json", &omega3()))]);
    assert!(r.status.success());
    let v: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["measure"], "logneg");
}

#[test]
fn repro_writes_plot_data() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("series.csv");
    let out = tempered(&["repro", "--emit-plot-data", s(&csv)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["format"], "report-v1");
    assert_eq!(report["flags"]["irreversibilityWitnessed"], true);
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("n,value\n1,"), "{text}");
}

#[test]
fn sabotaged_corpus_exits_nonzero() {
    let out = tempered(&["corpus", "--sabotage"]);
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["passed"], false);
}

#[test]
fn bad_tolerance_is_an_input_error() {
    let out = tempered(&["--tol=-1", "corpus"]);
    assert_eq!(out.status.code(), Some(1));
}
