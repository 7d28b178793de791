use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn pptcanon(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pptcanon"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON document")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn generate(dir: &TempDir, name: &str, flags: &[&str]) -> PathBuf {
    let path = dir.path().join(name);
    let mut args = vec!["generate"];
    args.extend_from_slice(flags);
    args.extend_from_slice(&["--out", s(&path)]);
    let out = pptcanon(&args);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    path
}

#[test]
fn check_ppt_accepts_example_ii() {
    let dir = TempDir::new().unwrap();
    let path = generate(&dir, "ii.json", &["--kind", "example-ii", "--a", "0.3"]);
    let out = pptcanon(&["check-ppt", s(&path)]);
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_json(&out);
    assert_eq!(report["overall_ppt"], true);
    assert_eq!(report["entries"].as_array().unwrap().len(), 8);
}

#[test]
fn check_ppt_rejects_ghz_on_a() {
    let dir = TempDir::new().unwrap();
    let path = generate(
        &dir,
        "ghz.json",
        &["--kind", "npt", "--dims", "2", "2", "2", "--pure", "ghz"],
    );
    let out = pptcanon(&["check-ppt", s(&path)]);
    assert_eq!(out.status.code(), Some(1));
    let report = stdout_json(&out);
    let a = report["entries"]
        .as_array()
        .unwrap()
        .iter()
        .find(|e| e["mask"] == "A")
        .unwrap();
    assert_eq!(a["pass"], false);
    assert!((a["min_eigenvalue"].as_f64().unwrap() + 0.5).abs() <= 1e-10);
}

#[test]
fn malformed_input_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let path = generate(&dir, "ii.json", &["--kind", "example-ii", "--a", "0.3"]);
    let text = std::fs::read_to_string(&path).unwrap();
    let truncated = dir.path().join("truncated.json");
    std::fs::write(&truncated, &text[..text.len() / 2]).unwrap();
    for cmd in ["check-ppt", "decompose"] {
        let out = pptcanon(&[cmd, s(&truncated)]);
        assert_eq!(out.status.code(), Some(2));
        assert!(out.stdout.is_empty());
        assert!(!out.stderr.is_empty());
    }
    let missing = pptcanon(&["check-ppt", s(&dir.path().join("absent.json"))]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn decompose_example_i_gives_n_terms() {
    let dir = TempDir::new().unwrap();
    let path = generate(
        &dir,
        "i.json",
        &["--kind", "example-i", "--dims", "2", "2", "4"],
    );
    let ens = dir.path().join("ens.json");
    let out = pptcanon(&["decompose", s(&path), "--out", s(&ens)]);
    assert_eq!(out.status.code(), Some(0));
    let summary = stdout_json(&out);
    assert_eq!(summary["terms"], 4);
    assert!(summary["residual"].as_f64().unwrap() <= 1e-10);
    let file: Value = serde_json::from_str(&std::fs::read_to_string(&ens).unwrap()).unwrap();
    assert_eq!(file["terms"].as_array().unwrap().len(), 4);
}

#[test]
fn decompose_refuses_example_iii_without_writing() {
    let dir = TempDir::new().unwrap();
    let path = generate(&dir, "iii.json", &["--kind", "example-iii"]);
    let ens = dir.path().join("ens.json");
    let out = pptcanon(&["decompose", s(&path), "--out", s(&ens)]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stdout_json(&out)["error"], "RankMismatch");
    assert!(!ens.exists());
}

#[test]
fn decompose_refuses_npt_state() {
    let dir = TempDir::new().unwrap();
    let path = generate(
        &dir,
        "ghz.json",
        &["--kind", "npt", "--dims", "2", "2", "2", "--pure", "ghz"],
    );
    let out = pptcanon(&["decompose", s(&path)]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stdout_json(&out)["status"], "precondition_failure");
}

#[test]
fn witness_modes_agree_on_example_ii() {
    let dir = TempDir::new().unwrap();
    let path = generate(&dir, "ii.json", &["--kind", "example-ii", "--a", "0.3"]);
    let corner = stdout_json(&pptcanon(&["decompose", s(&path), "--witness", "corner"]));
    let explicit = stdout_json(&pptcanon(&[
        "decompose",
        s(&path),
        "--witness",
        "explicit",
        "--ea",
        "[[1,0],[0,0]]",
        "--fb",
        "[[1,0],[0,0]]",
    ]));
    assert_eq!(corner["terms"], 2);
    assert_eq!(corner["weights"], explicit["weights"]);
    // the state lives in block (0, 0), so |1,1⟩ sees nothing
    let empty = pptcanon(&[
        "decompose",
        s(&path),
        "--witness",
        "explicit",
        "--ea",
        "[[0,0],[1,0]]",
        "--fb",
        "[[0,0],[1,0]]",
    ]);
    assert_eq!(empty.status.code(), Some(3));
    assert_eq!(stdout_json(&empty)["error"], "NoWitness");
    let missing = pptcanon(&[
        "decompose",
        s(&path),
        "--witness",
        "explicit",
        "--ea",
        "[[1,0],[0,0]]",
    ]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn generate_rejects_bad_flags() {
    let dir = TempDir::new().unwrap();
    let out_path = dir.path().join("x.json");
    let cases: [&[&str]; 5] = [
        &["--kind", "example-ii", "--a", "0.7"],
        &["--kind", "example-ii"],
        &["--kind", "example-i", "--a", "0.1", "--dims", "2", "2", "2"],
        &["--kind", "canonical", "--dims", "1", "2", "2"],
        &["--kind", "npt", "--dims", "2", "2", "2", "--noise", "1.5"],
    ];
    for flags in cases {
        let mut args = vec!["generate"];
        args.extend_from_slice(flags);
        args.extend_from_slice(&["--out", s(&out_path)]);
        let out = pptcanon(&args);
        assert_eq!(out.status.code(), Some(2), "{flags:?}");
        assert!(!out_path.exists());
    }
    assert_eq!(
        pptcanon(&["generate", "--kind", "bogus", "--out", s(&out_path)])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn canonical_generation_writes_truth_and_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let flags = [
        "--kind",
        "canonical",
        "--dims",
        "3",
        "3",
        "4",
        "--seed",
        "7",
    ];
    let a = generate(&dir, "a.json", &flags);
    let b = generate(&dir, "b.json", &flags);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let truth_a = std::fs::read(dir.path().join("a.truth.json")).unwrap();
    assert_eq!(
        truth_a,
        std::fs::read(dir.path().join("b.truth.json")).unwrap()
    );
    let truth: Value = serde_json::from_slice(&truth_a).unwrap();
    assert_eq!(truth["A_list"].as_array().unwrap().len(), 2);
    assert_eq!(truth["B_list"].as_array().unwrap().len(), 2);
    let other = generate(
        &dir,
        "c.json",
        &[
            "--kind",
            "canonical",
            "--dims",
            "3",
            "3",
            "4",
            "--seed",
            "8",
        ],
    );
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&other).unwrap());
}

#[test]
fn verify_passes_decompose_output() {
    let dir = TempDir::new().unwrap();
    let path = generate(
        &dir,
        "c.json",
        &[
            "--kind",
            "canonical",
            "--dims",
            "2",
            "3",
            "2",
            "--seed",
            "3",
        ],
    );
    let ens = dir.path().join("ens.json");
    assert_eq!(
        pptcanon(&["decompose", s(&path), "--out", s(&ens)])
            .status
            .code(),
        Some(0)
    );
    let out = pptcanon(&["verify", s(&path), s(&ens)]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["pass"], true);
    assert!(v["residual"].as_f64().unwrap() <= 1e-8);
}

fn term(p: f64, a: [[f64; 2]; 2], b: [[f64; 2]; 2], c: [[f64; 2]; 2]) -> Value {
    json!({ "p": p, "vecA": a, "vecB": b, "vecC": c })
}

#[test]
fn verify_rejects_equal_weight_ensemble_for_example_ii() {
    let dir = TempDir::new().unwrap();
    let a: f64 = 0.3;
    let path = generate(&dir, "ii.json", &["--kind", "example-ii", "--a", "0.3"]);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let zero = [[1.0, 0.0], [0.0, 0.0]];
    let ens = json!({
        "schema_version": "1",
        "dims": [2, 2, 2],
        "terms": [
            term(0.5, zero, zero, [[h, 0.0], [h, 0.0]]),
            term(0.5, zero, zero, [[h, 0.0], [-h, 0.0]]),
        ],
    });
    let ens_path = dir.path().join("equal.json");
    std::fs::write(&ens_path, ens.to_string()).unwrap();
    let out = pptcanon(&["verify", s(&path), s(&ens_path)]);
    assert_eq!(out.status.code(), Some(1));
    let v = stdout_json(&out);
    assert_eq!(v["pass"], false);
    // the equal mixture misses the two off-diagonal entries a
    let expected = (2.0 * a * a).sqrt() / (0.5 + 2.0 * a * a).sqrt();
    assert!((v["residual"].as_f64().unwrap() - expected).abs() <= 1e-12);
}

#[test]
fn verify_reports_broken_weight_sum() {
    let dir = TempDir::new().unwrap();
    let path = generate(&dir, "ii.json", &["--kind", "example-ii", "--a", "0.3"]);
    let ens_path = dir.path().join("ens.json");
    pptcanon(&["decompose", s(&path), "--out", s(&ens_path)]);
    let mut ens: Value =
        serde_json::from_str(&std::fs::read_to_string(&ens_path).unwrap()).unwrap();
    ens["terms"][0]["p"] = json!(0.5);
    std::fs::write(&ens_path, ens.to_string()).unwrap();
    let out = pptcanon(&["verify", s(&path), s(&ens_path)]);
    assert_eq!(out.status.code(), Some(1));
    let v = stdout_json(&out);
    let violations = v["violations"].as_array().unwrap();
    assert!(
        violations
            .iter()
            .any(|m| m.as_str().unwrap().contains("weight")),
        "{violations:?}"
    );
}

#[test]
fn verify_with_mismatched_dims_is_usage_error() {
    let dir = TempDir::new().unwrap();
    let ii = generate(&dir, "ii.json", &["--kind", "example-ii", "--a", "0.3"]);
    let other = generate(
        &dir,
        "i.json",
        &["--kind", "example-i", "--dims", "2", "2", "3"],
    );
    let ens = dir.path().join("ens.json");
    pptcanon(&["decompose", s(&other), "--out", s(&ens)]);
    assert_eq!(
        pptcanon(&["verify", s(&ii), s(&ens)]).status.code(),
        Some(2)
    );
}

#[test]
fn decompose_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let path = generate(
        &dir,
        "c.json",
        &[
            "--kind",
            "canonical",
            "--dims",
            "3",
            "3",
            "2",
            "--seed",
            "11",
        ],
    );
    let run = || pptcanon(&["decompose", s(&path), "--seed", "5"]).stdout;
    assert_eq!(run(), run());
}
