use std::path::{Path, PathBuf};
use std::process::Command;

use hyperpair::io::{random_conjugator, to_json};
use hyperpair::space::random_isometry;
use hyperpair::spectral::{diagonal_element, SpectralParams};
use hyperpair::twistbend::{genus_two_pants, GluingGraph, TwistBendParams};
use hyperpair::{Field, HMatrix, HermitianSpace, Pair};
use serde_json::{json, Value};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hyperpair"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("hyperpair-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn run(args: &[&str]) -> (i32, Value) {
    let out = bin().args(args).output().unwrap();
    let code = out.status.code().unwrap();
    let v = if code == 0 { serde_json::from_slice(&out.stdout).unwrap() } else { Value::Null };
    (code, v)
}

fn schema_check(schema: &str, v: &Value) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas").join(schema);
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator.iter_errors(v).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{errors:?}");
}

fn generate(n: usize, field: &str, seed: u64) -> (PathBuf, Value) {
    let path = scratch(&format!("pair-{n}-{field}-{seed}.json"));
    let code = bin()
        .args(["generate", "--n", &n.to_string(), "--field", field, "--seed", &seed.to_string(), "--out"])
        .arg(&path)
        .status()
        .unwrap()
        .code();
    assert_eq!(code, Some(0));
    let v = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    (path, v)
}

#[test]
fn generate_is_deterministic_and_valid() {
    let (path, v) = generate(3, "quaternion", 7);
    schema_check("pair.schema.json", &v);
    let again = bin().args(["generate", "--n", "3", "--field", "quaternion", "--seed", "7"]).output().unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), again.stdout);
}

#[test]
fn invariants_validate_against_schema() {
    for (n, field) in [(3, "quaternion"), (3, "complex"), (2, "quaternion")] {
        let (path, _) = generate(n, field, 3);
        let (code, v) = run(&["invariants", "--in", path.to_str().unwrap()]);
        assert_eq!(code, 0);
        schema_check("invariant-tuple.schema.json", &v);
    }
}

#[test]
fn conjugacy_round_trip_through_files() {
    let (path, v) = generate(3, "quaternion", 5);
    let pair: Pair = serde_json::from_value(v).unwrap();
    let c = random_conjugator(&pair.space, 77).unwrap();
    let moved = scratch("moved.json");
    std::fs::write(&moved, to_json(&pair.conjugate_by(&c)).unwrap()).unwrap();
    let (code, out) = run(&["conjugacy-test", "--in", path.to_str().unwrap(), "--in", moved.to_str().unwrap()]);
    assert_eq!(code, 0);
    schema_check("conjugacy-outcome.schema.json", &out);
    assert_eq!(out["conjugate"], json!(true));
    assert!(out["residual"].as_f64().unwrap() <= 1e-7);

    let (other, _) = generate(3, "quaternion", 6);
    let (code, out) = run(&["conjugacy-test", "--in", path.to_str().unwrap(), "--in", other.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(out["conjugate"], json!(false));
}

#[test]
fn classify_reports_loxodromic() {
    let (_, v) = generate(3, "quaternion", 9);
    let file = scratch("element.json");
    std::fs::write(&file, json!({ "space": v["space"], "matrix": v["a"] }).to_string()).unwrap();
    let (code, out) = run(&["classify", "--in", file.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(out["classification"]["kind"], json!("regular_loxodromic"));
    assert!(out["frame"].is_object());
}

fn tame(space: &HermitianSpace, seed: u64, r: f64) -> HMatrix {
    let q = (0..).map(|k| random_isometry(space, seed * 1000 + k).unwrap()).find(|q| q.max_abs() < 2.0).unwrap();
    let e = diagonal_element(&SpectralParams { r, theta: 0.6, phi: vec![0.9, 2.0] });
    q.mul(&e).mul(&q.isometry_inverse())
}

#[test]
fn twist_bend_and_assemble_commands() {
    let space = HermitianSpace::new(3, Field::Quaternion).unwrap();
    let pants = genus_two_pants(space, &tame(&space, 1, 0.35), &tame(&space, 2, 0.45)).unwrap();
    let kappa = TwistBendParams { t: 1.3, psi: 0.2, xi: [0.4, -1.0], k: None };

    let job = scratch("twist.json");
    let body = json!({ "space": space, "a": pants[0].a, "b": pants[0].b, "kappa": kappa });
    schema_check("twist-bend-job.schema.json", &body);
    std::fs::write(&job, body.to_string()).unwrap();
    let (code, out) = run(&["twist-bend", "--in", job.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(out["tilde_invariants"]["angular"].as_array().unwrap().len(), 2);

    let graph = GluingGraph::standard_chain(2, vec![kappa.clone(); 3]).unwrap();
    let pairs: Vec<Pair> = pants.iter().map(|p| Pair::new(space, p.a.clone(), p.b.clone()).unwrap()).collect();
    let body = json!({ "pants": pairs, "graph": graph });
    schema_check("assemble-job.schema.json", &body);
    let job = scratch("assemble.json");
    std::fs::write(&job, body.to_string()).unwrap();
    let (code, out) = run(&["assemble", "--in", job.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(out["parameters"]["total"], json!(72));
    assert!(out["surface_relation_residual"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["invariants", "--in", "/nonexistent/pair.json"]).0, 1);
    let bad = scratch("bad.json");
    std::fs::write(&bad, "{\n  \"space\": oops\n}").unwrap();
    let out = bin().args(["invariants", "--in", bad.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    // A paired with itself has a common fixed point
    let (_, v) = generate(3, "quaternion", 4);
    let same = scratch("same.json");
    std::fs::write(&same, json!({ "space": v["space"], "a": v["a"], "b": v["a"] }).to_string()).unwrap();
    assert_eq!(run(&["invariants", "--in", same.to_str().unwrap()]).0, 2);
}
