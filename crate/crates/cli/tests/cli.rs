use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn svmenum(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_svmenum")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, contents: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path.to_str().unwrap().to_string()
}

fn lines(path: &Path) -> Vec<Value> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn enumerate_two_point_csv() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "tiny.csv", "x1,x2,y\n-1,0,neg\n1,0,pos\n");
    let out = dir.path().join("models.jsonl");
    let run = svmenum(&[
        "enumerate", "--data", &data, "--label", "y", "--positive", "pos", "--top-k", "2", "--out", out.to_str().unwrap(),
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let models = lines(&out);
    assert_eq!(models.len(), 2);
    assert_eq!(models[0]["rank"], 1);
    assert_eq!(models[1]["rank"], 2);
    assert!(models[0]["objective"].as_f64().unwrap() > models[1]["objective"].as_f64().unwrap());
    let table = String::from_utf8(run.stdout).unwrap();
    assert!(table.lines().next().unwrap().contains("objective"));
    assert_eq!(table.lines().count(), 3);
}

#[test]
fn top_one_is_the_ordinary_svm() {
    let dir = tempfile::tempdir().unwrap();
    let ds = svmenum::data::synthetic::gaussian_blobs(12, 2, 2.0, 3);
    let data = write(dir.path(), "blobs.json", &ds.to_json());
    let run = svmenum(&["enumerate", "--data", &data, "--format", "json", "--top-k", "1"]);
    assert!(run.status.success());
    let stdout = String::from_utf8(run.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 1);
    let model: Value = serde_json::from_str(stdout.trim()).unwrap();

    let problem = svmenum::SvmProblem::new(ds, 1.0, svmenum::KernelSpec::Linear).unwrap();
    let root = svmenum::solver::solve_constrained(&problem, &svmenum::IndexSet::full(12), &Default::default()).unwrap();
    assert_eq!(model["model"], serde_json::to_value(&root).unwrap());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(svmenum(&["enumerate", "--label", "y"]).status.code(), Some(2));
    assert_eq!(svmenum(&["verify", "--n", "13"]).status.code(), Some(2));
    assert_eq!(svmenum(&["enumerate", "--data", "/nonexistent.csv", "--label", "y", "--positive", "1"]).status.code(), Some(3));

    let bad = write(dir.path(), "bad.csv", "x,y\n1,a\n2,b\n3,c\n");
    assert_eq!(svmenum(&["enumerate", "--data", &bad, "--label", "y", "--positive", "a"]).status.code(), Some(3));

    let ok = write(dir.path(), "ok.csv", "x,y\n1,a\n2,b\n");
    let kernel = svmenum(&["enumerate", "--data", &ok, "--label", "y", "--positive", "a", "--kernel", r#"{"kind":"rbf"}"#]);
    assert_eq!(kernel.status.code(), Some(2));
    let c = svmenum(&["enumerate", "--data", &ok, "--label", "y", "--positive", "a", "--c", "0"]);
    assert_eq!(c.status.code(), Some(2));
}

#[test]
fn verify_passes_and_catches_inverted_order() {
    let ok = svmenum(&["verify", "--n", "4", "--trials", "20"]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stdout));
    let faulty = svmenum(&["verify", "--n", "5", "--trials", "6", "--invert-order"]);
    assert_eq!(faulty.status.code(), Some(1));
    assert!(String::from_utf8(faulty.stdout).unwrap().contains("MISMATCH"));
}

#[test]
fn cv_singleton_grid_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let ds = svmenum::data::synthetic::gaussian_blobs(30, 2, 4.0, 1);
    let data = write(dir.path(), "blobs.json", &ds.to_json());
    let single = svmenum(&["cv", "--data", &data, "--format", "json", "--grid", "1"]);
    assert!(String::from_utf8(single.stdout).unwrap().trim_end().ends_with("selected C = 1"));
    let a = svmenum(&["cv", "--data", &data, "--format", "json", "--seed", "4"]);
    let b = svmenum(&["cv", "--data", &data, "--format", "json", "--seed", "4"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn injection_pipeline_flags() {
    let dir = tempfile::tempdir().unwrap();
    let ds = svmenum::data::synthetic::two_group(150, 11);
    let data = write(dir.path(), "groups.json", &ds.to_json());
    let out = dir.path().join("models.jsonl");
    let run = svmenum(&[
        "enumerate", "--data", &data, "--format", "json", "--train-fraction", "0.6667", "--sensitive", "z",
        "--exclude-sensitive", "--inject-flips", "10", "--top-k", "5", "--seed", "3", "--out", out.to_str().unwrap(),
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let models = lines(&out);
    assert_eq!(models.len(), 5);
    for m in &models {
        let dp = m["metrics"]["dp"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&dp));
        let misclass = m["metrics"]["misclass"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&misclass));
        // 100 training rows
        assert!(m["model"]["I"].as_array().unwrap().len() <= 100);
    }
    assert_eq!(models[0]["model"]["I"].as_array().unwrap().len(), 100);
}
