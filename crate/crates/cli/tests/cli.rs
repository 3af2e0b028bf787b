use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn respira(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_respira"))
        .args(args)
        .env_remove("RESPIRA_SEED")
        .output()
        .expect("spawn respira")
}

fn ok(args: &[&str]) -> String {
    let out = respira(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn stderr_line(out: &Output) -> String {
    let text = String::from_utf8(out.stderr.clone()).unwrap();
    assert_eq!(text.trim_end().lines().count(), 1, "{text}");
    text
}

fn data_rows(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(String::from)
        .collect()
}

fn simulate(dir: &Path, count: &str) -> String {
    let out = dir.to_str().unwrap().to_string();
    ok(&["--out", &out, "simulate", "--count", count]);
    dir.join("phases.csv").to_str().unwrap().to_string()
}

#[test]
fn simulation_is_byte_identical_for_a_seed() {
    let tmp = TempDir::new().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    simulate(&a, "6");
    simulate(&b, "6");
    for name in ["phases.csv", "manifest.csv"] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
    let c = tmp.path().join("c");
    ok(&["--seed", "7", "--out", c.to_str().unwrap(), "simulate", "--count", "6"]);
    assert_ne!(
        fs::read(a.join("phases.csv")).unwrap(),
        fs::read(c.join("phases.csv")).unwrap()
    );
}

#[test]
fn single_subject_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let out = respira(&["--out", tmp.path().to_str().unwrap(), "simulate", "--count", "1"]);
    assert!(!out.status.success());
    assert!(stderr_line(&out).contains("count must be ≥ 2"));
    assert!(!tmp.path().join("phases.csv").exists());
}

#[test]
fn unknown_kernel_is_a_usage_error() {
    let out = respira(&["train", "--in", "missing.csv", "--kernel", "poly"]);
    assert_eq!(out.status.code(), Some(2));
    let line = stderr_line(&out);
    for k in ["linear", "rbf", "quadratic"] {
        assert!(line.contains(k), "{line}");
    }
}

#[test]
fn fixture_scores() {
    assert_eq!(ok(&["evaluate", "--fixture", "fig5"]).trim(), "95.12/94.44/94.44/94.44");
}

#[test]
fn help_and_version_exit_cleanly() {
    assert!(ok(&["--help"]).contains("simulate"));
    assert!(ok(&["--version"]).starts_with("respira"));
}

#[test]
fn augmentation_counts_and_passthrough() {
    let tmp = TempDir::new().unwrap();
    let phases = simulate(&tmp.path().join("sim"), "8");
    let n = data_rows(Path::new(&phases)).len();

    let noisy = tmp.path().join("noisy");
    ok(&[
        "--out",
        noisy.to_str().unwrap(),
        "augment",
        "--in",
        &phases,
        "--noise-factors",
        "0.1,0.2",
    ]);
    let rows = data_rows(&noisy.join("augmented.csv"));
    assert_eq!(rows.len(), 3 * n);
    assert!(rows[n].starts_with("s0000-aug0.1,"), "{}", rows[n]);
    assert!(rows[2 * n].starts_with("s0000-aug0.2,"), "{}", rows[2 * n]);

    let plain = tmp.path().join("plain");
    ok(&["--out", plain.to_str().unwrap(), "augment", "--in", &phases]);
    assert_eq!(
        fs::read(plain.join("augmented.csv")).unwrap(),
        fs::read(&phases).unwrap()
    );
}

#[test]
fn smote_balances_classes() {
    let tmp = TempDir::new().unwrap();
    let phases = simulate(&tmp.path().join("sim"), "12");
    let out = tmp.path().join("aug");
    ok(&[
        "--out",
        out.to_str().unwrap(),
        "augment",
        "--in",
        &phases,
        "--smote",
        "--smote-k",
        "2",
    ]);
    let rows = data_rows(&out.join("augmented.csv"));
    let count = |label: &str| rows.iter().filter(|r| r.split(',').nth(1) == Some(label)).count();
    assert_eq!(count("normal"), count("abnormal"));
    assert!(rows.iter().any(|r| r.starts_with("smote-")));
}

#[test]
fn train_then_evaluate() {
    let tmp = TempDir::new().unwrap();
    let phases = simulate(&tmp.path().join("sim"), "16");
    let model_dir = tmp.path().join("model");
    ok(&[
        "--out",
        model_dir.to_str().unwrap(),
        "train",
        "--in",
        &phases,
        "--kernel",
        "quadratic",
    ]);

    let split = data_rows(&model_dir.join("split.csv"));
    assert_eq!(split.len(), 16);
    let validation = split.iter().filter(|r| r.ends_with(",validation")).count();
    assert_eq!(data_rows(&model_dir.join("validation.csv")).len(), validation);

    let eval_dir = tmp.path().join("eval");
    let model = model_dir.join("model.svm");
    let data = model_dir.join("validation.csv");
    ok(&[
        "--out",
        eval_dir.to_str().unwrap(),
        "evaluate",
        "--model",
        model.to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
    ]);
    let metrics = data_rows(&eval_dir.join("metrics.csv"));
    assert_eq!(metrics.len(), 1);
    assert!(metrics[0].starts_with("quadratic,"));
    let cm: u64 = data_rows(&eval_dir.join("confusion.csv"))[0]
        .split(',')
        .map(|v| v.parse::<u64>().unwrap())
        .sum();
    assert_eq!(cm as usize, validation);
    assert_eq!(data_rows(&eval_dir.join("scores.csv")).len(), validation);

    // A data file in place of the model.
    let out = respira(&[
        "evaluate",
        "--model",
        data.to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    stderr_line(&out);
}

#[test]
fn compare_writes_one_sorted_row_per_kernel() {
    let tmp = TempDir::new().unwrap();
    let phases = simulate(&tmp.path().join("sim"), "16");
    let out = tmp.path().join("cmp");
    ok(&[
        "--out",
        out.to_str().unwrap(),
        "compare",
        "--in",
        &phases,
        "--kernels",
        "rbf,linear,quadratic",
    ]);
    let kernels: Vec<String> = data_rows(&out.join("compare.csv"))
        .iter()
        .map(|r| r.split(',').next().unwrap().to_string())
        .collect();
    assert_eq!(kernels, ["linear", "quadratic", "rbf"]);

    let bad = respira(&["compare", "--in", &phases, "--kernels", "sigmoid"]);
    assert_eq!(bad.status.code(), Some(2));
    stderr_line(&bad);
}

#[test]
fn missing_input_is_a_runtime_error() {
    let tmp = TempDir::new().unwrap();
    let missing = tmp.path().join("nope.csv");
    let out = respira(&["augment", "--in", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_line(&out).contains("nope.csv"));
}
