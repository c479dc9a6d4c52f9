use std::fs;
use std::path::Path;
use std::process::Command;

use memhtm_cli::dataset::{generate_synthetic, load_dataset, SyntheticSpec, SYNTHETIC_CONFIG};
use memhtm_cli::experiment::{
    report_json, run_experiment, run_sweep, BackendKind, ExperimentSpec, SweepSpec,
};

fn memhtm() -> Command {
    Command::new(env!("CARGO_BIN_EXE_memhtm"))
}

fn suite() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    generate_synthetic(dir.path(), SyntheticSpec::default()).unwrap();
    dir
}

fn spec(
    root: &Path,
    backend: BackendKind,
    preset: &str,
    config: &str,
    seed: u64,
) -> ExperimentSpec {
    ExperimentSpec::new(root, backend, preset, Some(config), seed).unwrap()
}

const FAST: &str = "block_size = 1\nregion_blocks = 2\niterations = 16\n";

#[test]
fn generated_suite_loads_back() {
    let dir = suite();
    let ds = load_dataset(dir.path()).unwrap();
    assert_eq!(ds.class_count(), 10);
    assert_eq!(ds.samples.len(), 400);
    for c in 0..10 {
        assert_eq!(ds.class_samples(c).count(), 40);
    }
    assert!(ds
        .samples
        .iter()
        .all(|s| s.image.width == 16 && s.image.height == 16));
    assert!(ds
        .samples
        .iter()
        .all(|s| s.image.data.iter().all(|&v| v == 0.0 || v == 1.0)));

    let again = suite();
    assert_eq!(
        load_dataset(again.path())
            .unwrap()
            .samples
            .iter()
            .map(|s| &s.image)
            .collect::<Vec<_>>(),
        ds.samples.iter().map(|s| &s.image).collect::<Vec<_>>()
    );
    assert_eq!(
        fs::read_to_string(dir.path().join("suite.conf")).unwrap(),
        SYNTHETIC_CONFIG
    );
}

#[test]
fn ideal_backend_separates_suite() {
    let dir = suite();
    let run = run_experiment(&spec(
        dir.path(),
        BackendKind::Ideal,
        "ideal",
        SYNTHETIC_CONFIG,
        42,
    ))
    .unwrap();
    assert!(run.report.accuracy >= 0.90, "{}", run.report.accuracy);
    assert_eq!(run.report.dataset.train_images, 200);
    assert_eq!(run.report.dataset.test_images, 200);
}

#[test]
fn reports_are_byte_identical() {
    let dir = suite();
    let s = spec(dir.path(), BackendKind::Memristive, "reram-256", FAST, 3);
    let a = report_json(&run_experiment(&s).unwrap().report).unwrap();
    let b = report_json(&run_experiment(&s).unwrap().report).unwrap();
    assert_eq!(a, b);
}

#[test]
fn thread_count_does_not_change_report() {
    let dir = suite();
    let out = tempfile::tempdir().unwrap();
    for threads in ["1", "2"] {
        let status = memhtm()
            .args([
                "run",
                "--backend",
                "memristive",
                "--threads",
                threads,
                "--seed",
                "5",
            ])
            .arg("--dataset")
            .arg(dir.path())
            .arg("--config")
            .arg(dir.path().join("suite.conf"))
            .arg("--out")
            .arg(out.path().join(format!("t{threads}.json")))
            .status()
            .unwrap();
        assert!(status.success());
    }
    let read = |name: &str| fs::read(out.path().join(name)).unwrap();
    assert_eq!(read("t1.json"), read("t2.json"));
    assert_eq!(read("t1.confusion.csv"), read("t2.confusion.csv"));
    assert!(out.path().join("t1.timing.json").exists());
}

fn shape(v: &serde_json::Value) -> serde_json::Value {
    match v {
        serde_json::Value::Object(m) => {
            serde_json::Value::Object(m.iter().map(|(k, v)| (k.clone(), shape(v))).collect())
        }
        serde_json::Value::Array(a) => {
            serde_json::Value::Array(a.iter().take(1).map(shape).collect())
        }
        serde_json::Value::Number(_) => "number".into(),
        serde_json::Value::String(_) => "string".into(),
        serde_json::Value::Bool(_) => "bool".into(),
        serde_json::Value::Null => "null".into(),
    }
}

#[test]
fn report_schema_is_stable_across_seeds() {
    let dir = suite();
    let shapes: Vec<serde_json::Value> = [1u64, 2]
        .iter()
        .map(|&seed| {
            let r = run_experiment(&spec(
                dir.path(),
                BackendKind::Ideal,
                "reram-256",
                FAST,
                seed,
            ))
            .unwrap();
            shape(&serde_json::to_value(&r.report).unwrap())
        })
        .collect();
    assert_eq!(shapes[0], shapes[1]);
    for key in [
        "seed",
        "dataset",
        "backend",
        "parameters",
        "accuracy",
        "per_class",
        "confusion",
        "cost",
    ] {
        assert!(shapes[0].get(key).is_some(), "{key}");
    }
}

#[test]
fn quantization_never_helps_on_the_suite() {
    let dir = suite();
    let mean_accuracy = |preset: &str, levels: &str| {
        let config = format!("{SYNTHETIC_CONFIG}levels = {levels}\n");
        [1u64, 2, 3]
            .iter()
            .map(|&seed| {
                run_experiment(&spec(
                    dir.path(),
                    BackendKind::Memristive,
                    preset,
                    &config,
                    seed,
                ))
                .unwrap()
                .report
                .accuracy
            })
            .sum::<f64>()
            / 3.0
    };
    let exact = mean_accuracy("ideal", "inf");
    let l256 = mean_accuracy("quantized-256", "256");
    let l16 = mean_accuracy("quantized-256", "16");
    assert!(exact >= l256 && l256 >= l16, "{exact} {l256} {l16}");
}

#[test]
fn sweep_keeps_value_order() {
    let dir = suite();
    let s = spec(dir.path(), BackendKind::Ideal, "ideal", FAST, 1);
    let sweep: SweepSpec = "iterations=8,2,4".parse().unwrap();
    let report = run_sweep(&s, &sweep).unwrap();
    let values: Vec<&str> = report.points.iter().map(|p| p.value.as_str()).collect();
    assert_eq!(values, ["8", "2", "4"]);
    let iters: Vec<usize> = report
        .points
        .iter()
        .map(|p| p.report.parameters.iterations)
        .collect();
    assert_eq!(iters, [8, 2, 4]);
}

#[test]
fn errors_are_json_on_stderr() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir(dir.path().join("a")).unwrap();
    let bad = dir.path().join("a").join("x.csv");
    fs::write(&bad, "0,0.5\n1\n").unwrap();
    let out = memhtm()
        .arg("run")
        .arg("--dataset")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(out.stdout.is_empty());
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "csv");
    assert_eq!(err["error"]["line"], 2);
    assert_eq!(err["error"]["path"], bad.display().to_string());

    let out = memhtm()
        .args(["run", "--preset", "nope", "--dataset"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "unknown_preset");
}

#[test]
fn cost_subcommand_prints_totals() {
    let out = memhtm().args(["cost", "--tm-cells", "1"]).output().unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["area_um2"], 23.85);
    assert_eq!(v["power_uw"], 442.26);
}

#[test]
fn generate_then_run_from_command_line() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("suite");
    assert!(memhtm()
        .arg("generate")
        .arg("--out")
        .arg(&root)
        .status()
        .unwrap()
        .success());
    let out = memhtm()
        .args(["run", "--train-fraction", "0.25"])
        .arg("--dataset")
        .arg(&root)
        .arg("--config")
        .arg(root.join("suite.conf"))
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["dataset"]["train_images"], 100);
    assert_eq!(v["dataset"]["test_images"], 300);
}
