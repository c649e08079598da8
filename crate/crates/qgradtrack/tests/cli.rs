//! Integration tests of the `qgradtrack` binary: flag handling, exit
//! codes, error records, and artifact layout.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qgradtrack"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("no signal")
}

#[test]
fn missing_mandatory_flags_is_a_config_error() {
    let out = run(&["--experiment", "quadratic_smoke"]);
    assert_eq!(code(&out), 2);
    let stderr = String::from_utf8(out.stderr).unwrap();
    let record: serde_json::Value =
        serde_json::from_str(stderr.lines().last().unwrap()).expect("JSON error record");
    assert_eq!(record["error"], "invalid_config");
}

#[test]
fn unknown_experiment_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "--experiment",
        "nope",
        "--seed",
        "1",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn invalid_rho_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "--experiment",
        "quadratic_smoke",
        "--seed",
        "1",
        "--out",
        tmp.path().to_str().unwrap(),
        "--rho",
        "2.5",
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn divergent_step_size_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "--experiment",
        "quadratic_smoke",
        "--seed",
        "1",
        "--out",
        tmp.path().to_str().unwrap(),
        "--alpha",
        "1e6",
        "--duration",
        "2.0",
    ]);
    assert_eq!(code(&out), 3);
    let stderr = String::from_utf8(out.stderr).unwrap();
    let record: serde_json::Value =
        serde_json::from_str(stderr.lines().last().unwrap()).unwrap();
    assert_eq!(record["error"], "divergence");
}

#[test]
fn impossible_network_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "--experiment",
        "quadratic_smoke",
        "--seed",
        "1",
        "--out",
        tmp.path().to_str().unwrap(),
        "--n",
        "30",
        "--p",
        "0.01",
    ]);
    assert_eq!(code(&out), 4);
}

#[test]
fn smoke_preset_writes_the_advertised_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "--experiment",
        "quadratic_smoke",
        "--seed",
        "3",
        "--out",
        tmp.path().to_str().unwrap(),
        "--duration",
        "1.0",
        "--record-stride",
        "50",
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    for file in ["trace.csv", "oracle.json", "spectrum.json", "manifest.json"] {
        assert!(tmp.path().join(file).exists(), "{file} missing");
    }
    let trace = std::fs::read_to_string(tmp.path().join("trace.csv")).unwrap();
    assert!(trace.starts_with("t,residual,consensus_error,conservation_defect\n"));

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["config"]["sim"]["duration"], 1.0);
    assert_eq!(manifest["config"]["network"]["seed"], 3);
    assert_eq!(manifest["version"], env!("CARGO_PKG_VERSION"));

    let spectrum: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("spectrum.json")).unwrap())
            .unwrap();
    assert!(!spectrum["configs"].as_array().unwrap().is_empty());
    assert_eq!(spectrum["configs"][0]["zero_count"], 2);
}

#[test]
fn config_file_plus_flag_overrides() {
    let tmp = tempfile::tempdir().unwrap();
    let out_a = tmp.path().join("a");
    let out_b = tmp.path().join("b");

    // Write a config file by running a preset first, then reuse it.
    let seed_run = run(&[
        "--experiment",
        "quadratic_smoke",
        "--seed",
        "5",
        "--out",
        out_a.to_str().unwrap(),
        "--duration",
        "0.5",
    ]);
    assert_eq!(code(&seed_run), 0);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_a.join("manifest.json")).unwrap())
            .unwrap();
    let config_path = tmp.path().join("config.json");
    std::fs::write(
        &config_path,
        serde_json::to_string_pretty(&manifest["config"]).unwrap(),
    )
    .unwrap();

    // Same config, new output dir via flag override: byte-identical trace.
    let rerun = run(&[
        "--config",
        config_path.to_str().unwrap(),
        "--out",
        out_b.to_str().unwrap(),
    ]);
    assert_eq!(code(&rerun), 0, "stderr: {}", String::from_utf8_lossy(&rerun.stderr));
    assert_eq!(
        std::fs::read(out_a.join("trace.csv")).unwrap(),
        std::fs::read(out_b.join("trace.csv")).unwrap()
    );
}

#[test]
fn svm_preset_emits_dataset_and_sweeps_emit_summaries() {
    let tmp = tempfile::tempdir().unwrap();
    let svm_dir = tmp.path().join("svm");
    let out = run(&[
        "--experiment",
        "svm_paper",
        "--seed",
        "2",
        "--out",
        svm_dir.to_str().unwrap(),
        "--duration",
        "0.3",
        "--n-points",
        "20",
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(svm_dir.join("dataset.csv").exists());

    let cmp_dir = tmp.path().join("cmp");
    let out = run(&[
        "--experiment",
        "quantizer_compare",
        "--seed",
        "2",
        "--out",
        cmp_dir.to_str().unwrap(),
        "--duration",
        "1.0",
        "--n",
        "5",
    ]);
    assert_eq!(code(&out), 0);
    assert!(cmp_dir.join("summary.json").exists());
    assert!(cmp_dir.join("log_scale/trace.csv").exists());
    assert!(cmp_dir.join("uniform/trace.csv").exists());

    let init_dir = tmp.path().join("init");
    let out = run(&[
        "--experiment",
        "init_compare",
        "--seed",
        "2",
        "--out",
        init_dir.to_str().unwrap(),
        "--duration",
        "1.0",
        "--n",
        "5",
    ]);
    assert_eq!(code(&out), 0);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(init_dir.join("summary.json")).unwrap())
            .unwrap();
    assert!(summary["final_aggregate_grad_norm"]["gradient_y"].is_number());
    assert!(init_dir.join("zero_y/trace.csv").exists());
}

fn rho_dir_names(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| {
            let name = e.unwrap().file_name().into_string().unwrap();
            name.starts_with("rho_").then_some(name)
        })
        .collect();
    names.sort();
    names
}

#[test]
fn rho_sweep_writes_one_run_per_level() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "--experiment",
        "rho_sweep",
        "--seed",
        "2",
        "--out",
        tmp.path().to_str().unwrap(),
        "--duration",
        "0.5",
        "--n-points",
        "20",
        "--rho-list",
        "0.125,0.25",
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(rho_dir_names(tmp.path()), vec!["rho_0.125", "rho_0.25"]);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["rows"].as_array().unwrap().len(), 2);

    // Unsorted rho list is rejected up front.
    let out = run(&[
        "--experiment",
        "rho_sweep",
        "--seed",
        "2",
        "--out",
        tmp.path().to_str().unwrap(),
        "--rho-list",
        "0.25,0.125",
    ]);
    assert_eq!(code(&out), 2);
}
