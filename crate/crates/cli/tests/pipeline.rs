use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ks_narmax::data_gen::ObservationSeries;
use ks_narmax::narmax::NarmaxParams;
use ks_narmax_cli::{ExperimentConfig, Preset};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ks-narmax"));
    c.env("RUST_LOG", "warn");
    c
}

fn run(config: &Path, args: &[&str]) -> Output {
    bin().arg("--config").arg(config).args(args).output().unwrap()
}

fn small_config(dir: &Path, duration: f64) -> std::path::PathBuf {
    let mut cfg = ExperimentConfig::preset(Preset::Fast);
    cfg.transient = 20.0;
    cfg.duration = duration;
    cfg.output_dir = dir.join("out");
    cfg.stability_start = 100;
    cfg.stability_steps = Some(500);
    cfg.acf.n0 = 4;
    cfg.acf.t_lag = 2.0;
    cfg.forecast.n0 = 4;
    cfg.forecast.n_ens = 2;
    cfg.forecast.ensemble_sweep = vec![1, 2];
    cfg.forecast.t_lag = 2.0;
    let path = dir.join("config.json");
    cfg.save(&path).unwrap();
    path
}

#[test]
fn shipped_configs_match_presets() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for (name, preset) in [("paper.json", Preset::Paper), ("fast.json", Preset::Fast)] {
        let loaded = ExperimentConfig::load(&root.join(name)).unwrap();
        assert_eq!(loaded, ExperimentConfig::preset(preset), "{name}");
    }
}

#[test]
fn config_file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = small_config(dir.path(), 10.0);
    let loaded = ExperimentConfig::load(&path).unwrap();
    let again = dir.path().join("again.json");
    loaded.save(&again).unwrap();
    assert_eq!(fs::read(&path).unwrap(), fs::read(&again).unwrap());
}

#[test]
fn unknown_config_field_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    let mut v: serde_json::Value = serde_json::from_str(&ExperimentConfig::preset(Preset::Fast).to_json()).unwrap();
    v["colour"] = "blue".into();
    fs::write(&path, v.to_string()).unwrap();
    assert_eq!(run(&path, &["extract"]).status.code(), Some(2));
}

#[test]
fn missing_input_names_the_producer() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), 10.0);
    let out = run(&cfg, &["fit"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("simulate-full"));

    assert!(run(&cfg, &["simulate-full"]).status.success());
    let out = run(&cfg, &["fit"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`ks-narmax extract`"));

    let out = run(&cfg, &["validate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`ks-narmax fit`"));
}

#[test]
fn zero_duration_gives_a_single_sample() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), 10.0);
    assert!(run(&cfg, &["--duration", "0", "simulate-full"]).status.success());
    let s = ObservationSeries::load(&dir.path().join("out/observations.ksob")).unwrap();
    assert_eq!(s.len(), 1);
}

#[test]
fn bad_orders_flag_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), 10.0);
    assert_eq!(run(&cfg, &["--orders", "0,2", "fit"]).status.code(), Some(2));
}

#[test]
fn stages_chain_and_rerun_bit_identically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), 200.0);
    let out = dir.path().join("out");
    for stage in ["simulate-full", "extract", "fit"] {
        let o = run(&cfg, &[stage]);
        assert!(o.status.success(), "{stage}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let model = NarmaxParams::load(&out.join("narmax_021.json")).unwrap();
    assert_eq!(model.modes.len(), 5);
    assert!(model.modes.iter().all(|m| m.theta().len() == 10 && m.sigma2 > 0.0));
    let csv = fs::read_to_string(out.join("narmax_coefficients_021.csv")).unwrap();
    assert_eq!(csv.lines().count(), 6);

    assert!(run(&cfg, &["simulate-reduced", "--truncated", "--steps", "50"]).status.success());
    let traj = ObservationSeries::load(&out.join("reduced_truncated.ksob")).unwrap();
    assert_eq!(traj.steps(), 50);

    let snapshot = |name: &str| fs::read(out.join(name)).unwrap();
    let first: Vec<Vec<u8>> =
        ["observations.ksob", "model_error.ksmz", "narmax_021.json", "manifests/fit-021.json"].map(snapshot).to_vec();
    for stage in ["simulate-full", "extract", "fit"] {
        assert!(run(&cfg, &[stage]).status.success());
    }
    let second: Vec<Vec<u8>> =
        ["observations.ksob", "model_error.ksmz", "narmax_021.json", "manifests/fit-021.json"].map(snapshot).to_vec();
    assert_eq!(first, second);

    let manifest: serde_json::Value = serde_json::from_slice(&snapshot("manifests/fit-021.json")).unwrap();
    assert_eq!(manifest["inputs"].as_array().unwrap().len(), 2);
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 2);
}
