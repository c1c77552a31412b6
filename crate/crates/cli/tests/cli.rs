use std::path::Path;
use std::process::{Command, Output};

use ucesim_cli::config::{Checkpoints, ExperimentConfig, SizingRule};
use ucesim_cli::converge::{cmd_converge, Manifest};
use ucesim_cli::nstar_fit::{cmd_nstar_fit, read_curves};
use ucesim_cli::{cmd_gap, gap_json};

fn ucesim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ucesim")).args(args).env_remove("UCESIM_OUTPUT_DIR").output().unwrap()
}

fn small_config(dir: &Path) -> ExperimentConfig {
    let mut config = ExperimentConfig::new(vec![3, 4]);
    config.statistics = vec!["pl".into(), "mu2".into()];
    config.checkpoints = Some(Checkpoints::Geometric { start: 2.0, ratio: std::f64::consts::SQRT_2, max: 120 });
    config.sizing = Some(SizingRule { a: 10, b: 9 });
    config.master_seed = 11;
    config.output_dir = Some(dir.to_path_buf());
    config
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn converge_writes_one_curve_per_nq_and_statistic() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = small_config(dir.path());
    config.statistics = vec!["pl".into()];
    let out = cmd_converge(&config).unwrap();
    assert_eq!(out.curve_files.len(), 2);
    let names: Vec<String> = read_dir_sorted(dir.path()).into_iter().map(|f| f.0).collect();
    assert_eq!(names, ["curve_nq3_pl.csv", "curve_nq4_pl.csv", "manifest.json"]);
    let curve = std::fs::read_to_string(&out.curve_files[0]).unwrap();
    assert!(curve.starts_with("nq,ng,statistic,value,n_r,seed\n3,2,pl,"));
}

#[test]
fn manifest_round_trips_effective_config() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = small_config(dir.path());
    config.ln_eps = vec![-0.7, -1.3];
    config.workers = Some(2);
    let out = cmd_converge(&config).unwrap();
    let manifest = Manifest::read(&out.manifest).unwrap();
    assert_eq!(manifest.config, config.result_defining());
    assert_eq!(manifest.master_seed, 11);
    assert_eq!(manifest.runs[0].n_r, 640);
    assert_eq!(manifest.files.len(), 4);
    // The echoed config drives an identical second run.
    let dir2 = tempfile::tempdir().unwrap();
    let mut replay = manifest.config.clone();
    replay.output_dir = Some(dir2.path().to_path_buf());
    cmd_converge(&replay).unwrap();
    assert_eq!(read_dir_sorted(dir.path()), read_dir_sorted(dir2.path()));
}

#[test]
fn outputs_identical_across_reruns_and_worker_counts() {
    let mut outputs = Vec::new();
    for workers in [1, 8, 8] {
        let dir = tempfile::tempdir().unwrap();
        let mut config = small_config(dir.path());
        config.workers = Some(workers);
        config.dump_histograms = true;
        cmd_converge(&config).unwrap();
        outputs.push(read_dir_sorted(dir.path()));
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[1], outputs[2]);
    assert!(outputs[0].iter().any(|(name, _)| name.starts_with("hist_nq4_ng")));
}

#[test]
fn converge_binary_uses_env_output_dir_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("exp.toml");
    std::fs::write(&config_path, "nq = [2]\nstatistics = [\"mu2\"]\nn_r = 50\ncheckpoints = [1, 2, 4]\n").unwrap();
    let out_dir = dir.path().join("from-env");
    let output = Command::new(env!("CARGO_BIN_EXE_ucesim"))
        .args(["converge", "--config", config_path.to_str().unwrap(), "--nq", "2,3", "--seed", "4"])
        .args(["--geometric", "1,2,8", "--sizing", "3,5"])
        .env("UCESIM_OUTPUT_DIR", &out_dir)
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let manifest = Manifest::read(&out_dir.join("manifest.json")).unwrap();
    assert_eq!(manifest.config.nq, [2, 3]);
    assert_eq!(manifest.master_seed, 4);
    assert_eq!(manifest.config.n_r, None);
    assert_eq!(manifest.config.sizing, Some(SizingRule { a: 3, b: 5 }));
    assert_eq!(manifest.runs[0].checkpoints, [1, 2, 4, 8]);
    assert_eq!(manifest.runs[0].n_r, 24);
    assert!(out_dir.join("curve_nq3_mu2.csv").exists());
}

#[test]
fn converge_reports_config_errors_as_usage() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("bad.toml");
    std::fs::write(&config_path, "nq = [3]\nstatistics = [\"pl\"]\nmaster_seed = -1\n").unwrap();
    let output = ucesim(&["converge", "--config", config_path.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&output.stderr).contains("line 3"));

    let output = ucesim(&["converge", "--nq", "30", "--output-dir", dir.path().to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&output.stderr).contains("memory cap"));

    assert_eq!(ucesim(&["converge"]).status.code(), Some(1));
    assert_eq!(ucesim(&["converge", "--nq", "2", "--sizing", "1,2,3"]).status.code(), Some(1));
    assert_eq!(ucesim(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(ucesim(&["--help"]).status.code(), Some(0));
}

#[test]
fn nstar_fit_produces_three_fit_rows_per_ln_eps() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = small_config(dir.path());
    config.nq = vec![2, 3, 4, 5];
    config.statistics = vec!["mu2".into()];
    config.sizing = Some(SizingRule { a: 10, b: 10 });
    let out = cmd_converge(&config).unwrap();

    let fit_dir = dir.path().join("fit");
    let mut args = vec!["nstar-fit".to_string()];
    args.extend(out.curve_files.iter().map(|p| p.display().to_string()));
    args.extend(["--ln-eps".into(), "-0.5,-1".into(), "--output-dir".into(), fit_dir.display().to_string()]);
    let output = ucesim(&args.iter().map(String::as_str).collect::<Vec<_>>());
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));

    let fits = std::fs::read_to_string(fit_dir.join("fits.csv")).unwrap();
    let rows: Vec<&str> = fits.lines().skip(1).collect();
    assert_eq!(rows.len(), 6, "{fits}");
    for (row, model) in rows.iter().zip(["f1", "f2", "f3", "f1", "f2", "f3"]) {
        assert!(row.starts_with(model));
    }
    let nstar = std::fs::read_to_string(fit_dir.join("nstar.csv")).unwrap();
    assert_eq!(nstar.lines().count(), 9);
    assert_eq!(std::fs::read_to_string(fit_dir.join("warnings.csv")).unwrap(), "nq,ln_eps,reason\n");
}

#[test]
fn nstar_fit_below_floor_gives_empty_table_and_warnings() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = small_config(dir.path());
    config.statistics = vec!["pl".into()];
    let out = cmd_converge(&config).unwrap();
    let curves = read_curves(&out.curve_files).unwrap();
    let result = cmd_nstar_fit(&curves, &[-30.0], None, 2.0).unwrap();
    assert!(result.points.is_empty());
    assert!(result.fits.is_empty());
    assert_eq!(result.warnings.len(), 3);

    let mut args = vec!["nstar-fit".to_string()];
    args.extend(out.curve_files.iter().map(|p| p.display().to_string()));
    args.extend(["--ln-eps=-30".into(), "--output-dir".into(), dir.path().join("fit").display().to_string()]);
    let output = ucesim(&args.iter().map(String::as_str).collect::<Vec<_>>());
    assert!(output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).contains("3 warning(s)"));
}

#[test]
fn gap_is_reproducible_and_sigma_scales() {
    let a = gap_json(&cmd_gap(10_000, 3).unwrap());
    let b = gap_json(&cmd_gap(10_000, 3).unwrap());
    assert_eq!(a, b);
    let small = cmd_gap(10_000, 3).unwrap();
    let large = cmd_gap(1_000_000, 3).unwrap();
    let ratio = small.sigma_estimate / large.sigma_estimate;
    assert!((8.0..12.5).contains(&ratio), "sigma ratio {ratio}");
    assert!((large.gap - 0.232703).abs() < 0.01);

    let output = ucesim(&["gap", "--samples", "2000", "--seed", "1"]);
    assert!(output.status.success());
    let json: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(json["samples"], 2000);
    assert_eq!(json["multiplicity"], 2);
}

#[test]
fn oracle_check_exit_codes() {
    let ok = ucesim(&["oracle-check", "--nq-max", "3", "--trials", "4"]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stdout));
    let faulty = ucesim(&["oracle-check", "--nq-max", "3", "--trials", "4", "--inject-fault", "swap-cnot"]);
    assert_eq!(faulty.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&faulty.stdout).contains("FAIL oracle nq=2"));
    assert_eq!(ucesim(&["oracle-check", "--trials", "0"]).status.code(), Some(1));
    assert_eq!(ucesim(&["oracle-check", "--nq-max", "9"]).status.code(), Some(1));
}

#[test]
fn dump_circuit_prints_parsable_text() {
    let output = ucesim(&["dump-circuit", "--nq", "4", "--ng", "7", "--seed", "9", "--index", "3"]);
    assert!(output.status.success());
    let text = String::from_utf8(output.stdout).unwrap();
    let circuit: ucesim_core::gateset::Circuit = text.parse().unwrap();
    assert_eq!((circuit.n_qubits, circuit.len(), circuit.master_seed), (4, 7, 9));
    assert_eq!(ucesim(&["dump-circuit", "--nq", "0", "--ng", "1"]).status.code(), Some(1));
}
