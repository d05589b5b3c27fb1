//! Run-level behaviour: reproducible outputs, schema sidecars and config errors.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use wavestat::config::{validate_config, ExperimentConfig, ExperimentKind};
use wavestat::experiment::{run_experiment, RunOptions};
use wavestat::WtError;

fn run(cfg: &ExperimentConfig, dir: &Path) -> wavestat::experiment::Report {
    let opts = RunOptions {
        reproducible: true,
        out_dir: Some(dir.to_path_buf()),
    };
    run_experiment(cfg, &opts).unwrap()
}

fn contents(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect()
}

#[test]
fn reruns_are_byte_identical_and_every_csv_has_a_schema() {
    for kind in [ExperimentKind::OnemodePdf, ExperimentKind::PerturbationScaling, ExperimentKind::KzFluxScan] {
        let cfg = ExperimentConfig::defaults(kind);
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let report = run(&cfg, a.path());
        run(&cfg, b.path());
        let (fa, fb) = (contents(a.path()), contents(b.path()));
        assert_eq!(fa, fb, "{} outputs differ between runs", kind.name());
        assert!(fa.contains_key("summary.json"));
        for (name, bytes) in &fa {
            if let Some(stem) = name.strip_suffix(".csv") {
                let schema: serde_json::Value = serde_json::from_slice(&fa[&format!("{stem}.csv.schema.json")]).unwrap();
                let header = String::from_utf8_lossy(bytes).lines().next().unwrap().to_string();
                let columns: Vec<&str> = schema["columns"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
                assert_eq!(header, columns.join(","), "{name} header vs schema");
                let rows = String::from_utf8_lossy(bytes).lines().count() - 1;
                assert_eq!(schema["rows"], rows);
            }
        }
        // The manifest digests match the files on disk.
        for record in &report.summary.files.files {
            assert_eq!(record.sha256, wavestat::output::sha256_hex(&fa[&record.name]));
        }
    }
}

#[test]
fn wall_time_only_outside_reproducible_mode() {
    let cfg = ExperimentConfig::defaults(ExperimentKind::OnemodePdf);
    let dir = tempfile::tempdir().unwrap();
    let opts = RunOptions {
        reproducible: false,
        out_dir: Some(dir.path().to_path_buf()),
    };
    let report = run_experiment(&cfg, &opts).unwrap();
    assert!(report.summary.wall_time_seconds.is_some());
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert!(summary["wall_time_seconds"].is_number());
    assert_eq!(summary["config_hash"], cfg.hash());
}

#[test]
fn perturbation_scaling_emits_residuals_and_slope() {
    let cfg = ExperimentConfig::defaults(ExperimentKind::PerturbationScaling);
    let dir = tempfile::tempdir().unwrap();
    let report = run(&cfg, dir.path());
    let csv = fs::read_to_string(dir.path().join("residuals.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "epsilon,r0,r1,r2");
    assert_eq!(csv.lines().count(), 1 + cfg.perturbation.epsilons.len());
    let slope = report.summary.metrics["slopes"][2].as_f64().unwrap();
    assert!((slope - 3.0).abs() <= 0.45, "slope {slope}");
    assert!(report.passed());
}

#[test]
fn negative_flux_pdf_has_rayleigh_and_tail_columns() {
    let cfg = validate_config("kind = \"onemode-pdf\"\n[onemode]\nflux = -0.03\n").unwrap();
    let dir = tempfile::tempdir().unwrap();
    let report = run(&cfg, dir.path());
    let csv = fs::read_to_string(dir.path().join("pdf.csv")).unwrap();
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    for col in ["s", "p", "rayleigh", "tail"] {
        assert!(header.contains(&col), "missing {col}");
    }
    assert!(report.passed(), "{:?}", report.summary.verdicts);
}

#[test]
fn zero_realizations_is_a_config_error() {
    let err = validate_config("kind = \"mc-kinetic-3w\"\n[ensemble]\nrealizations = 0\n").unwrap_err();
    match err {
        WtError::Config { field, .. } => assert_eq!(field, "ensemble.realizations"),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn inadmissible_flux_aborts_with_the_admissible_range() {
    let cfg = validate_config("kind = \"onemode-pdf\"\n[onemode]\nflux = -5.0\n").unwrap();
    let dir = tempfile::tempdir().unwrap();
    let opts = RunOptions {
        reproducible: true,
        out_dir: Some(dir.path().to_path_buf()),
    };
    match run_experiment(&cfg, &opts) {
        Err(WtError::Positivity { lower, upper, .. }) => assert!(lower < 0.0 && upper >= 0.0),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn four_wave_ensemble_tendency_matches_kinetic_prediction_within_its_error() {
    let cfg = validate_config("kind = \"mc-kinetic-4w\"\n[lattice]\nn_side = 4\n[ensemble]\nrealizations = 600\n").unwrap();
    let study = wavestat::experiment::mc_kinetic(&cfg).unwrap();
    let compared: Vec<_> = study.rows.iter().filter(|r| r.selected).collect();
    assert!(!compared.is_empty());
    for r in compared {
        // The first-order subtraction is what makes the estimate this sharp.
        assert!(r.stderr < 0.15 * r.predicted.abs(), "mode {}: stderr {} vs {}", r.mode, r.stderr, r.predicted);
        let z = (r.measured - r.predicted) / r.stderr;
        assert!(z.abs() < 4.0, "mode {}: measured {} predicted {} stderr {}", r.mode, r.measured, r.predicted, r.stderr);
    }
}
