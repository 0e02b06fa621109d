use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use weakfock::experiment::{read_operator, ExperimentConfig};
use weakfock::verify::{subset_sum_spectrum, ModelSpec};

fn weakfock(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_weakfock")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.conf");
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn shipped_config_is_the_reference_configuration() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/desk1.conf");
    let c = ExperimentConfig::from_path(&path).unwrap();
    assert_eq!(c.model, ModelSpec::desk1());
    let reference = ExperimentConfig::default();
    assert_eq!(c.checks, reference.checks);
    assert_eq!(c.gap_range, reference.gap_range);
}

#[test]
fn free_spectrum_csv_matches_subset_sums() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(dir.path(), "coupling.g = 0\ncaps.neutrino = 2\n");
    let o = weakfock(&["spectrum", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let csv = fs::read_to_string(out.join("spectra/h.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("index,eigenvalue,residual"));
    let values: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    let model = ExperimentConfig::from_path(Path::new(&cfg)).unwrap().model.build().unwrap();
    let oracle = subset_sum_spectrum(&model);
    assert_eq!(values.len(), 528);
    assert_eq!(oracle.len(), 528);
    for (a, b) in values.iter().zip(&oracle) {
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }
    assert!(out.join("manifest.json").exists());
}

#[test]
fn invalid_delta_is_rejected_before_assembly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "model.delta = 1.0\n");
    let out = dir.path().join("never");
    let o = weakfock(&["verify-all", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("model.delta"));
    assert!(!out.exists());
}

#[test]
fn unknown_key_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "grid.neutrino.shell = 4\n");
    let o = weakfock(&["hypotheses", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("grid.neutrino.shell"));
}

#[test]
fn forced_dense_above_the_limit_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = weakfock(&["mourre", "--dense-limit", "100", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn failing_check_gives_status_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(dir.path(), "caps.signs = sector_local\ncaps.neutrino = 2\nchecks.select = algebra\n");
    let o = weakfock(&["verify-all", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("FAIL"));
    let report = fs::read_to_string(out.join("report.json")).unwrap();
    assert!(report.contains("\"status\": \"fail\""));
}

#[test]
fn exported_operators_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = weakfock(&["export-operator", "--operator", "h,a1", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let model = ModelSpec::desk1().build().unwrap();
    for name in ["h", "a1"] {
        let path = out.join(format!("operators/{name}.triplet"));
        let back = read_operator(&path).unwrap();
        let fresh = name.parse::<weakfock::experiment::OperatorName>().unwrap().build(&model).unwrap();
        assert_eq!(back.dim(), fresh.dim());
        let (a, b): (Vec<_>, Vec<_>) = (back.triplets().collect(), fresh.triplets().collect());
        assert_eq!(a, b);
        let mut again = Vec::new();
        back.write_triplets(&mut again).unwrap();
        assert_eq!(again, fs::read(&path).unwrap());
    }
    let manifest = fs::read_to_string(out.join("manifest.json")).unwrap();
    assert!(manifest.contains("operators/h.triplet") && manifest.contains("operators/a1.triplet"));
}

#[test]
fn gap_cascade_prints_a_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = weakfock(&["gap-cascade", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("margin"));
    assert!(text.contains("PASS      gap_cascade"));
    for n in 1..=3 {
        assert!(out.join(format!("spectra/h_upper{n}.csv")).exists());
    }
}
