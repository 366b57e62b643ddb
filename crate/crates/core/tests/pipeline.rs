use std::process::Command;

use proptest::prelude::*;

use nsseries::dump::read_dump;
use nsseries::experiment::{emit_report, parse_config, run_experiment, to_toml, ExperimentConfig, ExperimentReport, ReportFormat};

fn small() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::with(3, 0.1);
    cfg.grid.radius = 2.0;
    cfg.time.t_max = 0.5;
    cfg.time.steps = 8;
    cfg.initial.amplitude = 0.01;
    cfg.truncation.k_max = 6;
    cfg.calibration.corpus_size = 4;
    cfg.growth.times = vec![0.5];
    cfg.growth.directions = 1;
    // Eight steps are too coarse for the accuracy tolerances.
    cfg.checks.residual_tol = 0.5;
    cfg.checks.oracle_tol = 1e-2;
    cfg
}

#[test]
fn run_emits_json_csv_and_dump_that_read_back() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small();
    cfg.output.dir = Some(dir.path().to_path_buf());
    cfg.output.dump = true;
    let report = run_experiment(&cfg).unwrap();
    assert!(report.passed(), "{:?}", report.checks);

    emit_report(&report, dir.path(), ReportFormat::Json).unwrap();
    emit_report(&report, dir.path(), ReportFormat::Csv).unwrap();
    let back = ExperimentReport::from_json(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(back.without_timings(), report.without_timings());

    let mut rows = csv::Reader::from_path(dir.path().join("energy.csv")).unwrap();
    assert_eq!(rows.records().count(), cfg.time.steps + 1);
    let mut rows = csv::Reader::from_path(dir.path().join("term_norms.csv")).unwrap();
    assert_eq!(rows.records().count(), report.series.as_ref().unwrap().term_norms.len());

    let (grid, slices) = read_dump(std::fs::File::open(dir.path().join("solution.cnsf")).unwrap()).unwrap();
    assert_eq!(grid.fingerprint(), report.grid.fingerprint);
    assert_eq!(slices.len(), cfg.time.steps + 1);
    assert_eq!(slices[0].ncomp(), 3);
}

#[test]
fn cli_run_reports_and_sets_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("small.toml");
    std::fs::write(&path, to_toml(&small()).unwrap()).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_nsseries"))
        .args(["run", path.to_str().unwrap(), "--out", dir.path().join("out").to_str().unwrap()])
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{stdout}\n{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout.contains("PASS"));
    assert!(dir.path().join("out/report.json").exists());

    std::fs::write(&path, "d = 3\nnu = 0.1\n[grid]\nh = -1.0\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_nsseries")).args(["run", path.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 4"));
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn config_roundtrips_through_toml(
        nu in 1e-3f64..1.0,
        h in 0.1f64..1.0,
        steps in 2usize..200,
        amp in 0.0f64..5.0,
        k_max in 0usize..30,
        // TOML integers are signed 64-bit.
        seed in 0..=i64::MAX as u64,
    ) {
        let mut cfg = ExperimentConfig::with(3, nu);
        cfg.grid.h = h;
        cfg.time.steps = steps;
        cfg.initial.amplitude = amp;
        cfg.initial.seed = seed;
        cfg.truncation.k_max = k_max;
        let text = to_toml(&cfg).unwrap();
        prop_assert_eq!(parse_config(&text).unwrap(), cfg);
    }
}
