use needd_core::models::forward;
use needd_core::simlab::{
    emit_report, load_report, run_experiment, write_csv, EstimatorName, ExperimentContext,
    FrameConfig, ReportFormat, SettingInput, SimulationConfig, TargetName,
};

fn small() -> SimulationConfig {
    SimulationConfig {
        targets: vec![TargetName::Blocks, TargetName::Doppler],
        rsnr: vec![3.0, 7.0],
        n: 256,
        runs: 4,
        kmax: 128,
        seed: 42,
        frame: FrameConfig {
            jmax: 6,
            ..Default::default()
        },
        ..Default::default()
    }
}

fn csv_bytes(cfg: &SimulationConfig) -> Vec<u8> {
    let mut buf = Vec::new();
    write_csv(&run_experiment(cfg).unwrap(), &mut buf).unwrap();
    buf
}

#[test]
fn same_seed_gives_identical_csv() {
    let cfg = small();
    assert_eq!(csv_bytes(&cfg), csv_bytes(&cfg));
    let other = SimulationConfig {
        seed: 43,
        ..small()
    };
    assert_ne!(csv_bytes(&cfg), csv_bytes(&other));
}

#[test]
fn report_shape_and_seeds() {
    let report = run_experiment(&small()).unwrap();
    assert_eq!(report.cells.len(), 2 * 2 * 3);
    for c in &report.cells {
        assert!(c.is_consistent());
        assert_eq!(c.seeds.len(), 4);
        assert!(c.se_rmse >= 0.0);
    }
    let a = report.cell("blocks", 3.0, EstimatorName::Needd).unwrap();
    let b = report.cell("doppler", 3.0, EstimatorName::Needd).unwrap();
    assert!(a.seeds.iter().all(|s| !b.seeds.contains(s)));
    let mut buf = Vec::new();
    write_csv(&report, &mut buf).unwrap();
    // header plus one row per (loss, target)
    assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1 + 2 * 2);
}

#[test]
fn json_report_round_trips() {
    let report = run_experiment(&small()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    emit_report(&report, ReportFormat::Json, &path).unwrap();
    let back = load_report(&path).unwrap();
    assert_eq!(back, report);
}

#[test]
fn noise_free_in_budget_signal_is_recovered_by_every_estimator() {
    let cfg = SimulationConfig {
        runs: 1,
        epsilon: Some(0.0),
        ..small()
    };
    let ctx = ExperimentContext::new(cfg).unwrap();
    let budget = ctx.frame.budget();
    let coeffs: Vec<f64> = (0..ctx.model.len())
        .map(|k| {
            if k < budget {
                1.0 / (1.0 + k as f64).powi(2)
            } else {
                0.0
            }
        })
        .collect();
    assert!(forward(&ctx.model, &coeffs).is_ok());
    let input = SettingInput {
        label: "poly".into(),
        truth: ctx.grid.eval(&coeffs),
        coeffs,
    };
    let cells = ctx.run_setting(&input, 0, 1.0, 0).unwrap();
    assert_eq!(cells.len(), 3);
    for c in &cells {
        assert!(
            c.mean_l1 <= 1e-6 && c.mean_rmse <= 1e-6,
            "{:?}: {}",
            c.estimator,
            c.mean_rmse
        );
    }
}

#[test]
fn estimator_errors_carry_their_setting() {
    let cfg = SimulationConfig {
        epsilon: Some(0.0),
        ..small()
    };
    let ctx = ExperimentContext::new(cfg).unwrap();
    let input = SettingInput {
        label: "short".into(),
        truth: vec![0.0; 3],
        coeffs: vec![0.0; ctx.model.len()],
    };
    let err = ctx.run_setting(&input, 0, 5.0, 0).unwrap_err().to_string();
    assert!(err.contains("short"), "{err}");
}
