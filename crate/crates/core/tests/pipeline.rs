use std::path::PathBuf;

use v2x_reality::calibrate::{grid_search, Axis, ParamSpace};
use v2x_reality::compare::{build_report, write_exports};
use v2x_reality::records::{load_records, save_records, RecordFormat, Source};
use v2x_reality::sim::{run_simulation, synthesize_field_data, SynthModel};
use v2x_reality::trace::trace_deviation;
use v2x_reality::{load_scenario, Scenario};

fn demo(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../demo")
        .join(name)
}

fn scenario() -> Scenario {
    load_scenario(&demo("scenario.toml")).unwrap()
}

#[test]
fn demo_scenario_loads() {
    let s = scenario();
    assert_eq!(s.rsus.len(), 17);
    assert_eq!(s.obstacles.len(), 1);
    let field = load_scenario(&demo("field.toml")).unwrap();
    assert!(field.trace.span_ms() > s.trace.span_ms());
}

#[test]
fn self_comparison_is_zero() {
    let s = scenario();
    let sim = run_simulation(&s).unwrap();
    let rep = build_report(&sim, &sim, &s.rsus).unwrap();
    assert_eq!(rep.total_msg_delta_pct, 0.0);
    assert_eq!(rep.mean_rssi_delta_db, 0.0);
    assert_eq!(rep.mean_ks(), 0.0);
}

#[test]
fn records_survive_disk_in_both_formats() {
    let s = scenario();
    let sim = run_simulation(&s).unwrap();
    let dir = tempfile::tempdir().unwrap();
    for (name, fmt) in [
        ("a.jsonl", RecordFormat::Jsonl),
        ("a.csv", RecordFormat::Csv),
    ] {
        let path = dir.path().join(name);
        save_records(&path, &sim, fmt).unwrap();
        assert_eq!(load_records(&path, Source::Field).unwrap(), sim);
    }
}

#[test]
fn bundled_field_set_points_the_right_way() {
    let s = scenario();
    let sim = run_simulation(&s).unwrap();
    let field = load_records(&demo("field_records.jsonl"), Source::Field).unwrap();
    let rep = build_report(&sim, &field, &s.rsus).unwrap();
    assert!(rep.total_msg_delta_pct < 0.0);
    assert!(rep.mean_rssi_delta_db > 0.0);
}

#[test]
fn exports_have_expected_shape() {
    let s = scenario();
    let sim = run_simulation(&s).unwrap();
    let field = synthesize_field_data(
        &s,
        &SynthModel {
            extra_loss_db: 4.0,
            shadowing_sigma_db: 2.0,
            drop_prob: 0.1,
        },
    )
    .unwrap();
    let rep = build_report(&sim, &field, &s.rsus).unwrap();
    let other = load_scenario(&demo("field.toml")).unwrap().trace;
    let dev = trace_deviation(&s.trace, &other).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let written = write_exports(dir.path(), &rep, &sim, &field, &s.rsus, Some(&dev)).unwrap();
    assert_eq!(written.len(), 17 * 2 + 1);

    let violin = std::fs::read_to_string(dir.path().join("violin_12101.csv")).unwrap();
    let lines: Vec<&str> = violin.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("sim,") && lines[2].starts_with("field,"));
    let hist = lines[1].rsplit(',').next().unwrap();
    assert_eq!(hist.split(';').count(), 70);

    let scatter = std::fs::read_to_string(dir.path().join("scatter_12101.csv")).unwrap();
    assert_eq!(
        scatter.lines().count(),
        1 + rep.per_rsu[0].sim_count + rep.per_rsu[0].field_count
    );

    let deviation = std::fs::read_to_string(dir.path().join("deviation.csv")).unwrap();
    assert_eq!(deviation.lines().next(), Some("t_ms,lat,lon,deviation_m"));
    let max: f64 = deviation
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap())
        .fold(0.0, f64::max);
    assert!((max - dev.max_m).abs() < 1e-9);
    // the field line is pushed 5 to 18 m outward
    assert!(dev.max_m > 15.0 && dev.max_m < 19.0, "{}", dev.max_m);
}

#[test]
fn calibration_recovers_noisy_offset() {
    let s = scenario();
    let field = synthesize_field_data(
        &s,
        &SynthModel {
            extra_loss_db: 6.5,
            shadowing_sigma_db: 3.0,
            drop_prob: 0.0,
        },
    )
    .unwrap();
    assert!(field.len() >= 5000);
    let space = ParamSpace {
        extra_loss_db: Some(Axis::step(0.0, 10.0, 0.5).unwrap()),
        ..Default::default()
    };
    let res = grid_search(&space, &field, &s).unwrap();
    assert!(
        (res.best_params.extra_loss_db - 6.5).abs() <= 1.0,
        "{}",
        res.best_params.extra_loss_db
    );
}
