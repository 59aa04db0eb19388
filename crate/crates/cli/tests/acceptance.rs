//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use common::*;
use v2x_reality::calibrate::{grid_search, Axis, ParamSpace};
use v2x_reality::compare::{ks_statistic, message_delta_pct};
use v2x_reality::geo::{enu_distance, haversine_distance, EnuPoint, GeoPoint, LocalFrame};
use v2x_reality::ingest::parse_pcap_bytes;
use v2x_reality::scenario::{Rsu, Scenario};
use v2x_reality::sim::{run_simulation, synthesize_field_data, SynthModel};
use v2x_reality::trace::{trace_deviation, Trace, TraceFix};
use v2x_reality::{fspl_db, load_scenario, ChannelParams, Error};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn fspl_oracle() -> Outcome {
    let f = 5.9e9;
    let one = fspl_db(1.0, f).unwrap();
    let hundred = fspl_db(100.0, f).unwrap();
    ensure((one - 47.87).abs() <= 0.01, format!("fspl(1 m) = {one}"))?;
    ensure(
        (hundred - 87.87).abs() <= 0.01,
        format!("fspl(100 m) = {hundred}"),
    )?;
    let mut rng = StdRng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let d = rng.random_range(1.0..5000.0);
        let step = fspl_db(2.0 * d, f).unwrap() - fspl_db(d, f).unwrap();
        worst = worst.max((step - 6.0206).abs());
    }
    // 20 log10(2) = 6.020599..., inside the 1e-6 band around 6.0206
    ensure(worst <= 1e-6, format!("doubling off by {worst}"))?;
    Ok(format!(
        "fspl(1 m)={one:.4} fspl(100 m)={hundred:.4} doubling max err={worst:.1e}"
    ))
}

/// Parked vehicle `d` metres north of a single RSU.
fn radial(d: f64) -> Scenario {
    let rsu = GeoPoint::new(44.63, 10.945).unwrap();
    let frame = LocalFrame::new(rsu);
    let car = frame.to_geo(EnuPoint::new(0.0, d).unwrap()).unwrap();
    let trace = Trace::new(vec![
        TraceFix { t_ms: 0, pos: car },
        TraceFix {
            t_ms: 1000,
            pos: car,
        },
    ])
    .unwrap();
    Scenario::new(
        vec![Rsu {
            station_id: 1,
            pos: rsu,
        }],
        trace,
        vec![],
        ChannelParams::default(),
        100,
        0,
    )
    .unwrap()
}

fn reception_boundary() -> Outcome {
    let heard = |d: f64| !run_simulation(&radial(d)).unwrap().is_empty();
    let (mut lo, mut hi) = (100.0, 1000.0);
    ensure(
        heard(lo) && !heard(hi),
        "bracket does not straddle the boundary",
    )?;
    while hi - lo > 1e-3 {
        let mid = 0.5 * (lo + hi);
        if heard(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    ensure((lo - 509.4).abs() <= 0.5, format!("boundary at {lo:.3} m"))?;
    Ok(format!("boundary at {lo:.3} m"))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let scenario = demo("scenario.toml");
    let scenario = scenario.to_str().unwrap();
    let mut hashes = Vec::new();
    for cmd in ["simulate", "synth"] {
        let mut pair = Vec::new();
        for run in 0..2 {
            let out = dir.path().join(format!("{cmd}{run}.jsonl"));
            let mut args = vec![cmd, "--scenario", scenario, "--out", out.to_str().unwrap()];
            if cmd == "synth" {
                args.extend([
                    "--extra-loss",
                    "5.48",
                    "--sigma",
                    "3",
                    "--drop",
                    "0.1788",
                    "--seed",
                    "9",
                ]);
            }
            let o = v2xr(&args);
            ensure(o.status.success(), format!("{cmd} failed: {}", stderr(&o)))?;
            pair.push(sha256(&out));
        }
        ensure(pair[0] == pair[1], format!("{cmd} outputs differ"))?;
        hashes.push(
            pair[0]
                .iter()
                .take(4)
                .map(|b| format!("{b:02x}"))
                .collect::<String>(),
        );
    }
    Ok(format!(
        "simulate {} / synth {} stable across runs",
        hashes[0], hashes[1]
    ))
}

fn pcap_fixtures() -> Outcome {
    let scan = parse_pcap_bytes(&pcap(127, &[(1000, 0xba), (1100, 0xb0), (1200, 0xa6)])).unwrap();
    let rssi: Vec<f64> = scan.captures.iter().map(|c| c.rssi_dbm).collect();
    ensure(rssi == [-70.0, -80.0, -90.0], format!("rssi {rssi:?}"))?;
    ensure(
        matches!(
            parse_pcap_bytes(&pcap(105, &[(0, 0xba)])),
            Err(Error::LinkType(105))
        ),
        "wrong link type not rejected",
    )?;
    let mut cut = pcap(127, &[(0, 0xba), (100, 0xb0)]);
    cut.truncate(cut.len() - 5);
    ensure(
        matches!(
            parse_pcap_bytes(&cut),
            Err(Error::TruncatedPacket { index: 1 })
        ),
        "truncation not reported",
    )?;
    Ok(format!(
        "rssi {rssi:?}, link-type and truncation errors raised"
    ))
}

fn gap_reconstruction() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n).to_str().unwrap().to_owned();
    let scenario = demo("scenario.toml");
    let scenario = scenario.to_str().unwrap();
    let o = v2xr(&["simulate", "--scenario", scenario, "--out", &p("sim.jsonl")]);
    ensure(o.status.success(), stderr(&o))?;
    let o = v2xr(&[
        "synth",
        "--scenario",
        scenario,
        "--extra-loss",
        "5.48",
        "--sigma",
        "3",
        "--drop",
        "0.1788",
        "--out",
        &p("field.jsonl"),
    ]);
    ensure(o.status.success(), stderr(&o))?;
    let n = field(&stdout(&o), "records");
    ensure(n >= 10_000.0, format!("only {n} field messages"))?;
    let o = v2xr(&[
        "compare",
        "--sim",
        &p("sim.jsonl"),
        "--field",
        &p("field.jsonl"),
        "--scenario",
        scenario,
        "--report",
        &p("report.json"),
    ]);
    ensure(o.status.success(), stderr(&o))?;
    let line = stdout(&o);
    let rssi = field(&line, "mean_rssi_delta_db");
    let msg = field(&line, "msg_delta_pct");
    ensure((rssi - 5.48).abs() <= 0.10, format!("mean delta {rssi}"))?;
    ensure((msg - 21.77).abs() <= 1.5, format!("msg delta {msg}"))?;
    Ok(format!("{} (n={n})", line.trim()))
}

fn calibration_recovery() -> Outcome {
    let start = Instant::now();
    let s = load_scenario(&demo("scenario.toml")).unwrap();
    let space = ParamSpace {
        extra_loss_db: Some(Axis::step(0.0, 10.0, 0.5).unwrap()),
        ..Default::default()
    };
    let clean = synthesize_field_data(
        &s,
        &SynthModel {
            extra_loss_db: 5.5,
            ..Default::default()
        },
    )
    .unwrap();
    let exact = grid_search(&space, &clean, &s)
        .unwrap()
        .best_params
        .extra_loss_db;
    ensure(exact == 5.5, format!("noiseless recovery gave {exact}"))?;

    let noisy = synthesize_field_data(
        &s,
        &SynthModel {
            extra_loss_db: 5.5,
            shadowing_sigma_db: 3.0,
            drop_prob: 0.0,
        },
    )
    .unwrap();
    ensure(
        noisy.len() >= 5000,
        format!("only {} noisy messages", noisy.len()),
    )?;
    let fuzzy = grid_search(&space, &noisy, &s)
        .unwrap()
        .best_params
        .extra_loss_db;
    ensure(
        (fuzzy - 5.5).abs() <= 1.0,
        format!("noisy recovery gave {fuzzy}"),
    )?;
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 30.0, format!("took {secs:.1} s"))?;
    Ok(format!(
        "noiseless {exact}, sigma 3 -> {fuzzy}, {secs:.2} s"
    ))
}

fn ks_brute(a: &[f64], b: &[f64]) -> f64 {
    let mut d: f64 = 0.0;
    for &x in a.iter().chain(b) {
        let fa = a.iter().filter(|&&v| v <= x).count() as f64 / a.len() as f64;
        let fb = b.iter().filter(|&&v| v <= x).count() as f64 / b.len() as f64;
        d = d.max((fa - fb).abs());
    }
    d
}

fn comparison_oracles() -> Outcome {
    let mut rng = StdRng::seed_from_u64(7);
    for trial in 0..1000 {
        let n = rng.random_range(1..=50);
        let m = rng.random_range(1..=50);
        // coarse support on half the trials to force ties
        let coarse = trial % 2 == 0;
        let mut draw = |k: usize| -> Vec<f64> {
            (0..k)
                .map(|_| {
                    if coarse {
                        rng.random_range(-5..5) as f64
                    } else {
                        rng.random_range(-95.0..-40.0)
                    }
                })
                .collect()
        };
        let a = draw(n);
        let b = draw(m);
        let fast = ks_statistic(&a, &b).unwrap();
        let slow = ks_brute(&a, &b);
        ensure(fast == slow, format!("trial {trial}: {fast} vs {slow}"))?;
    }
    let delta = message_delta_pct(8212, 10_000).unwrap();
    ensure(delta == -17.88, format!("message delta {delta}"))?;
    Ok("KS exact on 1000 trials, message_delta_pct(8212, 10000) = -17.88".into())
}

fn trace_properties() -> Outcome {
    let s = load_scenario(&demo("scenario.toml")).unwrap();
    let a = &s.trace;
    let same = trace_deviation(a, a).unwrap();
    ensure(same.max_m == 0.0, format!("self deviation {}", same.max_m))?;

    let frame = LocalFrame::new(a.fixes()[0].pos);
    let shifted = Trace::new(
        a.fixes()
            .iter()
            .map(|f| {
                let e = frame.to_enu(f.pos).unwrap();
                TraceFix {
                    t_ms: f.t_ms,
                    pos: frame
                        .to_geo(EnuPoint::new(e.x, e.y + 10.0).unwrap())
                        .unwrap(),
                }
            })
            .collect(),
    )
    .unwrap();
    let dev = trace_deviation(a, &shifted).unwrap();
    let off = dev
        .samples
        .iter()
        .map(|x| (x.deviation_m - 10.0).abs())
        .fold(0.0, f64::max);
    ensure(off <= 0.05, format!("offset fixture off by {off}"))?;

    let origin = GeoPoint::new(44.63, 10.945).unwrap();
    let frame = LocalFrame::new(origin);
    let mut rng = StdRng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let mut pick = || {
            frame
                .to_geo(
                    EnuPoint::new(
                        rng.random_range(-1000.0..1000.0),
                        rng.random_range(-1000.0..1000.0),
                    )
                    .unwrap(),
                )
                .unwrap()
        };
        let (p, q) = (pick(), pick());
        let planar = enu_distance(frame.to_enu(p).unwrap(), frame.to_enu(q).unwrap());
        worst = worst.max((planar - haversine_distance(p, q)).abs());
    }
    ensure(worst < 0.5, format!("ENU vs haversine {worst} m"))?;
    Ok(format!(
        "self 0, 10 m fixture max err {off:.4} m, ENU vs haversine max {worst:.4} m"
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("FSPL oracle", fspl_oracle),
        ("Reception boundary", reception_boundary),
        ("Determinism", determinism),
        ("PCAP fixtures", pcap_fixtures),
        ("Gap reconstruction", gap_reconstruction),
        ("Calibration recovery", calibration_recovery),
        ("Comparison oracles", comparison_oracles),
        ("Trace properties", trace_properties),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
