//! Beacon-by-beacon link simulation and the synthetic field-data generator.
//!
//! Every RSU beacons at the same epochs `t0 + k * period` over the trace span.
//! The vehicle position at each epoch is interpolated linearly in the
//! scenario's planar frame.
//!
//! The synthetic generator draws from one ChaCha8 stream per RSU, keyed by
//! `(scenario seed, station id)`. For every beacon it consumes three uniform
//! `f64` draws in this order: the drop test `u0 < drop_prob`, then a
//! Box-Muller normal `z = sqrt(-2 ln(1 - u1)) * cos(2 pi u2)`. The draws are
//! consumed whether or not the message survives, so outputs do not depend on
//! thread scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::geo::{EnuPoint, GeoPoint};
use crate::propagation::{decide_reception, rssi_dbm};
use crate::records::{ReceptionRecord, Source};
use crate::scenario::Scenario;

/// Degradations applied on top of the ideal channel to imitate field data.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SynthModel {
    pub extra_loss_db: f64,
    pub shadowing_sigma_db: f64,
    pub drop_prob: f64,
}

impl SynthModel {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.drop_prob) {
            return Err(Error::DropProbability(self.drop_prob));
        }
        if !self.extra_loss_db.is_finite() {
            return Err(Error::InvalidParam {
                name: "extra_loss_db",
                reason: "must be finite".into(),
            });
        }
        if !self.shadowing_sigma_db.is_finite() || self.shadowing_sigma_db < 0.0 {
            return Err(Error::InvalidParam {
                name: "shadowing_sigma_db",
                reason: format!(
                    "must be finite and non-negative, got {}",
                    self.shadowing_sigma_db
                ),
            });
        }
        Ok(())
    }
}

struct Epoch {
    t_ms: i64,
    enu: EnuPoint,
    geo: GeoPoint,
}

fn vehicle_epochs(s: &Scenario, mode: Execution) -> Result<Vec<Epoch>> {
    let track = s.trace.project(s.frame())?;
    let times = s.beacon_times();
    exec::map(mode, &times, |&t_ms| {
        let enu = track.position_at(t_ms).expect("beacon inside trace span");
        Ok(Epoch {
            t_ms,
            enu,
            geo: s.frame().to_geo(enu)?,
        })
    })
    .into_iter()
    .collect()
}

fn merge(per_rsu: Vec<Result<Vec<ReceptionRecord>>>) -> Result<Vec<ReceptionRecord>> {
    let mut out = Vec::new();
    for chunk in per_rsu {
        out.extend(chunk?);
    }
    out.sort_by_key(|r| (r.t_ms, r.station_id));
    Ok(out)
}

pub fn run_simulation(s: &Scenario) -> Result<Vec<ReceptionRecord>> {
    run_simulation_with(s, Execution::default())
}

/// Records every beacon that passes the receiver decision, sorted by
/// `(t_ms, station_id)`.
pub fn run_simulation_with(s: &Scenario, mode: Execution) -> Result<Vec<ReceptionRecord>> {
    let epochs = vehicle_epochs(s, mode)?;
    let per_rsu = exec::map(mode, &s.rsus, |rsu| {
        let tx = s.frame().to_enu(rsu.pos)?;
        let mut out = Vec::new();
        for e in &epochs {
            let rssi = rssi_dbm(tx, e.enu, &s.obstacles, &s.params)?;
            if decide_reception(rssi, &s.params).received {
                out.push(ReceptionRecord {
                    t_ms: e.t_ms,
                    station_id: rsu.station_id,
                    rx_pos: e.geo,
                    rssi_dbm: rssi,
                    source: Source::Sim,
                });
            }
        }
        Ok(out)
    });
    merge(per_rsu)
}

pub fn synthesize_field_data(s: &Scenario, model: &SynthModel) -> Result<Vec<ReceptionRecord>> {
    synthesize_field_data_with(s, model, Execution::default())
}

/// Same beacon schedule as [`run_simulation`], with extra loss, Gaussian
/// shadowing and random drops applied before the receiver decision.
pub fn synthesize_field_data_with(
    s: &Scenario,
    model: &SynthModel,
    mode: Execution,
) -> Result<Vec<ReceptionRecord>> {
    model.validate()?;
    let epochs = vehicle_epochs(s, mode)?;
    let per_rsu = exec::map(mode, &s.rsus, |rsu| {
        let tx = s.frame().to_enu(rsu.pos)?;
        let mut rng = rsu_stream(s.seed, rsu.station_id);
        let mut out = Vec::new();
        for e in &epochs {
            let u_drop: f64 = rng.random();
            let z = standard_normal(&mut rng);
            if u_drop < model.drop_prob {
                continue;
            }
            let ideal = rssi_dbm(tx, e.enu, &s.obstacles, &s.params)?;
            let rssi = ideal - model.extra_loss_db + model.shadowing_sigma_db * z;
            if decide_reception(rssi, &s.params).received {
                out.push(ReceptionRecord {
                    t_ms: e.t_ms,
                    station_id: rsu.station_id,
                    rx_pos: e.geo,
                    rssi_dbm: rssi,
                    source: Source::Field,
                });
            }
        }
        Ok(out)
    });
    merge(per_rsu)
}

fn rsu_stream(seed: u64, station_id: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::from(station_id));
    rng
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}
