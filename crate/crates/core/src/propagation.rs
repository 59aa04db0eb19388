//! Free-space channel, building losses and the receiver decision.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{enu_distance, EnuPoint};
use crate::obstacle::Obstacle;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Links shorter than this are evaluated at this distance.
pub const NEAR_FIELD_CLAMP_M: f64 = 1.0;

/// Physical-layer constants shared by every link in a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelParams {
    pub tx_power_dbm: f64,
    pub freq_hz: f64,
    pub sensitivity_dbm: f64,
    pub noise_floor_dbm: f64,
    /// Loss per boundary crossing of a building footprint.
    pub wall_loss_db: f64,
    /// Loss per metre travelled inside a building footprint.
    pub interior_loss_db_per_m: f64,
    pub min_snr_db: f64,
    /// Flat attenuation on every link; the calibration knob.
    pub extra_loss_db: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            tx_power_dbm: 13.0,
            freq_hz: 5.9e9,
            sensitivity_dbm: -89.0,
            noise_floor_dbm: -98.0,
            wall_loss_db: 9.0,
            interior_loss_db_per_m: 0.4,
            min_snr_db: 4.0,
            extra_loss_db: 0.0,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("tx_power_dbm", self.tx_power_dbm),
            ("freq_hz", self.freq_hz),
            ("sensitivity_dbm", self.sensitivity_dbm),
            ("noise_floor_dbm", self.noise_floor_dbm),
            ("wall_loss_db", self.wall_loss_db),
            ("interior_loss_db_per_m", self.interior_loss_db_per_m),
            ("min_snr_db", self.min_snr_db),
            ("extra_loss_db", self.extra_loss_db),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::InvalidParam {
                    name,
                    reason: "must be finite".into(),
                });
            }
        }
        if self.freq_hz <= 0.0 {
            return Err(Error::InvalidFrequency(self.freq_hz));
        }
        for (name, v) in [
            ("wall_loss_db", self.wall_loss_db),
            ("interior_loss_db_per_m", self.interior_loss_db_per_m),
        ] {
            if v < 0.0 {
                return Err(Error::InvalidParam {
                    name,
                    reason: format!("must be non-negative, got {v}"),
                });
            }
        }
        if self.sensitivity_dbm <= self.noise_floor_dbm {
            log::warn!(
                "sensitivity {} dBm is at or below the noise floor {} dBm; reception is noise-limited",
                self.sensitivity_dbm,
                self.noise_floor_dbm
            );
        }
        Ok(())
    }
}

/// Free-space path loss in dB. Distances under 1 m are clamped to 1 m.
pub fn fspl_db(distance_m: f64, freq_hz: f64) -> Result<f64> {
    if !freq_hz.is_finite() || freq_hz <= 0.0 {
        return Err(Error::InvalidFrequency(freq_hz));
    }
    if !distance_m.is_finite() {
        return Err(Error::NonFinite("distance"));
    }
    let d = distance_m.max(NEAR_FIELD_CLAMP_M);
    let constant = 20.0 * (4.0 * std::f64::consts::PI / SPEED_OF_LIGHT).log10();
    Ok(20.0 * d.log10() + 20.0 * freq_hz.log10() + constant)
}

/// Wall and interior losses of every obstacle the link passes through.
pub fn obstacle_loss_db(
    tx: EnuPoint,
    rx: EnuPoint,
    obstacles: &[Obstacle],
    params: &ChannelParams,
) -> f64 {
    // evaluate in a fixed endpoint order so the loss is exactly symmetric
    let (a, b) = if (tx.x, tx.y) <= (rx.x, rx.y) {
        (tx, rx)
    } else {
        (rx, tx)
    };
    let mut loss = 0.0;
    for o in obstacles {
        let c = o.crossing(a, b);
        if c.walls > 0 || c.interior_m > 0.0 {
            loss +=
                params.wall_loss_db * c.walls as f64 + params.interior_loss_db_per_m * c.interior_m;
        }
    }
    loss
}

/// Received power in dBm for an isotropic link between two planar positions.
pub fn rssi_dbm(
    tx: EnuPoint,
    rx: EnuPoint,
    obstacles: &[Obstacle],
    params: &ChannelParams,
) -> Result<f64> {
    let path = fspl_db(enu_distance(tx, rx), params.freq_hz)?;
    let shadow = obstacle_loss_db(tx, rx, obstacles, params);
    Ok(params.tx_power_dbm - path - shadow - params.extra_loss_db)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReceptionReason {
    Ok,
    BelowSensitivity,
    BelowMinSnr,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReceptionDecision {
    pub received: bool,
    pub rssi_dbm: f64,
    pub snr_db: f64,
    pub reason: ReceptionReason,
}

/// Sensitivity first, then SNR against the noise floor; both thresholds inclusive.
pub fn decide_reception(rssi_dbm: f64, params: &ChannelParams) -> ReceptionDecision {
    let snr_db = rssi_dbm - params.noise_floor_dbm;
    let reason = if rssi_dbm.is_nan() || rssi_dbm < params.sensitivity_dbm {
        ReceptionReason::BelowSensitivity
    } else if snr_db.is_nan() || snr_db < params.min_snr_db {
        ReceptionReason::BelowMinSnr
    } else {
        ReceptionReason::Ok
    };
    ReceptionDecision {
        received: reason == ReceptionReason::Ok,
        rssi_dbm,
        snr_db,
        reason,
    }
}
