//! Scenario definition and its TOML configuration file.
//!
//! ```toml
//! [scenario]
//! trace = "trace.csv"        # relative to this file; .csv or .jsonl
//! beacon_period_ms = 100
//! seed = 7
//!
//! [channel]                  # any ChannelParams field, defaults otherwise
//! tx_power_dbm = 13.0
//!
//! [[rsu]]
//! station_id = 12120
//! lat = 44.6301
//! lon = 10.9452
//!
//! [[obstacle]]               # vertices in metres east/north of the RSU centroid
//! id = "library"
//! polygon = [[10.0, 5.0], [30.0, 5.0], [30.0, 20.0], [10.0, 20.0]]
//! ```
//!
//! A `[calibration]` table may also be present; it is read by the calibration
//! module and ignored here.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::geo::{EnuPoint, GeoPoint, LocalFrame};
use crate::obstacle::Obstacle;
use crate::propagation::ChannelParams;
use crate::trace::{load_trace, Trace, TraceFormat};

pub const DEFAULT_BEACON_PERIOD_MS: i64 = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rsu {
    pub station_id: u32,
    pub pos: GeoPoint,
}

/// A validated scenario. The planar frame is anchored at the RSU centroid.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub rsus: Vec<Rsu>,
    pub trace: Trace,
    pub obstacles: Vec<Obstacle>,
    pub params: ChannelParams,
    pub beacon_period_ms: i64,
    pub seed: u64,
    frame: LocalFrame,
}

impl Scenario {
    pub fn new(
        rsus: Vec<Rsu>,
        trace: Trace,
        obstacles: Vec<Obstacle>,
        params: ChannelParams,
        beacon_period_ms: i64,
        seed: u64,
    ) -> Result<Self> {
        if rsus.is_empty() {
            return Err(Error::NoRsus);
        }
        if beacon_period_ms <= 0 {
            return Err(Error::InvalidParam {
                name: "beacon_period_ms",
                reason: format!("must be positive, got {beacon_period_ms}"),
            });
        }
        let mut seen = BTreeSet::new();
        for r in &rsus {
            if !seen.insert(r.station_id) {
                return Err(Error::DuplicateStationId(r.station_id));
            }
        }
        params.validate()?;
        let frame = LocalFrame::centroid_of(rsus.iter().map(|r| &r.pos)).expect("non-empty");
        // every position must fit the planar frame
        trace.project(&frame)?;
        for r in &rsus {
            frame.to_enu(r.pos)?;
        }
        Ok(Scenario {
            rsus,
            trace,
            obstacles,
            params,
            beacon_period_ms,
            seed,
            frame,
        })
    }

    pub fn frame(&self) -> &LocalFrame {
        &self.frame
    }

    /// Same scenario with different channel parameters.
    pub fn with_params(&self, params: ChannelParams) -> Result<Self> {
        params.validate()?;
        Ok(Scenario {
            params,
            ..self.clone()
        })
    }

    pub fn rsu(&self, station_id: u32) -> Option<&Rsu> {
        self.rsus.iter().find(|r| r.station_id == station_id)
    }

    /// Beacon epochs `t0, t0 + period, ...` not past the last fix.
    pub fn beacon_times(&self) -> Vec<i64> {
        let (start, end) = (self.trace.start_ms(), self.trace.end_ms());
        let n = (end - start) / self.beacon_period_ms + 1;
        (0..n).map(|k| start + k * self.beacon_period_ms).collect()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    scenario: ScenarioSection,
    #[serde(default)]
    channel: ChannelParams,
    #[serde(default)]
    rsu: Vec<RsuEntry>,
    #[serde(default)]
    obstacle: Vec<ObstacleEntry>,
    #[serde(default)]
    #[allow(dead_code)]
    calibration: Option<toml::Table>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioSection {
    trace: PathBuf,
    #[serde(default)]
    trace_format: Option<String>,
    #[serde(default = "default_period")]
    beacon_period_ms: i64,
    #[serde(default)]
    seed: u64,
}

fn default_period() -> i64 {
    DEFAULT_BEACON_PERIOD_MS
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RsuEntry {
    station_id: u32,
    lat: f64,
    lon: f64,
    #[serde(default)]
    alt: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ObstacleEntry {
    id: String,
    polygon: Vec<[f64; 2]>,
}

/// Loads and validates a scenario file. The trace path is resolved relative
/// to the config file's directory.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let cfg: ConfigFile = toml::from_str(&text).map_err(|e| Error::Config {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;

    let base = path.parent().unwrap_or(Path::new("."));
    let trace_path = base.join(&cfg.scenario.trace);
    if !trace_path.is_file() {
        return Err(Error::MissingTrace(trace_path));
    }
    let format = match cfg.scenario.trace_format.as_deref() {
        Some("csv") => TraceFormat::Csv,
        Some("jsonl") => TraceFormat::Jsonl,
        Some(other) => {
            return Err(Error::Config {
                path: path.to_path_buf(),
                message: format!("unknown trace_format {other:?}"),
            })
        }
        None => TraceFormat::from_path(&trace_path).unwrap_or(TraceFormat::Csv),
    };
    let trace = load_trace(&trace_path, format)?;

    let rsus = cfg
        .rsu
        .into_iter()
        .map(|r| {
            Ok(Rsu {
                station_id: r.station_id,
                pos: GeoPoint::with_alt(r.lat, r.lon, r.alt)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let obstacles = cfg
        .obstacle
        .into_iter()
        .map(|o| {
            let poly = o
                .polygon
                .into_iter()
                .map(|[x, y]| EnuPoint::new(x, y))
                .collect::<Result<Vec<_>>>()?;
            Obstacle::new(o.id, poly)
        })
        .collect::<Result<Vec<_>>>()?;

    Scenario::new(
        rsus,
        trace,
        obstacles,
        cfg.channel,
        cfg.scenario.beacon_period_ms,
        cfg.scenario.seed,
    )
}
