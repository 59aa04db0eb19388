//! Trace-driven V2X link simulation and field-data comparison.
//!
//! A [`Scenario`] ties a vehicle GPS trace to a set of roadside units,
//! building footprints and channel parameters. [`run_simulation`] replays the
//! trace and logs every beacon the vehicle would decode; [`ingest`] turns
//! radiotap captures plus GPS into the same record type; [`compare`] measures
//! the gap between the two and [`calibrate`] searches channel parameters that
//! close it.

pub mod calibrate;
pub mod compare;
pub mod error;
pub mod exec;
pub mod geo;
pub mod ingest;
pub mod obstacle;
pub mod propagation;
pub mod records;
pub mod scenario;
pub mod sim;
pub mod trace;

pub use calibrate::{grid_search, Axis, CalibrationResult, ParamSpace, Weights};
pub use compare::{build_report, ks_statistic, message_delta_pct, ComparisonReport};
pub use error::{Error, Result};
pub use exec::Execution;
pub use geo::{haversine_distance, EnuPoint, GeoPoint, LocalFrame};
pub use obstacle::Obstacle;
pub use propagation::{decide_reception, fspl_db, ChannelParams, ReceptionDecision};
pub use records::{ReceptionRecord, Source};
pub use scenario::{load_scenario, Rsu, Scenario};
pub use sim::{run_simulation, synthesize_field_data, SynthModel};
pub use trace::{load_trace, Trace, TraceFix, TraceFormat};
