//! Grid search over channel parameters against a field data set.
//!
//! The search space lives in a `[calibration]` TOML table, either in its own
//! file or inside a scenario file:
//!
//! ```toml
//! [calibration]
//! budget = 10000
//! extra_loss_db = { min = 0.0, max = 10.0, step = 0.5 }
//! min_snr_db = { min = 2.0, max = 6.0, points = 5 }
//!
//! [calibration.weights]
//! rssi = 1.0
//! msg = 1.0
//! ks = 1.0
//! ```
//!
//! Axes left out keep the scenario's value.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::compare::build_report;
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::propagation::ChannelParams;
use crate::records::ReceptionRecord;
use crate::scenario::Scenario;
use crate::sim::run_simulation_with;

pub const DEFAULT_BUDGET: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    values: Vec<f64>,
}

impl Axis {
    /// `points` evenly spaced values from `min` to `max` inclusive.
    pub fn points(min: f64, max: f64, points: usize) -> Result<Self> {
        check_range(min, max)?;
        if points == 0 || (points == 1 && min != max) {
            return Err(Error::InvalidParam {
                name: "points",
                reason: format!("{points} points cannot span [{min}, {max}]"),
            });
        }
        if points == 1 {
            return Ok(Axis { values: vec![min] });
        }
        let span = max - min;
        let values = (0..points)
            .map(|i| min + span * i as f64 / (points - 1) as f64)
            .collect();
        Ok(Axis { values })
    }

    /// `min, min + step, ...` up to `max`.
    pub fn step(min: f64, max: f64, step: f64) -> Result<Self> {
        check_range(min, max)?;
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::InvalidParam {
                name: "step",
                reason: format!("must be positive, got {step}"),
            });
        }
        let n = ((max - min) / step + 1e-9).floor() as usize + 1;
        Ok(Axis {
            values: (0..n).map(|i| min + step * i as f64).collect(),
        })
    }

    pub fn fixed(value: f64) -> Self {
        Axis {
            values: vec![value],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn check_range(min: f64, max: f64) -> Result<()> {
    if !(min.is_finite() && max.is_finite() && min <= max) {
        return Err(Error::InvalidParam {
            name: "axis",
            reason: format!("bad range [{min}, {max}]"),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Weights {
    pub rssi: f64,
    pub msg: f64,
    pub ks: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Weights {
            rssi: 1.0,
            msg: 1.0,
            ks: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamSpace {
    pub tx_power_dbm: Option<Axis>,
    pub extra_loss_db: Option<Axis>,
    pub sensitivity_dbm: Option<Axis>,
    pub min_snr_db: Option<Axis>,
    pub weights: Weights,
    pub budget: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AxisEntry {
    min: f64,
    max: f64,
    step: Option<f64>,
    points: Option<usize>,
}

impl AxisEntry {
    fn build(self) -> Result<Axis> {
        match (self.step, self.points) {
            (Some(step), None) => Axis::step(self.min, self.max, step),
            (None, Some(points)) => Axis::points(self.min, self.max, points),
            _ => Err(Error::InvalidParam {
                name: "axis",
                reason: "give exactly one of step or points".into(),
            }),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpaceEntry {
    tx_power_dbm: Option<AxisEntry>,
    extra_loss_db: Option<AxisEntry>,
    sensitivity_dbm: Option<AxisEntry>,
    min_snr_db: Option<AxisEntry>,
    #[serde(default)]
    weights: Weights,
    budget: Option<usize>,
}

impl ParamSpace {
    /// Reads the `[calibration]` table of a TOML document.
    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let mut doc: toml::Table = toml::from_str(text).map_err(|e| e.to_string())?;
        let table = doc
            .remove("calibration")
            .ok_or_else(|| "no [calibration] table".to_string())?;
        let entry: SpaceEntry = table
            .try_into()
            .map_err(|e: toml::de::Error| e.to_string())?;
        let axis = |a: Option<AxisEntry>| a.map(AxisEntry::build).transpose();
        Ok(ParamSpace {
            tx_power_dbm: axis(entry.tx_power_dbm).map_err(|e| e.to_string())?,
            extra_loss_db: axis(entry.extra_loss_db).map_err(|e| e.to_string())?,
            sensitivity_dbm: axis(entry.sensitivity_dbm).map_err(|e| e.to_string())?,
            min_snr_db: axis(entry.min_snr_db).map_err(|e| e.to_string())?,
            weights: entry.weights,
            budget: entry.budget,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|message| Error::Config {
            path: path.to_path_buf(),
            message,
        })
    }

    pub fn budget(&self) -> usize {
        self.budget.unwrap_or(DEFAULT_BUDGET)
    }

    fn axes(&self, base: &ChannelParams) -> [Axis; 4] {
        let pick = |a: &Option<Axis>, v: f64| a.clone().unwrap_or_else(|| Axis::fixed(v));
        [
            pick(&self.tx_power_dbm, base.tx_power_dbm),
            pick(&self.extra_loss_db, base.extra_loss_db),
            pick(&self.sensitivity_dbm, base.sensitivity_dbm),
            pick(&self.min_snr_db, base.min_snr_db),
        ]
    }

    /// Number of grid points, saturating on overflow.
    pub fn size(&self, base: &ChannelParams) -> usize {
        self.axes(base)
            .iter()
            .fold(1usize, |acc, a| acc.saturating_mul(a.len()))
    }

    /// Every grid point in lexicographic axis order: tx power, extra loss,
    /// sensitivity, min SNR, with the last varying fastest.
    pub fn grid(&self, base: &ChannelParams) -> Vec<ChannelParams> {
        let [tx, extra, sens, snr] = self.axes(base);
        let mut out = Vec::with_capacity(self.size(base));
        for &t in tx.values() {
            for &e in extra.values() {
                for &s in sens.values() {
                    for &m in snr.values() {
                        out.push(ChannelParams {
                            tx_power_dbm: t,
                            extra_loss_db: e,
                            sensitivity_dbm: s,
                            min_snr_db: m,
                            ..*base
                        });
                    }
                }
            }
        }
        out
    }
}

/// `w.rssi * |mean delta| + w.msg * |msg delta %| / 100 + w.ks * mean KS`.
/// `None` when the parameters produce no simulated reception at all.
pub fn objective(
    params: &ChannelParams,
    field: &[ReceptionRecord],
    scenario: &Scenario,
    weights: &Weights,
) -> Result<Option<f64>> {
    objective_with(params, field, scenario, weights, Execution::default())
}

fn objective_with(
    params: &ChannelParams,
    field: &[ReceptionRecord],
    scenario: &Scenario,
    weights: &Weights,
    mode: Execution,
) -> Result<Option<f64>> {
    if field.is_empty() {
        return Err(Error::EmptySource("field"));
    }
    let s = scenario.with_params(*params)?;
    let sim = run_simulation_with(&s, mode)?;
    if sim.is_empty() {
        return Ok(None);
    }
    let rep = build_report(&sim, field, &s.rsus)?;
    Ok(Some(
        weights.rssi * rep.mean_rssi_delta_db.abs()
            + weights.msg * rep.total_msg_delta_pct.abs() / 100.0
            + weights.ks * rep.mean_ks(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScoredPoint {
    pub tx_power_dbm: f64,
    pub extra_loss_db: f64,
    pub sensitivity_dbm: f64,
    pub min_snr_db: f64,
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationResult {
    pub best_params: ChannelParams,
    pub best_score: f64,
    pub evaluations: usize,
    pub score_table: Vec<ScoredPoint>,
}

impl CalibrationResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result serializes")
    }
}

pub fn grid_search(
    space: &ParamSpace,
    field: &[ReceptionRecord],
    scenario: &Scenario,
) -> Result<CalibrationResult> {
    grid_search_with(space, field, scenario, Execution::default())
}

/// Exhaustive search. The grid is checked against the budget before anything
/// is simulated; ties go to the earliest point in grid order.
pub fn grid_search_with(
    space: &ParamSpace,
    field: &[ReceptionRecord],
    scenario: &Scenario,
    mode: Execution,
) -> Result<CalibrationResult> {
    let base = scenario.params;
    let points = space.size(&base);
    let budget = space.budget();
    if points > budget {
        return Err(Error::BudgetExceeded { points, budget });
    }
    if field.is_empty() {
        return Err(Error::EmptySource("field"));
    }
    let grid = space.grid(&base);
    let scores = exec::map(mode, &grid, |p| {
        objective_with(p, field, scenario, &space.weights, Execution::Sequential)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let mut best: Option<(usize, f64)> = None;
    for (i, s) in scores.iter().enumerate() {
        if let Some(s) = *s {
            if best.is_none_or(|(_, b)| s < b) {
                best = Some((i, s));
            }
        }
    }
    let (best_idx, best_score) = best.ok_or(Error::NoFeasiblePoint)?;
    let score_table = grid
        .iter()
        .zip(&scores)
        .map(|(p, &score)| ScoredPoint {
            tx_power_dbm: p.tx_power_dbm,
            extra_loss_db: p.extra_loss_db,
            sensitivity_dbm: p.sensitivity_dbm,
            min_snr_db: p.min_snr_db,
            score,
        })
        .collect();
    Ok(CalibrationResult {
        best_params: grid[best_idx],
        best_score,
        evaluations: grid.len(),
        score_table,
    })
}
