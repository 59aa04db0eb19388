//! Simulated versus field reception: per-RSU distributions, message-count
//! and mean-power gaps, RSSI over distance, and a two-sample KS distance.
//!
//! # Export files
//!
//! [`write_exports`] produces the inputs of the plotting scripts:
//!
//! * `violin_<id>.csv` with header
//!   `source,count,mean_rssi_dbm,std_rssi_db,p5,p25,p50,p75,p95,below_range,above_range,hist`,
//!   one row per source that has records for the RSU. `hist` holds the 70
//!   counts of the 1 dB bins covering [-100, -30) dBm, joined by `;`, lowest
//!   bin first.
//! * `scatter_<id>.csv` with header `source,t_ms,distance_m,rssi_dbm`.
//! * `deviation.csv` with header `t_ms,lat,lon,deviation_m`, only when a
//!   second trace is supplied.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::geo::haversine_distance;
use crate::records::{ReceptionRecord, Source};
use crate::scenario::Rsu;
use crate::trace::Deviation;

pub const HIST_MIN_DBM: f64 = -100.0;
pub const HIST_MAX_DBM: f64 = -30.0;
pub const HIST_BINS: usize = 70;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quantiles {
    pub p5: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub p95: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RsuStats {
    pub station_id: u32,
    pub count: usize,
    pub mean_rssi_dbm: f64,
    /// Population standard deviation.
    pub std_rssi_db: f64,
    pub quantiles: Quantiles,
    pub histogram: Vec<u64>,
    pub below_range: u64,
    pub above_range: u64,
}

/// Nearest-rank quantile of an ascending sample: element `ceil(p/100 * n)`, 1-based.
pub fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let rank = ((p / 100.0) * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

fn stats_for(station_id: u32, mut values: Vec<f64>) -> RsuStats {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    let mut histogram = vec![0u64; HIST_BINS];
    let (mut below_range, mut above_range) = (0, 0);
    for &v in &values {
        if v < HIST_MIN_DBM {
            below_range += 1;
        } else if v >= HIST_MAX_DBM {
            above_range += 1;
        } else {
            let bin = ((v - HIST_MIN_DBM).floor() as usize).min(HIST_BINS - 1);
            histogram[bin] += 1;
        }
    }
    RsuStats {
        station_id,
        count: n,
        mean_rssi_dbm: mean,
        std_rssi_db: var.sqrt(),
        quantiles: Quantiles {
            p5: nearest_rank(&values, 5.0),
            p25: nearest_rank(&values, 25.0),
            p50: nearest_rank(&values, 50.0),
            p75: nearest_rank(&values, 75.0),
            p95: nearest_rank(&values, 95.0),
        },
        histogram,
        below_range,
        above_range,
    }
}

fn group_rssi(records: &[ReceptionRecord]) -> BTreeMap<u32, Vec<f64>> {
    let mut groups: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    for r in records {
        groups.entry(r.station_id).or_default().push(r.rssi_dbm);
    }
    groups
}

/// One summary per station id present, ordered by id.
pub fn per_rsu_stats(records: &[ReceptionRecord]) -> Vec<RsuStats> {
    let groups: Vec<(u32, Vec<f64>)> = group_rssi(records).into_iter().collect();
    exec::map(Execution::default(), &groups, |(id, values)| {
        stats_for(*id, values.clone())
    })
}

/// `100 * (sim - real) / real`; negative when the field received more.
pub fn message_delta_pct(sim_count: usize, real_count: usize) -> Result<f64> {
    if real_count == 0 {
        return Err(Error::ZeroBaseline);
    }
    Ok(100.0 * (sim_count as f64 - real_count as f64) / real_count as f64)
}

/// Exact two-sample Kolmogorov-Smirnov distance by a merged sweep over both
/// sorted samples.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n || j < m {
        let x = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        while i < n && a[i] <= x {
            i += 1;
        }
        while j < m && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    Ok(d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistancePoint {
    pub station_id: u32,
    pub t_ms: i64,
    pub distance_m: f64,
    pub rssi_dbm: f64,
    pub source: Source,
}

/// Receiver-to-RSU great-circle distance for each record, ordered by
/// `(station_id, t_ms)`.
pub fn rssi_vs_distance(records: &[ReceptionRecord], rsus: &[Rsu]) -> Result<Vec<DistancePoint>> {
    let positions: BTreeMap<u32, _> = rsus.iter().map(|r| (r.station_id, r.pos)).collect();
    let mut out = records
        .iter()
        .map(|r| {
            let pos = positions
                .get(&r.station_id)
                .ok_or(Error::UnknownStation(r.station_id))?;
            Ok(DistancePoint {
                station_id: r.station_id,
                t_ms: r.t_ms,
                distance_m: haversine_distance(r.rx_pos, *pos),
                rssi_dbm: r.rssi_dbm,
                source: r.source,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    out.sort_by_key(|p| (p.station_id, p.t_ms));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RsuComparison {
    pub station_id: u32,
    pub sim_count: usize,
    pub field_count: usize,
    pub sim: Option<RsuStats>,
    pub field: Option<RsuStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub per_rsu: Vec<RsuComparison>,
    pub total_sim_count: usize,
    pub total_field_count: usize,
    pub total_msg_delta_pct: f64,
    pub mean_rssi_sim_dbm: f64,
    pub mean_rssi_field_dbm: f64,
    /// `mean_rssi_sim_dbm - mean_rssi_field_dbm`.
    pub mean_rssi_delta_db: f64,
    /// KS distance per station; 1 for stations seen by only one source.
    pub per_rsu_ks: BTreeMap<u32, f64>,
}

impl ComparisonReport {
    pub fn mean_ks(&self) -> f64 {
        if self.per_rsu_ks.is_empty() {
            return 0.0;
        }
        self.per_rsu_ks.values().sum::<f64>() / self.per_rsu_ks.len() as f64
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn mean(records: &[ReceptionRecord]) -> f64 {
    records.iter().map(|r| r.rssi_dbm).sum::<f64>() / records.len() as f64
}

pub fn build_report(
    sim: &[ReceptionRecord],
    field: &[ReceptionRecord],
    rsus: &[Rsu],
) -> Result<ComparisonReport> {
    build_report_with(sim, field, rsus, Execution::default())
}

/// Assembles per-RSU pairs for every station seen in either source plus the
/// global deltas. Every record must belong to a station in `rsus`.
pub fn build_report_with(
    sim: &[ReceptionRecord],
    field: &[ReceptionRecord],
    rsus: &[Rsu],
    mode: Execution,
) -> Result<ComparisonReport> {
    if sim.is_empty() {
        return Err(Error::EmptySource("sim"));
    }
    if field.is_empty() {
        return Err(Error::EmptySource("field"));
    }
    let known: BTreeSet<u32> = rsus.iter().map(|r| r.station_id).collect();
    if let Some(r) = sim
        .iter()
        .chain(field)
        .find(|r| !known.contains(&r.station_id))
    {
        return Err(Error::UnknownStation(r.station_id));
    }

    let sim_groups = group_rssi(sim);
    let field_groups = group_rssi(field);
    let ids: Vec<u32> = sim_groups
        .keys()
        .chain(field_groups.keys())
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    let per_rsu = exec::map(mode, &ids, |&id| {
        let s = sim_groups.get(&id);
        let f = field_groups.get(&id);
        let ks = match (s, f) {
            (Some(s), Some(f)) => ks_statistic(s, f).expect("groups are non-empty"),
            _ => 1.0,
        };
        let cmp = RsuComparison {
            station_id: id,
            sim_count: s.map_or(0, Vec::len),
            field_count: f.map_or(0, Vec::len),
            sim: s.map(|v| stats_for(id, v.clone())),
            field: f.map(|v| stats_for(id, v.clone())),
        };
        (cmp, ks)
    });

    let mean_sim = mean(sim);
    let mean_field = mean(field);
    let mut per_rsu_ks = BTreeMap::new();
    let per_rsu = per_rsu
        .into_iter()
        .map(|(cmp, ks)| {
            per_rsu_ks.insert(cmp.station_id, ks);
            cmp
        })
        .collect();
    Ok(ComparisonReport {
        per_rsu,
        total_sim_count: sim.len(),
        total_field_count: field.len(),
        total_msg_delta_pct: message_delta_pct(sim.len(), field.len())?,
        mean_rssi_sim_dbm: mean_sim,
        mean_rssi_field_dbm: mean_field,
        mean_rssi_delta_db: mean_sim - mean_field,
        per_rsu_ks,
    })
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| Error::io(path, e))
}

fn violin_row(source: Source, s: &RsuStats) -> String {
    let q = &s.quantiles;
    let hist: Vec<String> = s.histogram.iter().map(u64::to_string).collect();
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{}\n",
        source.as_str(),
        s.count,
        s.mean_rssi_dbm,
        s.std_rssi_db,
        q.p5,
        q.p25,
        q.p50,
        q.p75,
        q.p95,
        s.below_range,
        s.above_range,
        hist.join(";")
    )
}

/// Writes the per-figure CSV files into `dir` and returns their paths.
pub fn write_exports(
    dir: &Path,
    report: &ComparisonReport,
    sim: &[ReceptionRecord],
    field: &[ReceptionRecord],
    rsus: &[Rsu],
    deviation: Option<&Deviation>,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();

    for cmp in &report.per_rsu {
        let path = dir.join(format!("violin_{}.csv", cmp.station_id));
        let mut body = String::from(
            "source,count,mean_rssi_dbm,std_rssi_db,p5,p25,p50,p75,p95,below_range,above_range,hist\n",
        );
        if let Some(s) = &cmp.sim {
            body.push_str(&violin_row(Source::Sim, s));
        }
        if let Some(f) = &cmp.field {
            body.push_str(&violin_row(Source::Field, f));
        }
        create(&path)?
            .write_all(body.as_bytes())
            .map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }

    let mut all = rssi_vs_distance(sim, rsus)?;
    all.extend(rssi_vs_distance(field, rsus)?);
    all.sort_by_key(|p| (p.station_id, p.source, p.t_ms));
    let mut by_id: BTreeMap<u32, String> = BTreeMap::new();
    for p in &all {
        by_id
            .entry(p.station_id)
            .or_insert_with(|| String::from("source,t_ms,distance_m,rssi_dbm\n"))
            .push_str(&format!(
                "{},{},{},{}\n",
                p.source.as_str(),
                p.t_ms,
                p.distance_m,
                p.rssi_dbm
            ));
    }
    for (id, body) in by_id {
        let path = dir.join(format!("scatter_{id}.csv"));
        create(&path)?
            .write_all(body.as_bytes())
            .map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }

    if let Some(dev) = deviation {
        let path = dir.join("deviation.csv");
        let mut body = String::from("t_ms,lat,lon,deviation_m\n");
        for s in &dev.samples {
            body.push_str(&format!(
                "{},{},{},{}\n",
                s.t_ms,
                s.pos.lat(),
                s.pos.lon(),
                s.deviation_m
            ));
        }
        create(&path)?
            .write_all(body.as_bytes())
            .map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::GeoPoint;
    use proptest::prelude::*;

    fn rec(id: u32, t_ms: i64, rssi: f64, source: Source) -> ReceptionRecord {
        ReceptionRecord {
            t_ms,
            station_id: id,
            rx_pos: GeoPoint::new(44.63, 10.945).unwrap(),
            rssi_dbm: rssi,
            source,
        }
    }

    fn rsu(id: u32) -> Rsu {
        Rsu {
            station_id: id,
            pos: GeoPoint::new(44.63, 10.945).unwrap(),
        }
    }

    /// ECDF difference evaluated at every sample point.
    fn ks_brute(a: &[f64], b: &[f64]) -> f64 {
        let (n, m) = (a.len(), b.len());
        let mut d: f64 = 0.0;
        for &x in a.iter().chain(b) {
            let i = a.iter().filter(|&&v| v <= x).count();
            let j = b.iter().filter(|&&v| v <= x).count();
            d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
        }
        d
    }

    #[test]
    fn constant_sample() {
        let recs: Vec<_> = (0..10).map(|t| rec(1, t, -80.0, Source::Sim)).collect();
        let s = &per_rsu_stats(&recs)[0];
        assert_eq!(s.count, 10);
        assert_eq!(s.mean_rssi_dbm, -80.0);
        assert_eq!(s.std_rssi_db, 0.0);
        assert_eq!(s.quantiles.p5, -80.0);
        assert_eq!(s.quantiles.p95, -80.0);
        assert_eq!(s.histogram[20], 10);
    }

    #[test]
    fn three_values() {
        let recs = [-70.0, -80.0, -90.0].map(|r| rec(1, 0, r, Source::Sim));
        let s = &per_rsu_stats(&recs)[0];
        assert_eq!(s.mean_rssi_dbm, -80.0);
        assert_eq!(s.quantiles.p50, -80.0);
        assert_eq!(s.quantiles.p5, -90.0);
        assert_eq!(s.quantiles.p95, -70.0);
        assert!(per_rsu_stats(&[]).is_empty());
    }

    #[test]
    fn histogram_edges() {
        let recs = [-100.0, -30.0, -100.5, -30.01, -65.5].map(|r| rec(1, 0, r, Source::Sim));
        let s = &per_rsu_stats(&recs)[0];
        assert_eq!(s.histogram[0], 1);
        assert_eq!(s.histogram[69], 1);
        assert_eq!(s.histogram[34], 1);
        assert_eq!((s.below_range, s.above_range), (1, 1));
        assert_eq!(
            s.histogram.iter().sum::<u64>() + s.below_range + s.above_range,
            5
        );
    }

    #[test]
    fn deltas() {
        assert_eq!(message_delta_pct(10_000, 10_000).unwrap(), 0.0);
        assert_eq!(message_delta_pct(8212, 10_000).unwrap(), -17.88);
        assert!((message_delta_pct(118, 100).unwrap() - 18.0).abs() < 1e-12);
        assert!(matches!(message_delta_pct(1, 0), Err(Error::ZeroBaseline)));
    }

    #[test]
    fn ks_examples() {
        assert_eq!(
            ks_statistic(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(),
            0.0
        );
        assert_eq!(ks_statistic(&[1.0, 2.0], &[5.0, 6.0, 7.0]).unwrap(), 1.0);
        let d = ks_statistic(&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0]).unwrap();
        assert_eq!(d, ks_brute(&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0]));
        assert!((d - 1.0 / 3.0).abs() < 1e-15);
        assert!(matches!(ks_statistic(&[], &[1.0]), Err(Error::EmptySample)));
    }

    #[test]
    fn distance_lookup() {
        let pts = rssi_vs_distance(&[rec(1, 5, -40.0, Source::Sim)], &[rsu(1)]).unwrap();
        assert_eq!(pts[0].distance_m, 0.0);
        assert!(matches!(
            rssi_vs_distance(&[rec(2, 5, -40.0, Source::Sim)], &[rsu(1)]),
            Err(Error::UnknownStation(2))
        ));
    }

    #[test]
    fn self_comparison() {
        let sim: Vec<_> = (0..50)
            .map(|i| rec(1 + (i % 3) as u32, i, -60.0 - i as f64 * 0.3, Source::Sim))
            .collect();
        let field: Vec<_> = sim
            .iter()
            .map(|r| ReceptionRecord {
                source: Source::Field,
                ..*r
            })
            .collect();
        let rep = build_report(&sim, &field, &[rsu(1), rsu(2), rsu(3)]).unwrap();
        assert_eq!(rep.total_msg_delta_pct, 0.0);
        assert_eq!(rep.mean_rssi_delta_db, 0.0);
        assert!(rep.per_rsu_ks.values().all(|&d| d == 0.0));
        assert_eq!(rep.mean_ks(), 0.0);
    }

    #[test]
    fn one_sided_station() {
        let sim = vec![rec(1, 0, -70.0, Source::Sim)];
        let field = vec![
            rec(1, 0, -75.0, Source::Field),
            rec(2, 0, -80.0, Source::Field),
        ];
        let rep = build_report(&sim, &field, &[rsu(1), rsu(2)]).unwrap();
        let two = rep.per_rsu.iter().find(|c| c.station_id == 2).unwrap();
        assert_eq!(two.sim_count, 0);
        assert!(two.sim.is_none());
        assert_eq!(rep.per_rsu_ks[&2], 1.0);
        assert_eq!(
            rep.mean_rssi_delta_db,
            rep.mean_rssi_sim_dbm - rep.mean_rssi_field_dbm
        );
        assert!(matches!(
            build_report(&sim, &field, &[rsu(1)]),
            Err(Error::UnknownStation(2))
        ));
        assert!(matches!(
            build_report(&[], &field, &[rsu(1)]),
            Err(Error::EmptySource("sim"))
        ));
    }

    proptest! {
        #[test]
        fn ks_matches_brute_force(
            a in prop::collection::vec(-20i32..20, 1..50),
            b in prop::collection::vec(-20i32..20, 1..50),
        ) {
            // small integer support forces plenty of ties
            let a: Vec<f64> = a.into_iter().map(f64::from).collect();
            let b: Vec<f64> = b.into_iter().map(f64::from).collect();
            let d = ks_statistic(&a, &b).unwrap();
            prop_assert_eq!(d, ks_brute(&a, &b));
            prop_assert_eq!(d, ks_statistic(&b, &a).unwrap());
            prop_assert!((0.0..=1.0).contains(&d));
        }

        #[test]
        fn delta_sign(a in 0usize..100_000, b in 1usize..100_000) {
            let d = message_delta_pct(a, b).unwrap();
            prop_assert_eq!(d.partial_cmp(&0.0), a.partial_cmp(&b));
            prop_assert_eq!(message_delta_pct(b, b).unwrap(), 0.0);
        }

        #[test]
        fn counts_partition(ids in prop::collection::vec(0u32..6, 0..200)) {
            let recs: Vec<_> = ids.iter().enumerate().map(|(i, &id)| rec(id, i as i64, -70.0, Source::Sim)).collect();
            let total: usize = per_rsu_stats(&recs).iter().map(|s| s.count).sum();
            prop_assert_eq!(total, recs.len());
        }

        #[test]
        fn quantiles_ordered(v in prop::collection::vec(-110.0f64..-20.0, 1..100)) {
            let recs: Vec<_> = v.iter().map(|&r| rec(1, 0, r, Source::Sim)).collect();
            let s = &per_rsu_stats(&recs)[0];
            let q = s.quantiles;
            prop_assert!(q.p5 <= q.p25 && q.p25 <= q.p50 && q.p50 <= q.p75 && q.p75 <= q.p95);
            prop_assert_eq!(s.count as u64, s.histogram.iter().sum::<u64>() + s.below_range + s.above_range);
        }

        #[test]
        fn mean_delta_translation(shift in 0.0f64..20.0) {
            let sim: Vec<_> = (0..20).map(|i| rec(1, i, -60.0 - i as f64, Source::Sim)).collect();
            let field: Vec<_> = (0..15).map(|i| rec(1, i, -65.0 - i as f64 * 1.5, Source::Field)).collect();
            let shifted: Vec<_> = field.iter().map(|r| ReceptionRecord { rssi_dbm: r.rssi_dbm - shift, ..*r }).collect();
            let base = build_report(&sim, &field, &[rsu(1)]).unwrap().mean_rssi_delta_db;
            let moved = build_report(&sim, &shifted, &[rsu(1)]).unwrap().mean_rssi_delta_db;
            prop_assert!((moved - base - shift).abs() < 1e-9);
        }
    }
}
