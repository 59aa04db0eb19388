//! GPS traces: loading, fixed-rate resampling, per-step speeds and the
//! deviation between two trajectories.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{enu_distance, haversine_distance, EnuPoint, GeoPoint, LocalFrame};

/// Largest spacing allowed between consecutive fixes.
pub const MAX_FIX_GAP_MS: i64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceFix {
    /// Milliseconds since the Unix epoch, UTC.
    pub t_ms: i64,
    pub pos: GeoPoint,
}

/// Time-ordered fixes with strictly increasing timestamps and no gap over 10 s.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    fixes: Vec<TraceFix>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceFormat {
    Csv,
    Jsonl,
}

impl TraceFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "csv" => Some(TraceFormat::Csv),
            "jsonl" | "ndjson" => Some(TraceFormat::Jsonl),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpeedSample {
    pub t_ms: i64,
    /// Metres per second.
    pub speed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeviationSample {
    pub t_ms: i64,
    pub pos: GeoPoint,
    pub deviation_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Deviation {
    pub samples: Vec<DeviationSample>,
    pub max_m: f64,
    pub median_m: f64,
}

impl Trace {
    /// Sorts the fixes by time and validates spacing.
    pub fn new(mut fixes: Vec<TraceFix>) -> Result<Self> {
        if fixes.is_empty() {
            return Err(Error::EmptyTrace);
        }
        fixes.sort_by_key(|f| f.t_ms);
        for w in fixes.windows(2) {
            let (a, b) = (w[0].t_ms, w[1].t_ms);
            if a == b {
                return Err(Error::DuplicateTimestamp { t_ms: a });
            }
            if b - a > MAX_FIX_GAP_MS {
                return Err(Error::TraceGap {
                    from_ms: a,
                    to_ms: b,
                });
            }
        }
        Ok(Trace { fixes })
    }

    pub fn fixes(&self) -> &[TraceFix] {
        &self.fixes
    }

    pub fn len(&self) -> usize {
        self.fixes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fixes.is_empty()
    }

    pub fn start_ms(&self) -> i64 {
        self.fixes[0].t_ms
    }

    pub fn end_ms(&self) -> i64 {
        self.fixes[self.fixes.len() - 1].t_ms
    }

    pub fn span_ms(&self) -> i64 {
        self.end_ms() - self.start_ms()
    }

    /// The trace projected into `frame`, ready for interpolation.
    pub fn project(&self, frame: &LocalFrame) -> Result<EnuTrack> {
        let points = self
            .fixes
            .iter()
            .map(|f| Ok((f.t_ms, frame.to_enu(f.pos)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(EnuTrack { points })
    }

    /// Writes the trace as CSV with header `t_ms,lat,lon,alt`.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let to_err = |e: csv::Error| Error::io("<trace output>", std::io::Error::other(e));
        for f in &self.fixes {
            out.serialize(FixRow {
                t_ms: f.t_ms,
                lat: f.pos.lat(),
                lon: f.pos.lon(),
                alt: Some(f.pos.alt()),
            })
            .map_err(to_err)?;
        }
        out.flush().map_err(|e| Error::io("<trace output>", e))
    }
}

/// Trace positions in a planar frame with linear interpolation between fixes.
#[derive(Debug, Clone)]
pub struct EnuTrack {
    points: Vec<(i64, EnuPoint)>,
}

impl EnuTrack {
    pub fn start_ms(&self) -> i64 {
        self.points[0].0
    }

    pub fn end_ms(&self) -> i64 {
        self.points[self.points.len() - 1].0
    }

    /// Position at `t_ms`, or `None` outside the trace span. Exact fix times
    /// return the stored fix position unchanged.
    pub fn position_at(&self, t_ms: i64) -> Option<EnuPoint> {
        if t_ms < self.start_ms() || t_ms > self.end_ms() {
            return None;
        }
        let idx = self.points.partition_point(|(t, _)| *t < t_ms);
        let (t1, p1) = self.points[idx];
        if t1 == t_ms {
            return Some(p1);
        }
        let (t0, p0) = self.points[idx - 1];
        let frac = (t_ms - t0) as f64 / (t1 - t0) as f64;
        Some(p0.lerp(p1, frac))
    }

    /// Like [`EnuTrack::position_at`] but holds the end positions outside the span.
    pub fn clamped_at(&self, t_ms: i64) -> EnuPoint {
        let t = t_ms.clamp(self.start_ms(), self.end_ms());
        self.position_at(t)
            .expect("clamped time lies within the span")
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct FixRow {
    t_ms: i64,
    lat: f64,
    lon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alt: Option<f64>,
}

impl FixRow {
    fn into_fix(self, path: &Path, line: u64) -> Result<TraceFix> {
        let pos = GeoPoint::with_alt(self.lat, self.lon, self.alt.unwrap_or(0.0)).map_err(|e| {
            Error::Parse {
                path: path.to_path_buf(),
                line,
                message: e.to_string(),
            }
        })?;
        Ok(TraceFix {
            t_ms: self.t_ms,
            pos,
        })
    }
}

/// Reads a trace from CSV (`t_ms,lat,lon[,alt]`) or JSONL.
pub fn load_trace(path: &Path, format: TraceFormat) -> Result<Trace> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let fixes = match format {
        TraceFormat::Csv => read_csv_fixes(file, path)?,
        TraceFormat::Jsonl => read_jsonl_fixes(file, path)?,
    };
    Trace::new(fixes)
}

fn read_csv_fixes(file: File, path: &Path) -> Result<Vec<TraceFix>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = rdr.headers().map_err(|e| csv_parse_error(path, e))?.clone();
    let mut fixes = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_parse_error(path, e))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let row: FixRow = rec
            .deserialize(Some(&headers))
            .map_err(|e| csv_parse_error_at(path, line, e))?;
        fixes.push(row.into_fix(path, line)?);
    }
    Ok(fixes)
}

fn read_jsonl_fixes(file: File, path: &Path) -> Result<Vec<TraceFix>> {
    let mut fixes = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line_no = i as u64 + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: FixRow = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: line_no,
            message: e.to_string(),
        })?;
        fixes.push(row.into_fix(path, line_no)?);
    }
    Ok(fixes)
}

pub(crate) fn csv_parse_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    csv_parse_error_at(path, line, e)
}

pub(crate) fn csv_parse_error_at(path: &Path, line: u64, e: csv::Error) -> Error {
    let message = match e.kind() {
        csv::ErrorKind::Deserialize { err, .. } => err.to_string(),
        _ => e.to_string(),
    };
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    }
}

/// Resamples onto the grid `t0, t0 + dt, ...` up to the last fix. Positions
/// are interpolated in a planar frame anchored at the first fix.
pub fn resample(trace: &Trace, dt_ms: i64) -> Result<Trace> {
    if dt_ms <= 0 {
        return Err(Error::InvalidInterval(dt_ms));
    }
    if trace.span_ms() < dt_ms {
        return Err(Error::TraceTooShort {
            span_ms: trace.span_ms(),
            needed_ms: dt_ms,
        });
    }
    let frame = LocalFrame::new(trace.fixes[0].pos);
    let track = trace.project(&frame)?;
    let mut fixes = Vec::new();
    let mut t = trace.start_ms();
    while t <= trace.end_ms() {
        let idx = trace.fixes.partition_point(|f| f.t_ms < t);
        let fix = &trace.fixes[idx];
        let pos = if fix.t_ms == t {
            fix.pos
        } else {
            let prev = &trace.fixes[idx - 1];
            let frac = (t - prev.t_ms) as f64 / (fix.t_ms - prev.t_ms) as f64;
            let alt = prev.pos.alt() + (fix.pos.alt() - prev.pos.alt()) * frac;
            let g = frame.to_geo(track.position_at(t).expect("grid time inside span"))?;
            GeoPoint::with_alt(g.lat(), g.lon(), alt)?
        };
        fixes.push(TraceFix { t_ms: t, pos });
        t += dt_ms;
    }
    Trace::new(fixes)
}

/// Speed between each pair of consecutive fixes, as distance over elapsed
/// time, stamped at the first fix of the pair.
pub fn enforce_speeds(trace: &Trace) -> Result<Vec<SpeedSample>> {
    if trace.len() < 2 {
        return Err(Error::TraceTooShort {
            span_ms: 0,
            needed_ms: 1,
        });
    }
    Ok(trace
        .fixes
        .windows(2)
        .map(|w| {
            let d = haversine_distance(w[0].pos, w[1].pos);
            let secs = (w[1].t_ms - w[0].t_ms) as f64 / 1000.0;
            SpeedSample {
                t_ms: w[0].t_ms,
                speed: d / secs,
            }
        })
        .collect())
}

/// Distance from each fix of `a` to `b`'s interpolated position at the same
/// instant, over the span where both traces exist.
pub fn trace_deviation(a: &Trace, b: &Trace) -> Result<Deviation> {
    let lo = a.start_ms().max(b.start_ms());
    let hi = a.end_ms().min(b.end_ms());
    if hi - lo < 1000 {
        return Err(Error::NoOverlap {
            overlap_ms: (hi - lo).max(0),
        });
    }
    let frame = LocalFrame::new(a.fixes[0].pos);
    let track_b = b.project(&frame)?;
    let mut samples = Vec::new();
    for fix in a.fixes.iter().filter(|f| (lo..=hi).contains(&f.t_ms)) {
        let pa = frame.to_enu(fix.pos)?;
        let pb = track_b.position_at(fix.t_ms).expect("inside overlap");
        samples.push(DeviationSample {
            t_ms: fix.t_ms,
            pos: fix.pos,
            deviation_m: enu_distance(pa, pb),
        });
    }
    let mut sorted: Vec<f64> = samples.iter().map(|s| s.deviation_m).collect();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let median_m = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    };
    Ok(Deviation {
        max_m: sorted[n - 1],
        median_m,
        samples,
    })
}
