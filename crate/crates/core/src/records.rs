//! Received-message records and their JSONL / CSV encodings.
//!
//! Both encodings carry the columns `t_ms, station_id, lat, lon, rssi_dbm,
//! source` in that order. When reading, a missing `source` column means the
//! rows came from the field.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::GeoPoint;
use crate::trace::{csv_parse_error, csv_parse_error_at};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Sim,
    Field,
}

impl Source {
    pub fn as_str(&self) -> &'static str {
        match self {
            Source::Sim => "sim",
            Source::Field => "field",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceptionRecord {
    pub t_ms: i64,
    pub station_id: u32,
    pub rx_pos: GeoPoint,
    pub rssi_dbm: f64,
    pub source: Source,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordFormat {
    Jsonl,
    Csv,
}

impl RecordFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "csv" => Some(RecordFormat::Csv),
            "jsonl" | "ndjson" => Some(RecordFormat::Jsonl),
            _ => None,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    t_ms: i64,
    station_id: u32,
    lat: f64,
    lon: f64,
    rssi_dbm: f64,
    #[serde(default)]
    source: Option<Source>,
}

impl From<&ReceptionRecord> for Row {
    fn from(r: &ReceptionRecord) -> Self {
        Row {
            t_ms: r.t_ms,
            station_id: r.station_id,
            lat: r.rx_pos.lat(),
            lon: r.rx_pos.lon(),
            rssi_dbm: r.rssi_dbm,
            source: Some(r.source),
        }
    }
}

impl Row {
    fn into_record(self, default_source: Source) -> std::result::Result<ReceptionRecord, String> {
        let rx_pos = GeoPoint::new(self.lat, self.lon).map_err(|e| e.to_string())?;
        if !self.rssi_dbm.is_finite() {
            return Err("rssi_dbm must be finite".into());
        }
        Ok(ReceptionRecord {
            t_ms: self.t_ms,
            station_id: self.station_id,
            rx_pos,
            rssi_dbm: self.rssi_dbm,
            source: self.source.unwrap_or(default_source),
        })
    }
}

pub fn write_records<W: Write>(
    w: W,
    records: &[ReceptionRecord],
    format: RecordFormat,
) -> Result<()> {
    let fail = |e: std::io::Error| Error::io("<records output>", e);
    match format {
        RecordFormat::Jsonl => {
            let mut w = BufWriter::new(w);
            for r in records {
                serde_json::to_writer(&mut w, &Row::from(r)).map_err(|e| fail(e.into()))?;
                w.write_all(b"\n").map_err(fail)?;
            }
            w.flush().map_err(fail)
        }
        RecordFormat::Csv => {
            let mut out = csv::Writer::from_writer(w);
            for r in records {
                out.serialize(Row::from(r))
                    .map_err(|e| fail(std::io::Error::other(e)))?;
            }
            out.flush().map_err(fail)
        }
    }
}

pub fn save_records(path: &Path, records: &[ReceptionRecord], format: RecordFormat) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_records(file, records, format).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

/// Reads records in file order. Rows lacking a `source` get `default_source`.
pub fn read_records(
    path: &Path,
    format: RecordFormat,
    default_source: Source,
) -> Result<Vec<ReceptionRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut out = Vec::new();
    match format {
        RecordFormat::Jsonl => {
            for (i, line) in BufReader::new(file).lines().enumerate() {
                let line_no = i as u64 + 1;
                let line = line.map_err(|e| Error::io(path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                let row: Row =
                    serde_json::from_str(&line).map_err(|e| parse_err(line_no, e.to_string()))?;
                out.push(
                    row.into_record(default_source)
                        .map_err(|m| parse_err(line_no, m))?,
                );
            }
        }
        RecordFormat::Csv => {
            let mut rdr = csv::ReaderBuilder::new()
                .trim(csv::Trim::All)
                .from_reader(file);
            let headers = rdr.headers().map_err(|e| csv_parse_error(path, e))?.clone();
            for rec in rdr.records() {
                let rec = rec.map_err(|e| csv_parse_error(path, e))?;
                let line = rec.position().map(|p| p.line()).unwrap_or(0);
                let row: Row = rec
                    .deserialize(Some(&headers))
                    .map_err(|e| csv_parse_error_at(path, line, e))?;
                out.push(
                    row.into_record(default_source)
                        .map_err(|m| parse_err(line, m))?,
                );
            }
        }
    }
    Ok(out)
}

/// Opens a record file, picking the format from its extension (CSV unless `.jsonl`/`.ndjson`).
pub fn load_records(path: &Path, default_source: Source) -> Result<Vec<ReceptionRecord>> {
    let format = RecordFormat::from_path(path).unwrap_or(RecordFormat::Csv);
    read_records(path, format, default_source)
}
