//! Field measurements: monitor-mode pcap captures, pre-extracted CSV logs,
//! and the join of captures with the vehicle's GPS trace.

pub mod radiotap;

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geo::LocalFrame;
use crate::records::{read_records, ReceptionRecord, RecordFormat, Source};
use crate::trace::Trace;

pub use radiotap::MacAddr;

pub const LINKTYPE_IEEE802_11_RADIOTAP: u32 = 127;
pub const DEFAULT_MAX_SKEW_MS: i64 = 200;

/// Plausible RSSI window; readings outside it are rejected.
pub const RSSI_PLAUSIBLE_DBM: (f64, f64) = (-120.0, 0.0);

const MAGIC_MICROS: u32 = 0xa1b2_c3d4;
const MAGIC_NANOS: u32 = 0xa1b2_3c4d;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawCapture {
    pub t_ms: i64,
    pub rssi_dbm: f64,
    /// 802.11 frame length after the radiotap header, FCS excluded.
    pub frame_len: u32,
    pub station_id: Option<u32>,
    pub transmitter: Option<MacAddr>,
    pub bssid: Option<MacAddr>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PcapScan {
    pub captures: Vec<RawCapture>,
    pub packets: usize,
    /// Packets whose radiotap header has no antenna-signal field.
    pub skipped_no_signal: usize,
    /// Packets with an antenna signal outside the plausible window.
    pub rejected_implausible: usize,
}

pub fn parse_pcap(path: &Path) -> Result<PcapScan> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_pcap_bytes(&bytes)
}

/// Parses a classic pcap file (micro- or nanosecond magic, either byte order)
/// with radiotap link type.
pub fn parse_pcap_bytes(bytes: &[u8]) -> Result<PcapScan> {
    if bytes.len() < 24 {
        let mut magic = [0u8; 4];
        magic[..bytes.len().min(4)].copy_from_slice(&bytes[..bytes.len().min(4)]);
        return Err(Error::UnsupportedFormat {
            magic: u32::from_le_bytes(magic),
        });
    }
    let raw_magic = [bytes[0], bytes[1], bytes[2], bytes[3]];
    let (big_endian, nanos) = match (u32::from_le_bytes(raw_magic), u32::from_be_bytes(raw_magic)) {
        (MAGIC_MICROS, _) => (false, false),
        (MAGIC_NANOS, _) => (false, true),
        (_, MAGIC_MICROS) => (true, false),
        (_, MAGIC_NANOS) => (true, true),
        (m, _) => return Err(Error::UnsupportedFormat { magic: m }),
    };
    let u32_at = |off: usize| {
        let b = [bytes[off], bytes[off + 1], bytes[off + 2], bytes[off + 3]];
        if big_endian {
            u32::from_be_bytes(b)
        } else {
            u32::from_le_bytes(b)
        }
    };
    let link_type = u32_at(20) & 0x0fff_ffff;
    if link_type != LINKTYPE_IEEE802_11_RADIOTAP {
        return Err(Error::LinkType(link_type));
    }

    let mut scan = PcapScan::default();
    let mut off = 24;
    let mut index = 0;
    while off < bytes.len() {
        if off + 16 > bytes.len() {
            return Err(Error::TruncatedPacket { index });
        }
        let ts_sec = u32_at(off) as i64;
        let ts_frac = u32_at(off + 4) as i64;
        let incl_len = u32_at(off + 8) as usize;
        let data_start = off + 16;
        let data = bytes
            .get(data_start..data_start + incl_len)
            .ok_or(Error::TruncatedPacket { index })?;
        let frac_ms = if nanos {
            ts_frac / 1_000_000
        } else {
            ts_frac / 1_000
        };
        let t_ms = ts_sec * 1000 + frac_ms;

        let rt = radiotap::parse(data).map_err(|_| Error::TruncatedPacket { index })?;
        scan.packets += 1;
        match rt.antenna_signal_dbm {
            None => scan.skipped_no_signal += 1,
            Some(dbm) => {
                let rssi = f64::from(dbm);
                if !(RSSI_PLAUSIBLE_DBM.0..=RSSI_PLAUSIBLE_DBM.1).contains(&rssi) {
                    scan.rejected_implausible += 1;
                } else {
                    let mut frame = &data[rt.len..];
                    if rt.has_fcs && frame.len() >= 4 {
                        frame = &frame[..frame.len() - 4];
                    }
                    let info = radiotap::parse_dot11(frame);
                    scan.captures.push(RawCapture {
                        t_ms,
                        rssi_dbm: rssi,
                        frame_len: frame.len() as u32,
                        station_id: info.station_id,
                        transmitter: info.transmitter,
                        bssid: info.bssid,
                    });
                }
            }
        }
        off = data_start + incl_len;
        index += 1;
    }
    if scan.skipped_no_signal > 0 || scan.rejected_implausible > 0 {
        log::warn!(
            "{} packets without antenna signal, {} with implausible RSSI",
            scan.skipped_no_signal,
            scan.rejected_implausible
        );
    }
    Ok(scan)
}

/// Hardware address to station id, read from lines `aa:bb:cc:dd:ee:ff <id>`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BssidMap {
    map: HashMap<MacAddr, u32>,
}

impl BssidMap {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|(line, message)| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        })
    }

    pub fn parse(text: &str) -> std::result::Result<Self, (u64, String)> {
        let mut map = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i as u64 + 1;
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(mac), Some(id), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err((line_no, "expected `<mac> <station_id>`".into()));
            };
            let mac = parse_mac(mac).ok_or((line_no, format!("bad address {mac:?}")))?;
            let id = id
                .parse::<u32>()
                .map_err(|e| (line_no, format!("bad station id {id:?}: {e}")))?;
            map.insert(mac, id);
        }
        Ok(BssidMap { map })
    }

    pub fn get(&self, mac: &MacAddr) -> Option<u32> {
        self.map.get(mac).copied()
    }

    pub fn insert(&mut self, mac: MacAddr, station_id: u32) {
        self.map.insert(mac, station_id);
    }
}

fn parse_mac(s: &str) -> Option<MacAddr> {
    let mut out = [0u8; 6];
    let mut parts = s.split(':');
    for b in &mut out {
        *b = u8::from_str_radix(parts.next()?, 16).ok()?;
    }
    parts.next().is_none().then_some(out)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Correlated {
    pub records: Vec<ReceptionRecord>,
    /// Captures more than `max_skew_ms` outside the trace span.
    pub dropped_out_of_span: usize,
}

/// Attaches the vehicle position at each capture time. Captures slightly
/// outside the trace span (within `max_skew_ms`) take the nearest end fix.
///
/// The station id comes from the decoded payload, otherwise from `map` by
/// BSSID and then by transmitter address.
pub fn correlate_gps(
    captures: &[RawCapture],
    trace: &Trace,
    max_skew_ms: i64,
    map: Option<&BssidMap>,
) -> Result<Correlated> {
    if max_skew_ms < 0 {
        return Err(Error::InvalidInterval(max_skew_ms));
    }
    let frame = LocalFrame::new(trace.fixes()[0].pos);
    let track = trace.project(&frame)?;
    let lo = trace.start_ms() - max_skew_ms;
    let hi = trace.end_ms() + max_skew_ms;

    let mut out = Correlated::default();
    for (index, c) in captures.iter().enumerate() {
        if c.t_ms < lo || c.t_ms > hi {
            out.dropped_out_of_span += 1;
            continue;
        }
        let station_id = c
            .station_id
            .or_else(|| {
                let map = map?;
                c.bssid
                    .and_then(|m| map.get(&m))
                    .or_else(|| c.transmitter.and_then(|m| map.get(&m)))
            })
            .ok_or(Error::MissingStationId { index })?;
        out.records.push(ReceptionRecord {
            t_ms: c.t_ms,
            station_id,
            rx_pos: frame.to_geo(track.clamped_at(c.t_ms))?,
            rssi_dbm: c.rssi_dbm,
            source: Source::Field,
        });
    }
    if out.dropped_out_of_span > 0 {
        log::warn!(
            "{} of {} captures fall outside the trace span",
            out.dropped_out_of_span,
            captures.len()
        );
    }
    Ok(out)
}

/// Reads a pre-extracted field log (`t_ms,station_id,lat,lon,rssi_dbm`),
/// returned in time order.
pub fn parse_field_csv(path: &Path) -> Result<Vec<ReceptionRecord>> {
    let mut records = read_records(path, RecordFormat::Csv, Source::Field)?;
    for r in &mut records {
        r.source = Source::Field;
    }
    records.sort_by_key(|r| r.t_ms);
    Ok(records)
}
