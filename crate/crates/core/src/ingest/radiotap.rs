//! Just enough radiotap and 802.11 to pull out the antenna signal, the
//! addresses and, for unsecured GeoNetworking single-hop broadcasts, the CAM
//! station id.

/// Present-mask bit carrying the dBm antenna signal.
pub const ANTENNA_SIGNAL_BIT: u32 = 5;
const EXT_BIT: u32 = 31;
const FLAGS_FCS: u8 = 0x10;

/// (alignment, size) of the fields that can precede the antenna signal.
const FIELD_LAYOUT: [(usize, usize); 6] = [
    (8, 8), // TSFT
    (1, 1), // flags
    (1, 1), // rate
    (2, 4), // channel: frequency + flags
    (1, 2), // FHSS
    (1, 1), // dBm antenna signal
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Radiotap {
    /// Total header length, i.e. offset of the 802.11 frame.
    pub len: usize,
    pub antenna_signal_dbm: Option<i8>,
    /// The frame ends with a 4-byte FCS.
    pub has_fcs: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Truncated;

/// Walks the radiotap header at the start of `data`.
pub fn parse(data: &[u8]) -> Result<Radiotap, Truncated> {
    if data.len() < 8 {
        return Err(Truncated);
    }
    let len = u16::from_le_bytes([data[2], data[3]]) as usize;
    if len < 8 || data.len() < len {
        return Err(Truncated);
    }
    let hdr = &data[..len];
    let present = u32::from_le_bytes([hdr[4], hdr[5], hdr[6], hdr[7]]);

    // skip any extended present words
    let mut offset = 8;
    let mut word = present;
    while word & (1 << EXT_BIT) != 0 {
        if offset + 4 > len {
            return Err(Truncated);
        }
        word = u32::from_le_bytes([
            hdr[offset],
            hdr[offset + 1],
            hdr[offset + 2],
            hdr[offset + 3],
        ]);
        offset += 4;
    }

    let mut antenna_signal_dbm = None;
    let mut has_fcs = false;
    for (bit, &(align, size)) in FIELD_LAYOUT.iter().enumerate() {
        if present & (1 << bit) == 0 {
            continue;
        }
        offset = offset.next_multiple_of(align);
        if offset + size > len {
            return Err(Truncated);
        }
        match bit as u32 {
            1 => has_fcs = hdr[offset] & FLAGS_FCS != 0,
            ANTENNA_SIGNAL_BIT => antenna_signal_dbm = Some(hdr[offset] as i8),
            _ => {}
        }
        offset += size;
    }
    Ok(Radiotap {
        len,
        antenna_signal_dbm,
        has_fcs,
    })
}

pub type MacAddr = [u8; 6];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Dot11Info {
    pub transmitter: Option<MacAddr>,
    pub bssid: Option<MacAddr>,
    pub station_id: Option<u32>,
}

const LLC_SNAP_GEONET: [u8; 8] = [0xaa, 0xaa, 0x03, 0x00, 0x00, 0x00, 0x89, 0x47];
const GN_BASIC_LEN: usize = 4;
const GN_COMMON_LEN: usize = 8;
const GN_SHB_EXT_LEN: usize = 28;
const BTP_LEN: usize = 4;
const CAM_MESSAGE_ID: u8 = 2;

/// Reads addresses from a data frame and tries to decode a CAM station id.
pub fn parse_dot11(frame: &[u8]) -> Dot11Info {
    let mut info = Dot11Info::default();
    if frame.len() < 24 {
        return info;
    }
    let fc0 = frame[0];
    let fc1 = frame[1];
    let frame_type = (fc0 >> 2) & 0x3;
    if frame_type != 2 {
        return info;
    }
    info.transmitter = frame[10..16].try_into().ok();
    info.bssid = frame[16..22].try_into().ok();

    let mut hdr_len = 24;
    if fc1 & 0x03 == 0x03 {
        hdr_len += 6;
    }
    if fc0 & 0x80 != 0 {
        // QoS data subtypes
        hdr_len += 2;
    }
    info.station_id = frame.get(hdr_len..).and_then(cam_station_id);
    info
}

/// LLC/SNAP -> GeoNetworking (unsecured, single-hop broadcast) -> BTP-B -> ITS PDU header.
fn cam_station_id(body: &[u8]) -> Option<u32> {
    if body.get(..8)? != LLC_SNAP_GEONET {
        return None;
    }
    let gn = &body[8..];
    let basic_next = gn.first()? & 0x0f;
    if basic_next != 1 {
        return None;
    }
    let common = gn.get(GN_BASIC_LEN..GN_BASIC_LEN + GN_COMMON_LEN)?;
    let common_next = common[0] >> 4;
    let header_type = common[1] >> 4;
    let header_subtype = common[1] & 0x0f;
    if common_next != 2 || header_type != 5 || header_subtype != 0 {
        return None;
    }
    let pdu = gn.get(GN_BASIC_LEN + GN_COMMON_LEN + GN_SHB_EXT_LEN + BTP_LEN..)?;
    if pdu.len() < 6 || pdu[1] != CAM_MESSAGE_ID {
        return None;
    }
    Some(u32::from_be_bytes([pdu[2], pdu[3], pdu[4], pdu[5]]))
}
