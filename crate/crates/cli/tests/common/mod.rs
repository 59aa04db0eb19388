#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

pub const RSU_MAC: &str = "02:00:00:00:2f:58";

pub fn demo(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../demo")
        .join(name)
}

pub fn v2xr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_v2xr"))
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn sha256(path: &Path) -> Vec<u8> {
    Sha256::digest(std::fs::read(path).unwrap()).to_vec()
}

/// `key=value` from a headline line.
pub fn field(line: &str, key: &str) -> f64 {
    line.split_whitespace()
        .find_map(|kv| kv.strip_prefix(key)?.strip_prefix('='))
        .unwrap_or_else(|| panic!("{key} missing in {line:?}"))
        .parse()
        .unwrap()
}

/// Little-endian microsecond pcap; each packet is radiotap with only the
/// antenna signal followed by a data frame from `RSU_MAC`.
pub fn pcap(link_type: u32, packets: &[(u32, u8)]) -> Vec<u8> {
    let mut f = Vec::new();
    for v in [0xa1b2_c3d4u32, 0x0004_0002, 0, 0, 65535, link_type] {
        f.extend_from_slice(&v.to_le_bytes());
    }
    for &(t_ms, signal) in packets {
        let mut p = vec![0, 0, 9, 0, 0x20, 0, 0, 0, signal];
        p.extend_from_slice(&[0x08, 0x00, 0, 0]);
        p.extend_from_slice(&[0xff; 6]);
        p.extend_from_slice(&[0x02, 0x00, 0x00, 0x00, 0x2f, 0x58]);
        p.extend_from_slice(&[0xff; 6]);
        p.extend_from_slice(&[0; 2 + 16]);
        for v in [
            t_ms / 1000,
            (t_ms % 1000) * 1000,
            p.len() as u32,
            p.len() as u32,
        ] {
            f.extend_from_slice(&v.to_le_bytes());
        }
        f.extend_from_slice(&p);
    }
    f
}

pub const FIXTURE_TRACE: &str = "t_ms,lat,lon\n0,44.6300,10.9450\n5000,44.6304,10.9450\n";
