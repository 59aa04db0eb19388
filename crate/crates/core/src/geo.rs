//! Geodetic points, the local planar frame, and distances.
//!
//! The planar frame is an equirectangular projection about a fixed origin on
//! a spherical earth. It is only meant for areas a few kilometres across,
//! which is why [`LocalFrame::to_enu`] refuses points more than 0.1 degree
//! away from the origin.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean earth radius used for every distance and projection.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Largest lat/lon separation from the origin accepted by the planar frame.
pub const MAX_LOCAL_SEPARATION_DEG: f64 = 0.1;

/// WGS84 position in degrees. Altitude is carried but never used in distances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeoPoint {
    lat: f64,
    lon: f64,
    alt: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        Self::with_alt(lat, lon, 0.0)
    }

    pub fn with_alt(lat: f64, lon: f64, alt: f64) -> Result<Self> {
        if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
            return Err(Error::InvalidCoordinate { lat, lon });
        }
        if !alt.is_finite() {
            return Err(Error::NonFinite("altitude"));
        }
        Ok(GeoPoint { lat, lon, alt })
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }

    pub fn alt(&self) -> f64 {
        self.alt
    }
}

impl<'de> Deserialize<'de> for GeoPoint {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            lat: f64,
            lon: f64,
            #[serde(default)]
            alt: f64,
        }
        let raw = Raw::deserialize(d)?;
        GeoPoint::with_alt(raw.lat, raw.lon, raw.alt).map_err(serde::de::Error::custom)
    }
}

/// Position in the local planar frame, metres east (`x`) and north (`y`).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnuPoint {
    pub x: f64,
    pub y: f64,
}

impl EnuPoint {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::NonFinite("planar coordinate"));
        }
        Ok(EnuPoint { x, y })
    }

    pub(crate) fn lerp(self, other: EnuPoint, frac: f64) -> EnuPoint {
        EnuPoint {
            x: self.x + (other.x - self.x) * frac,
            y: self.y + (other.y - self.y) * frac,
        }
    }
}

/// Great-circle distance in metres on the spherical earth.
pub fn haversine_distance(a: GeoPoint, b: GeoPoint) -> f64 {
    let phi1 = a.lat.to_radians();
    let phi2 = b.lat.to_radians();
    let dphi = (b.lat - a.lat).to_radians();
    let dlambda = (b.lon - a.lon).to_radians();
    let h = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

pub fn enu_distance(a: EnuPoint, b: EnuPoint) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

/// Projects `p` into the planar frame anchored at `origin`.
pub fn to_enu(p: GeoPoint, origin: GeoPoint) -> Result<EnuPoint> {
    LocalFrame::new(origin).to_enu(p)
}

/// Equirectangular frame about a fixed origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalFrame {
    origin: GeoPoint,
    cos_lat: f64,
}

impl LocalFrame {
    pub fn new(origin: GeoPoint) -> Self {
        LocalFrame {
            origin,
            cos_lat: origin.lat.to_radians().cos(),
        }
    }

    /// Frame anchored at the mean latitude/longitude of `points`.
    pub fn centroid_of<'a>(points: impl IntoIterator<Item = &'a GeoPoint>) -> Option<Self> {
        let (mut lat, mut lon, mut n) = (0.0, 0.0, 0usize);
        for p in points {
            lat += p.lat;
            lon += p.lon;
            n += 1;
        }
        if n == 0 {
            return None;
        }
        let origin = GeoPoint::new(lat / n as f64, lon / n as f64).ok()?;
        Some(LocalFrame::new(origin))
    }

    pub fn origin(&self) -> GeoPoint {
        self.origin
    }

    pub fn to_enu(&self, p: GeoPoint) -> Result<EnuPoint> {
        let dlat = p.lat - self.origin.lat;
        let dlon = p.lon - self.origin.lon;
        if dlat.abs() >= MAX_LOCAL_SEPARATION_DEG || dlon.abs() >= MAX_LOCAL_SEPARATION_DEG {
            return Err(Error::OutsideLocalArea {
                dlat: dlat.abs(),
                dlon: dlon.abs(),
            });
        }
        Ok(EnuPoint {
            x: EARTH_RADIUS_M * dlon.to_radians() * self.cos_lat,
            y: EARTH_RADIUS_M * dlat.to_radians(),
        })
    }

    /// Inverse of [`LocalFrame::to_enu`]. Altitude is set to zero.
    pub fn to_geo(&self, e: EnuPoint) -> Result<GeoPoint> {
        let lat = self.origin.lat + (e.y / EARTH_RADIUS_M).to_degrees();
        let lon = self.origin.lon + (e.x / (EARTH_RADIUS_M * self.cos_lat)).to_degrees();
        GeoPoint::new(lat, lon)
    }
}
