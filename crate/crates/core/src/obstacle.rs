//! Building footprints and how a straight link crosses them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::EnuPoint;

const EPS: f64 = 1e-9;

/// A simple polygon with nonzero area, implicitly closed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Obstacle {
    id: String,
    polygon: Vec<EnuPoint>,
    min: EnuPoint,
    max: EnuPoint,
}

/// How a segment interacts with one obstacle.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Crossing {
    /// Boundary transitions between outside and interior.
    pub walls: u32,
    /// Segment length strictly inside the polygon, metres.
    pub interior_m: f64,
}

impl Obstacle {
    pub fn new(id: impl Into<String>, polygon: Vec<EnuPoint>) -> Result<Self> {
        let id = id.into();
        let fail = |reason: &str| Error::DegenerateObstacle {
            id: id.clone(),
            reason: reason.to_string(),
        };
        if polygon.len() < 3 {
            return Err(fail("needs at least 3 vertices"));
        }
        if polygon.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(fail("non-finite vertex"));
        }
        if signed_area(&polygon).abs() <= EPS {
            return Err(fail("zero area"));
        }
        if !is_simple(&polygon) {
            return Err(fail("edges self-intersect"));
        }
        let mut min = polygon[0];
        let mut max = polygon[0];
        for p in &polygon[1..] {
            min.x = min.x.min(p.x);
            min.y = min.y.min(p.y);
            max.x = max.x.max(p.x);
            max.y = max.y.max(p.y);
        }
        Ok(Obstacle {
            id,
            polygon,
            min,
            max,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn polygon(&self) -> &[EnuPoint] {
        &self.polygon
    }

    fn edges(&self) -> impl Iterator<Item = (EnuPoint, EnuPoint)> + '_ {
        let n = self.polygon.len();
        (0..n).map(move |i| (self.polygon[i], self.polygon[(i + 1) % n]))
    }

    /// Strict interior test; points on the boundary are outside.
    pub fn contains(&self, p: EnuPoint) -> bool {
        if self.edges().any(|(a, b)| on_segment(p, a, b)) {
            return false;
        }
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Splits the segment at every boundary contact and classifies the pieces.
    pub fn crossing(&self, from: EnuPoint, to: EnuPoint) -> Crossing {
        if from.x.max(to.x) < self.min.x
            || from.x.min(to.x) > self.max.x
            || from.y.max(to.y) < self.min.y
            || from.y.min(to.y) > self.max.y
        {
            return Crossing::default();
        }
        let d = EnuPoint {
            x: to.x - from.x,
            y: to.y - from.y,
        };
        let len = d.x.hypot(d.y);
        if len == 0.0 {
            return Crossing::default();
        }
        let mut cuts = vec![0.0, 1.0];
        for (a, b) in self.edges() {
            cuts.extend(segment_params(from, d, a, b));
        }
        cuts.retain(|t| (0.0..=1.0).contains(t));
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|a, b| (*a - *b).abs() < EPS);

        let mut result = Crossing::default();
        let mut prev_inside: Option<bool> = None;
        for w in cuts.windows(2) {
            let (t0, t1) = (w[0], w[1]);
            let mid = (t0 + t1) / 2.0;
            let inside = self.contains(EnuPoint {
                x: from.x + d.x * mid,
                y: from.y + d.y * mid,
            });
            if inside {
                result.interior_m += (t1 - t0) * len;
            }
            if prev_inside.is_some_and(|p| p != inside) {
                result.walls += 1;
            }
            prev_inside = Some(inside);
        }
        result
    }
}

impl<'de> Deserialize<'de> for Obstacle {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            id: String,
            polygon: Vec<[f64; 2]>,
        }
        let raw = Raw::deserialize(d)?;
        let poly = raw
            .polygon
            .into_iter()
            .map(|[x, y]| EnuPoint { x, y })
            .collect();
        Obstacle::new(raw.id, poly).map_err(serde::de::Error::custom)
    }
}

fn cross(a: EnuPoint, b: EnuPoint) -> f64 {
    a.x * b.y - a.y * b.x
}

fn sub(a: EnuPoint, b: EnuPoint) -> EnuPoint {
    EnuPoint {
        x: a.x - b.x,
        y: a.y - b.y,
    }
}

fn signed_area(poly: &[EnuPoint]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| cross(poly[i], poly[(i + 1) % n]))
        .sum::<f64>()
        / 2.0
}

fn on_segment(p: EnuPoint, a: EnuPoint, b: EnuPoint) -> bool {
    let ab = sub(b, a);
    let ap = sub(p, a);
    let len = ab.x.hypot(ab.y);
    if len == 0.0 {
        return ap.x.hypot(ap.y) < EPS;
    }
    if (cross(ab, ap) / len).abs() > EPS {
        return false;
    }
    let t = (ap.x * ab.x + ap.y * ab.y) / (len * len);
    (-EPS..=1.0 + EPS).contains(&t)
}

/// Parameters along `from + t*d` where it touches edge `a..b`.
fn segment_params(from: EnuPoint, d: EnuPoint, a: EnuPoint, b: EnuPoint) -> Vec<f64> {
    let e = sub(b, a);
    let denom = cross(d, e);
    let fa = sub(a, from);
    if denom.abs() < EPS * d.x.hypot(d.y).max(1.0) * e.x.hypot(e.y).max(1.0) {
        // parallel; only collinear overlap matters
        if cross(fa, d).abs() > EPS * d.x.hypot(d.y).max(1.0) {
            return Vec::new();
        }
        let dd = d.x * d.x + d.y * d.y;
        let ta = (fa.x * d.x + fa.y * d.y) / dd;
        let fb = sub(b, from);
        let tb = (fb.x * d.x + fb.y * d.y) / dd;
        return vec![ta, tb];
    }
    let t = cross(fa, e) / denom;
    let s = cross(fa, d) / denom;
    if (-EPS..=1.0 + EPS).contains(&s) {
        vec![t]
    } else {
        Vec::new()
    }
}

fn segments_intersect(p1: EnuPoint, p2: EnuPoint, q1: EnuPoint, q2: EnuPoint) -> bool {
    let d1 = cross(sub(q2, q1), sub(p1, q1));
    let d2 = cross(sub(q2, q1), sub(p2, q1));
    let d3 = cross(sub(p2, p1), sub(q1, p1));
    let d4 = cross(sub(p2, p1), sub(q2, p1));
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    on_segment(p1, q1, q2)
        || on_segment(p2, q1, q2)
        || on_segment(q1, p1, p2)
        || on_segment(q2, p1, p2)
}

fn is_simple(poly: &[EnuPoint]) -> bool {
    let n = poly.len();
    for i in 0..n {
        let (a1, a2) = (poly[i], poly[(i + 1) % n]);
        for j in i + 1..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            let (b1, b2) = (poly[j], poly[(j + 1) % n]);
            if adjacent {
                // neighbours share a vertex; they must not fold back onto each other
                let shared = if j == i + 1 { a2 } else { a1 };
                let (u, v) = if j == i + 1 { (a1, b2) } else { (a2, b1) };
                let cu = sub(u, shared);
                let cv = sub(v, shared);
                if cross(cu, cv).abs() < EPS && cu.x * cv.x + cu.y * cv.y > 0.0 {
                    return false;
                }
                continue;
            }
            if segments_intersect(a1, a2, b1, b2) {
                return false;
            }
        }
    }
    true
}
