//! Straight weld seams between corners.
//!
//! Every pair of corners is a candidate segment. The segment is split into
//! equal bins; a bin is covered when some edge point projects into it and
//! lies within `delta` of the segment. Segments with enough covered bins
//! become seams, unless a third corner sits on the segment's interior, in
//! which case the two shorter seams through that corner are kept instead.

use serde::Serialize;

use crate::cloud::Point3;
use crate::error::{Error, Result};

pub const DEFAULT_BINS: usize = 20;
pub const DEFAULT_GAMMA: f64 = 0.7;
/// Support radius as a multiple of the edge cloud's mean spacing.
pub const DELTA_SPACING_FACTOR: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeamParams {
    /// Max distance from an edge point to the segment.
    pub delta: f64,
    pub bins: usize,
    /// Minimum fraction of covered bins.
    pub gamma: f64,
}

impl SeamParams {
    pub fn new(delta: f64, bins: usize, gamma: f64) -> Result<Self> {
        let p = Self { delta, bins, gamma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::invalid(format!("seam delta must be > 0, got {}", self.delta)));
        }
        if self.bins < 2 {
            return Err(Error::invalid(format!("seam bins must be >= 2, got {}", self.bins)));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::invalid(format!("seam gamma must be in (0, 1], got {}", self.gamma)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeamSegment {
    /// Indices into the corner list, `a < b`.
    pub a: usize,
    pub b: usize,
    #[serde(skip)]
    pub endpoints: (Point3, Point3),
    pub coverage: f64,
    #[serde(skip)]
    pub support_count: usize,
}

/// Projection parameter of `p` on segment `a→b` and its distance to the
/// infinite line through them.
#[inline]
fn project(a: Point3, dir: Point3, len2: f64, p: Point3) -> (f64, f64) {
    let ap = p - a;
    let t = ap.dot(dir) / len2;
    let perp = (ap - dir * t).norm();
    (t, perp)
}

/// Fraction of covered bins along `a→b`, and the number of supporting edge
/// points.
pub fn segment_support(a: Point3, b: Point3, edge_points: &[Point3], params: &SeamParams) -> Result<(f64, usize)> {
    params.validate()?;
    let dir = b - a;
    let len2 = dir.norm_squared();
    if !(len2 > 0.0) {
        return Err(Error::Degenerate("seam endpoints coincide".into()));
    }
    let mut covered = vec![false; params.bins];
    let mut support = 0;
    for &p in edge_points {
        let (t, perp) = project(a, dir, len2, p);
        if !(0.0..=1.0).contains(&t) || perp > params.delta {
            continue;
        }
        support += 1;
        let bin = ((t * params.bins as f64) as usize).min(params.bins - 1);
        covered[bin] = true;
    }
    let occupied = covered.iter().filter(|&&c| c).count();
    Ok((occupied as f64 / params.bins as f64, support))
}

/// Seams among `corners`, sorted by descending coverage, then by endpoint
/// indices.
pub fn extract_seams(corners: &[Point3], edge_points: &[Point3], params: &SeamParams) -> Result<Vec<SeamSegment>> {
    params.validate()?;
    let mut seams = Vec::new();
    for a in 0..corners.len() {
        for b in a + 1..corners.len() {
            let (pa, pb) = (corners[a], corners[b]);
            let dir = pb - pa;
            let len2 = dir.norm_squared();
            if !(len2 > 0.0) {
                continue;
            }
            let spans_corner = corners.iter().enumerate().any(|(c, &pc)| {
                if c == a || c == b {
                    return false;
                }
                let (t, perp) = project(pa, dir, len2, pc);
                t > 0.0 && t < 1.0 && perp <= params.delta
            });
            if spans_corner {
                continue;
            }
            let (coverage, support_count) = segment_support(pa, pb, edge_points, params)?;
            if coverage >= params.gamma {
                seams.push(SeamSegment {
                    a,
                    b,
                    endpoints: (pa, pb),
                    coverage,
                    support_count,
                });
            }
        }
    }
    seams.sort_by(|x, y| {
        y.coverage
            .total_cmp(&x.coverage)
            .then(x.a.cmp(&y.a))
            .then(x.b.cmp(&y.b))
    });
    Ok(seams)
}
