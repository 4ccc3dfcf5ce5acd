//! Synthetic shapes sampled on a regular lattice, with analytic labels.

use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use super::{GroundTruth, TruthSource};
use crate::cloud::{Point3, PointClass, PointCloud};
use crate::error::{Error, Result};

/// Points within this many lattice spacings of a crease or boundary are
/// labeled as edge points.
const EDGE_BAND: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeKind {
    /// Square grid on z = 0; the boundary is the edge set.
    Plane,
    /// Surface of an axis-aligned cube centered at the origin.
    Cube,
    /// Two perpendicular half-planes joined along one crease.
    LBracket,
    /// Base plate with an upright rib along its middle.
    Panel,
}

impl FromStr for ShapeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plane" => Ok(ShapeKind::Plane),
            "cube" => Ok(ShapeKind::Cube),
            "lbracket" => Ok(ShapeKind::LBracket),
            "panel" => Ok(ShapeKind::Panel),
            other => Err(Error::invalid(format!(
                "unknown shape {other:?} (expected plane, cube, lbracket or panel)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeSpec {
    pub kind: ShapeKind,
    pub size: f64,
    pub spacing: f64,
    /// Standard deviation of per-coordinate Gaussian noise.
    pub noise: f64,
    pub seed: u64,
}

impl ShapeSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.size > 0.0 && self.size.is_finite()) {
            return Err(Error::invalid(format!("shape size must be > 0, got {}", self.size)));
        }
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return Err(Error::invalid(format!("shape spacing must be > 0, got {}", self.spacing)));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::invalid(format!("noise must be >= 0, got {}", self.noise)));
        }
        let steps = (self.size / self.spacing).round();
        if !(2.0..=100_000.0).contains(&steps) {
            return Err(Error::invalid(format!(
                "size/spacing must give between 2 and 100000 steps, got {steps}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticShape {
    pub cloud: PointCloud,
    /// Class of each cloud point.
    pub labels: Vec<PointClass>,
    pub truth: GroundTruth,
    /// Actual lattice spacing (`size / round(size / spacing)`).
    pub spacing: f64,
}

struct Builder {
    h: f64,
    points: Vec<Point3>,
    /// Line segments along which points are labeled as edges.
    features: Vec<(Point3, Point3)>,
    corners: Vec<Point3>,
}

impl Builder {
    fn point(&mut self, p: Point3) {
        self.points.push(p);
    }

    fn distance_to_features(&self, p: Point3) -> f64 {
        self.features
            .iter()
            .map(|&(a, b)| {
                let ab = b - a;
                let t = ((p - a).dot(ab) / ab.norm_squared()).clamp(0.0, 1.0);
                p.distance(a + ab * t)
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Samples the shape described by `spec`.
///
/// Labels are assigned on the noise-free lattice; noise is added afterwards
/// and the ground truth holds the noisy positions of labeled points.
pub fn synth_shape(spec: &ShapeSpec) -> Result<SyntheticShape> {
    spec.validate()?;
    let n = (spec.size / spec.spacing).round() as i64;
    let h = spec.size / n as f64;
    let s = spec.size;
    let mut b = Builder {
        h,
        points: Vec::new(),
        features: Vec::new(),
        corners: Vec::new(),
    };
    let at = |i: i64| i as f64 * h;

    match spec.kind {
        ShapeKind::Plane => {
            let c = |i: i64| at(i) - s / 2.0;
            for i in 0..=n {
                for j in 0..=n {
                    b.point(Point3::new(c(i), c(j), 0.0));
                }
            }
            let v = [
                Point3::new(-s / 2.0, -s / 2.0, 0.0),
                Point3::new(s / 2.0, -s / 2.0, 0.0),
                Point3::new(s / 2.0, s / 2.0, 0.0),
                Point3::new(-s / 2.0, s / 2.0, 0.0),
            ];
            for k in 0..4 {
                b.features.push((v[k], v[(k + 1) % 4]));
            }
            b.corners.extend(v);
        }
        ShapeKind::Cube => {
            let c = |i: i64| at(i) - s / 2.0;
            for i in 0..=n {
                for j in 0..=n {
                    for k in 0..=n {
                        let on_surface = [i, j, k].iter().any(|&v| v == 0 || v == n);
                        if on_surface {
                            b.point(Point3::new(c(i), c(j), c(k)));
                        }
                    }
                }
            }
            let half = s / 2.0;
            for &u in &[-half, half] {
                for &v in &[-half, half] {
                    b.features.push((Point3::new(-half, u, v), Point3::new(half, u, v)));
                    b.features.push((Point3::new(u, -half, v), Point3::new(u, half, v)));
                    b.features.push((Point3::new(u, v, -half), Point3::new(u, v, half)));
                }
            }
            for &x in &[-half, half] {
                for &y in &[-half, half] {
                    for &z in &[-half, half] {
                        b.corners.push(Point3::new(x, y, z));
                    }
                }
            }
        }
        ShapeKind::LBracket => {
            for i in 0..=n {
                for j in 0..=n {
                    b.point(Point3::new(at(i), at(j), 0.0));
                }
            }
            for j in 0..=n {
                for k in 1..=n {
                    b.point(Point3::new(0.0, at(j), at(k)));
                }
            }
            let (a, e) = (Point3::ZERO, Point3::new(0.0, s, 0.0));
            b.features.push((a, e));
            b.corners.extend([a, e]);
        }
        ShapeKind::Panel => {
            for i in 0..=n {
                for j in 0..=n {
                    b.point(Point3::new(at(i), at(j), 0.0));
                }
            }
            let mid = n / 2;
            let height = (n / 2).max(1);
            for j in 0..=n {
                for k in 1..=height {
                    b.point(Point3::new(at(mid), at(j), at(k)));
                }
            }
            let (a, e) = (Point3::new(at(mid), 0.0, 0.0), Point3::new(at(mid), s, 0.0));
            b.features.push((a, e));
            b.corners.extend([a, e]);
        }
    }

    let band = EDGE_BAND * b.h * (1.0 + 1e-9);
    let corner_tol = 1e-9 * b.h;
    let labels: Vec<PointClass> = b
        .points
        .iter()
        .map(|&p| {
            if b.corners.iter().any(|&c| p.distance(c) <= corner_tol) {
                PointClass::Corner
            } else if b.distance_to_features(p) <= band {
                PointClass::Edge
            } else {
                PointClass::Plain
            }
        })
        .collect();

    let mut points = b.points;
    if spec.noise > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let normal = Normal::new(0.0, spec.noise).map_err(|e| Error::invalid(e.to_string()))?;
        for p in &mut points {
            *p += Point3::new(
                normal.sample(&mut rng),
                normal.sample(&mut rng),
                normal.sample(&mut rng),
            );
        }
    }

    let truth = GroundTruth::from_labels(&points, &labels, TruthSource::Synthetic)?;
    Ok(SyntheticShape {
        cloud: PointCloud::new(points)?,
        labels,
        truth,
        spacing: h,
    })
}
