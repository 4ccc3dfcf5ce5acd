//! Scoring detections against ground truth.

mod synth;
mod sweep;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::cloud::{Point3, PointClass, PointCloud, SpatialIndex};
use crate::error::{Error, Result};
use crate::linalg::{sym_eigen, Mat3};

pub use synth::{synth_shape, ShapeKind, ShapeSpec, SyntheticShape};
pub use sweep::{sweep, Detector, SweepSpec};

/// Matching distance as a multiple of the cloud's mean spacing.
pub const TAU_SPACING_FACTOR: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TruthSource {
    Synthetic,
    File,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    /// Points lying on edges, corners included.
    pub edge_points: Vec<Point3>,
    pub corner_points: Vec<Point3>,
    pub source: TruthSource,
}

/// Counts and rates from matching one detection set to ground truth.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PRReport {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub params: BTreeMap<String, f64>,
    pub millis: f64,
}

impl PRReport {
    fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        // With nothing detected, precision is 1 only if nothing was missed.
        let precision = if tp + fp == 0 {
            if fn_ == 0 {
                1.0
            } else {
                0.0
            }
        } else {
            tp as f64 / (tp + fp) as f64
        };
        let recall = if tp + fn_ == 0 {
            1.0
        } else {
            tp as f64 / (tp + fn_) as f64
        };
        Self {
            tp,
            fp,
            fn_,
            precision,
            recall,
            params: BTreeMap::new(),
            millis: 0.0,
        }
    }

    pub fn f1(&self) -> f64 {
        let denom = self.precision + self.recall;
        if denom == 0.0 {
            0.0
        } else {
            2.0 * self.precision * self.recall / denom
        }
    }
}

/// Greedy one-to-one matching: candidate pairs within `tau` are taken in
/// ascending distance (ties by detection index, then truth index) while
/// both ends are still free.
pub fn match_and_score(detected: &[Point3], truth: &[Point3], tau: f64) -> Result<PRReport> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::invalid(format!("matching distance must be > 0, got {tau}")));
    }
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    if !truth.is_empty() {
        let index = SpatialIndex::from_points(truth)?;
        for (d, &p) in detected.iter().enumerate() {
            for n in index.radius_search(p, tau.next_up()) {
                pairs.push((n.distance, d, n.index));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut det_used = vec![false; detected.len()];
    let mut truth_used = vec![false; truth.len()];
    let mut tp = 0;
    for (_, d, t) in pairs {
        if !det_used[d] && !truth_used[t] {
            det_used[d] = true;
            truth_used[t] = true;
            tp += 1;
        }
    }
    Ok(PRReport::from_counts(tp, detected.len() - tp, truth.len() - tp))
}

/// Surface-variation labels from the eigenvalue baseline.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SurfaceVariation {
    /// `λ₁ / (λ₁ + λ₂ + λ₃)` per point, in `[0, 1/3]`.
    pub variation: Vec<f64>,
    pub is_edge: Vec<bool>,
}

impl SurfaceVariation {
    pub fn edge_indices(&self) -> Vec<usize> {
        self.is_edge
            .iter()
            .enumerate()
            .filter_map(|(i, &e)| e.then_some(i))
            .collect()
    }

    pub fn relabel(&self, threshold: f64) -> SurfaceVariation {
        SurfaceVariation {
            is_edge: self.variation.iter().map(|&s| s > threshold).collect(),
            variation: self.variation.clone(),
        }
    }
}

/// Unweighted covariance of the `k` nearest neighbors of every point; a
/// point is an edge when its surface variation exceeds `threshold`.
pub fn ev_baseline(cloud: &PointCloud, index: &SpatialIndex, k: usize, threshold: f64) -> Result<SurfaceVariation> {
    if k < 2 {
        return Err(Error::invalid(format!("k must be >= 2, got {k}")));
    }
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::invalid(format!("surface variation threshold must be in [0, 1], got {threshold}")));
    }
    if cloud.len() < k + 1 {
        return Err(Error::TooFewPoints {
            needed: k + 1,
            available: cloud.len(),
        });
    }
    let pts = cloud.points();
    let mut variation = Vec::with_capacity(pts.len());
    for i in 0..pts.len() {
        let neighbors = index.neighbors_of(i, k)?;
        let origin = pts[i];
        let mut mean = Point3::ZERO;
        for n in &neighbors {
            mean += pts[n.index] - origin;
        }
        mean = mean / k as f64;
        let mut cov = Mat3::ZERO;
        for n in &neighbors {
            cov.add_assign(&Mat3::outer(pts[n.index] - origin - mean, 1.0));
        }
        let cov = cov.scale(1.0 / k as f64);
        let [l1, l2, l3] = sym_eigen(&cov).values.map(|v| v.max(0.0));
        let sum = l1 + l2 + l3;
        variation.push(if sum < 1e-30 { 0.0 } else { l1 / sum });
    }
    Ok(SurfaceVariation {
        is_edge: variation.iter().map(|&s| s > threshold).collect(),
        variation,
    })
}

impl GroundTruth {
    /// Truth sets from per-point classes; corners count as edge points.
    pub fn from_labels(points: &[Point3], labels: &[PointClass], source: TruthSource) -> Result<Self> {
        if labels.len() != points.len() {
            return Err(Error::invalid(format!("{} labels for {} points", labels.len(), points.len())));
        }
        let pick = |keep: fn(PointClass) -> bool| -> Vec<Point3> {
            points
                .iter()
                .zip(labels)
                .filter(|(_, &l)| keep(l))
                .map(|(&p, _)| p)
                .collect()
        };
        Ok(Self {
            edge_points: pick(|l| l != PointClass::Plain),
            corner_points: pick(|l| l == PointClass::Corner),
            source,
        })
    }
}

/// Reads a label file: `x y z class` rows, class 0 plain, 1 edge, 2 corner.
pub fn read_labels(path: &Path) -> Result<(PointCloud, Vec<PointClass>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 4 {
            return Err(Error::parse(path, i + 1, format!("expected 4 values, found {}", toks.len())));
        }
        let mut xyz = [0.0; 3];
        for (v, tok) in xyz.iter_mut().zip(&toks) {
            *v = tok
                .parse()
                .map_err(|_| Error::parse(path, i + 1, format!("not a number: {tok:?}")))?;
        }
        let p = Point3::from(xyz);
        if !p.is_finite() {
            return Err(Error::parse(path, i + 1, "non-finite coordinate"));
        }
        let class = match toks[3] {
            "0" => PointClass::Plain,
            "1" => PointClass::Edge,
            "2" => PointClass::Corner,
            other => {
                return Err(Error::parse(path, i + 1, format!("class must be 0, 1 or 2, got {other:?}")))
            }
        };
        points.push(p);
        labels.push(class);
    }
    Ok((PointCloud::new(points)?, labels))
}

/// Ground truth from a label file. Corner rows count as edge points too.
pub fn load_labels(path: &Path) -> Result<GroundTruth> {
    let (cloud, labels) = read_labels(path)?;
    GroundTruth::from_labels(cloud.points(), &labels, TruthSource::File)
}

/// Writes one `x y z class` row per point.
pub fn save_labels(cloud: &PointCloud, labels: &[PointClass], path: &Path) -> Result<()> {
    if labels.len() != cloud.len() {
        return Err(Error::invalid(format!("{} labels for {} points", labels.len(), cloud.len())));
    }
    let mut out = String::from("# x y z class (0 plain, 1 edge, 2 corner)\n");
    for (p, class) in cloud.points().iter().zip(labels) {
        let c = match class {
            PointClass::Plain => 0,
            PointClass::Edge => 1,
            PointClass::Corner => 2,
        };
        let _ = writeln!(
            out,
            "{} {} {} {c}",
            crate::cloud::format_coord(p.x),
            crate::cloud::format_coord(p.y),
            crate::cloud::format_coord(p.z)
        );
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
