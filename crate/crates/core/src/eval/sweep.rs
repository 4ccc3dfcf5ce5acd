//! One-parameter sweeps producing a precision/recall table.

use std::collections::BTreeMap;
use std::str::FromStr;
use std::time::Instant;

use super::{ev_baseline, match_and_score, GroundTruth, PRReport};
use crate::cloud::{Point3, PointCloud, SpatialIndex};
use crate::corner::{detect_corners, CornerParams};
use crate::edge::{detect_edges, EdgeParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Detector {
    /// Centroid-shift edges.
    MsEdge,
    /// Surface-variation edges.
    EvEdge,
    Corner,
}

impl Detector {
    pub fn name(self) -> &'static str {
        match self {
            Detector::MsEdge => "ms-edge",
            Detector::EvEdge => "ev-edge",
            Detector::Corner => "corner",
        }
    }

    /// Parameters this detector can sweep.
    pub fn parameters(self) -> &'static [&'static str] {
        match self {
            Detector::MsEdge => &["k", "lambda"],
            Detector::EvEdge => &["k", "sigma"],
            Detector::Corner => &["K", "R", "rho", "epsilon", "theta1", "theta2", "merge_radius"],
        }
    }
}

impl FromStr for Detector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ms-edge" => Ok(Detector::MsEdge),
            "ev-edge" => Ok(Detector::EvEdge),
            "corner" => Ok(Detector::Corner),
            other => Err(Error::invalid(format!(
                "unknown detector {other:?} (expected ms-edge, ev-edge or corner)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub detector: Detector,
    pub param: String,
    pub values: Vec<f64>,
    /// Fixed edge parameters (also the edge stage of corner sweeps).
    pub edge: EdgeParams,
    pub corner: CornerParams,
    /// Fixed parameters of the surface-variation baseline.
    pub ev_k: usize,
    pub ev_sigma: f64,
    /// Matching distance.
    pub tau: f64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::invalid("sweep needs at least one value"));
        }
        if !self.detector.parameters().contains(&self.param.as_str()) {
            return Err(Error::invalid(format!(
                "detector {} has no parameter {:?} (expected one of {:?})",
                self.detector.name(),
                self.param,
                self.detector.parameters()
            )));
        }
        if !(self.tau > 0.0) {
            return Err(Error::invalid(format!("tau must be > 0, got {}", self.tau)));
        }
        Ok(())
    }
}

fn count_param(v: f64, name: &str) -> Result<usize> {
    if v >= 1.0 && v.fract() == 0.0 && v.is_finite() {
        Ok(v as usize)
    } else {
        Err(Error::invalid(format!("{name} must be a positive integer, got {v}")))
    }
}

fn edge_params_for(spec: &SweepSpec, value: f64) -> Result<EdgeParams> {
    let mut p = spec.edge;
    match spec.param.as_str() {
        "k" => p.k = count_param(value, "k")?,
        "lambda" => p.lambda = value,
        _ => {}
    }
    p.validate()?;
    Ok(p)
}

fn corner_params_for(spec: &SweepSpec, value: f64) -> Result<CornerParams> {
    let mut p = spec.corner;
    match spec.param.as_str() {
        "K" => p.k = count_param(value, "K")?,
        "R" => p.radius = Some(value),
        "rho" => p.rho = value,
        "epsilon" => p.epsilon = value,
        "theta1" => p.theta1 = value.to_radians(),
        "theta2" => p.theta2 = value.to_radians(),
        "merge_radius" => p.merge_radius = Some(value),
        _ => {}
    }
    p.validate()?;
    Ok(p)
}

fn edge_param_map(p: &EdgeParams) -> BTreeMap<String, f64> {
    BTreeMap::from([("k".to_string(), p.k as f64), ("lambda".to_string(), p.lambda)])
}

fn corner_param_map(p: &CornerParams, radius: f64, merge_radius: f64) -> BTreeMap<String, f64> {
    BTreeMap::from([
        ("K".to_string(), p.k as f64),
        ("R".to_string(), radius),
        ("rho".to_string(), p.rho),
        ("epsilon".to_string(), p.epsilon),
        ("theta1".to_string(), p.theta1.to_degrees()),
        ("theta2".to_string(), p.theta2.to_degrees()),
        ("merge_radius".to_string(), merge_radius),
    ])
}

fn select(cloud: &PointCloud, indices: &[usize]) -> Vec<Point3> {
    indices.iter().map(|&i| cloud.points()[i]).collect()
}

/// Runs the detector once per value in `spec.values`, holding the other
/// parameters fixed. Reports come back in value order.
pub fn sweep(cloud: &PointCloud, truth: &GroundTruth, spec: &SweepSpec) -> Result<Vec<PRReport>> {
    spec.validate()?;
    let index = SpatialIndex::build(cloud)?;
    let mut reports = Vec::with_capacity(spec.values.len());

    match spec.detector {
        Detector::MsEdge => {
            for &value in &spec.values {
                let params = edge_params_for(spec, value)?;
                let start = Instant::now();
                let labels = detect_edges(cloud, &index, &params)?;
                let detected = select(cloud, &labels.edge_indices());
                let mut report = match_and_score(&detected, &truth.edge_points, spec.tau)?;
                report.millis = start.elapsed().as_secs_f64() * 1e3;
                report.params = edge_param_map(&params);
                reports.push(report);
            }
        }
        Detector::EvEdge => {
            for &value in &spec.values {
                let (k, sigma) = match spec.param.as_str() {
                    "k" => (count_param(value, "k")?, spec.ev_sigma),
                    _ => (spec.ev_k, value),
                };
                let start = Instant::now();
                let labels = ev_baseline(cloud, &index, k, sigma)?;
                let detected = select(cloud, &labels.edge_indices());
                let mut report = match_and_score(&detected, &truth.edge_points, spec.tau)?;
                report.millis = start.elapsed().as_secs_f64() * 1e3;
                report.params = BTreeMap::from([("k".to_string(), k as f64), ("sigma".to_string(), sigma)]);
                reports.push(report);
            }
        }
        Detector::Corner => {
            // The edge stage does not depend on the swept parameter.
            let edges = detect_edges(cloud, &index, &spec.edge)?;
            for &value in &spec.values {
                let params = corner_params_for(spec, value)?;
                let start = Instant::now();
                let result = detect_corners(cloud, &edges, &params)?;
                let mut report = match_and_score(&result.corner_points(), &truth.corner_points, spec.tau)?;
                report.millis = start.elapsed().as_secs_f64() * 1e3;
                let mut map = edge_param_map(&spec.edge);
                map.extend(corner_param_map(&params, result.radius, result.merge_radius));
                report.params = map;
                reports.push(report);
            }
        }
    }
    Ok(reports)
}
