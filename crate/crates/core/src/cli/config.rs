//! `key = value` parameter files and their merge with command-line flags.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde_json::Value;

use crate::corner::{CornerParams, DEFAULT_EPSILON, DEFAULT_K as DEFAULT_CORNER_K, DEFAULT_RHO, DEFAULT_THETA1_DEG, DEFAULT_THETA2_DEG};
use crate::edge::{EdgeParams, DEFAULT_K as DEFAULT_EDGE_K, DEFAULT_LAMBDA};
use crate::error::{Error, Result};
use crate::pipeline::PipelineParams;
use crate::seam::{SeamParams, DEFAULT_BINS, DEFAULT_GAMMA};

pub const KEYS: [&str; 14] = [
    "edge.k",
    "edge.lambda",
    "corner.K",
    "corner.R",
    "corner.rho",
    "corner.epsilon",
    "corner.theta1_deg",
    "corner.theta2_deg",
    "corner.merge_radius",
    "seam.delta",
    "seam.bins",
    "seam.gamma",
    "eval.tau",
    "voxel.leaf",
];

/// Parameter values that were given explicitly, by file or by flag.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub edge_k: Option<usize>,
    pub edge_lambda: Option<f64>,
    pub corner_k: Option<usize>,
    pub corner_radius: Option<f64>,
    pub rho: Option<f64>,
    pub epsilon: Option<f64>,
    pub theta1_deg: Option<f64>,
    pub theta2_deg: Option<f64>,
    pub merge_radius: Option<f64>,
    pub seam_delta: Option<f64>,
    pub seam_bins: Option<usize>,
    pub seam_gamma: Option<f64>,
    pub tau: Option<f64>,
    pub voxel_leaf: Option<f64>,
}

impl Overrides {
    /// Values from `self`, falling back to `lower` where absent.
    pub fn or(self, lower: Overrides) -> Overrides {
        Overrides {
            edge_k: self.edge_k.or(lower.edge_k),
            edge_lambda: self.edge_lambda.or(lower.edge_lambda),
            corner_k: self.corner_k.or(lower.corner_k),
            corner_radius: self.corner_radius.or(lower.corner_radius),
            rho: self.rho.or(lower.rho),
            epsilon: self.epsilon.or(lower.epsilon),
            theta1_deg: self.theta1_deg.or(lower.theta1_deg),
            theta2_deg: self.theta2_deg.or(lower.theta2_deg),
            merge_radius: self.merge_radius.or(lower.merge_radius),
            seam_delta: self.seam_delta.or(lower.seam_delta),
            seam_bins: self.seam_bins.or(lower.seam_bins),
            seam_gamma: self.seam_gamma.or(lower.seam_gamma),
            tau: self.tau.or(lower.tau),
            voxel_leaf: self.voxel_leaf.or(lower.voxel_leaf),
        }
    }

    fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num(v: &str) -> std::result::Result<f64, String> {
            let x: f64 = v.parse().map_err(|_| format!("not a number: {v:?}"))?;
            if x.is_finite() {
                Ok(x)
            } else {
                Err(format!("not a finite number: {v:?}"))
            }
        }
        fn count(v: &str) -> std::result::Result<usize, String> {
            v.parse().map_err(|_| format!("not a non-negative integer: {v:?}"))
        }
        match key {
            "edge.k" => self.edge_k = Some(count(value)?),
            "edge.lambda" => self.edge_lambda = Some(num(value)?),
            "corner.K" => self.corner_k = Some(count(value)?),
            "corner.R" => self.corner_radius = Some(num(value)?),
            "corner.rho" => self.rho = Some(num(value)?),
            "corner.epsilon" => self.epsilon = Some(num(value)?),
            "corner.theta1_deg" => self.theta1_deg = Some(num(value)?),
            "corner.theta2_deg" => self.theta2_deg = Some(num(value)?),
            "corner.merge_radius" => self.merge_radius = Some(num(value)?),
            "seam.delta" => self.seam_delta = Some(num(value)?),
            "seam.bins" => self.seam_bins = Some(count(value)?),
            "seam.gamma" => self.seam_gamma = Some(num(value)?),
            "eval.tau" => self.tau = Some(num(value)?),
            "voxel.leaf" => self.voxel_leaf = Some(num(value)?),
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }
}

/// Parses parameter-file text. `origin` names the source in messages.
pub fn parse_config_str(text: &str, origin: &str) -> Result<Overrides> {
    let mut out = Overrides::default();
    let mut seen = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fail = |msg: String| Error::invalid(format!("{origin}:{}: {msg}", i + 1));
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| fail(format!("expected `key = value`, got {line:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        if let Some(first) = seen.insert(key.to_string(), i + 1) {
            return Err(fail(format!("{key} already set on line {first}")));
        }
        out.set(key, value).map_err(fail)?;
    }
    Ok(out)
}

pub fn parse_config_file(path: &Path) -> Result<Overrides> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text, &path.display().to_string())
}

/// Fully resolved parameters. Corner angles are in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Config {
    pub pipeline: PipelineParams,
    /// Matching distance; `None` derives it from the truth cloud's spacing.
    pub tau: Option<f64>,
    /// Voxel leaf size; `None` disables downsampling.
    pub voxel_leaf: Option<f64>,
}

impl Default for Config {
    fn default() -> Self {
        Self::resolve(Overrides::default()).expect("defaults are valid")
    }
}

impl Config {
    /// Applies defaults to absent values and validates the result.
    pub fn resolve(o: Overrides) -> Result<Config> {
        let edge = EdgeParams {
            k: o.edge_k.unwrap_or(DEFAULT_EDGE_K),
            lambda: o.edge_lambda.unwrap_or(DEFAULT_LAMBDA),
        };
        edge.validate()?;
        let corner = CornerParams {
            k: o.corner_k.unwrap_or(DEFAULT_CORNER_K),
            radius: o.corner_radius,
            rho: o.rho.unwrap_or(DEFAULT_RHO),
            epsilon: o.epsilon.unwrap_or(DEFAULT_EPSILON),
            theta1: o.theta1_deg.unwrap_or(DEFAULT_THETA1_DEG).to_radians(),
            theta2: o.theta2_deg.unwrap_or(DEFAULT_THETA2_DEG).to_radians(),
            merge_radius: o.merge_radius,
        };
        corner.validate()?;
        let seam_bins = o.seam_bins.unwrap_or(DEFAULT_BINS);
        let seam_gamma = o.seam_gamma.unwrap_or(DEFAULT_GAMMA);
        // Delta may be derived later; check the rest with a placeholder.
        SeamParams::new(o.seam_delta.unwrap_or(1.0), seam_bins, seam_gamma)?;
        for (name, v) in [("eval.tau", o.tau), ("voxel.leaf", o.voxel_leaf)] {
            if let Some(v) = v {
                if !(v > 0.0) {
                    return Err(Error::invalid(format!("{name} must be > 0, got {v}")));
                }
            }
        }
        Ok(Config {
            pipeline: PipelineParams {
                edge,
                corner,
                seam_delta: o.seam_delta,
                seam_bins,
                seam_gamma,
            },
            tau: o.tau,
            voxel_leaf: o.voxel_leaf,
        })
    }

    /// Every parameter under its file key. Values derived at run time are
    /// taken from `derived` when known, otherwise reported as null.
    pub fn to_map(&self, derived: &Derived) -> BTreeMap<String, Value> {
        let p = &self.pipeline;
        let opt = |v: Option<f64>| v.map_or(Value::Null, Value::from);
        BTreeMap::from([
            ("edge.k".to_string(), Value::from(p.edge.k)),
            ("edge.lambda".to_string(), Value::from(p.edge.lambda)),
            ("corner.K".to_string(), Value::from(p.corner.k)),
            ("corner.R".to_string(), opt(p.corner.radius.or(derived.corner_radius))),
            ("corner.rho".to_string(), Value::from(p.corner.rho)),
            ("corner.epsilon".to_string(), Value::from(p.corner.epsilon)),
            ("corner.theta1_deg".to_string(), Value::from(p.corner.theta1.to_degrees())),
            ("corner.theta2_deg".to_string(), Value::from(p.corner.theta2.to_degrees())),
            ("corner.merge_radius".to_string(), opt(p.corner.merge_radius.or(derived.merge_radius))),
            ("seam.delta".to_string(), opt(p.seam_delta.or(derived.seam_delta))),
            ("seam.bins".to_string(), Value::from(p.seam_bins)),
            ("seam.gamma".to_string(), Value::from(p.seam_gamma)),
            ("eval.tau".to_string(), opt(self.tau.or(derived.tau))),
            ("voxel.leaf".to_string(), opt(self.voxel_leaf)),
        ])
    }
}

/// Parameters resolved from the data during a run.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Derived {
    pub corner_radius: Option<f64>,
    pub merge_radius: Option<f64>,
    pub seam_delta: Option<f64>,
    pub tau: Option<f64>,
}
