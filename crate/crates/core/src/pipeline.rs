//! Edges, corners and seams run back to back on one cloud.

use std::time::Instant;

use serde::Serialize;

use crate::cloud::{mean_nn_spacing, Point3, PointClass, PointCloud, SpatialIndex};
use crate::corner::{detect_corners, CornerParams, CornerResult};
use crate::edge::{EdgeLabeling, EdgeParams};
use crate::error::Result;
use crate::seam::{extract_seams, SeamParams, SeamSegment, DEFAULT_BINS, DEFAULT_GAMMA, DELTA_SPACING_FACTOR};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineParams {
    pub edge: EdgeParams,
    pub corner: CornerParams,
    /// Seam support distance; `None` derives it from edge spacing.
    pub seam_delta: Option<f64>,
    pub seam_bins: usize,
    pub seam_gamma: f64,
}

impl Default for PipelineParams {
    fn default() -> Self {
        Self {
            edge: EdgeParams::default(),
            corner: CornerParams::default(),
            seam_delta: None,
            seam_bins: DEFAULT_BINS,
            seam_gamma: DEFAULT_GAMMA,
        }
    }
}

/// Point counts and timing of one stage.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stage {
    pub name: String,
    pub points_in: usize,
    pub points_out: usize,
    pub millis: f64,
}

impl Stage {
    pub(crate) fn timed(name: &str, points_in: usize, points_out: usize, start: Instant) -> Self {
        Self {
            name: name.to_string(),
            points_in,
            points_out,
            millis: start.elapsed().as_secs_f64() * 1e3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub edges: EdgeLabeling,
    pub corners: Option<CornerResult>,
    pub seams: Option<Vec<SeamSegment>>,
    /// Seam delta actually used.
    pub seam_delta: Option<f64>,
    pub stages: Vec<Stage>,
}

impl PipelineOutput {
    /// Per-point classes: corner candidates, then edges, then plain.
    pub fn labels(&self) -> Vec<PointClass> {
        let mut labels: Vec<PointClass> = self
            .edges
            .is_edge
            .iter()
            .map(|&e| if e { PointClass::Edge } else { PointClass::Plain })
            .collect();
        if let Some(c) = &self.corners {
            for i in c.candidate_indices() {
                labels[i] = PointClass::Corner;
            }
        }
        labels
    }
}

/// How far down the pipeline to go.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Depth {
    Edges,
    Corners,
    Seams,
}

pub fn edge_stage(cloud: &PointCloud, index: &SpatialIndex, params: &EdgeParams) -> Result<EdgeLabeling> {
    #[cfg(feature = "rayon")]
    return crate::edge::detect_edges_par(cloud, index, params);
    #[cfg(not(feature = "rayon"))]
    return crate::edge::detect_edges(cloud, index, params);
}

/// Runs the stages up to `depth`.
pub fn run_pipeline(cloud: &PointCloud, params: &PipelineParams, depth: Depth) -> Result<PipelineOutput> {
    params.edge.validate()?;
    params.corner.validate()?;

    let start = Instant::now();
    let index = SpatialIndex::build(cloud)?;
    let edges = edge_stage(cloud, &index, &params.edge)?;
    let mut stages = vec![Stage::timed("edges", cloud.len(), edges.edge_count(), start)];
    let mut out = PipelineOutput {
        edges,
        corners: None,
        seams: None,
        seam_delta: None,
        stages: Vec::new(),
    };

    if depth >= Depth::Corners {
        let start = Instant::now();
        let corners = detect_corners(cloud, &out.edges, &params.corner)?;
        stages.push(Stage::timed("corners", out.edges.edge_count(), corners.corners.len(), start));
        out.corners = Some(corners);
    }

    if depth >= Depth::Seams {
        let start = Instant::now();
        let corners = out.corners.as_ref().map(CornerResult::corner_points).unwrap_or_default();
        let edge_cloud = cloud.select(&out.edges.edge_indices());
        let delta = match params.seam_delta {
            Some(d) => d,
            None => {
                let edge_index = SpatialIndex::build(&edge_cloud)?;
                DELTA_SPACING_FACTOR * mean_nn_spacing(&edge_cloud, &edge_index)
            }
        };
        let seam_params = SeamParams::new(delta, params.seam_bins, params.seam_gamma)?;
        let edge_points: Vec<Point3> = edge_cloud.points().to_vec();
        let seams = extract_seams(&corners, &edge_points, &seam_params)?;
        stages.push(Stage::timed("seams", corners.len(), seams.len(), start));
        out.seams = Some(seams);
        out.seam_delta = Some(delta);
    }
    out.stages = stages;
    Ok(out)
}
