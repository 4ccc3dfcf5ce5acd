//! Centroid-shift edge detection.
//!
//! A point is an edge point when the mean of its `k` nearest neighbors lies
//! far from it compared to the distance of its closest neighbor:
//!
//! ```text
//! ‖mean(V) − p‖ > λ · min_{n ∈ V} ‖p − n‖
//! ```
//!
//! Both sides scale linearly with the coordinates, so the verdict does not
//! depend on the unit or sampling density of the cloud.

use log::warn;

use crate::cloud::{Point3, PointCloud, SpatialIndex};
use crate::error::{Error, Result};

/// Default neighborhood size.
pub const DEFAULT_K: usize = 100;
/// Default threshold multiplier.
pub const DEFAULT_LAMBDA: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeParams {
    pub k: usize,
    pub lambda: f64,
}

impl Default for EdgeParams {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            lambda: DEFAULT_LAMBDA,
        }
    }
}

impl EdgeParams {
    pub fn new(k: usize, lambda: f64) -> Result<Self> {
        let params = Self { k, lambda };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::invalid(format!("edge k must be >= 2, got {}", self.k)));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid(format!("edge lambda must be > 0, got {}", self.lambda)));
        }
        Ok(())
    }
}

/// Outcome of the edge test for a single point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeVerdict {
    pub is_edge: bool,
    pub centroid: Point3,
    /// ‖centroid − p‖
    pub shift: f64,
    /// Distance from p to its closest neighbor.
    pub resolution: f64,
}

/// Per-point edge flags with the quantities behind them.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EdgeLabeling {
    pub is_edge: Vec<bool>,
    pub shift: Vec<f64>,
    pub resolution: Vec<f64>,
    pub centroid: Vec<Point3>,
}

impl EdgeLabeling {
    pub fn len(&self) -> usize {
        self.is_edge.len()
    }

    pub fn is_empty(&self) -> bool {
        self.is_edge.is_empty()
    }

    /// Indices of edge points, ascending.
    pub fn edge_indices(&self) -> Vec<usize> {
        self.is_edge
            .iter()
            .enumerate()
            .filter_map(|(i, &e)| e.then_some(i))
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.is_edge.iter().filter(|&&e| e).count()
    }

    /// Re-thresholds the stored shift/resolution at another `lambda`
    /// without repeating the neighbor search.
    pub fn relabel(&self, lambda: f64) -> EdgeLabeling {
        EdgeLabeling {
            is_edge: self
                .shift
                .iter()
                .zip(&self.resolution)
                .map(|(&s, &z)| s > lambda * z)
                .collect(),
            ..self.clone()
        }
    }

    fn push(&mut self, v: EdgeVerdict) {
        self.is_edge.push(v.is_edge);
        self.shift.push(v.shift);
        self.resolution.push(v.resolution);
        self.centroid.push(v.centroid);
    }
}

/// Compensated (Neumaier) running sum of vectors.
#[derive(Default, Clone, Copy)]
struct CompensatedSum {
    sum: [f64; 3],
    comp: [f64; 3],
}

impl CompensatedSum {
    #[inline]
    fn add(&mut self, v: Point3) {
        for (a, x) in v.to_array().into_iter().enumerate() {
            let t = self.sum[a] + x;
            if self.sum[a].abs() >= x.abs() {
                self.comp[a] += (self.sum[a] - t) + x;
            } else {
                self.comp[a] += (x - t) + self.sum[a];
            }
            self.sum[a] = t;
        }
    }

    #[inline]
    fn total(&self) -> Point3 {
        Point3::new(
            self.sum[0] + self.comp[0],
            self.sum[1] + self.comp[1],
            self.sum[2] + self.comp[2],
        )
    }
}

/// Classifies `p` against its neighbor set.
///
/// `neighbors` must not contain `p` itself. A zero resolution (a duplicate
/// of `p` among the neighbors) is an error here; [`detect_edges`] instead
/// labels such points and logs a warning.
pub fn edge_test(p: Point3, neighbors: &[Point3], lambda: f64) -> Result<EdgeVerdict> {
    let verdict = edge_verdict(p, neighbors.iter().copied(), lambda)?;
    if verdict.resolution == 0.0 {
        return Err(Error::Degenerate(
            "zero resolution: a neighbor coincides with the query point".into(),
        ));
    }
    Ok(verdict)
}

fn edge_verdict(
    p: Point3,
    neighbors: impl ExactSizeIterator<Item = Point3>,
    lambda: f64,
) -> Result<EdgeVerdict> {
    let count = neighbors.len();
    if count == 0 {
        return Err(Error::invalid("edge test needs at least one neighbor"));
    }
    // Summing offsets from p keeps the centroid accurate far from the origin.
    let mut acc = CompensatedSum::default();
    let mut resolution = f64::INFINITY;
    for n in neighbors {
        acc.add(n - p);
        resolution = resolution.min(p.distance(n));
    }
    let offset = acc.total() / count as f64;
    let shift = offset.norm();
    Ok(EdgeVerdict {
        is_edge: shift > lambda * resolution,
        centroid: p + offset,
        shift,
        resolution,
    })
}

fn classify_point(cloud: &PointCloud, index: &SpatialIndex, i: usize, params: &EdgeParams) -> Result<EdgeVerdict> {
    let pts = cloud.points();
    let neighbors = index.neighbors_of(i, params.k)?;
    edge_verdict(pts[i], neighbors.iter().map(|n| pts[n.index]), params.lambda)
}

fn check_inputs(cloud: &PointCloud, index: &SpatialIndex, params: &EdgeParams) -> Result<()> {
    params.validate()?;
    if index.len() != cloud.len() {
        return Err(Error::invalid("spatial index was built over a different cloud"));
    }
    if cloud.len() < params.k + 1 {
        return Err(Error::TooFewPoints {
            needed: params.k + 1,
            available: cloud.len(),
        });
    }
    Ok(())
}

fn warn_on_duplicates(labels: &EdgeLabeling) {
    let zero = labels.resolution.iter().filter(|&&z| z == 0.0).count();
    if zero > 0 {
        warn!("{zero} points have a duplicate neighbor (zero resolution); consider voxel downsampling");
    }
}

/// Runs the edge test on every point of `cloud` with its `k` nearest
/// neighbors (the point itself excluded).
pub fn detect_edges(cloud: &PointCloud, index: &SpatialIndex, params: &EdgeParams) -> Result<EdgeLabeling> {
    check_inputs(cloud, index, params)?;
    let mut labels = EdgeLabeling::default();
    for i in 0..cloud.len() {
        labels.push(classify_point(cloud, index, i, params)?);
    }
    warn_on_duplicates(&labels);
    Ok(labels)
}

/// Parallel [`detect_edges`]; the result is bit-identical to the sequential
/// version.
#[cfg(feature = "rayon")]
pub fn detect_edges_par(cloud: &PointCloud, index: &SpatialIndex, params: &EdgeParams) -> Result<EdgeLabeling> {
    use rayon::prelude::*;

    check_inputs(cloud, index, params)?;
    let verdicts: Vec<EdgeVerdict> = (0..cloud.len())
        .into_par_iter()
        .map(|i| classify_point(cloud, index, i, params))
        .collect::<Result<_>>()?;
    let mut labels = EdgeLabeling::default();
    for v in verdicts {
        labels.push(v);
    }
    warn_on_duplicates(&labels);
    Ok(labels)
}
