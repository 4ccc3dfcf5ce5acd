//! Corner detection over the edge set.
//!
//! For every edge point a curvature vector is taken from a distance-weighted
//! covariance of its edge neighbors within a radius `R`. A point is a corner
//! candidate when the curvature vectors of its `K` nearest edge neighbors
//! split into two or three clusters of similar size whose mean directions
//! are at moderate angles to each other. Connected groups of candidates are
//! then merged into single corner points.

pub mod kmeans;

use log::{debug, warn};
use serde::Serialize;

use crate::cloud::{mean_nn_spacing, Point3, PointCloud, SpatialIndex};
use crate::edge::EdgeLabeling;
use crate::error::{Error, Result};
use crate::linalg::{canonical_sign, sym_eigen, Mat3};

pub use kmeans::{kmeans_axial, AxialKMeans};

/// Default number of edge neighbors per candidate.
pub const DEFAULT_K: usize = 20;
pub const DEFAULT_RHO: f64 = 0.005;
pub const DEFAULT_EPSILON: f64 = 3.0;
pub const DEFAULT_THETA1_DEG: f64 = 60.0;
pub const DEFAULT_THETA2_DEG: f64 = 130.0;
/// Covariance radius as a multiple of the edge cloud's mean spacing.
pub const RADIUS_SPACING_FACTOR: f64 = 3.0;
/// Merge radius as a multiple of the edge cloud's mean spacing.
pub const MERGE_SPACING_FACTOR: f64 = 2.0;

const DEGENERATE_GAP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CornerParams {
    /// Number of nearest edge neighbors clustered per edge point.
    pub k: usize,
    /// Covariance radius in meters; `None` derives it from edge spacing.
    pub radius: Option<f64>,
    /// Per-axis extent above which an axis counts toward the cluster count.
    pub rho: f64,
    /// Allowed difference between cluster sizes (strict).
    pub epsilon: f64,
    /// Open angular interval (radians) for the angle between cluster means.
    pub theta1: f64,
    pub theta2: f64,
    /// Single-linkage distance for merging candidates; `None` derives it
    /// from edge spacing.
    pub merge_radius: Option<f64>,
}

impl Default for CornerParams {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            radius: None,
            rho: DEFAULT_RHO,
            epsilon: DEFAULT_EPSILON,
            theta1: DEFAULT_THETA1_DEG.to_radians(),
            theta2: DEFAULT_THETA2_DEG.to_radians(),
            merge_radius: None,
        }
    }
}

impl CornerParams {
    pub fn validate(&self) -> Result<()> {
        if self.k < 6 {
            return Err(Error::invalid(format!("corner K must be >= 6, got {}", self.k)));
        }
        if let Some(r) = self.radius {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::invalid(format!("corner radius must be > 0, got {r}")));
            }
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::invalid(format!("rho must be > 0, got {}", self.rho)));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::invalid(format!("epsilon must be >= 0, got {}", self.epsilon)));
        }
        let pi = std::f64::consts::PI;
        if !(0.0 <= self.theta1 && self.theta1 < self.theta2 && self.theta2 <= pi) {
            return Err(Error::invalid(format!(
                "need 0 <= theta1 < theta2 <= 180 degrees, got {} and {}",
                self.theta1.to_degrees(),
                self.theta2.to_degrees()
            )));
        }
        if let Some(r) = self.merge_radius {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::invalid(format!("merge radius must be > 0, got {r}")));
            }
        }
        Ok(())
    }
}

/// Distance-weighted covariance of `neighbors` (point, distance to `p`).
///
/// Weights are `radius − d`; the neighbors are centered on their plain
/// centroid.
pub fn weighted_covariance(neighbors: &[(Point3, f64)], radius: f64) -> Result<Mat3> {
    if neighbors.is_empty() {
        return Err(Error::invalid("covariance needs at least one neighbor"));
    }
    let origin = neighbors[0].0;
    let mut offset = Point3::ZERO;
    for &(q, _) in neighbors {
        offset += q - origin;
    }
    let mean_offset = offset / neighbors.len() as f64;

    let mut acc = Mat3::ZERO;
    let mut total = 0.0;
    for &(q, d) in neighbors {
        let w = radius - d;
        acc.add_assign(&Mat3::outer((q - origin) - mean_offset, w));
        total += w;
    }
    if !(total > 0.0) {
        return Err(Error::Degenerate("covariance weights sum to zero".into()));
    }
    let mut sigma = acc.scale(1.0 / total);
    // Symmetric by construction; copy the upper triangle to make it exact.
    for r in 0..3 {
        for c in 0..r {
            sigma.0[r][c] = sigma.0[c][r];
        }
    }
    Ok(sigma)
}

/// Smallest-eigenvalue direction of a covariance tensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureVector {
    /// Unit vector, sign-canonicalized.
    pub vector: Point3,
    /// Eigenvalues ascending.
    pub eigenvalues: [f64; 3],
    /// The two smallest eigenvalues are (nearly) equal, so `vector` is not
    /// well defined.
    pub degenerate: bool,
}

pub fn curvature_vector(sigma: &Mat3) -> Result<CurvatureVector> {
    if !sigma.is_finite() {
        return Err(Error::invalid("covariance has non-finite entries"));
    }
    if sigma.asymmetry() > 1e-9 * sigma.max_abs().max(1.0) {
        return Err(Error::invalid("covariance is not symmetric"));
    }
    let eig = sym_eigen(sigma);
    let [l1, l2, l3] = eig.values;
    Ok(CurvatureVector {
        vector: canonical_sign(eig.vectors[0]),
        eigenvalues: eig.values,
        degenerate: (l2 - l1) <= DEGENERATE_GAP * l3.max(1e-30),
    })
}

/// Curvature vectors of every edge point (indexed like the edge list).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CurvatureField {
    pub vector: Vec<Point3>,
    pub eigenvalues: Vec<[f64; 3]>,
    pub degenerate: Vec<bool>,
}

/// Number of axes along which the neighbors' extent exceeds `rho`.
pub fn cluster_count(neighbors: &[Point3], rho: f64) -> usize {
    if neighbors.is_empty() {
        return 0;
    }
    (0..3)
        .filter(|&a| {
            let (lo, hi) = neighbors.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                (lo.min(p.axis(a)), hi.max(p.axis(a)))
            });
            hi - lo > rho
        })
        .count()
}

/// Cluster statistics behind one corner verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterStats {
    pub n: usize,
    pub sizes: Vec<usize>,
    /// Canonicalized unit cluster means.
    pub means: Vec<Point3>,
    /// Pairwise angles (radians) in the order (0,1), (0,2), (1,2).
    pub angles: Vec<f64>,
}

/// Angle between two axial directions after sign canonicalization.
pub fn axial_angle(a: Point3, b: Point3) -> f64 {
    let a = canonical_sign(a);
    let b = canonical_sign(b);
    a.cross(b).norm().atan2(a.dot(b))
}

/// The size/angle rule: every pair of clusters must differ in size by less
/// than `epsilon` and have means at an angle strictly inside
/// `(theta1, theta2)`. Returns the verdict and the pairwise angles.
pub fn corner_test(sizes: &[usize], means: &[Point3], params: &CornerParams) -> (bool, Vec<f64>) {
    debug_assert_eq!(sizes.len(), means.len());
    let mut angles = Vec::with_capacity(3);
    let mut ok = true;
    for i in 0..sizes.len() {
        for j in i + 1..sizes.len() {
            let phi = axial_angle(means[i], means[j]);
            angles.push(phi);
            let size_gap = sizes[i].abs_diff(sizes[j]) as f64;
            if !(size_gap < params.epsilon && params.theta1 < phi && phi < params.theta2) {
                ok = false;
            }
        }
    }
    (ok, angles)
}

/// A corner reported as the centroid of a connected group of candidates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MergedCorner {
    pub position: Point3,
    /// Indices into the candidate list, ascending.
    pub members: Vec<usize>,
}

/// Single-linkage grouping of `candidates` at distance `< merge_radius`.
/// Groups are ordered by their smallest member index.
pub fn merge_corners(candidates: &[Point3], merge_radius: f64) -> Result<Vec<MergedCorner>> {
    if !(merge_radius > 0.0) {
        return Err(Error::invalid(format!("merge radius must be > 0, got {merge_radius}")));
    }
    if candidates.is_empty() {
        return Ok(Vec::new());
    }
    let index = SpatialIndex::from_points(candidates)?;
    let mut parent: Vec<usize> = (0..candidates.len()).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for (i, &p) in candidates.iter().enumerate() {
        for n in index.radius_search(p, merge_radius) {
            let (a, b) = (find(&mut parent, i), find(&mut parent, n.index));
            if a != b {
                // Keep the smaller index as root.
                parent[a.max(b)] = a.min(b);
            }
        }
    }

    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; candidates.len()];
    for i in 0..candidates.len() {
        let root = find(&mut parent, i);
        if slot[root] == usize::MAX {
            slot[root] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[root]].push(i);
    }
    Ok(groups
        .into_iter()
        .map(|members| {
            let mut sum = Point3::ZERO;
            for &m in &members {
                sum += candidates[m];
            }
            MergedCorner {
                position: sum / members.len() as f64,
                members,
            }
        })
        .collect())
}

/// Output of [`detect_corners`]. Per-edge-point vectors follow the order of
/// `edge_indices`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CornerResult {
    /// Cloud index of each edge point.
    pub edge_indices: Vec<usize>,
    pub curvature: CurvatureField,
    /// Corner verdict per edge point.
    pub candidate_flags: Vec<bool>,
    /// Cluster statistics per edge point; `None` when the cluster count
    /// rejected the point before clustering.
    pub stats: Vec<Option<ClusterStats>>,
    /// Merged corners; members index into `candidate_indices()`.
    pub corners: Vec<MergedCorner>,
    /// Radius and merge radius actually used.
    pub radius: f64,
    pub merge_radius: f64,
}

impl CornerResult {
    /// Cloud indices of corner candidates, ascending.
    pub fn candidate_indices(&self) -> Vec<usize> {
        self.candidate_flags
            .iter()
            .zip(&self.edge_indices)
            .filter_map(|(&c, &i)| c.then_some(i))
            .collect()
    }

    pub fn corner_points(&self) -> Vec<Point3> {
        self.corners.iter().map(|c| c.position).collect()
    }
}

/// Curvature vectors for every point of `edge_cloud`, using its neighbors
/// strictly within `radius` (the point itself excluded).
pub fn curvature_field(edge_cloud: &PointCloud, index: &SpatialIndex, radius: f64) -> Result<CurvatureField> {
    let pts = edge_cloud.points();
    let per_point = |i: usize| -> Result<CurvatureVector> {
        let neighbors: Vec<(Point3, f64)> = index
            .radius_search(pts[i], radius)
            .into_iter()
            .filter(|n| n.index != i)
            .map(|n| (pts[n.index], n.distance))
            .collect();
        if neighbors.len() < 2 {
            return Ok(CurvatureVector {
                vector: Point3::new(1.0, 0.0, 0.0),
                eigenvalues: [0.0; 3],
                degenerate: true,
            });
        }
        curvature_vector(&weighted_covariance(&neighbors, radius)?)
    };

    #[cfg(feature = "rayon")]
    let vectors: Vec<CurvatureVector> = {
        use rayon::prelude::*;
        (0..pts.len()).into_par_iter().map(per_point).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "rayon"))]
    let vectors: Vec<CurvatureVector> = (0..pts.len()).map(per_point).collect::<Result<_>>()?;

    let isolated = vectors.iter().filter(|v| v.eigenvalues == [0.0; 3] && v.degenerate).count();
    if isolated > 0 {
        warn!("{isolated} edge points have fewer than 2 neighbors within R = {radius}");
    }
    Ok(CurvatureField {
        vector: vectors.iter().map(|v| v.vector).collect(),
        eigenvalues: vectors.iter().map(|v| v.eigenvalues).collect(),
        degenerate: vectors.iter().map(|v| v.degenerate).collect(),
    })
}

/// Verdict for one edge point given its `K` nearest edge neighbors.
fn evaluate_point(
    edge_cloud: &PointCloud,
    index: &SpatialIndex,
    field: &CurvatureField,
    i: usize,
    params: &CornerParams,
) -> Result<(bool, Option<ClusterStats>)> {
    let neighbors = index.neighbors_of(i, params.k)?;
    let pts: Vec<Point3> = neighbors.iter().map(|n| edge_cloud.points()[n.index]).collect();
    let n = cluster_count(&pts, params.rho);
    if n < 2 {
        return Ok((false, None));
    }
    let vectors: Vec<Point3> = neighbors.iter().map(|nb| field.vector[nb.index]).collect();
    let clusters = kmeans_axial(&vectors, n)?;
    let means: Vec<Point3> = clusters.means.iter().map(|&m| canonical_sign(m)).collect();
    let (verdict, angles) = corner_test(&clusters.sizes, &means, params);
    Ok((
        verdict,
        Some(ClusterStats {
            n,
            sizes: clusters.sizes,
            means,
            angles,
        }),
    ))
}

/// Corner detection over the edge points of `cloud`.
pub fn detect_corners(cloud: &PointCloud, edges: &EdgeLabeling, params: &CornerParams) -> Result<CornerResult> {
    params.validate()?;
    if edges.len() != cloud.len() {
        return Err(Error::invalid("edge labeling does not match the cloud"));
    }
    let edge_indices = edges.edge_indices();
    if edge_indices.len() < params.k + 1 {
        return Err(Error::TooFewPoints {
            needed: params.k + 1,
            available: edge_indices.len(),
        });
    }
    let edge_cloud = cloud.select(&edge_indices);
    let index = SpatialIndex::build(&edge_cloud)?;
    let spacing = mean_nn_spacing(&edge_cloud, &index);
    let radius = params.radius.unwrap_or(RADIUS_SPACING_FACTOR * spacing);
    let merge_radius = params.merge_radius.unwrap_or(MERGE_SPACING_FACTOR * spacing);
    if !(radius > 0.0 && merge_radius > 0.0) {
        return Err(Error::Degenerate("edge points have zero mean spacing".into()));
    }
    debug!(
        "corners: {} edge points, spacing {spacing:.6}, R {radius:.6}, merge {merge_radius:.6}",
        edge_indices.len()
    );

    let field = curvature_field(&edge_cloud, &index, radius)?;
    let evaluate = |i: usize| evaluate_point(&edge_cloud, &index, &field, i, params);

    #[cfg(feature = "rayon")]
    let verdicts: Vec<(bool, Option<ClusterStats>)> = {
        use rayon::prelude::*;
        (0..edge_cloud.len()).into_par_iter().map(evaluate).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "rayon"))]
    let verdicts: Vec<(bool, Option<ClusterStats>)> = (0..edge_cloud.len()).map(evaluate).collect::<Result<_>>()?;

    let (candidate_flags, stats): (Vec<bool>, Vec<Option<ClusterStats>>) = verdicts.into_iter().unzip();
    let candidates: Vec<Point3> = candidate_flags
        .iter()
        .zip(edge_cloud.points())
        .filter_map(|(&c, &p)| c.then_some(p))
        .collect();
    let corners = merge_corners(&candidates, merge_radius)?;

    Ok(CornerResult {
        edge_indices,
        curvature: field,
        candidate_flags,
        stats,
        corners,
        radius,
        merge_radius,
    })
}
