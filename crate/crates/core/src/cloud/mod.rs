//! Point storage, file I/O, voxel downsampling and nearest-neighbor search.

mod io;
mod kdtree;

use std::collections::BTreeMap;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub(crate) use io::format_coord;
pub use io::{load_cloud, save_labeled_cloud, CloudFormat, PointClass};
pub use kdtree::{Neighbor, SpatialIndex};

/// A point in 3D space, coordinates in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const ZERO: Point3 = Point3::new(0.0, 0.0, 0.0);

    #[inline]
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    #[inline]
    pub fn axis(self, axis: usize) -> f64 {
        match axis {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }

    #[inline]
    pub fn dot(self, other: Point3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    #[inline]
    pub fn cross(self, other: Point3) -> Point3 {
        Point3::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    #[inline]
    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// Euclidean distance. The summation order is fixed (x, y, z) so that the
    /// value is reproducible bit-for-bit wherever distances are compared.
    #[inline]
    pub fn distance(self, other: Point3) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    /// Unit vector in the same direction, or `None` for a zero vector.
    pub fn normalized(self) -> Option<Point3> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self / n)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl From<[f64; 3]> for Point3 {
    fn from(a: [f64; 3]) -> Self {
        Point3::new(a[0], a[1], a[2])
    }
}

impl From<Point3> for [f64; 3] {
    fn from(p: Point3) -> Self {
        p.to_array()
    }
}

impl Add for Point3 {
    type Output = Point3;
    #[inline]
    fn add(self, o: Point3) -> Point3 {
        Point3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Point3 {
    #[inline]
    fn add_assign(&mut self, o: Point3) {
        self.x += o.x;
        self.y += o.y;
        self.z += o.z;
    }
}

impl Sub for Point3 {
    type Output = Point3;
    #[inline]
    fn sub(self, o: Point3) -> Point3 {
        Point3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Point3 {
    type Output = Point3;
    #[inline]
    fn neg(self) -> Point3 {
        Point3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    #[inline]
    fn mul(self, s: f64) -> Point3 {
        Point3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Div<f64> for Point3 {
    type Output = Point3;
    #[inline]
    fn div(self, s: f64) -> Point3 {
        Point3::new(self.x / s, self.y / s, self.z / s)
    }
}

/// An ordered list of points with optional per-point RGB colors.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    points: Vec<Point3>,
    colors: Option<Vec<[u8; 3]>>,
}

impl PointCloud {
    /// Builds a cloud, rejecting non-finite coordinates.
    pub fn new(points: Vec<Point3>) -> Result<Self> {
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::invalid(format!("point {i} has a non-finite coordinate")));
        }
        Ok(Self {
            points,
            colors: None,
        })
    }

    pub fn with_colors(points: Vec<Point3>, colors: Vec<[u8; 3]>) -> Result<Self> {
        if colors.len() != points.len() {
            return Err(Error::invalid(format!(
                "{} colors for {} points",
                colors.len(),
                points.len()
            )));
        }
        let mut cloud = Self::new(points)?;
        cloud.colors = Some(colors);
        Ok(cloud)
    }

    #[inline]
    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    #[inline]
    pub fn colors(&self) -> Option<&[[u8; 3]]> {
        self.colors.as_deref()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Sub-cloud made of the given point indices, in the given order.
    pub fn select(&self, indices: &[usize]) -> PointCloud {
        PointCloud {
            points: indices.iter().map(|&i| self.points[i]).collect(),
            colors: self
                .colors
                .as_ref()
                .map(|c| indices.iter().map(|&i| c[i]).collect()),
        }
    }

    /// Applies `f` to every point. Fails if the result is non-finite.
    pub fn map_points(&self, f: impl Fn(Point3) -> Point3) -> Result<PointCloud> {
        let mut out = PointCloud::new(self.points.iter().map(|&p| f(p)).collect())?;
        out.colors = self.colors.clone();
        Ok(out)
    }

    /// Pairs `(i, j)`, `i < j`, of points closer than `tol`. Duplicates make
    /// the nearest-neighbor resolution of the edge test zero.
    pub fn find_duplicates(&self, index: &SpatialIndex, tol: f64) -> Vec<(usize, usize)> {
        let tol = tol.max(f64::MIN_POSITIVE);
        let mut pairs = Vec::new();
        for (i, &p) in self.points.iter().enumerate() {
            for n in index.radius_search(p, tol) {
                if n.index > i {
                    pairs.push((i, n.index));
                }
            }
        }
        pairs
    }
}

/// Edge length of a cubic voxel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoxelSpec {
    leaf: f64,
}

impl VoxelSpec {
    pub fn new(leaf: f64) -> Result<Self> {
        if !(leaf > 0.0 && leaf.is_finite()) {
            return Err(Error::invalid(format!("voxel leaf must be > 0, got {leaf}")));
        }
        Ok(Self { leaf })
    }

    pub fn leaf(&self) -> f64 {
        self.leaf
    }
}

/// Replaces the points of each occupied voxel by their centroid.
///
/// Output is ordered by ascending voxel coordinate `(floor(x/leaf),
/// floor(y/leaf), floor(z/leaf))`. Colors, when present, are averaged.
pub fn voxel_downsample(cloud: &PointCloud, spec: VoxelSpec) -> PointCloud {
    struct Acc {
        sum: Point3,
        lo: Point3,
        hi: Point3,
        rgb: [u64; 3],
        count: usize,
    }

    let leaf = spec.leaf;
    let mut voxels: BTreeMap<(i64, i64, i64), Acc> = BTreeMap::new();
    for (i, &p) in cloud.points.iter().enumerate() {
        let key = (
            (p.x / leaf).floor() as i64,
            (p.y / leaf).floor() as i64,
            (p.z / leaf).floor() as i64,
        );
        let acc = voxels.entry(key).or_insert(Acc {
            sum: Point3::ZERO,
            lo: p,
            hi: p,
            rgb: [0; 3],
            count: 0,
        });
        acc.sum += p;
        acc.lo = Point3::new(acc.lo.x.min(p.x), acc.lo.y.min(p.y), acc.lo.z.min(p.z));
        acc.hi = Point3::new(acc.hi.x.max(p.x), acc.hi.y.max(p.y), acc.hi.z.max(p.z));
        if let Some(colors) = &cloud.colors {
            for (c, &v) in acc.rgb.iter_mut().zip(colors[i].iter()) {
                *c += u64::from(v);
            }
        }
        acc.count += 1;
    }

    let mut points = Vec::with_capacity(voxels.len());
    let mut colors = Vec::with_capacity(voxels.len());
    for acc in voxels.values() {
        let c = acc.sum / acc.count as f64;
        // Rounding in the mean may step one ulp outside the members' range.
        points.push(Point3::new(
            c.x.clamp(acc.lo.x, acc.hi.x),
            c.y.clamp(acc.lo.y, acc.hi.y),
            c.z.clamp(acc.lo.z, acc.hi.z),
        ));
        let n = acc.count as u64;
        colors.push(acc.rgb.map(|v| ((v + n / 2) / n) as u8));
    }
    PointCloud {
        points,
        colors: cloud.colors.as_ref().map(|_| colors),
    }
}

/// Mean distance from each point to its nearest other point.
///
/// Returns 0 for clouds with fewer than two points.
pub fn mean_nn_spacing(cloud: &PointCloud, index: &SpatialIndex) -> f64 {
    if cloud.len() < 2 {
        return 0.0;
    }
    let total: f64 = (0..cloud.len())
        .map(|i| {
            index
                .neighbors_of(i, 1)
                .map(|n| n[0].distance)
                .unwrap_or(0.0)
        })
        .sum();
    total / cloud.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite() {
        assert!(PointCloud::new(vec![Point3::new(0.0, f64::NAN, 0.0)]).is_err());
        assert!(PointCloud::new(vec![Point3::new(f64::INFINITY, 0.0, 0.0)]).is_err());
    }

    #[test]
    fn colors_must_match_points() {
        let pts = vec![Point3::ZERO, Point3::new(1.0, 0.0, 0.0)];
        assert!(PointCloud::with_colors(pts.clone(), vec![[0, 0, 0]]).is_err());
        assert!(PointCloud::with_colors(pts, vec![[0, 0, 0]; 2]).is_ok());
    }

    #[test]
    fn voxel_merges_points_in_one_cell() {
        let cloud = PointCloud::new(vec![
            Point3::new(0.001, 0.0, 0.0),
            Point3::new(0.002, 0.0, 0.0),
        ])
        .unwrap();
        let out = voxel_downsample(&cloud, VoxelSpec::new(0.005).unwrap());
        assert_eq!(out.len(), 1);
        assert!((out.points()[0].x - 0.0015).abs() < 1e-15);
        assert_eq!(out.points()[0].y, 0.0);
    }

    #[test]
    fn voxel_keeps_spread_points() {
        let leaf = 0.005;
        let mut pts = Vec::new();
        for i in 0..4 {
            for j in 0..3 {
                pts.push(Point3::new(
                    (i as f64 + 0.5) * leaf,
                    (j as f64 + 0.5) * leaf,
                    0.1 * leaf,
                ));
            }
        }
        let cloud = PointCloud::new(pts).unwrap();
        let out = voxel_downsample(&cloud, VoxelSpec::new(leaf).unwrap());
        assert_eq!(out.len(), cloud.len());
    }

    #[test]
    fn voxel_orders_by_cell_and_handles_empty() {
        let cloud = PointCloud::new(vec![
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(-1.0, 0.0, 0.0),
            Point3::new(0.0, 0.0, 0.0),
        ])
        .unwrap();
        let out = voxel_downsample(&cloud, VoxelSpec::new(0.5).unwrap());
        let xs: Vec<f64> = out.points().iter().map(|p| p.x).collect();
        assert_eq!(xs, vec![-1.0, 0.0, 1.0]);

        let empty = voxel_downsample(&PointCloud::default(), VoxelSpec::new(0.5).unwrap());
        assert!(empty.is_empty());
    }

    #[test]
    fn voxel_averages_colors() {
        let cloud = PointCloud::with_colors(
            vec![Point3::ZERO, Point3::new(0.1, 0.0, 0.0)],
            vec![[0, 10, 255], [10, 20, 255]],
        )
        .unwrap();
        let out = voxel_downsample(&cloud, VoxelSpec::new(1.0).unwrap());
        assert_eq!(out.colors().unwrap(), &[[5, 15, 255]]);
    }

    #[test]
    fn voxel_spec_rejects_non_positive() {
        assert!(VoxelSpec::new(0.0).is_err());
        assert!(VoxelSpec::new(-1.0).is_err());
        assert!(VoxelSpec::new(f64::NAN).is_err());
    }

    #[test]
    fn duplicates_are_reported() {
        let cloud = PointCloud::new(vec![
            Point3::ZERO,
            Point3::new(1.0, 0.0, 0.0),
            Point3::ZERO,
        ])
        .unwrap();
        let index = SpatialIndex::build(&cloud).unwrap();
        assert_eq!(cloud.find_duplicates(&index, 1e-12), vec![(0, 2)]);
    }
}
