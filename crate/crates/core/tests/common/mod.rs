//! Generators and brute-force oracles shared by the integration tests.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use seamdetect::cloud::Neighbor;
use seamdetect::corner::CornerParams;
use seamdetect::edge::EdgeParams;
use seamdetect::linalg::Mat3;
use seamdetect::{Point3, PointCloud};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform points in the unit cube.
pub fn random_cloud(rng: &mut ChaCha8Rng, n: usize) -> PointCloud {
    let pts = (0..n)
        .map(|_| Point3::new(rng.random(), rng.random(), rng.random()))
        .collect();
    PointCloud::new(pts).unwrap()
}

/// Points on a small integer grid, so that equal distances (ties) and
/// duplicates are common.
pub fn tied_cloud(rng: &mut ChaCha8Rng, n: usize, side: i32) -> PointCloud {
    let pts = (0..n)
        .map(|_| {
            Point3::new(
                rng.random_range(0..side) as f64,
                rng.random_range(0..side) as f64,
                rng.random_range(0..side) as f64,
            )
        })
        .collect();
    PointCloud::new(pts).unwrap()
}

/// All points ordered by `(distance, index)`.
pub fn brute_sorted(points: &[Point3], query: Point3) -> Vec<Neighbor> {
    let mut all: Vec<Neighbor> = points
        .iter()
        .enumerate()
        .map(|(index, &p)| Neighbor {
            index,
            distance: query.distance(p),
        })
        .collect();
    all.sort_by(|a, b| a.distance.total_cmp(&b.distance).then(a.index.cmp(&b.index)));
    all
}

pub fn brute_knn(points: &[Point3], query: Point3, k: usize, exclude_self: bool) -> Vec<Neighbor> {
    let mut all = brute_sorted(points, query);
    if exclude_self && all.first().is_some_and(|n| n.distance == 0.0) {
        all.remove(0);
    }
    all.truncate(k);
    all
}

pub fn brute_neighbors_of(points: &[Point3], i: usize, k: usize) -> Vec<Neighbor> {
    let mut all = brute_sorted(points, points[i]);
    all.retain(|n| n.index != i);
    all.truncate(k);
    all
}

pub fn brute_radius(points: &[Point3], query: Point3, radius: f64) -> Vec<Neighbor> {
    let mut all = brute_sorted(points, query);
    all.retain(|n| n.distance < radius);
    all
}

/// Eigenvalues of a symmetric 3x3 matrix from its characteristic
/// polynomial (trigonometric closed form, Newton-polished), ascending.
pub fn charpoly_eigenvalues(m: &Mat3) -> [f64; 3] {
    let a = |r, c| m.get(r, c);
    let tr = a(0, 0) + a(1, 1) + a(2, 2);
    let c1 = a(0, 0) * a(1, 1) + a(0, 0) * a(2, 2) + a(1, 1) * a(2, 2)
        - a(0, 1) * a(1, 0)
        - a(0, 2) * a(2, 0)
        - a(1, 2) * a(2, 1);
    let det = a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) - a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0))
        + a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
    // x^3 - tr x^2 + c1 x - det = 0; substitute x = y + tr/3.
    let shift = tr / 3.0;
    let p = c1 - tr * tr / 3.0;
    let q = -2.0 * tr.powi(3) / 27.0 + tr * c1 / 3.0 - det;
    let mut roots = if p.abs() < 1e-300 {
        [shift; 3]
    } else {
        let r = (-p / 3.0).max(0.0).sqrt();
        let arg = if r == 0.0 { 0.0 } else { (-q / (2.0 * r.powi(3))).clamp(-1.0, 1.0) };
        let phi = arg.acos() / 3.0;
        let two_pi_3 = 2.0 * std::f64::consts::PI / 3.0;
        [
            shift + 2.0 * r * phi.cos(),
            shift + 2.0 * r * (phi - two_pi_3).cos(),
            shift + 2.0 * r * (phi + two_pi_3).cos(),
        ]
    };
    for x in roots.iter_mut() {
        for _ in 0..3 {
            let f = ((*x - tr) * *x + c1) * *x - det;
            let df = (3.0 * *x - 2.0 * tr) * *x + c1;
            if df.abs() > 1e-300 {
                let step = f / df;
                if step.is_finite() {
                    *x -= step;
                }
            }
        }
    }
    roots.sort_by(f64::total_cmp);
    roots
}

/// Random symmetric matrix with entries in [-1, 1], scaled by `scale`.
pub fn random_symmetric(rng: &mut ChaCha8Rng, scale: f64) -> Mat3 {
    let mut m = [[0.0; 3]; 3];
    for r in 0..3 {
        for c in r..3 {
            let v = rng.random_range(-1.0..1.0) * scale;
            m[r][c] = v;
            m[c][r] = v;
        }
    }
    Mat3(m)
}

fn unit(rng: &mut ChaCha8Rng) -> Point3 {
    loop {
        let v = Point3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        if let Some(u) = v.normalized() {
            if v.norm() <= 1.0 {
                return u;
            }
        }
    }
}

pub fn random_unit(rng: &mut ChaCha8Rng) -> Point3 {
    unit(rng)
}

/// `m` unit vectors scattered around `n` random axes with random signs.
pub fn axial_instance(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Vec<Point3> {
    let axes: Vec<Point3> = (0..n).map(|_| unit(rng)).collect();
    let spread = rng.random_range(0.05..0.6);
    (0..m)
        .map(|i| {
            let axis = axes[i % n];
            let noisy = axis + unit(rng) * (spread * rng.random::<f64>());
            let u = noisy.normalized().unwrap_or(axis);
            if rng.random::<bool>() {
                u
            } else {
                -u
            }
        })
        .collect()
}

/// Best objective of one cluster: `2|S| - 2 max_signs ‖Σ s v‖`.
fn cluster_cost(vectors: &[Point3], members: &[usize]) -> f64 {
    if members.is_empty() {
        return 0.0;
    }
    let (first, rest) = members.split_first().unwrap();
    let mut best: f64 = 0.0;
    for mask in 0u32..(1 << rest.len()) {
        let mut sum = vectors[*first];
        for (b, &i) in rest.iter().enumerate() {
            let s = if mask >> b & 1 == 1 { -1.0 } else { 1.0 };
            sum += vectors[i] * s;
        }
        best = best.max(sum.norm());
    }
    2.0 * members.len() as f64 - 2.0 * best
}

/// Global optimum of the axial k-means objective over all partitions of
/// `vectors` into exactly `n` non-empty clusters.
pub fn exhaustive_axial_optimum(vectors: &[Point3], n: usize) -> f64 {
    let m = vectors.len();
    assert!(m <= 16 && n >= 1 && n <= m);
    let full = (1usize << m) - 1;
    let cost: Vec<f64> = (0..=full)
        .map(|s| {
            let members: Vec<usize> = (0..m).filter(|&i| s >> i & 1 == 1).collect();
            cluster_cost(vectors, &members)
        })
        .collect();
    // best[j][s]: s split into exactly j non-empty clusters.
    let mut best = vec![vec![f64::INFINITY; full + 1]; n + 1];
    best[1][1..].copy_from_slice(&cost[1..]);
    for j in 2..=n {
        for s in 1..=full {
            let low = s & s.wrapping_neg();
            let rest = s ^ low;
            // The cluster holding the lowest element is `low | t`, t ⊆ rest.
            let mut t = rest;
            loop {
                let first = low | t;
                let other = s ^ first;
                if other != 0 {
                    let v = cost[first] + best[j - 1][other];
                    if v < best[j][s] {
                        best[j][s] = v;
                    }
                }
                if t == 0 {
                    break;
                }
                t = (t - 1) & rest;
            }
        }
    }
    best[n][full]
}

/// Axis-aligned box for the scene generator.
struct SceneBox {
    lo: [f64; 3],
    hi: [f64; 3],
}

/// Depth-camera style scene: a 640x480 pinhole camera looking at a floor,
/// a back wall and random boxes; one point per pixel where a ray hits.
/// Pixels that miss everything fall on the wall plane extended.
pub fn random_scene(seed: u64, width: usize, height: usize) -> PointCloud {
    let mut rng = rng(seed);
    let boxes: Vec<SceneBox> = (0..12)
        .map(|_| {
            let cx = rng.random_range(-1.2..1.2);
            let cz = rng.random_range(1.5..3.5);
            let sx = rng.random_range(0.15..0.6);
            let sy = rng.random_range(0.15..0.8);
            let sz = rng.random_range(0.15..0.6);
            SceneBox {
                lo: [cx - sx / 2.0, -1.0, cz - sz / 2.0],
                hi: [cx + sx / 2.0, -1.0 + sy, cz + sz / 2.0],
            }
        })
        .collect();
    let floor_y = -1.0;
    let wall_z = 4.0;
    let f = 525.0 * width as f64 / 640.0;
    let (cx, cy) = (width as f64 / 2.0, height as f64 / 2.0);
    let mut pts = Vec::with_capacity(width * height);
    for v in 0..height {
        for u in 0..width {
            let d = Point3::new((u as f64 + 0.5 - cx) / f, -(v as f64 + 0.5 - cy) / f, 1.0);
            let mut t_best = wall_z / d.z;
            if d.y < 0.0 {
                t_best = t_best.min(floor_y / d.y);
            }
            for b in &boxes {
                let mut t0 = 0.0f64;
                let mut t1 = f64::INFINITY;
                let dir = d.to_array();
                for a in 0..3 {
                    if dir[a].abs() < 1e-15 {
                        if 0.0 < b.lo[a] || 0.0 > b.hi[a] {
                            t1 = -1.0;
                        }
                        continue;
                    }
                    let ta = b.lo[a] / dir[a];
                    let tb = b.hi[a] / dir[a];
                    t0 = t0.max(ta.min(tb));
                    t1 = t1.min(ta.max(tb));
                }
                if t0 <= t1 && t0 > 0.0 {
                    t_best = t_best.min(t0);
                }
            }
            pts.push(d * t_best);
        }
    }
    PointCloud::new(pts).unwrap()
}

/// Edge parameters documented for the synthetic cube.
pub fn cube_edge_params() -> EdgeParams {
    EdgeParams { k: 100, lambda: 1.0 }
}

/// Edge parameters documented for the synthetic panel. The rib foot is a
/// T-shaped crease with plate on both sides, so its centroid shift is
/// smaller than at a cube crease.
pub fn panel_edge_params() -> EdgeParams {
    EdgeParams { k: 100, lambda: 0.5 }
}

/// Corner parameters documented for the synthetic cube; `rho`, `R` and the
/// merge radius keep their defaults.
pub fn cube_corner_params() -> CornerParams {
    CornerParams {
        k: 21,
        epsilon: 1.0,
        theta1: 30f64.to_radians(),
        theta2: 140f64.to_radians(),
        ..CornerParams::default()
    }
}
