//! Lloyd k-means on axial unit vectors (`v` and `-v` are the same direction).
//!
//! The objective is `Σ_v min_c min_{s=±1} ‖s·v − μ_c‖²` over unit means `μ_c`.
//! Each assignment step picks the cluster and the sign; each update step sets
//! `μ_c` to the normalized sum of the signed members, which minimizes the
//! objective for a fixed assignment. Both steps never increase the objective.

use crate::cloud::Point3;
use crate::error::{Error, Result};

pub const MAX_ITERATIONS: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct AxialKMeans {
    /// Cluster of each input vector.
    pub assignments: Vec<usize>,
    /// Sign (+1/-1) applied to each input vector toward its cluster mean.
    pub signs: Vec<f64>,
    /// Member count per cluster.
    pub sizes: Vec<usize>,
    /// Unit mean per cluster.
    pub means: Vec<Point3>,
    /// Final objective value.
    pub objective: f64,
    /// Objective after every assignment and every update step.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Squared axial distance and the sign achieving it.
#[inline]
pub fn axial_dist2(v: Point3, mean: Point3) -> (f64, f64) {
    let plus = (v - mean).norm_squared();
    let minus = (v + mean).norm_squared();
    if plus <= minus {
        (plus, 1.0)
    } else {
        (minus, -1.0)
    }
}

/// Objective for fixed means, each vector taking its best cluster and sign.
pub fn axial_objective(vectors: &[Point3], means: &[Point3]) -> f64 {
    vectors
        .iter()
        .map(|&v| {
            means
                .iter()
                .map(|&m| axial_dist2(v, m).0)
                .fold(f64::INFINITY, f64::min)
        })
        .sum()
}

fn objective_of(vectors: &[Point3], assignments: &[usize], signs: &[f64], means: &[Point3]) -> f64 {
    vectors
        .iter()
        .zip(assignments.iter().zip(signs))
        .map(|(&v, (&c, &s))| (v * s - means[c]).norm_squared())
        .sum()
}

/// Deterministic farthest-point seeding: the first vector, then repeatedly
/// the unused vector with the largest axial distance to the chosen seeds.
fn seed(vectors: &[Point3], n: usize) -> Vec<Point3> {
    let mut chosen = vec![0usize];
    let mut nearest: Vec<f64> = vectors.iter().map(|&v| axial_dist2(v, vectors[0]).0).collect();
    while chosen.len() < n {
        let mut best: Option<usize> = None;
        for (i, &d) in nearest.iter().enumerate() {
            if chosen.contains(&i) {
                continue;
            }
            if best.is_none_or(|b| d > nearest[b]) {
                best = Some(i);
            }
        }
        let next = best.expect("at least n vectors");
        chosen.push(next);
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(axial_dist2(vectors[i], vectors[next]).0);
        }
    }
    chosen.into_iter().map(|i| vectors[i]).collect()
}

/// Clusters unit `vectors` into `n` axial clusters.
pub fn kmeans_axial(vectors: &[Point3], n: usize) -> Result<AxialKMeans> {
    if n == 0 {
        return Err(Error::invalid("cluster count must be at least 1"));
    }
    if vectors.len() < n {
        return Err(Error::invalid(format!(
            "{} vectors cannot form {n} clusters",
            vectors.len()
        )));
    }

    let m = vectors.len();
    let mut means = seed(vectors, n);
    let mut assignments = vec![usize::MAX; m];
    let mut signs = vec![1.0; m];
    let mut trace = Vec::with_capacity(2 * MAX_ITERATIONS);
    let mut converged = false;
    let mut iterations = 0;

    while iterations < MAX_ITERATIONS {
        iterations += 1;

        let mut next_assign = vec![0usize; m];
        let mut next_signs = vec![1.0; m];
        let mut cost = vec![0.0; m];
        for (i, &v) in vectors.iter().enumerate() {
            let mut best = (f64::INFINITY, 1.0, 0usize);
            for (c, &mu) in means.iter().enumerate() {
                let (d, s) = axial_dist2(v, mu);
                if d < best.0 {
                    best = (d, s, c);
                }
            }
            cost[i] = best.0;
            next_signs[i] = best.1;
            next_assign[i] = best.2;
        }

        // An empty cluster takes the worst-fitting vector of a cluster that
        // can spare one. That vector's cost drops to zero.
        let mut sizes = vec![0usize; n];
        for &c in &next_assign {
            sizes[c] += 1;
        }
        for c in 0..n {
            if sizes[c] > 0 {
                continue;
            }
            let mut worst: Option<usize> = None;
            for i in 0..m {
                if sizes[next_assign[i]] < 2 {
                    continue;
                }
                if worst.is_none_or(|w| cost[i] > cost[w]) {
                    worst = Some(i);
                }
            }
            let w = worst.expect("n <= m leaves a cluster with two members");
            sizes[next_assign[w]] -= 1;
            sizes[c] = 1;
            next_assign[w] = c;
            means[c] = vectors[w] * next_signs[w];
            cost[w] = 0.0;
        }
        trace.push(objective_of(vectors, &next_assign, &next_signs, &means));

        let stable = next_assign == assignments && next_signs == signs;
        assignments = next_assign;
        signs = next_signs;

        for (c, mean) in means.iter_mut().enumerate() {
            let mut sum = Point3::ZERO;
            for i in 0..m {
                if assignments[i] == c {
                    sum += vectors[i] * signs[i];
                }
            }
            if let Some(u) = sum.normalized() {
                *mean = u;
            }
        }
        trace.push(objective_of(vectors, &assignments, &signs, &means));

        if stable {
            converged = true;
            break;
        }
    }

    let mut sizes = vec![0usize; n];
    for &c in &assignments {
        sizes[c] += 1;
    }
    let objective = *trace.last().expect("at least one iteration");
    Ok(AxialKMeans {
        assignments,
        signs,
        sizes,
        means,
        objective,
        trace,
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const X: Point3 = Point3::new(1.0, 0.0, 0.0);
    const Y: Point3 = Point3::new(0.0, 1.0, 0.0);

    #[test]
    fn separated_clusters() {
        let r = kmeans_axial(&[X, X, Y, Y], 2).unwrap();
        assert_eq!(r.sizes, vec![2, 2]);
        assert_eq!(r.means, vec![X, Y]);
        assert_eq!(r.assignments, vec![0, 0, 1, 1]);
        assert_eq!(r.objective, 0.0);
        assert!(r.converged);
    }

    #[test]
    fn opposite_vectors_split_by_repair() {
        let r = kmeans_axial(&[X, -X], 2).unwrap();
        assert_eq!(r.sizes, vec![1, 1]);
        assert_eq!(r.objective, 0.0);
        for m in &r.means {
            assert_eq!(m.x.abs(), 1.0);
        }
        assert!(r.converged);
    }

    #[test]
    fn sign_flips_join_a_cluster() {
        let r = kmeans_axial(&[X, -X, Y, -Y * 1.0], 2).unwrap();
        assert_eq!(r.sizes, vec![2, 2]);
        assert_eq!(r.objective, 0.0);
        assert_eq!(r.assignments[0], r.assignments[1]);
        assert_eq!(r.assignments[2], r.assignments[3]);
    }

    #[test]
    fn too_few_vectors() {
        assert!(kmeans_axial(&[X], 2).is_err());
        assert!(kmeans_axial(&[X, Y], 0).is_err());
    }

    #[test]
    fn identical_vectors_three_clusters() {
        let r = kmeans_axial(&[X, X, X, X], 3).unwrap();
        assert_eq!(r.sizes.iter().sum::<usize>(), 4);
        assert!(r.sizes.iter().all(|&s| s >= 1));
        assert_eq!(r.objective, 0.0);
    }
}
