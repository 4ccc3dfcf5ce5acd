//! Small dense linear algebra for 3×3 symmetric matrices.

use crate::cloud::Point3;

/// A 3×3 matrix stored row-major. Used for covariance tensors, which are
/// symmetric by construction.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Mat3(pub [[f64; 3]; 3]);

impl Mat3 {
    pub const ZERO: Mat3 = Mat3([[0.0; 3]; 3]);
    pub const IDENTITY: Mat3 = Mat3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    pub fn diag(a: f64, b: f64, c: f64) -> Mat3 {
        Mat3([[a, 0.0, 0.0], [0.0, b, 0.0], [0.0, 0.0, c]])
    }

    /// Outer product `v vᵀ` scaled by `w`.
    #[inline]
    pub fn outer(v: Point3, w: f64) -> Mat3 {
        let a = v.to_array();
        let mut m = [[0.0; 3]; 3];
        for (r, row) in m.iter_mut().enumerate() {
            for (c, x) in row.iter_mut().enumerate() {
                *x = w * a[r] * a[c];
            }
        }
        Mat3(m)
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.0[r][c]
    }

    pub fn add_assign(&mut self, other: &Mat3) {
        for r in 0..3 {
            for c in 0..3 {
                self.0[r][c] += other.0[r][c];
            }
        }
    }

    pub fn scale(&self, s: f64) -> Mat3 {
        Mat3(self.0.map(|row| row.map(|x| x * s)))
    }

    pub fn mul_vec(&self, v: Point3) -> Point3 {
        let a = v.to_array();
        let row = |r: usize| self.0[r][0] * a[0] + self.0[r][1] * a[1] + self.0[r][2] * a[2];
        Point3::new(row(0), row(1), row(2))
    }

    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .fold(0.0, |acc: f64, x| acc.max(x.abs()))
    }

    /// Largest absolute difference between mirrored off-diagonal entries.
    pub fn asymmetry(&self) -> f64 {
        let m = &self.0;
        (m[0][1] - m[1][0])
            .abs()
            .max((m[0][2] - m[2][0]).abs())
            .max((m[1][2] - m[2][1]).abs())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|x| x.is_finite())
    }
}

/// Eigen-decomposition of a symmetric matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymEigen {
    /// Eigenvalues in ascending order.
    pub values: [f64; 3],
    /// Unit eigenvectors matching `values`.
    pub vectors: [Point3; 3],
}

/// Cyclic Jacobi eigen-solver for a symmetric 3×3 matrix.
///
/// Only the upper triangle is read. Rotations continue until every
/// off-diagonal entry is negligible against the diagonal, which for 3×3
/// inputs takes a handful of sweeps.
pub fn sym_eigen(m: &Mat3) -> SymEigen {
    let mut a = m.0;
    for r in 0..3 {
        for c in 0..r {
            a[r][c] = a[c][r];
        }
    }
    let mut v = Mat3::IDENTITY.0;

    for _sweep in 0..64 {
        let off = a[0][1].abs() + a[0][2].abs() + a[1][2].abs();
        if off == 0.0 {
            break;
        }
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            let apq = a[p][q];
            if apq == 0.0 {
                continue;
            }
            let app = a[p][p];
            let aqq = a[q][q];
            // Skip rotations that would not change the diagonal in floating
            // point; the off-diagonal entry is then below roundoff.
            if (app.abs() + 100.0 * apq.abs() == app.abs())
                && (aqq.abs() + 100.0 * apq.abs() == aqq.abs())
            {
                a[p][q] = 0.0;
                a[q][p] = 0.0;
                continue;
            }
            let theta = (aqq - app) / (2.0 * apq);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;

            for k in 0..3 {
                let akp = a[k][p];
                let akq = a[k][q];
                a[k][p] = c * akp - s * akq;
                a[k][q] = s * akp + c * akq;
            }
            for k in 0..3 {
                let apk = a[p][k];
                let aqk = a[q][k];
                a[p][k] = c * apk - s * aqk;
                a[q][k] = s * apk + c * aqk;
            }
            a[p][q] = 0.0;
            a[q][p] = 0.0;
            for row in v.iter_mut() {
                let vp = row[p];
                let vq = row[q];
                row[p] = c * vp - s * vq;
                row[q] = s * vp + c * vq;
            }
        }
    }

    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| a[i][i].total_cmp(&a[j][j]).then(i.cmp(&j)));
    let column = |j: usize| Point3::new(v[0][j], v[1][j], v[2][j]);
    SymEigen {
        values: order.map(|j| a[j][j]),
        vectors: order.map(|j| {
            let e = column(j);
            e.normalized().unwrap_or(e)
        }),
    }
}

/// Flips `v` so that its largest-magnitude component is positive. Among
/// equal magnitudes the earliest axis decides.
pub fn canonical_sign(v: Point3) -> Point3 {
    let a = v.to_array();
    let mut best = 0;
    for i in 1..3 {
        if a[i].abs() > a[best].abs() {
            best = i;
        }
    }
    if a[best] < 0.0 {
        -v
    } else {
        v
    }
}
