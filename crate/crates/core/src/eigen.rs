//! Symmetric 3×3 eigen-decomposition by cyclic Jacobi rotations.

use crate::so3::{Mat3, Vec3};

const MAX_SWEEPS: usize = 64;

/// Eigenvalues in ascending order with matching orthonormal eigenvectors.
///
/// Each eigenvector is signed so that its largest-magnitude component is
/// positive. Only the upper triangle of `a` is read.
pub fn symmetric_eigen(a: &Mat3) -> ([f64; 3], [Vec3; 3]) {
    let mut m = Mat3::from_fn(|i, j| if i <= j { a[(i, j)] } else { a[(j, i)] });
    let mut v = Mat3::identity();
    let scale = m.norm().max(f64::MIN_POSITIVE);

    for _ in 0..MAX_SWEEPS {
        let off = m[(0, 1)].powi(2) + m[(0, 2)].powi(2) + m[(1, 2)].powi(2);
        if off.sqrt() <= 1e-17 * scale {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            let apq = m[(p, q)];
            if apq.abs() <= f64::MIN_POSITIVE {
                continue;
            }
            let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            let mut g = Mat3::identity();
            g[(p, p)] = c;
            g[(q, q)] = c;
            g[(p, q)] = s;
            g[(q, p)] = -s;
            m = g.transpose() * m * g;
            m[(p, q)] = 0.0;
            m[(q, p)] = 0.0;
            v *= g;
        }
    }

    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&i, &j| m[(i, i)].total_cmp(&m[(j, j)]));
    let vals = idx.map(|i| m[(i, i)]);
    let vecs = idx.map(|i| {
        let col: Vec3 = v.column(i).into();
        let col = col.normalize();
        if col[col.iamax()] < 0.0 {
            -col
        } else {
            col
        }
    });
    (vals, vecs)
}
