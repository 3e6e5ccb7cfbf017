//! Randomized checks of the matrix identities and the SO(3) lemmas the
//! observers are built on. Every check returns its worst absolute error.

use hybrid_attitude::so3::{bar, e_matrix, hat, inner, psi, skew_part, trace_error};
use hybrid_attitude::{Mat3, Rotation, UnitQuaternion, Vec3};
use rand::Rng;

use crate::sampling::{rand_mat, rand_vec, random_psd_weight, random_quaternion};

#[derive(Debug, Default, Clone)]
pub struct IdentityErrors {
    pub entries: Vec<(&'static str, f64)>,
}

impl IdentityErrors {
    fn record(&mut self, name: &'static str, err: f64) {
        match self.entries.iter_mut().find(|(n, _)| *n == name) {
            Some((_, e)) => *e = e.max(err),
            None => self.entries.push((name, err)),
        }
    }

    pub fn worst(&self) -> (&'static str, f64) {
        self.entries.iter().copied().fold(("none", 0.0), |acc, e| if e.1 > acc.1 || e.1.is_nan() { e } else { acc })
    }
}

/// Derivative at `t = 0` of a quantity linear in `X(t) = X R_a(t‖u‖, û)`.
///
/// Such a quantity is `c₀ + sin(t‖u‖) c₁ + (1 - cos(t‖u‖)) c₂`, so the
/// symmetric difference divided by `2 sin(h‖u‖)` is exact.
fn trig_derivative<T, F>(x: &Rotation, u: &Vec3, f: F) -> T
where
    F: Fn(&Rotation) -> T,
    T: std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T>,
{
    let n = u.norm();
    let s = 0.5;
    let h = s / n;
    let plus = *x * Rotation::exp(&(u * h));
    let minus = *x * Rotation::exp(&(u * -h));
    (f(&plus) - f(&minus)) * (n / (2.0 * s.sin()))
}

fn quat_matrix(q: &UnitQuaternion) -> Mat3 {
    let e = hat(&q.eps);
    Mat3::identity() + e * e * 2.0 + e * (2.0 * q.eta)
}

pub fn run<R: Rng>(rng: &mut R, instances: usize) -> IdentityErrors {
    let mut out = IdentityErrors::default();
    for _ in 0..instances {
        let u = rand_vec(rng);
        let v = rand_vec(rng);
        let g = rand_mat(rng);
        let qx = random_quaternion(rng);
        let qy = random_quaternion(rng);
        let x = qx.to_rotation();
        let y = qy.to_rotation();
        let (a, vecs, rho) = random_psd_weight(rng);
        let ab = bar(&a);

        // Basic algebra of [·]ₓ.
        out.record(
            "hat_square",
            (hat(&u) * hat(&u) - (u * u.transpose() - Mat3::identity() * u.norm_squared())).amax(),
        );
        out.record("hat_cross", (hat(&u.cross(&v)) - (v * u.transpose() - u * v.transpose())).amax());
        out.record("trace_outer", ((u * v.transpose()).trace() - u.dot(&v)).abs());
        out.record("inner_skew_part", (inner(&g, &hat(&u)) - inner(&skew_part(&g), &hat(&u))).abs());
        out.record("inner_hat", (inner(&hat(&v), &hat(&u)) - 2.0 * u.dot(&v)).abs());
        out.record(
            "hat_trace",
            (g * hat(&u) + hat(&u) * g.transpose() + hat(&(g.transpose() * u)) - hat(&u) * g.trace()).amax(),
        );

        // Quaternion map, product homomorphism, angle-axis relation, distance.
        out.record("quaternion_map", (quat_matrix(&qx) - x.matrix()).amax());
        out.record("quaternion_product", (quat_matrix(&(qx * qy)) - (x * y).matrix()).amax());
        let aa = x.to_angle_axis();
        let from_aa = UnitQuaternion::from_angle_axis(aa.theta, &aa.axis).expect("unit axis");
        out.record("angle_axis_quaternion", (from_aa.to_rotation().matrix() - x.matrix()).amax());
        let d_frob = (Mat3::identity() - x.matrix()).norm_squared() / 8.0;
        out.record(
            "distance_forms",
            (d_frob - x.distance_sq()).abs().max((qx.eps.norm_squared() - x.distance_sq()).abs()),
        );

        // Derivatives along Ẋ = X[u]ₓ.
        let d_tr = trig_derivative(&x, &u, |r| trace_error(&a, r));
        out.record("d_trace", (d_tr - 2.0 * psi(&(a * x.matrix())).dot(&u)).abs());
        let d_psi = trig_derivative(&x, &u, |r| psi(&(a * r.matrix())));
        out.record("d_psi", (d_psi - e_matrix(&a, &x) * u).amax());

        // Quaternion forms.
        out.record("trace_quaternion", (trace_error(&a, &x) - 4.0 * qx.eps.dot(&(ab * qx.eps))).abs());
        let psi_q = (Mat3::identity() * qx.eta - hat(&qx.eps)) * (ab * qx.eps) * 2.0;
        out.record("psi_quaternion", (psi(&(a * x.matrix())) - psi_q).amax());

        // Trace bounds, gradient-norm identity, and E(AX) bounds.
        let (vals, _) = hybrid_attitude::eigen::symmetric_eigen(&ab);
        let (lmin, lmax) = (vals[0], vals[2]);
        let d = x.distance_sq();
        let tr = trace_error(&a, &x);
        out.record("trace_bounds", (4.0 * lmin * d - tr).max(tr - 4.0 * lmax * d).max(0.0));
        let au = Mat3::identity() * (ab * ab).trace() - ab * ab * 2.0;
        let axis = if qx.eps.norm() > 1e-12 { qx.eps.normalize() } else { Vec3::x() };
        let cos = axis.dot(&(ab * axis)) / (ab * axis).norm();
        let alpha = 1.0 - d * cos * cos;
        let lhs = psi(&(a * x.matrix())).norm_squared();
        out.record("psi_norm", (lhs - alpha * trace_error(&au, &x)).abs());
        let xi = lmin / lmax;
        out.record("alpha_bounds", ((1.0 - d) - alpha).max(alpha - (1.0 - xi * xi * d)).max(0.0));
        let w = rand_vec(rng);
        let e = e_matrix(&a, &x);
        let quad = w.dot(&((Mat3::identity() * lmin - e) * w));
        out.record("e_quadratic", (quad - 0.5 * tr * w.norm_squared()).max(0.0));
        out.record("e_frobenius", (e.norm() - ab.norm()).max(0.0));

        // Vector-measurement forms, with the rotation factor Y.
        let mut sq = 0.0;
        let mut cr = Vec3::zeros();
        for (vi, r) in vecs.iter().zip(&rho) {
            let xv = x.matrix().transpose() * vi;
            let yv = y.matrix().transpose() * vi;
            sq += r * (xv - yv).norm_squared();
            cr += xv.cross(&yv) * *r;
        }
        let xyt = Rotation::from_matrix_unchecked(x.matrix() * y.matrix().transpose());
        out.record("vector_trace", (trace_error(&a, &xyt) - 0.5 * sq).abs());
        out.record("vector_psi", (psi(&(a * xyt.matrix())) - y.matrix() * cr * 0.5).amax());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn all_identities_hold() {
        let errs = run(&mut ChaCha8Rng::seed_from_u64(5), 100);
        assert_eq!(errs.entries.len(), 21);
        let (name, worst) = errs.worst();
        assert!(worst < 1e-12, "{name}: {worst}");
    }

    #[test]
    fn worst_prefers_nan() {
        let mut e = IdentityErrors::default();
        e.record("a", 1e-3);
        e.record("a", 1e-5);
        e.record("b", 2e-3);
        assert_eq!(e.worst(), ("b", 2e-3));
        e.record("c", f64::NAN);
        assert_eq!(e.worst().0, "c");
    }

    #[test]
    fn trig_derivative_is_exact_for_rotation_entries() {
        let x = Rotation::exp(&Vec3::new(0.3, -0.2, 0.9));
        let u = Vec3::new(0.5, 1.0, -2.0);
        let d = trig_derivative(&x, &u, |r| *r.matrix());
        assert!((d - x.matrix() * hat(&u)).amax() < 1e-14);
    }
}
