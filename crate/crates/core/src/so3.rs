//! Rotation algebra on SO(3): the hat/vee isomorphism, the skew-part map `psi`,
//! unit quaternions, angle-axis rotations and the matrix identities the
//! observers are built on.
//!
//! Conventions:
//! * `hat(u) v = u × v`, `vee(hat(u)) = u`.
//! * `psi(A) = vee((A - Aᵀ)/2)`.
//! * `|X|_I² = tr(I - X)/4 ∈ [0, 1]` is the normalized distance to the identity.
//! * A quaternion `(η, ε)` maps to `I + 2[ε]ₓ² + 2η[ε]ₓ`.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Tolerance used when validating rotations and unit axes at construction.
pub const VALIDATION_TOL: f64 = 1e-9;

/// Unit quaternions are validated to this tolerance on `η² + εᵀε`.
pub const QUATERNION_TOL: f64 = 1e-12;

/// Frobenius radius inside which [`orthonormalize`] accepts a matrix.
pub const ORTHONORMALIZE_RADIUS: f64 = 0.1;

pub fn hat(u: &Vec3) -> Mat3 {
    Mat3::new(0.0, -u.z, u.y, u.z, 0.0, -u.x, -u.y, u.x, 0.0)
}

/// Inverse of [`hat`]. Only the skew-symmetric part of `m` is read, so for a
/// general matrix this is the same as [`psi`].
pub fn vee(m: &Mat3) -> Vec3 {
    psi(m)
}

/// Anti-symmetric projection `P_a(A) = (A - Aᵀ)/2`.
pub fn skew_part(a: &Mat3) -> Mat3 {
    (a - a.transpose()) * 0.5
}

pub fn psi(a: &Mat3) -> Vec3 {
    Vec3::new(0.5 * (a[(2, 1)] - a[(1, 2)]), 0.5 * (a[(0, 2)] - a[(2, 0)]), 0.5 * (a[(1, 0)] - a[(0, 1)]))
}

/// Frobenius inner product `⟨⟨A, B⟩⟩ = tr(AᵀB)`.
pub fn inner(a: &Mat3, b: &Mat3) -> f64 {
    a.component_mul(b).sum()
}

/// `E(AX) = ½(tr(AX) I - XᵀA)`, the rate matrix of `psi(AX)` along
/// `Ẋ = X[u]ₓ`.
pub fn e_matrix(a: &Mat3, x: &Rotation) -> Mat3 {
    let ax = a * x.matrix();
    (Mat3::identity() * ax.trace() - x.matrix().transpose() * a) * 0.5
}

/// `tr(A(I - X))`.
pub fn trace_error(a: &Mat3, x: &Rotation) -> f64 {
    (a * (Mat3::identity() - x.matrix())).trace()
}

/// `Ā = ½(tr(A) I - A)`.
pub fn bar(a: &Mat3) -> Mat3 {
    (Mat3::identity() * a.trace() - a) * 0.5
}

/// An element of SO(3).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation(Mat3);

impl Rotation {
    pub fn new(m: Mat3) -> Result<Self> {
        let ortho = orthonormality_residual(&m);
        let det = m.determinant();
        if ortho > VALIDATION_TOL || (det - 1.0).abs() > VALIDATION_TOL || !m.iter().all(|v| v.is_finite()) {
            return Err(Error::NotARotation { ortho, det });
        }
        Ok(Self(m))
    }

    /// Wraps `m` without checking it. Callers guarantee `m ∈ SO(3)`.
    pub fn from_matrix_unchecked(m: Mat3) -> Self {
        Self(m)
    }

    pub fn identity() -> Self {
        Self(Mat3::identity())
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn into_inner(self) -> Mat3 {
        self.0
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn inverse(&self) -> Self {
        self.transpose()
    }

    /// `|X|_I² = tr(I - X)/4`, clamped to `[0, 1]` against rounding.
    pub fn distance_sq(&self) -> f64 {
        ((3.0 - self.0.trace()) * 0.25).clamp(0.0, 1.0)
    }

    /// Rodrigues formula `I + sin θ [u]ₓ + (1 - cos θ)[u]ₓ²`.
    pub fn from_angle_axis(theta: f64, axis: &Vec3) -> Result<Self> {
        let norm = axis.norm();
        if (norm - 1.0).abs() > VALIDATION_TOL {
            return Err(Error::NonUnitAxis { norm });
        }
        Ok(Self::rodrigues(theta, axis))
    }

    pub(crate) fn rodrigues(theta: f64, axis: &Vec3) -> Self {
        let k = hat(axis);
        Self(Mat3::identity() + k * theta.sin() + k * k * (1.0 - theta.cos()))
    }

    /// Exponential map `exp([w]ₓ)`, exact up to rounding for any `w`.
    pub fn exp(w: &Vec3) -> Self {
        let theta_sq = w.norm_squared();
        let (a, b) = if theta_sq < 1e-8 {
            (1.0 - theta_sq / 6.0 + theta_sq * theta_sq / 120.0, 0.5 - theta_sq / 24.0 + theta_sq * theta_sq / 720.0)
        } else {
            let theta = theta_sq.sqrt();
            (theta.sin() / theta, (1.0 - theta.cos()) / theta_sq)
        };
        let k = hat(w);
        Self(Mat3::identity() + k * a + k * k * b)
    }

    pub fn to_quaternion(&self) -> UnitQuaternion {
        UnitQuaternion::from_rotation(self)
    }

    pub fn from_quaternion(q: &UnitQuaternion) -> Self {
        q.to_rotation()
    }

    pub fn to_angle_axis(&self) -> AngleAxis {
        let q = self.to_quaternion();
        let s = q.eps.norm();
        if s < 1e-300 {
            return AngleAxis { theta: 0.0, axis: Vec3::x() };
        }
        AngleAxis { theta: 2.0 * s.atan2(q.eta), axis: q.eps / s }
    }

    pub fn orthonormality_residual(&self) -> f64 {
        orthonormality_residual(&self.0)
    }

    /// Rotates a vector.
    pub fn apply(&self, v: &Vec3) -> Vec3 {
        self.0 * v
    }
}

impl std::ops::Mul for Rotation {
    type Output = Rotation;
    fn mul(self, rhs: Rotation) -> Rotation {
        Rotation(self.0 * rhs.0)
    }
}

impl std::ops::Mul<&Rotation> for &Rotation {
    type Output = Rotation;
    fn mul(self, rhs: &Rotation) -> Rotation {
        Rotation(self.0 * rhs.0)
    }
}

/// `‖XᵀX - I‖_F`.
pub fn orthonormality_residual(m: &Mat3) -> f64 {
    (m.transpose() * m - Mat3::identity()).norm()
}

/// Unit quaternion `(η, ε)` with scalar part first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitQuaternion {
    pub eta: f64,
    pub eps: Vec3,
}

impl UnitQuaternion {
    pub fn new(eta: f64, eps: Vec3) -> Result<Self> {
        let norm_sq = eta * eta + eps.norm_squared();
        if (norm_sq - 1.0).abs() > QUATERNION_TOL {
            return Err(Error::NonUnitQuaternion { norm_sq });
        }
        Ok(Self { eta, eps })
    }

    /// Normalizes `(eta, eps)`; used for user-facing inputs such as scenario files.
    pub fn normalized(eta: f64, eps: Vec3) -> Result<Self> {
        let n = (eta * eta + eps.norm_squared()).sqrt();
        if !(n.is_finite() && n > 1e-12) {
            return Err(Error::NonUnitQuaternion { norm_sq: n * n });
        }
        Ok(Self { eta: eta / n, eps: eps / n })
    }

    pub fn identity() -> Self {
        Self { eta: 1.0, eps: Vec3::zeros() }
    }

    pub fn inverse(&self) -> Self {
        Self { eta: self.eta, eps: -self.eps }
    }

    pub fn from_angle_axis(theta: f64, axis: &Vec3) -> Result<Self> {
        let norm = axis.norm();
        if (norm - 1.0).abs() > VALIDATION_TOL {
            return Err(Error::NonUnitAxis { norm });
        }
        let half = 0.5 * theta;
        Ok(Self { eta: half.cos(), eps: axis * half.sin() })
    }

    pub fn to_rotation(&self) -> Rotation {
        let e = hat(&self.eps);
        Rotation(Mat3::identity() + e * e * 2.0 + e * (2.0 * self.eta))
    }

    /// Shepperd-style extraction. The returned representative has `η ≥ 0`;
    /// for half-turns (`η ≈ 0`) the largest-magnitude component of `ε` is
    /// made positive.
    pub fn from_rotation(r: &Rotation) -> Self {
        let m = r.matrix();
        let tr = m.trace();
        let diag = [m[(0, 0)], m[(1, 1)], m[(2, 2)]];
        let (eta, eps) = if tr >= diag[0] && tr >= diag[1] && tr >= diag[2] {
            let s = 2.0 * (1.0 + tr).max(0.0).sqrt();
            (0.25 * s, Vec3::new(m[(2, 1)] - m[(1, 2)], m[(0, 2)] - m[(2, 0)], m[(1, 0)] - m[(0, 1)]) / s)
        } else {
            let i = if diag[0] >= diag[1] && diag[0] >= diag[2] {
                0
            } else if diag[1] >= diag[2] {
                1
            } else {
                2
            };
            let j = (i + 1) % 3;
            let k = (i + 2) % 3;
            let s = 2.0 * (1.0 + m[(i, i)] - m[(j, j)] - m[(k, k)]).max(0.0).sqrt();
            let mut eps = Vec3::zeros();
            eps[i] = 0.25 * s;
            eps[j] = (m[(j, i)] + m[(i, j)]) / s;
            eps[k] = (m[(k, i)] + m[(i, k)]) / s;
            ((m[(k, j)] - m[(j, k)]) / s, eps)
        };
        let n = (eta * eta + eps.norm_squared()).sqrt();
        let (mut eta, mut eps) = (eta / n, eps / n);
        let flip = if eta.abs() <= 1e-12 {
            let imax = eps.iamax();
            eps[imax] < 0.0
        } else {
            eta < 0.0
        };
        if flip {
            eta = -eta;
            eps = -eps;
        }
        Self { eta, eps }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.eta, self.eps.x, self.eps.y, self.eps.z]
    }
}

impl std::ops::Mul for UnitQuaternion {
    type Output = UnitQuaternion;
    fn mul(self, rhs: UnitQuaternion) -> UnitQuaternion {
        UnitQuaternion {
            eta: self.eta * rhs.eta - self.eps.dot(&rhs.eps),
            eps: rhs.eps * self.eta + self.eps * rhs.eta + self.eps.cross(&rhs.eps),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleAxis {
    pub theta: f64,
    pub axis: Vec3,
}

impl AngleAxis {
    pub fn new(theta: f64, axis: Vec3) -> Result<Self> {
        let norm = axis.norm();
        if (norm - 1.0).abs() > QUATERNION_TOL {
            return Err(Error::NonUnitAxis { norm });
        }
        Ok(Self { theta, axis })
    }

    pub fn to_rotation(&self) -> Rotation {
        Rotation::rodrigues(self.theta, &self.axis)
    }
}

/// Nearest rotation to `m` in the Frobenius sense (orthogonal polar factor).
///
/// Fails with [`Error::Drift`] when `m` is farther than
/// [`ORTHONORMALIZE_RADIUS`] from the returned rotation.
pub fn orthonormalize(m: &Mat3) -> Result<Rotation> {
    if !m.iter().all(|v| v.is_finite()) {
        return Err(Error::Drift { distance: f64::INFINITY });
    }
    let svd = m.svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::Drift { distance: f64::INFINITY }),
    };
    let mut d = Mat3::identity();
    if (u * v_t).determinant() < 0.0 {
        d[(2, 2)] = -1.0;
    }
    let r = u * d * v_t;
    let distance = (m - r).norm();
    if distance > ORTHONORMALIZE_RADIUS {
        return Err(Error::Drift { distance });
    }
    Ok(Rotation(r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn close(a: &Mat3, b: &Mat3, tol: f64) -> bool {
        (a - b).amax() <= tol
    }

    #[test]
    fn hat_examples() {
        assert_eq!(hat(&Vec3::zeros()), Mat3::zeros());
        assert_eq!(hat(&Vec3::z()) * Vec3::x(), Vec3::y());
        let u = Vec3::new(1.0, 2.0, 3.0);
        assert_eq!(vee(&hat(&u)), u);
    }

    #[test]
    fn psi_examples() {
        assert_eq!(psi(&Mat3::identity()), Vec3::zeros());
        let u = Vec3::new(0.3, -1.0, 2.0);
        assert_relative_eq!(psi(&hat(&u)), u, epsilon = 1e-15);
        let r = Rotation::from_angle_axis(FRAC_PI_2, &Vec3::z()).unwrap();
        assert_relative_eq!(psi(r.matrix()), Vec3::z(), epsilon = 1e-15);
    }

    #[test]
    fn distance_examples() {
        assert_eq!(Rotation::identity().distance_sq(), 0.0);
        let u = Vec3::new(0.2, -0.4, 0.7).normalize();
        let half = Rotation::from_angle_axis(PI, &u).unwrap();
        assert_relative_eq!(half.distance_sq(), 1.0, epsilon = 1e-15);
        let quarter = Rotation::from_angle_axis(FRAC_PI_2, &Vec3::x()).unwrap();
        assert_relative_eq!(quarter.distance_sq(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn angle_axis_examples() {
        assert_eq!(Rotation::from_angle_axis(0.0, &Vec3::x()).unwrap(), Rotation::identity());
        let half = Rotation::from_angle_axis(PI, &Vec3::z()).unwrap();
        assert!(close(half.matrix(), &Mat3::from_diagonal(&Vec3::new(-1.0, -1.0, 1.0)), 1e-15));
        let u = Vec3::new(1.0, 1.0, 1.0) / 3f64.sqrt();
        let full = Rotation::from_angle_axis(2.0 * PI, &u).unwrap();
        assert!(close(full.matrix(), &Mat3::identity(), 1e-15));
        assert!(matches!(Rotation::from_angle_axis(1.0, &Vec3::new(1.0, 1.0, 0.0)), Err(Error::NonUnitAxis { .. })));
    }

    #[test]
    fn quaternion_examples() {
        assert_eq!(UnitQuaternion::identity().to_rotation(), Rotation::identity());
        let q = UnitQuaternion::new(0.0, Vec3::x()).unwrap();
        let half = Rotation::from_angle_axis(PI, &Vec3::x()).unwrap();
        assert!(close(q.to_rotation().matrix(), half.matrix(), 1e-15));

        let axis = Vec3::new(1.0, 2.0, 2.0) / 3.0;
        let r = Rotation::from_angle_axis(0.7, &axis).unwrap();
        let q = r.to_quaternion();
        // cos(0.35), sin(0.35) * axis evaluated independently
        assert_relative_eq!(q.eta, 0.35f64.cos(), epsilon = 1e-15);
        assert_relative_eq!(q.eps, axis * 0.35f64.sin(), epsilon = 1e-15);
        assert!(close(q.to_rotation().matrix(), r.matrix(), 1e-12));
    }

    #[test]
    fn quaternion_sign_convention_at_half_turn() {
        let axis = Vec3::new(0.6, 0.0, -0.8);
        let r = Rotation::from_angle_axis(PI, &axis).unwrap();
        let q = r.to_quaternion();
        assert!(q.eta.abs() < 1e-12);
        assert_relative_eq!(q.eps, -axis, epsilon = 1e-12);
    }

    #[test]
    fn quaternion_product_examples() {
        let q = UnitQuaternion::from_angle_axis(1.1, &Vec3::new(0.0, 0.6, 0.8)).unwrap();
        let id = UnitQuaternion::identity();
        assert_eq!(id * q, q);
        let p = q * q.inverse();
        assert_relative_eq!(p.eta, 1.0, epsilon = 1e-15);
        assert_relative_eq!(p.eps, Vec3::zeros(), epsilon = 1e-15);
    }

    #[test]
    fn e_matrix_examples() {
        let i = Rotation::identity();
        assert!(close(&e_matrix(&Mat3::identity(), &i), &Mat3::identity(), 1e-15));
        let a = Mat3::new(2.0, 0.3, -0.1, 0.3, 1.0, 0.4, -0.1, 0.4, 0.5);
        assert!(close(&e_matrix(&a, &i), &bar(&a), 1e-15));
    }

    #[test]
    fn trace_error_examples() {
        assert_eq!(trace_error(&Mat3::identity(), &Rotation::identity()), 0.0);
        let half = Rotation::from_angle_axis(PI, &Vec3::y()).unwrap();
        assert_relative_eq!(trace_error(&Mat3::identity(), &half), 4.0, epsilon = 1e-15);
    }

    #[test]
    fn exp_matches_rodrigues() {
        let w = Vec3::new(0.3, -0.2, 0.9);
        let r = Rotation::exp(&w);
        let expected = Rotation::from_angle_axis(w.norm(), &w.normalize()).unwrap();
        assert!(close(r.matrix(), expected.matrix(), 1e-15));
        let tiny = Vec3::new(1e-7, -2e-7, 3e-8);
        assert!(Rotation::exp(&tiny).orthonormality_residual() < 1e-15);
        assert_eq!(Rotation::exp(&Vec3::zeros()), Rotation::identity());
    }

    #[test]
    fn orthonormalize_examples() {
        let r = Rotation::from_angle_axis(0.4, &Vec3::new(0.0, 0.6, 0.8)).unwrap();
        assert!(close(orthonormalize(r.matrix()).unwrap().matrix(), r.matrix(), 1e-12));
        let scaled = Mat3::identity() * 1.001;
        assert!(close(orthonormalize(&scaled).unwrap().matrix(), &Mat3::identity(), 1e-15));
        assert!(matches!(orthonormalize(&(Mat3::identity() * 1.5)), Err(Error::Drift { .. })));
    }

    #[test]
    fn orthonormalize_perturbation_bound() {
        // The polar factor of R + E differs from R by at most ~‖E‖ for small E.
        let r = Rotation::from_angle_axis(2.1, &Vec3::new(0.48, 0.6, 0.64)).unwrap();
        let e = Mat3::new(0.3, -0.7, 0.2, 0.9, -0.1, 0.5, -0.4, 0.8, 0.6) * 1e-6 / 1.6;
        let fixed = orthonormalize(&(r.matrix() + e)).unwrap();
        assert!((fixed.matrix() - r.matrix()).norm() < 2e-6);
        assert!(fixed.orthonormality_residual() < 1e-14);
    }

    #[test]
    fn rotation_validation() {
        assert!(Rotation::new(Mat3::identity()).is_ok());
        assert!(Rotation::new(Mat3::identity() * 1.01).is_err());
        assert!(Rotation::new(-Mat3::identity()).is_err());
    }
}
