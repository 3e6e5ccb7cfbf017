//! Base potentials on SO(3):
//!
//! * the smooth `U_A(X) = tr(A(I - X)) / (4 λ_max(Ā))`, and
//! * the non-smooth `V_A(X) = 2(1 - √(1 - U_A(X)))`,
//!
//! with their Riemannian gradients and predicates for the critical set `S_π`
//! (half-turns about eigenvectors of `A`).

use crate::eigen::symmetric_eigen;
use crate::error::{Error, Result};
use crate::so3::{bar, hat, skew_part, trace_error, Mat3, Rotation, Vec3};

/// `grad V_A` is refused when `U_A ≥ 1 - SINGULARITY_GUARD`.
pub const SINGULARITY_GUARD: f64 = 1e-9;

/// Default band used by [`WeightMatrix::in_s_pi`].
pub const S_PI_TOL: f64 = 1e-6;

const EIG_DISTINCT_TOL: f64 = 1e-9;

/// Symmetric weight `A` together with the derived quantities every potential
/// needs: `Ā = ½(tr(A)I - A)`, `A̲ = tr(Ā²)I - 2Ā²`, the eigen-decomposition of
/// `A` and the ratio `ξ = λ_min(Ā)/λ_max(Ā)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    a: Mat3,
    abar: Mat3,
    aunder: Mat3,
    eigvals: [f64; 3],
    eigvecs: [Vec3; 3],
    lam_min_bar: f64,
    lam_max_bar: f64,
    xi: f64,
}

impl WeightMatrix {
    pub fn new(a: Mat3) -> Result<Self> {
        if !a.iter().all(|v| v.is_finite()) {
            return Err(Error::RankDeficient("non-finite entries".into()));
        }
        let asymmetry = (a - a.transpose()).amax();
        if asymmetry > 1e-12 * a.amax().max(1.0) {
            return Err(Error::NotSymmetric { asymmetry });
        }
        let a = (a + a.transpose()) * 0.5;
        let (eigvals, eigvecs) = symmetric_eigen(&a);
        let tr = a.trace();
        // Ā shares eigenvectors with A; its eigenvalues are ½(tr A - λ_i).
        let lam_max_bar = 0.5 * (tr - eigvals[0]);
        let lam_min_bar = 0.5 * (tr - eigvals[2]);
        if !(lam_min_bar > 1e-9) {
            return Err(Error::RankDeficient(format!(
                "Ā = ½(tr(A)I - A) is not positive definite (λ_min = {lam_min_bar:e})"
            )));
        }
        let abar = bar(&a);
        let abar2 = abar * abar;
        let aunder = Mat3::identity() * abar2.trace() - abar2 * 2.0;
        Ok(Self { a, abar, aunder, eigvals, eigvecs, lam_min_bar, lam_max_bar, xi: lam_min_bar / lam_max_bar })
    }

    pub fn identity() -> Self {
        Self::new(Mat3::identity()).expect("identity weight is valid")
    }

    /// `A = Σ ρᵢ aᵢ aᵢᵀ`. Requires at least three vectors spanning ℝ³.
    pub fn from_vectors(vectors: &[Vec3], rho: &[f64]) -> Result<Self> {
        if vectors.len() != rho.len() {
            return Err(Error::InvalidMeasurements(format!("{} vectors but {} weights", vectors.len(), rho.len())));
        }
        if vectors.len() < 3 {
            return Err(Error::RankDeficient(format!(
                "need at least three non-collinear vectors, got {}",
                vectors.len()
            )));
        }
        if let Some(r) = rho.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
            return Err(Error::InvalidMeasurements(format!("weight {r} is not positive")));
        }
        let a = vectors.iter().zip(rho).fold(Mat3::zeros(), |acc, (v, r)| acc + v * v.transpose() * *r);
        let (vals, _) = symmetric_eigen(&a);
        if vals[0] <= 1e-9 * vals[2].abs().max(f64::MIN_POSITIVE) {
            return Err(Error::RankDeficient(format!("vectors do not span three directions (eigenvalues {vals:?})")));
        }
        Self::new(a)
    }

    pub fn a(&self) -> &Mat3 {
        &self.a
    }

    pub fn abar(&self) -> &Mat3 {
        &self.abar
    }

    pub fn aunder(&self) -> &Mat3 {
        &self.aunder
    }

    /// Eigenvalues of `A`, ascending.
    pub fn eigvals(&self) -> [f64; 3] {
        self.eigvals
    }

    pub fn eigvecs(&self) -> [Vec3; 3] {
        self.eigvecs
    }

    pub fn lam_min_bar(&self) -> f64 {
        self.lam_min_bar
    }

    pub fn lam_max_bar(&self) -> f64 {
        self.lam_max_bar
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn has_distinct_eigenvalues(&self) -> bool {
        let [l1, l2, l3] = self.eigvals;
        let scale = l3.abs().max(l1.abs()).max(f64::MIN_POSITIVE);
        (l2 - l1) > EIG_DISTINCT_TOL * scale && (l3 - l2) > EIG_DISTINCT_TOL * scale
    }

    pub fn is_identity(&self) -> bool {
        (self.a - Mat3::identity()).amax() <= 1e-12
    }

    pub fn u_potential(&self, x: &Rotation) -> f64 {
        trace_error(&self.a, x) / (4.0 * self.lam_max_bar)
    }

    /// `∇U_A(X) = X P_a(AX) / (4 λ_max(Ā))`.
    pub fn grad_u_potential(&self, x: &Rotation) -> Mat3 {
        x.matrix() * skew_part(&(self.a * x.matrix())) / (4.0 * self.lam_max_bar)
    }

    pub fn v_potential(&self, x: &Rotation) -> f64 {
        v_of_u(self.u_potential(x))
    }

    pub fn grad_v_potential(&self, x: &Rotation) -> Result<Mat3> {
        let u = self.u_potential(x);
        let s = guarded_sqrt_one_minus(u)?;
        Ok(self.grad_u_potential(x) / s)
    }

    /// True when `X` lies within `tol` of a half-turn about an eigenvector of `A`.
    pub fn in_s_pi(&self, x: &Rotation, tol: f64) -> bool {
        if x.distance_sq() < 1.0 - tol {
            return false;
        }
        let axis = x.to_angle_axis().axis;
        self.eigen_residual(&axis) <= tol
    }

    /// `‖A u - (uᵀAu) u‖ / ‖A‖₂` for a unit vector `u`; zero iff `u` is an eigenvector.
    pub fn eigen_residual(&self, u: &Vec3) -> f64 {
        let au = self.a * u;
        let scale = self.eigvals[0].abs().max(self.eigvals[2].abs());
        (au - u * u.dot(&au)).norm() / scale
    }

    /// Distance from `X` to `S_π`: the largest of the distance deficit
    /// `1 - |X|_I²` and the eigen-residual of its rotation axis.
    pub fn s_pi_distance(&self, x: &Rotation) -> f64 {
        let deficit = 1.0 - x.distance_sq();
        let axis = x.to_angle_axis().axis;
        deficit.max(self.eigen_residual(&axis))
    }
}

/// `V = 2(1 - √(1 - U))`.
pub fn v_of_u(u: f64) -> f64 {
    2.0 * (1.0 - (1.0 - u).max(0.0).sqrt())
}

/// `√(1 - U)`, refusing values inside the singularity guard band.
pub(crate) fn guarded_sqrt_one_minus(u: f64) -> Result<f64> {
    if !(u < 1.0 - SINGULARITY_GUARD) {
        return Err(Error::Singularity { u });
    }
    Ok((1.0 - u).sqrt())
}

/// Half-turn `R_Q(0, v)` about the unit vector `v`.
pub fn half_turn(v: &Vec3) -> Rotation {
    let v = v.normalize();
    let h = hat(&v);
    Rotation::from_matrix_unchecked(Mat3::identity() + h * h * 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::so3::{inner, psi};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn random_rotation(rng: &mut ChaCha8Rng) -> Rotation {
        let q = nalgebra::Vector4::from_fn(|_, _| rng.random::<f64>() * 2.0 - 1.0).normalize();
        crate::so3::UnitQuaternion::new(q[0], Vec3::new(q[1], q[2], q[3])).unwrap().to_rotation()
    }

    fn random_weight(rng: &mut ChaCha8Rng) -> WeightMatrix {
        let vs: Vec<Vec3> = (0..4).map(|_| Vec3::from_fn(|_, _| rng.random::<f64>() - 0.5)).collect();
        let rho: Vec<f64> = (0..4).map(|_| 0.2 + rng.random::<f64>()).collect();
        WeightMatrix::from_vectors(&vs, &rho).unwrap()
    }

    fn example2_weight() -> WeightMatrix {
        let a1 = Vec3::new(1.0, -1.0, 1.0) / 3f64.sqrt();
        let a2 = Vec3::z();
        WeightMatrix::from_vectors(&[a1, a2, a1.cross(&a2)], &[1.0, 3.0, 1.0]).unwrap()
    }

    #[test]
    fn orthonormal_basis_gives_identity() {
        let w = WeightMatrix::from_vectors(&[Vec3::x(), Vec3::y(), Vec3::z()], &[1.0; 3]).unwrap();
        assert_eq!(*w.a(), Mat3::identity());
        assert_eq!(*w.abar(), Mat3::identity());
        assert_eq!(w.xi(), 1.0);
    }

    #[test]
    fn example2_has_distinct_eigenvalues() {
        let w = example2_weight();
        assert!(w.has_distinct_eigenvalues());
        // eigenvalues from nalgebra's own symmetric solver
        let mut reference: Vec<f64> = w.a().symmetric_eigen().eigenvalues.iter().copied().collect();
        reference.sort_by(f64::total_cmp);
        for (got, want) in w.eigvals().iter().zip(&reference) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn collinear_or_too_few_vectors_rejected() {
        assert!(matches!(
            WeightMatrix::from_vectors(&[Vec3::x(), Vec3::y()], &[1.0, 1.0]),
            Err(Error::RankDeficient(_))
        ));
        assert!(matches!(
            WeightMatrix::from_vectors(&[Vec3::x(), Vec3::y(), Vec3::x() + Vec3::y()], &[1.0; 3]),
            Err(Error::RankDeficient(_))
        ));
        assert!(WeightMatrix::from_vectors(&[Vec3::x(), Vec3::y(), Vec3::z()], &[1.0, -1.0, 1.0]).is_err());
    }

    #[test]
    fn u_potential_examples() {
        let w = example2_weight();
        assert_eq!(w.u_potential(&Rotation::identity()), 0.0);
        let i = WeightMatrix::identity();
        let x = Rotation::from_angle_axis(FRAC_PI_2, &Vec3::z()).unwrap();
        assert_relative_eq!(i.u_potential(&x), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn u_potential_sandwich() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            let w = random_weight(&mut rng);
            let x = random_rotation(&mut rng);
            let u = w.u_potential(&x);
            let d = x.distance_sq();
            assert!(w.xi() * d <= u + 1e-12 && u <= d + 1e-12);
            let v = w.v_potential(&x);
            assert!(u <= v + 1e-12 && v <= 2.0 * u + 1e-12 && 2.0 * u <= 2.0 * d + 1e-12);
        }
    }

    #[test]
    fn grad_u_vanishes_on_critical_points() {
        let i = WeightMatrix::identity();
        assert_eq!(i.grad_u_potential(&Rotation::identity()), Mat3::zeros());
        let x = Rotation::from_angle_axis(PI, &Vec3::x()).unwrap();
        assert!(i.grad_u_potential(&x).amax() < 1e-16);
        let w = example2_weight();
        for v in w.eigvecs() {
            assert!(w.grad_u_potential(&half_turn(&v)).amax() < 1e-15);
        }
    }

    fn fd_directional(f: impl Fn(&Rotation) -> f64, x: &Rotation, u: &Vec3, h: f64) -> f64 {
        let plus = *x * Rotation::exp(&(u * h));
        let minus = *x * Rotation::exp(&(u * -h));
        (f(&plus) - f(&minus)) / (2.0 * h)
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut checked_v = 0;
        for _ in 0..500 {
            let w = random_weight(&mut rng);
            let x = random_rotation(&mut rng);
            let u = Vec3::from_fn(|_, _| rng.random::<f64>() - 0.5);
            let dir = x.matrix() * hat(&u);
            let fd = fd_directional(|r| w.u_potential(r), &x, &u, 1e-6);
            let an = inner(&w.grad_u_potential(&x), &dir);
            assert!((fd - an).abs() <= 1e-5 * an.abs().max(1e-4), "{fd} vs {an}");
            if w.u_potential(&x) <= 0.9 {
                let fd = fd_directional(|r| w.v_potential(r), &x, &u, 1e-6);
                let an = inner(&w.grad_v_potential(&x).unwrap(), &dir);
                assert!((fd - an).abs() <= 1e-5 * an.abs().max(1e-4));
                checked_v += 1;
            }
        }
        assert!(checked_v > 100);
    }

    #[test]
    fn gradient_norm_matches_psi() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..1000 {
            let w = random_weight(&mut rng);
            let x = random_rotation(&mut rng);
            let g = w.grad_u_potential(&x);
            let rhs = psi(&(w.a() * x.matrix())).norm_squared() / (8.0 * w.lam_max_bar().powi(2));
            assert!((g.norm_squared() - rhs).abs() < 1e-12);
            // tangent: Xᵀ∇U is skew
            let s = x.matrix().transpose() * g;
            assert!((s + s.transpose()).amax() < 1e-14);
        }
    }

    #[test]
    fn v_potential_singularity() {
        let i = WeightMatrix::identity();
        assert_eq!(i.v_potential(&Rotation::identity()), 0.0);
        assert_eq!(i.grad_v_potential(&Rotation::identity()).unwrap(), Mat3::zeros());
        let x = Rotation::from_angle_axis(PI, &Vec3::x()).unwrap();
        assert_relative_eq!(i.v_potential(&x), 2.0, epsilon = 1e-7);
        assert!(matches!(i.grad_v_potential(&x), Err(Error::Singularity { .. })));
    }

    #[test]
    fn s_pi_membership() {
        let i = WeightMatrix::identity();
        assert!(!i.in_s_pi(&Rotation::identity(), S_PI_TOL));
        let u = Vec3::new(0.3, -0.5, 0.8).normalize();
        assert!(i.in_s_pi(&Rotation::from_angle_axis(PI, &u).unwrap(), S_PI_TOL));

        let w = WeightMatrix::new(Mat3::from_diagonal(&Vec3::new(1.0, 2.0, 3.0))).unwrap();
        let [v1, v2, _] = w.eigvecs();
        assert!(w.in_s_pi(&half_turn(&v2), S_PI_TOL));
        assert!(!w.in_s_pi(&half_turn(&(v1 + v2)), S_PI_TOL));
    }
}
