//! Angular warping of SO(3) and the composite potentials built on it.
//!
//! For an index `q` with axis `ν(q)`, the warp is
//!
//! ```text
//! Γ_A(X, q) = X · R_a(2 asin(k U_A(X)), ν(q))
//! ```
//!
//! and the composite potentials are `Φ_U = U_A ∘ Γ_A` and `Φ_V = V_A ∘ Γ_A`.
//! Gains `0 < k < k̄(ξ) = 1/√(6 - max(1, 4ξ²))` keep the warp a local
//! diffeomorphism everywhere.

use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potentials::{guarded_sqrt_one_minus, v_of_u, WeightMatrix};
use crate::so3::{hat, psi, Mat3, Rotation, Vec3, VALIDATION_TOL};

static ASIN_CLAMPS: AtomicU64 = AtomicU64::new(0);
const ASIN_LIMIT: f64 = 1.0 - 1e-15;

/// Number of times the warp angle argument had to be clamped into the
/// domain of `asin` since process start. Stays zero for admissible gains.
pub fn asin_clamp_count() -> u64 {
    ASIN_CLAMPS.load(Ordering::Relaxed)
}

fn clamped_asin_arg(s: f64) -> f64 {
    if s.abs() > ASIN_LIMIT {
        ASIN_CLAMPS.fetch_add(1, Ordering::Relaxed);
        s.clamp(-ASIN_LIMIT, ASIN_LIMIT)
    } else {
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PotentialKind {
    /// `Φ = U_A ∘ Γ_A` (smooth).
    U,
    /// `Φ = V_A ∘ Γ_A` (non-smooth at `U_A = 1`).
    V,
}

/// Upper limit on the warp gain for a weight with eigenvalue ratio `xi`.
pub fn k_bar(xi: f64) -> Result<f64> {
    if !(xi > 0.0 && xi <= 1.0) {
        return Err(Error::InvalidXi(xi));
    }
    Ok(1.0 / (6.0 - (4.0 * xi * xi).max(1.0)).sqrt())
}

/// Distance distortion constants `(γ_low, γ_high)` with
/// `γ_low |X|² ≤ |Γ_A(X, q)|² ≤ γ_high |X|²`.
pub fn gamma_bounds(k: f64) -> (f64, f64) {
    (1.0 - k * k - k * (1.0 - k * k).sqrt(), 1.0 + k + k * k / 4.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WarpParams {
    weight: WeightMatrix,
    k: f64,
    nu: Vec<Vec3>,
}

impl WarpParams {
    pub fn new(weight: WeightMatrix, k: f64, nu: Vec<Vec3>) -> Result<Self> {
        let kb = k_bar(weight.xi())?;
        if !(k > 0.0 && k < kb) {
            return Err(Error::InvalidGain { k, k_bar: kb });
        }
        if nu.is_empty() {
            return Err(Error::InvalidConfig("empty index set".into()));
        }
        for v in &nu {
            let norm = v.norm();
            if (norm - 1.0).abs() > VALIDATION_TOL {
                return Err(Error::NonUnitAxis { norm });
            }
        }
        Ok(Self { weight, k, nu })
    }

    /// Same as [`WarpParams::new`] but accepts any `k ≥ 0` below `k̄`,
    /// including the unwarped limit `k = 0`.
    pub fn with_gain_unchecked_lower(weight: WeightMatrix, k: f64, nu: Vec<Vec3>) -> Result<Self> {
        if k == 0.0 {
            return Ok(Self { weight, k, nu });
        }
        Self::new(weight, k, nu)
    }

    pub fn weight(&self) -> &WeightMatrix {
        &self.weight
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn axes(&self) -> &[Vec3] {
        &self.nu
    }

    /// Number of configurations `|𝒬|`.
    pub fn len(&self) -> usize {
        self.nu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nu.is_empty()
    }

    /// Indices are 1-based: `q ∈ 1..=len()`.
    pub fn nu(&self, q: usize) -> Result<Vec3> {
        if q == 0 || q > self.nu.len() {
            return Err(Error::IndexOutOfRange { q, len: self.nu.len() });
        }
        Ok(self.nu[q - 1])
    }

    /// Warp angle `2 asin(k U)` for a given `U_A` value.
    pub fn warp_angle_of(&self, u: f64) -> f64 {
        2.0 * clamped_asin_arg(self.k * u).asin()
    }

    /// `𝕽_A(X, q) = R_a(2 asin(k U_A(X)), ν(q))`.
    pub fn warp_rotation(&self, x: &Rotation, q: usize) -> Result<Rotation> {
        let axis = self.nu(q)?;
        Ok(Rotation::rodrigues(self.warp_angle_of(self.weight.u_potential(x)), &axis))
    }

    /// `Γ_A(X, q) = X 𝕽_A(X, q)`.
    pub fn gamma(&self, x: &Rotation, q: usize) -> Result<Rotation> {
        Ok(*x * self.warp_rotation(x, q)?)
    }

    /// Transport matrix with `d/dt Γ_A = Γ_A [Θ_A ω]ₓ` along `Ẋ = X[ω]ₓ`:
    /// `Θ_A = 𝕽_Aᵀ + k ν ψ(AX)ᵀ / (λ_max(Ā) √(1 - k²U_A²))`.
    pub fn theta_matrix(&self, x: &Rotation, q: usize) -> Result<Mat3> {
        let axis = self.nu(q)?;
        let u = self.weight.u_potential(x);
        let ku = clamped_asin_arg(self.k * u);
        let warp = Rotation::rodrigues(2.0 * ku.asin(), &axis);
        let p = psi(&(self.weight.a() * x.matrix()));
        let scale = self.k / (self.weight.lam_max_bar() * (1.0 - ku * ku).sqrt());
        Ok(warp.matrix().transpose() + axis * p.transpose() * scale)
    }

    /// `Φ_U(X, q) = U_A(Γ_A(X, q))`.
    pub fn phi_u(&self, x: &Rotation, q: usize) -> Result<f64> {
        Ok(self.weight.u_potential(&self.gamma(x, q)?))
    }

    pub fn phi(&self, kind: PotentialKind, x: &Rotation, q: usize) -> Result<f64> {
        let u = self.phi_u(x, q)?;
        Ok(match kind {
            PotentialKind::U => u,
            PotentialKind::V => v_of_u(u),
        })
    }

    /// `∇Φ_U = X [Θ_Aᵀ ψ(AΓ_A)]ₓ / (4 λ_max(Ā))`, divided by `√(1 - Φ_U)` for
    /// the V kind.
    pub fn grad_phi(&self, kind: PotentialKind, x: &Rotation, q: usize) -> Result<Mat3> {
        Ok(x.matrix() * hat(&self.grad_phi_body(kind, x, q)?))
    }

    /// Body-frame gradient vector `[Xᵀ ∇Φ(X, q)]_⊗`.
    pub fn grad_phi_body(&self, kind: PotentialKind, x: &Rotation, q: usize) -> Result<Vec3> {
        let gamma = self.gamma(x, q)?;
        let theta = self.theta_matrix(x, q)?;
        let w = self.weight.a();
        let g = theta.transpose() * psi(&(w * gamma.matrix())) / (4.0 * self.weight.lam_max_bar());
        match kind {
            PotentialKind::U => Ok(g),
            PotentialKind::V => {
                let s = guarded_sqrt_one_minus(self.weight.u_potential(&gamma))?;
                Ok(g / s)
            }
        }
    }

    /// Proposition-style quadratic bounds `(α₁, α₂)` with
    /// `α₁|X|² ≤ Φ(X, q) ≤ α₂|X|²`.
    pub fn phi_bounds(&self, kind: PotentialKind) -> (f64, f64) {
        let (low, high) = gamma_bounds(self.k);
        let a1 = self.weight.xi() * low;
        match kind {
            PotentialKind::U => (a1, high),
            PotentialKind::V => (a1, 2.0 * high),
        }
    }
}
