//! Synergistic designs D1–D4 and the hysteresis switching rule.
//!
//! A design fixes the weight `A`, the potential kind, the index set `𝒬`
//! with its axis map `ν`, and a hysteresis gap `δ` below the certified
//! bound `Δ`. Flow happens while `Φ(X, q) - min_p Φ(X, p) ≤ δ`; otherwise
//! the index jumps to the minimizer.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potentials::{half_turn, WeightMatrix};
use crate::so3::{Rotation, UnitQuaternion, Vec3};
use crate::warping::{gamma_bounds, k_bar, PotentialKind, WarpParams};

/// Relative spacing below which two eigenvalues of `A` count as repeated.
pub const EIGEN_SEPARATION_TOL: f64 = 1e-9;

const PREIMAGE_MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    D1,
    D2,
    D3,
    D4,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::D1, Variant::D2, Variant::D3, Variant::D4];

    pub fn kind(self) -> PotentialKind {
        match self {
            Variant::D1 | Variant::D3 => PotentialKind::U,
            Variant::D2 | Variant::D4 => PotentialKind::V,
        }
    }

    /// D1/D2 use `A = I` and six axes; D3/D4 use a general `A` and two.
    pub fn is_isotropic(self) -> bool {
        matches!(self, Variant::D1 | Variant::D2)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Variant::D1 => "d1",
            Variant::D2 => "d2",
            Variant::D3 => "d3",
            Variant::D4 => "d4",
        };
        f.write_str(s)
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "d1" => Ok(Variant::D1),
            "d2" => Ok(Variant::D2),
            "d3" => Ok(Variant::D3),
            "d4" => Ok(Variant::D4),
            other => Err(Error::InvalidConfig(format!("unknown design '{other}'"))),
        }
    }
}

/// `Δ_I(k) = (-1 + √(1 + 4k²))³ / (24 k⁴)`.
pub fn delta_i(k: f64) -> f64 {
    let s = -1.0 + (1.0 + 4.0 * k * k).sqrt();
    s * s * s / (24.0 * k.powi(4))
}

fn branch_test(l: [f64; 3]) -> f64 {
    l[1] * l[2] - l[0] * l[1] - l[0] * l[2]
}

fn sigma2(l: [f64; 3]) -> f64 {
    l[0] * l[1] + l[0] * l[2] + l[1] * l[2]
}

/// `Λ` from the ascending eigenvalues of `A`.
pub fn lambda_ratio(l: [f64; 3]) -> f64 {
    if branch_test(l) >= 0.0 {
        l[0] / (l[1] + l[2])
    } else {
        4.0 * l[0] * l[1] * l[2] / ((l[1] + l[2]) * 2.0 * sigma2(l))
    }
}

/// `V̄ = (-1 + √(1 + 4k²ξΛ)) / (2k²Λ)`.
pub fn v_bar(k: f64, xi: f64, lambda: f64) -> f64 {
    (-1.0 + (1.0 + 4.0 * k * k * xi * lambda).sqrt()) / (2.0 * k * k * lambda)
}

fn require_distinct(w: &WeightMatrix) -> Result<()> {
    let l = w.eigvals();
    let scale = l[2].abs().max(f64::MIN_POSITIVE);
    if l[0] <= 0.0 || (l[1] - l[0]) <= EIGEN_SEPARATION_TOL * scale || (l[2] - l[1]) <= EIGEN_SEPARATION_TOL * scale {
        return Err(Error::RepeatedEigenvalues(l));
    }
    Ok(())
}

fn require_gain(w: &WeightMatrix, k: f64) -> Result<()> {
    let kb = k_bar(w.xi())?;
    if !(k > 0.0 && k < kb) {
        return Err(Error::InvalidGain { k, k_bar: kb });
    }
    Ok(())
}

/// Certified upper bound on the hysteresis gap for a design.
pub fn delta_bound(variant: Variant, w: &WeightMatrix, k: f64) -> Result<f64> {
    require_gain(w, k)?;
    match variant {
        Variant::D1 => Ok(delta_i(k)),
        Variant::D2 => Ok(2.0 * delta_i(k).sqrt()),
        Variant::D3 | Variant::D4 => {
            require_distinct(w)?;
            let xi = w.xi();
            let lam = lambda_ratio(w.eigvals());
            let vb = v_bar(k, xi, lam);
            let d3 = 4.0 * k * k * vb * vb * (1.0 - k * k * vb * vb) * lam;
            if variant == Variant::D3 {
                Ok(d3)
            } else {
                Ok(2.0 * (-(1.0 - xi).sqrt() + (1.0 - xi + d3).sqrt()))
            }
        }
    }
}

/// Squared projections `(uᵀvᵢ)²` of the D3/D4 axis on the eigenvectors of `A`.
pub fn d3_squared_projections(l: [f64; 3]) -> [f64; 3] {
    if branch_test(l) >= 0.0 {
        let s = l[1] + l[2];
        [0.0, l[1] / s, l[2] / s]
    } else {
        let two_s2 = 2.0 * sigma2(l);
        [1.0 - 4.0 * l[1] * l[2] / two_s2, 1.0 - 4.0 * l[0] * l[2] / two_s2, 1.0 - 4.0 * l[0] * l[1] / two_s2]
    }
}

/// Axis `u` for D3/D4, with nonnegative coefficients on the eigenbasis.
pub fn choose_axis_d3(w: &WeightMatrix) -> Result<Vec3> {
    require_distinct(w)?;
    let c = d3_squared_projections(w.eigvals());
    let v = w.eigvecs();
    let u = v[0] * c[0].max(0.0).sqrt() + v[1] * c[1].max(0.0).sqrt() + v[2] * c[2].max(0.0).sqrt();
    Ok(u.normalize())
}

/// 1-based index of the smallest value; ties go to the smallest index.
pub fn argmin_index(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    best + 1
}

/// Flow condition on precomputed potential values.
pub fn flow_from_values(values: &[f64], q: usize, delta: f64) -> bool {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    values[q - 1] - min <= delta
}

/// Jump condition on precomputed potential values.
pub fn jump_from_values(values: &[f64], q: usize, delta: f64) -> bool {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    values[q - 1] - min >= delta
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridConfig {
    variant: Variant,
    warp: WarpParams,
    delta: f64,
    delta_bound: f64,
}

/// Builds a design with `δ = delta_fraction · Δ`.
pub fn make_config(variant: Variant, w: WeightMatrix, k: f64, delta_fraction: f64) -> Result<HybridConfig> {
    HybridConfig::new(variant, w, k, delta_fraction)
}

impl HybridConfig {
    pub fn new(variant: Variant, w: WeightMatrix, k: f64, delta_fraction: f64) -> Result<Self> {
        if !(delta_fraction > 0.0 && delta_fraction < 1.0) {
            return Err(Error::InvalidDeltaFraction(delta_fraction));
        }
        let bound = delta_bound(variant, &w, k)?;
        let nu = if variant.is_isotropic() {
            if !w.is_identity() {
                return Err(Error::InvalidConfig(format!("design {variant} requires A = I")));
            }
            let e = [Vec3::x(), Vec3::y(), Vec3::z()];
            e.iter().copied().chain(e.iter().map(|v| -v)).collect()
        } else {
            let u = choose_axis_d3(&w)?;
            vec![u, -u]
        };
        Ok(Self { variant, warp: WarpParams::new(w, k, nu)?, delta: bound * delta_fraction, delta_bound: bound })
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn kind(&self) -> PotentialKind {
        self.variant.kind()
    }

    pub fn warp(&self) -> &WarpParams {
        &self.warp
    }

    pub fn weight(&self) -> &WeightMatrix {
        self.warp.weight()
    }

    pub fn k(&self) -> f64 {
        self.warp.k()
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn delta_bound(&self) -> f64 {
        self.delta_bound
    }

    pub fn len(&self) -> usize {
        self.warp.len()
    }

    pub fn is_empty(&self) -> bool {
        self.warp.is_empty()
    }

    pub fn phi(&self, x: &Rotation, q: usize) -> Result<f64> {
        self.warp.phi(self.kind(), x, q)
    }

    /// `Φ(X, p)` for every `p ∈ 𝒬`, in index order.
    pub fn phi_values(&self, x: &Rotation) -> Result<Vec<f64>> {
        (1..=self.len()).map(|p| self.phi(x, p)).collect()
    }

    /// `Φ(X, q) - min_p Φ(X, p)`.
    pub fn gap(&self, x: &Rotation, q: usize) -> Result<f64> {
        self.warp.nu(q)?;
        let v = self.phi_values(x)?;
        let min = v.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(v[q - 1] - min)
    }

    pub fn in_flow(&self, x: &Rotation, q: usize) -> Result<bool> {
        Ok(self.gap(x, q)? <= self.delta)
    }

    pub fn in_jump(&self, x: &Rotation, q: usize) -> Result<bool> {
        Ok(self.gap(x, q)? >= self.delta)
    }

    pub fn jump_map(&self, x: &Rotation, q: usize) -> Result<usize> {
        self.warp.nu(q)?;
        Ok(argmin_index(&self.phi_values(x)?))
    }

    /// Solves `Γ_A(X, q) = Y` for `X` by fixed-point iteration on `s = U_A(X)`.
    pub fn preimage(&self, y: &Rotation, q: usize) -> Result<Rotation> {
        let nu = self.warp.nu(q)?;
        let w = self.weight();
        let mut s = w.u_potential(y);
        for _ in 0..PREIMAGE_MAX_ITER {
            let x = *y * Rotation::rodrigues(-self.warp.warp_angle_of(s), &nu);
            let next = w.u_potential(&x);
            if (next - s).abs() <= 1e-16 {
                s = next;
                break;
            }
            s = next;
        }
        Ok(*y * Rotation::rodrigues(-self.warp.warp_angle_of(s), &nu))
    }

    /// Quadratic sandwich constants `(α₁, α₂)` in closed form.
    pub fn phi_bounds(&self) -> (f64, f64) {
        self.warp.phi_bounds(self.kind())
    }
}

/// Sampled estimates of the flow-set constants with
/// `α₁|X|² ≤ Φ ≤ α₂|X|²` and `α₃|X|² ≤ ‖∇Φ‖²_F ≤ α₄|X|²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaEstimates {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    pub alpha4: f64,
    /// `1 - max Φ_U` over the sampled flow-set points.
    pub margin: f64,
    /// Smallest `|det Θ_A|` seen.
    pub min_det_theta: f64,
    pub samples: usize,
}

/// Uniform random rotation.
pub fn random_rotation<R: Rng>(rng: &mut R) -> Rotation {
    loop {
        let v: [f64; 4] = std::array::from_fn(|_| rng.random::<f64>() * 2.0 - 1.0);
        let n2: f64 = v.iter().map(|c| c * c).sum();
        if n2 > 1e-6 && n2 <= 1.0 {
            let n = n2.sqrt();
            let q = UnitQuaternion::normalized(v[0] / n, Vec3::new(v[1], v[2], v[3]) / n)
                .expect("normalized by construction");
            return q.to_rotation();
        }
    }
}

/// Flow-set point drawn near a half-turn about an eigenvector of `A`:
/// `X = R_Q(0, v) R_a(s, w)` with small `s`.
pub fn adversarial_rotation<R: Rng>(w: &WeightMatrix, rng: &mut R, spread: f64) -> Rotation {
    let v = w.eigvecs()[rng.random_range(0..3)];
    let axis = Vec3::from_fn(|_, _| rng.random::<f64>() * 2.0 - 1.0);
    let axis = if axis.norm() < 1e-6 { Vec3::x() } else { axis.normalize() };
    let s = (rng.random::<f64>() * 2.0 - 1.0) * spread;
    half_turn(&v) * Rotation::rodrigues(s, &axis)
}

/// Rejection-samples `n` flow-set points (a quarter of them adversarial) and
/// reports the extreme ratios.
pub fn sample_alphas(cfg: &HybridConfig, n: usize, seed: u64) -> Result<AlphaEstimates> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut est = AlphaEstimates {
        alpha1: f64::INFINITY,
        alpha2: 0.0,
        alpha3: f64::INFINITY,
        alpha4: 0.0,
        margin: 1.0,
        min_det_theta: f64::INFINITY,
        samples: 0,
    };
    let mut max_u: f64 = 0.0;
    while est.samples < n {
        let x = if est.samples % 4 == 3 {
            adversarial_rotation(cfg.weight(), &mut rng, 0.2)
        } else {
            random_rotation(&mut rng)
        };
        let q = rng.random_range(1..=cfg.len());
        if !cfg.in_flow(&x, q)? {
            continue;
        }
        est.samples += 1;
        let d = x.distance_sq();
        max_u = max_u.max(cfg.warp().phi_u(&x, q)?);
        est.min_det_theta = est.min_det_theta.min(cfg.warp().theta_matrix(&x, q)?.determinant().abs());
        if d < 1e-12 {
            continue;
        }
        let phi = cfg.phi(&x, q)?;
        let g = cfg.warp().grad_phi(cfg.kind(), &x, q)?.norm_squared();
        est.alpha1 = est.alpha1.min(phi / d);
        est.alpha2 = est.alpha2.max(phi / d);
        est.alpha3 = est.alpha3.min(g / d);
        est.alpha4 = est.alpha4.max(g / d);
    }
    est.margin = 1.0 - max_u;
    Ok(est)
}

/// Closed-form distortion constants `(γ_low, γ_high)` for the design gain.
pub fn design_gamma_bounds(cfg: &HybridConfig) -> (f64, f64) {
    gamma_bounds(cfg.k())
}
