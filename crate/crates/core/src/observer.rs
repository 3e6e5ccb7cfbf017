//! Hybrid attitude and gyro-bias observers.
//!
//! ```text
//! d/dt R̂ = R̂ [ω_y - b̂ + γ_P β]ₓ
//! d/dt b̂ = -γ_I β            (or Proj(-γ_I β, b̂))
//! ```
//!
//! with `β = R̂ᵀ [R̃ᵀ ∇Φ(R̃, q)]_⊗` and `R̃ = R R̂ᵀ`. Observers I/II evaluate
//! `β` from a reconstructed attitude, III/IV from body-frame vector
//! measurements directly.

use std::fmt;
use std::str::FromStr;

use nalgebra::SVD;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hybrid_design::{argmin_index, flow_from_values, jump_from_values, HybridConfig, Variant};
use crate::potentials::{guarded_sqrt_one_minus, v_of_u, WeightMatrix};
use crate::so3::{hat, orthonormalize, psi, Mat3, Rotation, Vec3};
use crate::warping::{PotentialKind, WarpParams};

/// Orthonormality residual above which the estimate is re-projected onto SO(3).
pub const REORTHONORMALIZE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "hybridI")]
    HybridI,
    #[serde(rename = "hybridII")]
    HybridII,
    #[serde(rename = "hybridIII")]
    HybridIII,
    #[serde(rename = "hybridIV")]
    HybridIV,
    #[serde(rename = "smoothI")]
    SmoothI,
    #[serde(rename = "smoothII")]
    SmoothII,
}

impl Mode {
    pub const ALL: [Mode; 6] =
        [Mode::HybridI, Mode::HybridII, Mode::HybridIII, Mode::HybridIV, Mode::SmoothI, Mode::SmoothII];

    pub fn name(self) -> &'static str {
        match self {
            Mode::HybridI => "hybridI",
            Mode::HybridII => "hybridII",
            Mode::HybridIII => "hybridIII",
            Mode::HybridIV => "hybridIV",
            Mode::SmoothI => "smoothI",
            Mode::SmoothII => "smoothII",
        }
    }

    /// Design used by a hybrid mode.
    pub fn variant(self) -> Option<Variant> {
        match self {
            Mode::HybridI => Some(Variant::D1),
            Mode::HybridII => Some(Variant::D2),
            Mode::HybridIII => Some(Variant::D3),
            Mode::HybridIV => Some(Variant::D4),
            Mode::SmoothI | Mode::SmoothII => None,
        }
    }

    pub fn from_variant(v: Variant) -> Mode {
        match v {
            Variant::D1 => Mode::HybridI,
            Variant::D2 => Mode::HybridII,
            Variant::D3 => Mode::HybridIII,
            Variant::D4 => Mode::HybridIV,
        }
    }

    pub fn is_hybrid(self) -> bool {
        self.variant().is_some()
    }

    /// Modes that consume a reconstructed attitude rather than raw vectors.
    pub fn needs_attitude(self) -> bool {
        matches!(self, Mode::HybridI | Mode::HybridII | Mode::SmoothI)
    }

    /// Modes whose weight is `A = I` regardless of the measurement weights.
    pub fn uses_identity_weight(self) -> bool {
        self.needs_attitude()
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown mode '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gains {
    pub gamma_p: f64,
    pub gamma_i: f64,
    /// Radius `b̄` of the bias projection ball; `None` disables projection.
    #[serde(default)]
    pub bias_bound: Option<f64>,
}

impl Gains {
    pub fn new(gamma_p: f64, gamma_i: f64, bias_bound: Option<f64>) -> Result<Self> {
        let g = Self { gamma_p, gamma_i, bias_bound };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_p > 0.0 && self.gamma_p.is_finite()) {
            return Err(Error::InvalidConfig(format!("gamma_p must be positive, got {}", self.gamma_p)));
        }
        if !(self.gamma_i >= 0.0 && self.gamma_i.is_finite()) {
            return Err(Error::InvalidConfig(format!("gamma_i must be nonnegative, got {}", self.gamma_i)));
        }
        if let Some(b) = self.bias_bound {
            if !(b > 0.0 && b.is_finite()) {
                return Err(Error::InvalidConfig(format!("bias_bound must be positive, got {b}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObserverState {
    pub rhat: Rotation,
    pub bhat: Vec3,
    pub q: usize,
    pub jumps: u64,
    pub t: f64,
}

impl ObserverState {
    pub fn new(rhat: Rotation, bhat: Vec3, q: usize) -> Self {
        Self { rhat, bhat, q, jumps: 0, t: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    pub omega_y: Vec3,
    pub body_vecs: Vec<Vec3>,
    pub inertial_vecs: Vec<Vec3>,
    pub rho: Vec<f64>,
}

impl MeasurementSet {
    /// Noise-free measurements `bᵢ = Rᵀaᵢ` of the attitude `r`.
    pub fn from_truth(r: &Rotation, omega_y: Vec3, inertial_vecs: &[Vec3], rho: &[f64]) -> Self {
        let rt = r.matrix().transpose();
        Self {
            omega_y,
            body_vecs: inertial_vecs.iter().map(|a| rt * a).collect(),
            inertial_vecs: inertial_vecs.to_vec(),
            rho: rho.to_vec(),
        }
    }

    /// Checks list lengths and that the inertial directions span `ℝ³`.
    pub fn validate(&self) -> Result<()> {
        let n = self.inertial_vecs.len();
        if self.body_vecs.len() != n || self.rho.len() != n {
            return Err(Error::InvalidMeasurements(format!(
                "length mismatch: {} body, {} inertial, {} weights",
                self.body_vecs.len(),
                n,
                self.rho.len()
            )));
        }
        self.weight().map(|_| ())
    }

    /// `A = Σ ρᵢ aᵢ aᵢᵀ`.
    pub fn weight(&self) -> Result<WeightMatrix> {
        WeightMatrix::from_vectors(&self.inertial_vecs, &self.rho)
    }

    fn iter(&self) -> impl Iterator<Item = (&Vec3, &Vec3, f64)> {
        self.body_vecs.iter().zip(&self.inertial_vecs).zip(&self.rho).map(|((b, a), r)| (b, a, *r))
    }
}

/// Weighted least-squares attitude from vector pairs: minimizes
/// `Σ ρᵢ ‖aᵢ - R bᵢ‖²` over SO(3).
pub fn wahba_svd(m: &MeasurementSet) -> Result<Rotation> {
    let mut b = Mat3::zeros();
    for (bi, ai, r) in m.iter() {
        b += ai * bi.transpose() * r;
    }
    let svd = SVD::new(b, true, true);
    let (Some(u), Some(v_t)) = (svd.u, svd.v_t) else {
        return Err(Error::InvalidMeasurements("SVD failed".into()));
    };
    let imin = svd.singular_values.imin();
    let mut d = Mat3::identity();
    d[(imin, imin)] = (u * v_t).determinant().signum();
    Rotation::new(u * d * v_t)
}

/// Quantities of the explicit vector-measurement form.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitTerms {
    pub phi_bar: f64,
    pub vartheta: f64,
    pub r_bar: Mat3,
    pub theta_bar: Mat3,
    pub beta_bar: Vec3,
}

/// Evaluates `ϑ, 𝕽̄, Θ̄, Φ̄, β̄` from measurements only.
///
/// `ϑ = Σρᵢ‖bᵢ - R̂ᵀaᵢ‖²/(8λ)` equals `U_A(R̃)`, so the warp angle is
/// `2 asin(kϑ)` and the transport term carries `√(1 - k²ϑ²)`.
pub fn explicit_terms(warp: &WarpParams, rhat: &Rotation, q: usize, m: &MeasurementSet) -> Result<ExplicitTerms> {
    let nu = warp.nu(q)?;
    let lam = warp.weight().lam_max_bar();
    let k = warp.k();
    let rt = rhat.matrix().transpose();

    let mut t = Vec3::zeros();
    let mut vartheta = 0.0;
    for (b, a, r) in m.iter() {
        let ra = rt * a;
        t += b.cross(&ra) * r;
        vartheta += (b - ra).norm_squared() * r;
    }
    vartheta /= 8.0 * lam;

    let r_bar = Rotation::rodrigues(warp.warp_angle_of(vartheta), &nu);
    let rr = rt * r_bar.matrix();
    let mut s = Vec3::zeros();
    let mut phi_bar = 0.0;
    for (b, a, r) in m.iter() {
        let ra = rr * a;
        s += b.cross(&ra) * r;
        phi_bar += (b - ra).norm_squared() * r;
    }
    phi_bar /= 8.0 * lam;

    let kv = (k * vartheta).min(1.0 - 1e-15);
    let theta_bar = Mat3::identity() + rhat.matrix() * t * nu.transpose() * (k / (2.0 * lam * (1.0 - kv * kv).sqrt()));
    let beta_bar = rt * theta_bar * rhat.matrix() * s / (8.0 * lam);
    Ok(ExplicitTerms { phi_bar, vartheta, r_bar: *r_bar.matrix(), theta_bar, beta_bar })
}

/// `Proj(μ, b̂)`: removes the outward radial part of `μ` once `‖b̂‖ ≥ b̄`.
pub fn proj(mu: &Vec3, bhat: &Vec3, bbar: f64) -> Vec3 {
    let n2 = bhat.norm_squared();
    if n2 < bbar * bbar || bhat.dot(mu) <= 0.0 {
        *mu
    } else {
        mu - bhat * (bhat.dot(mu) / n2)
    }
}

/// `𝔏₀ = Φ + ‖b̃‖²/γ_I`; just `Φ` when bias adaptation is off.
pub fn lyapunov_l0(phi: f64, bias_err: &Vec3, gamma_i: f64) -> f64 {
    if gamma_i > 0.0 {
        phi + bias_err.norm_squared() / gamma_i
    } else {
        phi
    }
}

/// Potential value, innovation, and the potential at every index.
#[derive(Debug, Clone, PartialEq)]
pub struct Innovation {
    pub phi: f64,
    pub beta: Vec3,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub jumped: bool,
    /// `Φ` at the pre-jump index (equal to `phi_after` without a jump).
    pub phi_before: f64,
    pub phi_after: f64,
    /// Innovation used for the flow step.
    pub innovation: Innovation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observer {
    mode: Mode,
    design: Option<HybridConfig>,
    smooth: Option<WarpParams>,
    gains: Gains,
}

impl Observer {
    /// Builds the observer for `mode`. `weight` is `Σρᵢaᵢaᵢᵀ`; attitude-based
    /// modes ignore it and use `A = I`.
    pub fn new(mode: Mode, weight: &WeightMatrix, k: f64, delta_fraction: f64, gains: Gains) -> Result<Self> {
        gains.validate()?;
        let w = if mode.uses_identity_weight() { WeightMatrix::identity() } else { weight.clone() };
        let (design, smooth) = match mode.variant() {
            Some(v) => (Some(HybridConfig::new(v, w, k, delta_fraction)?), None),
            None => (None, Some(WarpParams::with_gain_unchecked_lower(w, 0.0, vec![Vec3::x()])?)),
        };
        Ok(Self { mode, design, smooth, gains })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn design(&self) -> Option<&HybridConfig> {
        self.design.as_ref()
    }

    pub fn gains(&self) -> &Gains {
        &self.gains
    }

    pub fn delta(&self) -> Option<f64> {
        self.design.as_ref().map(|d| d.delta())
    }

    pub fn num_indices(&self) -> usize {
        self.design.as_ref().map_or(1, |d| d.len())
    }

    fn warp(&self) -> &WarpParams {
        match (&self.design, &self.smooth) {
            (Some(d), _) => d.warp(),
            (None, Some(s)) => s,
            (None, None) => unreachable!("observer without warp"),
        }
    }

    fn rtilde(&self, rhat: &Rotation, attitude: Option<&Rotation>) -> Result<Rotation> {
        let r = attitude.ok_or(Error::MissingAttitudeSource(self.mode.name()))?;
        Ok(*r * rhat.transpose())
    }

    /// `Φ` and `β` at index `q`, plus `Φ` at every index for the switching rule.
    pub fn innovation(
        &self,
        rhat: &Rotation,
        q: usize,
        m: &MeasurementSet,
        attitude: Option<&Rotation>,
    ) -> Result<Innovation> {
        self.evaluate(rhat, q, m, attitude, true)
    }

    /// `Φ` at every index without the innovation, so states on the jump set
    /// never touch a singular gradient.
    pub fn potential_values(
        &self,
        rhat: &Rotation,
        m: &MeasurementSet,
        attitude: Option<&Rotation>,
    ) -> Result<Vec<f64>> {
        Ok(self.evaluate(rhat, 1, m, attitude, false)?.values)
    }

    fn evaluate(
        &self,
        rhat: &Rotation,
        q: usize,
        m: &MeasurementSet,
        attitude: Option<&Rotation>,
        with_beta: bool,
    ) -> Result<Innovation> {
        let warp = self.warp();
        match self.mode {
            Mode::SmoothI => {
                let rt = self.rtilde(rhat, attitude)?;
                let beta = rhat.matrix().transpose() * psi(rt.matrix()) / 4.0;
                let phi = rt.distance_sq();
                Ok(Innovation { phi, beta, values: vec![phi] })
            }
            Mode::HybridI | Mode::HybridII => {
                let d = self.design.as_ref().expect("hybrid mode has a design");
                let rt = self.rtilde(rhat, attitude)?;
                let values = d.phi_values(&rt)?;
                warp.nu(q)?;
                let beta = if with_beta {
                    rhat.matrix().transpose() * warp.grad_phi_body(d.kind(), &rt, q)?
                } else {
                    Vec3::zeros()
                };
                Ok(Innovation { phi: values[q - 1], beta, values })
            }
            Mode::SmoothII => {
                let lam = warp.weight().lam_max_bar();
                let rt = rhat.matrix().transpose();
                let mut beta = Vec3::zeros();
                let mut phi = 0.0;
                for (b, a, r) in m.iter() {
                    let ra = rt * a;
                    beta += b.cross(&ra) * r;
                    phi += (b - ra).norm_squared() * r;
                }
                let phi = phi / (8.0 * lam);
                Ok(Innovation { phi, beta: beta / (8.0 * lam), values: vec![phi] })
            }
            Mode::HybridIII | Mode::HybridIV => {
                let v_kind = self.mode == Mode::HybridIV;
                let mut values = Vec::with_capacity(warp.len());
                let mut beta = Vec3::zeros();
                for p in 1..=warp.len() {
                    let e = explicit_terms(warp, rhat, p, m)?;
                    if p == q && with_beta {
                        beta = if v_kind { e.beta_bar / guarded_sqrt_one_minus(e.phi_bar)? } else { e.beta_bar };
                    }
                    values.push(if v_kind { v_of_u(e.phi_bar) } else { e.phi_bar });
                }
                warp.nu(q)?;
                Ok(Innovation { phi: values[q - 1], beta, values })
            }
        }
    }

    /// `(d/dt R̂, d/dt b̂)` at the current state.
    pub fn derivatives(
        &self,
        state: &ObserverState,
        m: &MeasurementSet,
        attitude: Option<&Rotation>,
    ) -> Result<(Mat3, Vec3)> {
        let inn = self.innovation(&state.rhat, state.q, m, attitude)?;
        Ok(self.rates(state, m, &inn.beta))
    }

    fn rates(&self, state: &ObserverState, m: &MeasurementSet, beta: &Vec3) -> (Mat3, Vec3) {
        let kappa = m.omega_y - state.bhat + beta * self.gains.gamma_p;
        let mu = beta * -self.gains.gamma_i;
        let bdot = match self.gains.bias_bound {
            Some(bb) => proj(&mu, &state.bhat, bb),
            None => mu,
        };
        (state.rhat.matrix() * hat(&kappa), bdot)
    }

    /// One hybrid step: jump if in the jump set, then a Lie–Euler flow step.
    pub fn step(
        &self,
        state: &ObserverState,
        m: &MeasurementSet,
        dt: f64,
        attitude: Option<&Rotation>,
    ) -> Result<(ObserverState, StepReport)> {
        if !(dt > 0.0) {
            return Err(Error::InvalidConfig(format!("dt must be positive, got {dt}")));
        }
        let mut next = state.clone();
        let values = self.potential_values(&state.rhat, m, attitude)?;
        let q = if self.design.is_some() { state.q } else { 1 };
        let phi_before = values[q - 1];
        let mut jumped = false;
        if let Some(d) = &self.design {
            if jump_from_values(&values, q, d.delta()) {
                let p = argmin_index(&values);
                if !flow_from_values(&values, p, d.delta()) || jump_from_values(&values, p, d.delta()) {
                    return Err(Error::JumpInvariant { gap: values[q - 1] - values[p - 1], delta: d.delta() });
                }
                next.q = p;
                next.jumps += 1;
                jumped = true;
            }
        }
        let inn = self.innovation(&state.rhat, next.q, m, attitude)?;

        let kappa = m.omega_y - state.bhat + inn.beta * self.gains.gamma_p;
        let (_, bdot) = self.rates(&next, m, &inn.beta);
        let mut rhat = state.rhat * Rotation::exp(&(kappa * dt));
        if rhat.orthonormality_residual() > REORTHONORMALIZE_TOL {
            rhat = orthonormalize(rhat.matrix())?;
        }
        let mut bhat = state.bhat + bdot * dt;
        if let Some(bb) = self.gains.bias_bound {
            let n = bhat.norm();
            if n > bb {
                bhat *= bb / n;
            }
        }
        next.rhat = rhat;
        next.bhat = bhat;
        next.t = state.t + dt;
        Ok((next, StepReport { jumped, phi_before, phi_after: inn.phi, innovation: inn }))
    }

    /// Flow-set membership of the current index.
    pub fn in_flow(&self, values: &[f64], q: usize) -> bool {
        match &self.design {
            Some(d) => flow_from_values(values, q, d.delta()),
            None => true,
        }
    }

    pub fn potential_kind(&self) -> PotentialKind {
        match self.mode {
            Mode::HybridII | Mode::HybridIV => PotentialKind::V,
            _ => PotentialKind::U,
        }
    }
}
