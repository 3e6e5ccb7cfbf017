//! Ground-truth kinematics, sensor synthesis, and fixed-step co-simulation
//! of several observers against a shared truth trajectory.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observer::{lyapunov_l0, wahba_svd, Gains, MeasurementSet, Mode, Observer, ObserverState};
use crate::so3::{orthonormalize, Rotation, UnitQuaternion, Vec3};

/// Attitude error below which an estimate counts as settled.
pub const SETTLING_THRESHOLD: f64 = 1e-3;
/// Attitude error below which no further jumps are expected.
pub const CONVERGED_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OmegaProfile {
    Constant {
        value: [f64; 3],
    },
    /// `ωᵢ(t) = amplitudeᵢ sin(freqᵢ t + phaseᵢ)`.
    Sinusoid {
        amplitude: [f64; 3],
        freq: [f64; 3],
        phase: [f64; 3],
    },
}

impl OmegaProfile {
    pub fn eval(&self, t: f64) -> Vec3 {
        match self {
            OmegaProfile::Constant { value } => Vec3::from(*value),
            OmegaProfile::Sinusoid { amplitude, freq, phase } => {
                Vec3::from_fn(|i, _| amplitude[i] * (freq[i] * t + phase[i]).sin())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BiasProfile {
    Constant {
        value: [f64; 3],
    },
    /// `b(t) = (1 + depth cos(freq t)) base`.
    Modulated {
        base: [f64; 3],
        depth: f64,
        freq: f64,
    },
}

impl BiasProfile {
    pub fn eval(&self, t: f64) -> Vec3 {
        match self {
            BiasProfile::Constant { value } => Vec3::from(*value),
            BiasProfile::Modulated { base, depth, freq } => Vec3::from(*base) * (1.0 + depth * (freq * t).cos()),
        }
    }
}

fn default_stride() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    pub omega_profile: OmegaProfile,
    pub bias_profile: BiasProfile,
    pub inertial_vecs: Vec<[f64; 3]>,
    pub rho: Vec<f64>,
    pub gains: Gains,
    pub k: f64,
    pub delta_fraction: f64,
    /// Quaternions `[η, ε₁, ε₂, ε₃]`.
    pub r0_truth: [f64; 4],
    pub r0_hat: [f64; 4],
    pub bhat0: [f64; 3],
    pub q0: usize,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_stride")]
    pub record_stride: usize,
    pub modes: Vec<Mode>,
}

/// Built-in scenarios of the two numerical studies.
pub fn default_example(which: u8) -> Result<ScenarioConfig> {
    let a1 = Vec3::new(1.0, -1.0, 1.0) / 3f64.sqrt();
    let a2 = Vec3::z();
    let a3 = a1.cross(&a2);
    let (rho, modes, name) = match which {
        1 => (vec![1.0, 1.0, 1.0], vec![Mode::HybridI, Mode::HybridII, Mode::SmoothI], "example1"),
        2 => (vec![1.0, 3.0, 1.0], vec![Mode::HybridIII, Mode::HybridIV, Mode::SmoothII], "example2"),
        other => return Err(Error::InvalidConfig(format!("no builtin example {other}"))),
    };
    Ok(ScenarioConfig {
        name: name.into(),
        omega_profile: OmegaProfile::Sinusoid {
            amplitude: [0.5, 0.7, 1.0],
            freq: [0.1, 0.2, 0.3],
            phase: [0.0, std::f64::consts::PI, std::f64::consts::FRAC_PI_3],
        },
        bias_profile: BiasProfile::Modulated { base: [0.003, -0.005, 0.01], depth: 0.1, freq: 0.1 },
        inertial_vecs: [a1, a2, a3].iter().map(|v| [v.x, v.y, v.z]).collect(),
        rho,
        gains: Gains { gamma_p: 5.0, gamma_i: 10.0, bias_bound: Some(0.1) },
        k: 0.95 / 5f64.sqrt(),
        delta_fraction: 0.8,
        r0_truth: [1.0, 0.0, 0.0, 0.0],
        r0_hat: [0.0, 1.0, 0.0, 0.0],
        bhat0: [0.0; 3],
        q0: 1,
        dt: 1e-3,
        t_end: 60.0,
        record_stride: default_stride(),
        modes,
    })
}

fn quat(q: &[f64; 4]) -> Result<Rotation> {
    Ok(UnitQuaternion::new(q[0], Vec3::new(q[1], q[2], q[3]))?.to_rotation())
}

impl ScenarioConfig {
    pub fn inertial(&self) -> Vec<Vec3> {
        self.inertial_vecs.iter().map(|v| Vec3::from(*v)).collect()
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidConfig(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end > self.dt && self.t_end.is_finite()) {
            return Err(Error::InvalidConfig(format!("t_end must exceed dt, got {}", self.t_end)));
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidConfig("record_stride must be at least 1".into()));
        }
        if self.modes.is_empty() {
            return Err(Error::InvalidConfig("no observer modes selected".into()));
        }
        self.gains.validate()?;
        quat(&self.r0_truth)?;
        quat(&self.r0_hat)?;
        self.observers().map(|_| ())
    }

    fn observers(&self) -> Result<Vec<Observer>> {
        let m = MeasurementSet {
            omega_y: Vec3::zeros(),
            body_vecs: self.inertial(),
            inertial_vecs: self.inertial(),
            rho: self.rho.clone(),
        };
        m.validate()?;
        let w = m.weight()?;
        self.modes
            .iter()
            .map(|&mode| {
                let obs = Observer::new(mode, &w, self.k, self.delta_fraction, self.gains)?;
                if self.q0 == 0 || (mode.is_hybrid() && self.q0 > obs.num_indices()) {
                    return Err(Error::IndexOutOfRange { q: self.q0, len: obs.num_indices() });
                }
                Ok(obs)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub t: f64,
    pub j: u64,
    pub mode: Mode,
    pub attitude_err: f64,
    pub bias_err: f64,
    pub phi: f64,
    pub q: usize,
    pub l0: f64,
    pub jump: bool,
}

/// Full-rate diagnostics gathered for one mode during a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeDiagnostics {
    pub mode: Mode,
    pub delta: Option<f64>,
    pub jumps: u64,
    pub l0_initial: f64,
    /// `ceil(𝔏₀(t₀)/δ)` for hybrid modes.
    pub jump_bound: Option<u64>,
    /// Largest per-step increase of `𝔏₀` along flows, divided by `dt`.
    pub max_l0_flow_rate: f64,
    /// Smallest `Φ` decrease over a jump.
    pub min_jump_drop: Option<f64>,
    pub jumps_after_converged: u64,
    pub settling_time: Option<f64>,
    pub final_attitude_err: f64,
    pub final_bias_err: f64,
    pub max_bhat_norm: f64,
    pub max_drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimOutput {
    pub records: Vec<TraceRecord>,
    pub diagnostics: Vec<ModeDiagnostics>,
    pub truth_drift: f64,
}

struct Tracker {
    obs: Observer,
    state: ObserverState,
    diag: ModeDiagnostics,
    last_l0: Option<f64>,
    last_above: Option<f64>,
    converged: bool,
}

fn fault(mode: Mode, t: f64, j: u64, e: Error) -> Error {
    Error::Fault { mode: mode.name().into(), t, j, source: Box::new(e) }
}

/// Runs the scenario: truth and every observer advance with the same
/// Lie–Euler step, rates sampled at the start of the step.
pub fn run(cfg: &ScenarioConfig) -> Result<SimOutput> {
    cfg.validate()?;
    let inertial = cfg.inertial();
    let mut r = quat(&cfg.r0_truth)?;
    let rhat0 = quat(&cfg.r0_hat)?;
    let dt = cfg.dt;
    let needs_attitude = cfg.modes.iter().any(|m| m.needs_attitude());

    let mut trackers: Vec<Tracker> = cfg
        .observers()?
        .into_iter()
        .map(|obs| {
            let q = if obs.mode().is_hybrid() { cfg.q0 } else { 1 };
            Tracker {
                diag: ModeDiagnostics {
                    mode: obs.mode(),
                    delta: obs.delta(),
                    jumps: 0,
                    l0_initial: f64::NAN,
                    jump_bound: None,
                    max_l0_flow_rate: f64::NEG_INFINITY,
                    min_jump_drop: None,
                    jumps_after_converged: 0,
                    settling_time: None,
                    final_attitude_err: f64::NAN,
                    final_bias_err: f64::NAN,
                    max_bhat_norm: 0.0,
                    max_drift: 0.0,
                },
                state: ObserverState::new(rhat0, Vec3::from(cfg.bhat0), q),
                obs,
                last_l0: None,
                last_above: None,
                converged: false,
            }
        })
        .collect();

    let n = cfg.steps();
    let mut records = Vec::with_capacity(trackers.len() * (n / cfg.record_stride + 1));
    let mut truth_drift: f64 = 0.0;

    for i in 0..=n {
        let t = i as f64 * dt;
        let omega = cfg.omega_profile.eval(t);
        let bias = cfg.bias_profile.eval(t);
        let m = MeasurementSet::from_truth(&r, omega + bias, &inertial, &cfg.rho);
        let attitude =
            if needs_attitude { Some(wahba_svd(&m).map_err(|e| fault(cfg.modes[0], t, 0, e))?) } else { None };
        let last = i == n;

        for tr in trackers.iter_mut() {
            let mode = tr.obs.mode();
            let s = &tr.state;
            let (next, rep) = tr.obs.step(s, &m, dt, attitude.as_ref()).map_err(|e| fault(mode, t, s.jumps, e))?;
            let bias_err = s.bhat - bias;
            let gi = cfg.gains.gamma_i;
            let l0_pre = lyapunov_l0(rep.phi_before, &bias_err, gi);
            let l0_post = lyapunov_l0(rep.phi_after, &bias_err, gi);
            let err = (r * s.rhat.transpose()).distance_sq();

            if i == 0 {
                tr.diag.l0_initial = l0_pre;
                tr.diag.jump_bound = tr.obs.delta().map(|d| (l0_pre / d).ceil() as u64);
            }
            if let Some(prev) = tr.last_l0 {
                tr.diag.max_l0_flow_rate = tr.diag.max_l0_flow_rate.max((l0_pre - prev) / dt);
            }
            if rep.jumped {
                let drop = rep.phi_before - rep.phi_after;
                tr.diag.min_jump_drop = Some(tr.diag.min_jump_drop.map_or(drop, |d: f64| d.min(drop)));
                if tr.converged {
                    tr.diag.jumps_after_converged += 1;
                }
            }
            if err >= SETTLING_THRESHOLD {
                tr.last_above = Some(t);
            }
            if err < CONVERGED_THRESHOLD {
                tr.converged = true;
            }
            tr.diag.max_bhat_norm = tr.diag.max_bhat_norm.max(s.bhat.norm());
            tr.diag.max_drift = tr.diag.max_drift.max(s.rhat.orthonormality_residual());

            let j = s.jumps + u64::from(rep.jumped);
            if i % cfg.record_stride == 0 || last {
                records.push(TraceRecord {
                    t,
                    j,
                    mode,
                    attitude_err: err,
                    bias_err: bias_err.norm(),
                    phi: rep.phi_after,
                    q: if rep.jumped { next.q } else { s.q },
                    l0: l0_post,
                    jump: rep.jumped,
                });
            }
            if last {
                tr.diag.jumps = j;
                tr.diag.final_attitude_err = err;
                tr.diag.final_bias_err = bias_err.norm();
                tr.diag.settling_time = match tr.last_above {
                    None => Some(0.0),
                    Some(ta) if ta < t => Some(ta + dt),
                    Some(_) => None,
                };
            } else {
                tr.last_l0 = Some(l0_post);
                tr.state = next;
            }
        }

        if !last {
            r = r * Rotation::exp(&(omega * dt));
            let res = r.orthonormality_residual();
            truth_drift = truth_drift.max(res);
            if res > crate::observer::REORTHONORMALIZE_TOL {
                r = orthonormalize(r.matrix()).map_err(|e| fault(cfg.modes[0], t, 0, e))?;
            }
        }
    }

    for tr in trackers.iter_mut() {
        if tr.diag.max_l0_flow_rate == f64::NEG_INFINITY {
            tr.diag.max_l0_flow_rate = 0.0;
        }
    }
    Ok(SimOutput { records, diagnostics: trackers.into_iter().map(|t| t.diag).collect(), truth_drift })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub scenario: String,
    pub dt: f64,
    pub t_end: f64,
    pub truth_drift: f64,
    pub modes: Vec<ModeDiagnostics>,
}

/// Per-mode summary of a finished run.
pub fn metrics(cfg: &ScenarioConfig, out: &SimOutput) -> Summary {
    Summary {
        scenario: cfg.name.clone(),
        dt: cfg.dt,
        t_end: cfg.t_end,
        truth_drift: out.truth_drift,
        modes: out.diagnostics.clone(),
    }
}

/// Settling time recomputed from recorded samples only.
pub fn settling_from_records(records: &[TraceRecord], mode: Mode) -> Option<f64> {
    let rows: Vec<&TraceRecord> = records.iter().filter(|r| r.mode == mode).collect();
    let last = rows.last()?;
    if last.attitude_err >= SETTLING_THRESHOLD {
        return None;
    }
    let mut settle = rows[0].t;
    for w in rows.windows(2) {
        if w[0].attitude_err >= SETTLING_THRESHOLD {
            settle = w[1].t;
        }
    }
    Some(settle)
}
