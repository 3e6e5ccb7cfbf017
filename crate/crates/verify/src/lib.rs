//! Executable acceptance checks for the hybrid attitude observers.
//!
//! Each `criterion_*` function returns a [`CriterionReport`]; [`Suite`]
//! caches the closed-loop runs several criteria share.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x <= tol)` also rejects NaN.

pub mod identities;
pub mod sampling;

use std::fmt;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use hybrid_attitude::hybrid_design::{
    adversarial_rotation, design_gamma_bounds, random_rotation, sample_alphas, AlphaEstimates,
};
use hybrid_attitude::observer::{explicit_terms, proj};
use hybrid_attitude::potentials::half_turn;
use hybrid_attitude::sim::{BiasProfile, ModeDiagnostics};
use hybrid_attitude::so3::inner;
use hybrid_attitude::{
    default_example, hat, run, Mat3, MeasurementSet, Mode, Observer, PotentialKind, Rotation, ScenarioConfig,
    SimOutput, Variant, Vec3, WarpParams,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sampling::{example2_vectors, example2_weight, rand_unit, rand_vec, study_design, study_gain};

pub const IDENTITY_INSTANCES: usize = 1000;
pub const IDENTITY_TOL: f64 = 1e-12;
pub const IDENTITY_BUDGET: Duration = Duration::from_secs(5);

pub const GRADIENT_DIRECTIONS: usize = 200;
pub const GRADIENT_STEP: f64 = 1e-6;
pub const GRADIENT_REL_TOL: f64 = 1e-5;
pub const GRADIENT_ABS_FLOOR: f64 = 1e-9;

pub const WARP_SAMPLES: usize = 100_000;
/// Rounding allowance on `|Γ|²` against the distortion bounds.
pub const WARP_ROUNDOFF: f64 = 1e-12;
pub const MIN_THETA_DET: f64 = 1e-3;

pub const SYNERGY_SAMPLES: usize = 100_000;
pub const NEAR_S_PI_SAMPLES: usize = 5_000;
/// Angle of the perturbation away from a half-turn for near-`S_π` seeds.
pub const NEAR_S_PI_SPREAD: f64 = 1e-4;

pub const ORACLE_SAMPLES: usize = 1000;
pub const ORACLE_TOL: f64 = 1e-10;
pub const UNWARPED_TOL: f64 = 1e-12;

pub const L0_FLOW_RATE_TOL: f64 = 1e-8;
pub const JUMP_DROP_SLACK: f64 = 1e-9;

/// Settling times (s) of the first run, `(mode, seconds)`.
pub const FROZEN_SETTLING_EX1: [(Mode, f64); 3] =
    [(Mode::HybridI, 4.633), (Mode::HybridII, 4.006), (Mode::SmoothI, 5.936)];
pub const FROZEN_SETTLING_EX2: [(Mode, f64); 3] =
    [(Mode::HybridIII, 12.46), (Mode::HybridIV, 11.04), (Mode::SmoothII, 18.072)];
pub const FROZEN_REL_TOL: f64 = 0.10;
pub const EXAMPLE_BUDGET: Duration = Duration::from_secs(30);
pub const FINAL_BIAS_TOL: f64 = 5e-3;

pub const ENVELOPE_ALPHA_SAMPLES: usize = 100_000;

pub const PROJECTION_SAMPLES: usize = 10_000;
pub const BIAS_BALL_SLACK: f64 = 1e-12;
/// Relative allowance on `b̂ᵀProj`, which is zero in exact arithmetic.
pub const PROJECTION_ROUNDOFF: f64 = 8.0 * f64::EPSILON;

pub const DRIFT_TOL: f64 = 1e-8;
pub const SUITE_BUDGET: Duration = Duration::from_secs(120);

#[derive(Debug, Clone)]
pub struct CriterionReport {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl fmt::Display for CriterionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "criterion {:>2} {} {}: {} ({:.2} s)",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail,
            self.elapsed.as_secs_f64()
        )
    }
}

/// A finished closed-loop run and its wall time.
pub struct TimedRun {
    pub cfg: ScenarioConfig,
    pub out: SimOutput,
    pub elapsed: Duration,
}

impl TimedRun {
    fn execute(cfg: ScenarioConfig) -> Self {
        let start = Instant::now();
        let out = run(&cfg).unwrap_or_else(|e| panic!("scenario {} failed: {e}", cfg.name));
        TimedRun { cfg, out, elapsed: start.elapsed() }
    }

    pub fn diag(&self, mode: Mode) -> &ModeDiagnostics {
        self.out.diagnostics.iter().find(|d| d.mode == mode).expect("mode was simulated")
    }
}

fn with_q0(which: u8, q0: usize) -> ScenarioConfig {
    let mut cfg = default_example(which).expect("builtin");
    cfg.q0 = q0;
    cfg.name = format!("{}_q{q0}", cfg.name);
    cfg
}

/// Example 2 with zero bias and bias adaptation off, hybrid modes only,
/// logged at every step.
pub fn zero_bias_example() -> ScenarioConfig {
    let mut cfg = default_example(2).expect("builtin");
    cfg.name = "example2_zero_bias".into();
    cfg.bias_profile = BiasProfile::Constant { value: [0.0; 3] };
    cfg.gains.gamma_i = 0.0;
    cfg.bhat0 = [0.0; 3];
    cfg.modes = vec![Mode::HybridIII, Mode::HybridIV];
    cfg.record_stride = 1;
    cfg
}

pub struct Suite {
    pub seed: u64,
    start: Instant,
    ex1: OnceLock<TimedRun>,
    ex2: OnceLock<TimedRun>,
    ex1_q2: OnceLock<TimedRun>,
    ex2_q2: OnceLock<TimedRun>,
    zero_bias: OnceLock<TimedRun>,
}

impl Suite {
    pub fn new(seed: u64) -> Self {
        Suite {
            seed,
            start: Instant::now(),
            ex1: OnceLock::new(),
            ex2: OnceLock::new(),
            ex1_q2: OnceLock::new(),
            ex2_q2: OnceLock::new(),
            zero_bias: OnceLock::new(),
        }
    }

    fn rng(&self, salt: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(salt))
    }

    pub fn example1(&self) -> &TimedRun {
        self.ex1.get_or_init(|| TimedRun::execute(default_example(1).expect("builtin")))
    }

    pub fn example2(&self) -> &TimedRun {
        self.ex2.get_or_init(|| TimedRun::execute(default_example(2).expect("builtin")))
    }

    pub fn example1_q2(&self) -> &TimedRun {
        self.ex1_q2.get_or_init(|| TimedRun::execute(with_q0(1, 2)))
    }

    pub fn example2_q2(&self) -> &TimedRun {
        self.ex2_q2.get_or_init(|| TimedRun::execute(with_q0(2, 2)))
    }

    pub fn zero_bias(&self) -> &TimedRun {
        self.zero_bias.get_or_init(|| TimedRun::execute(zero_bias_example()))
    }

    fn runs(&self) -> [&TimedRun; 5] {
        [self.example1(), self.example2(), self.example1_q2(), self.example2_q2(), self.zero_bias()]
    }

    pub fn elapsed(&self) -> Duration {
        self.start.elapsed()
    }
}

fn report(id: u8, name: &'static str, start: Instant, passed: bool, detail: String) -> CriterionReport {
    CriterionReport { id, name, passed, detail, elapsed: start.elapsed() }
}

pub fn criterion_1(s: &Suite) -> CriterionReport {
    let start = Instant::now();
    let errs = identities::run(&mut s.rng(1), IDENTITY_INSTANCES);
    let (name, worst) = errs.worst();
    let elapsed = start.elapsed();
    let ok = worst <= IDENTITY_TOL && elapsed < IDENTITY_BUDGET && errs.entries.iter().all(|e| e.1.is_finite());
    report(
        1,
        "identities",
        start,
        ok,
        format!(
            "{} identities x {IDENTITY_INSTANCES} instances, worst {name} = {worst:.2e} (tol {IDENTITY_TOL:.0e})",
            errs.entries.len()
        ),
    )
}

/// Uniformly drawn point of the flow set of `cfg`.
fn flow_point<R: Rng>(cfg: &hybrid_attitude::HybridConfig, rng: &mut R) -> (Rotation, usize) {
    loop {
        let x = random_rotation(rng);
        let q = rng.random_range(1..=cfg.len());
        if cfg.in_flow(&x, q).expect("valid index") {
            return (x, q);
        }
    }
}

pub fn criterion_2(s: &Suite) -> CriterionReport {
    let start = Instant::now();
    let mut rng = s.rng(2);
    let mut failures = 0;
    let mut worst_rel: f64 = 0.0;
    for v in Variant::ALL {
        let cfg = study_design(v);
        for _ in 0..GRADIENT_DIRECTIONS {
            let (x, q) = flow_point(&cfg, &mut rng);
            let u = rand_unit(&mut rng);
            let plus = x * Rotation::exp(&(u * GRADIENT_STEP));
            let minus = x * Rotation::exp(&(u * -GRADIENT_STEP));
            let fd = (cfg.phi(&plus, q).unwrap() - cfg.phi(&minus, q).unwrap()) / (2.0 * GRADIENT_STEP);
            let grad = cfg.warp().grad_phi(cfg.kind(), &x, q).unwrap();
            let an = inner(&grad, &(x.matrix() * hat(&u)));
            let err = (fd - an).abs();
            if !(err <= (GRADIENT_REL_TOL * an.abs()).max(GRADIENT_ABS_FLOOR)) {
                failures += 1;
            }
            if an.abs() > GRADIENT_ABS_FLOOR {
                worst_rel = worst_rel.max(err / an.abs());
            }
        }
    }
    report(
        2,
        "gradients",
        start,
        failures == 0,
        format!("{failures} mismatches over 4x{GRADIENT_DIRECTIONS} directions, worst relative error {worst_rel:.2e}"),
    )
}

pub fn criterion_3(s: &Suite) -> CriterionReport {
    let start = Instant::now();
    let mut rng = s.rng(3);
    let mut violations = 0;
    let mut min_det = f64::INFINITY;
    let mut ratio_range = (f64::INFINITY, 0.0f64);
    for v in Variant::ALL {
        let cfg = study_design(v);
        let (lo, hi) = design_gamma_bounds(&cfg);
        for i in 0..WARP_SAMPLES {
            let x =
                if i % 4 == 3 { adversarial_rotation(cfg.weight(), &mut rng, 0.2) } else { random_rotation(&mut rng) };
            let q = rng.random_range(1..=cfg.len());
            let d = x.distance_sq();
            let g = cfg.warp().gamma(&x, q).unwrap().distance_sq();
            if g < lo * d - WARP_ROUNDOFF || g > hi * d + WARP_ROUNDOFF {
                violations += 1;
            }
            if d > 1e-6 {
                ratio_range = (ratio_range.0.min(g / d), ratio_range.1.max(g / d));
            }
            min_det = min_det.min(cfg.warp().theta_matrix(&x, q).unwrap().determinant().abs());
        }
    }
    let (lo, hi) = hybrid_attitude::warping::gamma_bounds(study_gain());
    report(
        3,
        "warping bounds",
        start,
        violations == 0 && min_det > MIN_THETA_DET,
        format!(
            "{violations} violations over 4x{WARP_SAMPLES}, |G|^2/|X|^2 in [{:.4}, {:.4}] within [{lo:.4}, {hi:.4}], min |det Theta| = {min_det:.4}",
            ratio_range.0, ratio_range.1
        ),
    )
}

pub fn criterion_4(s: &Suite) -> CriterionReport {
    let start = Instant::now();
    let mut rng = s.rng(4);
    let mut ok = true;
    let mut parts = Vec::new();
    for v in Variant::ALL {
        let cfg = study_design(v);
        let est = sample_alphas(&cfg, SYNERGY_SAMPLES, s.seed.wrapping_add(40 + v as u64)).unwrap();
        let mut gap_violations = 0;
        let mut min_gap = f64::INFINITY;
        for _ in 0..NEAR_S_PI_SAMPLES {
            let axis =
                if v.is_isotropic() { rand_unit(&mut rng) } else { cfg.weight().eigvecs()[rng.random_range(0..3)] };
            let y = half_turn(&axis) * Rotation::exp(&(rand_unit(&mut rng) * (NEAR_S_PI_SPREAD * rng.random::<f64>())));
            let q = rng.random_range(1..=cfg.len());
            match cfg.preimage(&y, q).and_then(|x| cfg.gap(&x, q)) {
                Ok(gap) => {
                    min_gap = min_gap.min(gap);
                    if !(gap >= cfg.delta()) {
                        gap_violations += 1;
                    }
                }
                Err(_) => gap_violations += 1,
            }
        }
        ok &= est.samples >= SYNERGY_SAMPLES && est.margin > 0.0 && gap_violations == 0;
        parts.push(format!(
            "{v}: m = {:.4}, near-S_pi gap min {min_gap:.4} vs delta {:.4}, {gap_violations} violations",
            est.margin,
            cfg.delta()
        ));
    }
    report(4, "synergy", start, ok, parts.join("; "))
}

struct OracleStats {
    phi: f64,
    beta: f64,
    printed_denominator: f64,
}

fn oracle_errors(variant: Variant, rng: &mut ChaCha8Rng) -> OracleStats {
    let cfg = study_design(variant);
    let warp = cfg.warp();
    let kind = cfg.kind();
    let (vecs, rho) = example2_vectors();
    let k = warp.k();
    let mut st = OracleStats { phi: 0.0, beta: 0.0, printed_denominator: 0.0 };
    for _ in 0..ORACLE_SAMPLES {
        let r = random_rotation(rng);
        let rhat = random_rotation(rng);
        let q = rng.random_range(1..=cfg.len());
        let m = MeasurementSet::from_truth(&r, rand_vec(rng), &vecs, &rho);
        let rt = r * rhat.transpose();
        let e = explicit_terms(warp, &rhat, q, &m).unwrap();
        let phi_u = warp.phi_u(&rt, q).unwrap();
        let (phi_e, beta_e, phi_c) = match kind {
            PotentialKind::U => (e.phi_bar, e.beta_bar, phi_u),
            PotentialKind::V => {
                let s = (1.0 - e.phi_bar).sqrt();
                (2.0 * (1.0 - s), e.beta_bar / s, warp.phi(kind, &rt, q).unwrap())
            }
        };
        let beta_c = rhat.matrix().transpose() * warp.grad_phi_body(kind, &rt, q).unwrap();
        st.phi = st.phi.max((phi_e - phi_c).abs());
        st.beta = st.beta.max((beta_e - beta_c).amax());

        // Same transport term with `√(1 - ϑ²)` in place of `√(1 - k²ϑ²)`.
        let c = (1.0 - k * k * e.vartheta * e.vartheta).sqrt() / (1.0 - e.vartheta * e.vartheta).sqrt();
        let theta_alt = Mat3::identity() + (e.theta_bar - Mat3::identity()) * c;
        let inv = e.theta_bar.try_inverse().expect("transport term is invertible");
        let rs = inv * rhat.matrix() * e.beta_bar;
        let beta_alt = rhat.matrix().transpose() * theta_alt * rs;
        let beta_alt_c = rhat.matrix().transpose() * warp.grad_phi_body(PotentialKind::U, &rt, q).unwrap();
        st.printed_denominator = st.printed_denominator.max((beta_alt - beta_alt_c).amax());
    }
    st
}

pub fn criterion_5(s: &Suite) -> CriterionReport {
    let start = Instant::now();
    let mut rng = s.rng(5);
    let d3 = oracle_errors(Variant::D3, &mut rng);
    let d4 = oracle_errors(Variant::D4, &mut rng);

    let (vecs, rho) = example2_vectors();
    let w = example2_weight();
    let gains = default_example(2).unwrap().gains;
    let smooth = Observer::new(Mode::SmoothII, &w, study_gain(), 0.8, gains).unwrap();
    let cfg = study_design(Variant::D3);
    let flat = WarpParams::with_gain_unchecked_lower(w, 0.0, cfg.warp().axes().to_vec()).unwrap();
    let mut unwarped: f64 = 0.0;
    for _ in 0..ORACLE_SAMPLES {
        let r = random_rotation(&mut rng);
        let rhat = random_rotation(&mut rng);
        let q = rng.random_range(1..=flat.len());
        let m = MeasurementSet::from_truth(&r, Vec3::zeros(), &vecs, &rho);
        let e = explicit_terms(&flat, &rhat, q, &m).unwrap();
        let inn = smooth.innovation(&rhat, 1, &m, None).unwrap();
        unwarped = unwarped.max((e.phi_bar - inn.phi).abs()).max((e.beta_bar - inn.beta).amax());
    }
    let worst = d3.phi.max(d3.beta).max(d4.phi).max(d4.beta);
    report(
        5,
        "explicit oracle",
        start,
        worst <= ORACLE_TOL && unwarped <= UNWARPED_TOL,
        format!(
            "explicit vs composite: III phi {:.1e} beta {:.1e}, IV phi {:.1e} beta {:.1e}; k=0 vs smoothII {unwarped:.1e}; \
             with sqrt(1-vartheta^2) the innovation would be off by {:.2e}",
            d3.phi, d3.beta, d4.phi, d4.beta, d3.printed_denominator.max(d4.printed_denominator)
        ),
    )
}

fn executor_issues(run: &TimedRun) -> (Vec<String>, u64) {
    let mut issues = Vec::new();
    let mut jumps = 0;
    for d in &run.out.diagnostics {
        let m = d.mode;
        if !(d.max_l0_flow_rate <= L0_FLOW_RATE_TOL) {
            issues.push(format!("{}/{m}: L0 flow rate {:.2e}", run.cfg.name, d.max_l0_flow_rate));
        }
        if let (Some(drop), Some(delta)) = (d.min_jump_drop, d.delta) {
            if !(drop >= delta - JUMP_DROP_SLACK) {
                issues.push(format!("{}/{m}: jump drop {drop:.4} < delta {delta:.4}", run.cfg.name));
            }
        }
        if let Some(bound) = d.jump_bound {
            if d.jumps > bound {
                issues.push(format!("{}/{m}: {} jumps > bound {bound}", run.cfg.name, d.jumps));
            }
        }
        if d.jumps_after_converged > 0 {
            issues.push(format!("{}/{m}: {} jumps after convergence", run.cfg.name, d.jumps_after_converged));
        }
        jumps += d.jumps;
    }
    (issues, jumps)
}

pub fn criterion_6(s: &Suite) -> CriterionReport {
    let start = Instant::now();
    let runs = [s.example1(), s.example2(), s.example1_q2(), s.example2_q2()];
    let mut issues = Vec::new();
    let mut jumps = 0;
    let mut rate: f64 = f64::NEG_INFINITY;
    for r in runs {
        let (i, j) = executor_issues(r);
        issues.extend(i);
        jumps += j;
        rate = r.out.diagnostics.iter().map(|d| d.max_l0_flow_rate).fold(rate, f64::max);
    }
    let detail = if issues.is_empty() {
        format!("4 runs, {jumps} jumps all within bounds, max L0 flow increase {rate:.2e}*dt")
    } else {
        issues.join("; ")
    };
    report(6, "hybrid executor", start, issues.is_empty(), detail)
}

fn settling(run: &TimedRun, mode: Mode) -> Option<f64> {
    run.diag(mode).settling_time
}

fn frozen_check(run: &TimedRun, frozen: &[(Mode, f64)]) -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for &(mode, f) in frozen {
        let t = settling(run, mode);
        let within = t.is_some_and(|t| (t - f).abs() <= FROZEN_REL_TOL * f);
        ok &= within;
        parts.push(match t {
            Some(t) => format!("{mode} {t:.3} s"),
            None => format!("{mode} never settles"),
        });
    }
    (ok, parts.join(", "))
}

fn ordered(a: Option<f64>, b: Option<f64>, strict: bool) -> bool {
    match (a, b) {
        (Some(a), Some(b)) => {
            if strict {
                a < b
            } else {
                a <= b
            }
        }
        _ => false,
    }
}

pub fn criterion_7(s: &Suite) -> CriterionReport {
    let start = Instant::now();
    let run = s.example1();
    let (i, ii, sm) = (settling(run, Mode::HybridI), settling(run, Mode::HybridII), settling(run, Mode::SmoothI));
    let order = ordered(ii, i, false) && ordered(i, sm, true) && ordered(ii, sm, true);
    let (frozen_ok, detail) = frozen_check(run, &FROZEN_SETTLING_EX1);
    let fast = run.elapsed < EXAMPLE_BUDGET;
    report(
        7,
        "example 1",
        start,
        order && frozen_ok && fast,
        format!(
            "settling {detail}; order II <= I < smoothI {order}; frozen +-10% {frozen_ok}; run {:.2} s",
            run.elapsed.as_secs_f64()
        ),
    )
}

pub fn criterion_8(s: &Suite) -> CriterionReport {
    let start = Instant::now();
    let run = s.example2();
    let (iii, iv, sm) = (settling(run, Mode::HybridIII), settling(run, Mode::HybridIV), settling(run, Mode::SmoothII));
    let order = ordered(iv, iii, false) && ordered(iii, sm, true);
    let (frozen_ok, detail) = frozen_check(run, &FROZEN_SETTLING_EX2);
    let worst_bias = run.out.diagnostics.iter().map(|d| d.final_bias_err).fold(0.0, f64::max);
    let bias_ok = worst_bias < FINAL_BIAS_TOL;
    let fast = run.elapsed < EXAMPLE_BUDGET;
    report(
        8,
        "example 2",
        start,
        order && frozen_ok && bias_ok && fast,
        format!(
            "settling {detail}; order IV <= III < smoothII {order}; frozen +-10% {frozen_ok}; final bias error {worst_bias:.2e}; run {:.2} s",
            run.elapsed.as_secs_f64()
        ),
    )
}

/// Largest ratio of a sampled trajectory to its exponential envelope.
pub struct EnvelopeCheck {
    pub alphas: AlphaEstimates,
    pub alpha1: f64,
    pub rate: f64,
    pub phi_violations: usize,
    pub dist_violations: usize,
    pub worst_phi_ratio: f64,
    pub worst_dist_ratio: f64,
}

pub fn envelope_check(run: &TimedRun, mode: Mode, seed: u64) -> EnvelopeCheck {
    let variant = mode.variant().expect("hybrid mode");
    let cfg = study_design(variant);
    let alphas = sample_alphas(&cfg, ENVELOPE_ALPHA_SAMPLES, seed).expect("flow-set sampling");
    // Closed-form lower constant: Φ ≥ U_A(Γ) ≥ ξ|Γ|² ≥ ξ γ_low |X|².
    let alpha1 = cfg.weight().xi() * design_gamma_bounds(&cfg).0;
    let gamma_p = run.cfg.gains.gamma_p;
    let rate = gamma_p * alphas.alpha3 / alphas.alpha2;
    let c = alphas.alpha2 / alpha1;
    let rows: Vec<_> = run.out.records.iter().filter(|r| r.mode == mode).collect();
    let phi0 = run.diag(mode).l0_initial;
    let dist0 = rows[0].attitude_err;
    let mut chk = EnvelopeCheck {
        alphas,
        alpha1,
        rate,
        phi_violations: 0,
        dist_violations: 0,
        worst_phi_ratio: 0.0,
        worst_dist_ratio: 0.0,
    };
    for r in rows {
        let decay = (-rate * r.t).exp();
        let phi_env = c * decay * phi0;
        let dist_env = c * decay * dist0;
        if !(r.phi <= phi_env) {
            chk.phi_violations += 1;
        }
        if !(r.attitude_err <= dist_env) {
            chk.dist_violations += 1;
        }
        chk.worst_phi_ratio = chk.worst_phi_ratio.max(r.phi / phi_env);
        chk.worst_dist_ratio = chk.worst_dist_ratio.max(r.attitude_err / dist_env);
    }
    chk
}

pub fn criterion_9(s: &Suite) -> CriterionReport {
    let start = Instant::now();
    let run = s.zero_bias();
    let mut ok = true;
    let mut parts = Vec::new();
    for (i, mode) in [Mode::HybridIII, Mode::HybridIV].into_iter().enumerate() {
        let chk = envelope_check(run, mode, s.seed.wrapping_add(90 + i as u64));
        ok &= chk.phi_violations == 0 && chk.dist_violations == 0;
        parts.push(format!(
            "{mode}: a1 {:.4} a2 {:.4} a3 {:.4}, rate {:.4}/s, violations phi {} |X|^2 {}, worst ratio {:.3}/{:.3}",
            chk.alpha1,
            chk.alphas.alpha2,
            chk.alphas.alpha3,
            chk.rate,
            chk.phi_violations,
            chk.dist_violations,
            chk.worst_phi_ratio,
            chk.worst_dist_ratio
        ));
    }
    report(9, "decay envelope", start, ok, parts.join("; "))
}

/// Counts of samples breaking the three projection properties.
pub fn projection_property_failures<R: Rng>(rng: &mut R, n: usize, bbar: f64) -> [usize; 3] {
    let mut fails = [0; 3];
    for _ in 0..n {
        let mu = rand_vec(rng);
        let bhat = rand_vec(rng) * (1.5 * bbar);
        let mut b = rand_vec(rng) * bbar;
        if b.norm() > bbar {
            b *= bbar / b.norm();
        }
        let p = proj(&mu, &bhat, bbar);
        // P1: never pushes outward on or beyond the boundary. The radial
        // component is removed exactly, so only rounding of a zero remains.
        if bhat.norm() >= bbar && bhat.dot(&p) > PROJECTION_ROUNDOFF * bhat.norm() * mu.norm() {
            fails[0] += 1;
        }
        // P2: (b̂ - b)ᵀ Proj ≤ (b̂ - b)ᵀ μ.
        if (bhat - b).dot(&(mu - p)) < 0.0 {
            fails[1] += 1;
        }
        // P3: ‖Proj‖ ≤ ‖μ‖.
        if p.norm() > mu.norm() {
            fails[2] += 1;
        }
    }
    fails
}

pub fn criterion_10(s: &Suite) -> CriterionReport {
    let start = Instant::now();
    let bbar = default_example(1).unwrap().gains.bias_bound.expect("example bias bound");
    let max_norm = s.runs().iter().flat_map(|r| r.out.diagnostics.iter().map(|d| d.max_bhat_norm)).fold(0.0, f64::max);
    let fails = projection_property_failures(&mut s.rng(10), PROJECTION_SAMPLES, bbar);
    report(
        10,
        "projection",
        start,
        max_norm <= bbar + BIAS_BALL_SLACK && fails == [0; 3],
        format!("max |bhat| = {max_norm:.17} (bound {bbar}); P1/P2/P3 failures {fails:?} over {PROJECTION_SAMPLES}"),
    )
}

pub fn criterion_11(s: &Suite) -> CriterionReport {
    let start = Instant::now();
    let drift = s
        .runs()
        .iter()
        .flat_map(|r| r.out.diagnostics.iter().map(|d| d.max_drift).chain([r.out.truth_drift]))
        .fold(0.0, f64::max);
    let total = s.elapsed();
    report(
        11,
        "numerical hygiene",
        start,
        drift <= DRIFT_TOL && total < SUITE_BUDGET,
        format!("max orthonormality drift {drift:.2e}; suite wall time {:.1} s", total.as_secs_f64()),
    )
}

pub type Criterion = fn(&Suite) -> CriterionReport;

pub const CRITERIA: [Criterion; 11] = [
    criterion_1,
    criterion_2,
    criterion_3,
    criterion_4,
    criterion_5,
    criterion_6,
    criterion_7,
    criterion_8,
    criterion_9,
    criterion_10,
    criterion_11,
];

/// Runs every criterion in order, calling `each` as reports come in.
pub fn run_all_with(seed: u64, mut each: impl FnMut(&CriterionReport)) -> Vec<CriterionReport> {
    let suite = Suite::new(seed);
    CRITERIA
        .iter()
        .map(|c| {
            let r = c(&suite);
            each(&r);
            r
        })
        .collect()
}

pub fn run_all(seed: u64) -> Vec<CriterionReport> {
    run_all_with(seed, |_| {})
}

pub const DEFAULT_SEED: u64 = 20_240_601;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_samples_pass() {
        assert_eq!(projection_property_failures(&mut ChaCha8Rng::seed_from_u64(3), 2000, 0.1), [0; 3]);
    }

    #[test]
    fn zero_bias_variant() {
        let cfg = zero_bias_example();
        cfg.validate().unwrap();
        assert_eq!(cfg.gains.gamma_i, 0.0);
        assert_eq!(cfg.bias_profile.eval(3.0), Vec3::zeros());
        assert_eq!(cfg.record_stride, 1);
    }

    #[test]
    fn report_line_format() {
        let r = CriterionReport {
            id: 3,
            name: "x",
            passed: false,
            detail: "d".into(),
            elapsed: Duration::from_millis(1500),
        };
        assert_eq!(r.to_string(), "criterion  3 FAIL x: d (1.50 s)");
    }

    #[test]
    fn ordering_needs_both_times() {
        assert!(ordered(Some(1.0), Some(1.0), false));
        assert!(!ordered(Some(1.0), Some(1.0), true));
        assert!(!ordered(None, Some(1.0), false));
    }
}
