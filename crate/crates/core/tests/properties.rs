use hybrid_attitude::hybrid_design::{argmin_index, flow_from_values, jump_from_values, make_config};
use hybrid_attitude::observer::proj;
use hybrid_attitude::so3::{e_matrix, inner, trace_error};
use hybrid_attitude::warping::{gamma_bounds, k_bar};
use hybrid_attitude::{
    hat, psi, vee, Gains, Mat3, MeasurementSet, Mode, Observer, ObserverState, Rotation, UnitQuaternion, Variant, Vec3,
    WeightMatrix,
};
use proptest::prelude::*;

const TOL: f64 = 1e-12;

fn vec3() -> impl Strategy<Value = Vec3> {
    prop::array::uniform3(-1.0f64..1.0).prop_map(Vec3::from)
}

fn mat3() -> impl Strategy<Value = Mat3> {
    prop::array::uniform9(-1.0f64..1.0).prop_map(|a| Mat3::from_row_slice(&a))
}

fn quaternion() -> impl Strategy<Value = UnitQuaternion> {
    prop::array::uniform4(-1.0f64..1.0)
        .prop_filter("away from the origin", |v| v.iter().map(|c| c * c).sum::<f64>() > 1e-4)
        .prop_map(|v| UnitQuaternion::normalized(v[0], Vec3::new(v[1], v[2], v[3])).unwrap())
}

fn rotation() -> impl Strategy<Value = Rotation> {
    quaternion().prop_map(|q| q.to_rotation())
}

/// `Σ ρᵢ vᵢ vᵢᵀ` over three to five vectors, kept well conditioned.
fn weight() -> impl Strategy<Value = (WeightMatrix, Vec<Vec3>, Vec<f64>)> {
    prop::collection::vec((vec3(), 0.2f64..2.0), 3..=5).prop_filter_map("spanning set", |pairs| {
        let (v, r): (Vec<Vec3>, Vec<f64>) = pairs.into_iter().unzip();
        let w = WeightMatrix::from_vectors(&v, &r).ok()?;
        (w.xi() > 1e-3).then_some((w, v, r))
    })
}

fn distinct_weight() -> impl Strategy<Value = WeightMatrix> {
    weight().prop_map(|w| w.0).prop_filter("separated eigenvalues", |w| {
        let l = w.eigvals();
        l[1] - l[0] > 1e-3 && l[2] - l[1] > 1e-3
    })
}

fn study_gain() -> f64 {
    0.95 / 5f64.sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn hat_algebra(u in vec3(), v in vec3()) {
        prop_assert!((hat(&u) * v + hat(&v) * u).amax() < TOL);
        let sq = hat(&u) * hat(&u) - (u * u.transpose() - Mat3::identity() * u.norm_squared());
        prop_assert!(sq.amax() < TOL);
        prop_assert!((hat(&u.cross(&v)) - (v * u.transpose() - u * v.transpose())).amax() < TOL);
        prop_assert!((vee(&hat(&u)) - u).amax() == 0.0);
    }

    #[test]
    fn trace_identities(a in mat3(), u in vec3(), v in vec3()) {
        prop_assert!(((a * hat(&u)).trace() + 2.0 * psi(&a).dot(&u)).abs() < TOL);
        prop_assert!((inner(&hat(&v), &hat(&u)) - 2.0 * u.dot(&v)).abs() < TOL);
        let lhs = a * hat(&u) + hat(&u) * a.transpose() + hat(&(a.transpose() * u));
        prop_assert!((lhs - hat(&u) * a.trace()).amax() < TOL);
    }

    #[test]
    fn psi_derivative_forms(a in mat3(), x in rotation(), u in vec3()) {
        let a = (a + a.transpose()) * 0.5;
        let xm = x.matrix();
        prop_assert!((-(a * xm * hat(&u)).trace() - 2.0 * psi(&(a * xm)).dot(&u)).abs() < TOL);
        let dpsi = vee(&(a * xm * hat(&u) + hat(&u) * xm.transpose() * a)) * 0.5;
        prop_assert!((dpsi - e_matrix(&a, &x) * u).amax() < TOL);
    }

    #[test]
    fn distance_forms(q in quaternion()) {
        let x = q.to_rotation();
        let d = x.distance_sq();
        prop_assert!((d - q.eps.norm_squared()).abs() < TOL);
        prop_assert!((psi(x.matrix()).norm_squared() - 4.0 * d * (1.0 - d)).abs() < TOL);
        prop_assert!((0.0..=1.0 + TOL).contains(&d));
    }

    #[test]
    fn exponential_stays_on_so3(x in rotation(), w in vec3(), s in 0.0f64..10.0) {
        let y = x * Rotation::exp(&(w * s));
        prop_assert!(y.orthonormality_residual() < 1e-13);
        prop_assert!((y.matrix().determinant() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn quaternion_round_trip(q in quaternion()) {
        let back = UnitQuaternion::from_rotation(&q.to_rotation());
        let same = (back.eta - q.eta).abs() + (back.eps - q.eps).amax();
        let flipped = (back.eta + q.eta).abs() + (back.eps + q.eps).amax();
        prop_assert!(same.min(flipped) < 1e-12);
    }

    #[test]
    fn potential_range_and_gradient_norm((w, _, _) in weight(), x in rotation()) {
        let u = w.u_potential(&x);
        prop_assert!((-TOL..=1.0 + TOL).contains(&u));
        prop_assert!((u - trace_error(w.a(), &x) / (4.0 * w.lam_max_bar())).abs() < TOL);
        let g = w.grad_u_potential(&x).norm_squared();
        let lam = w.lam_max_bar();
        prop_assert!((g - psi(&(w.a() * x.matrix())).norm_squared() / (8.0 * lam * lam)).abs() < TOL);
    }

    #[test]
    fn gain_limit_admits_study_gain((w, _, _) in weight()) {
        let kb = k_bar(w.xi()).unwrap();
        prop_assert!(kb >= 1.0 / 5f64.sqrt() - 1e-15);
        prop_assert!(study_gain() < kb);
    }

    #[test]
    fn warp_distortion_and_gradient_shape(w in distinct_weight(), x in rotation(), q in 1usize..=2, v_kind in any::<bool>()) {
        let variant = if v_kind { Variant::D4 } else { Variant::D3 };
        let cfg = make_config(variant, w, study_gain(), 0.8).unwrap();
        let (lo, hi) = gamma_bounds(cfg.k());
        let d = x.distance_sq();
        let g = cfg.warp().gamma(&x, q).unwrap().distance_sq();
        prop_assert!(g >= lo * d - TOL && g <= hi * d + TOL);
        if cfg.in_flow(&x, q).unwrap() {
            let grad = cfg.warp().grad_phi(cfg.kind(), &x, q).unwrap();
            let body = x.matrix().transpose() * grad;
            // The gradient lies in X·so(3), so ‖vee(Xᵀ∇Φ)‖² = ½‖∇Φ‖²_F.
            prop_assert!((body + body.transpose()).amax() < 1e-10 * (1.0 + grad.amax()));
            prop_assert!((vee(&body).norm_squared() - 0.5 * grad.norm_squared()).abs() < 1e-10 * (1.0 + grad.norm_squared()));
        }
    }

    #[test]
    fn jumps_land_in_flow_minus_jump(x in rotation(), q in 1usize..=6, variant in 0usize..4) {
        let v = Variant::ALL[variant];
        let w = if v.is_isotropic() {
            WeightMatrix::identity()
        } else {
            WeightMatrix::new(Mat3::from_diagonal(&Vec3::new(1.0, 2.0, 4.0))).unwrap()
        };
        let cfg = make_config(v, w, study_gain(), 0.8).unwrap();
        let q = (q - 1) % cfg.len() + 1;
        prop_assert!(cfg.in_flow(&x, q).unwrap() || cfg.in_jump(&x, q).unwrap());
        if cfg.in_jump(&x, q).unwrap() {
            let p = cfg.jump_map(&x, q).unwrap();
            prop_assert!(cfg.in_flow(&x, p).unwrap());
            prop_assert!(!cfg.in_jump(&x, p).unwrap());
            prop_assert!(cfg.phi(&x, q).unwrap() - cfg.phi(&x, p).unwrap() >= cfg.delta());
        }
    }

    #[test]
    fn switching_rule_covers_everything(values in prop::collection::vec(0.0f64..2.0, 1..7), q in 0usize..6, delta in 0.0f64..0.5) {
        let q = q % values.len() + 1;
        prop_assert!(flow_from_values(&values, q, delta) || jump_from_values(&values, q, delta));
        let p = argmin_index(&values);
        prop_assert!(values.iter().all(|v| values[p - 1] <= *v));
        prop_assert!(values[..p - 1].iter().all(|v| values[p - 1] < *v));
    }

    #[test]
    fn projection_properties(mu in vec3(), bhat in vec3(), b in vec3()) {
        let bbar = 0.5;
        let b = if b.norm() > bbar { b * (bbar / b.norm()) } else { b };
        let p = proj(&mu, &bhat, bbar);
        prop_assert!(p.norm() <= mu.norm());
        prop_assert!((bhat - b).dot(&(mu - p)) >= 0.0);
        if bhat.norm() >= bbar {
            prop_assert!(bhat.dot(&p) <= 8.0 * f64::EPSILON * bhat.norm() * mu.norm());
        }
    }

    #[test]
    fn observer_rates_are_tangent(r in rotation(), rhat in rotation(), omega in vec3(), bhat in vec3(), mode in 0usize..6) {
        let a = [Vec3::new(1.0, -1.0, 1.0) / 3f64.sqrt(), Vec3::z(), Vec3::new(-1.0, -1.0, 0.0) / 3f64.sqrt()];
        let rho = [1.0, 3.0, 1.0];
        let m = MeasurementSet::from_truth(&r, omega, &a, &rho);
        let w = m.weight().unwrap();
        let mode = Mode::ALL[mode];
        let obs = Observer::new(mode, &w, study_gain(), 0.8, Gains { gamma_p: 5.0, gamma_i: 10.0, bias_bound: Some(0.1) }).unwrap();
        let attitude = mode.needs_attitude().then_some(&r);
        let values = obs.potential_values(&rhat, &m, attitude).unwrap();
        let q = argmin_index(&values);
        let state = ObserverState::new(rhat, bhat * 0.1, q);
        let (rdot, _) = obs.derivatives(&state, &m, attitude).unwrap();
        let body = rhat.matrix().transpose() * rdot;
        prop_assert!((body + body.transpose()).amax() < 1e-12 * (1.0 + body.amax()));
    }

    #[test]
    fn truth_measurements_are_consistent(r in rotation(), v in vec3()) {
        let m = MeasurementSet::from_truth(&r, Vec3::zeros(), &[v], &[1.0]);
        prop_assert_eq!(m.body_vecs[0], r.matrix().transpose() * v);
    }
}
