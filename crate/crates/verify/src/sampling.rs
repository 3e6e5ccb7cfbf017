use hybrid_attitude::hybrid_design::{make_config, HybridConfig, Variant};
use hybrid_attitude::{default_example, Mat3, UnitQuaternion, Vec3, WeightMatrix};
use rand::Rng;

/// Warp gain used throughout the numerical studies.
pub fn study_gain() -> f64 {
    0.95 / 5f64.sqrt()
}

pub fn rand_vec<R: Rng>(rng: &mut R) -> Vec3 {
    Vec3::from_fn(|_, _| rng.random::<f64>() * 2.0 - 1.0)
}

pub fn rand_unit<R: Rng>(rng: &mut R) -> Vec3 {
    loop {
        let v = rand_vec(rng);
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

pub fn rand_mat<R: Rng>(rng: &mut R) -> Mat3 {
    Mat3::from_fn(|_, _| rng.random::<f64>() * 2.0 - 1.0)
}

pub fn random_quaternion<R: Rng>(rng: &mut R) -> UnitQuaternion {
    loop {
        let v: [f64; 4] = std::array::from_fn(|_| rng.random::<f64>() * 2.0 - 1.0);
        let n2: f64 = v.iter().map(|c| c * c).sum();
        if n2 > 1e-6 && n2 <= 1.0 {
            let n = n2.sqrt();
            return UnitQuaternion::normalized(v[0] / n, Vec3::new(v[1], v[2], v[3]) / n).expect("nonzero");
        }
    }
}

/// `A = Σ ρᵢ vᵢ vᵢᵀ` with 3 to 5 random unit-scale vectors.
pub fn random_psd_weight<R: Rng>(rng: &mut R) -> (Mat3, Vec<Vec3>, Vec<f64>) {
    let n = rng.random_range(3..=5);
    let vecs: Vec<Vec3> = (0..n).map(|_| rand_vec(rng)).collect();
    let rho: Vec<f64> = (0..n).map(|_| 0.2 + 1.8 * rng.random::<f64>()).collect();
    let a = vecs.iter().zip(&rho).fold(Mat3::zeros(), |acc, (v, r)| acc + v * v.transpose() * *r);
    (a, vecs, rho)
}

/// `Σ ρᵢ aᵢ aᵢᵀ` for the second study's vectors.
pub fn example2_weight() -> WeightMatrix {
    let cfg = default_example(2).expect("builtin");
    let vecs: Vec<Vec3> = cfg.inertial_vecs.iter().map(|v| Vec3::from(*v)).collect();
    WeightMatrix::from_vectors(&vecs, &cfg.rho).expect("builtin vectors span")
}

pub fn example2_vectors() -> (Vec<Vec3>, Vec<f64>) {
    let cfg = default_example(2).expect("builtin");
    (cfg.inertial_vecs.iter().map(|v| Vec3::from(*v)).collect(), cfg.rho)
}

/// The design as used in the studies: `A = I` for D1/D2, the second
/// study's weight for D3/D4, `δ = 0.8 Δ`.
pub fn study_design(v: Variant) -> HybridConfig {
    let w = if v.is_isotropic() { WeightMatrix::identity() } else { example2_weight() };
    make_config(v, w, study_gain(), 0.8).expect("study designs are admissible")
}
