//! `design-report`: design constants for a vector set.

use std::path::Path;

use hybrid_attitude::hybrid_design::{
    choose_axis_d3, d3_squared_projections, delta_bound, lambda_ratio, sample_alphas, AlphaEstimates,
};
use hybrid_attitude::warping::{gamma_bounds, k_bar};
use hybrid_attitude::{make_config, Variant, Vec3, WeightMatrix};
use serde::{Deserialize, Serialize};

use crate::Failure;

#[derive(Debug, Deserialize)]
struct VectorFile {
    vectors: Vec<[f64; 3]>,
    rho: Vec<f64>,
}

pub fn load_vectors(path: &Path) -> Result<(Vec<Vec3>, Vec<f64>), Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::validation("io", format!("cannot read {}: {e}", path.display())))?;
    let f: VectorFile = serde_json::from_str(&text)
        .map_err(|e| Failure::validation("vectors_parse", format!("{}: {e}", path.display())))?;
    Ok((f.vectors.into_iter().map(Vec3::from).collect(), f.rho))
}

#[derive(Debug, Serialize)]
pub struct DesignEntry {
    pub variant: Variant,
    /// `"identity"` for D1/D2, `"vectors"` for D3/D4.
    pub weight: &'static str,
    pub delta_bound: Option<f64>,
    pub delta: Option<f64>,
    pub alphas: Option<AlphaEstimates>,
    pub error: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct DesignReport {
    pub eigenvalues: [f64; 3],
    pub xi: f64,
    pub k: f64,
    pub k_bar: f64,
    pub gamma_low: f64,
    pub gamma_high: f64,
    pub lambda: Option<f64>,
    pub axis_u: Option<[f64; 3]>,
    pub axis_squared_projections: Option<[f64; 3]>,
    pub designs: Vec<DesignEntry>,
}

fn entry(variant: Variant, w: WeightMatrix, k: f64, frac: f64, samples: usize, seed: u64) -> DesignEntry {
    let weight = if variant.is_isotropic() { "identity" } else { "vectors" };
    let bound = delta_bound(variant, &w, k);
    match make_config(variant, w, k, frac).and_then(|cfg| Ok((sample_alphas(&cfg, samples, seed)?, cfg))) {
        Ok((alphas, cfg)) => DesignEntry {
            variant,
            weight,
            delta_bound: Some(cfg.delta_bound()),
            delta: Some(cfg.delta()),
            alphas: Some(alphas),
            error: None,
        },
        Err(e) => DesignEntry {
            variant,
            weight,
            delta_bound: bound.ok(),
            delta: None,
            alphas: None,
            error: Some(e.to_string()),
        },
    }
}

pub fn design_report(
    vecs: &[Vec3],
    rho: &[f64],
    k: f64,
    frac: f64,
    samples: usize,
    seed: u64,
) -> Result<DesignReport, Failure> {
    let w = WeightMatrix::from_vectors(vecs, rho)?;
    let l = w.eigvals();
    let (gamma_low, gamma_high) = gamma_bounds(k);
    let axis = choose_axis_d3(&w).ok();
    let designs = Variant::ALL
        .iter()
        .map(|&v| {
            let weight = if v.is_isotropic() { WeightMatrix::identity() } else { w.clone() };
            entry(v, weight, k, frac, samples, seed)
        })
        .collect();
    Ok(DesignReport {
        eigenvalues: l,
        xi: w.xi(),
        k,
        k_bar: k_bar(w.xi())?,
        gamma_low,
        gamma_high,
        lambda: axis.map(|_| lambda_ratio(l)),
        axis_u: axis.map(|u| [u.x, u.y, u.z]),
        axis_squared_projections: axis.map(|_| d3_squared_projections(l)),
        designs,
    })
}
