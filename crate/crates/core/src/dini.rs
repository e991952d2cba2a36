//! Sampled modulus of continuity `ω(F, ρ) = sup_{|x−y|<ρ} |F(x) − F(y)|`,
//! the Dini integral `∫ ω(ρ)/ρ dρ` and the `C_D` norm.
//!
//! Every number here is a lower bound from finitely many samples. Radii are
//! processed from large to small; half of the pairs at each radius are local
//! perturbations of the best pairs found so far, which lets the search settle
//! on the points where `F` is least regular.

use std::fmt;

use rand::Rng;

use crate::error::{BgkError, Result};
use crate::geometry::StarDomain;
use crate::point::Point;
use crate::potential::ScalarField;
use crate::sampling::{random_direction, seeded_rng, Halton};

#[derive(Clone, Debug, serde::Serialize)]
pub struct ModulusEstimate {
    /// Increasing radii.
    pub rhos: Vec<f64>,
    /// Nondecreasing estimates of `ω(F, ρ)`.
    pub omegas: Vec<f64>,
    pub n_pairs: usize,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct DiniConfig {
    /// `ρ_min = rho_min_factor·diam Ω`.
    pub rho_min_factor: f64,
    pub per_decade: usize,
    pub n_pairs: usize,
    /// Points used for `max |F|`.
    pub max_samples: usize,
    pub seed: u64,
}

impl Default for DiniConfig {
    fn default() -> Self {
        Self { rho_min_factor: 1e-4, per_decade: 40, n_pairs: 10_000, max_samples: 10_000, seed: 0 }
    }
}

/// Log-spaced radii from `rho_min_factor·diam` to `diam`.
pub fn default_rhos(diam: f64, cfg: &DiniConfig) -> Vec<f64> {
    let lo = (cfg.rho_min_factor * diam).ln();
    let hi = diam.ln();
    let decades = (hi - lo) / std::f64::consts::LN_10;
    let m = ((decades * cfg.per_decade as f64).round() as usize).max(1);
    (0..=m).map(|k| (lo + (hi - lo) * k as f64 / m as f64).exp()).collect()
}

const ELITES: usize = 8;

/// Estimates `ω(F, ρ)` at each radius from `n_pairs` pairs with both points in `d`.
pub fn modulus(f: &ScalarField, d: &StarDomain, rhos: &[f64], n_pairs: usize, seed: u64) -> Result<ModulusEstimate> {
    if n_pairs == 0 {
        return Err(BgkError::InvalidArgument("n_pairs must be at least 1".into()));
    }
    if rhos.is_empty() || rhos.iter().any(|r| !(*r > 0.0)) || rhos.windows(2).any(|w| w[1] <= w[0]) {
        return Err(BgkError::InvalidArgument("radii must be positive and increasing".into()));
    }
    let n = d.dim();
    let (lo, hi) = d.bounding_box();
    let mut rng = seeded_rng(seed);
    let mut halton = Halton::new(n, 0);
    // (value, x, unit direction of y − x)
    let mut elites: Vec<(f64, Point, Point)> = Vec::new();
    let mut omegas = vec![0.0; rhos.len()];

    for (slot, &rho) in rhos.iter().enumerate().rev() {
        let mut best = 0.0f64;
        let mut found: Vec<(f64, Point, Point)> = Vec::new();
        for s in 0..n_pairs {
            // The pool follows the best pairs at this radius once a quarter is drawn.
            if s > 0 && s % (n_pairs / 4).max(1) == 0 && !found.is_empty() {
                elites = found.clone();
            }
            let (x, dir, r) = if s % 2 == 1 && !elites.is_empty() {
                let (_, ex, ed) = &elites[rng.gen_range(0..elites.len())];
                // Log-uniform step so singular points are located below the scale ρ.
                let jitter = 10f64.powf(-6.0 * rng.gen::<f64>());
                let x = *ex + random_direction(&mut rng, n) * (rho * jitter);
                let dir = (*ed + random_direction(&mut rng, n) * 0.3).normalized().unwrap_or(*ed);
                (x, dir, rho * (1.0 - 0.05 * rng.gen::<f64>()))
            } else {
                let x = halton.next_in_box(&lo, &hi);
                let u: f64 = rng.gen();
                (x, random_direction(&mut rng, n), rho * u.powf(1.0 / n as f64))
            };
            if r >= rho || !d.inside(&x) {
                continue;
            }
            let y = x + dir * r;
            if !d.inside(&y) {
                continue;
            }
            let fx = f.eval(&x);
            let fy = f.eval(&y);
            if !(fx.is_finite() && fy.is_finite()) {
                let (v, p) = if fx.is_finite() { (fy, y) } else { (fx, x) };
                return Err(BgkError::NonFiniteField { value: v, point: p.as_slice().to_vec() });
            }
            let diff = (fx - fy).abs();
            if diff > best {
                best = diff;
            }
            if found.len() < ELITES || diff > found[found.len() - 1].0 {
                found.push((diff, x, dir));
                found.sort_by(|a, b| b.0.total_cmp(&a.0));
                found.truncate(ELITES);
            }
        }
        omegas[slot] = best;
        if !found.is_empty() {
            elites = found;
        }
    }
    // Running max enforces monotonicity.
    for k in 1..omegas.len() {
        omegas[k] = omegas[k].max(omegas[k - 1]);
    }
    Ok(ModulusEstimate { rhos: rhos.to_vec(), omegas, n_pairs })
}

#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct DiniIntegral {
    pub value: f64,
    pub rho_min: f64,
    pub rho_max: f64,
}

/// `∫_{ρ_min}^{ρ_max} ω(ρ)/ρ dρ` by the trapezoid rule in `ln ρ`.
pub fn dini_integral(est: &ModulusEstimate) -> Result<DiniIntegral> {
    if est.rhos.is_empty() {
        return Err(BgkError::InvalidArgument("empty modulus estimate".into()));
    }
    let mut value = 0.0;
    for k in 1..est.rhos.len() {
        let h = (est.rhos[k] / est.rhos[k - 1]).ln();
        value += 0.5 * h * (est.omegas[k] + est.omegas[k - 1]);
    }
    Ok(DiniIntegral { value, rho_min: est.rhos[0], rho_max: est.rhos[est.rhos.len() - 1] })
}

/// Least-squares slope of `ln ω` against `ln ρ` over `[ρ_min, 10ρ_min]`;
/// `None` when `ω` vanishes there.
pub fn local_exponent(est: &ModulusEstimate) -> Option<f64> {
    let top = est.rhos.first()? * 10.0;
    let pts: Vec<(f64, f64)> = est
        .rhos
        .iter()
        .zip(&est.omegas)
        .filter(|(r, w)| **r <= top * (1.0 + 1e-12) && **w > 0.0)
        .map(|(r, w)| (r.ln(), w.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Slope of `ln ω` over the last decade below which decay counts as too slow.
pub const NON_DINI_EXPONENT: f64 = 0.3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum DiniVerdict {
    #[serde(rename = "Dini")]
    Dini,
    #[serde(rename = "inconclusive/possibly non-Dini")]
    PossiblyNonDini,
}

impl fmt::Display for DiniVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiniVerdict::Dini => write!(f, "Dini"),
            DiniVerdict::PossiblyNonDini => write!(f, "inconclusive/possibly non-Dini"),
        }
    }
}

/// `ω` that vanishes near `ρ_min` or decays at least like `ρ^{0.3}` counts as Dini.
pub fn verdict(est: &ModulusEstimate) -> DiniVerdict {
    match local_exponent(est) {
        None => DiniVerdict::Dini,
        Some(a) if a >= NON_DINI_EXPONENT => DiniVerdict::Dini,
        Some(_) => DiniVerdict::PossiblyNonDini,
    }
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct CdNorm {
    pub max_abs: f64,
    pub dini: DiniIntegral,
    /// `max |F| + ∫ ω/ρ`, a lower bound of the `C_D` norm.
    pub value: f64,
}

/// `max |F|` over Halton points of `d`.
pub fn sampled_max_abs(f: &ScalarField, d: &StarDomain, samples: usize) -> Result<f64> {
    let mut m = 0.0f64;
    for x in crate::kernel::interior_samples(d, samples, 0) {
        let v = f.eval(&x);
        if !v.is_finite() {
            return Err(BgkError::NonFiniteField { value: v, point: x.as_slice().to_vec() });
        }
        m = m.max(v.abs());
    }
    Ok(m)
}

pub fn cd_norm_from(f: &ScalarField, d: &StarDomain, est: &ModulusEstimate, cfg: &DiniConfig) -> Result<CdNorm> {
    let max_abs = sampled_max_abs(f, d, cfg.max_samples)?;
    let dini = dini_integral(est)?;
    Ok(CdNorm { max_abs, dini, value: max_abs + dini.value })
}

pub fn cd_norm(f: &ScalarField, d: &StarDomain, cfg: &DiniConfig) -> Result<CdNorm> {
    let est = modulus(f, d, &default_rhos(d.diameter(), cfg), cfg.n_pairs, cfg.seed)?;
    cd_norm_from(f, d, &est, cfg)
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct DiniReport {
    pub modulus: ModulusEstimate,
    pub dini_integral: DiniIntegral,
    pub cd_norm_lower_bound: f64,
    pub local_exponent: Option<f64>,
    pub verdict: DiniVerdict,
}

pub fn analyze(f: &ScalarField, d: &StarDomain, cfg: &DiniConfig) -> Result<DiniReport> {
    let est = modulus(f, d, &default_rhos(d.diameter(), cfg), cfg.n_pairs, cfg.seed)?;
    let cd = cd_norm_from(f, d, &est, cfg)?;
    Ok(DiniReport {
        dini_integral: cd.dini,
        cd_norm_lower_bound: cd.value,
        local_exponent: local_exponent(&est),
        verdict: verdict(&est),
        modulus: est,
    })
}
