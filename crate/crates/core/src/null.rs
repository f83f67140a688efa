//! Weighted chi-square null distributions: `scale * sum_k w_k z_k^2` with
//! `z_k` i.i.d. standard normal.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Gamma};

/// Default number of Monte Carlo draws.
pub const DEFAULT_MC_DRAWS: usize = 5000;

/// Weights of a chi-square mixture and a global prefactor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullSpec {
    pub weights: Vec<f64>,
    pub scale: f64,
}

impl NullSpec {
    pub fn new(weights: Vec<f64>, scale: f64) -> Self {
        debug_assert!(weights.iter().all(|&w| w >= 0.0));
        NullSpec { weights, scale }
    }

    pub fn is_degenerate(&self) -> bool {
        self.weights.iter().all(|&w| w == 0.0)
    }

    pub fn mean(&self) -> f64 {
        null_mean_var(self).0
    }

    pub fn variance(&self) -> f64 {
        null_mean_var(self).1
    }
}

/// Two-moment Gamma fit of a null distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaFit {
    pub k: f64,
    pub theta: f64,
    pub mean: f64,
    pub degenerate: bool,
}

/// Mean `scale * sum(w)` and variance `2 scale^2 sum(w^2)`.
pub fn null_mean_var(spec: &NullSpec) -> (f64, f64) {
    let s1: f64 = spec.weights.iter().sum();
    let s2: f64 = spec.weights.iter().map(|w| w * w).sum();
    (spec.scale * s1, 2.0 * spec.scale * spec.scale * s2)
}

pub fn fit_gamma(spec: &NullSpec) -> GammaFit {
    let (mean, var) = null_mean_var(spec);
    fit_gamma_moments(mean, var)
}

/// Gamma fit from given moments: `k = mean^2 / var`, `theta = var / mean`.
pub fn fit_gamma_moments(mean: f64, variance: f64) -> GammaFit {
    if variance < 1e-300 || mean <= 0.0 || !mean.is_finite() || !variance.is_finite() {
        return GammaFit {
            k: 0.0,
            theta: 0.0,
            mean: mean.max(0.0),
            degenerate: true,
        };
    }
    GammaFit {
        k: mean * mean / variance,
        theta: variance / mean,
        mean,
        degenerate: false,
    }
}

/// Upper-tail probability of `t` under the fitted Gamma.
///
/// A degenerate fit is a point mass at its mean: 1 at or below it, 0 above.
pub fn p_value_gamma(fit: &GammaFit, t: f64) -> f64 {
    if fit.degenerate {
        return if t <= fit.mean { 1.0 } else { 0.0 };
    }
    if t <= 0.0 {
        return 1.0;
    }
    // shape/rate parametrization
    match Gamma::new(fit.k, 1.0 / fit.theta) {
        Ok(g) => g.sf(t).clamp(0.0, 1.0),
        Err(_) => 1.0,
    }
}

/// Monte Carlo p-value `(1 + #{sim >= t}) / (1 + draws)`, deterministic in `seed`.
pub fn p_value_mc(spec: &NullSpec, t: f64, draws: usize, seed: u64) -> f64 {
    let draws = draws.max(1);
    let sims = simulate(spec, draws, seed);
    let exceed = sims.iter().filter(|&&s| s >= t).count();
    (1 + exceed) as f64 / (1 + draws) as f64
}

/// Draws `draws` realizations of the mixture.
pub fn simulate(spec: &NullSpec, draws: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights: Vec<f64> = spec.weights.iter().filter(|&&w| w > 0.0).copied().collect();
    (0..draws)
        .map(|_| {
            let s: f64 = weights
                .iter()
                .map(|w| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    w * z * z
                })
                .sum();
            spec.scale * s
        })
        .collect()
}
