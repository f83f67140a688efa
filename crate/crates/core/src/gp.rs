//! Gaussian-process marginal likelihood search for the conditioning-kernel
//! width and ridge regularization.
//!
//! Each pseudo-output column is modelled as an independent draw of
//! `f + e` with `f ~ GP(0, Kz(sigma))` on the centered Gaussian kernel of Z
//! and `e ~ N(0, eps I)`. Log likelihoods are summed over columns.

use nalgebra::{DMatrix, DVector};

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::kernel::gaussian_centered_kernel;

/// Multipliers of the base width searched for the Z kernel.
pub const SIGMA_MULTIPLIERS: [f64; 7] = [0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0];

/// Candidate regularization values. `1e-4` is left out: it fits the leading
/// features almost exactly, and the two residual kernels then share a few
/// directions under the null.
pub const EPSILON_GRID: [f64; 3] = [1e-3, 1e-2, 1e-1];

/// Number of leading feature columns used as pseudo-outputs. Weaker
/// columns look like noise against Z and pull the fit towards large `eps`,
/// leaving the leading features under-regressed.
pub const MAX_PSEUDO_OUTPUTS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpChoice {
    pub sigma: f64,
    pub epsilon: f64,
    pub log_likelihood: f64,
}

/// Eigendecomposition of one centered Z kernel, reused across sides and epsilons.
pub(crate) struct ZSpectrum {
    pub sigma: f64,
    values: DVector<f64>,
    vectors: DMatrix<f64>,
}

impl ZSpectrum {
    pub fn new(z: &DataMatrix, z_cols: &[usize], sigma: f64) -> Result<Self> {
        let k = gaussian_centered_kernel(z, z_cols, sigma)?;
        let n = k.n();
        let eig = k
            .matrix()
            .clone()
            .try_symmetric_eigen(f64::EPSILON, 0)
            .ok_or_else(|| Error::Eigen(format!("Z kernel eigensolver failed (n = {n})")))?;
        Ok(ZSpectrum {
            sigma,
            values: eig.eigenvalues.map(|v| v.max(0.0)),
            vectors: eig.eigenvectors,
        })
    }

    /// Summed log marginal likelihood of the columns of `outputs`.
    pub fn log_likelihood(&self, outputs: &DMatrix<f64>, epsilon: f64) -> f64 {
        let proj = self.vectors.transpose() * outputs;
        let n = outputs.nrows() as f64;
        let cols = outputs.ncols() as f64;
        let mut quad = 0.0;
        let mut logdet = 0.0;
        for (i, &lambda) in self.values.iter().enumerate() {
            let c = lambda + epsilon;
            logdet += c.ln();
            quad += proj.row(i).iter().map(|v| v * v).sum::<f64>() / c;
        }
        -0.5 * quad - 0.5 * cols * logdet - 0.5 * cols * n * (2.0 * std::f64::consts::PI).ln()
    }
}

pub fn gp_select(
    z: &DataMatrix,
    z_cols: &[usize],
    outputs: &DMatrix<f64>,
    sigmas: &[f64],
    epsilons: &[f64],
) -> Result<Option<GpChoice>> {
    if outputs.nrows() != z.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "{} output rows for {} samples",
            outputs.nrows(),
            z.nrows()
        )));
    }
    let spectra = sigmas
        .iter()
        .map(|&s| ZSpectrum::new(z, z_cols, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(best_choice(&spectra, outputs, epsilons))
}

pub(crate) fn best_choice(
    spectra: &[ZSpectrum],
    outputs: &DMatrix<f64>,
    epsilons: &[f64],
) -> Option<GpChoice> {
    let mut best: Option<GpChoice> = None;
    for s in spectra {
        for &eps in epsilons {
            let ll = s.log_likelihood(outputs, eps);
            if !ll.is_finite() {
                continue;
            }
            if best.is_none_or(|b| ll > b.log_likelihood) {
                best = Some(GpChoice {
                    sigma: s.sigma,
                    epsilon: eps,
                    log_likelihood: ll,
                });
            }
        }
    }
    best
}

/// Leading feature columns rescaled so the first has unit sample variance.
pub(crate) fn pseudo_outputs(features: &DMatrix<f64>, leading_eigenvalue: f64) -> DMatrix<f64> {
    let n = features.nrows();
    let j = features.ncols().min(MAX_PSEUDO_OUTPUTS);
    let sd = (leading_eigenvalue / (n as f64 - 1.0)).sqrt();
    let scale = if sd > 0.0 { 1.0 / sd } else { 1.0 };
    features.columns(0, j) * scale
}
