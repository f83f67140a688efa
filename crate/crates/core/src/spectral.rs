//! Truncated eigendecompositions of centered kernels (empirical feature maps).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kernel::CenteredKernel;

/// Eigenvalues below this are dropped from every spectral truncation.
pub const DEFAULT_THRESHOLD: f64 = 1e-5;

/// Empirical kernel map: column `i` is `sqrt(lambda_i) * v_i`.
#[derive(Debug, Clone)]
pub struct EmpiricalFeatures {
    columns: DMatrix<f64>,
    eigenvalues: Vec<f64>,
    truncation: f64,
}

impl EmpiricalFeatures {
    pub fn columns(&self) -> &DMatrix<f64> {
        &self.columns
    }

    /// Retained eigenvalues, descending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn truncation(&self) -> f64 {
        self.truncation
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// `psi psi'`, the kernel rebuilt from retained components.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.columns * self.columns.transpose()
    }
}

/// How small eigenvalues are cut off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation {
    /// Drop eigenvalues below a fixed value.
    Absolute(f64),
    /// Drop eigenvalues below a fraction of the largest one.
    Relative(f64),
}

impl Truncation {
    fn cutoff(self, vals: &DVector<f64>) -> f64 {
        match self {
            Truncation::Absolute(t) => t,
            Truncation::Relative(r) => r * vals.iter().copied().fold(0.0, f64::max),
        }
    }
}

/// Eigenpairs of `kernel` with eigenvalues at or above `threshold` (and
/// strictly positive), scaled into feature columns.
pub fn spectral_features(kernel: &CenteredKernel, threshold: f64) -> Result<EmpiricalFeatures> {
    features_of(kernel.matrix(), Truncation::Absolute(threshold))
}

/// Like [`spectral_features`] but with any [`Truncation`] rule.
pub fn truncated_features(kernel: &CenteredKernel, rule: Truncation) -> Result<EmpiricalFeatures> {
    features_of(kernel.matrix(), rule)
}

pub(crate) fn features_of(matrix: &DMatrix<f64>, rule: Truncation) -> Result<EmpiricalFeatures> {
    let n = matrix.nrows();
    let eig = matrix
        .clone()
        .try_symmetric_eigen(f64::EPSILON, 0)
        .ok_or_else(|| Error::Eigen(format!("symmetric eigensolver did not converge (n = {n})")))?;
    if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::Eigen("non-finite eigenvalue".into()));
    }
    let threshold = rule.cutoff(&eig.eigenvalues);
    let order = retained_order(&eig.eigenvalues, threshold);
    let mut columns = DMatrix::zeros(n, order.len());
    let mut eigenvalues = Vec::with_capacity(order.len());
    for (out, &idx) in order.iter().enumerate() {
        let lambda = eig.eigenvalues[idx];
        let scale = lambda.sqrt();
        columns
            .column_mut(out)
            .copy_from(&(eig.eigenvectors.column(idx) * scale));
        eigenvalues.push(lambda);
    }
    Ok(EmpiricalFeatures {
        columns,
        eigenvalues,
        truncation: threshold,
    })
}

/// Retained eigenvalues only, descending. Cheaper than [`spectral_features`].
pub fn spectrum(kernel: &CenteredKernel, threshold: f64) -> Result<Vec<f64>> {
    eigenvalues_of(kernel.matrix(), Truncation::Absolute(threshold))
}

pub fn truncated_spectrum(kernel: &CenteredKernel, rule: Truncation) -> Result<Vec<f64>> {
    eigenvalues_of(kernel.matrix(), rule)
}

pub(crate) fn eigenvalues_of(matrix: &DMatrix<f64>, rule: Truncation) -> Result<Vec<f64>> {
    if matrix.nrows() == 0 {
        return Ok(Vec::new());
    }
    let vals = matrix.clone().symmetric_eigenvalues();
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::Eigen("non-finite eigenvalue".into()));
    }
    let threshold = rule.cutoff(&vals);
    Ok(retained_order(&vals, threshold)
        .into_iter()
        .map(|i| vals[i])
        .collect())
}

fn retained_order(vals: &DVector<f64>, threshold: f64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..vals.len())
        .filter(|&i| {
            let v = vals[i].max(0.0);
            v > 0.0 && v >= threshold
        })
        .collect();
    idx.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]).then(a.cmp(&b)));
    idx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::DataMatrix;
    use crate::kernel::gaussian_centered_kernel;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_kernel(n: usize, seed: u64) -> CenteredKernel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let d = DataMatrix::from_columns(&[x]).unwrap();
        gaussian_centered_kernel(&d, &[0], 0.6).unwrap()
    }

    #[test]
    fn zero_kernel_has_no_components() {
        let k = CenteredKernel::from_matrix(DMatrix::zeros(5, 5), 1.0, 1).unwrap();
        let f = spectral_features(&k, DEFAULT_THRESHOLD).unwrap();
        assert!(f.is_empty());
        assert_eq!(f.columns().ncols(), 0);
    }

    #[test]
    fn rank_one_kernel() {
        // v is orthogonal to the ones vector so the matrix is already centered.
        let v = DVector::from_vec(vec![0.5, -0.5, 0.5, -0.5]);
        let lambda = 2.5;
        let m = &v * v.transpose() * lambda;
        let k = CenteredKernel::from_matrix(m.clone(), 1.0, 1).unwrap();
        let f = spectral_features(&k, DEFAULT_THRESHOLD).unwrap();
        assert_eq!(f.len(), 1);
        assert!((f.eigenvalues()[0] - lambda).abs() < 1e-12);
        assert!((f.reconstruct() - m).norm() < 1e-12);
    }

    #[test]
    fn reconstruction_within_dropped_mass() {
        let k = random_kernel(5, 11);
        let all = spectrum(&k, 0.0).unwrap();
        let f = spectral_features(&k, DEFAULT_THRESHOLD).unwrap();
        let dropped: f64 = all
            .iter()
            .filter(|&&v| v < DEFAULT_THRESHOLD)
            .map(|v| v * v)
            .sum();
        let err = (f.reconstruct() - k.matrix()).norm();
        assert!(err <= dropped.sqrt() + 1e-8, "err {err}");
        assert!(f.eigenvalues().windows(2).all(|w| w[0] >= w[1]));
        assert!(f.eigenvalues().iter().all(|&v| v >= DEFAULT_THRESHOLD));
    }

    #[test]
    fn trace_equals_eigenvalue_sum() {
        let k = random_kernel(30, 5);
        let full = spectral_features(&k, 0.0).unwrap();
        let s: f64 = full.eigenvalues().iter().sum();
        assert!((s - k.trace()).abs() <= 1e-8 * k.trace());
        let vals = spectrum(&k, DEFAULT_THRESHOLD).unwrap();
        assert_eq!(vals.len(), spectral_features(&k, DEFAULT_THRESHOLD).unwrap().len());
    }

    #[test]
    fn relative_truncation_scales_with_spectrum() {
        let k = random_kernel(30, 5);
        let scaled = CenteredKernel::from_matrix(k.matrix() * 1e-6, 1.0, 1).unwrap();
        let a = truncated_features(&k, Truncation::Relative(1e-5)).unwrap();
        let b = truncated_features(&scaled, Truncation::Relative(1e-5)).unwrap();
        assert_eq!(a.len(), b.len());
        assert!(b.truncation() > 0.0 && b.truncation() < 1e-9);
        assert!(spectral_features(&scaled, 1e-5).unwrap().len() < a.len());
    }
}
