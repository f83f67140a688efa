//! Kernel conditional independence test.
//!
//! Functions of `(X, Z)` and of `Y` are residualized on `Z` by kernel ridge
//! regression, `R = eps (Kz + eps I)^-1`, giving `Kxz|z = R Kxz R` and
//! `Ky|z = R Ky R`. The statistic is `Tr(Kxz|z Ky|z) / n`; its null is a
//! chi-square mixture whose weights are the eigenvalues of the Gram matrix of
//! the per-sample outer products of the residual feature rows, scaled by `1/n`.

use nalgebra::DMatrix;

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::gp::{best_choice, pseudo_outputs, ZSpectrum, EPSILON_GRID, SIGMA_MULTIPLIERS};
use crate::kernel::{empirical_width, gaussian_centered_kernel, symmetrize, CenteredKernel};
use crate::null::{null_mean_var, NullSpec};
use crate::report::{Flags, Hyperparams, Method, TestConfig, TestKind, TestReport};
use crate::spectral::{eigenvalues_of, truncated_features, EmpiricalFeatures, Truncation};
use crate::uitest::{
    check_disjoint, compute_p_values, degenerate_report, same_size, trace_product, ui_test,
};

/// Kernels of `(X, Z)` and `Y` after regressing out `Z`.
#[derive(Debug, Clone)]
pub struct ResidualKernels {
    pub kxz_given_z: CenteredKernel,
    pub ky_given_z: CenteredKernel,
    pub epsilon_f: f64,
    pub epsilon_g: f64,
    pub sigma_z_f: f64,
    pub sigma_z_g: f64,
    /// Diagonal jitter had to be added while factoring `Kz + eps I`.
    pub jitter_used: bool,
}

impl ResidualKernels {
    pub fn n(&self) -> usize {
        self.kxz_given_z.n()
    }
}

/// `eps (Kz + eps I)^-1`, symmetric with eigenvalues in (0, 1].
pub fn residual_projector(kz: &CenteredKernel, epsilon: f64) -> Result<DMatrix<f64>> {
    projector(kz, epsilon).map(|(r, _)| r)
}

fn projector(kz: &CenteredKernel, epsilon: f64) -> Result<(DMatrix<f64>, bool)> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "regularization must be positive, got {epsilon}"
        )));
    }
    let n = kz.n();
    if kz.is_zero() {
        return Ok((DMatrix::identity(n, n), false));
    }
    let base = kz.matrix() + DMatrix::identity(n, n) * epsilon;
    let mut jitter = 0.0;
    let mut step = 1e-12 * (kz.trace() / n as f64).max(epsilon);
    for attempt in 0..=3 {
        let a = if attempt == 0 {
            base.clone()
        } else {
            &base + DMatrix::identity(n, n) * jitter
        };
        if let Some(chol) = a.cholesky() {
            let mut r = chol.inverse() * epsilon;
            symmetrize(&mut r);
            return Ok((r, attempt > 0));
        }
        jitter = step;
        step *= 10.0;
    }
    Err(Error::Factorization(format!(
        "Kz + eps I not positive definite (n = {n}, eps = {epsilon}, jitter up to {jitter:e})"
    )))
}

/// Residualizes both kernels on a single `Kz`, with separate regularization per side.
pub fn residualize(
    kxz: &CenteredKernel,
    ky: &CenteredKernel,
    kz: &CenteredKernel,
    epsilon_f: f64,
    epsilon_g: f64,
) -> Result<ResidualKernels> {
    residualize_with(kxz, ky, kz, kz, epsilon_f, epsilon_g)
}

/// Residualizes with separate conditioning kernels for the two sides.
pub fn residualize_with(
    kxz: &CenteredKernel,
    ky: &CenteredKernel,
    kz_f: &CenteredKernel,
    kz_g: &CenteredKernel,
    epsilon_f: f64,
    epsilon_g: f64,
) -> Result<ResidualKernels> {
    same_size(kxz.matrix(), ky.matrix())?;
    same_size(kxz.matrix(), kz_f.matrix())?;
    same_size(kxz.matrix(), kz_g.matrix())?;
    let (rf, jf) = projector(kz_f, epsilon_f)?;
    let (rg, jg) = if kz_f == kz_g && epsilon_f == epsilon_g {
        (rf.clone(), jf)
    } else {
        projector(kz_g, epsilon_g)?
    };
    Ok(ResidualKernels {
        kxz_given_z: sandwich(&rf, kxz),
        ky_given_z: sandwich(&rg, ky),
        epsilon_f,
        epsilon_g,
        sigma_z_f: kz_f.width(),
        sigma_z_g: kz_g.width(),
        jitter_used: jf || jg,
    })
}

fn sandwich(r: &DMatrix<f64>, k: &CenteredKernel) -> CenteredKernel {
    let mut m = r * k.matrix() * r;
    symmetrize(&mut m);
    CenteredKernel::from_centered(m, k.width(), k.source_dims())
}

/// `Tr(Kxz|z Ky|z) / n`.
pub fn ci_statistic(res: &ResidualKernels) -> f64 {
    trace_product(res.kxz_given_z.matrix(), res.ky_given_z.matrix()) / res.n() as f64
}

/// Null distribution of the conditional statistic, truncating every
/// spectrum at the absolute `threshold`.
pub fn ci_null_spec(res: &ResidualKernels, threshold: f64) -> Result<NullSpec> {
    ci_null_spec_with(res, Truncation::Absolute(threshold))
}

pub fn ci_null_spec_with(res: &ResidualKernels, rule: Truncation) -> Result<NullSpec> {
    let fx = truncated_features(&res.kxz_given_z, rule)?;
    let fy = truncated_features(&res.ky_given_z, rule)?;
    null_from_features(&fx, &fy, rule)
}

/// Weights are the nonzero eigenvalues of `W W'` (equivalently `W' W`), where
/// row `t` of `W` stacks the outer product of the `t`-th rows of the two
/// feature matrices. The smaller of the two Gram problems is solved.
pub(crate) fn null_from_features(
    fx: &EmpiricalFeatures,
    fy: &EmpiricalFeatures,
    rule: Truncation,
) -> Result<NullSpec> {
    let n = fx.columns().nrows();
    let scale = 1.0 / n as f64;
    if fx.is_empty() || fy.is_empty() {
        return Ok(NullSpec::new(Vec::new(), scale));
    }
    let (m1, m2) = (fx.len(), fy.len());
    let gram = if m1 * m2 > n {
        sample_gram(fx, fy)
    } else {
        let w = stacked_features(fx, fy);
        w.transpose() * w
    };
    let weights = eigenvalues_of(&gram, rule)?;
    Ok(NullSpec::new(weights, scale))
}

/// `n x n` Gram matrix of the stacked outer products: the elementwise
/// product of the two truncated kernel reconstructions.
fn sample_gram(fx: &EmpiricalFeatures, fy: &EmpiricalFeatures) -> DMatrix<f64> {
    let mut g = fx.reconstruct();
    g.component_mul_assign(&fy.reconstruct());
    symmetrize(&mut g);
    g
}

/// Row `t` holds `vec(psi_t phi_t')`, length `m1 * m2`.
pub(crate) fn stacked_features(fx: &EmpiricalFeatures, fy: &EmpiricalFeatures) -> DMatrix<f64> {
    let (n, m1, m2) = (fx.columns().nrows(), fx.len(), fy.len());
    let (a, b) = (fx.columns(), fy.columns());
    DMatrix::from_fn(n, m1 * m2, |t, k| a[(t, k / m2)] * b[(t, k % m2)])
}

/// Mean `Tr(G)/n` and variance `2 Tr(G^2)/n^2` of the conditional null,
/// computed from the sample Gram matrix without an eigendecomposition.
fn gram_moments(fx: &EmpiricalFeatures, fy: &EmpiricalFeatures) -> (f64, f64) {
    let n = fx.columns().nrows() as f64;
    if fx.is_empty() || fy.is_empty() {
        return (0.0, 0.0);
    }
    let g = sample_gram(fx, fy);
    let fro2: f64 = g.iter().map(|v| v * v).sum();
    (g.trace() / n, 2.0 * fro2 / (n * n))
}

/// Regression hyperparameters for the conditional test.
///
/// With fewer than `config.gp_threshold` conditioning columns: `eps = 1e-3`
/// and a Z width of half the (X, Z) / Y width. Otherwise each side gets its
/// own `(sigma_z, eps)` maximizing the GP marginal likelihood of its leading
/// kernel features.
pub fn select_hyperparams(
    data: &DataMatrix,
    xz_cols: &[usize],
    y_cols: &[usize],
    z_cols: &[usize],
    config: &TestConfig,
) -> Result<Hyperparams> {
    if z_cols.is_empty() {
        return Err(Error::InvalidArgument("conditioning set is empty".into()));
    }
    let data = data.standardized();
    let width = base_width(data.nrows(), config);
    let kxz = gaussian_centered_kernel(&data, xz_cols, width)?;
    let ky = gaussian_centered_kernel(&data, y_cols, width)?;
    hyperparams_for(&data, &kxz, &ky, z_cols, config)
}

fn base_width(n: usize, config: &TestConfig) -> f64 {
    config.width.unwrap_or_else(|| empirical_width(n))
}

fn hyperparams_for(
    data: &DataMatrix,
    kxz: &CenteredKernel,
    ky: &CenteredKernel,
    z_cols: &[usize],
    config: &TestConfig,
) -> Result<Hyperparams> {
    let width = kxz.width();
    let defaults = Hyperparams {
        width_xz: width,
        width_y: ky.width(),
        sigma_z_f: 0.5 * width,
        sigma_z_g: 0.5 * width,
        epsilon_f: config.epsilon,
        epsilon_g: config.epsilon,
        used_gp: false,
        gp_fallback: false,
    };
    if z_cols.len() < config.gp_threshold {
        return Ok(defaults);
    }

    let fx = truncated_features(kxz, config.truncation())?;
    let fy = truncated_features(ky, config.truncation())?;
    let spectra = SIGMA_MULTIPLIERS
        .iter()
        .map(|m| ZSpectrum::new(data, z_cols, m * width))
        .collect::<Result<Vec<_>>>()?;
    let choose = |f: &EmpiricalFeatures| {
        if f.is_empty() {
            return None;
        }
        let outputs = pseudo_outputs(f.columns(), f.eigenvalues()[0]);
        best_choice(&spectra, &outputs, &EPSILON_GRID)
    };
    match (choose(&fx), choose(&fy)) {
        (Some(f), Some(g)) => Ok(Hyperparams {
            sigma_z_f: f.sigma,
            sigma_z_g: g.sigma,
            epsilon_f: f.epsilon,
            epsilon_g: g.epsilon,
            used_gp: true,
            ..defaults
        }),
        _ => Ok(Hyperparams {
            gp_fallback: true,
            ..defaults
        }),
    }
}

/// Tests `X _||_ Y | Z`. An empty `z_cols` runs the unconditional test.
pub fn ci_test(
    data: &DataMatrix,
    x_cols: &[usize],
    y_cols: &[usize],
    z_cols: &[usize],
    config: &TestConfig,
) -> Result<TestReport> {
    check_disjoint(&[x_cols, y_cols, z_cols])?;
    if z_cols.is_empty() {
        return ui_test(data, x_cols, y_cols, config);
    }
    if x_cols.is_empty() || y_cols.is_empty() {
        return Err(Error::InvalidArgument("x and y column sets must be nonempty".into()));
    }
    data.check_columns(x_cols)?;
    data.check_columns(y_cols)?;
    data.check_columns(z_cols)?;
    let data = data.standardized();
    let n = data.nrows();

    let xz_cols: Vec<usize> = x_cols.iter().chain(z_cols).copied().collect();
    let width = base_width(n, config);
    let kxz = gaussian_centered_kernel(&data, &xz_cols, width)?;
    let ky = gaussian_centered_kernel(&data, y_cols, width)?;
    if kxz.is_zero() || ky.is_zero() {
        let mut r = degenerate_report(TestKind::Conditional, config.method, n, z_cols.len(), (width, width));
        r.hyperparams = None;
        return Ok(r);
    }

    let hp = hyperparams_for(&data, &kxz, &ky, z_cols, config)?;
    let kz_f = gaussian_centered_kernel(&data, z_cols, hp.sigma_z_f)?;
    let kz_g = if hp.sigma_z_g == hp.sigma_z_f {
        kz_f.clone()
    } else {
        gaussian_centered_kernel(&data, z_cols, hp.sigma_z_g)?
    };
    let constant_z = kz_f.is_zero();
    let res = residualize_with(&kxz, &ky, &kz_f, &kz_g, hp.epsilon_f, hp.epsilon_g)?;
    let statistic = ci_statistic(&res);

    let fx = truncated_features(&res.kxz_given_z, config.truncation())?;
    let fy = truncated_features(&res.ky_given_z, config.truncation())?;
    let (spec, mean, var) = match config.method {
        Method::Gamma => {
            let (m, v) = gram_moments(&fx, &fy);
            (None, m, v)
        }
        Method::MonteCarlo | Method::Both => {
            let spec = null_from_features(&fx, &fy, config.truncation())?;
            let (m, v) = null_mean_var(&spec);
            (Some(spec), m, v)
        }
    };
    let p = compute_p_values(statistic, spec.as_ref(), mean, var, config);

    Ok(TestReport {
        kind: TestKind::Conditional,
        statistic,
        p_value: p.primary,
        p_value_gamma: p.gamma,
        p_value_mc: p.mc,
        method: config.method,
        n,
        cond_dim: z_cols.len(),
        widths: (width, width),
        retained_eigs: (fx.len(), fy.len()),
        retained_null_weights: spec.as_ref().map(|s| s.weights.len()),
        null_mean: mean,
        null_variance: var,
        hyperparams: Some(hp),
        flags: Flags {
            degenerate: false,
            constant_conditioning: constant_z,
            jitter_used: res.jitter_used,
        },
    })
}
