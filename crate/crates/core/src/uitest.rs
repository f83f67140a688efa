//! Unconditional kernel independence test.
//!
//! The statistic is `Tr(Kx Ky) / n` on centered Gaussian kernels. Under
//! independence it is asymptotically distributed as
//! `(1/n^2) sum_ij lx_i ly_j z_ij^2`, where `lx`, `ly` are the eigenvalues of
//! the two centered kernels.

use nalgebra::DMatrix;

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::kernel::{gaussian_centered_kernel, median_width, CenteredKernel};
use crate::null::{fit_gamma_moments, null_mean_var, p_value_gamma, p_value_mc, NullSpec};
use crate::report::{floor_p, Flags, Method, TestConfig, TestKind, TestReport};
use crate::spectral::{spectrum, truncated_spectrum};

/// Statistics below this magnitude are treated as exactly zero.
pub(crate) const ZERO_STAT_TOL: f64 = 1e-10;

/// `Tr(Kx Ky) / n`, computed as the Frobenius inner product of the two
/// symmetric matrices. Tiny negative roundoff is clamped to zero.
pub fn ui_statistic(kx: &CenteredKernel, ky: &CenteredKernel) -> Result<f64> {
    same_size(kx.matrix(), ky.matrix())?;
    Ok(trace_product(kx.matrix(), ky.matrix()) / kx.n() as f64)
}

pub(crate) fn trace_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let s: f64 = a.iter().zip(b.iter()).map(|(x, y)| x * y).sum();
    if s < 0.0 && s > -ZERO_STAT_TOL {
        0.0
    } else {
        s
    }
}

pub(crate) fn same_size(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch(format!(
            "kernels are {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(())
}

/// Null weights: all products of retained eigenvalues, scaled by `1/n^2`.
pub fn ui_null_spec(kx: &CenteredKernel, ky: &CenteredKernel, threshold: f64) -> Result<NullSpec> {
    same_size(kx.matrix(), ky.matrix())?;
    let lx = spectrum(kx, threshold)?;
    let ly = spectrum(ky, threshold)?;
    let n = kx.n() as f64;
    Ok(null_from_spectra(&lx, &ly, n))
}

fn null_from_spectra(lx: &[f64], ly: &[f64], n: f64) -> NullSpec {
    let weights = lx
        .iter()
        .flat_map(|a| ly.iter().map(move |b| a * b))
        .collect();
    NullSpec::new(weights, 1.0 / (n * n))
}

/// Tests `X _||_ Y` with median-heuristic kernel widths.
pub fn ui_test(
    data: &DataMatrix,
    x_cols: &[usize],
    y_cols: &[usize],
    config: &TestConfig,
) -> Result<TestReport> {
    check_disjoint(&[x_cols, y_cols])?;
    if x_cols.is_empty() || y_cols.is_empty() {
        return Err(Error::InvalidArgument("x and y column sets must be nonempty".into()));
    }
    data.check_columns(x_cols)?;
    data.check_columns(y_cols)?;
    let data = data.standardized();
    let n = data.nrows();

    let wx = median_width(&data, x_cols, config.median_cap)?;
    let wy = median_width(&data, y_cols, config.median_cap)?;
    let kx = gaussian_centered_kernel(&data, x_cols, wx)?;
    let ky = gaussian_centered_kernel(&data, y_cols, wy)?;

    if kx.is_zero() || ky.is_zero() {
        return Ok(degenerate_report(
            TestKind::Unconditional,
            config.method,
            n,
            0,
            (wx, wy),
        ));
    }

    let statistic = ui_statistic(&kx, &ky)?;
    let lx = truncated_spectrum(&kx, config.truncation())?;
    let ly = truncated_spectrum(&ky, config.truncation())?;
    let spec = null_from_spectra(&lx, &ly, n as f64);
    let (mean, var) = null_mean_var(&spec);
    let p = compute_p_values(statistic, Some(&spec), mean, var, config);

    Ok(TestReport {
        kind: TestKind::Unconditional,
        statistic,
        p_value: p.primary,
        p_value_gamma: p.gamma,
        p_value_mc: p.mc,
        method: config.method,
        n,
        cond_dim: 0,
        widths: (wx, wy),
        retained_eigs: (lx.len(), ly.len()),
        retained_null_weights: Some(spec.weights.len()),
        null_mean: mean,
        null_variance: var,
        hyperparams: None,
        flags: Flags::default(),
    })
}

pub(crate) struct PValues {
    pub primary: f64,
    pub gamma: Option<f64>,
    pub mc: Option<f64>,
}

/// Evaluates the configured p-value route(s). `spec` is required for Monte Carlo.
pub(crate) fn compute_p_values(
    statistic: f64,
    spec: Option<&NullSpec>,
    mean: f64,
    variance: f64,
    config: &TestConfig,
) -> PValues {
    let zero_null = mean <= 0.0;
    let gamma = matches!(config.method, Method::Gamma | Method::Both).then(|| {
        if zero_null && statistic <= ZERO_STAT_TOL {
            1.0
        } else {
            floor_p(p_value_gamma(&fit_gamma_moments(mean, variance), statistic))
        }
    });
    let mc = matches!(config.method, Method::MonteCarlo | Method::Both).then(|| {
        let spec = spec.expect("Monte Carlo p-value needs a null spec");
        if zero_null && statistic <= ZERO_STAT_TOL {
            1.0
        } else {
            p_value_mc(spec, statistic, config.mc_draws, config.seed)
        }
    });
    let primary = match config.method {
        Method::Gamma => gamma.unwrap(),
        Method::MonteCarlo | Method::Both => mc.unwrap(),
    };
    PValues { primary, gamma, mc }
}

pub(crate) fn degenerate_report(
    kind: TestKind,
    method: Method,
    n: usize,
    cond_dim: usize,
    widths: (f64, f64),
) -> TestReport {
    TestReport {
        kind,
        statistic: 0.0,
        p_value: 1.0,
        p_value_gamma: matches!(method, Method::Gamma | Method::Both).then_some(1.0),
        p_value_mc: matches!(method, Method::MonteCarlo | Method::Both).then_some(1.0),
        method,
        n,
        cond_dim,
        widths,
        retained_eigs: (0, 0),
        retained_null_weights: Some(0),
        null_mean: 0.0,
        null_variance: 0.0,
        hyperparams: None,
        flags: Flags {
            degenerate: true,
            ..Flags::default()
        },
    }
}

pub(crate) fn check_disjoint(sets: &[&[usize]]) -> Result<()> {
    for (i, a) in sets.iter().enumerate() {
        for b in &sets[i + 1..] {
            if let Some(&c) = a.iter().find(|c| b.contains(c)) {
                return Err(Error::OverlappingColumns(c));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::spectral_features;
    use nalgebra::DVector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn normal_cols(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..d)
            .map(|_| (0..n).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect()
    }

    fn kernel_on(x: Vec<f64>, w: f64) -> CenteredKernel {
        let d = DataMatrix::from_columns(&[x]).unwrap();
        gaussian_centered_kernel(&d, &[0], w).unwrap()
    }

    #[test]
    fn zero_factor_gives_zero() {
        let kx = kernel_on(vec![0.1, 0.5, -1.0, 2.0], 1.0);
        let ky = CenteredKernel::from_matrix(DMatrix::zeros(4, 4), 1.0, 1).unwrap();
        assert_eq!(ui_statistic(&kx, &ky).unwrap(), 0.0);
        assert!(ui_null_spec(&kx, &ky, 1e-5).unwrap().weights.is_empty());
    }

    #[test]
    fn rank_one_statistic() {
        let v = DVector::from_vec(vec![0.5, -0.5, 0.5, -0.5]);
        let lambda = 3.0;
        let k = CenteredKernel::from_matrix(&v * v.transpose() * lambda, 1.0, 1).unwrap();
        let s = ui_statistic(&k, &k).unwrap();
        assert!((s - lambda * lambda / 4.0).abs() < 1e-12);
    }

    #[test]
    fn statistic_matches_elementwise_sum() {
        let c = normal_cols(4, 2, 8);
        let kx = kernel_on(c[0].clone(), 0.8);
        let ky = kernel_on(c[1].clone(), 1.3);
        let mut s = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                s += kx.matrix()[(i, j)] * ky.matrix()[(i, j)];
            }
        }
        let explicit = (kx.matrix() * ky.matrix()).trace() / 4.0;
        assert!((ui_statistic(&kx, &ky).unwrap() - s / 4.0).abs() < 1e-14);
        assert!((explicit - s / 4.0).abs() < 1e-14);
    }

    #[test]
    fn statistic_is_symmetric_and_size_checked() {
        let c = normal_cols(20, 2, 2);
        let kx = kernel_on(c[0].clone(), 0.8);
        let ky = kernel_on(c[1].clone(), 0.5);
        assert_eq!(
            ui_statistic(&kx, &ky).unwrap().to_bits(),
            ui_statistic(&ky, &kx).unwrap().to_bits()
        );
        let small = kernel_on(vec![0.0, 1.0, 2.0], 1.0);
        assert!(ui_statistic(&kx, &small).is_err());
    }

    #[test]
    fn null_spec_from_two_spectra() {
        let spec = null_from_spectra(&[2.0], &[3.0], 5.0);
        assert_eq!(spec.weights, vec![6.0]);
        assert!((spec.scale - 1.0 / 25.0).abs() < 1e-18);
        let spec = null_from_spectra(&[2.0, 1.0], &[3.0, 1.0], 5.0);
        let mut w = spec.weights.clone();
        w.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(w, vec![1.0, 2.0, 3.0, 6.0]);
        // Tr(Kx) Tr(Ky) / n^2 with traces 3 and 4
        assert!((spec.mean() - 12.0 / 25.0).abs() < 1e-15);
    }

    #[test]
    fn trace_identity_and_moment_identity() {
        let c = normal_cols(30, 2, 4);
        let kx = kernel_on(c[0].clone(), 0.9);
        let ky = kernel_on(c[1].clone(), 0.7);
        let fx = spectral_features(&kx, 0.0).unwrap();
        let fy = spectral_features(&ky, 0.0).unwrap();
        let s = fx.columns().transpose() * fy.columns() / (30f64).sqrt();
        let via_features: f64 = s.iter().map(|v| v * v).sum();
        let stat = ui_statistic(&kx, &ky).unwrap();
        assert!((stat - via_features).abs() <= 1e-6 * stat);

        let spec = ui_null_spec(&kx, &ky, 0.0).unwrap();
        let (m, v) = null_mean_var(&spec);
        let n2 = 900.0;
        let em = kx.trace() * ky.trace() / n2;
        let ev = 2.0 * (kx.matrix() * kx.matrix()).trace() * (ky.matrix() * ky.matrix()).trace()
            / (n2 * n2);
        assert!((m - em).abs() <= 1e-6 * em);
        assert!((v - ev).abs() <= 1e-6 * ev);
    }

    #[test]
    fn row_permutation_leaves_statistic_unchanged() {
        let c = normal_cols(25, 2, 6);
        let perm: Vec<usize> = (0..25).map(|i| (i * 7) % 25).collect();
        let px: Vec<f64> = perm.iter().map(|&i| c[0][i]).collect();
        let py: Vec<f64> = perm.iter().map(|&i| c[1][i]).collect();
        let a = ui_statistic(&kernel_on(c[0].clone(), 0.8), &kernel_on(c[1].clone(), 0.8)).unwrap();
        let b = ui_statistic(&kernel_on(px, 0.8), &kernel_on(py, 0.8)).unwrap();
        assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn constant_x_is_degenerate() {
        let mut c = normal_cols(50, 2, 1);
        c[0] = vec![3.0; 50];
        let d = DataMatrix::from_columns(&c).unwrap();
        let r = ui_test(&d, &[0], &[1], &TestConfig::default()).unwrap();
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.statistic, 0.0);
        assert!(r.flags.degenerate);
    }

    #[test]
    fn identical_columns_are_dependent() {
        let c = normal_cols(400, 1, 12);
        let d = DataMatrix::from_columns(&[c[0].clone(), c[0].clone()]).unwrap();
        for method in [Method::Gamma, Method::MonteCarlo] {
            let cfg = TestConfig::default().with_method(method);
            let r = ui_test(&d, &[0], &[1], &cfg).unwrap();
            assert!(r.p_value < 0.01, "{method:?}: {}", r.p_value);
            assert!(r.p_value > 0.0);
        }
    }

    #[test]
    fn overlapping_columns_rejected() {
        let d = DataMatrix::from_columns(&normal_cols(10, 2, 0)).unwrap();
        assert!(matches!(
            ui_test(&d, &[0, 1], &[1], &TestConfig::default()),
            Err(Error::OverlappingColumns(1))
        ));
    }
}
