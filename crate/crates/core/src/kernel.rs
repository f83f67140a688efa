//! Gaussian kernel matrices, centering and bandwidth heuristics.

use nalgebra::DMatrix;

use crate::data::DataMatrix;
use crate::error::{Error, Result};

/// Number of leading rows used by [`median_width`] when no cap is given.
pub const DEFAULT_MEDIAN_CAP: usize = 500;

/// A doubly centered kernel matrix `H K H`, with `H = I - 11'/n`.
#[derive(Debug, Clone, PartialEq)]
pub struct CenteredKernel {
    matrix: DMatrix<f64>,
    width: f64,
    source_dims: usize,
}

impl CenteredKernel {
    /// Centers an arbitrary symmetric matrix and wraps it.
    pub fn from_matrix(matrix: DMatrix<f64>, width: f64, source_dims: usize) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "kernel must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(CenteredKernel {
            matrix: center(&matrix),
            width,
            source_dims,
        })
    }

    /// Wraps a matrix that the caller guarantees is already centered and symmetric.
    pub(crate) fn from_centered(matrix: DMatrix<f64>, width: f64, source_dims: usize) -> Self {
        CenteredKernel {
            matrix,
            width,
            source_dims,
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn source_dims(&self) -> usize {
        self.source_dims
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    /// True when every entry is exactly zero, e.g. a kernel on a constant column.
    pub fn is_zero(&self) -> bool {
        self.matrix.iter().all(|&v| v == 0.0)
    }
}

/// Two-sided centering `H M H`, symmetrized.
pub fn center(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let nf = n as f64;
    let row_means: Vec<f64> = (0..n).map(|i| m.row(i).sum() / nf).collect();
    let col_means: Vec<f64> = (0..n).map(|j| m.column(j).sum() / nf).collect();
    let grand = row_means.iter().sum::<f64>() / nf;
    let mut out = DMatrix::from_fn(n, n, |i, j| m[(i, j)] - row_means[i] - col_means[j] + grand);
    symmetrize(&mut out);
    out
}

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Uncentered Gaussian kernel `exp(-|a - b|^2 / (2 width^2))` on row points.
pub fn gaussian_gram(points: &[Vec<f64>], width: f64) -> DMatrix<f64> {
    let n = points.len();
    let gamma = 1.0 / (2.0 * width * width);
    let mut k = DMatrix::from_element(n, n, 1.0);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = (-gamma * sq_dist(&points[i], &points[j])).exp();
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Centered Gaussian kernel on the selected columns of `data`.
pub fn gaussian_centered_kernel(
    data: &DataMatrix,
    cols: &[usize],
    width: f64,
) -> Result<CenteredKernel> {
    if cols.is_empty() {
        return Err(Error::NoColumns);
    }
    if !(width > 0.0 && width.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "kernel width must be positive, got {width}"
        )));
    }
    data.check_columns(cols)?;
    let points = data.points(cols);
    let k = gaussian_gram(&points, width);
    Ok(CenteredKernel::from_centered(center(&k), width, cols.len()))
}

/// Median-heuristic width: the median Euclidean distance between the first
/// `subsample_cap` rows of the selected columns. Falls back to 1.0 when the
/// median is zero.
pub fn median_width(data: &DataMatrix, cols: &[usize], subsample_cap: usize) -> Result<f64> {
    if cols.is_empty() {
        return Err(Error::NoColumns);
    }
    data.check_columns(cols)?;
    let m = data.nrows().min(subsample_cap.max(2));
    let points = &data.points(cols)[..m];
    let mut dists = Vec::with_capacity(m * (m - 1) / 2);
    for i in 0..m {
        for j in (i + 1)..m {
            dists.push(sq_dist(&points[i], &points[j]).sqrt());
        }
    }
    let med = median(&mut dists);
    Ok(if med > 0.0 && med.is_finite() { med } else { 1.0 })
}

/// Kernel width rule for standardized data: 0.8 up to 200 samples,
/// 0.3 above 1200, 0.5 in between.
pub fn empirical_width(n: usize) -> f64 {
    if n <= 200 {
        0.8
    } else if n > 1200 {
        0.3
    } else {
        0.5
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn median(v: &mut [f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn data(cols: &[Vec<f64>]) -> DataMatrix {
        DataMatrix::from_columns(cols).unwrap()
    }

    #[test]
    fn width_rule_boundaries() {
        assert_eq!(empirical_width(200), 0.8);
        assert_eq!(empirical_width(201), 0.5);
        assert_eq!(empirical_width(1200), 0.5);
        assert_eq!(empirical_width(1300), 0.3);
        assert_eq!(empirical_width(1), 0.8);
    }

    #[test]
    fn median_of_single_pair() {
        let d = data(&[vec![0.0, 1.0]]);
        assert_eq!(median_width(&d, &[0], 500).unwrap(), 1.0);
    }

    #[test]
    fn median_falls_back_on_identical_points() {
        let d = data(&[vec![0.0, 0.0, 0.0]]);
        assert_eq!(median_width(&d, &[0], 500).unwrap(), 1.0);
    }

    #[test]
    fn median_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..5).map(|_| rng.random_range(-2.0..2.0)).collect();
        let y: Vec<f64> = (0..5).map(|_| rng.random_range(-2.0..2.0)).collect();
        let d = data(&[x.clone(), y.clone()]);
        let mut all = Vec::new();
        for i in 0..5 {
            for j in (i + 1)..5 {
                all.push(((x[i] - x[j]).powi(2) + (y[i] - y[j]).powi(2)).sqrt());
            }
        }
        assert_eq!(all.len(), 10);
        all.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let expected = 0.5 * (all[4] + all[5]);
        assert!((median_width(&d, &[0, 1], 500).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn median_cap_uses_prefix() {
        let d = data(&[vec![0.0, 1.0, 100.0, 200.0]]);
        assert_eq!(median_width(&d, &[0], 2).unwrap(), 1.0);
    }

    #[test]
    fn two_point_centering_structure() {
        let d = data(&[vec![0.3, -1.7]]);
        let k = gaussian_centered_kernel(&d, &[0], 0.9).unwrap();
        let m = k.matrix();
        let c = m[(0, 0)];
        assert!(c >= 0.0);
        assert!((m[(1, 1)] - c).abs() < 1e-15);
        assert!((m[(0, 1)] + c).abs() < 1e-15);
        assert!((m[(1, 0)] + c).abs() < 1e-15);
    }

    #[test]
    fn identical_rows_give_zero_kernel() {
        let d = data(&[vec![2.0; 4], vec![-1.0; 4]]);
        let k = gaussian_centered_kernel(&d, &[0, 1], 1.0).unwrap();
        assert!(k.matrix().iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn centering_matches_dense_product() {
        let pts = [0.1, -0.4, 1.3, 2.2];
        let d = data(&[pts.to_vec()]);
        let w = 0.7;
        let k = gaussian_centered_kernel(&d, &[0], w).unwrap();
        let raw = DMatrix::from_fn(4, 4, |i, j| {
            (-(pts[i] - pts[j]).powi(2) / (2.0 * w * w)).exp()
        });
        let h = DMatrix::<f64>::identity(4, 4) - DMatrix::from_element(4, 4, 0.25);
        let expected = &h * raw * &h;
        assert!((k.matrix() - expected).norm() < 1e-14);
    }

    #[test]
    fn rejects_bad_width_and_empty_columns() {
        let d = data(&[vec![0.0, 1.0]]);
        assert!(gaussian_centered_kernel(&d, &[0], 0.0).is_err());
        assert!(gaussian_centered_kernel(&d, &[], 1.0).is_err());
        assert!(gaussian_centered_kernel(&d, &[4], 1.0).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]
            #[test]
            fn centered_kernel_invariants(
                vals in prop::collection::vec(-3.0f64..3.0, 4..40),
                width in 0.2f64..3.0,
            ) {
                let d = data(&[vals.clone()]);
                let points: Vec<Vec<f64>> = vals.iter().map(|&v| vec![v]).collect();
                let raw = gaussian_gram(&points, width);
                for (i, v) in raw.iter().enumerate() {
                    prop_assert!(*v > 0.0 && *v <= 1.0, "entry {i} = {v}");
                }
                for i in 0..vals.len() {
                    prop_assert_eq!(raw[(i, i)], 1.0);
                }
                let k = gaussian_centered_kernel(&d, &[0], width).unwrap();
                let m = k.matrix();
                prop_assert!((m - m.transpose()).amax() <= 1e-12);
                for i in 0..m.nrows() {
                    prop_assert!(m.row(i).sum().abs() < 1e-8);
                }
                let eig = m.clone().symmetric_eigenvalues();
                let top = eig.max();
                prop_assert!(eig.min() >= -1e-8 * top - 1e-13);
                prop_assert!((center(m) - m).norm() <= 1e-10);
            }
        }
    }
}
