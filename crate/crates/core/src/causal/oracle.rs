//! Data-driven independence oracles: kernel test or Fisher-z partial correlation.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::pc::IndependenceTest;
use crate::citest::ci_test;
use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::report::{TestConfig, P_FLOOR};

const PCORR_JITTER: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    Kci,
    PartialCorrelation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CiOracle {
    pub kind: OracleKind,
    pub alpha: f64,
    pub config: TestConfig,
}

impl CiOracle {
    pub fn new(kind: OracleKind, alpha: f64, config: TestConfig) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidArgument(format!("alpha {alpha} not in (0, 1)")));
        }
        Ok(CiOracle { kind, alpha, config })
    }

    /// Binds the oracle to a dataset (standardized once here).
    pub fn bind<'a>(&'a self, data: &DataMatrix) -> BoundOracle<'a> {
        BoundOracle {
            oracle: self,
            data: data.standardized(),
        }
    }
}

pub struct BoundOracle<'a> {
    oracle: &'a CiOracle,
    data: DataMatrix,
}

impl IndependenceTest for BoundOracle<'_> {
    fn num_vars(&self) -> usize {
        self.data.ncols()
    }

    fn names(&self) -> Vec<String> {
        self.data.column_names().to_vec()
    }

    fn p_value(&self, x: usize, y: usize, z: &[usize]) -> Result<f64> {
        match self.oracle.kind {
            OracleKind::Kci => Ok(ci_test(&self.data, &[x], &[y], z, &self.oracle.config)?.p_value),
            OracleKind::PartialCorrelation => partial_correlation_test(&self.data, x, y, z),
        }
    }
}

/// Sample partial correlation of columns `x` and `y` given `z`.
pub fn partial_correlation(data: &DataMatrix, x: usize, y: usize, z: &[usize]) -> Result<f64> {
    if x == y || z.contains(&x) || z.contains(&y) {
        return Err(Error::InvalidArgument("x, y and z must be distinct".into()));
    }
    let cols: Vec<usize> = [x, y].iter().chain(z).copied().collect();
    data.check_columns(&cols)?;
    let corr = correlation_matrix(data, &cols);
    if z.is_empty() {
        return Ok(corr[(0, 1)].clamp(-1.0, 1.0));
    }
    let precision = match corr.clone().try_inverse() {
        Some(p) if p.iter().all(|v| v.is_finite()) => p,
        _ => {
            let k = corr.nrows();
            (corr + DMatrix::identity(k, k) * PCORR_JITTER)
                .try_inverse()
                .filter(|p| p.iter().all(|v| v.is_finite()))
                .ok_or_else(|| Error::Factorization("singular correlation matrix".into()))?
        }
    };
    let denom = (precision[(0, 0)] * precision[(1, 1)]).sqrt();
    if !(denom > 0.0) {
        return Err(Error::Factorization("non-positive partial variance".into()));
    }
    Ok((-precision[(0, 1)] / denom).clamp(-1.0, 1.0))
}

/// Fisher-z test: `p = 2 (1 - Phi(sqrt(n - |z| - 3) |atanh r|))`.
pub fn partial_correlation_test(data: &DataMatrix, x: usize, y: usize, z: &[usize]) -> Result<f64> {
    let n = data.nrows();
    if n <= z.len() + 3 {
        return Err(Error::TooFewRows {
            needed: z.len() + 4,
            got: n,
        });
    }
    let r = partial_correlation(data, x, y, z)?;
    let stat = ((n - z.len() - 3) as f64).sqrt() * r.atanh().abs();
    let p = if stat.is_finite() {
        erfc(stat / std::f64::consts::SQRT_2)
    } else {
        0.0
    };
    Ok(p.clamp(P_FLOOR, 1.0))
}

fn correlation_matrix(data: &DataMatrix, cols: &[usize]) -> DMatrix<f64> {
    let n = data.nrows() as f64;
    let centered: Vec<Vec<f64>> = cols
        .iter()
        .map(|&c| {
            let v = data.column(c);
            let m = v.iter().sum::<f64>() / n;
            v.into_iter().map(|a| a - m).collect()
        })
        .collect();
    let k = cols.len();
    let cov = DMatrix::from_fn(k, k, |i, j| {
        centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum::<f64>()
    });
    DMatrix::from_fn(k, k, |i, j| {
        let s = (cov[(i, i)] * cov[(j, j)]).sqrt();
        if i == j {
            1.0
        } else if s > 0.0 {
            cov[(i, j)] / s
        } else {
            0.0
        }
    })
}
