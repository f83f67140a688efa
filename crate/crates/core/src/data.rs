//! Observation tables.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// An `n x d` table of continuous observations, one column per variable.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: DMatrix<f64>,
    column_names: Vec<String>,
    standardized: bool,
}

impl DataMatrix {
    /// Wraps raw observations without rescaling them.
    ///
    /// Requires at least two rows, at least one column and finite entries.
    pub fn new(values: DMatrix<f64>, column_names: Vec<String>) -> Result<Self> {
        validate(&values)?;
        if column_names.len() != values.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "{} column names for {} columns",
                column_names.len(),
                values.ncols()
            )));
        }
        Ok(DataMatrix {
            values,
            column_names,
            standardized: false,
        })
    }

    /// Builds a table from columns, naming them `X0, X1, ...`.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let names = (0..columns.len()).map(|i| format!("X{i}")).collect();
        Self::from_named_columns(columns, names)
    }

    pub fn from_named_columns(columns: &[Vec<f64>], names: Vec<String>) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::NoColumns);
        }
        let n = columns[0].len();
        if let Some(bad) = columns.iter().find(|c| c.len() != n) {
            return Err(Error::DimensionMismatch(format!(
                "ragged columns: {} vs {} rows",
                n,
                bad.len()
            )));
        }
        let values = DMatrix::from_fn(n, columns.len(), |i, j| columns[j][i]);
        Self::new(values, names)
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn is_standardized(&self) -> bool {
        self.standardized
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.column(j).iter().copied().collect()
    }

    /// Index of the column with the given name.
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|c| c == name)
    }

    /// A new table holding only `cols`, in the given order.
    pub fn select(&self, cols: &[usize]) -> Result<DataMatrix> {
        if cols.is_empty() {
            return Err(Error::NoColumns);
        }
        self.check_columns(cols)?;
        let values = self.values.select_columns(cols);
        Ok(DataMatrix {
            values,
            column_names: cols.iter().map(|&c| self.column_names[c].clone()).collect(),
            standardized: self.standardized,
        })
    }

    /// Rows of the selected columns as owned points.
    pub(crate) fn points(&self, cols: &[usize]) -> Vec<Vec<f64>> {
        (0..self.nrows())
            .map(|i| cols.iter().map(|&c| self.values[(i, c)]).collect())
            .collect()
    }

    pub(crate) fn check_columns(&self, cols: &[usize]) -> Result<()> {
        match cols.iter().find(|&&c| c >= self.ncols()) {
            Some(&index) => Err(Error::ColumnOutOfRange {
                index,
                available: self.ncols(),
            }),
            None => Ok(()),
        }
    }

    /// Standardized copy of this table (no-op copy when already standardized).
    pub fn standardized(&self) -> DataMatrix {
        if self.standardized {
            return self.clone();
        }
        DataMatrix {
            values: standardize_values(&self.values),
            column_names: self.column_names.clone(),
            standardized: true,
        }
    }
}

/// Validates `raw` and rescales every column to zero mean and unit sample
/// variance (divisor `n - 1`). Constant columns become all zeros.
pub fn standardize(raw: DMatrix<f64>) -> Result<DataMatrix> {
    validate(&raw)?;
    let names = (0..raw.ncols()).map(|i| format!("X{i}")).collect();
    Ok(DataMatrix {
        values: standardize_values(&raw),
        column_names: names,
        standardized: true,
    })
}

fn validate(values: &DMatrix<f64>) -> Result<()> {
    if values.nrows() < 2 {
        return Err(Error::TooFewRows {
            needed: 2,
            got: values.nrows(),
        });
    }
    if values.ncols() == 0 {
        return Err(Error::NoColumns);
    }
    for j in 0..values.ncols() {
        for i in 0..values.nrows() {
            if !values[(i, j)].is_finite() {
                return Err(Error::NonFinite { row: i, column: j });
            }
        }
    }
    Ok(())
}

fn standardize_values(raw: &DMatrix<f64>) -> DMatrix<f64> {
    let n = raw.nrows();
    let mut out = raw.clone();
    for mut col in out.column_iter_mut() {
        let first = col[0];
        if col.iter().all(|&v| v == first) {
            col.fill(0.0);
            continue;
        }
        let mean = col.iter().sum::<f64>() / n as f64;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let sd = var.sqrt();
        if sd == 0.0 || !sd.is_finite() {
            col.fill(0.0);
            continue;
        }
        col.apply(|v| *v = (*v - mean) / sd);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn moments(col: &[f64]) -> (f64, f64) {
        let n = col.len() as f64;
        let mean = col.iter().sum::<f64>() / n;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        (mean, var)
    }

    #[test]
    fn two_point_column_is_symmetric() {
        let d = standardize(DMatrix::from_column_slice(2, 1, &[1.0, 3.0])).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((d.values()[(0, 0)] + h).abs() < 1e-15);
        assert!((d.values()[(1, 0)] - h).abs() < 1e-15);
        let (m, v) = moments(&d.column(0));
        assert!(m.abs() < 1e-12 && (v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_column_maps_to_zero() {
        let d = standardize(DMatrix::from_column_slice(3, 1, &[5.0, 5.0, 5.0])).unwrap();
        assert_eq!(d.column(0), vec![0.0; 3]);
        assert!(d.is_standardized());
    }

    #[test]
    fn four_point_column_moments() {
        let d = standardize(DMatrix::from_column_slice(4, 1, &[0.0, 1.0, 2.0, 3.0])).unwrap();
        let (m, v) = moments(&d.column(0));
        assert!(m.abs() < 1e-10);
        assert!((v - 1.0).abs() < 1e-8);
    }

    #[test]
    fn rejects_non_finite_with_location() {
        let raw = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.0, f64::NAN, 5.0, 6.0]);
        match standardize(raw) {
            Err(Error::NonFinite { row, column }) => assert_eq!((row, column), (1, 1)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_single_row() {
        let raw = DMatrix::from_row_slice(1, 2, &[1.0, 2.0]);
        assert!(matches!(standardize(raw), Err(Error::TooFewRows { .. })));
    }

    #[test]
    fn select_keeps_names_and_order() {
        let d = DataMatrix::from_named_columns(
            &[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]],
            vec!["a".into(), "b".into(), "c".into()],
        )
        .unwrap();
        let s = d.select(&[2, 0]).unwrap();
        assert_eq!(s.column_names(), &["c".to_string(), "a".to_string()]);
        assert_eq!(s.column(0), vec![5.0, 6.0]);
        assert!(d.select(&[3]).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn standardize_is_idempotent(
                vals in prop::collection::vec(-1e3f64..1e3, 6..40),
            ) {
                let n = vals.len() / 2;
                let raw = DMatrix::from_column_slice(n, 2, &vals[..2 * n]);
                let once = standardize(raw).unwrap();
                let twice = standardize(once.values().clone()).unwrap();
                prop_assert!((once.values() - twice.values()).norm() < 1e-10);
                for j in 0..2 {
                    let col = once.column(j);
                    if col.iter().any(|&v| v != 0.0) {
                        let (m, v) = moments(&col);
                        prop_assert!(m.abs() < 1e-10);
                        prop_assert!((v - 1.0).abs() < 1e-8);
                    }
                }
            }
        }
    }
}
