use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::stats::{mean, std_dev};

/// Column means and standard deviations (divisor n).
#[derive(Debug, Clone, PartialEq)]
pub struct Scaler {
    pub names: Vec<String>,
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

impl Scaler {
    /// Fits on the columns of `x`. A constant column keeps sd 0 and maps to 0.
    pub fn fit(x: &DMatrix<f64>, names: &[String]) -> Result<Self> {
        if names.len() != x.ncols() {
            return Err(Error::InvalidParameter(format!(
                "{} names for {} columns",
                names.len(),
                x.ncols()
            )));
        }
        if x.nrows() < 2 {
            return Err(Error::InsufficientData(format!("{} rows; need at least 2", x.nrows())));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature matrix".into()));
        }
        let (mut means, mut sds) = (Vec::new(), Vec::new());
        for col in x.column_iter() {
            let c: Vec<f64> = col.iter().copied().collect();
            means.push(mean(&c).unwrap_or(0.0));
            sds.push(std_dev(&c, 0).unwrap_or(0.0));
        }
        Ok(Scaler {
            names: names.to_vec(),
            means,
            sds,
        })
    }

    pub fn is_constant(&self, j: usize) -> bool {
        self.sds[j].is_nan() || self.sds[j] <= 1e-12 * self.means[j].abs().max(1.0)
    }

    pub fn transform(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(x.nrows(), x.ncols(), |r, c| self.transform_value(c, x[(r, c)]))
    }

    pub fn transform_value(&self, j: usize, v: f64) -> f64 {
        if self.is_constant(j) {
            0.0
        } else {
            (v - self.means[j]) / self.sds[j]
        }
    }

    fn select(&self, keep: &[usize]) -> Scaler {
        Scaler {
            names: keep.iter().map(|&j| self.names[j].clone()).collect(),
            means: keep.iter().map(|&j| self.means[j]).collect(),
            sds: keep.iter().map(|&j| self.sds[j]).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Standardized {
    pub z: DMatrix<f64>,
    pub scaler: Scaler,
    pub dropped: Vec<String>,
}

impl Standardized {
    /// Wraps an already-scaled matrix with an identity scaler.
    pub fn unscaled(x: DMatrix<f64>, names: &[String]) -> Self {
        let p = x.ncols();
        Standardized {
            z: x,
            scaler: Scaler {
                names: names.to_vec(),
                means: vec![0.0; p],
                sds: vec![1.0; p],
            },
            dropped: Vec::new(),
        }
    }
}

/// Z-scores every column, dropping constant ones.
pub fn standardize(x: &DMatrix<f64>, names: &[String]) -> Result<Standardized> {
    let full = Scaler::fit(x, names)?;
    let (keep, drop): (Vec<usize>, Vec<usize>) = (0..x.ncols()).partition(|&j| !full.is_constant(j));
    if keep.is_empty() {
        return Err(Error::InsufficientData("all feature columns are constant".into()));
    }
    let dropped: Vec<String> = drop.iter().map(|&j| names[j].clone()).collect();
    for name in &dropped {
        log::warn!("constant column `{name}` dropped before standardization");
    }
    let scaler = full.select(&keep);
    let sub = x.select_columns(&keep);
    Ok(Standardized {
        z: scaler.transform(&sub),
        scaler,
        dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("f{i}")).collect()
    }

    #[test]
    fn two_values_map_to_unit() {
        let s = standardize(&DMatrix::from_column_slice(2, 1, &[1.0, 3.0]), &names(1)).unwrap();
        assert_eq!(s.z.as_slice(), &[-1.0, 1.0]);
    }

    #[test]
    fn constant_column_dropped() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 5.0, 2.0, 5.0, 4.0, 5.0]);
        let s = standardize(&x, &names(2)).unwrap();
        assert_eq!(s.dropped, vec!["f1".to_string()]);
        assert_eq!(s.z.ncols(), 1);
    }

    #[test]
    fn all_constant_is_error() {
        let x = DMatrix::from_element(4, 2, 3.0);
        assert!(standardize(&x, &names(2)).is_err());
    }
}
