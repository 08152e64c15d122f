use nalgebra::{DMatrix, DVector};

use super::Regressor;
use crate::error::{Error, Result};
use crate::linalg::least_squares;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub names: Vec<String>,
    pub intercept: f64,
    pub coefficients: Vec<f64>,
}

/// Ordinary least squares with an intercept.
pub fn fit_mlr(x: &DMatrix<f64>, y: &[f64], names: &[String]) -> Result<LinearModel> {
    let (n, p) = (x.nrows(), x.ncols());
    if y.len() != n || names.len() != p {
        return Err(Error::InvalidParameter("design dimensions disagree".into()));
    }
    if n <= p {
        return Err(Error::InsufficientData(format!(
            "{n} rows for {p} features and an intercept"
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("regression input".into()));
    }
    let design = DMatrix::from_fn(n, p + 1, |r, c| if c == 0 { 1.0 } else { x[(r, c - 1)] });
    let mut all_names = vec!["intercept".to_string()];
    all_names.extend(names.iter().cloned());
    let ls = least_squares(&design, &DVector::from_column_slice(y), &all_names)?;
    let coef: Vec<f64> = ls.coef.iter().copied().collect();
    if coef.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite("regression coefficients".into()));
    }
    Ok(LinearModel {
        names: names.to_vec(),
        intercept: coef[0],
        coefficients: coef[1..].to_vec(),
    })
}

impl Regressor for LinearModel {
    fn predict_row(&self, x: &[f64]) -> f64 {
        self.intercept + self.coefficients.iter().zip(x).map(|(b, v)| b * v).sum::<f64>()
    }
}
