use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::scaler::{standardize, Scaler, Standardized};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub scaler: Scaler,
    pub dropped: Vec<String>,
    /// Column `j` is the loading vector of component `j`.
    pub components: DMatrix<f64>,
    pub explained_variance: Vec<f64>,
    pub explained_variance_ratio: Vec<f64>,
    /// Rows align with the standardized input rows.
    pub scores: DMatrix<f64>,
}

impl PcaModel {
    pub fn names(&self) -> &[String] {
        &self.scaler.names
    }

    pub fn n_components(&self) -> usize {
        self.components.ncols()
    }

    pub fn loading(&self, pc: usize, feature: &str) -> Option<f64> {
        let j = self.names().iter().position(|n| n == feature)?;
        (pc < self.n_components()).then(|| self.components[(j, pc)])
    }
}

/// Eigen-decomposes the sample covariance (divisor n − 1) of a standardized
/// matrix. Components are ordered by variance and signed so the loading of
/// largest magnitude is positive.
pub fn fit_pca(s: &Standardized) -> Result<PcaModel> {
    let z = &s.z;
    let (n, p) = (z.nrows(), z.ncols());
    if n <= p {
        return Err(Error::InsufficientData(format!("{n} observations for {p} features")));
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("standardized matrix".into()));
    }
    let centered = DMatrix::from_fn(n, p, |r, c| z[(r, c)] - z.column(c).mean());
    let cov = (centered.transpose() * &centered) / (n as f64 - 1.0);
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

    let mut components = DMatrix::zeros(p, p);
    let mut explained_variance = Vec::with_capacity(p);
    for (k, &j) in order.iter().enumerate() {
        let mut v: DVector<f64> = eig.eigenvectors.column(j).into_owned();
        let lead = v
            .iter()
            .copied()
            .fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
        if lead < 0.0 {
            v.neg_mut();
        }
        components.set_column(k, &v);
        explained_variance.push(eig.eigenvalues[j].max(0.0));
    }
    let total: f64 = explained_variance.iter().sum();
    let explained_variance_ratio = explained_variance.iter().map(|v| v / total).collect();
    Ok(PcaModel {
        scaler: s.scaler.clone(),
        dropped: s.dropped.clone(),
        scores: z * &components,
        components,
        explained_variance,
        explained_variance_ratio,
    })
}

/// Standardizes then fits.
pub fn pca_from_raw(x: &DMatrix<f64>, names: &[String]) -> Result<PcaModel> {
    fit_pca(&standardize(x, names)?)
}
