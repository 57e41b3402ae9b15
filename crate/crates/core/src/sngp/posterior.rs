use nalgebra::DMatrix;
use ndarray::{Array2, Zip};

use super::model::SngpModel;
use crate::error::{Error, Result};
use crate::signal::Dataset;

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// `sum_i p_ik (1 - p_ik) phi_i phi_i^T + I` for every class `k`, with
/// `p_ik = sigmoid(phi_i^T beta_k)`, accumulated as one weighted Gram
/// product per class.
pub fn precision_matrices(phi: &Array2<f64>, beta: &Array2<f64>) -> Vec<Array2<f64>> {
    let d = phi.ncols();
    let logits = phi.dot(beta);
    (0..beta.ncols())
        .map(|k| {
            let mut scaled = phi.clone();
            Zip::from(scaled.rows_mut())
                .and(logits.column(k))
                .for_each(|mut row, &z| {
                    let p = sigmoid(z);
                    row *= (p * (1.0 - p)).sqrt();
                });
            let mut h = scaled.t().dot(&scaled);
            for i in 0..d {
                h[[i, i]] += 1.0;
            }
            h
        })
        .collect()
}

/// Inverse of a symmetric positive definite matrix through its Cholesky factor.
pub fn invert_spd(m: &Array2<f64>) -> Result<Array2<f64>> {
    let n = m.nrows();
    let dm = DMatrix::from_row_iterator(n, n, m.iter().copied());
    let chol = dm
        .cholesky()
        .ok_or_else(|| Error::Numerical("precision matrix is not positive definite".into()))?;
    let inv = chol.inverse();
    let out = Array2::from_shape_fn((n, n), |(i, j)| 0.5 * (inv[(i, j)] + inv[(j, i)]));
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite covariance".into()));
    }
    Ok(out)
}

/// Rebuild every class's Laplace precision from the full dataset at the
/// current weights and cache its inverse.
pub fn recompute_precision(model: &mut SngpModel, ds: &Dataset) -> Result<()> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let x = ds.feature_matrix();
    let phi = model.phi(&x.view())?;
    let precision = precision_matrices(&phi, &model.beta);
    let covariance = precision.iter().map(invert_spd).collect::<Result<Vec<_>>>()?;
    model.precision = precision;
    model.covariance = covariance;
    Ok(())
}
