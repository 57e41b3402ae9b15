use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::ClientState;
use crate::clustering::SimilarityMatrix;
use crate::error::{Error, Result};
use crate::signal::Dataset;
use crate::sngp::{dataset_variance, SngpModel};

/// Sample-count weighted mean of flat parameter vectors.
pub fn weighted_average(params: &[&[f64]], counts: &[usize]) -> Result<Vec<f64>> {
    if params.is_empty() {
        return Err(Error::EmptyInput);
    }
    if params.len() != counts.len() {
        return Err(Error::shape(format!("{} counts", params.len()), counts.len()));
    }
    let dim = params[0].len();
    if let Some(p) = params.iter().find(|p| p.len() != dim) {
        return Err(Error::shape(format!("{dim} parameters"), p.len()));
    }
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(Error::InvalidValue("total sample count is zero".into()));
    }
    let mut out = vec![0.0; dim];
    for (p, &n) in params.iter().zip(counts) {
        let w = n as f64 / total as f64;
        for (o, &v) in out.iter_mut().zip(p.iter()) {
            *o += w * v;
        }
    }
    Ok(out)
}

pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::shape(a.len(), b.len()));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// Raw pairwise cosine similarities.
pub fn cosine_matrix(params: &[Vec<f64>]) -> Result<Array2<f64>> {
    let n = params.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let mut m = Array2::ones((n, n));
    for i in 0..n {
        for j in i + 1..n {
            let c = cosine_similarity(&params[i], &params[j])?;
            m[(i, j)] = c;
            m[(j, i)] = c;
        }
    }
    Ok(m)
}

/// Cosine similarities with off-diagonal entries min-max scaled to [0, 1]
/// and a unit diagonal. Equal off-diagonal values all map to 1.
pub fn build_cosine_similarity_matrix(params: &[Vec<f64>]) -> Result<SimilarityMatrix> {
    let mut m = cosine_matrix(params)?;
    let n = m.nrows();
    let off: Vec<f64> = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|ij| m[ij])
        .collect();
    let lo = off.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = off.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = if i == j {
                1.0
            } else if hi > lo {
                (m[(i, j)] - lo) / (hi - lo)
            } else {
                1.0
            };
        }
    }
    SimilarityMatrix::new(m)
}

/// Cross-client uncertainty. `raw[(i, j)]` is the mean predictive variance
/// of client `j`'s model on client `i`'s training data; `normalized`
/// scales every column to [0, 1] (constant columns become 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyMatrix {
    pub raw: Array2<f64>,
    pub normalized: Array2<f64>,
}

impl UncertaintyMatrix {
    pub fn from_raw(raw: Array2<f64>) -> Result<Self> {
        if raw.nrows() != raw.ncols() || raw.is_empty() {
            return Err(Error::shape("non-empty square matrix", format!("{:?}", raw.shape())));
        }
        if raw.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite uncertainty".into()));
        }
        let mut normalized = raw.clone();
        for mut col in normalized.columns_mut() {
            let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            col.mapv_inplace(|v| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 });
        }
        Ok(Self { raw, normalized })
    }

    pub fn len(&self) -> usize {
        self.raw.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }
}

/// Row `i` of the raw uncertainty matrix: computed by a client on its own
/// training data against every model it is sent.
pub fn uncertainty_row(train: &Dataset, models: &[&SngpModel], seed: u64) -> Result<Vec<f64>> {
    models.iter().map(|m| dataset_variance(m, train, seed)).collect()
}

/// Every client evaluates every client's model on its uncertainty set.
/// All entries share the Monte-Carlo `seed`.
pub fn build_uncertainty_matrix(clients: &[ClientState], seed: u64) -> Result<UncertaintyMatrix> {
    if clients.is_empty() {
        return Err(Error::EmptyInput);
    }
    let models: Vec<&SngpModel> = clients.iter().map(|c| &c.model).collect();
    let rows = clients
        .iter()
        .map(|c| uncertainty_row(c.uncertainty_set(), &models, seed))
        .collect::<Result<Vec<_>>>()?;
    let n = clients.len();
    let raw = Array2::from_shape_fn((n, n), |(i, j)| rows[i][j]);
    UncertaintyMatrix::from_raw(raw)
}

/// `1 - normalized uncertainty`: low uncertainty means high similarity.
pub fn similarity_from_uncertainty(mu: &UncertaintyMatrix) -> Result<SimilarityMatrix> {
    SimilarityMatrix::new(mu.normalized.mapv(|v| 1.0 - v))
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    use super::*;

    #[test]
    fn weighted_average_by_counts() {
        let a = [1.0, 2.0];
        let b = [3.0, 6.0];
        let avg = weighted_average(&[&a, &b], &[1, 3]).unwrap();
        assert_abs_diff_eq!(avg[0], 2.5);
        assert_abs_diff_eq!(avg[1], 5.0);
        assert!(matches!(weighted_average(&[], &[]), Err(Error::EmptyInput)));
        assert!(weighted_average(&[&a], &[0]).is_err());
    }

    #[test]
    fn cosine_cases() {
        assert_abs_diff_eq!(cosine_similarity(&[1.0, 0.0], &[2.0, 0.0]).unwrap(), 1.0);
        assert_abs_diff_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 3.0]).unwrap(), 0.0);
        assert_abs_diff_eq!(cosine_similarity(&[1.0, 1.0], &[-1.0, -1.0]).unwrap(), -1.0);
        assert!(matches!(cosine_similarity(&[0.0, 0.0], &[1.0, 0.0]), Err(Error::ZeroVector)));
    }

    #[test]
    fn identical_parameters_give_unit_similarity() {
        let p = vec![vec![0.5, -1.0, 2.0]; 4];
        let raw = cosine_matrix(&p).unwrap();
        assert!(raw.iter().all(|&v| (v - 1.0).abs() < 1e-12));
        let s = build_cosine_similarity_matrix(&p).unwrap();
        assert!(s.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn cosine_matrix_is_scaled_off_diagonal() {
        let p = vec![vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]];
        let s = build_cosine_similarity_matrix(&p).unwrap();
        assert_eq!(s.get(0, 2), 0.0);
        assert_eq!(s.get(0, 1), 1.0);
        assert_eq!(s.get(1, 1), 1.0);
    }

    #[test]
    fn uncertainty_columns_are_scaled() {
        let raw = array![[0.1, 0.5, 0.2], [0.3, 0.5, 0.4], [0.2, 0.5, 0.6]];
        let mu = UncertaintyMatrix::from_raw(raw).unwrap();
        assert_abs_diff_eq!(mu.normalized[(0, 0)], 0.0);
        assert_abs_diff_eq!(mu.normalized[(1, 0)], 1.0);
        assert_abs_diff_eq!(mu.normalized[(2, 0)], 0.5);
        assert!(mu.normalized.column(1).iter().all(|&v| v == 0.0));
        assert_abs_diff_eq!(mu.normalized[(2, 2)], 1.0);
        let s = similarity_from_uncertainty(&mu).unwrap();
        assert_abs_diff_eq!(s.get(2, 0), 0.5);
        assert!(UncertaintyMatrix::from_raw(array![[f64::NAN]]).is_err());
    }
}
