use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Two-component PCA of parameter snapshots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaProjection {
    /// Coordinates of every snapshot on the first two components.
    pub coords: Vec<[f64; 2]>,
    /// Fraction of total variance explained by each component.
    pub explained_variance_ratio: [f64; 2],
}

/// Project snapshots onto their top two principal components.
///
/// Snapshots are high dimensional and few, so the eigenproblem is solved on
/// the snapshot Gram matrix. Signs are fixed so each component's largest
/// coordinate is positive.
pub fn pca_parameter_trajectories(snapshots: &[Vec<f64>]) -> Result<PcaProjection> {
    let m = snapshots.len();
    if m == 0 {
        return Err(Error::EmptyInput);
    }
    let p = snapshots[0].len();
    if let Some(s) = snapshots.iter().find(|s| s.len() != p) {
        return Err(Error::shape(p, s.len()));
    }
    let mut mean = vec![0.0; p];
    for s in snapshots {
        for (a, v) in mean.iter_mut().zip(s) {
            *a += v / m as f64;
        }
    }
    let centered: Vec<Vec<f64>> = snapshots
        .iter()
        .map(|s| s.iter().zip(&mean).map(|(v, a)| v - a).collect())
        .collect();
    let gram = DMatrix::from_fn(m, m, |i, j| centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum());
    let total: f64 = gram.trace();
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::DegenerateInput("fewer than two distinct snapshots".into()));
    }
    let eig = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let mut coords = vec![[0.0; 2]; m];
    let mut ratio = [0.0; 2];
    for (c, &k) in order.iter().take(2).enumerate() {
        let lambda = eig.eigenvalues[k].max(0.0);
        ratio[c] = lambda / total;
        let col = eig.eigenvectors.column(k);
        let sign = if col.iter().fold(0.0f64, |b, &v| if v.abs() > b.abs() { v } else { b }) < 0.0 {
            -1.0
        } else {
            1.0
        };
        for i in 0..m {
            coords[i][c] = sign * col[i] * lambda.sqrt();
        }
    }
    Ok(PcaProjection {
        coords,
        explained_variance_ratio: ratio,
    })
}
