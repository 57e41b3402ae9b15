use super::matrices::{build_cosine_similarity_matrix, similarity_from_uncertainty, weighted_average, UncertaintyMatrix};
use super::StrategyKind;
use crate::clustering::{affinity_propagation, ApConfig, ClusterAssignment, SimilarityMatrix};
use crate::error::{Error, Result};

/// What a client sends to the server: parameters and a sample count.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientUpload {
    pub client_id: usize,
    pub parameters: Vec<f64>,
    pub num_samples: usize,
}

/// The aggregation side. Its inputs are limited to client uploads and the
/// scalar variances clients report, so raw data never reaches it.
#[derive(Debug, Clone)]
pub struct Server {
    pub ap: ApConfig,
    pub force_single_cluster: bool,
}

/// Output of the server's grouping step.
#[derive(Debug, Clone, PartialEq)]
pub struct Grouping {
    pub assignment: ClusterAssignment,
    pub uncertainty: Option<UncertaintyMatrix>,
    pub similarity: Option<SimilarityMatrix>,
}

impl Server {
    /// Group clients for `kind`. `variance_rows[i][j]` is the variance
    /// client `i` measured for client `j`'s model; only FedSNGP uses it.
    pub fn group(
        &self,
        kind: StrategyKind,
        uploads: &[ClientUpload],
        variance_rows: Option<&[Vec<f64>]>,
    ) -> Result<Grouping> {
        let n = uploads.len();
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        let plain = |assignment| Grouping {
            assignment,
            uncertainty: None,
            similarity: None,
        };
        if self.force_single_cluster {
            return Ok(plain(ClusterAssignment::single(n)));
        }
        match kind {
            StrategyKind::LocalOnly => Ok(plain(ClusterAssignment::singletons(n))),
            StrategyKind::FedAvg => Ok(plain(ClusterAssignment::single(n))),
            StrategyKind::FedCos => {
                let params: Vec<Vec<f64>> = uploads.iter().map(|u| u.parameters.clone()).collect();
                let s = build_cosine_similarity_matrix(&params)?;
                Ok(Grouping {
                    assignment: affinity_propagation(&s, &self.ap)?,
                    uncertainty: None,
                    similarity: Some(s),
                })
            }
            StrategyKind::FedSngp => {
                let rows = variance_rows
                    .ok_or_else(|| Error::InvalidValue("FedSNGP grouping needs client variances".into()))?;
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(Error::shape(format!("{n}x{n} variances"), rows.len()));
                }
                let raw = ndarray::Array2::from_shape_fn((n, n), |(i, j)| rows[i][j]);
                let mu = UncertaintyMatrix::from_raw(raw)?;
                let s = similarity_from_uncertainty(&mu)?;
                Ok(Grouping {
                    assignment: affinity_propagation(&s, &self.ap)?,
                    uncertainty: Some(mu),
                    similarity: Some(s),
                })
            }
        }
    }

    /// Sample-weighted average within every cluster; returns the new
    /// parameters of each client, in upload order.
    pub fn aggregate(&self, uploads: &[ClientUpload], assignment: &ClusterAssignment) -> Result<Vec<Vec<f64>>> {
        if assignment.len() != uploads.len() {
            return Err(Error::shape(uploads.len(), assignment.len()));
        }
        let mut out = vec![Vec::new(); uploads.len()];
        for members in assignment.groups() {
            let params: Vec<&[f64]> = members.iter().map(|&i| uploads[i].parameters.as_slice()).collect();
            let counts: Vec<usize> = members.iter().map(|&i| uploads[i].num_samples).collect();
            let avg = weighted_average(&params, &counts)?;
            for &i in &members {
                out[i] = avg.clone();
            }
        }
        Ok(out)
    }
}
