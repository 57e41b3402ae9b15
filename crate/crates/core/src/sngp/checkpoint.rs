use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::model::{Dense, SngpModel};
use super::posterior::invert_spd;
use super::SngpConfig;
use crate::error::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl From<&Array2<f64>> for Matrix {
    fn from(a: &Array2<f64>) -> Self {
        Self {
            rows: a.nrows(),
            cols: a.ncols(),
            data: a.iter().copied().collect(),
        }
    }
}

impl Matrix {
    fn into_array(self) -> Result<Array2<f64>> {
        Array2::from_shape_vec((self.rows, self.cols), self.data)
            .map_err(|e| Error::InvalidValue(format!("checkpoint matrix: {e}")))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DenseRecord {
    weight: Matrix,
    bias: Vec<f64>,
    power_u: Vec<f64>,
}

/// Self-describing JSON document holding a complete model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    format_version: u32,
    config: SngpConfig,
    projection: DenseRecord,
    blocks: Vec<DenseRecord>,
    rff_weight: Matrix,
    rff_bias: Vec<f64>,
    beta: Matrix,
    /// Per-class posterior covariance (inverse precision).
    covariance: Vec<Matrix>,
}

impl From<&SngpModel> for Checkpoint {
    fn from(m: &SngpModel) -> Self {
        let dense = |d: &Dense| DenseRecord {
            weight: (&d.weight).into(),
            bias: d.bias.to_vec(),
            power_u: d.power_u.to_vec(),
        };
        Self {
            format_version: CHECKPOINT_VERSION,
            config: m.config.clone(),
            projection: dense(&m.projection),
            blocks: m.blocks.iter().map(dense).collect(),
            rff_weight: (&m.rff_weight).into(),
            rff_bias: m.rff_bias.to_vec(),
            beta: (&m.beta).into(),
            covariance: m.covariance.iter().map(Matrix::from).collect(),
        }
    }
}

impl Checkpoint {
    pub fn into_model(self) -> Result<SngpModel> {
        if self.format_version != CHECKPOINT_VERSION {
            return Err(Error::InvalidValue(format!(
                "unsupported checkpoint version {}",
                self.format_version
            )));
        }
        let dense = |r: DenseRecord| -> Result<Dense> {
            Ok(Dense {
                weight: r.weight.into_array()?,
                bias: Array1::from(r.bias),
                power_u: Array1::from(r.power_u),
            })
        };
        let covariance = self
            .covariance
            .into_iter()
            .map(Matrix::into_array)
            .collect::<Result<Vec<_>>>()?;
        let precision = covariance.iter().map(invert_spd).collect::<Result<Vec<_>>>()?;
        let model = SngpModel {
            projection: dense(self.projection)?,
            blocks: self.blocks.into_iter().map(dense).collect::<Result<_>>()?,
            rff_weight: self.rff_weight.into_array()?,
            rff_bias: Array1::from(self.rff_bias),
            beta: self.beta.into_array()?,
            precision,
            covariance,
            config: self.config,
        };
        let fresh = SngpModel::init(&model.config)?;
        if model.num_parameters() != fresh.num_parameters() || model.rff_weight.dim() != fresh.rff_weight.dim() {
            return Err(Error::InvalidValue("checkpoint shapes disagree with its config".into()));
        }
        Ok(model)
    }
}

pub fn save_checkpoint(model: &SngpModel, path: &Path) -> Result<()> {
    let json = serde_json::to_string(&Checkpoint::from(model))?;
    fs::write(path, json).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<SngpModel> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str::<Checkpoint>(&text)?.into_model()
}
