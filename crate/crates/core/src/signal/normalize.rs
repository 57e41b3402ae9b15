use serde::{Deserialize, Serialize};

use super::{Dataset, FEATURE_LEN};

/// Input scaling applied per client before training.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    None,
    /// Per-bin min-max fitted on the client's training set.
    #[default]
    PerFeatureMinMax,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxScaler {
    min: Vec<f64>,
    max: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(ds: &Dataset) -> Self {
        let mut min = vec![f64::INFINITY; FEATURE_LEN];
        let mut max = vec![f64::NEG_INFINITY; FEATURE_LEN];
        for s in ds.samples() {
            for (j, v) in s.features().iter().enumerate() {
                min[j] = min[j].min(*v);
                max[j] = max[j].max(*v);
            }
        }
        if ds.is_empty() {
            min.fill(0.0);
            max.fill(1.0);
        }
        Self { min, max }
    }

    /// Maps each bin to `[0, 1]`; values outside the fitted range are
    /// clamped, constant bins map to 0.
    pub fn transform(&self, ds: &Dataset) -> Dataset {
        let mut out = ds.clone();
        for s in out.samples.iter_mut() {
            for (j, v) in s.features_mut().iter_mut().enumerate() {
                let span = self.max[j] - self.min[j];
                *v = if span > 0.0 {
                    ((*v - self.min[j]) / span).clamp(0.0, 1.0)
                } else {
                    0.0
                };
            }
        }
        out
    }
}

impl Normalization {
    /// Fit on `train` and apply to both sets.
    pub fn apply(self, train: &Dataset, test: &Dataset) -> (Dataset, Dataset) {
        match self {
            Normalization::None => (train.clone(), test.clone()),
            Normalization::PerFeatureMinMax => {
                let scaler = MinMaxScaler::fit(train);
                (scaler.transform(train), scaler.transform(test))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::SpectrumSample;

    #[test]
    fn minmax_fits_train_and_clamps_test() {
        let mk = |v: f64| SpectrumSample::new(vec![v; FEATURE_LEN], 0).unwrap();
        let train: Dataset = [1.0, 3.0, 2.0].into_iter().map(mk).collect();
        let test: Dataset = [0.0, 4.0, 2.5].into_iter().map(mk).collect();
        let (tr, te) = Normalization::PerFeatureMinMax.apply(&train, &test);
        let first = |d: &Dataset| d.samples().iter().map(|s| s.features()[7]).collect::<Vec<_>>();
        assert_eq!(first(&tr), vec![0.0, 1.0, 0.5]);
        assert_eq!(first(&te), vec![0.0, 1.0, 0.75]);
    }
}
