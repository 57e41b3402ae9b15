//! Vibration signal preprocessing and dataset containers.
//!
//! Raw acceleration records are resampled to a common rate, cut into
//! fixed-length windows and turned into single-sided spectra of
//! [`FEATURE_LEN`] bins. A seeded generator produces surrogate spectra for
//! desk-scale experiments.

mod io;
mod normalize;
mod resample;
mod spectrum;
mod split;
mod synth;

use std::collections::{BTreeMap, BTreeSet};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{read_dataset_csv, read_raw_binary, read_raw_csv, write_dataset_csv};
pub use normalize::{MinMaxScaler, Normalization};
pub use resample::resample;
pub use spectrum::{power_spectrum, segment, spectra_from_signal, SpectrumKind};
pub use split::{split_indices, train_test_split, Split};
pub use synth::{synth_generate, ClassTemplate, ConditionShift, Peak, SynthSpec};

/// Samples per analysis window.
pub const WINDOW_LEN: usize = 1024;
/// Bins in a single-sided spectrum of one window.
pub const FEATURE_LEN: usize = WINDOW_LEN / 2;
/// Common sampling rate all records are brought to before windowing.
pub const TARGET_RATE_HZ: f64 = 12_800.0;

#[derive(Debug, Clone, PartialEq)]
pub struct RawSignal {
    pub samples: Vec<f64>,
    pub sample_rate_hz: f64,
    pub label: usize,
    pub condition_id: i64,
}

impl RawSignal {
    pub fn new(samples: Vec<f64>, sample_rate_hz: f64, label: usize, condition_id: i64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyInput);
        }
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::InvalidValue(format!("sample rate {sample_rate_hz}")));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidValue(format!("non-finite sample at index {i}")));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
            label,
            condition_id,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// One spectral feature vector with its class label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSample {
    features: Vec<f64>,
    pub label: usize,
}

impl SpectrumSample {
    pub fn new(features: Vec<f64>, label: usize) -> Result<Self> {
        if features.len() != FEATURE_LEN {
            return Err(Error::shape(FEATURE_LEN, features.len()));
        }
        if let Some(i) = features.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidValue(format!(
                "feature {i} = {} is not a finite non-negative value",
                features[i]
            )));
        }
        Ok(Self { features, label })
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub(crate) fn features_mut(&mut self) -> &mut [f64] {
        &mut self.features
    }
}

/// A labelled collection of spectra held by one party.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    samples: Vec<SpectrumSample>,
}

impl Dataset {
    pub fn new(samples: Vec<SpectrumSample>) -> Self {
        Self { samples }
    }

    pub fn samples(&self) -> &[SpectrumSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn push(&mut self, sample: SpectrumSample) {
        self.samples.push(sample);
    }

    pub fn extend(&mut self, other: Dataset) {
        self.samples.extend(other.samples);
    }

    pub fn label_set(&self) -> BTreeSet<usize> {
        self.samples.iter().map(|s| s.label).collect()
    }

    pub fn class_counts(&self) -> BTreeMap<usize, usize> {
        let mut counts = BTreeMap::new();
        for s in &self.samples {
            *counts.entry(s.label).or_insert(0) += 1;
        }
        counts
    }

    pub fn labels(&self) -> Vec<usize> {
        self.samples.iter().map(|s| s.label).collect()
    }

    /// Samples restricted to the given labels, in original order.
    pub fn filter_labels(&self, labels: &BTreeSet<usize>) -> Dataset {
        Dataset::new(
            self.samples
                .iter()
                .filter(|s| labels.contains(&s.label))
                .cloned()
                .collect(),
        )
    }

    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset::new(indices.iter().map(|&i| self.samples[i].clone()).collect())
    }

    /// Row-major `n x FEATURE_LEN` feature matrix.
    pub fn feature_matrix(&self) -> Array2<f64> {
        let mut m = Array2::zeros((self.samples.len(), FEATURE_LEN));
        for (mut row, s) in m.rows_mut().into_iter().zip(&self.samples) {
            row.iter_mut().zip(&s.features).for_each(|(d, v)| *d = *v);
        }
        m
    }

    /// Indices of the samples of each label, in order of appearance.
    pub(crate) fn indices_by_label(&self) -> BTreeMap<usize, Vec<usize>> {
        let mut by = BTreeMap::new();
        for (i, s) in self.samples.iter().enumerate() {
            by.entry(s.label).or_insert_with(Vec::new).push(i);
        }
        by
    }
}

impl FromIterator<SpectrumSample> for Dataset {
    fn from_iter<T: IntoIterator<Item = SpectrumSample>>(iter: T) -> Self {
        Dataset::new(iter.into_iter().collect())
    }
}
