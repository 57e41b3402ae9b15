use rand::seq::SliceRandom;

use super::Dataset;
use crate::error::{Error, Result};
use crate::rng::seeded;

/// Result of a stratified split.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Dataset,
    pub test: Dataset,
    pub warnings: Vec<String>,
}

/// Stratified split: within every label, `round(count * train_fraction)`
/// samples (at least one) go to the training side. Both halves keep the
/// original sample order.
pub fn train_test_split(ds: &Dataset, train_fraction: f64, seed: u64) -> Result<Split> {
    let (train, test, warnings) = split_indices(ds, train_fraction, seed)?;
    Ok(Split {
        train: ds.select(&train),
        test: ds.select(&test),
        warnings,
    })
}

/// Index form of [`train_test_split`]: sorted train and test indices plus
/// warnings.
pub fn split_indices(ds: &Dataset, train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>, Vec<String>)> {
    if ds.len() < 2 {
        return Err(Error::InvalidValue(format!(
            "cannot split a dataset of {} samples",
            ds.len()
        )));
    }
    if !(train_fraction > 0.0 && train_fraction <= 1.0) {
        return Err(Error::InvalidValue(format!("train fraction {train_fraction}")));
    }
    let mut rng = seeded(seed);
    let mut in_train = vec![false; ds.len()];
    let mut warnings = Vec::new();
    for (label, mut idx) in ds.indices_by_label() {
        if idx.len() == 1 {
            warnings.push(format!("label {label} has a single sample; assigned to train"));
        }
        idx.shuffle(&mut rng);
        let n_train = ((idx.len() as f64 * train_fraction).round() as usize).clamp(1, idx.len());
        for &i in &idx[..n_train] {
            in_train[i] = true;
        }
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    let (train, test): (Vec<usize>, Vec<usize>) = (0..ds.len()).partition(|&i| in_train[i]);
    Ok((train, test, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{SpectrumSample, FEATURE_LEN};

    fn ds(per_class: usize, classes: usize) -> Dataset {
        (0..classes * per_class)
            .map(|i| SpectrumSample::new(vec![i as f64; FEATURE_LEN], i % classes).unwrap())
            .collect()
    }

    #[test]
    fn eighty_twenty_per_class() {
        let s = train_test_split(&ds(100, 3), 0.8, 1).unwrap();
        assert!(s.train.class_counts().values().all(|&c| c == 80));
        assert!(s.test.class_counts().values().all(|&c| c == 20));
    }

    #[test]
    fn full_fraction_leaves_test_empty() {
        let s = train_test_split(&ds(10, 2), 1.0, 1).unwrap();
        assert!(s.test.is_empty());
        assert_eq!(s.train.len(), 20);
    }

    #[test]
    fn split_is_a_deterministic_partition() {
        let d = ds(17, 3);
        let a = train_test_split(&d, 0.8, 9).unwrap();
        let b = train_test_split(&d, 0.8, 9).unwrap();
        assert_eq!(a, b);
        let mut all: Vec<f64> = a
            .train
            .samples()
            .iter()
            .chain(a.test.samples())
            .map(|s| s.features()[0])
            .collect();
        all.sort_by(f64::total_cmp);
        let expect: Vec<f64> = (0..d.len()).map(|i| i as f64).collect();
        assert_eq!(all, expect);
    }

    #[test]
    fn singleton_class_goes_to_train_with_warning() {
        let mut d = ds(10, 2);
        d.push(SpectrumSample::new(vec![0.0; FEATURE_LEN], 7).unwrap());
        let s = train_test_split(&d, 0.5, 2).unwrap();
        assert!(s.train.label_set().contains(&7));
        assert_eq!(s.warnings.len(), 1);
    }
}
