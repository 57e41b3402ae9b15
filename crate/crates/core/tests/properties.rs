use std::collections::BTreeSet;

use fedsngp_core::signal::{spectra_from_signal, SpectrumKind, FEATURE_LEN, TARGET_RATE_HZ, WINDOW_LEN};
use fedsngp_core::{affinity_propagation, ApConfig, RawSignal, SimilarityMatrix};
use ndarray::Array2;
use proptest::prelude::*;

fn symmetric(n: usize) -> impl Strategy<Value = Array2<f64>> {
    prop::collection::vec(-1.0f64..0.0, n * n).prop_map(move |v| {
        let a = Array2::from_shape_vec((n, n), v).unwrap();
        (&a + &a.t()) / 2.0
    })
}

fn groups_as_sets(groups: Vec<Vec<usize>>) -> BTreeSet<BTreeSet<usize>> {
    groups.into_iter().map(|g| g.into_iter().collect()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ap_returns_a_partition_with_self_exemplars(s in (1usize..16).prop_flat_map(symmetric)) {
        let n = s.nrows();
        let a = affinity_propagation(&SimilarityMatrix::new(s).unwrap(), &ApConfig::default()).unwrap();
        prop_assert_eq!(a.len(), n);
        let mut seen = vec![false; n];
        for cl in &a.clusters {
            prop_assert!(cl.members.contains(&cl.exemplar));
            prop_assert_eq!(a.exemplar_of[cl.exemplar], cl.exemplar);
            for &m in &cl.members {
                prop_assert!(!seen[m]);
                seen[m] = true;
                prop_assert_eq!(a.exemplar_of[m], cl.exemplar);
            }
        }
        prop_assert!(seen.iter().all(|&x| x));
    }

    #[test]
    fn ap_is_permutation_equivariant(s in symmetric(9), perm in Just((0..9usize).collect::<Vec<_>>()).prop_shuffle()) {
        let cfg = ApConfig::default();
        let a = affinity_propagation(&SimilarityMatrix::new(s.clone()).unwrap(), &cfg).unwrap();
        let permuted = Array2::from_shape_fn((9, 9), |(i, j)| s[[perm[i], perm[j]]]);
        let b = affinity_propagation(&SimilarityMatrix::new(permuted).unwrap(), &cfg).unwrap();
        prop_assume!(a.converged && b.converged);
        let mapped: Vec<Vec<usize>> = b.groups().into_iter().map(|g| g.into_iter().map(|i| perm[i]).collect()).collect();
        prop_assert_eq!(groups_as_sets(a.groups()), groups_as_sets(mapped));
    }

    #[test]
    fn pipeline_yields_fixed_width_non_negative_spectra(
        samples in prop::collection::vec(-5.0f64..5.0, WINDOW_LEN..4 * WINDOW_LEN),
        stride in 256usize..2048,
    ) {
        let len = samples.len();
        let raw = RawSignal::new(samples, TARGET_RATE_HZ, 1, 0).unwrap();
        let spectra = spectra_from_signal(&raw, TARGET_RATE_HZ, WINDOW_LEN, stride, SpectrumKind::Magnitude).unwrap();
        prop_assert_eq!(spectra.len(), (len - WINDOW_LEN) / stride + 1);
        for s in &spectra {
            prop_assert_eq!(s.features().len(), FEATURE_LEN);
            prop_assert!(s.features().iter().all(|v| *v >= 0.0 && v.is_finite()));
            prop_assert_eq!(s.label, 1);
        }
    }
}
