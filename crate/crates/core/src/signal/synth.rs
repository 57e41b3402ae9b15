//! Seeded surrogate spectra: each class is a set of Gaussian peaks, shifted
//! and scaled by an operating condition and corrupted by per-bin noise.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Dataset, SpectrumSample, FEATURE_LEN};
use crate::error::{Error, Result};
use crate::rng::seeded;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub bin: usize,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassTemplate {
    pub peaks: Vec<Peak>,
}

/// How an operating condition distorts every class template.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionShift {
    pub bin_offset: i64,
    pub amplitude_scale: f64,
}

impl Default for ConditionShift {
    fn default() -> Self {
        Self {
            bin_offset: 0,
            amplitude_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub templates: Vec<ClassTemplate>,
    #[serde(default)]
    pub shift: ConditionShift,
    pub noise_sigma: f64,
    /// Standard deviation of each Gaussian peak, in bins.
    #[serde(default = "default_peak_width")]
    pub peak_width: f64,
    /// Relative per-sample jitter of every peak amplitude.
    #[serde(default)]
    pub amplitude_jitter: f64,
    pub samples_per_class: usize,
    pub seed: u64,
}

fn default_peak_width() -> f64 {
    1.5
}

impl SynthSpec {
    pub fn num_classes(&self) -> usize {
        self.templates.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.templates.len() < 2 {
            return Err(Error::InvalidValue("need at least 2 class templates".into()));
        }
        for (c, t) in self.templates.iter().enumerate() {
            if let Some(p) = t.peaks.iter().find(|p| p.bin >= FEATURE_LEN) {
                return Err(Error::InvalidValue(format!("class {c}: peak bin {} out of range", p.bin)));
            }
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidValue(format!("noise sigma {}", self.noise_sigma)));
        }
        if !(self.peak_width > 0.0 && self.amplitude_jitter >= 0.0) {
            return Err(Error::InvalidValue("peak width must be > 0, jitter >= 0".into()));
        }
        Ok(())
    }

    /// Noise-free spectrum of class `class` under this spec's condition.
    pub fn template_spectrum(&self, class: usize) -> Vec<f64> {
        self.render(class, &mut |_| 1.0)
    }

    fn render(&self, class: usize, jitter: &mut dyn FnMut(usize) -> f64) -> Vec<f64> {
        let mut out = vec![0.0; FEATURE_LEN];
        let width = self.peak_width;
        let reach = (4.0 * width).ceil() as i64;
        for (pi, p) in self.templates[class].peaks.iter().enumerate() {
            let centre = p.bin as i64 + self.shift.bin_offset;
            let amp = p.amplitude * self.shift.amplitude_scale * jitter(pi);
            for b in (centre - reach).max(0)..=(centre + reach).min(FEATURE_LEN as i64 - 1) {
                let d = (b - centre) as f64 / width;
                out[b as usize] += amp * (-0.5 * d * d).exp();
            }
        }
        out
    }
}

/// Generate `samples_per_class` spectra for every class, class-major order.
pub fn synth_generate(spec: &SynthSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = seeded(spec.seed);
    let noise = Normal::new(0.0, spec.noise_sigma.max(0.0)).expect("sigma is finite");
    let mut ds = Dataset::default();
    for class in 0..spec.num_classes() {
        for _ in 0..spec.samples_per_class {
            let jit = spec.amplitude_jitter;
            let mut feats = spec.render(class, &mut |_| {
                if jit > 0.0 {
                    (1.0 + jit * rng.random_range(-1.0..1.0)).max(0.0)
                } else {
                    1.0
                }
            });
            if spec.noise_sigma > 0.0 {
                for v in feats.iter_mut() {
                    *v = (*v + noise.sample(&mut rng)).max(0.0);
                }
            }
            ds.push(SpectrumSample::new(feats, class)?);
        }
    }
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(noise: f64) -> SynthSpec {
        SynthSpec {
            templates: vec![
                ClassTemplate { peaks: vec![Peak { bin: 20, amplitude: 1.0 }] },
                ClassTemplate { peaks: vec![Peak { bin: 60, amplitude: 1.0 }] },
                ClassTemplate {
                    peaks: vec![Peak { bin: 100, amplitude: 0.7 }, Peak { bin: 140, amplitude: 0.4 }],
                },
            ],
            shift: ConditionShift::default(),
            noise_sigma: noise,
            peak_width: 1.5,
            amplitude_jitter: 0.0,
            samples_per_class: 100,
            seed: 11,
        }
    }

    fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
    }

    #[test]
    fn counts_match_spec() {
        let ds = synth_generate(&spec(0.05)).unwrap();
        assert_eq!(ds.len(), 300);
        assert!(ds.class_counts().values().all(|&c| c == 100));
    }

    #[test]
    fn generation_is_deterministic() {
        assert_eq!(synth_generate(&spec(0.1)).unwrap(), synth_generate(&spec(0.1)).unwrap());
        let mut other = spec(0.1);
        other.seed += 1;
        assert_ne!(synth_generate(&spec(0.1)).unwrap(), synth_generate(&other).unwrap());
    }

    #[test]
    fn noiseless_samples_are_nearest_to_their_own_template() {
        let s = spec(0.0);
        let ds = synth_generate(&s).unwrap();
        let templates: Vec<_> = (0..3).map(|c| s.template_spectrum(c)).collect();
        let correct = ds
            .samples()
            .iter()
            .filter(|x| {
                let nearest = (0..3)
                    .min_by(|&a, &b| {
                        sq_dist(x.features(), &templates[a])
                            .total_cmp(&sq_dist(x.features(), &templates[b]))
                    })
                    .unwrap();
                nearest == x.label
            })
            .count();
        assert_eq!(correct, ds.len());
    }

    #[test]
    fn condition_shift_moves_peaks() {
        let mut s = spec(0.0);
        s.shift = ConditionShift { bin_offset: 40, amplitude_scale: 2.0 };
        let t = s.template_spectrum(0);
        assert!((t[60] - 2.0).abs() < 1e-12);
        assert!(t[20].abs() < 1e-12);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut s = spec(0.0);
        s.templates[0].peaks[0].bin = 600;
        assert!(synth_generate(&s).is_err());
        let mut s = spec(0.0);
        s.templates.truncate(1);
        assert!(synth_generate(&s).is_err());
    }
}
