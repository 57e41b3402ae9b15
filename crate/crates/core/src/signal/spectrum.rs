use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use super::{RawSignal, SpectrumSample, FEATURE_LEN, WINDOW_LEN};
use crate::error::{Error, Result};

/// Which quantity each spectral bin holds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumKind {
    /// Single-sided amplitude: `|X_0|/N` at DC and `2|X_k|/N` elsewhere.
    #[default]
    Magnitude,
    /// Square of the single-sided amplitude.
    Power,
}

/// Cut a signal into contiguous windows; a trailing remainder is dropped.
pub fn segment(signal: &RawSignal, window: usize, stride: usize) -> Result<Vec<Vec<f64>>> {
    if window == 0 || stride == 0 {
        return Err(Error::InvalidValue("window and stride must be >= 1".into()));
    }
    let len = signal.len();
    if len < window {
        return Err(Error::NoWindows { len, window });
    }
    let count = (len - window) / stride + 1;
    Ok((0..count)
        .map(|w| signal.samples[w * stride..w * stride + window].to_vec())
        .collect())
}

/// Single-sided spectrum of a [`WINDOW_LEN`]-point window with a
/// rectangular window function. Bin 0 is DC.
pub fn power_spectrum(window: &[f64], kind: SpectrumKind) -> Result<Vec<f64>> {
    if window.len() != WINDOW_LEN {
        return Err(Error::shape(WINDOW_LEN, window.len()));
    }
    if window.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidValue("non-finite value in window".into()));
    }
    let mut buf: Vec<Complex<f64>> = window.iter().map(|&v| Complex::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(WINDOW_LEN).process(&mut buf);

    let n = WINDOW_LEN as f64;
    Ok(buf[..FEATURE_LEN]
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let amp = if k == 0 { c.norm() / n } else { 2.0 * c.norm() / n };
            match kind {
                SpectrumKind::Magnitude => amp,
                SpectrumKind::Power => amp * amp,
            }
        })
        .collect())
}

/// Full chain for one record: resample, window, transform.
pub fn spectra_from_signal(
    signal: &RawSignal,
    target_rate_hz: f64,
    window: usize,
    stride: usize,
    kind: SpectrumKind,
) -> Result<Vec<SpectrumSample>> {
    let resampled = super::resample(signal, target_rate_hz)?;
    segment(&resampled, window, stride)?
        .iter()
        .map(|w| SpectrumSample::new(power_spectrum(w, kind)?, signal.label))
        .collect()
}
