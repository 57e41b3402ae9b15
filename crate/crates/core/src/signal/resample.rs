use std::f64::consts::PI;

use super::RawSignal;
use crate::error::{Error, Result};

/// Zero crossings of the interpolation kernel on each side, measured at the
/// lower of the two rates.
const KERNEL_HALF_ZEROS: f64 = 32.0;

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

fn blackman(t: f64) -> f64 {
    // t in [-1, 1]
    0.42 + 0.5 * (PI * t).cos() + 0.08 * (2.0 * PI * t).cos()
}

/// Band-limited resampling with a windowed-sinc kernel.
///
/// When downsampling the kernel is stretched so its cutoff sits at the
/// target Nyquist frequency, which acts as the anti-aliasing filter.
pub fn resample(signal: &RawSignal, target_rate_hz: f64) -> Result<RawSignal> {
    if !(target_rate_hz.is_finite() && target_rate_hz > 0.0) {
        return Err(Error::InvalidValue(format!("target rate {target_rate_hz}")));
    }
    let src_rate = signal.sample_rate_hz;
    let ratio = target_rate_hz / src_rate;
    let out_len = (signal.len() as f64 * ratio).round() as usize;
    if out_len == 0 {
        return Err(Error::EmptyResample);
    }
    if src_rate == target_rate_hz {
        return Ok(signal.clone());
    }

    let cutoff = ratio.min(1.0);
    let half_width = KERNEL_HALF_ZEROS / cutoff;
    let x = &signal.samples;
    let n = x.len() as isize;
    let step = src_rate / target_rate_hz;

    let samples = (0..out_len)
        .map(|m| {
            let t = m as f64 * step;
            let lo = ((t - half_width).ceil() as isize).max(0);
            let hi = ((t + half_width).floor() as isize).min(n - 1);
            let mut acc = 0.0;
            for k in lo..=hi {
                let d = t - k as f64;
                acc += x[k as usize] * cutoff * sinc(cutoff * d) * blackman(d / half_width);
            }
            acc
        })
        .collect();

    Ok(RawSignal {
        samples,
        sample_rate_hz: target_rate_hz,
        label: signal.label,
        condition_id: signal.condition_id,
    })
}
