use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::audio::AudioClip;

use super::{finish, AugmentError};

/// Full linear convolution (`a.len() + b.len() - 1` samples) via zero-padded
/// FFT.
pub fn fft_convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let out_len = a.len() + b.len() - 1;
    let n = out_len.next_power_of_two();

    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);

    let pad = |x: &[f64]| {
        let mut buf = vec![Complex::new(0.0, 0.0); n];
        for (slot, &v) in buf.iter_mut().zip(x) {
            slot.re = v;
        }
        buf
    };
    let mut fa = pad(a);
    let mut fb = pad(b);
    forward.process(&mut fa);
    forward.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    inverse.process(&mut fa);

    let scale = 1.0 / n as f64;
    fa[..out_len].iter().map(|c| c.re * scale).collect()
}

/// Scales the filter to unit L2 norm.
pub(crate) fn unit_energy(rir: &[f64]) -> Result<Vec<f64>, AugmentError> {
    if rir.is_empty() {
        return Err(AugmentError::EmptyRir);
    }
    let norm = rir.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(AugmentError::SilentRir);
    }
    Ok(rir.iter().map(|v| v / norm).collect())
}

pub(crate) fn reverberate_raw(signal: &[f64], rir: &[f64]) -> Result<Vec<f64>, AugmentError> {
    let filter = unit_energy(rir)?;
    let mut out = fft_convolve(signal, &filter);
    out.truncate(signal.len());
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct ConvolveOutcome {
    pub clip: AudioClip,
    pub rescale_gain: Option<f64>,
}

/// Reverberates `signal` with `rir`.
///
/// The filter is normalised to unit energy and the result truncated to the
/// signal's length.
pub fn convolve_rir(signal: &AudioClip, rir: &AudioClip) -> Result<ConvolveOutcome, AugmentError> {
    if signal.sample_rate() != rir.sample_rate() {
        return Err(AugmentError::RateMismatch {
            signal: signal.sample_rate(),
            other: rir.sample_rate(),
        });
    }
    let out = reverberate_raw(&signal.to_f64(), &rir.to_f64())?;
    let (clip, rescale_gain) = finish(&out, signal.sample_rate())?;
    Ok(ConvolveOutcome { clip, rescale_gain })
}
