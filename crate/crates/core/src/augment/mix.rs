use rand::Rng;

use crate::audio::{rms_f64, AudioClip};

use super::{finish, AugmentError};

/// Result of [`mix_at_snr`].
#[derive(Debug, Clone)]
pub struct MixOutcome {
    pub clip: AudioClip,
    /// Gain applied to the (tiled or cropped) noise before adding it.
    pub noise_gain: f64,
    /// Crop offset into the noise, when the noise was longer than the signal.
    pub noise_offset: Option<usize>,
    /// Gain applied to the mixture to bring its peak back to 1.
    pub rescale_gain: Option<f64>,
}

/// Tiles or crops `noise` to exactly `len` samples.
///
/// Longer noise is cropped at an offset drawn from `rng`.
pub(crate) fn fit_noise<R: Rng + ?Sized>(noise: &[f32], len: usize, rng: &mut R) -> (Vec<f64>, Option<usize>) {
    use std::cmp::Ordering;
    match noise.len().cmp(&len) {
        Ordering::Equal => (noise.iter().map(|&s| s as f64).collect(), None),
        Ordering::Greater => {
            let offset = rng.random_range(0..=noise.len() - len);
            (noise[offset..offset + len].iter().map(|&s| s as f64).collect(), Some(offset))
        }
        Ordering::Less => (noise.iter().cycle().take(len).map(|&s| s as f64).collect(), None),
    }
}

pub(crate) struct RawMix {
    pub samples: Vec<f64>,
    pub noise_gain: f64,
    pub noise_offset: Option<usize>,
}

pub(crate) fn mix_raw<R: Rng + ?Sized>(
    signal: &[f64],
    noise: &AudioClip,
    snr_db: f64,
    rng: &mut R,
) -> Result<RawMix, AugmentError> {
    let (fitted, noise_offset) = fit_noise(noise.samples(), signal.len(), rng);
    let noise_rms = rms_f64(&fitted);
    if noise_rms == 0.0 {
        return Err(AugmentError::SilentNoise);
    }
    let noise_gain = rms_f64(signal) / noise_rms * 10f64.powf(-snr_db / 20.0);
    let samples = signal
        .iter()
        .zip(&fitted)
        .map(|(s, n)| s + noise_gain * n)
        .collect();
    Ok(RawMix {
        samples,
        noise_gain,
        noise_offset,
    })
}

/// Adds `noise` to `signal` so that `20 log10(rms(signal) / rms(noise'))`
/// equals `snr_db`, where `noise'` is the scaled noise actually added.
///
/// Noise shorter than the signal is looped; longer noise is cropped at an
/// offset drawn from `rng`. If the mixture peaks above 1 it is rescaled and
/// the gain reported.
pub fn mix_at_snr<R: Rng + ?Sized>(
    signal: &AudioClip,
    noise: &AudioClip,
    snr_db: f64,
    rng: &mut R,
) -> Result<MixOutcome, AugmentError> {
    if signal.sample_rate() != noise.sample_rate() {
        return Err(AugmentError::RateMismatch {
            signal: signal.sample_rate(),
            other: noise.sample_rate(),
        });
    }
    let raw = mix_raw(&signal.to_f64(), noise, snr_db, rng)?;
    let (clip, rescale_gain) = finish(&raw.samples, signal.sample_rate())?;
    Ok(MixOutcome {
        clip,
        noise_gain: raw.noise_gain,
        noise_offset: raw.noise_offset,
        rescale_gain,
    })
}
