//! Audio clips and the signal-level primitives used by preprocessing.

mod resample;
mod wav;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use resample::resample;
pub(crate) use resample::resample_by_step;
pub use wav::{load_wav, load_wav_bytes, probe_duration, save_wav, save_wav_bytes, WavEncoding};

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("failed to access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed WAV data: {0}")]
    Malformed(String),
    #[error("unsupported WAV encoding: {encoding}")]
    UnsupportedEncoding { encoding: String },
    #[error("sample {index} is {value}, outside [-1, 1]; normalize before saving")]
    OutOfRange { index: usize, value: f32 },
    #[error("invalid sample rate {0}")]
    InvalidRate(u32),
    #[error("clip has no samples")]
    Empty,
    #[error("clip contains a non-finite sample at index {0}")]
    NonFinite(usize),
    #[error("silent input")]
    SilentInput,
    #[error("no speech detected")]
    NoSpeech,
    #[error("invalid preprocessing config: {0}")]
    InvalidConfig(String),
}

/// Mono floating-point audio at a fixed sample rate.
///
/// Samples are finite and the buffer is never empty. Values normally lie in
/// `[-1, 1]`; intermediate results of mixing may exceed that range and are
/// rescaled before they are handed back to callers.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: Vec<f32>,
    sample_rate: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f32>, sample_rate: u32) -> Result<Self, AudioError> {
        if sample_rate == 0 {
            return Err(AudioError::InvalidRate(sample_rate));
        }
        if samples.is_empty() {
            return Err(AudioError::Empty);
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(AudioError::NonFinite(i));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub(crate) fn from_f64(samples: &[f64], sample_rate: u32) -> Result<Self, AudioError> {
        Self::new(samples.iter().map(|&s| s as f32).collect(), sample_rate)
    }

    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f32> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    /// Always false for a constructed clip; present for API symmetry.
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn peak(&self) -> f32 {
        self.samples.iter().fold(0.0f32, |m, s| m.max(s.abs()))
    }

    pub(crate) fn to_f64(&self) -> Vec<f64> {
        self.samples.iter().map(|&s| s as f64).collect()
    }
}

pub fn rms(clip: &AudioClip) -> f64 {
    rms_of(clip.samples().iter().map(|&s| s as f64), clip.len())
}

pub(crate) fn rms_f64(samples: &[f64]) -> f64 {
    rms_of(samples.iter().copied(), samples.len())
}

fn rms_of(samples: impl Iterator<Item = f64>, len: usize) -> f64 {
    if len == 0 {
        return 0.0;
    }
    let sum: f64 = samples.map(|s| s * s).sum();
    (sum / len as f64).sqrt()
}

pub fn db_to_amplitude(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

/// Scales the clip so its largest absolute sample equals `target_dbfs`.
pub fn peak_normalize(clip: &AudioClip, target_dbfs: f64) -> Result<AudioClip, AudioError> {
    let peak = clip.peak() as f64;
    if peak == 0.0 {
        return Err(AudioError::SilentInput);
    }
    let gain = db_to_amplitude(target_dbfs) / peak;
    let samples = clip
        .samples()
        .iter()
        .map(|&s| (s as f64 * gain) as f32)
        .collect();
    AudioClip::new(samples, clip.sample_rate())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessConfig {
    pub target_rate: u32,
    pub peak_target_dbfs: f64,
    pub silence_threshold_dbfs: f64,
    pub silence_pad_ms: u32,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            target_rate: 16_000,
            peak_target_dbfs: -1.0,
            silence_threshold_dbfs: -40.0,
            silence_pad_ms: 200,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<(), AudioError> {
        if self.target_rate == 0 {
            return Err(AudioError::InvalidConfig("target_rate must be positive".into()));
        }
        if !(self.peak_target_dbfs <= 0.0) {
            return Err(AudioError::InvalidConfig(format!(
                "peak_target_dbfs must be <= 0, got {}",
                self.peak_target_dbfs
            )));
        }
        if !self.silence_threshold_dbfs.is_finite() {
            return Err(AudioError::InvalidConfig(
                "silence_threshold_dbfs must be finite".into(),
            ));
        }
        Ok(())
    }
}

const FRAME_MS: u32 = 20;
const HOP_MS: u32 = 10;

fn ms_to_samples(ms: u32, rate: u32) -> usize {
    (ms as u64 * rate as u64 / 1000) as usize
}

/// Half-open sample range `[start, end)` that survives silence trimming.
pub fn speech_bounds(clip: &AudioClip, config: &PreprocessConfig) -> Result<(usize, usize), AudioError> {
    let rate = clip.sample_rate();
    let frame = ms_to_samples(FRAME_MS, rate).max(1);
    let hop = ms_to_samples(HOP_MS, rate).max(1);
    let pad = ms_to_samples(config.silence_pad_ms, rate);
    let threshold = 10f64.powf(config.silence_threshold_dbfs / 10.0);
    let samples = clip.samples();
    let len = samples.len();

    // Full frames only; a clip shorter than one frame is a single frame.
    let frame_starts: Vec<usize> = if len <= frame {
        vec![0]
    } else {
        (0..=(len - frame) / hop).map(|k| k * hop).collect()
    };
    let loud = |&start: &usize| -> bool {
        let end = (start + frame).min(len);
        let energy: f64 = samples[start..end]
            .iter()
            .map(|&s| (s as f64) * (s as f64))
            .sum::<f64>()
            / (end - start) as f64;
        energy >= threshold
    };

    let first = frame_starts.iter().position(loud).ok_or(AudioError::NoSpeech)?;
    let last = frame_starts.iter().rposition(loud).ok_or(AudioError::NoSpeech)?;

    // The part of an edge frame shared with its quiet neighbour is not speech.
    let speech_start = if first == 0 { 0 } else { frame_starts[first] + hop };
    let speech_end = if last + 1 == frame_starts.len() {
        len
    } else {
        frame_starts[last] + frame.saturating_sub(hop)
    };
    Ok((speech_start.saturating_sub(pad), (speech_end + pad).min(len)))
}

/// Removes leading and trailing low-energy regions, keeping
/// `silence_pad_ms` of context around the retained audio.
///
/// Frames are 20 ms long with a 10 ms hop; a frame is silent when its mean
/// energy is below `silence_threshold_dbfs`.
pub fn trim_silence(clip: &AudioClip, config: &PreprocessConfig) -> Result<AudioClip, AudioError> {
    let (start, end) = speech_bounds(clip, config)?;
    if start == 0 && end == clip.len() {
        return Ok(clip.clone());
    }
    AudioClip::new(clip.samples()[start..end].to_vec(), clip.sample_rate())
}

/// Resample, trim, then peak-normalize.
pub fn preprocess(clip: &AudioClip, config: &PreprocessConfig) -> Result<AudioClip, AudioError> {
    config.validate()?;
    let resampled = resample(clip, config.target_rate)?;
    let trimmed = trim_silence(&resampled, config)?;
    peak_normalize(&trimmed, config.peak_target_dbfs)
}
