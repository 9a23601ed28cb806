//! Audio augmentation: additive noise, room reverberation and pitch shift.
//!
//! [`draw_plan`] decides, per item and epoch, which methods apply and with
//! which parameters; [`apply_plan`] executes a plan. Plans depend only on
//! `(policy, item_key, epoch)`, so any worker can reproduce any item.

mod convolve;
mod mix;
mod pitch;
mod policy;

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::{AudioClip, AudioError};
use crate::rng::item_rng;

pub use convolve::{convolve_rir, fft_convolve, ConvolveOutcome};
pub use mix::{mix_at_snr, MixOutcome};
pub use pitch::{hop_size, pitch_shift, MAX_SEMITONES};
pub use policy::{
    AugmentationPolicy, ClipSource, NoiseBank, NoiseKind, NoiseSubset, PolicyFile, RirBank, POLICY_SCHEMA,
};

#[derive(Debug, Error)]
pub enum AugmentError {
    #[error("silent noise source")]
    SilentNoise,
    #[error("sample rate mismatch: signal at {signal} Hz, other at {other} Hz")]
    RateMismatch { signal: u32, other: u32 },
    #[error("empty impulse response")]
    EmptyRir,
    #[error("impulse response has zero energy")]
    SilentRir,
    #[error("pitch shift of {0} semitones is out of range")]
    SemitonesOutOfRange(i32),
    #[error("invalid augmentation policy: {0}")]
    InvalidPolicy(String),
    #[error("missing resource: {0}")]
    MissingResource(String),
    #[error("failed to load resource '{id}': {source}")]
    ResourceLoad {
        id: String,
        #[source]
        source: AudioError,
    },
    #[error("invalid resource '{id}': {reason}")]
    ResourceInvalid { id: String, reason: String },
    #[error("{}:{line}: {message}", path.display())]
    Index {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("cannot parse policy {}: {message}", path.display())]
    PolicyParse { path: PathBuf, message: String },
    #[error(transparent)]
    Audio(#[from] AudioError),
}

/// Converts a raw result to a clip, scaling by `1/peak` when the peak
/// exceeds 1. Returns the applied gain, if any.
pub(crate) fn finish(samples: &[f64], rate: u32) -> Result<(AudioClip, Option<f64>), AudioError> {
    let peak = samples.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    if peak > 1.0 {
        let gain = 1.0 / peak;
        let scaled: Vec<f32> = samples
            .iter()
            .map(|&s| ((s * gain) as f32).clamp(-1.0, 1.0))
            .collect();
        Ok((AudioClip::new(scaled, rate)?, Some(gain)))
    } else {
        Ok((AudioClip::from_f64(samples, rate)?, None))
    }
}

/// One step of an augmentation plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum AugmentationInstance {
    AdditiveNoise {
        kind: NoiseKind,
        /// Index into the subset's clip list.
        source: usize,
        snr_db: f64,
        /// Seeds the crop offset when the noise is longer than the signal.
        crop_seed: u64,
    },
    Rir {
        filter: usize,
    },
    PitchShift {
        semitones: i32,
    },
}

/// What was actually applied to one item, in application order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum AppliedAugmentation {
    AdditiveNoise {
        kind: NoiseKind,
        source_id: String,
        snr_db: f64,
    },
    Rir {
        filter_id: String,
    },
    PitchShift {
        semitones: i32,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AppliedAugmentations {
    pub entries: Vec<AppliedAugmentation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rescale_gain: Option<f64>,
}

/// Draws the augmentation plan for one item in one epoch.
///
/// Additive noise, RIR and pitch shift are each included by an independent
/// Bernoulli(`p_select`) trial, in that order.
pub fn draw_plan(
    policy: &AugmentationPolicy,
    item_key: &str,
    epoch: u64,
) -> Result<Vec<AugmentationInstance>, AugmentError> {
    policy.validate()?;
    let mut rng = item_rng(policy.master_seed, "augment", item_key, epoch);
    let mut plan = Vec::with_capacity(3);

    if rng.random_bool(policy.p_select) {
        let kind = NoiseKind::ALL[rng.random_range(0..NoiseKind::ALL.len())];
        let subset = policy.noise.subset(kind);
        if subset.clips.is_empty() {
            return Err(AugmentError::MissingResource(format!(
                "noise subset '{kind}' has no clips"
            )));
        }
        let (lo, hi) = kind.snr_range_db();
        let snr_db = rng.random_range(lo..=hi);
        let source = rng.random_range(0..subset.clips.len());
        let crop_seed = rng.random();
        plan.push(AugmentationInstance::AdditiveNoise {
            kind,
            source,
            snr_db,
            crop_seed,
        });
    }

    if rng.random_bool(policy.p_select) {
        if policy.rirs.is_empty() {
            return Err(AugmentError::MissingResource("RIR bank has no filters".into()));
        }
        let filter = rng.random_range(0..policy.rirs.len());
        plan.push(AugmentationInstance::Rir { filter });
    }

    if rng.random_bool(policy.p_select) {
        let (lo, hi) = policy.semitone_range;
        let semitones = loop {
            let s = rng.random_range(lo..=hi);
            if s != 0 {
                break s;
            }
        };
        plan.push(AugmentationInstance::PitchShift { semitones });
    }

    Ok(plan)
}

/// Applies `plan` to `signal`, resolving sources through `policy`.
///
/// Intermediate results are kept unclipped; the final output is rescaled
/// once if its peak exceeds 1.
pub fn apply_plan(
    signal: &AudioClip,
    plan: &[AugmentationInstance],
    policy: &AugmentationPolicy,
) -> Result<(AudioClip, AppliedAugmentations), AugmentError> {
    if plan.is_empty() {
        return Ok((signal.clone(), AppliedAugmentations::default()));
    }
    let rate = signal.sample_rate();
    let mut samples = signal.to_f64();
    let mut entries = Vec::with_capacity(plan.len());

    for step in plan {
        match *step {
            AugmentationInstance::AdditiveNoise {
                kind,
                source,
                snr_db,
                crop_seed,
            } => {
                let clip_source = policy.noise.subset(kind).clips.get(source).ok_or_else(|| {
                    AugmentError::MissingResource(format!("noise subset '{kind}' has no clip #{source}"))
                })?;
                let noise = clip_source.load(rate)?;
                let mut rng = ChaCha8Rng::seed_from_u64(crop_seed);
                samples = mix::mix_raw(&samples, &noise, snr_db, &mut rng)?.samples;
                entries.push(AppliedAugmentation::AdditiveNoise {
                    kind,
                    source_id: clip_source.id().to_string(),
                    snr_db,
                });
            }
            AugmentationInstance::Rir { filter } => {
                let clip_source = policy
                    .rirs
                    .filters()
                    .get(filter)
                    .ok_or_else(|| AugmentError::MissingResource(format!("RIR #{filter}")))?;
                let rir = clip_source.load(rate)?;
                samples = convolve::reverberate_raw(&samples, &rir.to_f64())?;
                entries.push(AppliedAugmentation::Rir {
                    filter_id: clip_source.id().to_string(),
                });
            }
            AugmentationInstance::PitchShift { semitones } => {
                if semitones.abs() > MAX_SEMITONES {
                    return Err(AugmentError::SemitonesOutOfRange(semitones));
                }
                samples = pitch::pitch_shift_raw(&samples, rate, semitones);
                entries.push(AppliedAugmentation::PitchShift { semitones });
            }
        }
    }

    let (clip, rescale_gain) = finish(&samples, rate)?;
    Ok((clip, AppliedAugmentations { entries, rescale_gain }))
}
