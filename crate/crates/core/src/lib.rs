//! Speech-corpus augmentation toolkit.
//!
//! The crate is organised around the stages of an ASR data-augmentation
//! pipeline:
//!
//! - [`audio`]: WAV I/O and signal primitives (resampling, RMS, peak
//!   normalisation, silence trimming) plus the preprocessing chain built on
//!   them.
//! - [`augment`]: additive noise at a calibrated SNR, room-impulse-response
//!   convolution, pitch shifting and the per-item stochastic policy that
//!   selects among them.
//! - [`synth`]: synthesis-control sampling and the TTS / voice-conversion
//!   adapter boundary used to generate synthetic corpora.
//! - [`corpus`]: manifests, preprocessing orchestration, merging and
//!   experiment recipes.
//! - [`eval`]: text normalisation, word error rate and report tables.

pub mod audio;
pub mod augment;
pub mod corpus;
pub mod eval;
mod exec;
mod process;
pub mod rng;
pub mod synth;

pub use audio::{AudioClip, AudioError, PreprocessConfig, WavEncoding};
pub use augment::{AugmentError, AugmentationPolicy};
pub use corpus::{CorpusError, Manifest, Origin, Split, Utterance};
pub use eval::{EvalError, WerReport, WerTable};
pub use synth::{SynthError, SynthesisControls};
