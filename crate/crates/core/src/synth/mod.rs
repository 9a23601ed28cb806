//! Synthesis controls and the adapters that drive external TTS and voice
//! conversion systems to build synthetic corpora.

mod adapter;
mod controls;
mod generate;

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::audio::{load_wav, AudioError};
use crate::corpus::CorpusError;

pub use adapter::{
    convert_voice, stub_tone_hz, synthesize, AdapterMode, AdapterOutput, AdapterSpec, AdapterTask,
};
pub use controls::{sample_controls, SynthesisControls, LENGTH_SCALE_RANGE, TEMPERATURE_RANGE};
pub use generate::{
    clone_corpus, draw_tts_speaker, draw_vc_speakers, gen_tts_dataset, gen_vc_dataset, GenerationOptions, GenerationOutcome, DEFAULT_TRANSFERS,
};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("text is empty after normalization")]
    EmptyText,
    #[error("adapter timed out after {after_s} s")]
    Timeout { after_s: f64 },
    #[error("adapter exited with {status}: {stderr}")]
    AdapterExit { status: String, stderr: String },
    #[error("cannot start adapter '{program}': {message}")]
    Spawn { program: String, message: String },
    #[error("adapter returned HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("adapter request failed: {0}")]
    Transport(String),
    #[error("adapter wrote no audio: {0}")]
    MissingOutput(String),
    #[error("adapter produced invalid audio: {0}")]
    InvalidOutput(#[source] AudioError),
    #[error("adapter configuration: {0}")]
    AdapterConfig(String),
    #[error("failed to access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("speaker pool: {0}")]
    Pool(String),
    #[error("transfers must be at least 1")]
    NoTransfers,
    #[error("speaker pool has {pool} speaker(s) but {transfers} distinct transfers were requested")]
    PoolTooSmall { pool: usize, transfers: usize },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("{failed} of {total} items failed, above the allowed fraction {max_fraction}")]
    TooManyFailures {
        failed: usize,
        total: usize,
        max_fraction: f64,
        outcome: Box<GenerationOutcome>,
    },
}

/// A voice, identified by a reference recording.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpeakerRef {
    pub speaker_id: String,
    pub reference_wav: PathBuf,
}

impl SpeakerRef {
    pub fn new(speaker_id: impl Into<String>, reference_wav: impl Into<PathBuf>) -> Self {
        Self {
            speaker_id: speaker_id.into(),
            reference_wav: reference_wav.into(),
        }
    }
}

/// Nonempty set of voices with unique ids.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeakerPool {
    refs: Vec<SpeakerRef>,
}

impl SpeakerPool {
    pub fn new(refs: Vec<SpeakerRef>) -> Result<Self, SynthError> {
        if refs.is_empty() {
            return Err(SynthError::Pool("no speakers".into()));
        }
        let mut seen = HashSet::new();
        for r in &refs {
            if !seen.insert(r.speaker_id.as_str()) {
                return Err(SynthError::Pool(format!("duplicate speaker id '{}'", r.speaker_id)));
            }
        }
        Ok(Self { refs })
    }

    /// Reads `speaker_id<TAB>reference.wav` lines and checks every reference
    /// is a readable clip. Relative paths resolve against the file.
    pub fn load(path: &Path) -> Result<Self, SynthError> {
        let text = fs::read_to_string(path).map_err(|source| SynthError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let root = path.parent().unwrap_or(Path::new("."));
        let mut refs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') || (i == 0 && line.starts_with("speaker_id\t")) {
                continue;
            }
            let (id, wav) = line
                .split_once('\t')
                .ok_or_else(|| SynthError::Pool(format!("{}:{}: expected speaker_id<TAB>path", path.display(), i + 1)))?;
            let wav = root.join(wav.trim());
            load_wav(&wav).map_err(|e| {
                SynthError::Pool(format!("{}:{}: reference for '{id}': {e}", path.display(), i + 1))
            })?;
            refs.push(SpeakerRef::new(id.trim(), wav));
        }
        Self::new(refs)
    }

    pub fn refs(&self) -> &[SpeakerRef] {
        &self.refs
    }

    pub fn len(&self) -> usize {
        self.refs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.refs.is_empty()
    }
}
