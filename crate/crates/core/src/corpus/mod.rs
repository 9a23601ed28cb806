//! Manifests, preprocessing orchestration, merging and experiment recipes.

mod manifest;
mod preprocess;
mod recipe;

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::{probe_duration, AudioError};
use crate::augment::AugmentError;

pub use manifest::{
    cv_id, load_manifest, save_manifest, AugmentationRecord, LoadOptions, Manifest, ManifestFormat, Origin,
    Provenance, Split, SynthesisKind, SynthesisRecord, Utterance,
};
pub use preprocess::{preprocess_corpus, PreprocessOptions, PreprocessOutcome};
pub use recipe::{
    augment_manifest, materialize_recipe, ExperimentRecipe, MaterializeOptions, RecipeComponent, RECIPE_SCHEMA,
};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("failed to access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{}: missing required column '{column}'", path.display())]
    MissingColumn { path: PathBuf, column: String },
    #[error("duplicate utterance id '{id}'{}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    DuplicateId { id: String, line: Option<usize> },
    #[error("invalid utterance '{id}': {reason}")]
    InvalidUtterance { id: String, reason: String },
    #[error("durations unknown for {} utterance(s): {}", .0.len(), .0.join(", "))]
    MissingDurations(Vec<String>),
    #[error("cannot merge manifests with different splits: {0}")]
    MixedSplits(String),
    #[error("nothing to merge")]
    EmptyMerge,
    #[error("audio for '{id}': {source}")]
    Audio {
        id: String,
        #[source]
        source: AudioError,
    },
    #[error("augmenting '{id}': {source}")]
    Augment {
        id: String,
        #[source]
        source: AugmentError,
    },
    #[error(transparent)]
    Policy(AugmentError),
    #[error("invalid recipe {}: {message}", path.display())]
    Recipe { path: PathBuf, message: String },
    #[error("recipe component '{name}' references a missing manifest: {}", path.display())]
    MissingManifest { name: String, path: PathBuf },
}

/// One dropped item in a lossy stage. Serialized as a JSON line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipRecord {
    pub id: String,
    pub stage: String,
    pub reason: String,
}

pub fn write_skip_report(path: &Path, skipped: &[SkipRecord]) -> Result<(), CorpusError> {
    let io = |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut out = BufWriter::new(File::create(path).map_err(io)?);
    for record in skipped {
        let line = serde_json::to_string(record).expect("skip records serialize");
        writeln!(out, "{line}").map_err(io)?;
    }
    out.flush().map_err(io)
}

/// True when `skipped / total` is above `max_fraction`.
pub fn exceeds_skip_threshold(skipped: usize, total: usize, max_fraction: f64) -> bool {
    total > 0 && skipped as f64 / total as f64 > max_fraction
}

/// Total audio duration in hours.
pub fn total_hours(manifest: &Manifest) -> Result<f64, CorpusError> {
    let missing: Vec<String> = manifest
        .utterances()
        .iter()
        .filter(|u| u.duration_s.is_none())
        .map(|u| u.id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(CorpusError::MissingDurations(missing));
    }
    Ok(manifest
        .utterances()
        .iter()
        .filter_map(|u| u.duration_s)
        .sum::<f64>()
        / 3600.0)
}

/// Reads missing durations from the WAV headers.
pub fn fill_durations(manifest: &Manifest) -> Result<Manifest, CorpusError> {
    let mut utterances = manifest.utterances().to_vec();
    for utt in utterances.iter_mut().filter(|u| u.duration_s.is_none()) {
        let d = probe_duration(&manifest.resolve(utt)).map_err(|source| CorpusError::Audio {
            id: utt.id.clone(),
            source,
        })?;
        utt.duration_s = Some(d);
    }
    Manifest::new(manifest.name.clone(), manifest.split, manifest.base_dir.clone(), utterances)
}

/// Concatenates manifests in order.
///
/// An id already taken by an earlier manifest is renamed to
/// `{manifest name}:{id}`.
pub fn merge(manifests: &[Manifest], name: &str) -> Result<Manifest, CorpusError> {
    let first = manifests.first().ok_or(CorpusError::EmptyMerge)?;
    if let Some(other) = manifests.iter().find(|m| m.split != first.split) {
        return Err(CorpusError::MixedSplits(format!(
            "'{}' is {} but '{}' is {}",
            first.name, first.split, other.name, other.split
        )));
    }
    let shared_base = manifests.iter().all(|m| m.base_dir == first.base_dir);

    let mut seen: HashSet<String> = HashSet::new();
    let mut out = Vec::with_capacity(manifests.iter().map(Manifest::len).sum());
    for m in manifests {
        let utterances = if shared_base {
            m.utterances().to_vec()
        } else {
            m.rebased()
        };
        for mut utt in utterances {
            if seen.contains(&utt.id) {
                utt.id = format!("{}:{}", m.name, utt.id);
            }
            if !seen.insert(utt.id.clone()) {
                return Err(CorpusError::DuplicateId { id: utt.id, line: None });
            }
            out.push(utt);
        }
    }
    let base = if shared_base {
        first.base_dir.clone()
    } else {
        PathBuf::new()
    };
    Manifest::new(name, first.split, base, out)
}
