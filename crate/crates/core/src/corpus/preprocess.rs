use std::fs;
use std::path::PathBuf;

use crate::audio::{load_wav, preprocess, save_wav, AudioError, PreprocessConfig, WavEncoding};
use crate::exec::{clip_file_name, ordered_map};

use super::{write_skip_report, CorpusError, Manifest, SkipRecord, Utterance};

#[derive(Debug, Clone)]
pub struct PreprocessOptions {
    pub out_dir: PathBuf,
    pub workers: usize,
    pub encoding: WavEncoding,
}

impl PreprocessOptions {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        Self {
            out_dir: out_dir.into(),
            workers: 1,
            encoding: WavEncoding::Float32,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PreprocessOutcome {
    pub manifest: Manifest,
    pub skipped: Vec<SkipRecord>,
}

/// Resamples, trims and normalizes every clip, writing results under
/// `out_dir/audio/`.
///
/// Clips that cannot be read or processed (for example all-silent ones) are
/// dropped and listed in `out_dir/skipped.jsonl`.
pub fn preprocess_corpus(
    manifest: &Manifest,
    config: &PreprocessConfig,
    options: &PreprocessOptions,
) -> Result<PreprocessOutcome, CorpusError> {
    config.validate().map_err(|source| CorpusError::Audio {
        id: "<config>".into(),
        source,
    })?;
    let audio_dir = options.out_dir.join("audio");
    fs::create_dir_all(&audio_dir).map_err(|source| CorpusError::Io {
        path: audio_dir.clone(),
        source,
    })?;
    let out_dir = fs::canonicalize(&options.out_dir).map_err(|source| CorpusError::Io {
        path: options.out_dir.clone(),
        source,
    })?;

    let results = ordered_map(options.workers, manifest.utterances(), |i, utt| {
        let clip = match load_wav(&manifest.resolve(utt)).and_then(|c| preprocess(&c, config)) {
            Ok(c) => c,
            Err(e) => return Ok(Err(skip(utt, &e))),
        };
        let rel = PathBuf::from("audio").join(clip_file_name(i, &utt.id));
        save_wav(&clip, &out_dir.join(&rel), options.encoding).map_err(|source| CorpusError::Audio {
            id: utt.id.clone(),
            source,
        })?;
        Ok(Ok(Utterance {
            audio_path: rel,
            duration_s: Some(clip.duration_s()),
            ..utt.clone()
        }))
    });

    let mut kept = Vec::with_capacity(results.len());
    let mut skipped = Vec::new();
    for result in results {
        match result? {
            Ok(utt) => kept.push(utt),
            Err(record) => skipped.push(record),
        }
    }
    write_skip_report(&out_dir.join("skipped.jsonl"), &skipped)?;
    let manifest = Manifest::new(manifest.name.clone(), manifest.split, out_dir, kept)?;
    Ok(PreprocessOutcome { manifest, skipped })
}

fn skip(utt: &Utterance, error: &AudioError) -> SkipRecord {
    SkipRecord {
        id: utt.id.clone(),
        stage: "preprocess".into(),
        reason: error.to_string(),
    }
}
