//! Corpus-scale generation: cloning a corpus, GEN_TTS and GEN_VC.
//!
//! Every item's speaker choice and controls come from the master seed and
//! the item's id, so runs are reproducible and independent of worker count.
//! Completed items are appended to `checkpoint.jsonl` in the output
//! directory; with `resume` set they are reused instead of re-synthesized.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::seq::index;
use rand::Rng;

use crate::audio::{load_wav, save_wav, WavEncoding};
use crate::corpus::{
    exceeds_skip_threshold, write_skip_report, Manifest, Origin, Provenance, SkipRecord, SynthesisKind,
    SynthesisRecord, Utterance,
};
use crate::exec::{clip_file_name, ordered_map};
use crate::rng::item_rng;

use super::{convert_voice, sample_controls, synthesize, AdapterSpec, AdapterTask, SpeakerPool, SpeakerRef, SynthError};

pub const DEFAULT_TRANSFERS: usize = 5;

#[derive(Debug, Clone)]
pub struct GenerationOptions {
    pub out_dir: PathBuf,
    pub master_seed: u64,
    pub working_rate: u32,
    pub workers: usize,
    pub resume: bool,
    /// Largest tolerated fraction of failed items.
    pub max_failure_fraction: f64,
    pub encoding: WavEncoding,
    /// Output manifest name; defaults to the operation's name.
    pub name: Option<String>,
}

impl GenerationOptions {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        Self {
            out_dir: out_dir.into(),
            master_seed: 0,
            working_rate: 16_000,
            workers: 1,
            resume: false,
            max_failure_fraction: 0.01,
            encoding: WavEncoding::Float32,
            name: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GenerationOutcome {
    pub manifest: Manifest,
    pub skipped: Vec<SkipRecord>,
    /// Adapter invocations made by this run (reused items excluded).
    pub adapter_calls: usize,
}

struct Job<'a> {
    id: String,
    source: &'a Utterance,
    source_audio: PathBuf,
    speaker: SpeakerRef,
    record: SynthesisRecord,
}

/// Re-synthesizes every utterance in its own speaker's voice, using the
/// utterance's audio as the speaker reference.
pub fn clone_corpus(
    manifest: &Manifest,
    adapter: &AdapterSpec,
    options: &GenerationOptions,
) -> Result<GenerationOutcome, SynthError> {
    let jobs = manifest
        .utterances()
        .iter()
        .map(|utt| {
            let speaker = SpeakerRef::new(utt.speaker_id.clone(), manifest.resolve(utt));
            tts_job(manifest, utt, speaker, options.master_seed)
        })
        .collect();
    run_jobs(jobs, AdapterTask::Tts, adapter, manifest, "clone", options)
}

/// Synthesizes every sentence with a speaker drawn uniformly from `pool`.
pub fn gen_tts_dataset(
    sentences: &Manifest,
    pool: &SpeakerPool,
    adapter: &AdapterSpec,
    options: &GenerationOptions,
) -> Result<GenerationOutcome, SynthError> {
    let jobs = sentences
        .utterances()
        .iter()
        .map(|utt| {
            let speaker = draw_tts_speaker(pool, &utt.id, options.master_seed).clone();
            tts_job(sentences, utt, speaker, options.master_seed)
        })
        .collect();
    run_jobs(jobs, AdapterTask::Tts, adapter, sentences, "gen_tts", options)
}

/// Converts every utterance to `transfers` distinct voices from `pool`.
pub fn gen_vc_dataset(
    corpus: &Manifest,
    pool: &SpeakerPool,
    adapter: &AdapterSpec,
    transfers: usize,
    options: &GenerationOptions,
) -> Result<GenerationOutcome, SynthError> {
    if transfers == 0 {
        return Err(SynthError::NoTransfers);
    }
    if pool.len() < transfers {
        return Err(SynthError::PoolTooSmall {
            pool: pool.len(),
            transfers,
        });
    }
    let mut jobs = Vec::with_capacity(corpus.len() * transfers);
    for utt in corpus.utterances() {
        for (k, speaker) in draw_vc_speakers(pool, &utt.id, transfers, options.master_seed)
            .into_iter()
            .enumerate()
        {
            let speaker = speaker.clone();
            jobs.push(Job {
                id: format!("{}.vc{k}.{}", utt.id, speaker.speaker_id),
                source: utt,
                source_audio: corpus.resolve(utt),
                record: SynthesisRecord {
                    kind: SynthesisKind::Vc,
                    source_id: utt.id.clone(),
                    speaker_id: speaker.speaker_id.clone(),
                    controls: None,
                },
                speaker,
            });
        }
    }
    run_jobs(jobs, AdapterTask::Vc, adapter, corpus, "gen_vc", options)
}

/// The pool speaker that voices sentence `item_id` in GEN_TTS.
pub fn draw_tts_speaker<'p>(pool: &'p SpeakerPool, item_id: &str, master_seed: u64) -> &'p SpeakerRef {
    let mut rng = item_rng(master_seed, "tts-speaker", item_id, 0);
    &pool.refs()[rng.random_range(0..pool.len())]
}

/// The `transfers` distinct pool speakers that item `item_id` is converted
/// to in GEN_VC. Panics if the pool is smaller than `transfers`.
pub fn draw_vc_speakers<'p>(pool: &'p SpeakerPool, item_id: &str, transfers: usize, master_seed: u64) -> Vec<&'p SpeakerRef> {
    let mut rng = item_rng(master_seed, "vc-speakers", item_id, 0);
    index::sample(&mut rng, pool.len(), transfers)
        .into_iter()
        .map(|i| &pool.refs()[i])
        .collect()
}

fn tts_job<'a>(manifest: &Manifest, utt: &'a Utterance, speaker: SpeakerRef, seed: u64) -> Job<'a> {
    let id = format!("{}.tts.{}", utt.id, speaker.speaker_id);
    Job {
        record: SynthesisRecord {
            kind: SynthesisKind::Tts,
            source_id: utt.id.clone(),
            speaker_id: speaker.speaker_id.clone(),
            controls: Some(sample_controls(&id, seed)),
        },
        id,
        source: utt,
        source_audio: manifest.resolve(utt),
        speaker,
    }
}

enum JobResult {
    Done(Utterance),
    Skipped(SkipRecord),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> SynthError + '_ {
    move |source| SynthError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn read_checkpoint(path: &Path) -> Result<HashMap<String, Utterance>, SynthError> {
    let mut done = HashMap::new();
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(done),
        Err(e) => return Err(io_err(path)(e)),
    };
    for line in BufReader::new(file).lines() {
        let line = line.map_err(io_err(path))?;
        // a torn final line from an interrupted run is simply redone
        if let Ok(utt) = serde_json::from_str::<Utterance>(&line) {
            done.insert(utt.id.clone(), utt);
        }
    }
    Ok(done)
}

/// Replaces the completion-ordered checkpoint with one in input order.
fn rewrite_checkpoint(path: &Path, utterances: &[Utterance]) -> Result<(), SynthError> {
    let tmp = path.with_extension("jsonl.tmp");
    let mut text = String::new();
    for utt in utterances {
        text.push_str(&serde_json::to_string(utt).expect("utterances serialize"));
        text.push('\n');
    }
    fs::write(&tmp, text).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

fn run_jobs(
    jobs: Vec<Job<'_>>,
    task: AdapterTask,
    adapter: &AdapterSpec,
    input: &Manifest,
    default_name: &str,
    options: &GenerationOptions,
) -> Result<GenerationOutcome, SynthError> {
    adapter.validate(task)?;
    let audio_dir = options.out_dir.join("audio");
    fs::create_dir_all(&audio_dir).map_err(io_err(&audio_dir))?;
    let out_dir = fs::canonicalize(&options.out_dir).map_err(io_err(&options.out_dir))?;

    let checkpoint_path = out_dir.join("checkpoint.jsonl");
    let finished = if options.resume {
        read_checkpoint(&checkpoint_path)?
    } else {
        HashMap::new()
    };
    let checkpoint = OpenOptions::new()
        .create(true)
        .append(true)
        .truncate(false)
        .open(&checkpoint_path)
        .map_err(io_err(&checkpoint_path))?;
    if !options.resume {
        checkpoint.set_len(0).map_err(io_err(&checkpoint_path))?;
    }
    let checkpoint = Mutex::new(checkpoint);
    let calls = AtomicUsize::new(0);

    let results = ordered_map(options.workers, &jobs, |i, job| -> Result<JobResult, SynthError> {
        if let Some(prev) = finished.get(&job.id) {
            if prev.synthesis() == Some(&job.record) && out_dir.join(&prev.audio_path).is_file() {
                return Ok(JobResult::Done(prev.clone()));
            }
        }
        calls.fetch_add(1, Ordering::Relaxed);
        let produced = match task {
            AdapterTask::Tts => {
                let controls = job.record.controls.unwrap_or_default();
                synthesize(adapter, &job.source.transcript, &job.speaker, &controls, options.working_rate)
            }
            AdapterTask::Vc => load_wav(&job.source_audio)
                .map_err(SynthError::InvalidOutput)
                .and_then(|src| convert_voice(adapter, &src, &job.speaker, options.working_rate)),
        };
        let output = match produced {
            Ok(o) => o,
            Err(e) => {
                return Ok(JobResult::Skipped(SkipRecord {
                    id: job.id.clone(),
                    stage: format!("generate-{task}"),
                    reason: e.to_string(),
                }))
            }
        };
        let rel = PathBuf::from("audio").join(clip_file_name(i, &job.id));
        save_wav(&output.clip, &out_dir.join(&rel), options.encoding).map_err(SynthError::InvalidOutput)?;
        let utt = Utterance {
            id: job.id.clone(),
            audio_path: rel,
            transcript: job.source.transcript.clone(),
            speaker_id: job.speaker.speaker_id.clone(),
            language: job.source.language.clone(),
            origin: match task {
                AdapterTask::Tts => Origin::Tts,
                AdapterTask::Vc => Origin::Vc,
            },
            duration_s: Some(output.clip.duration_s()),
            provenance: Some(Provenance {
                synthesis: Some(job.record.clone()),
                augmentation: None,
            }),
        };
        let line = serde_json::to_string(&utt).expect("utterances serialize");
        let mut file = checkpoint.lock().unwrap_or_else(|p| p.into_inner());
        writeln!(file, "{line}").map_err(io_err(&checkpoint_path))?;
        Ok(JobResult::Done(utt))
    });

    let mut utterances = Vec::with_capacity(results.len());
    let mut skipped = Vec::new();
    for result in results {
        match result? {
            JobResult::Done(u) => utterances.push(u),
            JobResult::Skipped(s) => skipped.push(s),
        }
    }
    drop(checkpoint);
    rewrite_checkpoint(&checkpoint_path, &utterances)?;
    write_skip_report(&out_dir.join("skipped.jsonl"), &skipped)?;
    let name = options.name.clone().unwrap_or_else(|| default_name.to_string());
    let manifest = Manifest::new(name, input.split, out_dir, utterances)?;
    let outcome = GenerationOutcome {
        manifest,
        skipped,
        adapter_calls: calls.into_inner(),
    };
    if exceeds_skip_threshold(outcome.skipped.len(), jobs.len(), options.max_failure_fraction) {
        return Err(SynthError::TooManyFailures {
            failed: outcome.skipped.len(),
            total: jobs.len(),
            max_fraction: options.max_failure_fraction,
            outcome: Box::new(outcome),
        });
    }
    Ok(outcome)
}
