use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::augment::AppliedAugmentations;
use crate::synth::SynthesisControls;

use super::CorpusError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Human,
    Tts,
    Vc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    #[default]
    Train,
    Dev,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        })
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "dev" | "development" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SynthesisKind {
    Tts,
    Vc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisRecord {
    pub kind: SynthesisKind,
    /// Id of the utterance whose text (TTS) or audio (VC) was used.
    pub source_id: String,
    /// Voice the adapter was asked to produce.
    pub speaker_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub controls: Option<SynthesisControls>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentationRecord {
    pub epoch: u64,
    #[serde(flatten)]
    pub applied: AppliedAugmentations,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthesis: Option<SynthesisRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub augmentation: Option<AugmentationRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Utterance {
    pub id: String,
    pub audio_path: PathBuf,
    pub transcript: String,
    pub speaker_id: String,
    pub language: String,
    pub origin: Origin,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl Utterance {
    pub fn synthesis(&self) -> Option<&SynthesisRecord> {
        self.provenance.as_ref().and_then(|p| p.synthesis.as_ref())
    }

    fn check(&self) -> Result<(), String> {
        if self.id.is_empty() {
            return Err("empty id".into());
        }
        if let Some(d) = self.duration_s {
            if !(d > 0.0 && d.is_finite()) {
                return Err(format!("duration_s must be positive, got {d}"));
            }
        }
        match (self.origin, self.synthesis().map(|s| s.kind)) {
            (Origin::Human, None) | (Origin::Tts, Some(SynthesisKind::Tts)) | (Origin::Vc, Some(SynthesisKind::Vc)) => {
                Ok(())
            }
            (Origin::Human, Some(_)) => Err("human utterance carries a synthesis record".into()),
            (origin, None) => Err(format!("{origin:?} utterance lacks a synthesis record")),
            (origin, Some(kind)) => Err(format!("{origin:?} utterance has a {kind:?} synthesis record")),
        }
    }
}

/// An ordered, split-labelled collection of utterances.
///
/// Relative audio paths resolve against `base_dir`.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub name: String,
    pub split: Split,
    pub base_dir: PathBuf,
    utterances: Vec<Utterance>,
}

impl Manifest {
    /// Validates id uniqueness and the origin/provenance pairing.
    pub fn new(
        name: impl Into<String>,
        split: Split,
        base_dir: impl Into<PathBuf>,
        utterances: Vec<Utterance>,
    ) -> Result<Self, CorpusError> {
        let mut seen = HashSet::with_capacity(utterances.len());
        for utt in &utterances {
            utt.check().map_err(|reason| CorpusError::InvalidUtterance {
                id: utt.id.clone(),
                reason,
            })?;
            if !seen.insert(utt.id.as_str()) {
                return Err(CorpusError::DuplicateId {
                    id: utt.id.clone(),
                    line: None,
                });
            }
        }
        Ok(Self {
            name: name.into(),
            split,
            base_dir: base_dir.into(),
            utterances,
        })
    }

    pub fn empty(name: impl Into<String>, split: Split) -> Self {
        Self {
            name: name.into(),
            split,
            base_dir: PathBuf::new(),
            utterances: Vec::new(),
        }
    }

    pub fn utterances(&self) -> &[Utterance] {
        &self.utterances
    }

    pub fn into_utterances(self) -> Vec<Utterance> {
        self.utterances
    }

    pub fn len(&self) -> usize {
        self.utterances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utterances.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Utterance> {
        self.utterances.iter().find(|u| u.id == id)
    }

    pub fn resolve(&self, utt: &Utterance) -> PathBuf {
        self.base_dir.join(&utt.audio_path)
    }

    /// Same utterances with every audio path made absolute (or at least
    /// base-relative), so the manifest no longer depends on `base_dir`.
    pub(crate) fn rebased(&self) -> Vec<Utterance> {
        self.utterances
            .iter()
            .map(|u| Utterance {
                audio_path: self.resolve(u),
                ..u.clone()
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManifestFormat {
    CvTsv,
    Jsonl,
}

impl FromStr for ManifestFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cv_tsv" | "tsv" => Ok(Self::CvTsv),
            "jsonl" => Ok(Self::Jsonl),
            other => Err(format!("unknown manifest format '{other}' (expected cv_tsv or jsonl)")),
        }
    }
}

impl fmt::Display for ManifestFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::CvTsv => "cv_tsv",
            Self::Jsonl => "jsonl",
        })
    }
}

#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    pub split: Split,
    /// Defaults to the file stem.
    pub name: Option<String>,
    /// Language for TSV rows without a `locale` column.
    pub language: Option<String>,
    /// Directory audio paths are relative to. Defaults to the manifest's
    /// directory, or its `clips/` subdirectory for Common Voice TSV files.
    pub audio_root: Option<PathBuf>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn absolute_dir(path: &Path) -> PathBuf {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::canonicalize(dir).unwrap_or_else(|_| dir.to_path_buf())
}

pub fn load_manifest(path: &Path, format: ManifestFormat, options: &LoadOptions) -> Result<Manifest, CorpusError> {
    let name = options.name.clone().unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "manifest".into())
    });
    match format {
        ManifestFormat::Jsonl => {
            let base = options.audio_root.clone().unwrap_or_else(|| absolute_dir(path));
            let utterances = read_jsonl(path)?;
            Manifest::new(name, options.split, base, utterances)
        }
        ManifestFormat::CvTsv => {
            let dir = absolute_dir(path);
            let base = options.audio_root.clone().unwrap_or_else(|| {
                let clips = dir.join("clips");
                if clips.is_dir() {
                    clips
                } else {
                    dir.clone()
                }
            });
            let mut utterances = read_cv_tsv(path, options.language.as_deref())?;
            apply_duration_sidecar(&dir.join("clip_durations.tsv"), &mut utterances)?;
            Manifest::new(name, options.split, base, utterances)
        }
    }
}

fn read_jsonl(path: &Path) -> Result<Vec<Utterance>, CorpusError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let utt: Utterance = serde_json::from_str(&line).map_err(|e| CorpusError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        if !seen.insert(utt.id.clone()) {
            return Err(CorpusError::DuplicateId {
                id: utt.id,
                line: Some(i + 1),
            });
        }
        out.push(utt);
    }
    Ok(out)
}

fn tsv_reader(path: &Path) -> Result<csv::Reader<File>, CorpusError> {
    let file = File::open(path).map_err(io_err(path))?;
    Ok(csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .quoting(false)
        .flexible(true)
        .from_reader(file))
}

fn column(headers: &csv::StringRecord, name: &str, path: &Path) -> Result<usize, CorpusError> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| CorpusError::MissingColumn {
            path: path.to_path_buf(),
            column: name.to_string(),
        })
}

/// Utterance id for a Common Voice clip path: the file name without extension.
pub fn cv_id(clip_path: &str) -> String {
    Path::new(clip_path)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| clip_path.to_string())
}

fn read_cv_tsv(path: &Path, language: Option<&str>) -> Result<Vec<Utterance>, CorpusError> {
    let mut reader = tsv_reader(path)?;
    let headers = reader
        .headers()
        .map_err(|e| CorpusError::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let client_col = column(&headers, "client_id", path)?;
    let path_col = column(&headers, "path", path)?;
    let sentence_col = column(&headers, "sentence", path)?;
    let locale_col = headers.iter().position(|h| h == "locale");

    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for record in reader.records() {
        let record = record.map_err(|e| CorpusError::Parse {
            path: path.to_path_buf(),
            line: e.position().map(|p| p.line() as usize).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let field = |col: usize, name: &str| {
            record.get(col).ok_or_else(|| CorpusError::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("row has no '{name}' field"),
            })
        };
        let clip = field(path_col, "path")?;
        if clip.is_empty() {
            return Err(CorpusError::Parse {
                path: path.to_path_buf(),
                line,
                message: "empty 'path' field".into(),
            });
        }
        let id = cv_id(clip);
        if !seen.insert(id.clone()) {
            return Err(CorpusError::DuplicateId { id, line: Some(line) });
        }
        let language = locale_col
            .and_then(|c| record.get(c))
            .filter(|l| !l.is_empty())
            .or(language)
            .unwrap_or("und")
            .to_string();
        out.push(Utterance {
            id,
            audio_path: PathBuf::from(clip),
            transcript: field(sentence_col, "sentence")?.to_string(),
            speaker_id: field(client_col, "client_id")?.to_string(),
            language,
            origin: Origin::Human,
            duration_s: None,
            provenance: None,
        });
    }
    Ok(out)
}

/// Fills durations from a Common Voice `clip_durations.tsv` (milliseconds),
/// when present.
fn apply_duration_sidecar(path: &Path, utterances: &mut [Utterance]) -> Result<(), CorpusError> {
    if !path.is_file() {
        return Ok(());
    }
    let mut reader = tsv_reader(path)?;
    let mut durations = HashMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| CorpusError::Parse {
            path: path.to_path_buf(),
            line: e.position().map(|p| p.line() as usize).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let (Some(clip), Some(ms)) = (record.get(0), record.get(1)) else {
            continue;
        };
        let ms: f64 = ms.trim().parse().map_err(|_| CorpusError::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("invalid duration '{ms}'"),
        })?;
        durations.insert(cv_id(clip), ms / 1000.0);
    }
    for utt in utterances.iter_mut() {
        if let Some(&d) = durations.get(&utt.id) {
            if d > 0.0 {
                utt.duration_s = Some(d);
            }
        }
    }
    Ok(())
}

/// Audio path as written into a manifest file at `file_dir`: relative when
/// the audio lives under that directory.
fn portable_path(manifest: &Manifest, utt: &Utterance, file_dir: &Path) -> PathBuf {
    let resolved = manifest.resolve(utt);
    match resolved.strip_prefix(file_dir) {
        Ok(rel) => rel.to_path_buf(),
        Err(_) => resolved,
    }
}

pub fn save_manifest(manifest: &Manifest, path: &Path, format: ManifestFormat) -> Result<(), CorpusError> {
    let file_dir = absolute_dir(path);
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    match format {
        ManifestFormat::Jsonl => {
            for utt in manifest.utterances() {
                let row = Utterance {
                    audio_path: portable_path(manifest, utt, &file_dir),
                    ..utt.clone()
                };
                let line = serde_json::to_string(&row).expect("utterances serialize");
                writeln!(out, "{line}").map_err(io_err(path))?;
            }
        }
        ManifestFormat::CvTsv => {
            let mut writer = csv::WriterBuilder::new()
                .delimiter(b'\t')
                .quote_style(csv::QuoteStyle::Never)
                .from_writer(out);
            let csv_err = |e: csv::Error| CorpusError::Io {
                path: path.to_path_buf(),
                source: std::io::Error::other(e),
            };
            writer
                .write_record(["client_id", "path", "sentence", "locale"])
                .map_err(csv_err)?;
            // mirror the loader: clip paths are relative to `clips/` when it exists
            let clips_dir = file_dir.join("clips");
            let root = if clips_dir.is_dir() { clips_dir } else { file_dir };
            for utt in manifest.utterances() {
                let clip = portable_path(manifest, utt, &root);
                writer
                    .write_record([
                        utt.speaker_id.as_str(),
                        &clip.to_string_lossy(),
                        utt.transcript.as_str(),
                        utt.language.as_str(),
                    ])
                    .map_err(csv_err)?;
            }
            writer.flush().map_err(io_err(path))?;
            return Ok(());
        }
    }
    out.flush().map_err(io_err(path))
}
