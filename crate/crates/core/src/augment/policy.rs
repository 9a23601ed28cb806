use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::audio::{load_wav, resample, AudioClip};

use super::pitch::MAX_SEMITONES;
use super::AugmentError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    Noise,
    Music,
    Speech,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 3] = [NoiseKind::Noise, NoiseKind::Music, NoiseKind::Speech];

    /// Inclusive SNR interval, in dB, used when mixing this kind of source.
    pub fn snr_range_db(self) -> (f64, f64) {
        match self {
            NoiseKind::Speech => (13.0, 20.0),
            NoiseKind::Music => (5.0, 15.0),
            NoiseKind::Noise => (0.0, 15.0),
        }
    }

    fn index(self) -> usize {
        match self {
            NoiseKind::Noise => 0,
            NoiseKind::Music => 1,
            NoiseKind::Speech => 2,
        }
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseKind::Noise => "noise",
            NoiseKind::Music => "music",
            NoiseKind::Speech => "speech",
        })
    }
}

impl FromStr for NoiseKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "noise" => Ok(NoiseKind::Noise),
            "music" => Ok(NoiseKind::Music),
            "speech" => Ok(NoiseKind::Speech),
            other => Err(format!("unknown noise kind '{other}'")),
        }
    }
}

#[derive(Debug, Clone)]
enum SourceData {
    File(PathBuf),
    Memory(Arc<AudioClip>),
}

/// A noise or RIR clip, either on disk or already in memory.
#[derive(Debug, Clone)]
pub struct ClipSource {
    id: String,
    data: SourceData,
}

impl ClipSource {
    pub fn file(id: impl Into<String>, path: impl Into<PathBuf>) -> Self {
        Self {
            id: id.into(),
            data: SourceData::File(path.into()),
        }
    }

    pub fn memory(id: impl Into<String>, clip: AudioClip) -> Self {
        Self {
            id: id.into(),
            data: SourceData::Memory(Arc::new(clip)),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    /// Loads the clip at `rate`, resampling if needed.
    pub fn load(&self, rate: u32) -> Result<AudioClip, AugmentError> {
        let err = |source| AugmentError::ResourceLoad {
            id: self.id.clone(),
            source,
        };
        let clip = match &self.data {
            SourceData::File(path) => load_wav(path).map_err(err)?,
            SourceData::Memory(clip) => clip.as_ref().clone(),
        };
        resample(&clip, rate).map_err(err)
    }
}

#[derive(Debug, Clone)]
pub struct NoiseSubset {
    pub kind: NoiseKind,
    pub clips: Vec<ClipSource>,
}

impl NoiseSubset {
    pub fn snr_range_db(&self) -> (f64, f64) {
        self.kind.snr_range_db()
    }
}

/// The three noise subsets, indexed by kind.
#[derive(Debug, Clone)]
pub struct NoiseBank {
    subsets: [NoiseSubset; 3],
}

impl Default for NoiseBank {
    fn default() -> Self {
        Self {
            subsets: NoiseKind::ALL.map(|kind| NoiseSubset {
                kind,
                clips: Vec::new(),
            }),
        }
    }
}

impl NoiseBank {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, kind: NoiseKind, source: ClipSource) {
        self.subsets[kind.index()].clips.push(source);
    }

    pub fn subset(&self, kind: NoiseKind) -> &NoiseSubset {
        &self.subsets[kind.index()]
    }

    pub fn len(&self) -> usize {
        self.subsets.iter().map(|s| s.clips.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Reads an index file: one path per line (relative to the index), with
    /// an optional tab- or space-separated `kind` column. Without the column
    /// the kind is taken from the first path component named
    /// `noise`, `music` or `speech`.
    pub fn from_index(path: &Path) -> Result<Self, AugmentError> {
        let entries = read_index(path)?;
        let root = path.parent().unwrap_or(Path::new("."));
        let mut bank = NoiseBank::new();
        for (line_no, rel, kind) in entries {
            let kind = match kind {
                Some(k) => k.parse().map_err(|e| AugmentError::Index {
                    path: path.to_path_buf(),
                    line: line_no,
                    message: e,
                })?,
                None => infer_kind(&rel).ok_or_else(|| AugmentError::Index {
                    path: path.to_path_buf(),
                    line: line_no,
                    message: format!("cannot infer noise kind of '{rel}'; add a kind column"),
                })?,
            };
            bank.push(kind, ClipSource::file(rel.clone(), root.join(&rel)));
        }
        Ok(bank)
    }
}

fn infer_kind(rel: &str) -> Option<NoiseKind> {
    Path::new(rel)
        .components()
        .filter_map(|c| c.as_os_str().to_str())
        .find_map(|c| c.parse().ok())
}

type IndexEntry = (usize, String, Option<String>);

fn read_index(path: &Path) -> Result<Vec<IndexEntry>, AugmentError> {
    let text = fs::read_to_string(path)
        .map_err(|_| AugmentError::MissingResource(format!("index file {}", path.display())))?;
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (rel, kind) = if let Some((p, k)) = line.split_once('\t') {
            (p.trim(), Some(k.trim()))
        } else {
            match line.rsplit_once(char::is_whitespace) {
                Some((p, k)) if k.parse::<NoiseKind>().is_ok() => (p.trim(), Some(k)),
                _ => (line, None),
            }
        };
        out.push((i + 1, rel.to_string(), kind.map(str::to_string)));
    }
    Ok(out)
}

/// Impulse responses, held in memory at the working rate.
#[derive(Debug, Clone, Default)]
pub struct RirBank {
    filters: Vec<ClipSource>,
}

impl RirBank {
    /// Validates that every filter is nonempty with positive energy.
    pub fn new(filters: Vec<(String, AudioClip)>) -> Result<Self, AugmentError> {
        let mut out = Vec::with_capacity(filters.len());
        for (id, clip) in filters {
            if clip.samples().iter().all(|&s| s == 0.0) {
                return Err(AugmentError::ResourceInvalid {
                    id,
                    reason: "impulse response has zero energy".into(),
                });
            }
            out.push(ClipSource::memory(id, clip));
        }
        Ok(Self { filters: out })
    }

    /// Loads every filter listed in `path` and resamples it to `rate`.
    pub fn from_index(path: &Path, rate: u32) -> Result<Self, AugmentError> {
        let root = path.parent().unwrap_or(Path::new("."));
        let mut clips = Vec::new();
        for (_, rel, _) in read_index(path)? {
            let clip = ClipSource::file(rel.clone(), root.join(&rel)).load(rate)?;
            clips.push((rel, clip));
        }
        Self::new(clips)
    }

    pub fn filters(&self) -> &[ClipSource] {
        &self.filters
    }

    pub fn len(&self) -> usize {
        self.filters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.filters.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct AugmentationPolicy {
    /// Probability that each method is applied to a given item.
    pub p_select: f64,
    /// Inclusive semitone interval for pitch shifts.
    pub semitone_range: (i32, i32),
    pub noise: NoiseBank,
    pub rirs: RirBank,
    pub master_seed: u64,
}

impl Default for AugmentationPolicy {
    fn default() -> Self {
        Self {
            p_select: 0.25,
            semitone_range: (-4, 4),
            noise: NoiseBank::new(),
            rirs: RirBank::default(),
            master_seed: 0,
        }
    }
}

impl AugmentationPolicy {
    pub fn validate(&self) -> Result<(), AugmentError> {
        if !(0.0..=1.0).contains(&self.p_select) {
            return Err(AugmentError::InvalidPolicy(format!(
                "p_select must be within [0, 1], got {}",
                self.p_select
            )));
        }
        let (lo, hi) = self.semitone_range;
        if lo > hi {
            return Err(AugmentError::InvalidPolicy(format!(
                "semitone range [{lo}, {hi}] is empty"
            )));
        }
        if lo < -MAX_SEMITONES || hi > MAX_SEMITONES {
            return Err(AugmentError::InvalidPolicy(format!(
                "semitone range [{lo}, {hi}] exceeds ±{MAX_SEMITONES}"
            )));
        }
        if lo == 0 && hi == 0 {
            return Err(AugmentError::InvalidPolicy(
                "semitone range contains no nonzero shift".into(),
            ));
        }
        Ok(())
    }

    /// Fails, naming the resource, if a plan could draw a noise subset or
    /// RIR bank that is empty or a noise file that does not exist.
    pub fn check_resources(&self) -> Result<(), AugmentError> {
        if self.p_select == 0.0 {
            return Ok(());
        }
        for kind in NoiseKind::ALL {
            let subset = self.noise.subset(kind);
            if subset.clips.is_empty() {
                return Err(AugmentError::MissingResource(format!("noise subset '{kind}' has no clips")));
            }
            for clip in &subset.clips {
                if let SourceData::File(path) = &clip.data {
                    if !path.is_file() {
                        return Err(AugmentError::MissingResource(format!("noise file {}", path.display())));
                    }
                }
            }
        }
        if self.rirs.is_empty() {
            return Err(AugmentError::MissingResource("RIR bank has no filters".into()));
        }
        Ok(())
    }
}

/// On-disk policy description (TOML).
///
/// ```toml
/// schema = 1
/// p_select = 0.25
/// semitone_range = [-4, 4]
/// noise_index = "musan/index.tsv"
/// rir_index = "rirs/index.txt"
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyFile {
    pub schema: u32,
    #[serde(default = "default_p_select")]
    pub p_select: f64,
    #[serde(default = "default_semitones")]
    pub semitone_range: [i32; 2],
    #[serde(default)]
    pub noise_index: Option<PathBuf>,
    #[serde(default)]
    pub rir_index: Option<PathBuf>,
}

fn default_p_select() -> f64 {
    0.25
}

fn default_semitones() -> [i32; 2] {
    [-4, 4]
}

pub const POLICY_SCHEMA: u32 = 1;

impl PolicyFile {
    /// Parses the file and resolves resource paths against its directory.
    pub fn load(path: &Path) -> Result<Self, AugmentError> {
        let text = fs::read_to_string(path)
            .map_err(|_| AugmentError::MissingResource(format!("policy file {}", path.display())))?;
        let mut file: PolicyFile = toml::from_str(&text).map_err(|e| AugmentError::PolicyParse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        if file.schema != POLICY_SCHEMA {
            return Err(AugmentError::PolicyParse {
                path: path.to_path_buf(),
                message: format!("unsupported schema {} (expected {POLICY_SCHEMA})", file.schema),
            });
        }
        let root = path.parent().unwrap_or(Path::new("."));
        file.noise_index = file.noise_index.map(|p| root.join(p));
        file.rir_index = file.rir_index.map(|p| root.join(p));
        Ok(file)
    }

    /// Builds a validated policy, loading the RIR bank at `working_rate`.
    pub fn into_policy(self, master_seed: u64, working_rate: u32) -> Result<AugmentationPolicy, AugmentError> {
        let policy = AugmentationPolicy {
            p_select: self.p_select,
            semitone_range: (self.semitone_range[0], self.semitone_range[1]),
            noise: NoiseBank::new(),
            rirs: RirBank::default(),
            master_seed,
        };
        policy.validate()?;
        let noise = match &self.noise_index {
            Some(p) => NoiseBank::from_index(p)?,
            None => NoiseBank::new(),
        };
        let rirs = match &self.rir_index {
            Some(p) => RirBank::from_index(p, working_rate)?,
            None => RirBank::default(),
        };
        Ok(AugmentationPolicy {
            noise,
            rirs,
            ..policy
        })
    }
}
