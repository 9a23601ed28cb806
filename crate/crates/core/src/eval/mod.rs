//! Text normalization, word error rate and result tables.

mod report;

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::ops::Add;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_general_category::{get_general_category, GeneralCategory};
use unicode_normalization::UnicodeNormalization;

use crate::corpus::Manifest;

pub use report::{WerRow, WerTable};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("corpus WER needs at least one pair")]
    EmptyCorpus,
    #[error("failed to read {path}: {source}")]
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
    #[error("hypotheses for ids not in the manifest: {}", .0.join(", "))]
    OrphanHypotheses(Vec<String>),
    #[error("no hypothesis for: {}", .0.join(", "))]
    MissingHypotheses(Vec<String>),
    #[error("duplicate hypothesis for '{0}'")]
    DuplicateHypothesis(String),
    #[error("row '{label}' has {got} value(s) but the table has {expected} column(s)")]
    ColumnMismatch { label: String, expected: usize, got: usize },
}

/// How transcripts are turned into word tokens before scoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    /// NFC, lowercase, punctuation removed, whitespace collapsed.
    #[default]
    Standard,
    /// Whitespace splitting only.
    None,
}

impl FromStr for Normalization {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "standard" => Ok(Self::Standard),
            "none" => Ok(Self::None),
            other => Err(format!("unknown normalization '{other}' (expected standard or none)")),
        }
    }
}

fn is_punctuation(c: char) -> bool {
    matches!(
        get_general_category(c),
        GeneralCategory::ConnectorPunctuation
            | GeneralCategory::DashPunctuation
            | GeneralCategory::OpenPunctuation
            | GeneralCategory::ClosePunctuation
            | GeneralCategory::InitialPunctuation
            | GeneralCategory::FinalPunctuation
            | GeneralCategory::OtherPunctuation
    )
}

/// Splits `s` into comparable word tokens.
///
/// Punctuation characters are deleted rather than turned into spaces, so
/// "d'água" stays one token. Turkic language tags get dotted/dotless i
/// lowercasing.
pub fn normalize_text(s: &str, language: &str) -> Vec<String> {
    normalize_with(s, language, Normalization::Standard)
}

pub fn normalize_with(s: &str, language: &str, mode: Normalization) -> Vec<String> {
    if mode == Normalization::None {
        return s.split_whitespace().map(str::to_string).collect();
    }
    let turkic = matches!(language.split(['-', '_']).next(), Some("tr" | "az"));
    let mut out = String::with_capacity(s.len());
    for c in s.nfc() {
        if is_punctuation(c) {
            continue;
        }
        match c {
            'I' if turkic => out.push('ı'),
            'İ' if turkic => out.push('i'),
            c => out.extend(c.to_lowercase()),
        }
    }
    // Deleting punctuation can leave combining marks out of canonical order.
    out.split_whitespace().map(|w| w.nfc().collect()).collect()
}

/// Edit counts and error rate for one or more reference/hypothesis pairs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct WerReport {
    pub substitutions: usize,
    pub deletions: usize,
    pub insertions: usize,
    pub ref_words: usize,
    /// Percent.
    pub wer: f64,
    /// Set when the reference is empty but the hypothesis is not.
    pub degenerate: bool,
}

impl WerReport {
    pub fn from_counts(substitutions: usize, deletions: usize, insertions: usize, ref_words: usize) -> Self {
        let errors = substitutions + deletions + insertions;
        let (wer, degenerate) = if ref_words > 0 {
            (100.0 * errors as f64 / ref_words as f64, false)
        } else {
            (100.0 * insertions as f64 / insertions.max(1) as f64, insertions > 0)
        };
        Self {
            substitutions,
            deletions,
            insertions,
            ref_words,
            wer,
            degenerate,
        }
    }

    pub fn errors(&self) -> usize {
        self.substitutions + self.deletions + self.insertions
    }
}

impl Add for WerReport {
    type Output = WerReport;

    fn add(self, rhs: WerReport) -> WerReport {
        WerReport::from_counts(
            self.substitutions + rhs.substitutions,
            self.deletions + rhs.deletions,
            self.insertions + rhs.insertions,
            self.ref_words + rhs.ref_words,
        )
    }
}

/// Minimal-edit alignment of two token sequences with unit costs.
pub fn wer<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> WerReport {
    let (n, m) = (reference.len(), hypothesis.len());
    let width = m + 1;
    let mut cost = vec![0usize; (n + 1) * width];
    for j in 0..=m {
        cost[j] = j;
    }
    for i in 1..=n {
        cost[i * width] = i;
        for j in 1..=m {
            let diag = cost[(i - 1) * width + j - 1] + usize::from(reference[i - 1] != hypothesis[j - 1]);
            let del = cost[(i - 1) * width + j] + 1;
            let ins = cost[i * width + j - 1] + 1;
            cost[i * width + j] = diag.min(del).min(ins);
        }
    }

    let (mut s, mut d, mut ins) = (0, 0, 0);
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = cost[i * width + j];
        if i > 0 && j > 0 {
            let differ = usize::from(reference[i - 1] != hypothesis[j - 1]);
            if here == cost[(i - 1) * width + j - 1] + differ {
                s += differ;
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && here == cost[(i - 1) * width + j] + 1 {
            d += 1;
            i -= 1;
        } else {
            ins += 1;
            j -= 1;
        }
    }
    WerReport::from_counts(s, d, ins, n)
}

/// Pooled WER: edit counts are summed over all pairs before dividing.
pub fn corpus_wer<S: AsRef<str> + Sync>(
    pairs: &[(S, S)],
    language: &str,
    mode: Normalization,
) -> Result<WerReport, EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::EmptyCorpus);
    }
    Ok(pairs
        .par_iter()
        .map(|(r, h)| {
            wer(
                &normalize_with(r.as_ref(), language, mode),
                &normalize_with(h.as_ref(), language, mode),
            )
        })
        .reduce(WerReport::default, |a, b| a + b))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub id: String,
    pub hypothesis: String,
}

/// Reads `{"id": ..., "hypothesis": ...}` lines.
pub fn load_hypotheses(path: &Path) -> Result<Vec<Hypothesis>, EvalError> {
    let file = File::open(path).map_err(|source| EvalError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| EvalError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| EvalError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

/// Pairs each manifest transcript with its hypothesis, in manifest order.
///
/// Hypotheses for unknown ids and utterances without a hypothesis are both
/// errors.
pub fn join_hypotheses(manifest: &Manifest, hypotheses: &[Hypothesis]) -> Result<Vec<(String, String)>, EvalError> {
    let mut by_id: HashMap<&str, &str> = HashMap::with_capacity(hypotheses.len());
    for h in hypotheses {
        if by_id.insert(&h.id, &h.hypothesis).is_some() {
            return Err(EvalError::DuplicateHypothesis(h.id.clone()));
        }
    }
    let known: HashSet<&str> = manifest.utterances().iter().map(|u| u.id.as_str()).collect();
    let orphans: Vec<String> = hypotheses
        .iter()
        .filter(|h| !known.contains(h.id.as_str()))
        .map(|h| h.id.clone())
        .collect();
    if !orphans.is_empty() {
        return Err(EvalError::OrphanHypotheses(orphans));
    }
    let missing: Vec<String> = manifest
        .utterances()
        .iter()
        .filter(|u| !by_id.contains_key(u.id.as_str()))
        .map(|u| u.id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(EvalError::MissingHypotheses(missing));
    }
    Ok(manifest
        .utterances()
        .iter()
        .map(|u| (u.transcript.clone(), by_id[u.id.as_str()].to_string()))
        .collect())
}
