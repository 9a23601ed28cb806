//! The boundary to external TTS and voice-conversion systems.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use base64::Engine;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::audio::{load_wav, load_wav_bytes, resample, save_wav, AudioClip, WavEncoding};
use crate::process::{self, ProcessFailure};
use crate::rng::stable_hash;

use super::{SpeakerRef, SynthError, SynthesisControls};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdapterMode {
    Subprocess,
    Http,
    Stub,
}

impl FromStr for AdapterMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "subprocess" => Ok(Self::Subprocess),
            "http" => Ok(Self::Http),
            "stub" => Ok(Self::Stub),
            other => Err(format!("unknown adapter mode '{other}'")),
        }
    }
}

/// Which kind of request an adapter serves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdapterTask {
    Tts,
    Vc,
}

impl AdapterTask {
    pub fn required_placeholders(self) -> &'static [&'static str] {
        match self {
            AdapterTask::Tts => &["text", "speaker_ref", "out", "L", "T", "Tdp"],
            AdapterTask::Vc => &["source_wav", "speaker_ref", "out"],
        }
    }
}

impl fmt::Display for AdapterTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AdapterTask::Tts => "tts",
            AdapterTask::Vc => "vc",
        })
    }
}

/// How to reach a TTS or VC system.
///
/// For `subprocess` the command is a template; `{text}`, `{speaker_ref}`,
/// `{source_wav}`, `{L}`, `{T}`, `{Tdp}` and `{out}` are substituted per
/// item after the template is split into arguments, so values never pass
/// through a shell. For `http` it is the endpoint URL. For `stub` it names a
/// built-in generator: `tone`, `fixed-tone`, `passthrough` or `fail`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdapterSpec {
    pub mode: AdapterMode,
    #[serde(alias = "command", alias = "endpoint")]
    pub endpoint_or_command: String,
    #[serde(default = "default_timeout")]
    pub timeout_s: f64,
}

fn default_timeout() -> f64 {
    120.0
}

const STUB_BEHAVIOURS: [&str; 4] = ["tone", "fixed-tone", "passthrough", "fail"];

impl AdapterSpec {
    pub fn stub(behaviour: &str) -> Self {
        Self {
            mode: AdapterMode::Stub,
            endpoint_or_command: behaviour.into(),
            timeout_s: default_timeout(),
        }
    }

    pub fn subprocess(command: impl Into<String>) -> Self {
        Self {
            mode: AdapterMode::Subprocess,
            endpoint_or_command: command.into(),
            timeout_s: default_timeout(),
        }
    }

    /// Reads an adapter description from a TOML file.
    pub fn load(path: &Path) -> Result<Self, SynthError> {
        let text = fs::read_to_string(path).map_err(|source| SynthError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        toml::from_str(&text).map_err(|e| SynthError::AdapterConfig(format!("{}: {e}", path.display())))
    }

    /// Checks the spec can serve `task`.
    pub fn validate(&self, task: AdapterTask) -> Result<(), SynthError> {
        if !(self.timeout_s > 0.0 && self.timeout_s.is_finite()) {
            return Err(SynthError::AdapterConfig(format!(
                "timeout_s must be positive, got {}",
                self.timeout_s
            )));
        }
        match self.mode {
            AdapterMode::Subprocess => {
                let tokens = self.tokens()?;
                let missing: Vec<String> = task
                    .required_placeholders()
                    .iter()
                    .filter(|p| !tokens.iter().any(|t| t.contains(&format!("{{{p}}}"))))
                    .map(|p| format!("{{{p}}}"))
                    .collect();
                if !missing.is_empty() {
                    return Err(SynthError::AdapterConfig(format!(
                        "{task} command template lacks {}",
                        missing.join(", ")
                    )));
                }
            }
            AdapterMode::Http => {
                let url = &self.endpoint_or_command;
                if !(url.starts_with("http://") || url.starts_with("https://")) {
                    return Err(SynthError::AdapterConfig(format!("'{url}' is not an http(s) URL")));
                }
            }
            AdapterMode::Stub => {
                if !STUB_BEHAVIOURS.contains(&self.endpoint_or_command.as_str()) {
                    return Err(SynthError::AdapterConfig(format!(
                        "unknown stub behaviour '{}' (expected one of {})",
                        self.endpoint_or_command,
                        STUB_BEHAVIOURS.join(", ")
                    )));
                }
            }
        }
        Ok(())
    }

    fn tokens(&self) -> Result<Vec<String>, SynthError> {
        let tokens = shell_words::split(&self.endpoint_or_command)
            .map_err(|e| SynthError::AdapterConfig(format!("cannot parse command: {e}")))?;
        if tokens.is_empty() {
            return Err(SynthError::AdapterConfig("empty command".into()));
        }
        Ok(tokens)
    }

    fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_s)
    }
}

/// Audio returned by an adapter plus whatever metadata it reported.
#[derive(Debug, Clone, PartialEq)]
pub struct AdapterOutput {
    pub clip: AudioClip,
    pub metadata: BTreeMap<String, Value>,
}

enum Request<'a> {
    Tts {
        text: &'a str,
        controls: &'a SynthesisControls,
    },
    Vc {
        source: &'a AudioClip,
    },
}

/// Synthesizes `text` in the voice of `speaker`.
///
/// The output is validated, resampled to `working_rate` and scaled down if
/// it peaks above full scale.
pub fn synthesize(
    adapter: &AdapterSpec,
    text: &str,
    speaker: &SpeakerRef,
    controls: &SynthesisControls,
    working_rate: u32,
) -> Result<AdapterOutput, SynthError> {
    if text.trim().is_empty() {
        return Err(SynthError::EmptyText);
    }
    adapter.validate(AdapterTask::Tts)?;
    let raw = call(adapter, &Request::Tts { text, controls }, speaker)?;
    conform(raw, working_rate)
}

/// Re-voices `source` as `target`; validated and resampled like
/// [`synthesize`].
pub fn convert_voice(
    adapter: &AdapterSpec,
    source: &AudioClip,
    target: &SpeakerRef,
    working_rate: u32,
) -> Result<AdapterOutput, SynthError> {
    adapter.validate(AdapterTask::Vc)?;
    let raw = call(adapter, &Request::Vc { source }, target)?;
    conform(raw, working_rate)
}

fn conform(raw: AdapterOutput, working_rate: u32) -> Result<AdapterOutput, SynthError> {
    let clip = resample(&raw.clip, working_rate).map_err(SynthError::InvalidOutput)?;
    let peak = clip.peak();
    let clip = if peak > 1.0 {
        let g = 1.0 / peak;
        let rate = clip.sample_rate();
        AudioClip::new(clip.into_samples().into_iter().map(|s| s * g).collect(), rate)
            .map_err(SynthError::InvalidOutput)?
    } else {
        clip
    };
    Ok(AdapterOutput {
        clip,
        metadata: raw.metadata,
    })
}

fn call(adapter: &AdapterSpec, request: &Request<'_>, speaker: &SpeakerRef) -> Result<AdapterOutput, SynthError> {
    match adapter.mode {
        AdapterMode::Stub => stub(&adapter.endpoint_or_command, request, speaker),
        AdapterMode::Subprocess => subprocess(adapter, request, speaker),
        AdapterMode::Http => http(adapter, request, speaker),
    }
}

fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

fn subprocess(adapter: &AdapterSpec, request: &Request<'_>, speaker: &SpeakerRef) -> Result<AdapterOutput, SynthError> {
    let scratch = tempfile::tempdir().map_err(|source| SynthError::Io {
        path: std::env::temp_dir(),
        source,
    })?;
    let out = scratch.path().join("out.wav");
    let mut values: Vec<(&str, String)> = vec![
        ("speaker_ref", path_arg(&speaker.reference_wav)),
        ("out", path_arg(&out)),
    ];
    match request {
        Request::Tts { text, controls } => {
            values.push(("text", text.to_string()));
            values.push(("L", fmt_f64(controls.length_scale)));
            values.push(("T", fmt_f64(controls.temperature)));
            values.push(("Tdp", fmt_f64(controls.duration_temperature)));
        }
        Request::Vc { source } => {
            let src = scratch.path().join("source.wav");
            save_wav(source, &src, WavEncoding::Float32).map_err(SynthError::InvalidOutput)?;
            values.push(("source_wav", path_arg(&src)));
        }
    }
    let argv = process::fill_template(&adapter.tokens()?, &values);
    process::run(&argv, adapter.timeout(), scratch.path()).map_err(|failure| match failure {
        ProcessFailure::Spawn(e) => SynthError::Spawn {
            program: argv[0].clone(),
            message: e.to_string(),
        },
        ProcessFailure::Timeout { after } => SynthError::Timeout {
            after_s: after.as_secs_f64(),
        },
        ProcessFailure::Exit { status, stderr } => SynthError::AdapterExit {
            status: status.to_string(),
            stderr,
        },
    })?;
    if !out.is_file() {
        return Err(SynthError::MissingOutput(argv.join(" ")));
    }
    let clip = load_wav(&out).map_err(SynthError::InvalidOutput)?;
    let sidecar = PathBuf::from(format!("{}.json", out.display()));
    let metadata = match fs::read_to_string(&sidecar) {
        Ok(text) => serde_json::from_str(&text)
            .map_err(|e| SynthError::AdapterConfig(format!("adapter metadata is not a JSON object: {e}")))?,
        Err(_) => BTreeMap::new(),
    };
    Ok(AdapterOutput { clip, metadata })
}

fn path_arg(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

fn http(adapter: &AdapterSpec, request: &Request<'_>, speaker: &SpeakerRef) -> Result<AdapterOutput, SynthError> {
    let b64 = base64::engine::general_purpose::STANDARD;
    let reference = fs::read(&speaker.reference_wav).map_err(|source| SynthError::Io {
        path: speaker.reference_wav.clone(),
        source,
    })?;
    let mut body = serde_json::Map::new();
    body.insert("speaker_ref".into(), Value::String(b64.encode(reference)));
    match request {
        Request::Tts { text, controls } => {
            body.insert("text".into(), Value::String(text.to_string()));
            body.insert("L".into(), controls.length_scale.into());
            body.insert("T".into(), controls.temperature.into());
            body.insert("Tdp".into(), controls.duration_temperature.into());
        }
        Request::Vc { source } => {
            let wav = crate::audio::save_wav_bytes(source, WavEncoding::Float32).map_err(SynthError::InvalidOutput)?;
            body.insert("source_wav".into(), Value::String(b64.encode(wav)));
        }
    }
    let client = reqwest::blocking::Client::builder()
        .timeout(adapter.timeout())
        .build()
        .map_err(|e| SynthError::Transport(e.to_string()))?;
    let response = client
        .post(&adapter.endpoint_or_command)
        .json(&Value::Object(body))
        .send()
        .map_err(|e| {
            if e.is_timeout() {
                SynthError::Timeout {
                    after_s: adapter.timeout_s,
                }
            } else {
                SynthError::Transport(e.to_string())
            }
        })?;
    let status = response.status();
    if status != reqwest::StatusCode::OK {
        let text = response.text().unwrap_or_default();
        return Err(SynthError::Http {
            status: status.as_u16(),
            body: text.chars().take(2000).collect(),
        });
    }
    let bytes = response.bytes().map_err(|e| SynthError::Transport(e.to_string()))?;
    let clip = load_wav_bytes(&bytes).map_err(SynthError::InvalidOutput)?;
    Ok(AdapterOutput {
        clip,
        metadata: BTreeMap::new(),
    })
}

const STUB_RATE: u32 = 22_050;

/// Tone frequency the `tone` stub uses for `text`.
pub fn stub_tone_hz(text: &str) -> f64 {
    200.0 + (stable_hash(text) % 600) as f64
}

fn tone(freq: f64, seconds: f64, amp: f64, rate: u32) -> Vec<f32> {
    let n = (seconds * rate as f64).round().max(1.0) as usize;
    (0..n)
        .map(|i| (amp * (2.0 * std::f64::consts::PI * freq * i as f64 / rate as f64).sin()) as f32)
        .collect()
}

/// Built-in deterministic stand-ins for real models.
fn stub(behaviour: &str, request: &Request<'_>, speaker: &SpeakerRef) -> Result<AdapterOutput, SynthError> {
    let mut metadata = BTreeMap::new();
    metadata.insert("speaker_id".into(), Value::String(speaker.speaker_id.clone()));
    let clip = match (behaviour, request) {
        ("fail", _) => return Err(SynthError::AdapterExit {
            status: "stub failure".into(),
            stderr: String::new(),
        }),
        ("fixed-tone", _) => AudioClip::new(tone(440.0, 1.0, 0.5, 16_000), 16_000),
        ("tone", Request::Tts { text, controls }) => {
            let freq = stub_tone_hz(text);
            metadata.insert("frequency_hz".into(), freq.into());
            let amp = 0.2 + 0.3 * controls.temperature + 0.1 * controls.duration_temperature;
            AudioClip::new(tone(freq, controls.length_scale, amp, STUB_RATE), STUB_RATE)
        }
        ("tone", Request::Vc { source }) => {
            let gain = 0.5 + (stable_hash(&speaker.speaker_id) % 500) as f32 / 1000.0;
            AudioClip::new(source.samples().iter().map(|s| s * gain).collect(), source.sample_rate())
        }
        ("passthrough", Request::Vc { source }) => Ok((*source).clone()),
        ("passthrough", Request::Tts { .. }) => {
            return Err(SynthError::AdapterConfig("the passthrough stub only serves voice conversion".into()))
        }
        (other, _) => return Err(SynthError::AdapterConfig(format!("unknown stub behaviour '{other}'"))),
    }
    .map_err(SynthError::InvalidOutput)?;
    Ok(AdapterOutput { clip, metadata })
}
