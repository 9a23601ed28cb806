use std::fmt;
use std::fs;
use std::io::Cursor;
use std::path::Path;
use std::str::FromStr;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};
use serde::{Deserialize, Serialize};

use super::{AudioClip, AudioError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WavEncoding {
    Pcm16,
    #[default]
    Float32,
}

impl FromStr for WavEncoding {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pcm16" => Ok(Self::Pcm16),
            "float32" => Ok(Self::Float32),
            other => Err(format!("unknown WAV encoding '{other}' (expected pcm16 or float32)")),
        }
    }
}

impl fmt::Display for WavEncoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Pcm16 => "pcm16",
            Self::Float32 => "float32",
        })
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> AudioError + '_ {
    move |source| AudioError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Reads a 16-bit PCM or 32-bit float WAV file, averaging channels to mono.
pub fn load_wav(path: &Path) -> Result<AudioClip, AudioError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    load_wav_bytes(&bytes)
}

pub fn load_wav_bytes(bytes: &[u8]) -> Result<AudioClip, AudioError> {
    let reader = match WavReader::new(Cursor::new(bytes)) {
        Ok(r) => r,
        Err(hound::Error::Unsupported) => {
            return Err(AudioError::UnsupportedEncoding {
                encoding: sniff_encoding(bytes).unwrap_or_else(|| "unknown".into()),
            })
        }
        Err(e) => return Err(AudioError::Malformed(e.to_string())),
    };
    let spec = reader.spec();
    let channels = spec.channels.max(1) as usize;
    let interleaved: Vec<f32> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| v as f32 / 32768.0))
            .collect::<Result<_, _>>()
            .map_err(|e| AudioError::Malformed(e.to_string()))?,
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .collect::<Result<_, _>>()
            .map_err(|e| AudioError::Malformed(e.to_string()))?,
        (SampleFormat::Int, bits) => {
            return Err(AudioError::UnsupportedEncoding {
                encoding: format!("pcm{bits}"),
            })
        }
        (SampleFormat::Float, bits) => {
            return Err(AudioError::UnsupportedEncoding {
                encoding: format!("float{bits}"),
            })
        }
    };
    let mono = if channels == 1 {
        interleaved
    } else {
        interleaved
            .chunks_exact(channels)
            .map(|frame| (frame.iter().map(|&s| s as f64).sum::<f64>() / channels as f64) as f32)
            .collect()
    };
    AudioClip::new(mono, spec.sample_rate)
}

/// Duration in seconds read from the WAV header only.
pub fn probe_duration(path: &Path) -> Result<f64, AudioError> {
    let reader = WavReader::open(path).map_err(|e| match e {
        hound::Error::IoError(source) => AudioError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => AudioError::Malformed(format!("{}: {other}", path.display())),
    })?;
    let spec = reader.spec();
    if spec.sample_rate == 0 {
        return Err(AudioError::InvalidRate(0));
    }
    Ok(reader.duration() as f64 / spec.sample_rate as f64)
}

fn check_range(clip: &AudioClip) -> Result<(), AudioError> {
    match clip.samples().iter().position(|s| s.abs() > 1.0) {
        Some(index) => Err(AudioError::OutOfRange {
            index,
            value: clip.samples()[index],
        }),
        None => Ok(()),
    }
}

fn spec_for(clip: &AudioClip, encoding: WavEncoding) -> WavSpec {
    let (bits_per_sample, sample_format) = match encoding {
        WavEncoding::Pcm16 => (16, SampleFormat::Int),
        WavEncoding::Float32 => (32, SampleFormat::Float),
    };
    WavSpec {
        channels: 1,
        sample_rate: clip.sample_rate(),
        bits_per_sample,
        sample_format,
    }
}

fn quantize(s: f32) -> i16 {
    (s as f64 * 32768.0).round().clamp(-32768.0, 32767.0) as i16
}

fn write_samples<W: std::io::Write + std::io::Seek>(
    mut writer: WavWriter<W>,
    clip: &AudioClip,
    encoding: WavEncoding,
) -> Result<(), hound::Error> {
    match encoding {
        WavEncoding::Pcm16 => {
            for &s in clip.samples() {
                writer.write_sample(quantize(s))?;
            }
        }
        WavEncoding::Float32 => {
            for &s in clip.samples() {
                writer.write_sample(s)?;
            }
        }
    }
    writer.finalize()
}

pub fn save_wav(clip: &AudioClip, path: &Path, encoding: WavEncoding) -> Result<(), AudioError> {
    let bytes = save_wav_bytes(clip, encoding)?;
    fs::write(path, bytes).map_err(io_err(path))
}

pub fn save_wav_bytes(clip: &AudioClip, encoding: WavEncoding) -> Result<Vec<u8>, AudioError> {
    check_range(clip)?;
    let mut cursor = Cursor::new(Vec::new());
    let writer = WavWriter::new(&mut cursor, spec_for(clip, encoding))
        .map_err(|e| AudioError::Malformed(e.to_string()))?;
    write_samples(writer, clip, encoding).map_err(|e| AudioError::Malformed(e.to_string()))?;
    Ok(cursor.into_inner())
}

/// Names the encoding of a WAV whose format tag the decoder rejected.
fn sniff_encoding(bytes: &[u8]) -> Option<String> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return None;
    }
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32::from_le_bytes(bytes[pos + 4..pos + 8].try_into().ok()?) as usize;
        let body = pos + 8;
        if id == b"fmt " {
            let mut tag = u16::from_le_bytes(bytes.get(body..body + 2)?.try_into().ok()?);
            if tag == 0xFFFE {
                // WAVE_FORMAT_EXTENSIBLE: the real tag leads the sub-format GUID
                tag = u16::from_le_bytes(bytes.get(body + 24..body + 26)?.try_into().ok()?);
            }
            let name = match tag {
                0x0001 => "pcm".to_string(),
                0x0002 => "ms-adpcm".to_string(),
                0x0003 => "ieee-float".to_string(),
                0x0006 => "a-law".to_string(),
                0x0007 => "mu-law".to_string(),
                0x0011 => "ima-adpcm".to_string(),
                0x0055 => "mpeg-layer3".to_string(),
                other => format!("format tag 0x{other:04x}"),
            };
            return Some(name);
        }
        pos = body + size + (size & 1);
    }
    None
}
