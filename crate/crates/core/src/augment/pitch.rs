//! Pitch shifting by resampling followed by a WSOLA time stretch.
//!
//! Raising the pitch by `r = 2^(s/12)` first resamples the signal to
//! `len / r` samples (which, played at the original rate, raises every
//! frequency by `r`), then stretches it back to `len` samples with
//! waveform-similarity overlap-add, which changes duration without changing
//! pitch.

use crate::audio::{resample_by_step, AudioClip};

use super::{finish, AugmentError};

/// Largest shift accepted by [`pitch_shift`]; policies usually stay within ±4.
pub const MAX_SEMITONES: i32 = 24;

const FRAME_MS: f64 = 40.0;

/// Synthesis hop of the time stretcher, in samples.
pub fn hop_size(sample_rate: u32) -> usize {
    frame_len(sample_rate) / 2
}

fn frame_len(sample_rate: u32) -> usize {
    let n = (sample_rate as f64 * FRAME_MS / 1000.0).round() as usize;
    (n.max(4) / 2) * 2
}

fn hann(len: usize) -> Vec<f64> {
    (0..len)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / len as f64).cos())
        .collect()
}

fn at(x: &[f64], i: isize) -> f64 {
    if i < 0 {
        0.0
    } else {
        x.get(i as usize).copied().unwrap_or(0.0)
    }
}

fn similarity(x: &[f64], a: isize, b: isize, len: usize) -> f64 {
    (0..len as isize).map(|i| at(x, a + i) * at(x, b + i)).sum()
}

/// Stretches `input` to `out_len` samples without changing its pitch.
fn wsola(input: &[f64], out_len: usize, frame: usize) -> Vec<f64> {
    let hop = frame / 2;
    let tolerance = (hop / 2) as isize;
    let analysis_hop = hop as f64 * input.len() as f64 / out_len as f64;
    let window = hann(frame);

    let mut out = vec![0.0; out_len + frame];
    let mut weight = vec![0.0; out_len + frame];
    let mut prev: isize = 0;
    let mut k = 0usize;
    while k * hop < out_len {
        let pos = if k == 0 {
            0
        } else {
            let nominal = (k as f64 * analysis_hop).round() as isize;
            let natural = prev + hop as isize;
            let lo = (nominal - tolerance).max(0);
            let hi = nominal + tolerance;
            (lo..=hi)
                .map(|c| (c, similarity(input, c, natural, frame)))
                .fold((nominal.max(0), f64::NEG_INFINITY), |best, cand| {
                    if cand.1 > best.1 {
                        cand
                    } else {
                        best
                    }
                })
                .0
        };
        let start = k * hop;
        for (i, w) in window.iter().enumerate() {
            out[start + i] += w * at(input, pos + i as isize);
            weight[start + i] += w;
        }
        prev = pos;
        k += 1;
    }
    out.truncate(out_len);
    out.iter()
        .zip(&weight)
        .map(|(v, w)| if *w > 1e-9 { v / w } else { 0.0 })
        .collect()
}

pub(crate) fn pitch_shift_raw(samples: &[f64], sample_rate: u32, semitones: i32) -> Vec<f64> {
    if semitones == 0 {
        return samples.to_vec();
    }
    let ratio = 2f64.powf(semitones as f64 / 12.0);
    let len = samples.len();
    let squeezed_len = ((len as f64 / ratio).round() as usize).max(1);
    let step = len as f64 / squeezed_len as f64;
    let squeezed = resample_by_step(samples, step, squeezed_len);
    wsola(&squeezed, len, frame_len(sample_rate))
}

/// Shifts pitch by `semitones` while keeping the clip's length.
pub fn pitch_shift(signal: &AudioClip, semitones: i32) -> Result<AudioClip, AugmentError> {
    if semitones.abs() > MAX_SEMITONES {
        return Err(AugmentError::SemitonesOutOfRange(semitones));
    }
    if semitones == 0 {
        return Ok(signal.clone());
    }
    let out = pitch_shift_raw(&signal.to_f64(), signal.sample_rate(), semitones);
    Ok(finish(&out, signal.sample_rate())?.0)
}
