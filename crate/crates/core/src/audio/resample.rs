//! Band-limited resampling with a Kaiser-windowed sinc kernel.
//!
//! Each output sample is the kernel-weighted sum of the input samples within
//! `ZERO_CROSSINGS` lobes of its position. The kernel is tabulated once and
//! linearly interpolated; its cutoff follows the lower of the two Nyquist
//! frequencies so downsampling is anti-aliased.

use std::sync::OnceLock;

use super::{AudioClip, AudioError};

const ZERO_CROSSINGS: usize = 32;
const TABLE_STEPS: usize = 512;
const KAISER_BETA: f64 = 8.6;
/// Cutoff as a fraction of the lower Nyquist frequency.
const ROLLOFF: f64 = 0.92;

fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let half = x / 2.0;
    for k in 1..64 {
        term *= (half / k as f64) * (half / k as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

fn kernel_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let len = ZERO_CROSSINGS * TABLE_STEPS + 2;
        let norm = bessel_i0(KAISER_BETA);
        (0..len)
            .map(|i| {
                let u = i as f64 / TABLE_STEPS as f64;
                if u >= ZERO_CROSSINGS as f64 {
                    return 0.0;
                }
                let sinc = if i == 0 {
                    1.0
                } else {
                    let x = std::f64::consts::PI * u;
                    x.sin() / x
                };
                let r = u / ZERO_CROSSINGS as f64;
                let window = bessel_i0(KAISER_BETA * (1.0 - r * r).max(0.0).sqrt()) / norm;
                sinc * window
            })
            .collect()
    })
}

/// Kernel value at `u` zero crossings from the centre.
fn kernel(table: &[f64], u: f64) -> f64 {
    let pos = u.abs() * TABLE_STEPS as f64;
    let i = pos as usize;
    if i + 1 >= table.len() {
        return 0.0;
    }
    let frac = pos - i as f64;
    table[i] + (table[i + 1] - table[i]) * frac
}

/// Samples `input` at positions `n * step` for `n in 0..out_len`.
///
/// `step` is the input-sample distance between consecutive output samples,
/// i.e. `input_rate / output_rate`.
pub(crate) fn resample_by_step(input: &[f64], step: f64, out_len: usize) -> Vec<f64> {
    let table = kernel_table();
    let cutoff = (1.0 / step).min(1.0) * ROLLOFF;
    let half_width = ZERO_CROSSINGS as f64 / cutoff;
    let last = input.len() as isize - 1;
    (0..out_len)
        .map(|n| {
            let t = n as f64 * step;
            let lo = ((t - half_width).ceil() as isize).max(0);
            let hi = ((t + half_width).floor() as isize).min(last);
            let mut acc = 0.0;
            for k in lo..=hi {
                acc += input[k as usize] * kernel(table, (t - k as f64) * cutoff);
            }
            acc * cutoff
        })
        .collect()
}

/// Output length `round(len * to / from)`, computed exactly.
fn resampled_len(len: usize, from: u32, to: u32) -> usize {
    let num = len as u128 * to as u128;
    let den = from as u128;
    ((2 * num + den) / (2 * den)) as usize
}

/// Converts the clip to `target_rate`.
///
/// The output has `round(len * target_rate / sample_rate)` samples; equal
/// rates return the input unchanged.
pub fn resample(clip: &AudioClip, target_rate: u32) -> Result<AudioClip, AudioError> {
    if target_rate == 0 {
        return Err(AudioError::InvalidRate(target_rate));
    }
    if target_rate == clip.sample_rate() {
        return Ok(clip.clone());
    }
    let out_len = resampled_len(clip.len(), clip.sample_rate(), target_rate);
    if out_len == 0 {
        return Err(AudioError::Empty);
    }
    let step = clip.sample_rate() as f64 / target_rate as f64;
    let out = resample_by_step(&clip.to_f64(), step, out_len);
    AudioClip::from_f64(&out, target_rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rustfft::{num_complex::Complex, FftPlanner};
    use std::f64::consts::PI;

    fn sine(freq: f64, rate: u32, n: usize) -> AudioClip {
        let s = (0..n)
            .map(|i| (0.5 * (2.0 * PI * freq * i as f64 / rate as f64).sin()) as f32)
            .collect();
        AudioClip::new(s, rate).unwrap()
    }

    fn peak_bin_hz(clip: &AudioClip) -> f64 {
        let n = clip.len();
        let mut buf: Vec<Complex<f64>> = clip
            .samples()
            .iter()
            .map(|&s| Complex::new(s as f64, 0.0))
            .collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let (bin, _) = buf[..n / 2]
            .iter()
            .enumerate()
            .map(|(i, c)| (i, c.norm()))
            .fold((0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
        bin as f64 * clip.sample_rate() as f64 / n as f64
    }

    #[test]
    fn identity_when_rates_match() {
        let clip = sine(440.0, 16_000, 1000);
        assert_eq!(resample(&clip, 16_000).unwrap(), clip);
    }

    #[test]
    fn length_follows_ratio() {
        let clip = sine(440.0, 48_000, 48_000);
        let out = resample(&clip, 16_000).unwrap();
        assert_eq!(out.len(), 16_000);
        assert_eq!(out.sample_rate(), 16_000);
        assert_eq!(resampled_len(22_050, 22_050, 16_000), 16_000);
        assert_eq!(resampled_len(1001, 44_100, 16_000), 363);
    }

    #[test]
    fn tone_frequency_survives_downsampling() {
        let out = resample(&sine(440.0, 48_000, 48_000), 16_000).unwrap();
        let hz = peak_bin_hz(&out);
        assert!((hz - 440.0).abs() <= 1.0, "{hz}");
        // amplitude is preserved in the passband, away from the edges
        let mid = &out.samples()[4000..12000];
        let peak = mid.iter().fold(0.0f32, |m, s| m.max(s.abs()));
        assert!((peak - 0.5).abs() < 5e-3, "{peak}");
    }

    #[test]
    fn stopband_attenuates_at_least_60_db() {
        // 20 kHz and 9 kHz are both above the 8 kHz output Nyquist frequency
        for freq in [9_000.0, 20_000.0] {
            let input = sine(freq, 48_000, 48_000);
            let out = resample(&input, 16_000).unwrap();
            let mid = &out.samples()[2000..14000];
            let out_rms = (mid.iter().map(|&s| (s as f64).powi(2)).sum::<f64>() / mid.len() as f64).sqrt();
            let in_rms = 0.5 / 2f64.sqrt();
            let atten_db = 20.0 * (in_rms / out_rms).log10();
            assert!(atten_db >= 60.0, "{freq} Hz attenuated only {atten_db:.1} dB");
        }
    }

    #[test]
    fn round_trip_keeps_duration() {
        for (a, b) in [(16_000, 48_000), (22_050, 16_000), (44_100, 8_000)] {
            let clip = sine(200.0, a, 12_345);
            let back = resample(&resample(&clip, b).unwrap(), a).unwrap();
            // one period of the coarser rate
            let period = 1.0 / a.min(b) as f64;
            assert!((back.duration_s() - clip.duration_s()).abs() <= period);
        }
    }

    #[test]
    fn zero_rate_is_rejected() {
        let clip = sine(440.0, 16_000, 100);
        assert!(matches!(resample(&clip, 0), Err(AudioError::InvalidRate(0))));
    }
}
