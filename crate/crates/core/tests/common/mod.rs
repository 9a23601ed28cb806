#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use augvox_core::audio::save_wav;
use augvox_core::{AudioClip, WavEncoding};

pub fn sine(freq: f64, seconds: f64, amp: f64, rate: u32) -> AudioClip {
    let n = (seconds * rate as f64).round() as usize;
    let s = (0..n)
        .map(|i| (amp * (2.0 * std::f64::consts::PI * freq * i as f64 / rate as f64).sin()) as f32)
        .collect();
    AudioClip::new(s, rate).unwrap()
}

/// `lead` seconds of silence, `speech` seconds of tone, `tail` seconds of silence.
pub fn padded_tone(lead: f64, speech: f64, tail: f64, rate: u32) -> AudioClip {
    let zeros = |s: f64| vec![0.0f32; (s * rate as f64).round() as usize];
    let mut v = zeros(lead);
    v.extend(sine(330.0, speech, 0.5, rate).samples());
    v.extend(zeros(tail));
    AudioClip::new(v, rate).unwrap()
}

pub fn write_clip(path: &Path, clip: &AudioClip) {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).unwrap();
    }
    save_wav(clip, path, WavEncoding::Pcm16).unwrap();
}

/// A Common Voice style directory: `train.tsv` plus `clips/*.wav`, one
/// short tone per row.
pub fn cv_corpus(root: &Path, rows: usize, speakers: usize, language: &str) -> PathBuf {
    let clips = root.join("clips");
    fs::create_dir_all(&clips).unwrap();
    let mut tsv = String::from("client_id\tpath\tsentence\tup_votes\tlocale\n");
    for i in 0..rows {
        let name = format!("common_voice_{language}_{i:05}.wav");
        write_clip(&clips.join(&name), &sine(200.0 + 10.0 * i as f64, 0.25, 0.4, 16_000));
        tsv.push_str(&format!("spk{}\t{name}\tfrase número {i}.\t2\t{language}\n", i % speakers));
    }
    let path = root.join("train.tsv");
    fs::write(&path, tsv).unwrap();
    path
}

/// Tree digest: relative path and content of every file under `root`.
pub fn tree(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push((path.strip_prefix(root).unwrap().to_path_buf(), fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}
