#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use augvox_core::audio::save_wav;
use augvox_core::{AudioClip, WavEncoding};
use sha2::{Digest, Sha256};

pub fn sine(freq: f64, seconds: f64, amp: f64, rate: u32) -> AudioClip {
    let n = (seconds * rate as f64).round() as usize;
    let s = (0..n)
        .map(|i| (amp * (2.0 * std::f64::consts::PI * freq * i as f64 / rate as f64).sin()) as f32)
        .collect();
    AudioClip::new(s, rate).unwrap()
}

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

/// Common Voice layout: `<root>/train.tsv` and `<root>/clips/*.wav`.
pub fn cv_corpus(root: &Path, rows: usize, speakers: usize, language: &str) -> PathBuf {
    let clips = root.join("clips");
    fs::create_dir_all(&clips).unwrap();
    let mut tsv = String::from("client_id\tpath\tsentence\tlocale\n");
    for i in 0..rows {
        let name = format!("cv_{language}_{i:04}.wav");
        write_clip(&clips.join(&name), &sine(180.0 + 7.0 * i as f64, 0.3, 0.4, 16_000));
        tsv.push_str(&format!("spk{}\t{name}\tFrase número {i}, olá!\t{language}\n", i % speakers));
    }
    let path = root.join("train.tsv");
    fs::write(&path, tsv).unwrap();
    path
}

/// A single-speaker JSONL corpus, standing in for a TTS training set.
pub fn single_speaker_corpus(root: &Path, n: usize) -> PathBuf {
    fs::create_dir_all(root).unwrap();
    let mut lines = String::new();
    for i in 0..n {
        let rel = format!("wavs/tts_{i:04}.wav");
        let clip = sine(150.0 + 11.0 * i as f64, 0.3, 0.5, 22_050);
        write_clip(&root.join(&rel), &clip);
        lines.push_str(&format!(
            "{{\"id\":\"tts_{i:04}\",\"audio_path\":\"{rel}\",\"transcript\":\"sentença {i}\",\"speaker_id\":\"narrator\",\"language\":\"pt-BR\",\"origin\":\"human\",\"duration_s\":{}}}\n",
            clip.duration_s()
        ));
    }
    let path = root.join("manifest.jsonl");
    fs::write(&path, lines).unwrap();
    path
}

pub fn speaker_pool(root: &Path, n: usize) -> PathBuf {
    let mut tsv = String::new();
    for i in 0..n {
        let rel = format!("refs/en_{i:04}.wav");
        write_clip(&root.join(&rel), &sine(100.0 + 3.0 * i as f64, 0.2, 0.3, 16_000));
        tsv.push_str(&format!("en_{i:04}\t{rel}\n"));
    }
    let path = root.join("pool.tsv");
    fs::write(&path, tsv).unwrap();
    path
}

pub fn stub_adapter(root: &Path, behaviour: &str) -> PathBuf {
    let path = root.join(format!("stub_{behaviour}.toml"));
    fs::write(&path, format!("mode = \"stub\"\nendpoint_or_command = \"{behaviour}\"\n")).unwrap();
    path
}

/// Noise clips for every subset, one RIR, and a policy using them.
pub fn policy(root: &Path, p_select: f64) -> PathBuf {
    for (i, kind) in ["noise", "music", "speech"].iter().enumerate() {
        write_clip(
            &root.join(format!("musan/{kind}/{kind}_a.wav")),
            &sine(600.0 + 90.0 * i as f64, 0.7, 0.3, 16_000),
        );
    }
    fs::write(
        root.join("noise.txt"),
        "musan/noise/noise_a.wav\nmusan/music/music_a.wav\nmusan/speech/speech_a.wav\n",
    )
    .unwrap();
    let mut rir = vec![0.0f32; 800];
    rir[0] = 1.0;
    rir[240] = 0.45;
    rir[700] = 0.2;
    write_clip(&root.join("rirs/room_a.wav"), &AudioClip::new(rir, 16_000).unwrap());
    fs::write(root.join("rirs.txt"), "rirs/room_a.wav\n").unwrap();
    let path = root.join(format!("policy_{p_select}.toml"));
    fs::write(
        &path,
        format!("schema = 1\np_select = {p_select:?}\nsemitone_range = [-4, 4]\nnoise_index = \"noise.txt\"\nrir_index = \"rirs.txt\"\n"),
    )
    .unwrap();
    path
}

/// Relative path → SHA-256 of every file under `root`.
pub fn tree_digest(root: &Path) -> BTreeMap<PathBuf, String> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let digest = Sha256::digest(fs::read(&path).unwrap());
                let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), hex);
            }
        }
    }
    out
}

pub fn augvox(args: &[&str]) -> Output {
    augvox_env(args, &[])
}

pub fn augvox_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_augvox"));
    cmd.args(args).env_remove("AUGVOX_SEED").env_remove("AUGVOX_WORKERS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

pub fn lines(path: &Path) -> usize {
    fs::read_to_string(path).unwrap().lines().filter(|l| !l.trim().is_empty()).count()
}

/// Builds the four components of the fifth experiment (Common Voice, the
/// single-speaker TTS set, GEN_TTS and GEN_VC) with stub adapters and
/// returns the recipe path. Component sizes are `cv`, `n`, `cv` and `5n`.
pub fn exp5_fixture(root: &Path, cv: usize, n: usize) -> PathBuf {
    cv_corpus(&root.join("cv"), cv, 3, "pt-BR");
    single_speaker_corpus(&root.join("tts"), n);
    let pool = speaker_pool(root, 8);
    let tone = stub_adapter(root, "tone");
    let run = |args: &[&str]| {
        let out = augvox(args);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    };
    run(&[
        "generate", "gen-tts", "--manifest", p(&root.join("cv/train.tsv")), "--pool", p(&pool),
        "--adapter", p(&tone), "--out-dir", p(&root.join("gen_tts")), "--name", "gen_tts",
    ]);
    run(&[
        "generate", "gen-vc", "--manifest", p(&root.join("tts/manifest.jsonl")), "--pool", p(&pool),
        "--adapter", p(&tone), "--transfers", "5", "--out-dir", p(&root.join("gen_vc")), "--name", "gen_vc",
    ]);
    policy(root, 0.25);
    let recipe = root.join("exp5.toml");
    fs::write(
        &recipe,
        "schema = 1\nname = \"exp5\"\nsplit = \"train\"\naugmentation = \"policy_0.25.toml\"\n\n\
         [[components]]\nname = \"cv\"\nmanifest = \"cv/train.tsv\"\nformat = \"cv_tsv\"\n\n\
         [[components]]\nname = \"tts\"\nmanifest = \"tts/manifest.jsonl\"\n\n\
         [[components]]\nname = \"gen_tts\"\nmanifest = \"gen_tts/manifest.jsonl\"\n\n\
         [[components]]\nname = \"gen_vc\"\nmanifest = \"gen_vc/manifest.jsonl\"\n",
    )
    .unwrap();
    recipe
}
