mod common;

use std::fs;

use common::*;

fn stderr(out: &std::process::Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout(out: &std::process::Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn preprocess_valid_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let tsv = cv_corpus(&dir.path().join("cv"), 4, 2, "pt-BR");
    let out_dir = dir.path().join("pre");
    let out = augvox(&["preprocess", "--manifest", p(&tsv), "--out-dir", p(&out_dir)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(lines(&out_dir.join("manifest.jsonl")), 4);
    assert_eq!(lines(&out_dir.join("skipped.jsonl")), 0);
}

#[test]
fn preprocess_unreadable_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = augvox(&["preprocess", "--manifest", p(&dir.path().join("missing.tsv")), "--out-dir", p(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("missing.tsv"), "{}", stderr(&out));
}

#[test]
fn preprocess_skips_and_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let tsv = cv_corpus(&dir.path().join("cv"), 4, 2, "pt-BR");
    write_clip(
        &dir.path().join("cv/clips/cv_pt-BR_0002.wav"),
        &augvox_core::AudioClip::new(vec![0.0; 4000], 16_000).unwrap(),
    );
    let under = dir.path().join("under");
    let out = augvox(&[
        "preprocess", "--manifest", p(&tsv), "--out-dir", p(&under), "--max-skip-fraction", "0.5",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(lines(&under.join("skipped.jsonl")), 1);
    assert_eq!(lines(&under.join("manifest.jsonl")), 3);

    let over = dir.path().join("over");
    let out = augvox(&["preprocess", "--manifest", p(&tsv), "--out-dir", p(&over)]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(lines(&over.join("manifest.jsonl")), 3, "outputs are still written");
}

#[test]
fn augment_with_zero_probability_copies_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let tsv = cv_corpus(&dir.path().join("cv"), 5, 2, "ru-RU");
    let policy = policy(dir.path(), 0.0);
    let out_dir = dir.path().join("aug");
    let out = augvox(&["augment", "--manifest", p(&tsv), "--policy", p(&policy), "--epoch", "2", "--out-dir", p(&out_dir)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let m = augvox_core::corpus::load_manifest(
        &out_dir.join("manifest.jsonl"),
        augvox_core::corpus::ManifestFormat::Jsonl,
        &Default::default(),
    )
    .unwrap();
    for (i, u) in m.utterances().iter().enumerate() {
        let src = dir.path().join(format!("cv/clips/cv_ru-RU_{i:04}.wav"));
        assert_eq!(fs::read(m.resolve(u)).unwrap(), fs::read(src).unwrap());
    }
}

#[test]
fn augment_replays_identically() {
    let dir = tempfile::tempdir().unwrap();
    let tsv = cv_corpus(&dir.path().join("cv"), 6, 2, "pt-BR");
    let policy = policy(dir.path(), 0.5);
    let run = |sub: &str| {
        let out_dir = dir.path().join(sub);
        let out = augvox(&["--seed", "4", "augment", "--manifest", p(&tsv), "--policy", p(&policy), "--out-dir", p(&out_dir)]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        tree_digest(&out_dir)
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn augment_rejects_invalid_policy() {
    let dir = tempfile::tempdir().unwrap();
    let tsv = cv_corpus(&dir.path().join("cv"), 2, 1, "pt-BR");
    let policy = dir.path().join("bad.toml");
    fs::write(&policy, "schema = 1\np_select = 1.5\n").unwrap();
    let out = augvox(&["augment", "--manifest", p(&tsv), "--policy", p(&policy), "--out-dir", p(&dir.path().join("o"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("p_select"), "{}", stderr(&out));
}

#[test]
fn augment_names_missing_resources() {
    let dir = tempfile::tempdir().unwrap();
    let tsv = cv_corpus(&dir.path().join("cv"), 2, 1, "pt-BR");
    let policy = policy(dir.path(), 0.25);
    fs::remove_file(dir.path().join("musan/music/music_a.wav")).unwrap();
    let out = augvox(&["augment", "--manifest", p(&tsv), "--policy", p(&policy), "--out-dir", p(&dir.path().join("o"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("music_a.wav"), "{}", stderr(&out));

    fs::write(dir.path().join("rirs.txt"), "rirs/gone.wav\n").unwrap();
    let out = augvox(&["augment", "--manifest", p(&tsv), "--policy", p(&policy), "--out-dir", p(&dir.path().join("o"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("gone.wav"), "{}", stderr(&out));
}

#[test]
fn gen_vc_five_transfers() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = single_speaker_corpus(&dir.path().join("tts"), 10);
    let pool = speaker_pool(dir.path(), 7);
    let adapter = stub_adapter(dir.path(), "passthrough");
    let out_dir = dir.path().join("vc");
    let out = augvox(&[
        "generate", "gen-vc", "--manifest", p(&corpus), "--pool", p(&pool), "--adapter", p(&adapter),
        "--out-dir", p(&out_dir),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(lines(&out_dir.join("manifest.jsonl")), 50);
}

#[test]
fn gen_vc_pool_too_small() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = single_speaker_corpus(&dir.path().join("tts"), 2);
    let pool = speaker_pool(dir.path(), 3);
    let adapter = stub_adapter(dir.path(), "passthrough");
    let out = augvox(&[
        "generate", "gen-vc", "--manifest", p(&corpus), "--pool", p(&pool), "--adapter", p(&adapter),
        "--out-dir", p(&dir.path().join("vc")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("3 speaker(s)"), "{}", stderr(&out));
}

#[test]
fn clone_of_empty_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.jsonl");
    fs::write(&empty, "").unwrap();
    let adapter = stub_adapter(dir.path(), "tone");
    let out_dir = dir.path().join("clone");
    let out = augvox(&["generate", "clone", "--manifest", p(&empty), "--adapter", p(&adapter), "--out-dir", p(&out_dir)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(lines(&out_dir.join("manifest.jsonl")), 0);
}

#[test]
fn adapter_can_come_from_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let tsv = cv_corpus(&dir.path().join("cv"), 3, 3, "pt-BR");
    stub_adapter(dir.path(), "tone");
    speaker_pool(dir.path(), 2);
    let config = dir.path().join("augvox.toml");
    fs::write(&config, "tts_adapter = \"stub_tone.toml\"\nspeaker_pool = \"pool.tsv\"\nworkers = 2\n").unwrap();
    let out_dir = dir.path().join("g");
    let out = augvox(&["--config", p(&config), "generate", "gen-tts", "--manifest", p(&tsv), "--out-dir", p(&out_dir)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(lines(&out_dir.join("manifest.jsonl")), 3);
}

#[test]
fn seed_precedence_flag_env_config() {
    let dir = tempfile::tempdir().unwrap();
    let tsv = cv_corpus(&dir.path().join("cv"), 4, 2, "pt-BR");
    let adapter = stub_adapter(dir.path(), "tone");
    let config = dir.path().join("c.toml");
    fs::write(&config, "master_seed = 7\n").unwrap();
    let run = |sub: &str, extra: &[&str], env: &[(&str, &str)]| {
        let out_dir = dir.path().join(sub);
        let mut args: Vec<&str> = extra.to_vec();
        args.extend(["generate", "clone", "--manifest", p(&tsv), "--adapter", p(&adapter), "--out-dir", p(&out_dir)]);
        let out = augvox_env(&args, env);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        fs::read_to_string(out_dir.join("checkpoint.jsonl")).unwrap()
    };
    let seven = run("s7", &["--seed", "7"], &[]);
    let one = run("s1", &["--seed", "1"], &[]);
    assert_ne!(seven, one);
    assert_eq!(run("cfg", &["--config", p(&config)], &[]), seven);
    assert_eq!(run("env", &["--config", p(&config)], &[("AUGVOX_SEED", "1")]), one);
    assert_eq!(run("flag", &["--config", p(&config), "--seed", "7"], &[("AUGVOX_SEED", "1")]), seven);
}

#[test]
fn resume_does_not_redo_finished_items() {
    let dir = tempfile::tempdir().unwrap();
    let tsv = cv_corpus(&dir.path().join("cv"), 6, 2, "pt-BR");
    let log = dir.path().join("calls.log");
    let stop = dir.path().join("stop");
    let script = dir.path().join("tts.sh");
    // fails every call once the `stop` file exists, like a crashed server
    fs::write(
        &script,
        format!(
            "#!/bin/sh\nif [ -e {stop} ]; then exit 1; fi\necho \"$1\" >> {log}\nn=$(wc -l < {log})\nif [ \"$n\" -ge 4 ]; then touch {stop}; fi\ncp \"$2\" \"$3\"\n",
            stop = stop.display(),
            log = log.display()
        ),
    )
    .unwrap();
    let adapter = dir.path().join("tts.toml");
    fs::write(
        &adapter,
        format!("mode = \"subprocess\"\ncommand = \"sh {} {{text}} {{speaker_ref}} {{out}} {{L}} {{T}} {{Tdp}}\"\n", script.display()),
    )
    .unwrap();
    let out_dir = dir.path().join("clone");
    let args = ["generate", "clone", "--manifest", p(&tsv), "--adapter", p(&adapter), "--out-dir", p(&out_dir)];

    let first = augvox(&args);
    assert_eq!(first.status.code(), Some(2), "{}", stderr(&first));
    assert_eq!(lines(&log), 4);
    assert_eq!(lines(&out_dir.join("skipped.jsonl")), 2);

    fs::remove_file(&stop).unwrap();
    fs::write(&log, "").unwrap();
    let mut resumed = args.to_vec();
    resumed.push("--resume");
    let second = augvox(&resumed);
    assert_eq!(second.status.code(), Some(0), "{}", stderr(&second));
    assert_eq!(lines(&log), 2, "only the two unfinished items are synthesized again");
    assert_eq!(lines(&out_dir.join("manifest.jsonl")), 6);
    assert!(stdout(&second).contains("adapter calls: 2"));
}

#[test]
fn assemble_single_manifest_pass_through() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = single_speaker_corpus(&dir.path().join("tts"), 3);
    let recipe = dir.path().join("r.toml");
    fs::write(&recipe, "schema = 1\nname = \"one\"\n[[components]]\nname = \"tts\"\nmanifest = \"tts/manifest.jsonl\"\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = augvox(&["assemble", "--recipe", p(&recipe), "--out-dir", p(&out_dir)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let opts = Default::default();
    let fmt = augvox_core::corpus::ManifestFormat::Jsonl;
    let a = augvox_core::corpus::load_manifest(&corpus, fmt, &opts).unwrap();
    let b = augvox_core::corpus::load_manifest(&out_dir.join("manifest.jsonl"), fmt, &opts).unwrap();
    assert_eq!(a.len(), b.len());
    for (x, y) in a.utterances().iter().zip(b.utterances()) {
        assert_eq!(a.resolve(x), b.resolve(y));
        assert_eq!(x.transcript, y.transcript);
    }
}

#[test]
fn assemble_exp5_cardinality() {
    let dir = tempfile::tempdir().unwrap();
    let (cv, n) = (6, 3);
    let recipe = exp5_fixture(dir.path(), cv, n);
    let out_dir = dir.path().join("out");
    let out = augvox(&["assemble", "--recipe", p(&recipe), "--out-dir", p(&out_dir), "--epoch", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(lines(&dir.path().join("gen_tts/manifest.jsonl")), cv);
    assert_eq!(lines(&dir.path().join("gen_vc/manifest.jsonl")), 5 * n);
    assert_eq!(lines(&out_dir.join("manifest.jsonl")), 2 * cv + 6 * n);
}

#[test]
fn assemble_missing_manifest_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let recipe = dir.path().join("r.toml");
    fs::write(&recipe, "schema = 1\nname = \"x\"\n[[components]]\nname = \"gen_vc\"\nmanifest = \"nowhere.jsonl\"\n").unwrap();
    let out = augvox(&["assemble", "--recipe", p(&recipe), "--out-dir", p(&dir.path().join("o"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("gen_vc"), "{}", stderr(&out));
}

fn wer_fixture(dir: &std::path::Path, hyps: &[(&str, &str)]) -> (std::path::PathBuf, std::path::PathBuf) {
    let corpus = dir.join("ref.jsonl");
    fs::write(
        &corpus,
        "{\"id\":\"a\",\"audio_path\":\"a.wav\",\"transcript\":\"O gato subiu.\",\"speaker_id\":\"s\",\"language\":\"pt-BR\",\"origin\":\"human\"}\n\
         {\"id\":\"b\",\"audio_path\":\"b.wav\",\"transcript\":\"Ela canta bem!\",\"speaker_id\":\"s\",\"language\":\"pt-BR\",\"origin\":\"human\"}\n",
    )
    .unwrap();
    let hyp = dir.join("hyp.jsonl");
    let body: String = hyps
        .iter()
        .map(|(id, h)| format!("{{\"id\":\"{id}\",\"hypothesis\":\"{h}\"}}\n"))
        .collect();
    fs::write(&hyp, body).unwrap();
    (corpus, hyp)
}

#[test]
fn wer_identical_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let (corpus, hyp) = wer_fixture(dir.path(), &[("a", "o gato subiu"), ("b", "ela canta bem")]);
    let out_dir = dir.path().join("w");
    let out = augvox(&["wer", "--manifest", p(&corpus), "--hypotheses", p(&hyp), "--lang", "pt-BR", "--out-dir", p(&out_dir)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("0.00"));
    assert_eq!(fs::read_to_string(out_dir.join("wer.csv")).unwrap(), "Experiment,pt-BR\nref,0.00\n");
}

#[test]
fn wer_one_substitution_in_six_words() {
    let dir = tempfile::tempdir().unwrap();
    let (corpus, hyp) = wer_fixture(dir.path(), &[("a", "o rato subiu"), ("b", "ela canta bem")]);
    let out_dir = dir.path().join("w");
    let out = augvox(&[
        "wer", "--manifest", p(&corpus), "--hypotheses", p(&hyp), "--lang", "pt-BR", "--label", "exp", "--out-dir", p(&out_dir),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("16.67"), "{}", stdout(&out));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out_dir.join("wer.json")).unwrap()).unwrap();
    assert_eq!(report["substitutions"], 1);
    assert_eq!(report["ref_words"], 6);
}

#[test]
fn wer_orphan_hypotheses() {
    let dir = tempfile::tempdir().unwrap();
    let (corpus, hyp) = wer_fixture(dir.path(), &[("a", "x"), ("b", "y"), ("zz", "q"), ("yy", "r")]);
    let out = augvox(&["wer", "--manifest", p(&corpus), "--hypotheses", p(&hyp), "--lang", "pt-BR", "--out-dir", p(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("zz, yy"), "{}", stderr(&out));
}

#[test]
fn report_renders_table_values() {
    let dir = tempfile::tempdir().unwrap();
    let (corpus, hyp) = wer_fixture(dir.path(), &[("a", "o rato subiu"), ("b", "ela canta bem")]);
    let w = dir.path().join("w");
    assert!(augvox(&["wer", "--manifest", p(&corpus), "--hypotheses", p(&hyp), "--lang", "pt-BR", "--out-dir", p(&w)]).status.success());
    let table = dir.path().join("table.toml");
    fs::write(
        &table,
        "languages = [\"PT\", \"RU\"]\n[[rows]]\nlabel = \"3. Common Voice + TTS dataset\"\nvalues = [20.39, 24.80]\n\
         [[rows]]\nlabel = \"local\"\nreports = [\"w/wer.json\", \"w/wer.json\"]\n",
    )
    .unwrap();
    let out_dir = dir.path().join("r");
    let out = augvox(&["report", "--table", p(&table), "--out-dir", p(&out_dir)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(
        fs::read_to_string(out_dir.join("report.csv")).unwrap(),
        "Experiment,PT,RU\n3. Common Voice + TTS dataset,20.39,24.80\nlocal,16.67,16.67\n"
    );
    assert_eq!(stdout(&out), fs::read_to_string(out_dir.join("report.txt")).unwrap());
}

#[test]
fn zero_workers_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = augvox_env(
        &["report", "--table", p(&dir.path().join("t.toml")), "--out-dir", p(dir.path())],
        &[("AUGVOX_WORKERS", "0")],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("workers"));
}
