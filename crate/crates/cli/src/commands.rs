use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use augvox_core::augment::PolicyFile;
use augvox_core::corpus::{
    augment_manifest, exceeds_skip_threshold, load_manifest, materialize_recipe, preprocess_corpus, save_manifest,
    ExperimentRecipe, LoadOptions, ManifestFormat, MaterializeOptions, PreprocessOptions,
};
use augvox_core::eval::{corpus_wer, join_hypotheses, load_hypotheses};
use augvox_core::synth::{
    clone_corpus, gen_tts_dataset, gen_vc_dataset, AdapterSpec, GenerationOptions, GenerationOutcome, SpeakerPool,
};
use augvox_core::{Manifest, PreprocessConfig, SynthError, WerReport, WerTable};
use serde::Deserialize;

use crate::config::Settings;
use crate::{
    AssembleArgs, AugmentArgs, GenerateCommon, GenerateKind, InputManifest, PreprocessArgs, ReportArgs, Status,
    WerArgs,
};

const MANIFEST_FILE: &str = "manifest.jsonl";

fn load_input(input: &InputManifest) -> Result<Manifest> {
    let format = input.format.unwrap_or_else(|| {
        match input.manifest.extension().and_then(|e| e.to_str()) {
            Some("tsv") => ManifestFormat::CvTsv,
            _ => ManifestFormat::Jsonl,
        }
    });
    let options = LoadOptions {
        split: input.split,
        ..Default::default()
    };
    load_manifest(&input.manifest, format, &options)
        .with_context(|| format!("loading manifest {}", input.manifest.display()))
}

fn write_output(manifest: &Manifest, out_dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let path = out_dir.join(MANIFEST_FILE);
    save_manifest(manifest, &path, ManifestFormat::Jsonl)?;
    println!("wrote {} utterance(s) to {}", manifest.len(), path.display());
    Ok(path)
}

pub fn preprocess(settings: &Settings, args: PreprocessArgs) -> Result<Status> {
    let manifest = load_input(&args.input)?;
    let config = PreprocessConfig {
        target_rate: settings.working_rate,
        peak_target_dbfs: args.peak_dbfs,
        silence_threshold_dbfs: args.silence_threshold_dbfs,
        silence_pad_ms: args.silence_pad_ms,
    };
    let options = PreprocessOptions {
        out_dir: args.out_dir.clone(),
        workers: settings.workers,
        encoding: args.encoding,
    };
    let outcome = preprocess_corpus(&manifest, &config, &options)?;
    write_output(&outcome.manifest, &args.out_dir)?;
    if !outcome.skipped.is_empty() {
        eprintln!(
            "skipped {} of {} clip(s); see {}",
            outcome.skipped.len(),
            manifest.len(),
            args.out_dir.join("skipped.jsonl").display()
        );
    }
    if exceeds_skip_threshold(outcome.skipped.len(), manifest.len(), args.max_skip_fraction) {
        eprintln!("skip fraction exceeds {}", args.max_skip_fraction);
        return Ok(Status::TooManySkips);
    }
    Ok(Status::Done)
}

fn materialize_options(settings: &Settings, out_dir: &Path, encoding: augvox_core::WavEncoding) -> MaterializeOptions {
    MaterializeOptions {
        out_dir: out_dir.to_path_buf(),
        master_seed: settings.master_seed,
        working_rate: settings.working_rate,
        workers: settings.workers,
        encoding,
        noise_index: settings.file.noise_index.clone(),
        rir_index: settings.file.rir_index.clone(),
    }
}

pub fn augment(settings: &Settings, args: AugmentArgs) -> Result<Status> {
    let manifest = load_input(&args.input)?;
    let mut file = PolicyFile::load(&args.policy)?;
    file.noise_index = file.noise_index.or_else(|| settings.file.noise_index.clone());
    file.rir_index = file.rir_index.or_else(|| settings.file.rir_index.clone());
    let policy = file.into_policy(settings.master_seed, settings.working_rate)?;
    let options = materialize_options(settings, &args.out_dir, args.encoding);
    let out = augment_manifest(&manifest, &policy, args.epoch, &options)?;
    write_output(&out, &args.out_dir)?;
    Ok(Status::Done)
}

fn adapter(explicit: &Option<PathBuf>, fallback: &Option<PathBuf>, what: &str) -> Result<AdapterSpec> {
    let path = explicit
        .as_ref()
        .or(fallback.as_ref())
        .ok_or_else(|| anyhow!("no {what} adapter given (use --adapter or set it in the config file)"))?;
    Ok(AdapterSpec::load(path)?)
}

fn pool(explicit: &Option<PathBuf>, settings: &Settings) -> Result<SpeakerPool> {
    let path = explicit
        .as_ref()
        .or(settings.file.speaker_pool.as_ref())
        .ok_or_else(|| anyhow!("no speaker pool given (use --pool or set speaker_pool in the config file)"))?;
    Ok(SpeakerPool::load(path)?)
}

fn generation_options(settings: &Settings, common: &GenerateCommon) -> GenerationOptions {
    GenerationOptions {
        out_dir: common.out_dir.clone(),
        master_seed: settings.master_seed,
        working_rate: settings.working_rate,
        workers: settings.workers,
        resume: common.resume,
        max_failure_fraction: common.max_failure_fraction,
        encoding: common.encoding,
        name: common.name.clone(),
    }
}

pub fn generate(settings: &Settings, kind: GenerateKind) -> Result<Status> {
    let (result, out_dir) = match &kind {
        GenerateKind::Clone(common) => {
            let manifest = load_input(&common.input)?;
            let adapter = adapter(&common.adapter, &settings.file.tts_adapter, "TTS")?;
            (
                clone_corpus(&manifest, &adapter, &generation_options(settings, common)),
                &common.out_dir,
            )
        }
        GenerateKind::GenTts { common, pool: p } => {
            let manifest = load_input(&common.input)?;
            let adapter = adapter(&common.adapter, &settings.file.tts_adapter, "TTS")?;
            let pool = pool(p, settings)?;
            (
                gen_tts_dataset(&manifest, &pool, &adapter, &generation_options(settings, common)),
                &common.out_dir,
            )
        }
        GenerateKind::GenVc {
            common,
            pool: p,
            transfers,
        } => {
            let manifest = load_input(&common.input)?;
            let adapter = adapter(&common.adapter, &settings.file.vc_adapter, "VC")?;
            let pool = pool(p, settings)?;
            (
                gen_vc_dataset(&manifest, &pool, &adapter, *transfers, &generation_options(settings, common)),
                &common.out_dir,
            )
        }
    };
    match result {
        Ok(outcome) => {
            report_generation(&outcome, out_dir)?;
            Ok(Status::Done)
        }
        Err(SynthError::TooManyFailures {
            failed,
            total,
            max_fraction,
            outcome,
        }) => {
            report_generation(&outcome, out_dir)?;
            eprintln!("{failed} of {total} item(s) failed, above the allowed fraction {max_fraction}");
            Ok(Status::TooManySkips)
        }
        Err(e) => Err(e.into()),
    }
}

fn report_generation(outcome: &GenerationOutcome, out_dir: &Path) -> Result<()> {
    write_output(&outcome.manifest, out_dir)?;
    println!("adapter calls: {}", outcome.adapter_calls);
    if !outcome.skipped.is_empty() {
        eprintln!(
            "skipped {} item(s); see {}",
            outcome.skipped.len(),
            out_dir.join("skipped.jsonl").display()
        );
    }
    Ok(())
}

pub fn assemble(settings: &Settings, args: AssembleArgs) -> Result<Status> {
    let recipe = ExperimentRecipe::load(&args.recipe)?;
    let options = materialize_options(settings, &args.out_dir, args.encoding);
    let manifest = materialize_recipe(&recipe, args.epoch, &options)?;
    write_output(&manifest, &args.out_dir)?;
    Ok(Status::Done)
}

pub fn wer(args: WerArgs) -> Result<Status> {
    let manifest = load_input(&args.input)?;
    let hypotheses = load_hypotheses(&args.hypotheses)?;
    let pairs = join_hypotheses(&manifest, &hypotheses)?;
    let report = corpus_wer(&pairs, &args.lang, args.normalization)?;

    let mut table = WerTable::new("Experiment", vec![args.lang.clone()]);
    let label = args.label.unwrap_or_else(|| manifest.name.clone());
    table.push_reports(label, &[Some(report)])?;
    print!("{}", table.to_text());
    println!(
        "S={} D={} I={} N={}{}",
        report.substitutions,
        report.deletions,
        report.insertions,
        report.ref_words,
        if report.degenerate { " (empty reference)" } else { "" }
    );

    fs::create_dir_all(&args.out_dir).with_context(|| format!("creating {}", args.out_dir.display()))?;
    fs::write(args.out_dir.join("wer.csv"), table.to_csv())?;
    fs::write(
        args.out_dir.join("wer.json"),
        serde_json::to_string_pretty(&report)? + "\n",
    )?;
    Ok(Status::Done)
}

/// `report --table` input.
///
/// ```toml
/// title = "Experiment"
/// languages = ["PT", "RU"]
///
/// [[rows]]
/// label = "3. Common Voice + TTS dataset"
/// values = [20.39, 24.80]
///
/// [[rows]]
/// label = "6. This run"
/// reports = ["pt/wer.json", "ru/wer.json"]
/// ```
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableFile {
    #[serde(default = "default_title")]
    title: String,
    languages: Vec<String>,
    #[serde(default)]
    rows: Vec<RowSpec>,
}

fn default_title() -> String {
    "Experiment".into()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RowSpec {
    label: String,
    values: Option<Vec<f64>>,
    reports: Option<Vec<PathBuf>>,
}

pub fn report(args: ReportArgs) -> Result<Status> {
    let text = fs::read_to_string(&args.table).with_context(|| format!("reading {}", args.table.display()))?;
    let spec: TableFile = toml::from_str(&text).with_context(|| format!("parsing {}", args.table.display()))?;
    let root = args.table.parent().unwrap_or(Path::new("."));
    let mut table = WerTable::new(spec.title, spec.languages);
    for row in spec.rows {
        let values = match (row.values, row.reports) {
            (Some(v), None) => v.into_iter().map(Some).collect(),
            (None, Some(paths)) => paths
                .iter()
                .map(|p| {
                    let path = root.join(p);
                    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
                    let r: WerReport =
                        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
                    Ok(Some(r.wer))
                })
                .collect::<Result<Vec<_>>>()?,
            _ => bail!("row '{}' needs exactly one of `values` or `reports`", row.label),
        };
        table.push_values(row.label, values)?;
    }
    print!("{}", table.to_text());
    fs::create_dir_all(&args.out_dir).with_context(|| format!("creating {}", args.out_dir.display()))?;
    fs::write(args.out_dir.join("report.csv"), table.to_csv())?;
    fs::write(args.out_dir.join("report.txt"), table.to_text())?;
    Ok(Status::Done)
}
