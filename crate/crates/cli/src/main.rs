mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use augvox_core::corpus::ManifestFormat;
use augvox_core::eval::Normalization;
use augvox_core::{Split, WavEncoding};
use clap::{Args, Parser, Subcommand};

use config::Settings;

/// Speech corpus preprocessing, augmentation, synthetic data generation and
/// WER evaluation.
#[derive(Debug, Parser)]
#[command(name = "augvox", version)]
struct Cli {
    /// Master seed for every random choice.
    #[arg(long, env = "AUGVOX_SEED", global = true)]
    seed: Option<u64>,
    /// Parallel workers; output does not depend on this.
    #[arg(long, env = "AUGVOX_WORKERS", global = true)]
    workers: Option<usize>,
    /// TOML file with defaults for global settings and resource paths.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Sample rate all audio is processed at.
    #[arg(long, global = true)]
    working_rate: Option<u32>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Resample, trim silence and peak-normalize a corpus.
    Preprocess(PreprocessArgs),
    /// Write one epoch's augmented variant of a corpus.
    Augment(AugmentArgs),
    /// Build a synthetic corpus through a TTS or VC adapter.
    Generate {
        #[command(subcommand)]
        kind: GenerateKind,
    },
    /// Merge the components of an experiment recipe, augmenting if it says so.
    Assemble(AssembleArgs),
    /// Score hypotheses against a manifest's transcripts.
    Wer(WerArgs),
    /// Render a table of WER results.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct InputManifest {
    /// Manifest to read.
    #[arg(long)]
    manifest: PathBuf,
    /// Manifest format; inferred from the extension when omitted.
    #[arg(long)]
    format: Option<ManifestFormat>,
    /// Split label for formats that do not carry one.
    #[arg(long, default_value = "train")]
    split: Split,
}

#[derive(Debug, Args)]
struct PreprocessArgs {
    #[command(flatten)]
    input: InputManifest,
    #[arg(long)]
    out_dir: PathBuf,
    /// Exit with status 2 when more than this fraction of clips is dropped.
    #[arg(long, default_value_t = 0.01)]
    max_skip_fraction: f64,
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    peak_dbfs: f64,
    #[arg(long, default_value_t = -40.0, allow_negative_numbers = true)]
    silence_threshold_dbfs: f64,
    #[arg(long, default_value_t = 200)]
    silence_pad_ms: u32,
    #[arg(long, default_value = "float32")]
    encoding: WavEncoding,
}

#[derive(Debug, Args)]
struct AugmentArgs {
    #[command(flatten)]
    input: InputManifest,
    /// Augmentation policy (TOML).
    #[arg(long)]
    policy: PathBuf,
    #[arg(long, default_value_t = 0)]
    epoch: u64,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value = "float32")]
    encoding: WavEncoding,
}

#[derive(Debug, Args)]
struct GenerateCommon {
    #[command(flatten)]
    input: InputManifest,
    /// Adapter description (TOML); defaults to the config's adapter.
    #[arg(long)]
    adapter: Option<PathBuf>,
    #[arg(long)]
    out_dir: PathBuf,
    /// Reuse items completed by an earlier run into the same directory.
    #[arg(long)]
    resume: bool,
    /// Fail (status 2) when more than this fraction of items fails.
    #[arg(long, default_value_t = 0.01)]
    max_failure_fraction: f64,
    /// Name of the output manifest.
    #[arg(long)]
    name: Option<String>,
    #[arg(long, default_value = "float32")]
    encoding: WavEncoding,
}

#[derive(Debug, Subcommand)]
enum GenerateKind {
    /// Re-synthesize every sentence in its own speaker's voice.
    Clone(GenerateCommon),
    /// Synthesize every sentence with a random pool speaker.
    GenTts {
        #[command(flatten)]
        common: GenerateCommon,
        /// Speaker pool (speaker_id<TAB>reference.wav).
        #[arg(long)]
        pool: Option<PathBuf>,
    },
    /// Convert every utterance to several distinct pool speakers.
    GenVc {
        #[command(flatten)]
        common: GenerateCommon,
        #[arg(long)]
        pool: Option<PathBuf>,
        #[arg(long, default_value_t = augvox_core::synth::DEFAULT_TRANSFERS)]
        transfers: usize,
    },
}

#[derive(Debug, Args)]
struct AssembleArgs {
    /// Experiment recipe (TOML).
    #[arg(long)]
    recipe: PathBuf,
    #[arg(long, default_value_t = 0)]
    epoch: u64,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value = "float32")]
    encoding: WavEncoding,
}

#[derive(Debug, Args)]
struct WerArgs {
    #[command(flatten)]
    input: InputManifest,
    /// JSON lines of {"id": ..., "hypothesis": ...}.
    #[arg(long)]
    hypotheses: PathBuf,
    /// Language tag used for normalization and as the column name.
    #[arg(long)]
    lang: String,
    #[arg(long, default_value = "standard")]
    normalization: Normalization,
    /// Row label; defaults to the manifest name.
    #[arg(long)]
    label: Option<String>,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Table description (TOML).
    #[arg(long)]
    table: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
}

/// How a successful command ended.
enum Status {
    Done,
    TooManySkips,
}

fn run(cli: Cli) -> anyhow::Result<Status> {
    let settings = Settings::resolve(cli.seed, cli.workers, cli.working_rate, cli.config.as_deref())?;
    match cli.command {
        Command::Preprocess(args) => commands::preprocess(&settings, args),
        Command::Augment(args) => commands::augment(&settings, args),
        Command::Generate { kind } => commands::generate(&settings, kind),
        Command::Assemble(args) => commands::assemble(&settings, args),
        Command::Wer(args) => commands::wer(args),
        Command::Report(args) => commands::report(args),
    }
}

/// The error chain on one line, skipping causes the message already quotes.
fn describe(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if !out.contains(&text) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&text);
        }
    }
    out
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(Status::Done) => ExitCode::SUCCESS,
        Ok(Status::TooManySkips) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(1)
        }
    }
}
