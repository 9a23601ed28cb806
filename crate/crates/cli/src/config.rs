//! Global settings: flag > environment > config file > default.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

/// Optional TOML file passed with `--config`.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub master_seed: Option<u64>,
    pub workers: Option<usize>,
    pub working_rate: Option<u32>,
    pub noise_index: Option<PathBuf>,
    pub rir_index: Option<PathBuf>,
    pub speaker_pool: Option<PathBuf>,
    pub tts_adapter: Option<PathBuf>,
    pub vc_adapter: Option<PathBuf>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: ConfigFile =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let root = path.parent().unwrap_or(Path::new("."));
        for p in [
            &mut cfg.noise_index,
            &mut cfg.rir_index,
            &mut cfg.speaker_pool,
            &mut cfg.tts_adapter,
            &mut cfg.vc_adapter,
        ] {
            *p = p.take().map(|p| root.join(p));
        }
        Ok(cfg)
    }
}

#[derive(Debug)]
pub struct Settings {
    pub master_seed: u64,
    pub workers: usize,
    pub working_rate: u32,
    pub file: ConfigFile,
}

impl Settings {
    /// `seed` and `workers` already carry flag-or-environment values.
    pub fn resolve(
        seed: Option<u64>,
        workers: Option<usize>,
        working_rate: Option<u32>,
        config: Option<&Path>,
    ) -> Result<Self> {
        let file = match config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        let workers = workers.or(file.workers).unwrap_or(1);
        if workers == 0 {
            bail!("workers must be at least 1");
        }
        let working_rate = working_rate.or(file.working_rate).unwrap_or(16_000);
        if working_rate == 0 {
            bail!("working rate must be positive");
        }
        Ok(Self {
            master_seed: seed.or(file.master_seed).unwrap_or(0),
            workers,
            working_rate,
            file,
        })
    }
}
