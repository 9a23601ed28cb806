use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::audio::{load_wav, probe_duration, save_wav, WavEncoding};
use crate::augment::{apply_plan, draw_plan, AugmentationPolicy, PolicyFile};
use crate::exec::{clip_file_name, ordered_map};

use super::{
    load_manifest, merge, AugmentationRecord, CorpusError, LoadOptions, Manifest, ManifestFormat, Split,
    Utterance,
};

pub const RECIPE_SCHEMA: u32 = 1;

/// A dataset composition, e.g. Common Voice plus several synthetic sets.
///
/// ```toml
/// schema = 1
/// name = "exp5"
/// split = "train"
/// augmentation = "policy.toml"
///
/// [[components]]
/// name = "cv"
/// manifest = "cv/train.tsv"
/// format = "cv_tsv"
///
/// [[components]]
/// name = "gen_vc"
/// manifest = "gen_vc/manifest.jsonl"
/// include = false
/// ```
///
/// Relative paths resolve against the recipe file. A component may name an
/// `ids` file (one id per line) to take a fixed subset of its manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentRecipe {
    pub schema: u32,
    pub name: String,
    #[serde(default)]
    pub split: Split,
    pub components: Vec<RecipeComponent>,
    #[serde(default)]
    pub augmentation: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecipeComponent {
    pub name: String,
    pub manifest: PathBuf,
    #[serde(default = "default_format")]
    pub format: ManifestFormat,
    #[serde(default = "default_include")]
    pub include: bool,
    #[serde(default)]
    pub ids: Option<PathBuf>,
    #[serde(default)]
    pub language: Option<String>,
}

fn default_format() -> ManifestFormat {
    ManifestFormat::Jsonl
}

fn default_include() -> bool {
    true
}

impl ExperimentRecipe {
    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut recipe: ExperimentRecipe = toml::from_str(&text).map_err(|e| CorpusError::Recipe {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        if recipe.schema != RECIPE_SCHEMA {
            return Err(CorpusError::Recipe {
                path: path.to_path_buf(),
                message: format!("unsupported schema {} (expected {RECIPE_SCHEMA})", recipe.schema),
            });
        }
        if recipe.components.is_empty() {
            return Err(CorpusError::Recipe {
                path: path.to_path_buf(),
                message: "at least one component is required".into(),
            });
        }
        let root = path.parent().unwrap_or(Path::new("."));
        for c in &mut recipe.components {
            c.manifest = root.join(&c.manifest);
            c.ids = c.ids.as_ref().map(|p| root.join(p));
        }
        recipe.augmentation = recipe.augmentation.map(|p| root.join(p));
        Ok(recipe)
    }

    /// Loads every included component, in recipe order.
    pub fn load_components(&self) -> Result<Vec<Manifest>, CorpusError> {
        self.components
            .iter()
            .filter(|c| c.include)
            .map(|c| {
                if !c.manifest.is_file() {
                    return Err(CorpusError::MissingManifest {
                        name: c.name.clone(),
                        path: c.manifest.clone(),
                    });
                }
                let options = LoadOptions {
                    split: self.split,
                    name: Some(c.name.clone()),
                    language: c.language.clone(),
                    audio_root: None,
                };
                let m = load_manifest(&c.manifest, c.format, &options)?;
                match &c.ids {
                    Some(ids) => select_ids(m, ids),
                    None => Ok(m),
                }
            })
            .collect()
    }
}

fn select_ids(manifest: Manifest, ids_path: &Path) -> Result<Manifest, CorpusError> {
    let text = fs::read_to_string(ids_path).map_err(|source| CorpusError::Io {
        path: ids_path.to_path_buf(),
        source,
    })?;
    let wanted: HashSet<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
    let (name, split, base) = (manifest.name.clone(), manifest.split, manifest.base_dir.clone());
    let kept = manifest
        .into_utterances()
        .into_iter()
        .filter(|u| wanted.contains(u.id.as_str()))
        .collect();
    Manifest::new(name, split, base, kept)
}

#[derive(Debug, Clone)]
pub struct MaterializeOptions {
    pub out_dir: PathBuf,
    pub master_seed: u64,
    pub working_rate: u32,
    pub workers: usize,
    pub encoding: WavEncoding,
    /// Noise index used when the policy file names none.
    pub noise_index: Option<PathBuf>,
    /// RIR index used when the policy file names none.
    pub rir_index: Option<PathBuf>,
}

impl MaterializeOptions {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        Self {
            out_dir: out_dir.into(),
            master_seed: 0,
            working_rate: 16_000,
            workers: 1,
            encoding: WavEncoding::Float32,
            noise_index: None,
            rir_index: None,
        }
    }
}

/// Merges the recipe's components and, when it names a policy, writes the
/// epoch's augmented variant of every utterance under `out_dir/audio/`.
pub fn materialize_recipe(
    recipe: &ExperimentRecipe,
    epoch: u64,
    options: &MaterializeOptions,
) -> Result<Manifest, CorpusError> {
    let components = recipe.load_components()?;
    let merged = merge(&components, &recipe.name)?;
    match &recipe.augmentation {
        None => Ok(merged),
        Some(policy_path) => {
            let policy = PolicyFile::load(policy_path)
                .and_then(|mut f| {
                    f.noise_index = f.noise_index.or_else(|| options.noise_index.clone());
                    f.rir_index = f.rir_index.or_else(|| options.rir_index.clone());
                    f.into_policy(options.master_seed, options.working_rate)
                })
                .map_err(CorpusError::Policy)?;
            augment_manifest(&merged, &policy, epoch, options)
        }
    }
}

/// Draws and applies each utterance's plan for `epoch`.
///
/// Items whose plan is empty are copied byte for byte. Every output
/// utterance records the epoch and what was applied.
pub fn augment_manifest(
    manifest: &Manifest,
    policy: &AugmentationPolicy,
    epoch: u64,
    options: &MaterializeOptions,
) -> Result<Manifest, CorpusError> {
    policy.validate().map_err(CorpusError::Policy)?;
    policy.check_resources().map_err(CorpusError::Policy)?;
    let audio_dir = options.out_dir.join("audio");
    fs::create_dir_all(&audio_dir).map_err(|source| CorpusError::Io {
        path: audio_dir.clone(),
        source,
    })?;
    let out_dir = fs::canonicalize(&options.out_dir).map_err(|source| CorpusError::Io {
        path: options.out_dir.clone(),
        source,
    })?;

    let results = ordered_map(options.workers, manifest.utterances(), |i, utt| {
        augment_one(manifest, utt, i, policy, epoch, &out_dir, options.encoding)
    });
    let utterances = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    Manifest::new(manifest.name.clone(), manifest.split, out_dir, utterances)
}

fn augment_one(
    manifest: &Manifest,
    utt: &Utterance,
    index: usize,
    policy: &AugmentationPolicy,
    epoch: u64,
    out_dir: &Path,
    encoding: WavEncoding,
) -> Result<Utterance, CorpusError> {
    let augment_err = |source| CorpusError::Augment {
        id: utt.id.clone(),
        source,
    };
    let audio_err = |source| CorpusError::Audio {
        id: utt.id.clone(),
        source,
    };
    let src = manifest.resolve(utt);
    let rel = PathBuf::from("audio").join(clip_file_name(index, &utt.id));
    let dst = out_dir.join(&rel);

    let plan = draw_plan(policy, &utt.id, epoch).map_err(augment_err)?;
    let (applied, duration) = if plan.is_empty() {
        fs::copy(&src, &dst).map_err(|source| CorpusError::Io {
            path: src.clone(),
            source,
        })?;
        let duration = match utt.duration_s {
            Some(d) => d,
            None => probe_duration(&dst).map_err(audio_err)?,
        };
        (Default::default(), duration)
    } else {
        let clip = load_wav(&src).map_err(audio_err)?;
        let (out, applied) = apply_plan(&clip, &plan, policy).map_err(augment_err)?;
        save_wav(&out, &dst, encoding).map_err(audio_err)?;
        (applied, out.duration_s())
    };

    let mut provenance = utt.provenance.clone().unwrap_or_default();
    provenance.augmentation = Some(AugmentationRecord { epoch, applied });
    Ok(Utterance {
        audio_path: rel,
        duration_s: Some(duration),
        provenance: Some(provenance),
        ..utt.clone()
    })
}
