//! Run configuration: a JSON file merged with command-line overrides.

use std::path::{Path, PathBuf};

use factguard::datapipe::{Lang, ProviderConfig};
use factguard::distill::DistillConfig;
use factguard::evalbench::SyntheticSpec;
use factguard::fusion::ModelConfig;
use factguard::training::TrainConfig;
use factguard::{Error, Result};
use serde::{Deserialize, Serialize};

/// Where examples come from. Exactly one of `synthetic` and `dataset` must be
/// set; `bundle` adds precomputed encodings to a dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bundle: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticSpec>,
    /// Seed of the synthetic generator.
    #[serde(default = "default_data_seed")]
    pub seed: u64,
    #[serde(default = "default_vocab_size")]
    pub vocab_size: usize,
    #[serde(default = "default_max_len")]
    pub max_len: usize,
    #[serde(default = "default_layers")]
    pub encoder_layers: usize,
}

fn default_data_seed() -> u64 {
    factguard::training::DEFAULT_SEED
}
fn default_vocab_size() -> usize {
    5000
}
fn default_max_len() -> usize {
    64
}
fn default_layers() -> usize {
    2
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            dataset: None,
            bundle: None,
            synthetic: None,
            seed: default_data_seed(),
            vocab_size: default_vocab_size(),
            max_len: default_max_len(),
            encoder_layers: default_layers(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub distill: DistillConfig,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provider: Option<ProviderConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Overrides the training and distillation seeds when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lang: Option<Lang>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            distill: DistillConfig::default(),
            data: DataConfig {
                seed: default_data_seed(),
                vocab_size: default_vocab_size(),
                max_len: default_max_len(),
                encoder_layers: default_layers(),
                ..DataConfig::default()
            },
            provider: None,
            output_dir: None,
            seed: None,
            lang: None,
        }
    }
}

impl RunConfig {
    /// Reads a config file; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: Self =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut Option<PathBuf>| {
            if let Some(x) = p {
                if x.is_relative() {
                    *x = base.join(&*x);
                }
            }
        };
        rebase(&mut cfg.data.dataset);
        rebase(&mut cfg.data.bundle);
        rebase(&mut cfg.output_dir);
        Ok(cfg)
    }

    pub fn load_or_default(path: Option<&Path>) -> Result<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }

    /// Applies the top-level seed and checks every section.
    pub fn resolve(mut self) -> Result<Self> {
        if let Some(s) = self.seed {
            self.train.seed = s;
            self.distill.seed = s;
        }
        self.model.validate()?;
        self.train.validate()?;
        self.distill.validate()?;
        if let Some(p) = &self.provider {
            p.validate()?;
        }
        if let Some(s) = &self.data.synthetic {
            s.validate()?;
            if s.d != self.model.d {
                return Err(Error::Config(format!(
                    "synthetic data has d={} but the model has d={}",
                    s.d, self.model.d
                )));
            }
        }
        if self.data.max_len == 0 || self.data.vocab_size < 4 {
            return Err(Error::Config("data.max_len must be positive and data.vocab_size at least 4".into()));
        }
        Ok(self)
    }

    pub fn output_dir(&self, flag: Option<&Path>) -> Result<PathBuf> {
        flag.map(Path::to_path_buf)
            .or_else(|| self.output_dir.clone())
            .ok_or_else(|| Error::Config("no output directory: pass --out or set output_dir".into()))
    }
}
