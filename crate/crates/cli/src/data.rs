use factguard::datapipe::{
    bundle_examples, corpus_vocab, load_dataset, split_examples, token_examples, NewsRecord, Split,
};
use factguard::encoding::{EmbeddingBundle, EncoderConfig, Vocabulary};
use factguard::evalbench::make_synthetic;
use factguard::fusion::{Example, ModelConfig};
use factguard::{Error, Result};

use crate::config::RunConfig;

pub struct Dataset {
    pub records: Vec<NewsRecord>,
    pub examples: Vec<Example>,
    /// Set when examples are token ids rather than precomputed encodings.
    pub vocab: Option<Vocabulary>,
}

impl Dataset {
    pub fn split(&self, split: Split) -> Vec<Example> {
        split_examples(&self.records, &self.examples, split)
    }

    pub fn nonempty_split(&self, split: Split) -> Result<Vec<Example>> {
        let ex = self.split(split);
        if ex.is_empty() {
            return Err(Error::Config(format!("the {split:?} split is empty")));
        }
        Ok(ex)
    }
}

fn records(cfg: &RunConfig) -> Result<Vec<NewsRecord>> {
    let path = cfg
        .data
        .dataset
        .as_ref()
        .ok_or_else(|| Error::Config("no data: set data.dataset or data.synthetic".into()))?;
    let (records, report) = load_dataset(path)?;
    if report.duplicates_dropped > 0 {
        log::warn!("dropped {} duplicate records from {}", report.duplicates_dropped, path.display());
    }
    Ok(records)
}

fn encoded(cfg: &RunConfig, d: usize) -> Result<Dataset> {
    if let Some(spec) = &cfg.data.synthetic {
        if cfg.data.dataset.is_some() {
            return Err(Error::Config("data.synthetic and data.dataset are mutually exclusive".into()));
        }
        let set = make_synthetic(spec, cfg.data.seed)?;
        return Ok(Dataset {
            records: set.records,
            examples: set.examples,
            vocab: None,
        });
    }
    let bundle = cfg
        .data
        .bundle
        .as_ref()
        .ok_or_else(|| Error::Config("model expects precomputed encodings; set data.bundle".into()))?;
    let records = records(cfg)?;
    let examples = bundle_examples(&records, &EmbeddingBundle::open(bundle)?, d)?;
    Ok(Dataset {
        records,
        examples,
        vocab: None,
    })
}

/// Data for a fresh model, plus the model config completed with an encoder
/// when the data is raw text.
pub fn for_training(cfg: &RunConfig) -> Result<(Dataset, ModelConfig)> {
    let mut model = cfg.model.clone();
    if cfg.data.synthetic.is_some() || cfg.data.bundle.is_some() {
        if model.encoder.is_some() {
            return Err(Error::Config("model.encoder is only used with raw-text datasets".into()));
        }
        return Ok((encoded(cfg, model.d)?, model));
    }
    let records = records(cfg)?;
    let vocab = corpus_vocab(&records, cfg.data.vocab_size)?;
    let enc = model.encoder.get_or_insert(EncoderConfig {
        vocab_size: vocab.len(),
        max_len: cfg.data.max_len,
        layers: cfg.data.encoder_layers,
    });
    enc.vocab_size = vocab.len();
    let examples = token_examples(&records, &vocab, enc.max_len)?;
    Ok((
        Dataset {
            records,
            examples,
            vocab: Some(vocab),
        },
        model,
    ))
}

/// Data shaped for an existing model.
pub fn for_model(cfg: &RunConfig, model: &ModelConfig, vocab: Option<&Vocabulary>) -> Result<Dataset> {
    match vocab {
        Some(v) => {
            let records = records(cfg)?;
            let max_len = model.encoder.as_ref().map_or(cfg.data.max_len, |e| e.max_len);
            let examples = token_examples(&records, v, max_len)?;
            Ok(Dataset {
                records,
                examples,
                vocab: Some(v.clone()),
            })
        }
        None => encoded(cfg, model.d),
    }
}
