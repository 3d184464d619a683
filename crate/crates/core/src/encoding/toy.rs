//! Small trainable transformer encoder standing in for a pretrained one.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autograd::{Tape, Var};
use crate::encoding::vocab::TokenSequence;
use crate::encoding::{EncodedSequence, Role};
use crate::error::{Error, Result};
use crate::nn::linear::Activation;
use crate::nn::transformer::TransformerBlock;
use crate::params::{Init, ParamId, ParamStore};
use crate::tensor::Matrix;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncoderConfig {
    pub vocab_size: usize,
    pub max_len: usize,
    #[serde(default = "default_layers")]
    pub layers: usize,
}

fn default_layers() -> usize {
    2
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToyEncoder {
    pub embedding: ParamId,
    pub position: ParamId,
    pub blocks: Vec<TransformerBlock>,
    pub vocab_size: usize,
    pub max_len: usize,
    pub dim: usize,
}

impl ToyEncoder {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        cfg: &EncoderConfig,
        dim: usize,
        heads: usize,
        activation: Activation,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        if cfg.vocab_size == 0 || cfg.max_len == 0 {
            return Err(Error::config("encoder needs a nonempty vocabulary and max_len >= 1"));
        }
        let embedding = store.add(
            format!("{name}.embedding"),
            cfg.vocab_size,
            dim,
            Init::Uniform(1.0),
            rng,
        );
        let position = store.insert(format!("{name}.position"), sinusoidal(cfg.max_len, dim));
        let blocks = (0..cfg.layers)
            .map(|l| TransformerBlock::new(store, &format!("{name}.block{l}"), dim, heads, activation, rng))
            .collect::<Result<_>>()?;
        Ok(Self {
            embedding,
            position,
            blocks,
            vocab_size: cfg.vocab_size,
            max_len: cfg.max_len,
            dim,
        })
    }

    pub fn param_ids(&self, store: &ParamStore) -> Vec<ParamId> {
        let prefix = store.name(self.embedding).trim_end_matches("embedding").to_string();
        store.ids_with_prefix(&prefix).collect()
    }

    /// `[T×d]` token representations.
    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, ids: &[usize]) -> Result<Var> {
        if ids.is_empty() {
            return Err(Error::arg("cannot encode an empty token sequence"));
        }
        if ids.len() > self.max_len {
            return Err(Error::arg(format!(
                "sequence of {} tokens exceeds max_len {}",
                ids.len(),
                self.max_len
            )));
        }
        if let Some(bad) = ids.iter().find(|&&id| id >= self.vocab_size) {
            return Err(Error::arg(format!(
                "token id {bad} outside vocabulary of {}",
                self.vocab_size
            )));
        }
        let table = tape.param(store, self.embedding);
        let emb = tape.gather_rows(table, ids)?;
        let pos_table = tape.param(store, self.position);
        let positions: Vec<usize> = (0..ids.len()).collect();
        let pos = tape.gather_rows(pos_table, &positions)?;
        let mut h = tape.add(emb, pos)?;
        for block in &self.blocks {
            h = block.forward(tape, store, h)?;
        }
        Ok(h)
    }

    pub fn encode(&self, store: &ParamStore, tokens: &TokenSequence, role: Role) -> Result<EncodedSequence> {
        let mut tape = Tape::new();
        let out = self.forward(&mut tape, store, &tokens.ids)?;
        Ok(EncodedSequence {
            matrix: tape.value(out).clone(),
            role,
        })
    }
}

/// `pe[t][2i] = sin(t / 10000^(2i/d))`, `pe[t][2i+1] = cos(...)`.
pub fn sinusoidal(max_len: usize, dim: usize) -> Matrix {
    let mut m = Matrix::zeros(max_len, dim);
    for t in 0..max_len {
        for c in 0..dim {
            let i = (c / 2) as f64;
            let angle = t as f64 / 10000f64.powf(2.0 * i / dim as f64);
            m.set(t, c, if c % 2 == 0 { angle.sin() } else { angle.cos() });
        }
    }
    m
}
