use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autograd::{Tape, Var};
use crate::error::Result;
use crate::nn::attention::MultiHeadAttention;
use crate::nn::linear::{Activation, Mlp};
use crate::params::{Init, ParamId, ParamStore};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerNorm {
    pub gamma: ParamId,
    pub beta: ParamId,
}

impl LayerNorm {
    pub fn new(store: &mut ParamStore, name: &str, dim: usize, rng: &mut ChaCha8Rng) -> Self {
        Self {
            gamma: store.add(format!("{name}.gamma"), 1, dim, Init::Ones, rng),
            beta: store.add(format!("{name}.beta"), 1, dim, Init::Zeros, rng),
        }
    }

    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, x: Var) -> Result<Var> {
        let g = tape.param(store, self.gamma);
        let b = tape.param(store, self.beta);
        tape.layer_norm(x, g, b)
    }
}

/// Post-norm self-attention block:
/// `x = LN(x + MHA(x, x, x))`, then `x = LN(x + MLP(x))` with MLP `d→2d→d`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransformerBlock {
    pub attn: MultiHeadAttention,
    pub norm1: LayerNorm,
    pub ffn: Mlp,
    pub norm2: LayerNorm,
}

impl TransformerBlock {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        dim: usize,
        heads: usize,
        activation: Activation,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        Ok(Self {
            attn: MultiHeadAttention::new(store, &format!("{name}.attn"), dim, heads, rng)?,
            norm1: LayerNorm::new(store, &format!("{name}.ln1"), dim, rng),
            ffn: Mlp::new(store, &format!("{name}.ffn"), &[dim, 2 * dim, dim], activation, rng)?,
            norm2: LayerNorm::new(store, &format!("{name}.ln2"), dim, rng),
        })
    }

    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, x: Var) -> Result<Var> {
        let a = self.attn.forward(tape, store, x, x, x)?;
        let h = tape.add(x, a)?;
        let h = self.norm1.forward(tape, store, h)?;
        let f = self.ffn.forward(tape, store, h)?;
        let h2 = tape.add(h, f)?;
        self.norm2.forward(tape, store, h2)
    }
}
