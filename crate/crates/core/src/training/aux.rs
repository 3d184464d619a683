//! Auxiliary text classifiers over C (real/fake) and R (real/fake/other).
//! Trained with the teacher, never used at inference.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autograd::{Tape, Var};
use crate::encoding::Role;
use crate::error::Result;
use crate::fusion::Variant;
use crate::nn::attention::TokenAttention;
use crate::nn::linear::{Activation, Mlp};
use crate::params::ParamStore;

/// Parameter-name prefix shared by every auxiliary tensor.
pub const AUX_PREFIX: &str = "aux.";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuxHead {
    pub attn: TokenAttention,
    /// `d→d→k`.
    pub mlp: Mlp,
}

impl AuxHead {
    fn new(
        store: &mut ParamStore,
        name: &str,
        d: usize,
        classes: usize,
        act: Activation,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        Ok(Self {
            attn: TokenAttention::new(store, &format!("{name}.attn"), d, rng),
            mlp: Mlp::new(store, &format!("{name}.mlp"), &[d, d, classes], act, rng)?,
        })
    }

    /// `[1×k]` logits for a `[T×d]` sequence.
    pub fn logits(&self, tape: &mut Tape, store: &ParamStore, x: Var) -> Result<Var> {
        let pooled = self.attn.forward(tape, store, x)?;
        self.mlp.forward(tape, store, pooled)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuxClassifiers {
    pub content: Option<AuxHead>,
    pub rationale: Option<AuxHead>,
}

impl AuxClassifiers {
    /// Heads for whichever LLM streams the variant keeps; none for
    /// single-stream variants.
    pub fn new(
        store: &mut ParamStore,
        variant: Variant,
        d: usize,
        act: Activation,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        let wanted = |role| variant.single_stream().is_none() && variant.uses(role);
        let content = if wanted(Role::TopicContent) {
            Some(AuxHead::new(store, "aux.content", d, 2, act, rng)?)
        } else {
            None
        };
        let rationale = if wanted(Role::Rationale) {
            Some(AuxHead::new(store, "aux.rationale", d, 3, act, rng)?)
        } else {
            None
        };
        Ok(Self { content, rationale })
    }
}
