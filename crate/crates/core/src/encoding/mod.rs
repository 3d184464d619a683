//! Text → `[T×d]` token matrices: vocabulary, tokenizer, a small trainable
//! encoder, and on-disk bundles of precomputed encodings.

pub mod bundle;
pub mod toy;
pub mod vocab;

use serde::{Deserialize, Serialize};

use crate::tensor::Matrix;

pub use bundle::{load_precomputed, BundleWriter, EmbeddingBundle};
pub use toy::{EncoderConfig, ToyEncoder};
pub use vocab::{build_vocab, normalize_tokens, tokenize, TokenSequence, Vocabulary};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    News,
    TopicContent,
    Rationale,
}

impl Role {
    pub const ALL: [Role; 3] = [Role::News, Role::TopicContent, Role::Rationale];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::News => "news",
            Role::TopicContent => "topic_content",
            Role::Rationale => "rationale",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EncodedSequence {
    pub matrix: Matrix,
    pub role: Role,
}
