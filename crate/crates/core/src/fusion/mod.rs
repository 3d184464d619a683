//! The FactGuard teacher: topic-content/rationale interactor, usability
//! weighting, dual attention over the news, and the final classifier.

mod model;

use serde::{Deserialize, Serialize};

use crate::datapipe::record::LlmJudgment;
use crate::encoding::toy::EncoderConfig;
use crate::encoding::Role;
use crate::error::{Error, Result};
use crate::nn::linear::Activation;
use crate::tensor::Matrix;

pub use model::{fuse_llm, Branch, FactGuard, ForwardVars, FusionTrace, Teacher};

/// Model wiring. `Full` is the complete teacher; the rest are the ablations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    #[default]
    Full,
    NewsOnly,
    TopicContentOnly,
    CommonsenseOnly,
    WoNews,
    WoTopicContent,
    WoCommonsense,
    WoLlmUsability,
}

impl Variant {
    pub const ALL: [Variant; 8] = [
        Variant::Full,
        Variant::NewsOnly,
        Variant::TopicContentOnly,
        Variant::CommonsenseOnly,
        Variant::WoNews,
        Variant::WoTopicContent,
        Variant::WoCommonsense,
        Variant::WoLlmUsability,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::NewsOnly => "news_only",
            Variant::TopicContentOnly => "topic_content_only",
            Variant::CommonsenseOnly => "commonsense_only",
            Variant::WoNews => "wo_news",
            Variant::WoTopicContent => "wo_topic_content",
            Variant::WoCommonsense => "wo_commonsense",
            Variant::WoLlmUsability => "wo_llm_usability",
        }
    }

    /// The stream consumed by a single-stream variant.
    pub fn single_stream(self) -> Option<Role> {
        match self {
            Variant::NewsOnly => Some(Role::News),
            Variant::TopicContentOnly => Some(Role::TopicContent),
            Variant::CommonsenseOnly => Some(Role::Rationale),
            _ => None,
        }
    }

    /// The one LLM stream left when the interactor collapses to self-attention.
    pub fn surviving_llm_stream(self) -> Option<Role> {
        match self {
            Variant::WoTopicContent => Some(Role::Rationale),
            Variant::WoCommonsense => Some(Role::TopicContent),
            _ => None,
        }
    }

    pub fn uses(self, role: Role) -> bool {
        match self {
            Variant::NewsOnly | Variant::TopicContentOnly | Variant::CommonsenseOnly => {
                self.single_stream() == Some(role)
            }
            Variant::WoNews => role != Role::News,
            Variant::WoTopicContent => role != Role::TopicContent,
            Variant::WoCommonsense => role != Role::Rationale,
            Variant::Full | Variant::WoLlmUsability => true,
        }
    }

    pub fn uses_news_features(self) -> bool {
        self.single_stream().is_none() && self != Variant::WoNews
    }

    /// Usability weights are learned and supervised (`false` pins w = 1).
    pub fn learns_usability(self) -> bool {
        self.single_stream().is_none() && self != Variant::WoLlmUsability
    }

    /// Width of `f_llm` as a multiple of d.
    pub fn llm_width(self) -> usize {
        match self {
            v if v.single_stream().is_some() => 0,
            Variant::WoTopicContent | Variant::WoCommonsense => 1,
            _ => 2,
        }
    }

    /// Classifier input width as a multiple of d.
    pub fn classifier_width(self) -> usize {
        if self.single_stream().is_some() {
            1
        } else {
            self.llm_width() + usize::from(self.uses_news_features())
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::config(format!("unknown ablation variant {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "default_d")]
    pub d: usize,
    #[serde(default = "default_heads")]
    pub heads: usize,
    #[serde(default)]
    pub activation: Activation,
    #[serde(default)]
    pub variant: Variant,
    /// Text encoders for token input; `None` means inputs arrive as
    /// precomputed `[T×d]` matrices.
    #[serde(default)]
    pub encoder: Option<EncoderConfig>,
}

fn default_d() -> usize {
    32
}

fn default_heads() -> usize {
    4
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            d: default_d(),
            heads: default_heads(),
            activation: Activation::default(),
            variant: Variant::default(),
            encoder: None,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.heads == 0 || !self.d.is_multiple_of(self.heads) {
            return Err(Error::config(format!(
                "hidden size {} must be a positive multiple of the head count {}",
                self.d, self.heads
            )));
        }
        if self.d < 2 {
            return Err(Error::config("hidden size must be at least 2"));
        }
        Ok(())
    }
}

/// One stream of model input: token ids for the text encoder, or a
/// precomputed encoding.
#[derive(Clone, Debug, PartialEq)]
pub enum StreamInput {
    Tokens(Vec<usize>),
    Encoded(Matrix),
}

impl StreamInput {
    pub fn len(&self) -> usize {
        match self {
            StreamInput::Tokens(ids) => ids.len(),
            StreamInput::Encoded(m) => m.rows(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A labelled sample ready for the model.
#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    pub id: String,
    pub news: StreamInput,
    pub content: StreamInput,
    pub rationale: StreamInput,
    /// 1 = fake.
    pub label: u8,
    pub judgment: LlmJudgment,
}

impl Example {
    pub fn stream(&self, role: Role) -> &StreamInput {
        match role {
            Role::News => &self.news,
            Role::TopicContent => &self.content,
            Role::Rationale => &self.rationale,
        }
    }
}
