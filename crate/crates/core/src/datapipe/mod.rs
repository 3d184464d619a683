//! Dataset construction: LLM extraction, similarity gating, record files.

pub mod examples;
pub mod gate;
pub mod pipeline;
pub mod prompts;
pub mod provider;
pub mod record;

pub use examples::{bundle_examples, corpus_vocab, split_examples, token_examples};
pub use gate::{cosine_similarity, gate, shannon_entropy, GateReport, GateThresholds, HashedEncoder, TextEmbedder};
pub use pipeline::{prepare_dataset, GateRow, PipelineConfig, Prepared, RecordStatus};
pub use prompts::{commonsense_rationale, extract_topic_content, parse_verdict, PromptSet, PromptTemplate, TEMPLATE_VERSION};
pub use provider::{
    first_sentence, HttpProvider, Provider, ProviderChain, ProviderConfig, ProviderRequest, ProviderResponse,
    RetryPolicy, ScriptedProvider,
};
pub use record::{
    load_dataset, load_raw, save_dataset, split_counts, temporal_split, Lang, LlmJudgment, LoadReport, NewsRecord,
    RawRecord, Split,
};
