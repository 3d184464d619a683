//! Raw news → gated dataset with topic content, rationale and LLM verdict.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datapipe::gate::{gate, GateReport, GateThresholds, TextEmbedder};
use crate::datapipe::prompts::{commonsense_rationale, extract_topic_content, PromptSet};
use crate::datapipe::provider::ProviderChain;
use crate::datapipe::record::{split_counts, temporal_split, Lang, NewsRecord, RawRecord};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub lang: Lang,
    pub thresholds: GateThresholds,
    /// Extra extraction rounds after a rejected one.
    pub max_retries: usize,
    /// Records processed concurrently.
    pub parallelism: usize,
    pub prompts: PromptSet,
}

impl PipelineConfig {
    pub fn new(lang: Lang) -> Self {
        Self {
            lang,
            thresholds: GateThresholds::default(),
            max_retries: 3,
            parallelism: 4,
            prompts: PromptSet::builtin(lang),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordStatus {
    Accepted,
    GateFailed,
    ProviderError,
}

/// One row of `gate_report.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateRow {
    pub id: String,
    pub status: RecordStatus,
    pub similarity: Option<f64>,
    pub threshold: f64,
    pub attempts: usize,
    pub accepted: bool,
    pub entropy_original: Option<f64>,
    pub entropy_extracted: Option<f64>,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prepared {
    /// Accepted records in input order.
    pub records: Vec<NewsRecord>,
    /// One row per input record, in input order.
    pub report: Vec<GateRow>,
}

impl Prepared {
    pub fn rejected(&self) -> impl Iterator<Item = &GateRow> {
        self.report.iter().filter(|r| r.status != RecordStatus::Accepted)
    }

    pub fn write_report(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path)?;
        for row in &self.report {
            w.serialize(row)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

enum Outcome {
    Kept(NewsRecord, GateReport),
    Rejected(GateReport),
    Failed(Error, usize),
}

fn process(raw: &RawRecord, cfg: &PipelineConfig, providers: &ProviderChain, embedder: &dyn TextEmbedder) -> Outcome {
    let mut attempts = 0;
    let report = loop {
        let c = match extract_topic_content(&raw.id, &raw.n, &cfg.prompts, providers, attempts > 0) {
            Ok(c) => c,
            Err(e) => return Outcome::Failed(e, attempts + 1),
        };
        attempts += 1;
        let report = match gate(&raw.n, &c, raw.lang, &cfg.thresholds, embedder, attempts) {
            Ok(r) => r,
            Err(e) => return Outcome::Failed(e, attempts),
        };
        if report.accepted {
            break (c, report);
        }
        log::debug!("{}: similarity {:.4} below {}", raw.id, report.similarity, report.threshold);
        if attempts > cfg.max_retries {
            return Outcome::Rejected(report);
        }
    };
    let (c, report) = report;
    let (r, y_llm) = match commonsense_rationale(&raw.id, &raw.n, &cfg.prompts, providers) {
        Ok(x) => x,
        Err(e) => return Outcome::Failed(e, attempts),
    };
    Outcome::Kept(
        NewsRecord {
            id: raw.id.clone(),
            n: raw.n.clone(),
            c,
            r,
            y: raw.y,
            y_llm,
            lang: raw.lang,
            split: raw.split.expect("split assigned before processing"),
            extra: Default::default(),
        },
        report,
    )
}

/// Extracts, gates and annotates every record. Records whose topic content
/// never passes the gate, or whose provider calls keep failing, are left out
/// of `records` and marked in `report`.
pub fn prepare_dataset(
    mut raw: Vec<RawRecord>,
    cfg: &PipelineConfig,
    providers: &ProviderChain,
    embedder: &dyn TextEmbedder,
) -> Result<Prepared> {
    if let Some(r) = raw.iter().find(|r| r.lang != cfg.lang) {
        return Err(Error::config(format!(
            "record {} is {:?} but the pipeline runs for {:?}",
            r.id, r.lang, cfg.lang
        )));
    }
    if cfg.parallelism == 0 {
        return Err(Error::config("parallelism must be at least 1"));
    }
    temporal_split(&mut raw, split_counts(cfg.lang));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism)
        .build()
        .map_err(|e| Error::config(e.to_string()))?;
    let outcomes: Vec<Outcome> = pool.install(|| raw.par_iter().map(|r| process(r, cfg, providers, embedder)).collect());

    let threshold = cfg.thresholds.for_lang(cfg.lang);
    let mut records = Vec::new();
    let mut report = Vec::with_capacity(raw.len());
    for (r, outcome) in raw.iter().zip(outcomes) {
        let row = |status, g: Option<&GateReport>, attempts, error: String| GateRow {
            id: r.id.clone(),
            status,
            similarity: g.map(|g| g.similarity),
            threshold,
            attempts,
            accepted: status == RecordStatus::Accepted,
            entropy_original: g.map(|g| g.entropy_original),
            entropy_extracted: g.map(|g| g.entropy_extracted),
            error,
        };
        match outcome {
            Outcome::Kept(rec, g) => {
                report.push(row(RecordStatus::Accepted, Some(&g), g.attempts, String::new()));
                records.push(rec);
            }
            Outcome::Rejected(g) => {
                log::warn!("{}: gate failed after {} attempts, record excluded", r.id, g.attempts);
                report.push(row(RecordStatus::GateFailed, Some(&g), g.attempts, String::new()));
            }
            Outcome::Failed(e, attempts) => {
                log::warn!("{}: {e}; record excluded", r.id);
                report.push(row(RecordStatus::ProviderError, None, attempts, e.to_string()));
            }
        }
    }
    Ok(Prepared { records, report })
}
