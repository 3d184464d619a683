use anyhow::Context;
use factguard::datapipe::{
    load_raw, prepare_dataset, save_dataset, HashedEncoder, HttpProvider, PipelineConfig, PromptSet, PromptTemplate,
    Provider, ProviderChain, ProviderConfig, RetryPolicy, ScriptedProvider,
};
use factguard::Error;

use crate::cli::PrepareArgs;

pub fn run(args: PrepareArgs) -> anyhow::Result<()> {
    let mut cfg = PipelineConfig::new(args.lang);
    cfg.max_retries = args.max_retries;
    cfg.parallelism = args.parallelism;
    cfg.thresholds.zh = args.threshold_zh.unwrap_or(cfg.thresholds.zh);
    cfg.thresholds.en = args.threshold_en.unwrap_or(cfg.thresholds.en);
    if args.embed_dim == 0 {
        return Err(Error::Config("--embed-dim must be positive".into()).into());
    }

    let provider_cfg = args.provider.as_ref().map(ProviderConfig::load).transpose()?;
    let (primary, fallback): (Box<dyn Provider>, Option<Box<dyn Provider>>) = match (&args.mock, &provider_cfg) {
        (Some(script), _) => (Box::new(ScriptedProvider::load(script)?), None),
        (None, Some(p)) => {
            let fallback = match &p.fallback {
                Some(f) => Some(Box::new(HttpProvider::new((**f).clone())?) as Box<dyn Provider>),
                None => None,
            };
            (Box::new(HttpProvider::new(p.clone())?), fallback)
        }
        (None, None) => {
            return Err(Error::Config("no provider: pass --provider <config.json> or --mock <script.jsonl>".into()).into())
        }
    };
    if let Some(p) = &provider_cfg {
        let mut prompts = PromptSet::builtin(args.lang);
        if let Some(t) = &p.topic_content_template {
            prompts.topic_content = PromptTemplate::load(t)?;
        }
        if let Some(t) = &p.rationale_template {
            prompts.rationale = PromptTemplate::load(t)?;
        }
        prompts.max_tokens = p.max_tokens;
        prompts.temperature = p.temperature;
        cfg.prompts = prompts;
    }
    let retry = if args.mock.is_some() {
        RetryPolicy::immediate(3)
    } else {
        RetryPolicy::default()
    };
    let chain = ProviderChain {
        primary: primary.as_ref(),
        fallback: fallback.as_deref(),
        retry,
    };

    let raw = load_raw(&args.input)?;
    log::info!(
        "preparing {} records with {} (templates {} / {})",
        raw.len(),
        chain.primary.name(),
        cfg.prompts.topic_content.version,
        cfg.prompts.rationale.version
    );
    let prepared = prepare_dataset(raw, &cfg, &chain, &HashedEncoder::new(args.embed_dim))?;

    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    save_dataset(&prepared.records, &args.out)?;
    let report = args
        .report
        .clone()
        .unwrap_or_else(|| args.out.with_file_name("gate_report.csv"));
    prepared.write_report(&report)?;
    let rejected = prepared.rejected().count();
    if rejected > 0 {
        log::warn!("{rejected} records excluded; see {}", report.display());
    }
    log::info!("wrote {} records to {}", prepared.records.len(), args.out.display());
    Ok(())
}
