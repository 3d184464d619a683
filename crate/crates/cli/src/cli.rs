use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use factguard::datapipe::Lang;
use factguard::evalbench::SyntheticSpec;
use factguard::fusion::Variant;
use factguard::Result;

use crate::config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "factguard", version, about = "Fake-news detection with LLM-derived topic content and rationales")]
pub struct Cli {
    /// More log output on stderr (repeat for more).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    /// Only log warnings and errors.
    #[arg(short, long, global = true, conflicts_with = "verbose")]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

impl Cli {
    pub fn log_level(&self) -> &'static str {
        match (self.quiet, self.verbose) {
            (true, _) => "warn",
            (false, 0) => "info",
            (false, 1) => "debug",
            _ => "trace",
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract topic content and rationales with an LLM and gate the results.
    PrepareData(PrepareArgs),
    /// Write a synthetic dataset with precomputed encodings.
    Synth(SynthArgs),
    /// Train the teacher.
    Train(TrainArgs),
    /// Train one ablation variant and report how its wiring differs from the full model.
    Ablate(AblateArgs),
    /// Distill a news-only student from a trained teacher.
    Distill(DistillArgs),
    /// Print a fake-news probability and label per input.
    Infer(InferArgs),
    /// Write metrics and confidence histograms for a checkpoint.
    Eval(EvalArgs),
    /// Train one teacher per (alpha, beta) cell.
    GridSearch(GridArgs),
    /// Distill one student per lambda.
    LambdaSweep(LambdaArgs),
    /// Finite-difference check of the training objective's gradients.
    Gradcheck(GradcheckArgs),
}

/// Options shared by commands that read a run configuration.
#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed for initialisation and shuffling (overrides `seed`).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Line-delimited dataset (overrides `data.dataset`).
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Precomputed-encoding bundle (overrides `data.bundle`).
    #[arg(long)]
    pub bundle: Option<PathBuf>,
}

impl ConfigArgs {
    pub fn load(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::load_or_default(self.config.as_deref())?;
        if self.seed.is_some() {
            cfg.seed = self.seed;
        }
        if let Some(d) = &self.dataset {
            cfg.data.dataset = Some(d.clone());
            cfg.data.synthetic = None;
        }
        if let Some(b) = &self.bundle {
            cfg.data.bundle = Some(b.clone());
        }
        Ok(cfg)
    }

    pub fn out(&self) -> Option<&Path> {
        self.out.as_deref()
    }
}

#[derive(Debug, Args)]
pub struct TrainOverrides {
    /// Weight of the usability loss.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Weight of the auxiliary text loss.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Use the tuned alpha/beta of a benchmark language.
    #[arg(long, conflicts_with_all = ["alpha", "beta"])]
    pub weights_for: Option<Lang>,
    /// AdamW learning rate.
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Maximum number of epochs.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Epochs without validation macF1 improvement before stopping.
    #[arg(long)]
    pub patience: Option<usize>,
}

impl TrainOverrides {
    pub fn apply(&self, cfg: &mut RunConfig) {
        let t = &mut cfg.train;
        if let Some(l) = self.weights_for {
            let w = factguard::training::TrainConfig::loss_weights_for(l);
            t.alpha = w.alpha;
            t.beta = w.beta;
        }
        t.alpha = self.alpha.unwrap_or(t.alpha);
        t.beta = self.beta.unwrap_or(t.beta);
        t.learning_rate = self.lr.unwrap_or(t.learning_rate);
        t.batch_size = self.batch_size.unwrap_or(t.batch_size);
        t.max_epochs = self.epochs.unwrap_or(t.max_epochs);
        t.patience = self.patience.unwrap_or(t.patience);
    }
}

#[derive(Debug, Args)]
pub struct PrepareArgs {
    /// Raw records: one JSON object per line with id, n, y, lang and
    /// optionally split or timestamp.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub lang: Lang,
    /// Provider configuration (endpoint, model, token variable, templates).
    #[arg(long)]
    pub provider: Option<PathBuf>,
    /// Scripted mock responses instead of a live provider.
    #[arg(long)]
    pub mock: Option<PathBuf>,
    /// Where to write the gate report (default: next to --out).
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    pub max_retries: usize,
    #[arg(long, default_value_t = 4)]
    pub parallelism: usize,
    #[arg(long)]
    pub threshold_zh: Option<f64>,
    #[arg(long)]
    pub threshold_en: Option<f64>,
    /// Width of the hashed similarity embedding.
    #[arg(long, default_value_t = 256)]
    pub embed_dim: usize,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// JSON SyntheticSpec file; flags below override its fields.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub reliability: Option<f64>,
    #[arg(long)]
    pub style_confound: Option<f64>,
    #[arg(long)]
    pub other_rate: Option<f64>,
    #[arg(long)]
    pub ambiguity: Option<f64>,
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long, default_value_t = factguard::training::DEFAULT_SEED)]
    pub seed: u64,
}

impl SynthArgs {
    pub fn spec(&self) -> Result<SyntheticSpec> {
        let mut s = match &self.spec {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| factguard::Error::Config(format!("cannot read {}: {e}", p.display())))?;
                serde_json::from_str(&text).map_err(|e| factguard::Error::Config(format!("{}: {e}", p.display())))?
            }
            None => SyntheticSpec::new(200, 16),
        };
        s.size = self.size.unwrap_or(s.size);
        s.d = self.d.unwrap_or(s.d);
        s.reliability = self.reliability.unwrap_or(s.reliability);
        s.style_confound = self.style_confound.unwrap_or(s.style_confound);
        s.other_rate = self.other_rate.unwrap_or(s.other_rate);
        s.ambiguity = self.ambiguity.unwrap_or(s.ambiguity);
        s.noise = self.noise.unwrap_or(s.noise);
        s.validate()?;
        Ok(s)
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(flatten)]
    pub overrides: TrainOverrides,
    /// Model variant (overrides `model.variant`).
    #[arg(long)]
    pub variant: Option<Variant>,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    /// full, news_only, topic_content_only, commonsense_only, wo_news,
    /// wo_topic_content, wo_commonsense or wo_llm_usability.
    #[arg(long)]
    pub variant: Variant,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(flatten)]
    pub overrides: TrainOverrides,
}

#[derive(Debug, Args)]
pub struct DistillArgs {
    /// Trained teacher checkpoint.
    #[arg(long)]
    pub teacher: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
}

#[derive(Debug, Args)]
#[group(id = "model", required = true, multiple = false)]
pub struct ModelArg {
    /// Teacher checkpoint (needs news, topic content and rationale).
    #[arg(long)]
    pub teacher: Option<PathBuf>,
    /// Student checkpoint (news only).
    #[arg(long)]
    pub student: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    #[command(flatten)]
    pub model: ModelArg,
    /// News text of a single item.
    #[arg(long, conflicts_with = "input")]
    pub news: Option<String>,
    #[arg(long, conflicts_with = "student", requires = "news")]
    pub topic_content: Option<String>,
    #[arg(long, conflicts_with = "student", requires = "news")]
    pub rationale: Option<String>,
    /// One JSON object per line with `n` (and `c`, `r` for a teacher), plus
    /// optional `id` and `split`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Encodings for models trained on precomputed inputs, looked up by id.
    #[arg(long)]
    pub bundle: Option<PathBuf>,
    /// Only lines whose `split` matches.
    #[arg(long)]
    pub split: Option<String>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub model: ModelArg,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Split for the confidence histogram.
    #[arg(long, default_value = "test")]
    pub split: String,
    #[arg(long, default_value_t = 10)]
    pub bins: usize,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(flatten)]
    pub overrides: TrainOverrides,
    /// Comma-separated alpha values.
    #[arg(long, value_delimiter = ',')]
    pub alphas: Option<Vec<f64>>,
    /// Comma-separated beta values.
    #[arg(long, value_delimiter = ',')]
    pub betas: Option<Vec<f64>>,
    /// Default grids 0..=10 instead of 0.0..=1.0.
    #[arg(long)]
    pub integer_grid: bool,
}

#[derive(Debug, Args)]
pub struct LambdaArgs {
    #[arg(long)]
    pub teacher: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Comma-separated lambda values (default 0..=10).
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Option<Vec<f64>>,
    #[arg(long)]
    pub epochs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 20)]
    pub seeds: u64,
    #[arg(long, default_value_t = 0)]
    pub first_seed: u64,
    #[arg(long, default_value_t = 8)]
    pub d: usize,
    #[arg(long, default_value_t = 2)]
    pub heads: usize,
    #[arg(long, default_value_t = 6)]
    pub max_len: usize,
    #[arg(long, default_value = "full")]
    pub variant: Variant,
    /// Feed precomputed matrices instead of tokens through toy encoders.
    #[arg(long)]
    pub encoded: bool,
    #[arg(long, default_value_t = 1e-4)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub epsilon: f64,
}
