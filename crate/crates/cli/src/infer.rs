use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use anyhow::Context;
use factguard::checkpoint::load_teacher;
use factguard::datapipe::{LlmJudgment, Split};
use factguard::distill::{load_student, student_predictions, Student};
use factguard::encoding::{EmbeddingBundle, Role};
use factguard::evalbench::{confidence_histogram, write_confidence_csv, write_metrics_csv};
use factguard::fusion::{Example, ModelConfig, StreamInput, Teacher};
use factguard::training::predict_all;
use factguard::Error;
use serde::Deserialize;

use crate::cli::{EvalArgs, InferArgs, ModelArg};
use crate::data;
use crate::run::split_metrics;

enum Model {
    Teacher(Teacher),
    Student(Student),
}

impl Model {
    fn load(arg: &ModelArg) -> anyhow::Result<Self> {
        match (&arg.teacher, &arg.student) {
            (Some(p), _) => Ok(Model::Teacher(
                load_teacher(p).with_context(|| format!("loading {}", p.display()))?,
            )),
            (_, Some(p)) => Ok(Model::Student(
                load_student(p).with_context(|| format!("loading {}", p.display()))?,
            )),
            (None, None) => Err(Error::Config("pass --teacher or --student".into()).into()),
        }
    }

    fn config(&self) -> &ModelConfig {
        match self {
            Model::Teacher(t) => t.config(),
            Model::Student(s) => &s.config,
        }
    }

    fn vocab(&self) -> Option<&factguard::encoding::Vocabulary> {
        match self {
            Model::Teacher(t) => t.vocab.as_ref(),
            Model::Student(s) => s.vocab.as_ref(),
        }
    }

    fn tokens(&self, text: &str) -> factguard::Result<StreamInput> {
        let vocab = self
            .vocab()
            .ok_or_else(|| Error::Config("model was trained on precomputed encodings; pass --bundle".into()))?;
        let max_len = self.config().encoder.as_ref().map_or(usize::MAX, |e| e.max_len);
        Ok(StreamInput::Tokens(factguard::encoding::tokenize(text, vocab, max_len)?.ids))
    }

    fn predict(&self, ex: &Example) -> factguard::Result<f64> {
        match self {
            Model::Teacher(t) => t.predict(ex),
            Model::Student(s) => s.predict(&ex.news),
        }
    }

    fn predict_all(&self, ex: &[Example]) -> factguard::Result<Vec<f64>> {
        match self {
            Model::Teacher(t) => predict_all(t, ex),
            Model::Student(s) => student_predictions(s, ex),
        }
    }

    fn is_teacher(&self) -> bool {
        matches!(self, Model::Teacher(_))
    }
}

#[derive(Debug, Deserialize)]
struct InputLine {
    id: Option<String>,
    n: Option<String>,
    c: Option<String>,
    r: Option<String>,
    split: Option<Split>,
}

pub fn parse_split(s: &str) -> factguard::Result<Split> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| Error::Config(format!("unknown split {s:?}, expected train, val or test")))
}

fn empty_example(id: String) -> Example {
    Example {
        id,
        news: StreamInput::Tokens(Vec::new()),
        content: StreamInput::Tokens(Vec::new()),
        rationale: StreamInput::Tokens(Vec::new()),
        label: 0,
        judgment: LlmJudgment::Other,
    }
}

fn from_bundle(bundle: &EmbeddingBundle, model: &Model, id: String) -> factguard::Result<Example> {
    let d = model.config().d;
    let mut ex = empty_example(id);
    for role in Role::ALL {
        if !model.is_teacher() && role != Role::News {
            continue;
        }
        if bundle.manifest().roles.contains(&role) {
            let m = StreamInput::Encoded(bundle.load(&ex.id, role, d)?.matrix);
            match role {
                Role::News => ex.news = m,
                Role::TopicContent => ex.content = m,
                Role::Rationale => ex.rationale = m,
            }
        }
    }
    Ok(ex)
}

fn from_text(model: &Model, id: String, n: &str, c: Option<&str>, r: Option<&str>) -> factguard::Result<Example> {
    let mut ex = empty_example(id);
    ex.news = model.tokens(n)?;
    if model.is_teacher() {
        let missing = || Error::Config(format!("{}: a teacher needs topic content and rationale text", ex.id));
        ex.content = model.tokens(c.ok_or_else(missing)?)?;
        ex.rationale = model.tokens(r.ok_or_else(missing)?)?;
    }
    Ok(ex)
}

fn read_inputs(path: &Path, args: &InferArgs, model: &Model) -> anyhow::Result<Vec<Example>> {
    let split = args.split.as_deref().map(parse_split).transpose()?;
    let bundle = args.bundle.as_ref().map(EmbeddingBundle::open).transpose()?;
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: InputLine = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        if split.is_some() && row.split != split {
            continue;
        }
        let id = row.id.clone().unwrap_or_else(|| format!("line{}", i + 1));
        let ex = match &bundle {
            Some(b) => from_bundle(b, model, id)?,
            None => {
                let n = row.n.as_deref().ok_or_else(|| Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message: "missing news text n".into(),
                })?;
                from_text(model, id, n, row.c.as_deref(), row.r.as_deref())?
            }
        };
        out.push(ex);
    }
    Ok(out)
}

pub fn infer(args: InferArgs) -> anyhow::Result<()> {
    let model = Model::load(&args.model)?;
    let inputs = match (&args.news, &args.input) {
        (Some(n), _) => vec![from_text(
            &model,
            "input".into(),
            n,
            args.topic_content.as_deref(),
            args.rationale.as_deref(),
        )?],
        (None, Some(p)) => read_inputs(p, &args, &model)?,
        (None, None) => return Err(Error::Config("pass --news or --input".into()).into()),
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for ex in &inputs {
        let p = model.predict(ex).with_context(|| format!("scoring {}", ex.id))?;
        let label = if p >= 0.5 { "fake" } else { "real" };
        match writeln!(out, "{}\t{p:.6}\t{label}", ex.id) {
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => return Ok(()),
            r => r?,
        }
    }
    Ok(())
}

pub fn eval(args: EvalArgs) -> anyhow::Result<()> {
    let model = Model::load(&args.model)?;
    let cfg = args.config.load()?.resolve()?;
    let out = cfg.output_dir(args.config.out())?;
    let split = parse_split(&args.split)?;
    let data = data::for_model(&cfg, model.config(), model.vocab())?;
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;

    let rows = split_metrics(&data, |ex| model.predict_all(ex))?;
    for (name, _, m) in &rows {
        log::info!("{name:5}  acc {:.4}  macF1 {:.4}  F1 real {:.4}  F1 fake {:.4}", m.acc, m.macf1, m.f1_real, m.f1_fake);
    }
    write_metrics_csv(out.join("metrics.csv"), &rows)?;

    let ex = data.nonempty_split(split)?;
    let preds = model.predict_all(&ex)?;
    let labels: Vec<u8> = ex.iter().map(|e| e.label).collect();
    write_confidence_csv(out.join("confidence.csv"), &confidence_histogram(&preds, &labels, args.bins)?)?;
    Ok(())
}
