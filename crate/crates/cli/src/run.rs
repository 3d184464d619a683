use std::path::Path;
use std::time::SystemTime;

use anyhow::{bail, Context};
use factguard::checkpoint::load_teacher;
use factguard::datapipe::{save_dataset, Split};
use factguard::distill::{
    distill_train, evaluate_student, save_student, teacher_targets, DistillEpoch, Student,
};
use factguard::evalbench::{evaluate, make_synthetic, param_diff, write_metrics_csv, confusion, write_rows};
use factguard::fusion::{Example, ModelConfig, Teacher, Variant};
use factguard::nn::gradcheck::GradcheckConfig;
use factguard::training::{
    objective_gradcheck, predict_all, train as train_teacher, InstanceSpec, RunDir,
};
use factguard::Error;

use crate::cli::{AblateArgs, DistillArgs, GradcheckArgs, SynthArgs, TrainArgs};
use crate::config::RunConfig;
use crate::data::{self, Dataset};

pub fn synth(args: SynthArgs) -> anyhow::Result<()> {
    let spec = args.spec()?;
    let set = make_synthetic(&spec, args.seed)?;
    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    save_dataset(&set.records, args.out.join("dataset.jsonl"))?;
    set.write_bundle(args.out.join("encodings"))?;
    factguard::training::rundir::write_json(&args.out.join("spec.json"), &spec)?;
    log::info!("wrote {} synthetic records to {}", set.records.len(), args.out.display());
    Ok(())
}

/// Rows for `metrics.csv`: every nonempty split of `data`, scored by `predict`.
pub fn split_metrics(
    data: &Dataset,
    predict: impl Fn(&[Example]) -> factguard::Result<Vec<f64>>,
) -> factguard::Result<Vec<(&'static str, factguard::evalbench::ConfusionMatrix, factguard::evalbench::MetricsReport)>>
{
    let mut rows = Vec::new();
    for (name, split) in [("train", Split::Train), ("val", Split::Val), ("test", Split::Test)] {
        let ex = data.split(split);
        if ex.is_empty() {
            continue;
        }
        let preds = predict(&ex)?;
        let labels: Vec<u8> = ex.iter().map(|e| e.label).collect();
        let cm = confusion(&preds, &labels, 0.5)?;
        rows.push((name, cm, evaluate(&preds, &labels)?));
    }
    Ok(rows)
}

fn train_config(args: &TrainArgs) -> anyhow::Result<RunConfig> {
    let mut cfg = args.config.load()?;
    args.overrides.apply(&mut cfg);
    if let Some(v) = args.variant {
        cfg.model.variant = v;
    }
    Ok(cfg.resolve()?)
}

/// Trains a teacher into `out` and returns it with its data.
fn train_into(cfg: &RunConfig, out: &Path) -> anyhow::Result<(Teacher, Dataset)> {
    let (data, model) = data::for_training(cfg)?;
    let train = data.nonempty_split(Split::Train)?;
    let val = data.nonempty_split(Split::Val)?;
    let run = RunDir::create(out)?;
    let mut recorded = cfg.clone();
    recorded.output_dir = None;
    recorded.model = model.clone();
    run.write_json("config.json", &recorded)?;

    let started = SystemTime::now();
    let mut teacher = Teacher::new(model, data.vocab.clone(), cfg.train.seed)?;
    log::info!(
        "training {} on {} examples ({} val), {} parameters",
        teacher.config().variant.as_str(),
        train.len(),
        val.len(),
        teacher.params.num_scalars()
    );
    let mut history = Vec::new();
    let outcome = train_teacher(&mut teacher, &train, &val, &cfg.train, |rec, improved, t| {
        history.push(*rec);
        run.write_history(&history)?;
        if improved {
            run.save_improvement(rec.epoch, t)?;
        }
        Ok(())
    })?;
    let rows = split_metrics(&data, |ex| predict_all(&teacher, ex))?;
    write_metrics_csv(run.path("metrics.csv"), &rows)?;
    run.write_meta(
        started,
        serde_json::json!({
            "best_epoch": outcome.best_epoch,
            "best_val_macf1": outcome.best_val_macf1,
            "stopped_early": outcome.stopped_early,
        }),
    )?;
    log::info!("best epoch {} (val macF1 {:.4})", outcome.best_epoch, outcome.best_val_macf1);
    Ok((teacher, data))
}

pub fn train(args: TrainArgs) -> anyhow::Result<()> {
    let cfg = train_config(&args)?;
    let out = cfg.output_dir(args.config.out())?;
    train_into(&cfg, &out)?;
    Ok(())
}

pub fn ablate(args: AblateArgs) -> anyhow::Result<()> {
    let mut cfg = args.config.load()?;
    args.overrides.apply(&mut cfg);
    cfg.model.variant = args.variant;
    let cfg = cfg.resolve()?;
    let out = cfg.output_dir(args.config.out())?;
    let (teacher, _) = train_into(&cfg, &out)?;

    let reference = Teacher::new(
        ModelConfig {
            variant: Variant::Full,
            ..teacher.config().clone()
        },
        teacher.vocab.clone(),
        cfg.train.seed,
    )?;
    let fresh = Teacher::new(teacher.config().clone(), teacher.vocab.clone(), cfg.train.seed)?;
    let diff = param_diff(&reference.params, &fresh.params);
    factguard::training::rundir::write_json(
        &out.join("wiring.json"),
        &serde_json::json!({
            "variant": args.variant.as_str(),
            "classifier_input_width": teacher.model.feature_width(),
            "uses_news_features": args.variant.uses_news_features(),
            "learns_usability": args.variant.learns_usability(),
            "diff_vs_full_at_init": diff,
        }),
    )?;
    Ok(())
}

pub fn distill(args: DistillArgs) -> anyhow::Result<()> {
    let mut cfg = args.config.load()?;
    let d = &mut cfg.distill;
    d.lambda = args.lambda.unwrap_or(d.lambda);
    d.learning_rate = args.lr.unwrap_or(d.learning_rate);
    d.max_epochs = args.epochs.unwrap_or(d.max_epochs);
    d.batch_size = args.batch_size.unwrap_or(d.batch_size);
    d.patience = args.patience.unwrap_or(d.patience);
    let cfg = cfg.resolve()?;
    let out = cfg.output_dir(args.config.out())?;

    let teacher = load_teacher(&args.teacher).with_context(|| format!("loading {}", args.teacher.display()))?;
    let data = data::for_model(&cfg, teacher.config(), teacher.vocab.as_ref())?;
    let train = data.nonempty_split(Split::Train)?;
    let val = data.nonempty_split(Split::Val)?;
    let mut student = Student::from_teacher(&teacher, cfg.distill.seed, cfg.distill.train_encoder)?;

    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let mut recorded = cfg.clone();
    recorded.output_dir = None;
    factguard::training::rundir::write_json(&out.join("config.json"), &recorded)?;
    let started = SystemTime::now();
    let teacher_hash = teacher.params.fingerprint_all();
    let mut history: Vec<DistillEpoch> = Vec::new();
    let outcome = distill_train(&mut student, &teacher, &train, &val, &cfg.distill, |rec, improved, s| {
        history.push(*rec);
        write_rows(out.join("distill_history.csv"), &history)?;
        if improved {
            save_student(out.join("student.fgd1"), s)?;
        }
        Ok(())
    })?;
    if teacher.params.fingerprint_all() != teacher_hash {
        bail!("teacher parameters changed during distillation");
    }
    let rows = split_metrics(&data, |ex| factguard::distill::student_predictions(&student, ex))?;
    write_metrics_csv(out.join("metrics.csv"), &rows)?;
    let test = data.split(Split::Test);
    let test_mse = if test.is_empty() {
        None
    } else {
        let targets = teacher_targets(&teacher, &test)?;
        Some(evaluate_student(&student, &test, &targets, cfg.distill.lambda)?.0.l_distill)
    };
    let final_val_mse = outcome.history.get(outcome.best_epoch.saturating_sub(1)).map(|h| h.val_mse);
    factguard::training::rundir::write_json(
        &out.join("summary.json"),
        &serde_json::json!({
            "initial_val_mse": outcome.initial_val_mse,
            "best_epoch": outcome.best_epoch,
            "best_val_mse": final_val_mse,
            "test_mse": test_mse,
            "stopped_early": outcome.stopped_early,
            "teacher_fingerprint": teacher_hash,
        }),
    )?;
    let secs = started.elapsed().map_or(0.0, |d| d.as_secs_f64());
    factguard::training::rundir::write_json(
        &out.join("meta.json"),
        &serde_json::json!({ "elapsed_s": secs, "teacher": args.teacher }),
    )?;
    Ok(())
}

pub fn gradcheck(args: GradcheckArgs) -> anyhow::Result<()> {
    if args.seeds == 0 {
        return Err(Error::Config("--seeds must be at least 1".into()).into());
    }
    let spec = InstanceSpec {
        d: args.d,
        heads: args.heads,
        max_len: args.max_len,
        variant: args.variant,
        tokens: !args.encoded,
    };
    let cfg = GradcheckConfig {
        epsilon: args.epsilon,
        tolerance: args.tolerance,
    };
    let mut failed = 0;
    for seed in args.first_seed..args.first_seed + args.seeds {
        let r = objective_gradcheck(spec, seed, cfg)?;
        println!(
            "seed {seed:4}  checked {:5}  max rel {:.3e}  inert max abs {:.3e}  {}",
            r.report.checked,
            r.report.max_rel_error(),
            r.inert_max_abs,
            if r.passed() { "ok" } else { "FAIL" }
        );
        if !r.passed() {
            failed += 1;
            if let Some(w) = &r.report.worst {
                log::error!(
                    "seed {seed}: {}[{}] analytic {:.6e} numeric {:.6e}",
                    w.param,
                    w.index,
                    w.analytic,
                    w.numeric
                );
            }
        }
    }
    if failed > 0 {
        bail!("{failed} of {} seeds failed the gradient check", args.seeds);
    }
    Ok(())
}
