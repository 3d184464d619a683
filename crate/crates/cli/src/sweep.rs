use anyhow::Context;
use factguard::checkpoint::load_teacher;
use factguard::datapipe::Split;
use factguard::distill::{distill_train, evaluate_student, teacher_targets, Student};
use factguard::evalbench::{grid_search, integer_grid, lambda_sweep, unit_grid, write_rows};
use factguard::fusion::Teacher;
use factguard::training::{evaluate_teacher, train};

use crate::cli::{GridArgs, LambdaArgs};
use crate::data;

pub fn grid(args: GridArgs) -> anyhow::Result<()> {
    let mut cfg = args.config.load()?;
    args.overrides.apply(&mut cfg);
    let cfg = cfg.resolve()?;
    let out = cfg.output_dir(args.config.out())?;
    let (data, model) = data::for_training(&cfg)?;
    let tr = data.nonempty_split(Split::Train)?;
    let val = data.nonempty_split(Split::Val)?;
    let test = data.split(Split::Test);
    let scored = if test.is_empty() { &val } else { &test };

    let default = if args.integer_grid { integer_grid() } else { unit_grid() };
    let alphas = args.alphas.clone().unwrap_or_else(|| default.clone());
    let betas = args.betas.clone().unwrap_or(default);
    log::info!("grid of {} x {} cells", alphas.len(), betas.len());
    let rows = grid_search(&alphas, &betas, |alpha, beta| {
        let mut tc = cfg.train.clone();
        tc.alpha = alpha;
        tc.beta = beta;
        let mut teacher = Teacher::new(model.clone(), data.vocab.clone(), tc.seed)?;
        train(&mut teacher, &tr, &val, &tc, |_, _, _| Ok(()))?;
        Ok(evaluate_teacher(&teacher, scored)?.1)
    })?;
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    write_rows(out.join("surface.csv"), &rows)?;
    Ok(())
}

pub fn lambda(args: LambdaArgs) -> anyhow::Result<()> {
    let mut cfg = args.config.load()?;
    cfg.distill.max_epochs = args.epochs.unwrap_or(cfg.distill.max_epochs);
    let cfg = cfg.resolve()?;
    let out = cfg.output_dir(args.config.out())?;
    let teacher = load_teacher(&args.teacher).with_context(|| format!("loading {}", args.teacher.display()))?;
    let data = data::for_model(&cfg, teacher.config(), teacher.vocab.as_ref())?;
    let tr = data.nonempty_split(Split::Train)?;
    let val = data.nonempty_split(Split::Val)?;
    let test = data.split(Split::Test);
    let scored = if test.is_empty() { &val } else { &test };
    let targets = teacher_targets(&teacher, scored)?;

    let lambdas = args.lambdas.clone().unwrap_or_else(integer_grid);
    let rows = lambda_sweep(&lambdas, |lambda| {
        let mut dc = cfg.distill.clone();
        dc.lambda = lambda;
        let mut student = Student::from_teacher(&teacher, dc.seed, dc.train_encoder)?;
        distill_train(&mut student, &teacher, &tr, &val, &dc, |_, _, _| Ok(()))?;
        let (loss, m) = evaluate_student(&student, scored, &targets, lambda)?;
        Ok((m, loss.l_distill))
    })?;
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    write_rows(out.join("lambda.csv"), &rows)?;
    Ok(())
}
