use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::autograd::{Precision, Tape};
use crate::distill::student::{teacher_features, Student};
use crate::error::{Error, Result};
use crate::evalbench::metrics::{evaluate, MetricsReport};
use crate::fusion::{Example, Teacher};
use crate::nn::loss::{bce, mse};
use crate::params::ParamId;
use crate::tensor::Matrix;
use crate::training::optim::AdamW;
use crate::training::trainer::DEFAULT_SEED;

pub const DEFAULT_LAMBDA: f64 = 8.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistillConfig {
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default = "default_wd")]
    pub weight_decay: f64,
    #[serde(default = "default_patience")]
    pub patience: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_epochs")]
    pub max_epochs: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub precision: Precision,
    /// Let the copied news encoder learn as well.
    #[serde(default)]
    pub train_encoder: bool,
}

fn default_lambda() -> f64 {
    DEFAULT_LAMBDA
}
fn default_lr() -> f64 {
    2e-4
}
fn default_wd() -> f64 {
    5e-5
}
fn default_patience() -> usize {
    5
}
fn default_batch() -> usize {
    32
}
fn default_epochs() -> usize {
    50
}
fn default_seed() -> u64 {
    DEFAULT_SEED
}

impl Default for DistillConfig {
    fn default() -> Self {
        Self {
            lambda: DEFAULT_LAMBDA,
            learning_rate: default_lr(),
            weight_decay: default_wd(),
            patience: default_patience(),
            batch_size: default_batch(),
            max_epochs: default_epochs(),
            seed: default_seed(),
            precision: Precision::default(),
            train_encoder: false,
        }
    }
}

impl DistillConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::config(format!("lambda must be finite and >= 0, got {}", self.lambda)));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("learning_rate must be finite and >= 0"));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::config("weight_decay must be finite and >= 0"));
        }
        if self.batch_size == 0 || self.max_epochs == 0 {
            return Err(Error::config("batch_size and max_epochs must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistillLoss {
    pub l_cls: f64,
    pub l_distill: f64,
    pub l_fgd: f64,
}

impl DistillLoss {
    pub fn new(l_cls: f64, l_distill: f64, lambda: f64) -> Self {
        Self {
            l_cls,
            l_distill,
            l_fgd: l_cls + lambda * l_distill,
        }
    }

    pub fn mean(items: &[DistillLoss], lambda: f64) -> Self {
        if items.is_empty() {
            return Self::new(0.0, 0.0, lambda);
        }
        let n = items.len() as f64;
        let l_cls = items.iter().map(|l| l.l_cls).sum::<f64>() / n;
        let l_distill = items.iter().map(|l| l.l_distill).sum::<f64>() / n;
        Self::new(l_cls, l_distill, lambda)
    }
}

/// `bce(ŷ, y) + λ·mse(f_d, f_t)`.
pub fn distill_loss(f_d: &[f64], f_t: &[f64], y_hat: f64, y: u8, lambda: f64) -> Result<DistillLoss> {
    let l_distill = mse(f_d, f_t)?;
    Ok(DistillLoss::new(bce(y_hat, f64::from(y))?, l_distill, lambda))
}

/// One row of `distill_history.csv`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistillEpoch {
    pub epoch: usize,
    pub l_cls: f64,
    pub l_distill: f64,
    pub l_fgd: f64,
    pub val_l_fgd: f64,
    pub val_mse: f64,
    pub val_acc: f64,
    pub val_macf1: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DistillOutcome {
    /// Validation feature MSE before any update.
    pub initial_val_mse: f64,
    pub history: Vec<DistillEpoch>,
    pub best_epoch: usize,
    pub stopped_early: bool,
}

/// Teacher features for every example, in order.
pub fn teacher_targets(teacher: &Teacher, examples: &[Example]) -> Result<Vec<Vec<f64>>> {
    examples.par_iter().map(|ex| teacher_features(teacher, ex)).collect()
}

/// Losses and predictions of the student against cached teacher features.
pub fn evaluate_student(
    student: &Student,
    examples: &[Example],
    targets: &[Vec<f64>],
    lambda: f64,
) -> Result<(DistillLoss, MetricsReport)> {
    if examples.is_empty() {
        return Err(Error::arg("cannot evaluate on an empty split"));
    }
    let rows: Vec<Result<(DistillLoss, f64)>> = examples
        .par_iter()
        .zip(targets)
        .map(|(ex, t)| {
            let f = student.simulate_features(&ex.news)?;
            let p = student.predict(&ex.news)?;
            Ok((distill_loss(&f, t, p, ex.label, lambda)?, p))
        })
        .collect();
    let (losses, preds): (Vec<_>, Vec<_>) = rows.into_iter().collect::<Result<Vec<_>>>()?.into_iter().unzip();
    let labels: Vec<u8> = examples.iter().map(|e| e.label).collect();
    Ok((DistillLoss::mean(&losses, lambda), evaluate(&preds, &labels)?))
}

pub fn student_predictions(student: &Student, examples: &[Example]) -> Result<Vec<f64>> {
    examples.par_iter().map(|ex| student.predict(&ex.news)).collect()
}

fn sample_gradients(
    student: &Student,
    ex: &Example,
    target: &[f64],
    lambda: f64,
    precision: Precision,
) -> Result<(BTreeMap<ParamId, Matrix>, DistillLoss)> {
    let mut tape = Tape::with_precision(precision);
    let (f, y_hat) = student.forward(&mut tape, &student.params, &ex.news)?;
    let l_cls = tape.bce(y_hat, f64::from(ex.label))?;
    let t = tape.leaf(Matrix::row_vector(target));
    let l_distill = tape.mse(f, t)?;
    let total = tape.lincomb(&[(l_cls, 1.0), (l_distill, lambda)])?;
    let loss = DistillLoss::new(tape.scalar(l_cls), tape.scalar(l_distill), lambda);
    if !loss.l_fgd.is_finite() {
        return Err(Error::Numeric(format!("sample {}: non-finite L_FGD {}", ex.id, loss.l_fgd)));
    }
    Ok((tape.backward(total)?.into_param_map(), loss))
}

/// Trains the simulator to imitate the teacher's classifier input. Teacher,
/// classifier and (unless `train_encoder`) news encoder stay untouched.
///
/// Early stopping monitors validation `L_FGD`; the student ends with the
/// parameters of the best epoch.
pub fn distill_train<F>(
    student: &mut Student,
    teacher: &Teacher,
    train: &[Example],
    val: &[Example],
    cfg: &DistillConfig,
    mut on_epoch: F,
) -> Result<DistillOutcome>
where
    F: FnMut(&DistillEpoch, bool, &Student) -> Result<()>,
{
    cfg.validate()?;
    if student.config.d != teacher.config().d || student.feature_width() != teacher.model.feature_width() {
        return Err(Error::config(format!(
            "student (d={}, width {}) does not match teacher (d={}, width {})",
            student.config.d,
            student.feature_width(),
            teacher.config().d,
            teacher.model.feature_width()
        )));
    }
    if train.is_empty() || val.is_empty() {
        return Err(Error::arg("train and validation splits must be nonempty"));
    }
    let train_t = teacher_targets(teacher, train)?;
    let val_t = teacher_targets(teacher, val)?;
    let trainable = student.trainable_ids();
    let (initial, _) = evaluate_student(student, val, &val_t, cfg.lambda)?;

    let mut opt = AdamW::new(cfg.learning_rate, cfg.weight_decay);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(2));
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = Vec::new();
    let mut best = f64::INFINITY;
    let mut best_epoch = 0;
    let mut best_params = student.params.clone();
    let mut stale = 0;
    let mut stopped_early = false;
    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut losses = Vec::with_capacity(train.len());
        for chunk in order.chunks(cfg.batch_size) {
            let per_sample: Vec<Result<_>> = chunk
                .par_iter()
                .map(|&i| sample_gradients(student, &train[i], &train_t[i], cfg.lambda, cfg.precision))
                .collect();
            let mut sum: BTreeMap<ParamId, Matrix> = BTreeMap::new();
            for r in per_sample {
                let (g, l) = r.map_err(|e| Error::Numeric(format!("epoch {epoch}: {e}")))?;
                for id in &trainable {
                    if let Some(m) = g.get(id) {
                        match sum.get_mut(id) {
                            Some(acc) => acc.add_assign(m),
                            None => {
                                sum.insert(*id, m.clone());
                            }
                        }
                    }
                }
                losses.push(l);
            }
            let k = 1.0 / chunk.len() as f64;
            for m in sum.values_mut() {
                m.scale_in_place(k);
            }
            opt.step(&mut student.params, &sum);
            if cfg.precision == Precision::F32 {
                for id in &trainable {
                    for v in student.params.get_mut(*id).as_mut_slice() {
                        *v = *v as f32 as f64;
                    }
                }
            }
        }
        let mean = DistillLoss::mean(&losses, cfg.lambda);
        let (vl, vm) = evaluate_student(student, val, &val_t, cfg.lambda)?;
        let record = DistillEpoch {
            epoch,
            l_cls: mean.l_cls,
            l_distill: mean.l_distill,
            l_fgd: mean.l_fgd,
            val_l_fgd: vl.l_fgd,
            val_mse: vl.l_distill,
            val_acc: vm.acc,
            val_macf1: vm.macf1,
        };
        let improved = vl.l_fgd < best;
        if improved {
            best = vl.l_fgd;
            best_epoch = epoch;
            best_params = student.params.clone();
            stale = 0;
        } else {
            stale += 1;
        }
        log::info!(
            "distill epoch {epoch}: l_fgd {:.5} val_mse {:.5} val_acc {:.4}{}",
            record.l_fgd,
            record.val_mse,
            record.val_acc,
            if improved { " *" } else { "" }
        );
        history.push(record);
        on_epoch(&record, improved, student)?;
        if stale >= cfg.patience {
            stopped_early = true;
            break;
        }
    }
    student.params = best_params;
    Ok(DistillOutcome {
        initial_val_mse: initial.l_distill,
        history,
        best_epoch,
        stopped_early,
    })
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;
    use crate::datapipe::record::Split;
    use crate::evalbench::synth::{make_synthetic, SyntheticSpec};
    use crate::fusion::ModelConfig;

    #[test]
    fn loss_examples() {
        let l = distill_loss(&[1.0, 2.0], &[1.0, 2.0], 1.0 - 1e-12, 1, 8.0).unwrap();
        assert!(l.l_fgd < 1e-6);
        let l = distill_loss(&[0.0, 0.0], &[1.0, 1.0], 0.3, 0, 0.0).unwrap();
        assert_eq!(l.l_fgd, l.l_cls);
        assert_abs_diff_eq!(DistillLoss::new(0.5, 0.1, 8.0).l_fgd, 1.3, epsilon = 1e-12);
        assert!(matches!(distill_loss(&[0.0], &[1.0, 2.0], 0.5, 1, 8.0), Err(Error::Shape(_))));
    }

    #[test]
    fn negative_lambda_is_rejected() {
        let cfg = DistillConfig {
            lambda: -1.0,
            ..DistillConfig::default()
        };
        assert!(cfg.validate().unwrap_err().is_config());
    }

    #[test]
    fn only_simulator_moves() {
        let set = make_synthetic(&SyntheticSpec::new(40, 8), 2).unwrap();
        let teacher = Teacher::new(
            ModelConfig {
                d: 8,
                heads: 2,
                ..ModelConfig::default()
            },
            None,
            1,
        )
        .unwrap();
        let mut student = Student::from_teacher(&teacher, 2, false).unwrap();
        let frozen = student.frozen_ids();
        let before = student.params.fingerprint(frozen.iter().copied());
        let teacher_before = teacher.params.fingerprint_all();
        let sim_before = student.params.fingerprint(student.trainable_ids());
        let cfg = DistillConfig {
            max_epochs: 2,
            batch_size: 8,
            learning_rate: 1e-3,
            ..DistillConfig::default()
        };
        let out = distill_train(
            &mut student,
            &teacher,
            &set.split(Split::Train),
            &set.split(Split::Val),
            &cfg,
            |r, _, _| {
                assert_abs_diff_eq!(r.l_fgd, r.l_cls + 8.0 * r.l_distill, epsilon = 1e-12);
                Ok(())
            },
        )
        .unwrap();
        assert_eq!(out.history.len(), 2);
        assert_eq!(student.params.fingerprint(frozen), before);
        assert_eq!(teacher.params.fingerprint_all(), teacher_before);
        assert_ne!(student.params.fingerprint(student.trainable_ids()), sim_before);
    }

    #[test]
    fn width_mismatch_is_a_config_error() {
        let cfg = |d| ModelConfig {
            d,
            heads: 2,
            ..ModelConfig::default()
        };
        let teacher = Teacher::new(cfg(8), None, 1).unwrap();
        let mut student = Student::blank(cfg(4), None, 1, false).unwrap();
        let set = make_synthetic(&SyntheticSpec::new(10, 8), 2).unwrap();
        let err = distill_train(
            &mut student,
            &teacher,
            &set.examples,
            &set.examples,
            &DistillConfig::default(),
            |_, _, _| Ok(()),
        )
        .unwrap_err();
        assert!(err.is_config());
    }
}
