use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::autograd::{Precision, Tape};
use crate::datapipe::record::Lang;
use crate::error::{Error, Result};
use crate::evalbench::metrics::{evaluate, MetricsReport};
use crate::fusion::{Example, Teacher};
use crate::params::ParamId;
use crate::tensor::Matrix;
use crate::training::losses::{LossBreakdown, LossWeights};
use crate::training::objective::objective;
use crate::training::optim::AdamW;

pub const DEFAULT_SEED: u64 = 3759;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
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
}

fn default_alpha() -> f64 {
    0.40
}
fn default_beta() -> f64 {
    0.16
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

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            alpha: default_alpha(),
            beta: default_beta(),
            learning_rate: default_lr(),
            weight_decay: default_wd(),
            patience: default_patience(),
            batch_size: default_batch(),
            max_epochs: default_epochs(),
            seed: default_seed(),
            precision: Precision::default(),
        }
    }
}

impl TrainConfig {
    /// Tuned loss weights per benchmark language.
    pub fn loss_weights_for(lang: Lang) -> LossWeights {
        match lang {
            Lang::Zh => LossWeights { alpha: 0.40, beta: 0.16 },
            Lang::En => LossWeights { alpha: 0.50, beta: 0.58 },
        }
    }

    pub fn weights(&self) -> Result<LossWeights> {
        LossWeights::new(self.alpha, self.beta)
    }

    pub fn validate(&self) -> Result<()> {
        self.weights()?;
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

/// One row of `history.csv`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub l_cls: f64,
    pub l_usability: f64,
    pub l_text: f64,
    pub l_total: f64,
    pub val_acc: f64,
    pub val_macf1: f64,
    pub val_f1_real: f64,
    pub val_f1_fake: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    pub history: Vec<EpochRecord>,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
    pub best_val_macf1: f64,
    pub stopped_early: bool,
}

/// Gradients of the objective for one example, plus its loss terms.
pub fn sample_gradients(
    teacher: &Teacher,
    ex: &Example,
    weights: LossWeights,
    precision: Precision,
) -> Result<(BTreeMap<ParamId, Matrix>, LossBreakdown)> {
    let mut tape = Tape::with_precision(precision);
    let obj = objective(&mut tape, &teacher.model, &teacher.aux, &teacher.params, ex, weights)?;
    let grads = tape
        .backward(obj.total)
        .map_err(|e| Error::Numeric(format!("sample {}: {e}", ex.id)))?;
    Ok((grads.into_param_map(), obj.breakdown))
}

/// Mean gradient over a batch. Per-sample work runs in parallel; the sum is
/// taken in batch order.
pub fn batch_gradients(
    teacher: &Teacher,
    batch: &[&Example],
    weights: LossWeights,
    precision: Precision,
) -> Result<(BTreeMap<ParamId, Matrix>, Vec<LossBreakdown>)> {
    let per_sample: Vec<Result<_>> = batch
        .par_iter()
        .map(|ex| sample_gradients(teacher, ex, weights, precision))
        .collect();
    let mut sum: BTreeMap<ParamId, Matrix> = BTreeMap::new();
    let mut losses = Vec::with_capacity(batch.len());
    for r in per_sample {
        let (g, l) = r?;
        for (id, m) in g {
            match sum.get_mut(&id) {
                Some(acc) => acc.add_assign(&m),
                None => {
                    sum.insert(id, m);
                }
            }
        }
        losses.push(l);
    }
    let k = 1.0 / batch.len() as f64;
    for m in sum.values_mut() {
        m.scale_in_place(k);
    }
    Ok((sum, losses))
}

pub fn predict_all(teacher: &Teacher, examples: &[Example]) -> Result<Vec<f64>> {
    examples.par_iter().map(|ex| teacher.predict(ex)).collect()
}

pub fn evaluate_teacher(teacher: &Teacher, examples: &[Example]) -> Result<(Vec<f64>, MetricsReport)> {
    if examples.is_empty() {
        return Err(Error::arg("cannot evaluate on an empty split"));
    }
    let preds = predict_all(teacher, examples)?;
    let labels: Vec<u8> = examples.iter().map(|e| e.label).collect();
    let m = evaluate(&preds, &labels)?;
    Ok((preds, m))
}

/// Trains with AdamW and early stopping on validation macF1.
///
/// `on_epoch` sees every epoch's record, whether it improved on the best so
/// far, and the model as it stands after that epoch. On return the teacher
/// holds the parameters of the best epoch.
pub fn train<F>(
    teacher: &mut Teacher,
    train: &[Example],
    val: &[Example],
    cfg: &TrainConfig,
    mut on_epoch: F,
) -> Result<TrainOutcome>
where
    F: FnMut(&EpochRecord, bool, &Teacher) -> Result<()>,
{
    cfg.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(Error::arg("train and validation splits must be nonempty"));
    }
    let weights = cfg.weights()?;
    let mut opt = AdamW::new(cfg.learning_rate, cfg.weight_decay);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let mut order: Vec<usize> = (0..train.len()).collect();

    let mut history = Vec::new();
    let mut best = f64::NEG_INFINITY;
    let mut best_epoch = 0;
    let mut best_params = teacher.params.clone();
    let mut stale = 0;
    let mut stopped_early = false;
    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut losses = Vec::with_capacity(train.len());
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&Example> = chunk.iter().map(|&i| &train[i]).collect();
            let (grads, l) = batch_gradients(teacher, &batch, weights, cfg.precision)
                .map_err(|e| Error::Numeric(format!("epoch {epoch}: {e}")))?;
            opt.step(&mut teacher.params, &grads);
            if cfg.precision == Precision::F32 {
                teacher.params.round_to_f32();
            }
            losses.extend(l);
        }
        let mean = LossBreakdown::mean(&losses);
        let (_, m) = evaluate_teacher(teacher, val)?;
        let record = EpochRecord {
            epoch,
            l_cls: mean.l_cls,
            l_usability: mean.l_usability,
            l_text: mean.l_text,
            l_total: mean.l_total,
            val_acc: m.acc,
            val_macf1: m.macf1,
            val_f1_real: m.f1_real,
            val_f1_fake: m.f1_fake,
        };
        let improved = m.macf1 > best;
        if improved {
            best = m.macf1;
            best_epoch = epoch;
            best_params = teacher.params.clone();
            stale = 0;
        } else {
            stale += 1;
        }
        log::info!(
            "epoch {epoch}: l_total {:.5} val_macf1 {:.4}{}",
            record.l_total,
            record.val_macf1,
            if improved { " *" } else { "" }
        );
        history.push(record);
        on_epoch(&record, improved, teacher)?;
        if stale >= cfg.patience {
            stopped_early = true;
            break;
        }
    }
    teacher.params = best_params;
    Ok(TrainOutcome {
        history,
        best_epoch,
        best_val_macf1: best,
        stopped_early,
    })
}
