//! Finite-difference check of the full training objective.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::datapipe::record::LlmJudgment;
use crate::encoding::EncoderConfig;
use crate::error::Result;
use crate::fusion::{Example, ModelConfig, StreamInput, Teacher, Variant};
use crate::autograd::Tape;
use crate::nn::gradcheck::{analytic_gradients, check_gradients, numeric_gradient, GradcheckConfig, GradcheckReport};
use crate::params::{ParamId, ParamStore};
use crate::tensor::Matrix;
use crate::training::losses::LossWeights;
use crate::training::objective::objective;

/// Largest magnitude tolerated for a gradient that is zero in exact arithmetic.
pub const INERT_TOLERANCE: f64 = 1e-8;

/// Shape of the random instance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InstanceSpec {
    pub d: usize,
    pub heads: usize,
    pub max_len: usize,
    pub variant: Variant,
    /// Token input through toy encoders instead of precomputed matrices.
    pub tokens: bool,
}

impl Default for InstanceSpec {
    fn default() -> Self {
        Self {
            d: 8,
            heads: 2,
            max_len: 6,
            variant: Variant::Full,
            tokens: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ObjectiveGradcheck {
    pub seed: u64,
    pub report: GradcheckReport,
    /// Entries whose exact gradient vanishes because a softmax ignores a
    /// uniform shift of its scores (key biases, token-scorer biases).
    pub inert_checked: usize,
    pub inert_max_abs: f64,
}

impl ObjectiveGradcheck {
    pub fn passed(&self) -> bool {
        self.report.passed() && self.inert_max_abs <= INERT_TOLERANCE
    }
}

/// Biases that only shift all scores of one softmax row by the same amount.
pub fn is_shift_inert(name: &str) -> bool {
    match name.strip_suffix(".bias") {
        Some(stem) => stem.ends_with(".wk") || stem.trim_end_matches(|c: char| c.is_ascii_digit()).ends_with("attn"),
        None => false,
    }
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Matrix::from_vec(rows, cols, data).expect("sized buffer")
}

/// Random teacher and example for the given spec. Sequence lengths are drawn
/// from `1..=max_len`.
pub fn random_instance(spec: InstanceSpec, seed: u64) -> Result<(Teacher, Example, LossWeights)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab_size = 16;
    let config = ModelConfig {
        d: spec.d,
        heads: spec.heads,
        variant: spec.variant,
        encoder: spec.tokens.then_some(EncoderConfig {
            vocab_size,
            max_len: spec.max_len,
            layers: 1,
        }),
        ..ModelConfig::default()
    };
    let teacher = Teacher::new(config, None, rng.gen())?;
    let stream = |rng: &mut ChaCha8Rng| {
        let t = rng.gen_range(1..=spec.max_len);
        if spec.tokens {
            StreamInput::Tokens((0..t).map(|_| rng.gen_range(0..vocab_size)).collect())
        } else {
            StreamInput::Encoded(random_matrix(rng, t, spec.d))
        }
    };
    let news = stream(&mut rng);
    let content = stream(&mut rng);
    let rationale = stream(&mut rng);
    let judgment = [LlmJudgment::Real, LlmJudgment::Fake, LlmJudgment::Other][rng.gen_range(0..3)];
    let ex = Example {
        id: format!("gc{seed}"),
        news,
        content,
        rationale,
        label: rng.gen_range(0..=1),
        judgment,
    };
    let weights = LossWeights::new(rng.gen_range(0.1..1.0), rng.gen_range(0.1..1.0))?;
    Ok((teacher, ex, weights))
}

/// Checks every parameter gradient of `L_total` on one random instance.
pub fn objective_gradcheck(spec: InstanceSpec, seed: u64, cfg: GradcheckConfig) -> Result<ObjectiveGradcheck> {
    let (teacher, ex, weights) = random_instance(spec, seed)?;
    let Teacher {
        model, aux, params, ..
    } = teacher;
    let mut store: ParamStore = params;
    let loss_fn = |s: &ParamStore, t: &mut Tape| {
        objective(t, &model, &aux, s, &ex, weights).map(|o| o.total)
    };
    let ids: Vec<ParamId> = store.ids().collect();
    let analytic = analytic_gradients(&store, &ids, &loss_fn)?;
    let (inert, live): (BTreeMap<_, _>, BTreeMap<_, _>) = analytic
        .into_iter()
        .partition(|(id, _)| is_shift_inert(store.name(*id)));
    let report = check_gradients(&mut store, &live, &loss_fn, cfg)?;

    let mut inert_checked = 0;
    let mut inert_max_abs: f64 = 0.0;
    for (id, a) in &inert {
        let n = numeric_gradient(&mut store, *id, &loss_fn, cfg.epsilon)?;
        inert_checked += a.len();
        for v in a.as_slice().iter().chain(n.as_slice()) {
            inert_max_abs = inert_max_abs.max(v.abs());
        }
    }
    Ok(ObjectiveGradcheck {
        seed,
        report,
        inert_checked,
        inert_max_abs,
    })
}
