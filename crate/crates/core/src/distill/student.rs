use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autograd::{Tape, Var};
use crate::encoding::{ToyEncoder, Vocabulary};
use crate::error::{Error, Result};
use crate::fusion::{FactGuard, ModelConfig, StreamInput, Teacher};
use crate::nn::{Linear, Mlp, TokenAttention, TransformerBlock};
use crate::params::{ParamId, ParamStore};

pub const SIMULATOR_BLOCKS: usize = 4;
pub const SIMULATOR_PREFIX: &str = "simulator.";

/// Maps news encodings to an imitation of the teacher's classifier input.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Simulator {
    pub blocks: Vec<TransformerBlock>,
    pub pool: TokenAttention,
    pub proj: Linear,
}

impl Simulator {
    pub fn new(store: &mut ParamStore, config: &ModelConfig, width: usize, rng: &mut ChaCha8Rng) -> Result<Self> {
        let (d, h, act) = (config.d, config.heads, config.activation);
        let blocks = (0..SIMULATOR_BLOCKS)
            .map(|i| TransformerBlock::new(store, &format!("simulator.block{i}"), d, h, act, rng))
            .collect::<Result<_>>()?;
        Ok(Self {
            blocks,
            pool: TokenAttention::new(store, "simulator.pool", d, rng),
            proj: Linear::new(store, "simulator.proj", d, width, rng),
        })
    }

    /// `[T×d] → [1×width]`.
    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, x: Var) -> Result<Var> {
        let mut h = x;
        for b in &self.blocks {
            h = b.forward(tape, store, h)?;
        }
        let pooled = self.pool.forward(tape, store, h)?;
        self.proj.forward(tape, store, pooled)
    }
}

/// News-only student distilled from a trained [`Teacher`].
#[derive(Clone, Debug, PartialEq)]
pub struct Student {
    /// Teacher configuration the student was derived from.
    pub config: ModelConfig,
    pub train_encoder: bool,
    pub news_encoder: Option<ToyEncoder>,
    pub simulator: Simulator,
    pub classifier: Mlp,
    pub params: ParamStore,
    pub vocab: Option<Vocabulary>,
}

fn copied_from_teacher(name: &str) -> bool {
    name.starts_with("news_encoder.") || name.starts_with("classifier.")
}

impl Student {
    /// Fresh simulator; news encoder and classifier copied from `teacher`.
    pub fn from_teacher(teacher: &Teacher, seed: u64, train_encoder: bool) -> Result<Self> {
        if teacher.config().encoder.is_some() && teacher.model.news_encoder.is_none() && !train_encoder {
            return Err(Error::config(
                "teacher variant has no news encoder to copy; enable train_encoder",
            ));
        }
        let mut student = Self::blank(teacher.config().clone(), teacher.vocab.clone(), seed, train_encoder)?;
        for t in teacher.params.tensors().iter().filter(|t| copied_from_teacher(&t.name)) {
            let id = student
                .params
                .find(&t.name)
                .ok_or_else(|| Error::config(format!("student has no slot for teacher tensor {}", t.name)))?;
            student.params.set(id, t.value.clone())?;
        }
        Ok(student)
    }

    /// Student with freshly initialised parameters everywhere.
    pub fn blank(config: ModelConfig, vocab: Option<Vocabulary>, seed: u64, train_encoder: bool) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamStore::new();
        let news_encoder = match &config.encoder {
            Some(ec) => Some(ToyEncoder::new(
                &mut params,
                "news_encoder",
                ec,
                config.d,
                config.heads,
                config.activation,
                &mut rng,
            )?),
            None => None,
        };
        let width = config.variant.classifier_width() * config.d;
        let classifier = Mlp::new(&mut params, "classifier", &[width, config.d, 1], config.activation, &mut rng)?;
        let simulator = Simulator::new(&mut params, &config, width, &mut rng)?;
        Ok(Self {
            config,
            train_encoder,
            news_encoder,
            simulator,
            classifier,
            params,
            vocab,
        })
    }

    pub fn feature_width(&self) -> usize {
        self.classifier.in_dim()
    }

    /// Parameters updated by distillation.
    pub fn trainable_ids(&self) -> Vec<ParamId> {
        let mut ids: Vec<ParamId> = self.params.ids_with_prefix(SIMULATOR_PREFIX).collect();
        if self.train_encoder {
            if let Some(enc) = &self.news_encoder {
                ids.extend(enc.param_ids(&self.params));
            }
        }
        ids.sort();
        ids
    }

    /// Parameters that must stay bitwise equal during distillation.
    pub fn frozen_ids(&self) -> Vec<ParamId> {
        let trainable = self.trainable_ids();
        self.params.ids().filter(|id| !trainable.contains(id)).collect()
    }

    /// Records `(f_cls^d, ŷ)` for one news stream.
    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, news: &StreamInput) -> Result<(Var, Var)> {
        let x = match news {
            StreamInput::Encoded(m) => {
                if m.cols() != self.config.d {
                    return Err(Error::shape(format!(
                        "news encoding has width {}, student has d={}",
                        m.cols(),
                        self.config.d
                    )));
                }
                if m.rows() == 0 {
                    return Err(Error::arg("empty news sequence"));
                }
                tape.leaf(m.clone())
            }
            StreamInput::Tokens(ids) => self
                .news_encoder
                .as_ref()
                .ok_or_else(|| Error::config("token input given to a student without a news encoder"))?
                .forward(tape, store, ids)?,
        };
        let f = self.simulator.forward(tape, store, x)?;
        let logit = self.classifier.forward(tape, store, f)?;
        Ok((f, tape.sigmoid(logit)))
    }

    pub fn simulate_features(&self, news: &StreamInput) -> Result<Vec<f64>> {
        let mut tape = Tape::new();
        let (f, _) = self.forward(&mut tape, &self.params, news)?;
        Ok(tape.value(f).as_slice().to_vec())
    }

    pub fn predict(&self, news: &StreamInput) -> Result<f64> {
        let mut tape = Tape::new();
        let (_, y) = self.forward(&mut tape, &self.params, news)?;
        Ok(tape.scalar(y))
    }

    /// Fake-news probability from raw news text alone.
    pub fn infer_text(&self, text: &str) -> Result<f64> {
        let vocab = self
            .vocab
            .as_ref()
            .ok_or_else(|| Error::config("student was distilled on precomputed encodings, not text"))?;
        let max_len = self.config.encoder.as_ref().map_or(usize::MAX, |e| e.max_len);
        let ids = crate::encoding::tokenize(text, vocab, max_len)?.ids;
        self.predict(&StreamInput::Tokens(ids))
    }
}

/// Teacher classifier input for one example, computed without gradients.
pub fn teacher_features(teacher: &Teacher, ex: &crate::fusion::Example) -> Result<Vec<f64>> {
    let mut tape = Tape::new();
    let vars = teacher.model.forward(&mut tape, &teacher.params, ex)?;
    Ok(FactGuard::trace(&tape, &vars).f_cls)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::Variant;
    use crate::tensor::Matrix;

    fn teacher(d: usize) -> Teacher {
        Teacher::new(
            ModelConfig {
                d,
                heads: 2,
                ..ModelConfig::default()
            },
            None,
            3759,
        )
        .unwrap()
    }

    fn news(t: usize, d: usize) -> StreamInput {
        StreamInput::Encoded(Matrix::from_vec(t, d, (0..t * d).map(|i| (i as f64 * 0.3).sin()).collect()).unwrap())
    }

    #[test]
    fn output_is_three_d_wide() {
        let t = teacher(32);
        let s = Student::from_teacher(&t, 1, false).unwrap();
        assert_eq!(s.simulate_features(&news(5, 32)).unwrap().len(), 96);
        assert_eq!(s.simulator.blocks.len(), 4);
    }

    #[test]
    fn deterministic_and_in_unit_interval() {
        let s = Student::from_teacher(&teacher(8), 1, false).unwrap();
        let n = news(4, 8);
        assert_eq!(s.simulate_features(&n).unwrap(), s.simulate_features(&n).unwrap());
        let p = s.predict(&n).unwrap();
        assert!(p > 0.0 && p < 1.0);
        assert_eq!(p.to_bits(), s.predict(&n).unwrap().to_bits());
    }

    #[test]
    fn zeroed_projection_gives_zero_features() {
        let mut s = Student::from_teacher(&teacher(8), 1, false).unwrap();
        for id in s.simulator.proj.param_ids() {
            s.params.get_mut(id).as_mut_slice().fill(0.0);
        }
        assert!(s.simulate_features(&news(3, 8)).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn classifier_is_copied_from_teacher() {
        let t = teacher(8);
        let s = Student::from_teacher(&t, 1, false).unwrap();
        for id in s.classifier.param_ids() {
            let name = s.params.name(id);
            assert_eq!(s.params.get(id), t.params.get(t.params.find(name).unwrap()));
        }
        assert!(s.trainable_ids().iter().all(|&id| s.params.name(id).starts_with(SIMULATOR_PREFIX)));
    }

    #[test]
    fn width_follows_teacher_variant() {
        let t = Teacher::new(
            ModelConfig {
                d: 8,
                heads: 2,
                variant: Variant::WoNews,
                ..ModelConfig::default()
            },
            None,
            1,
        )
        .unwrap();
        assert_eq!(Student::from_teacher(&t, 1, false).unwrap().feature_width(), 16);
    }
}
