//! Toy corpora with known structure for desk-scale checks.
//!
//! Every record draws class-specific event tokens. `n` mixes them with style
//! and filler tokens, `c` repeats them next to two topic tokens shared by all
//! records, and `r` carries the LLM's advice token next to the event tokens
//! quoted from `n`. Encodings are fixed random token vectors plus
//! Gaussian noise.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::datapipe::record::{Lang, LlmJudgment, NewsRecord, Split};
use crate::encoding::{BundleWriter, Role};
use crate::error::{Error, Result};
use crate::fusion::{Example, StreamInput};
use crate::tensor::Matrix;

const EVENT_POOL: usize = 8;
const STYLE_POOL: usize = 4;
const FILLER_POOL: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub size: usize,
    pub d: usize,
    /// Fraction of fake records.
    #[serde(default = "half")]
    pub fake_fraction: f64,
    /// Probability that a non-"other" judgment equals the label.
    #[serde(default = "one")]
    pub reliability: f64,
    /// Probability that a style token is drawn from the record's own class.
    #[serde(default = "half")]
    pub style_confound: f64,
    /// Probability of an "other" judgment.
    #[serde(default)]
    pub other_rate: f64,
    /// Fraction of records whose event tokens come from a pool shared by both
    /// classes, so that only style and advice hint at the label.
    #[serde(default)]
    pub ambiguity: f64,
    /// Standard deviation of the per-token encoding noise.
    #[serde(default = "default_noise")]
    pub noise: f64,
    #[serde(default = "default_lang")]
    pub lang: Lang,
}

fn half() -> f64 {
    0.5
}
fn one() -> f64 {
    1.0
}
fn default_noise() -> f64 {
    0.05
}
fn default_lang() -> Lang {
    Lang::En
}

impl SyntheticSpec {
    pub fn new(size: usize, d: usize) -> Self {
        Self {
            size,
            d,
            fake_fraction: 0.5,
            reliability: 1.0,
            style_confound: 0.5,
            other_rate: 0.0,
            ambiguity: 0.0,
            noise: default_noise(),
            lang: Lang::En,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("fake_fraction", self.fake_fraction),
            ("reliability", self.reliability),
            ("style_confound", self.style_confound),
            ("other_rate", self.other_rate),
            ("ambiguity", self.ambiguity),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::config(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        if self.size == 0 || self.d == 0 {
            return Err(Error::config("size and d must be positive"));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::config("noise must be finite and >= 0"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSet {
    pub spec: SyntheticSpec,
    pub records: Vec<NewsRecord>,
    /// Same order as `records`, with precomputed encodings.
    pub examples: Vec<Example>,
}

impl SyntheticSet {
    pub fn split(&self, split: Split) -> Vec<Example> {
        self.records
            .iter()
            .zip(&self.examples)
            .filter(|(r, _)| r.split == split)
            .map(|(_, e)| e.clone())
            .collect()
    }

    pub fn write_bundle(&self, dir: impl AsRef<Path>) -> Result<()> {
        let mut w = BundleWriter::create(dir, self.spec.d)?;
        for ex in &self.examples {
            for role in Role::ALL {
                if let StreamInput::Encoded(m) = ex.stream(role) {
                    w.add(&ex.id, role, m)?;
                }
            }
        }
        w.finish()?;
        Ok(())
    }
}

fn class_name(y: u8) -> &'static str {
    if y == 1 {
        "fake"
    } else {
        "real"
    }
}

/// Token inventory in a fixed order; the index selects the embedding row.
fn inventory() -> Vec<String> {
    let mut v = Vec::new();
    for y in [0, 1] {
        v.extend((0..EVENT_POOL).map(|k| format!("event_{}_{k}", class_name(y))));
        v.extend((0..STYLE_POOL).map(|k| format!("style_{}_{k}", class_name(y))));
    }
    v.extend((0..EVENT_POOL).map(|k| format!("event_shared_{k}")));
    v.extend((0..FILLER_POOL).map(|k| format!("w{k}")));
    v.extend(["topic_a", "topic_b", "says_real", "says_fake", "says_other"].map(String::from));
    v
}

pub fn make_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<SyntheticSet> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tokens = inventory();
    let table: Vec<Vec<f64>> = tokens
        .iter()
        .map(|_| (0..spec.d).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    let index = |t: &str| tokens.iter().position(|x| x == t).expect("token in inventory");

    let n_fake = (spec.size as f64 * spec.fake_fraction).round() as usize;
    let mut labels: Vec<u8> = (0..spec.size).map(|i| u8::from(i < n_fake)).collect();
    labels.shuffle(&mut rng);
    let n_train = spec.size * 6 / 10;
    let n_val = spec.size * 2 / 10;

    let mut records = Vec::with_capacity(spec.size);
    let mut examples = Vec::with_capacity(spec.size);
    for (i, &y) in labels.iter().enumerate() {
        let judgment = if rng.gen_bool(spec.other_rate) {
            LlmJudgment::Other
        } else if rng.gen_bool(spec.reliability) {
            LlmJudgment::from_label(y)
        } else {
            LlmJudgment::from_label(1 - y)
        };
        let pool = if rng.gen_bool(spec.ambiguity) { "shared" } else { class_name(y) };
        let events: Vec<String> = (0..3)
            .map(|_| format!("event_{pool}_{}", rng.gen_range(0..EVENT_POOL)))
            .collect();
        let style: Vec<String> = (0..2)
            .map(|_| {
                let cls = if rng.gen_bool(spec.style_confound) { y } else { rng.gen_range(0..=1) };
                format!("style_{}_{}", class_name(cls), rng.gen_range(0..STYLE_POOL))
            })
            .collect();
        let mut filler = || format!("w{}", rng.gen_range(0..FILLER_POOL));
        let (f1, f2) = (filler(), filler());

        let mut n: Vec<String> = events.iter().chain(&style).cloned().chain([f1, f2]).collect();
        let mut c: Vec<String> = events.iter().cloned().chain(["topic_a".into(), "topic_b".into()]).collect();
        let advice = format!("says_{}", judgment.as_str());
        let mut r: Vec<String> = vec![advice.clone(), advice];
        r.extend(events.iter().cloned());
        n.shuffle(&mut rng);
        c.shuffle(&mut rng);
        r.shuffle(&mut rng);

        let mut encode = |seq: &[String]| -> Matrix {
            let mut data = Vec::with_capacity(seq.len() * spec.d);
            for t in seq {
                for &v in &table[index(t)] {
                    let e: f64 = rng.sample(StandardNormal);
                    data.push(v + spec.noise * e);
                }
            }
            Matrix::from_vec(seq.len(), spec.d, data).expect("sized buffer")
        };
        let (en, ec, er) = (encode(&n), encode(&c), encode(&r));

        let id = format!("syn-{i:05}");
        let split = if i < n_train {
            Split::Train
        } else if i < n_train + n_val {
            Split::Val
        } else {
            Split::Test
        };
        records.push(NewsRecord {
            id: id.clone(),
            n: n.join(" "),
            c: c.join(" "),
            r: r.join(" "),
            y,
            y_llm: judgment,
            lang: spec.lang,
            split,
            extra: Default::default(),
        });
        examples.push(Example {
            id,
            news: StreamInput::Encoded(en),
            content: StreamInput::Encoded(ec),
            rationale: StreamInput::Encoded(er),
            label: y,
            judgment,
        });
    }
    Ok(SyntheticSet {
        spec: spec.clone(),
        records,
        examples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_reliability_copies_labels() {
        let set = make_synthetic(&SyntheticSpec::new(200, 8), 1).unwrap();
        assert!(set.records.iter().all(|r| r.y_llm == LlmJudgment::from_label(r.y)));
        assert_eq!(set.records.iter().filter(|r| r.y == 1).count(), 100);
    }

    #[test]
    fn half_reliability_agrees_about_half_the_time() {
        let spec = SyntheticSpec {
            reliability: 0.5,
            ..SyntheticSpec::new(1000, 4)
        };
        let set = make_synthetic(&spec, 7).unwrap();
        let agree = set.records.iter().filter(|r| r.y_llm == LlmJudgment::from_label(r.y)).count();
        assert!((450..=550).contains(&agree), "{agree}");
    }

    #[test]
    fn same_seed_same_data() {
        let spec = SyntheticSpec::new(30, 6);
        assert_eq!(make_synthetic(&spec, 3).unwrap(), make_synthetic(&spec, 3).unwrap());
        assert_ne!(make_synthetic(&spec, 3).unwrap(), make_synthetic(&spec, 4).unwrap());
    }

    #[test]
    fn streams_follow_the_recipe() {
        let spec = SyntheticSpec {
            other_rate: 0.3,
            ..SyntheticSpec::new(50, 5)
        };
        let set = make_synthetic(&spec, 9).unwrap();
        for (r, e) in set.records.iter().zip(&set.examples) {
            let cls = class_name(r.y);
            assert!(r.c.split(' ').all(|t| t.starts_with(&format!("event_{cls}_")) || t.starts_with("topic_")));
            assert!(r.r.contains(&format!("says_{}", r.y_llm.as_str())));
            assert_eq!(e.label, r.y);
            assert_eq!(e.news.len(), 7);
            assert_eq!(e.content.len(), 5);
            assert_eq!(e.rationale.len(), 5);
        }
        let counts = [Split::Train, Split::Val, Split::Test].map(|s| set.split(s).len());
        assert_eq!(counts, [30, 10, 10]);
    }

    #[test]
    fn invalid_probability_is_a_config_error() {
        let spec = SyntheticSpec {
            reliability: 1.5,
            ..SyntheticSpec::new(10, 4)
        };
        assert!(make_synthetic(&spec, 0).unwrap_err().is_config());
    }
}
