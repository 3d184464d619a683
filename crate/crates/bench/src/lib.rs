//! Fixtures shared by the benchmarks.

use factguard::datapipe::Split;
use factguard::evalbench::{make_synthetic, SyntheticSpec};
use factguard::fusion::{Example, ModelConfig, Teacher};

pub const SEED: u64 = 3759;

/// A freshly initialised teacher of width `d` and the training split of a
/// synthetic set of `size` records.
pub fn teacher_fixture(size: usize, d: usize) -> (Teacher, Vec<Example>) {
    let set = make_synthetic(&SyntheticSpec::new(size, d), SEED).expect("synthetic set");
    let model = ModelConfig {
        d,
        heads: 4,
        ..ModelConfig::default()
    };
    let teacher = Teacher::new(model, None, SEED).expect("teacher");
    (teacher, set.split(Split::Train))
}

/// News text of roughly `words` words, for the gate benchmarks.
pub fn news_text(words: usize) -> String {
    (0..words).map(|i| format!("token{}", i % 97)).collect::<Vec<_>>().join(" ")
}
