//! Comparing parameter sets of two model variants.

use serde::Serialize;

use crate::params::ParamStore;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ParamDiff {
    pub only_left: Vec<String>,
    pub only_right: Vec<String>,
    pub shape_differs: Vec<String>,
    pub value_differs: Vec<String>,
    pub identical: usize,
}

impl ParamDiff {
    /// Every tensor name that is not bitwise shared by both sides.
    pub fn differing(&self) -> impl Iterator<Item = &str> {
        self.only_left
            .iter()
            .chain(&self.only_right)
            .chain(&self.shape_differs)
            .chain(&self.value_differs)
            .map(String::as_str)
    }
}

/// Tensors are matched by name.
pub fn param_diff(left: &ParamStore, right: &ParamStore) -> ParamDiff {
    let mut d = ParamDiff::default();
    for t in left.tensors() {
        match right.find(&t.name) {
            None => d.only_left.push(t.name.clone()),
            Some(id) => {
                let other = right.get(id);
                if other.shape() != t.value.shape() {
                    d.shape_differs.push(t.name.clone());
                } else if other
                    .as_slice()
                    .iter()
                    .zip(t.value.as_slice())
                    .any(|(a, b)| a.to_bits() != b.to_bits())
                {
                    d.value_differs.push(t.name.clone());
                } else {
                    d.identical += 1;
                }
            }
        }
    }
    for t in right.tensors() {
        if left.find(&t.name).is_none() {
            d.only_right.push(t.name.clone());
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::{ModelConfig, Teacher, Variant};

    fn teacher(variant: Variant) -> Teacher {
        let cfg = ModelConfig {
            d: 8,
            heads: 2,
            variant,
            ..ModelConfig::default()
        };
        Teacher::new(cfg, None, 3759).unwrap()
    }

    #[test]
    fn full_and_wo_usability_differ_only_in_the_usability_path() {
        let d = param_diff(&teacher(Variant::Full).params, &teacher(Variant::WoLlmUsability).params);
        assert!(d.only_right.is_empty());
        assert!(d.shape_differs.is_empty());
        assert!(d.identical > 0);
        for name in d.differing() {
            assert!(
                name.contains("weight_mapper") || name.contains("supervision"),
                "{name} differs between full and wo_llm_usability"
            );
        }
    }

    #[test]
    fn same_variant_same_seed_is_identical() {
        let d = param_diff(&teacher(Variant::WoNews).params, &teacher(Variant::WoNews).params);
        assert_eq!(d.differing().count(), 0);
    }
}
