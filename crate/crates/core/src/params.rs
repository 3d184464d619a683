//! Named parameter tensors shared by every model in the crate.
//!
//! Models are thin handles holding [`ParamId`]s; the values live here so that
//! checkpointing, hashing, optimizer state and finite-difference perturbation
//! all work over one flat, ordered list.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::tensor::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub value: Matrix,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamStore {
    tensors: Vec<NamedTensor>,
}

/// How a freshly registered tensor is filled.
#[derive(Clone, Copy, Debug)]
pub enum Init {
    Zeros,
    Ones,
    /// `U(-a, a)` with `a = sqrt(6 / (fan_in + fan_out))`, fans taken from the
    /// tensor's `[rows×cols]` shape.
    Xavier,
    /// `U(-a, a)` with the given bound.
    Uniform(f64),
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(
        &mut self,
        name: impl Into<String>,
        rows: usize,
        cols: usize,
        init: Init,
        rng: &mut ChaCha8Rng,
    ) -> ParamId {
        let mut value = Matrix::zeros(rows, cols);
        match init {
            Init::Zeros => {}
            Init::Ones => value.as_mut_slice().fill(1.0),
            Init::Xavier => {
                let a = (6.0 / (rows + cols) as f64).sqrt();
                fill_uniform(&mut value, a, rng);
            }
            Init::Uniform(a) => fill_uniform(&mut value, a, rng),
        }
        self.insert(name, value)
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Matrix) -> ParamId {
        let name = name.into();
        debug_assert!(
            self.find(&name).is_none(),
            "duplicate parameter name {name}"
        );
        self.tensors.push(NamedTensor { name, value });
        ParamId(self.tensors.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    /// Total number of scalar entries.
    pub fn num_scalars(&self) -> usize {
        self.tensors.iter().map(|t| t.value.len()).sum()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.tensors.len()).map(ParamId)
    }

    pub fn get(&self, id: ParamId) -> &Matrix {
        &self.tensors[id.0].value
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Matrix {
        &mut self.tensors[id.0].value
    }

    pub fn set(&mut self, id: ParamId, value: Matrix) -> Result<()> {
        let slot = &mut self.tensors[id.0];
        if slot.value.shape() != value.shape() {
            return Err(Error::shape(format!(
                "parameter {} is {:?}, got {:?}",
                slot.name,
                slot.value.shape(),
                value.shape()
            )));
        }
        slot.value = value;
        Ok(())
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.tensors[id.0].name
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.tensors.iter().position(|t| t.name == name).map(ParamId)
    }

    pub fn tensors(&self) -> &[NamedTensor] {
        &self.tensors
    }

    /// Ids whose name starts with `prefix`.
    pub fn ids_with_prefix<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = ParamId> + 'a {
        self.tensors
            .iter()
            .enumerate()
            .filter(move |(_, t)| t.name.starts_with(prefix))
            .map(|(i, _)| ParamId(i))
    }

    /// SHA-256 over names, shapes and little-endian values of the selected
    /// tensors, in store order.
    pub fn fingerprint(&self, ids: impl IntoIterator<Item = ParamId>) -> String {
        let mut hasher = Sha256::new();
        for id in ids {
            let t = &self.tensors[id.0];
            hasher.update(t.name.as_bytes());
            hasher.update((t.value.rows() as u64).to_le_bytes());
            hasher.update((t.value.cols() as u64).to_le_bytes());
            for v in t.value.as_slice() {
                hasher.update(v.to_le_bytes());
            }
        }
        hex_string(&hasher.finalize())
    }

    pub fn fingerprint_all(&self) -> String {
        self.fingerprint(self.ids())
    }

    /// Rounds every value through `f32`.
    pub fn round_to_f32(&mut self) {
        for t in &mut self.tensors {
            for v in t.value.as_mut_slice() {
                *v = *v as f32 as f64;
            }
        }
    }
}

fn fill_uniform(m: &mut Matrix, a: f64, rng: &mut ChaCha8Rng) {
    for v in m.as_mut_slice() {
        *v = rng.gen_range(-a..a);
    }
}

pub(crate) fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
