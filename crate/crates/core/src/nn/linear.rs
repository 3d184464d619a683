use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autograd::{Tape, Var};
use crate::error::{Error, Result};
use crate::params::{Init, ParamId, ParamStore};
use crate::tensor::Matrix;

/// Plain values of an affine map `y = W·x + b`, `W` being `[out×in]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearParams {
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

impl LinearParams {
    pub fn new(weight: Matrix, bias: Vec<f64>) -> Result<Self> {
        if weight.rows() != bias.len() {
            return Err(Error::shape(format!(
                "weight has {} rows but bias has {} entries",
                weight.rows(),
                bias.len()
            )));
        }
        Ok(Self { weight, bias })
    }

    pub fn in_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.rows()
    }
}

/// `weight·x + bias`.
pub fn linear(x: &[f64], p: &LinearParams) -> Result<Vec<f64>> {
    if x.len() != p.in_dim() || p.bias.len() != p.out_dim() {
        return Err(Error::shape(format!(
            "linear {}->{} applied to {} inputs",
            p.in_dim(),
            p.out_dim(),
            x.len()
        )));
    }
    Ok((0..p.out_dim())
        .map(|o| crate::tensor::dot(p.weight.row(o), x) + p.bias[o])
        .collect())
}

/// Affine layer stored in a [`ParamStore`]. Applied row-wise to `[T×in]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Linear {
    pub weight: ParamId,
    pub bias: ParamId,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl Linear {
    /// Xavier-uniform weight, zero bias.
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        in_dim: usize,
        out_dim: usize,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let weight = store.add(format!("{name}.weight"), out_dim, in_dim, Init::Xavier, rng);
        let bias = store.add(format!("{name}.bias"), 1, out_dim, Init::Zeros, rng);
        Self {
            weight,
            bias,
            in_dim,
            out_dim,
        }
    }

    pub fn from_params(store: &mut ParamStore, name: &str, p: &LinearParams) -> Self {
        let weight = store.insert(format!("{name}.weight"), p.weight.clone());
        let bias = store.insert(format!("{name}.bias"), Matrix::row_vector(&p.bias));
        Self {
            weight,
            bias,
            in_dim: p.in_dim(),
            out_dim: p.out_dim(),
        }
    }

    pub fn params(&self, store: &ParamStore) -> LinearParams {
        LinearParams {
            weight: store.get(self.weight).clone(),
            bias: store.get(self.bias).as_slice().to_vec(),
        }
    }

    pub fn param_ids(&self) -> [ParamId; 2] {
        [self.weight, self.bias]
    }

    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, x: Var) -> Result<Var> {
        let cols = tape.shape(x).1;
        if cols != self.in_dim {
            return Err(Error::shape(format!(
                "linear layer expects width {}, got {cols}",
                self.in_dim
            )));
        }
        let w = tape.param(store, self.weight);
        let b = tape.param(store, self.bias);
        let y = tape.matmul_nt(x, w)?;
        tape.add_row(y, b)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Gelu,
    Tanh,
    Identity,
}

impl Activation {
    pub fn apply(self, tape: &mut Tape, x: Var) -> Var {
        match self {
            Activation::Gelu => tape.gelu(x),
            Activation::Tanh => tape.tanh(x),
            Activation::Identity => x,
        }
    }
}

/// Stack of linear layers with `activation` between consecutive layers and
/// nothing after the last.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Linear>,
    pub activation: Activation,
}

impl Mlp {
    /// `dims` lists every width, input first: `[in, h1, ..., out]`.
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        dims: &[usize],
        activation: Activation,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::config("an MLP needs at least one layer"));
        }
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(i, w)| Linear::new(store, &format!("{name}.{i}"), w[0], w[1], rng))
            .collect();
        Ok(Self { layers, activation })
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim
    }

    pub fn last(&self) -> &Linear {
        &self.layers[self.layers.len() - 1]
    }

    pub fn param_ids(&self) -> Vec<ParamId> {
        self.layers.iter().flat_map(Linear::param_ids).collect()
    }

    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, x: Var) -> Result<Var> {
        let mut h = x;
        for (i, layer) in self.layers.iter().enumerate() {
            h = layer.forward(tape, store, h)?;
            if i + 1 < self.layers.len() {
                h = self.activation.apply(tape, h);
            }
        }
        Ok(h)
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;

    use super::*;

    #[test]
    fn linear_examples() {
        let id = LinearParams::new(Matrix::identity(2), vec![0.0, 0.0]).unwrap();
        assert_eq!(linear(&[3.0, -1.0], &id).unwrap(), vec![3.0, -1.0]);

        let zero = LinearParams::new(Matrix::zeros(2, 2), vec![5.0, 5.0]).unwrap();
        assert_eq!(linear(&[0.3, -7.0], &zero).unwrap(), vec![5.0, 5.0]);

        let w = Matrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        let p = LinearParams::new(w, vec![1.0, 0.0]).unwrap();
        assert_eq!(linear(&[1.0, 1.0], &p).unwrap(), vec![4.0, 1.0]);
    }

    #[test]
    fn linear_rejects_dimension_mismatch() {
        let p = LinearParams::new(Matrix::identity(2), vec![0.0, 0.0]).unwrap();
        assert!(matches!(linear(&[1.0, 2.0, 3.0], &p), Err(Error::Shape(_))));
        assert!(LinearParams::new(Matrix::identity(2), vec![0.0]).is_err());
    }

    #[test]
    fn tape_linear_matches_plain_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut store = ParamStore::new();
        let layer = Linear::new(&mut store, "l", 3, 2, &mut rng);
        store.get_mut(layer.bias).as_mut_slice().copy_from_slice(&[0.5, -0.25]);
        let x = [0.2, -0.4, 1.1];
        let mut tape = Tape::new();
        let xv = tape.leaf(Matrix::row_vector(&x));
        let y = layer.forward(&mut tape, &store, xv).unwrap();
        let expected = linear(&x, &layer.params(&store)).unwrap();
        assert_eq!(tape.value(y).as_slice(), expected.as_slice());
    }

    #[test]
    fn mlp_checks_input_width() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut store = ParamStore::new();
        let mlp = Mlp::new(&mut store, "m", &[6, 4, 1], Activation::Gelu, &mut rng).unwrap();
        let mut tape = Tape::new();
        let bad = tape.leaf(Matrix::zeros(1, 4));
        assert!(matches!(mlp.forward(&mut tape, &store, bad), Err(Error::Shape(_))));
        let good = tape.leaf(Matrix::zeros(1, 6));
        let out = mlp.forward(&mut tape, &store, good).unwrap();
        assert_eq!(tape.shape(out), (1, 1));
        assert!(Mlp::new(&mut store, "e", &[3], Activation::Gelu, &mut rng).is_err());
    }
}
