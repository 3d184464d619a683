//! Multi-head cross attention, average pooling and token-level linear
//! attention pooling.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autograd::{Tape, Var};
use crate::error::{Error, Result};
use crate::nn::linear::{Linear, LinearParams};
use crate::params::{ParamId, ParamStore};
use crate::tensor::Matrix;

/// `Concat(head_1..head_h)·W_O` with
/// `head_i = softmax(Q_i K_iᵀ / sqrt(d_k)) V_i` and `Q_i = Q W_i^Q` etc.
///
/// The per-head projections are stored as the column blocks of one `[d×d]`
/// map per role, each with a bias.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiHeadAttention {
    pub query: Linear,
    pub key: Linear,
    pub value: Linear,
    pub output: Linear,
    pub heads: usize,
    pub dim: usize,
}

impl MultiHeadAttention {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        dim: usize,
        heads: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        check_heads(dim, heads)?;
        Ok(Self {
            query: Linear::new(store, &format!("{name}.wq"), dim, dim, rng),
            key: Linear::new(store, &format!("{name}.wk"), dim, dim, rng),
            value: Linear::new(store, &format!("{name}.wv"), dim, dim, rng),
            output: Linear::new(store, &format!("{name}.wo"), dim, dim, rng),
            heads,
            dim,
        })
    }

    pub fn head_dim(&self) -> usize {
        self.dim / self.heads
    }

    pub fn param_ids(&self) -> Vec<ParamId> {
        [&self.query, &self.key, &self.value, &self.output]
            .iter()
            .flat_map(|l| l.param_ids())
            .collect()
    }

    /// Queries `q` `[T_q×d]` attend over keys `k` and values `v` `[T_k×d]`.
    pub fn forward(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        q: Var,
        k: Var,
        v: Var,
    ) -> Result<Var> {
        let (tk, _) = tape.shape(k);
        if tk == 0 || tape.shape(v).0 != tk {
            return Err(Error::arg(format!(
                "attention needs matching non-empty keys and values, got {} and {}",
                tk,
                tape.shape(v).0
            )));
        }
        if tape.shape(q).0 == 0 {
            return Err(Error::arg("attention with no queries"));
        }
        let qp = self.query.forward(tape, store, q)?;
        let kp = self.key.forward(tape, store, k)?;
        let vp = self.value.forward(tape, store, v)?;
        let dk = self.head_dim();
        let scale = 1.0 / (dk as f64).sqrt();
        let mut heads = Vec::with_capacity(self.heads);
        for h in 0..self.heads {
            let qh = tape.slice_cols(qp, h * dk, dk)?;
            let kh = tape.slice_cols(kp, h * dk, dk)?;
            let vh = tape.slice_cols(vp, h * dk, dk)?;
            let scores = tape.matmul_nt(qh, kh)?;
            let scores = tape.scale(scores, scale);
            let weights = tape.softmax_rows(scores)?;
            heads.push(tape.matmul(weights, vh)?);
        }
        let concat = if heads.len() == 1 {
            heads[0]
        } else {
            tape.hconcat(&heads)?
        };
        self.output.forward(tape, store, concat)
    }
}

fn check_heads(dim: usize, heads: usize) -> Result<()> {
    if heads == 0 || !dim.is_multiple_of(heads) {
        return Err(Error::config(format!(
            "hidden size {dim} is not divisible by {heads} heads"
        )));
    }
    Ok(())
}

/// Plain values for [`multi_head_cross_attention`].
#[derive(Clone, Debug, PartialEq)]
pub struct AttentionParams {
    pub query: LinearParams,
    pub key: LinearParams,
    pub value: LinearParams,
    pub output: LinearParams,
    pub heads: usize,
}

impl AttentionParams {
    /// All four projections set to the identity with zero bias.
    pub fn identity(dim: usize, heads: usize) -> Self {
        let id = || LinearParams::new(Matrix::identity(dim), vec![0.0; dim]).unwrap();
        Self {
            query: id(),
            key: id(),
            value: id(),
            output: id(),
            heads,
        }
    }

    fn install(&self, store: &mut ParamStore, name: &str) -> Result<MultiHeadAttention> {
        let dim = self.query.out_dim();
        check_heads(dim, self.heads)?;
        for p in [&self.query, &self.key, &self.value, &self.output] {
            if p.in_dim() != dim || p.out_dim() != dim {
                return Err(Error::shape("attention projections must be square [dxd]"));
            }
        }
        Ok(MultiHeadAttention {
            query: Linear::from_params(store, &format!("{name}.wq"), &self.query),
            key: Linear::from_params(store, &format!("{name}.wk"), &self.key),
            value: Linear::from_params(store, &format!("{name}.wv"), &self.value),
            output: Linear::from_params(store, &format!("{name}.wo"), &self.output),
            heads: self.heads,
            dim,
        })
    }
}

/// Value-level multi-head cross attention.
pub fn multi_head_cross_attention(
    q: &Matrix,
    k: &Matrix,
    v: &Matrix,
    params: &AttentionParams,
) -> Result<Matrix> {
    let mut store = ParamStore::new();
    let attn = params.install(&mut store, "attn")?;
    let mut tape = Tape::new();
    let (qv, kv, vv) = (tape.leaf(q.clone()), tape.leaf(k.clone()), tape.leaf(v.clone()));
    for x in [qv, kv, vv] {
        if tape.shape(x).1 != attn.dim {
            return Err(Error::shape(format!(
                "attention input width {} vs hidden size {}",
                tape.shape(x).1,
                attn.dim
            )));
        }
    }
    let out = attn.forward(&mut tape, &store, qv, kv, vv)?;
    Ok(tape.value(out).clone())
}

/// Column-wise mean of a `[T×d]` token matrix.
pub fn avg_pool(x: &Matrix) -> Result<Vec<f64>> {
    if x.rows() == 0 {
        return Err(Error::arg("average pooling over zero tokens"));
    }
    let mut out = x.sum_rows().into_vec();
    let k = 1.0 / x.rows() as f64;
    for v in &mut out {
        *v *= k;
    }
    Ok(out)
}

/// Token attention pooling `Σ_t softmax(W x_t + b)·x_t` with a `[d→1]` scorer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenAttention {
    pub scorer: Linear,
}

impl TokenAttention {
    pub fn new(store: &mut ParamStore, name: &str, dim: usize, rng: &mut ChaCha8Rng) -> Self {
        Self {
            scorer: Linear::new(store, name, dim, 1, rng),
        }
    }

    pub fn dim(&self) -> usize {
        self.scorer.in_dim
    }

    pub fn param_ids(&self) -> [ParamId; 2] {
        self.scorer.param_ids()
    }

    /// `[T×d] → [1×d]`.
    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, x: Var) -> Result<Var> {
        if tape.shape(x).0 == 0 {
            return Err(Error::arg("token attention over zero tokens"));
        }
        let scores = self.scorer.forward(tape, store, x)?;
        let scores = tape.transpose(scores);
        let weights = tape.softmax_rows(scores)?;
        tape.matmul(weights, x)
    }
}

/// Value-level token attention pooling.
pub fn linear_token_attention(x: &Matrix, p: &LinearParams) -> Result<Vec<f64>> {
    if p.out_dim() != 1 || p.in_dim() != x.cols() {
        return Err(Error::shape(format!(
            "token scorer must be [{}->1], got [{}->{}]",
            x.cols(),
            p.in_dim(),
            p.out_dim()
        )));
    }
    let mut store = ParamStore::new();
    let attn = TokenAttention {
        scorer: Linear::from_params(&mut store, "score", p),
    };
    let mut tape = Tape::new();
    let xv = tape.leaf(x.clone());
    let out = attn.forward(&mut tape, &store, xv)?;
    Ok(tape.value(out).as_slice().to_vec())
}
