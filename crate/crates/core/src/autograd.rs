//! Reverse-mode differentiation over [`Matrix`] values.
//!
//! A [`Tape`] records every operation of one forward pass. Each op keeps just
//! enough of its forward state to produce exact vector-Jacobian products, and
//! [`Tape::backward`] replays the records in reverse. One tape per sample per
//! step; tapes are cheap to build and never shared across threads.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{ParamId, ParamStore};
use crate::tensor::Matrix;

/// Clamp applied to probabilities before taking logs in [`Tape::bce`].
pub const PROB_EPS: f64 = 1e-7;

const LAYER_NORM_EPS: f64 = 1e-5;

/// Arithmetic precision of recorded values.
///
/// `F32` rounds every intermediate result through `f32`, which reproduces the
/// storage precision of single-precision training while keeping one code path.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    F64,
    F32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    MatMulNt(Var, Var),
    Transpose(Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddRow(Var, Var),
    Scale(Var, f64),
    ScaleBy(Var, Var),
    Sigmoid(Var),
    Tanh(Var),
    Gelu(Var),
    SoftmaxRows(Var),
    MeanRows(Var),
    HConcat(Vec<Var>),
    SliceCols(Var, usize),
    LayerNorm {
        x: Var,
        gamma: Var,
        beta: Var,
        xhat: Matrix,
        inv_std: Vec<f64>,
    },
    Gather(Var, Vec<usize>),
    Bce {
        p: Var,
        target: f64,
    },
    CrossEntropy {
        logits: Var,
        class: usize,
        probs: Vec<f64>,
    },
    Mse(Var, Var),
    LinComb(Vec<(Var, f64)>),
}

#[derive(Debug)]
struct Node {
    value: Matrix,
    op: Op,
}

#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    params: BTreeMap<ParamId, Var>,
    precision: Precision,
}

/// Gradients of a scalar with respect to every node and parameter of a tape.
#[derive(Debug)]
pub struct Gradients {
    nodes: Vec<Option<Matrix>>,
    params: BTreeMap<ParamId, Var>,
}

impl Gradients {
    /// Gradient w.r.t. a parameter, `None` if the parameter never reached the
    /// loss.
    pub fn param(&self, id: ParamId) -> Option<&Matrix> {
        self.params.get(&id).and_then(|v| self.nodes[v.0].as_ref())
    }

    pub fn wrt(&self, var: Var) -> Option<&Matrix> {
        self.nodes[var.0].as_ref()
    }

    pub fn into_param_map(mut self) -> BTreeMap<ParamId, Matrix> {
        let mut out = BTreeMap::new();
        for (id, var) in &self.params {
            if let Some(g) = self.nodes[var.0].take() {
                out.insert(*id, g);
            }
        }
        out
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_precision(precision: Precision) -> Self {
        Self {
            precision,
            ..Self::default()
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, mut value: Matrix, op: Op) -> Var {
        if self.precision == Precision::F32 {
            for v in value.as_mut_slice() {
                *v = *v as f32 as f64;
            }
        }
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Matrix {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.nodes[v.0].value.shape()
    }

    pub fn scalar(&self, v: Var) -> f64 {
        self.nodes[v.0].value.item()
    }

    /// An input leaf. Gradients are recorded for it like for any node.
    pub fn leaf(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Leaf)
    }

    /// The leaf for a stored parameter; repeated calls return the same node.
    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Var {
        if let Some(v) = self.params.get(&id) {
            return *v;
        }
        let v = self.push(store.get(id).clone(), Op::Leaf);
        self.params.insert(id, v);
        v
    }

    /// Every row-normalised distribution produced by [`Tape::softmax_rows`].
    pub fn softmax_outputs(&self) -> impl Iterator<Item = &Matrix> {
        self.nodes
            .iter()
            .filter(|n| matches!(n.op, Op::SoftmaxRows(_)))
            .map(|n| &n.value)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.value(a).matmul(self.value(b))?;
        Ok(self.push(v, Op::MatMul(a, b)))
    }

    /// `a · bᵀ`.
    pub fn matmul_nt(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.value(a).matmul_nt(self.value(b))?;
        Ok(self.push(v, Op::MatMulNt(a, b)))
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let v = self.value(a).transpose();
        self.push(v, Op::Transpose(a))
    }

    fn same_shape(&self, a: Var, b: Var, what: &str) -> Result<()> {
        if self.shape(a) != self.shape(b) {
            return Err(Error::shape(format!(
                "{what}: {:?} vs {:?}",
                self.shape(a),
                self.shape(b)
            )));
        }
        Ok(())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "add")?;
        let v = self.value(a).zip_map(self.value(b), |x, y| x + y);
        Ok(self.push(v, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "sub")?;
        let v = self.value(a).zip_map(self.value(b), |x, y| x - y);
        Ok(self.push(v, Op::Sub(a, b)))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "mul")?;
        let v = self.value(a).zip_map(self.value(b), |x, y| x * y);
        Ok(self.push(v, Op::Mul(a, b)))
    }

    /// Adds the `[1×n]` row `bias` to every row of `x`.
    pub fn add_row(&mut self, x: Var, bias: Var) -> Result<Var> {
        let (rows, cols) = self.shape(x);
        if self.shape(bias) != (1, cols) {
            return Err(Error::shape(format!(
                "bias {:?} does not broadcast over {rows}x{cols}",
                self.shape(bias)
            )));
        }
        let mut v = self.value(x).clone();
        let b = self.value(bias).as_slice().to_vec();
        for r in 0..rows {
            for (o, bb) in v.row_mut(r).iter_mut().zip(&b) {
                *o += bb;
            }
        }
        Ok(self.push(v, Op::AddRow(x, bias)))
    }

    pub fn scale(&mut self, x: Var, k: f64) -> Var {
        let v = self.value(x).map(|e| e * k);
        self.push(v, Op::Scale(x, k))
    }

    /// Multiplies every entry of `x` by the `[1×1]` value `s`.
    pub fn scale_by(&mut self, x: Var, s: Var) -> Result<Var> {
        if self.shape(s) != (1, 1) {
            return Err(Error::shape("scale_by expects a 1x1 scalar"));
        }
        let k = self.scalar(s);
        let v = self.value(x).map(|e| e * k);
        Ok(self.push(v, Op::ScaleBy(x, s)))
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        let v = self.value(x).map(sigmoid);
        self.push(v, Op::Sigmoid(x))
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        let v = self.value(x).map(f64::tanh);
        self.push(v, Op::Tanh(x))
    }

    /// GELU, tanh approximation.
    pub fn gelu(&mut self, x: Var) -> Var {
        let v = self.value(x).map(gelu);
        self.push(v, Op::Gelu(x))
    }

    /// Softmax over each row, with max subtraction.
    pub fn softmax_rows(&mut self, x: Var) -> Result<Var> {
        let src = self.value(x);
        if src.cols() == 0 {
            return Err(Error::arg("softmax over an empty row"));
        }
        let mut v = src.clone();
        for r in 0..v.rows() {
            softmax_in_place(v.row_mut(r));
        }
        Ok(self.push(v, Op::SoftmaxRows(x)))
    }

    /// Column means: `[T×d] → [1×d]`.
    pub fn mean_rows(&mut self, x: Var) -> Result<Var> {
        let src = self.value(x);
        if src.rows() == 0 {
            return Err(Error::arg("average pooling over zero tokens"));
        }
        let mut v = src.sum_rows();
        v.scale_in_place(1.0 / src.rows() as f64);
        Ok(self.push(v, Op::MeanRows(x)))
    }

    /// Concatenates along columns; all parts must share the row count.
    pub fn hconcat(&mut self, parts: &[Var]) -> Result<Var> {
        let rows = parts
            .first()
            .map(|p| self.shape(*p).0)
            .ok_or_else(|| Error::arg("hconcat of nothing"))?;
        let cols: usize = parts.iter().map(|p| self.shape(*p).1).sum();
        let mut v = Matrix::zeros(rows, cols);
        let mut offset = 0;
        for p in parts {
            let pv = self.value(*p);
            if pv.rows() != rows {
                return Err(Error::shape(format!(
                    "hconcat rows {} vs {rows}",
                    pv.rows()
                )));
            }
            for r in 0..rows {
                v.row_mut(r)[offset..offset + pv.cols()].copy_from_slice(pv.row(r));
            }
            offset += pv.cols();
        }
        Ok(self.push(v, Op::HConcat(parts.to_vec())))
    }

    /// Columns `start..start + len`.
    pub fn slice_cols(&mut self, x: Var, start: usize, len: usize) -> Result<Var> {
        let src = self.value(x);
        if start + len > src.cols() {
            return Err(Error::shape(format!(
                "column slice {start}..{} of {} columns",
                start + len,
                src.cols()
            )));
        }
        let mut v = Matrix::zeros(src.rows(), len);
        for r in 0..src.rows() {
            v.row_mut(r).copy_from_slice(&src.row(r)[start..start + len]);
        }
        Ok(self.push(v, Op::SliceCols(x, start)))
    }

    /// Per-row layer normalisation with `[1×d]` gain and shift.
    pub fn layer_norm(&mut self, x: Var, gamma: Var, beta: Var) -> Result<Var> {
        let (rows, cols) = self.shape(x);
        if self.shape(gamma) != (1, cols) || self.shape(beta) != (1, cols) {
            return Err(Error::shape("layer norm parameters must be [1xd]"));
        }
        let src = self.value(x);
        let g = self.value(gamma).as_slice();
        let b = self.value(beta).as_slice();
        let mut xhat = Matrix::zeros(rows, cols);
        let mut inv_std = Vec::with_capacity(rows);
        let mut out = Matrix::zeros(rows, cols);
        for r in 0..rows {
            let row = src.row(r);
            let mean = row.iter().sum::<f64>() / cols as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / cols as f64;
            let inv = 1.0 / (var + LAYER_NORM_EPS).sqrt();
            inv_std.push(inv);
            for c in 0..cols {
                let h = (row[c] - mean) * inv;
                xhat.set(r, c, h);
                out.set(r, c, g[c] * h + b[c]);
            }
        }
        Ok(self.push(
            out,
            Op::LayerNorm {
                x,
                gamma,
                beta,
                xhat,
                inv_std,
            },
        ))
    }

    /// Rows `ids` of `table`, in order.
    pub fn gather_rows(&mut self, table: Var, ids: &[usize]) -> Result<Var> {
        let t = self.value(table);
        let mut v = Matrix::zeros(ids.len(), t.cols());
        for (i, &id) in ids.iter().enumerate() {
            if id >= t.rows() {
                return Err(Error::arg(format!(
                    "row {id} out of range for table with {} rows",
                    t.rows()
                )));
            }
            v.row_mut(i).copy_from_slice(t.row(id));
        }
        Ok(self.push(v, Op::Gather(table, ids.to_vec())))
    }

    /// Binary cross-entropy of a `[1×1]` probability against a soft target.
    /// The probability is clamped to `[PROB_EPS, 1 - PROB_EPS]`.
    pub fn bce(&mut self, p: Var, target: f64) -> Result<Var> {
        if !(0.0..=1.0).contains(&target) {
            return Err(Error::arg(format!("BCE target {target} outside [0, 1]")));
        }
        if self.shape(p) != (1, 1) {
            return Err(Error::shape("bce expects a 1x1 probability"));
        }
        let v = bce_value(self.scalar(p), target);
        Ok(self.push(Matrix::scalar(v), Op::Bce { p, target }))
    }

    /// `-ln softmax(logits)[class]` for `[1×k]` logits.
    pub fn cross_entropy(&mut self, logits: Var, class: usize) -> Result<Var> {
        let (rows, k) = self.shape(logits);
        if rows != 1 || k < 2 {
            return Err(Error::shape(format!(
                "cross entropy expects [1xk] logits with k >= 2, got {rows}x{k}"
            )));
        }
        if class >= k {
            return Err(Error::arg(format!("class {class} out of range for {k} logits")));
        }
        let mut probs = self.value(logits).as_slice().to_vec();
        let loss = -log_softmax_at(&probs, class);
        softmax_in_place(&mut probs);
        Ok(self.push(
            Matrix::scalar(loss),
            Op::CrossEntropy {
                logits,
                class,
                probs,
            },
        ))
    }

    /// Mean of squared differences over all entries.
    pub fn mse(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "mse")?;
        let av = self.value(a);
        if av.is_empty() {
            return Err(Error::arg("mse of empty vectors"));
        }
        let v = av
            .as_slice()
            .iter()
            .zip(self.value(b).as_slice())
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            / av.len() as f64;
        Ok(self.push(Matrix::scalar(v), Op::Mse(a, b)))
    }

    /// `Σ kᵢ·xᵢ` over same-shaped inputs.
    pub fn lincomb(&mut self, terms: &[(Var, f64)]) -> Result<Var> {
        let (first, _) = terms
            .first()
            .ok_or_else(|| Error::arg("linear combination of nothing"))?;
        let shape = self.shape(*first);
        let mut v = Matrix::zeros(shape.0, shape.1);
        for (x, k) in terms {
            if self.shape(*x) != shape {
                return Err(Error::shape("lincomb terms differ in shape"));
            }
            for (o, e) in v.as_mut_slice().iter_mut().zip(self.value(*x).as_slice()) {
                *o += k * e;
            }
        }
        Ok(self.push(v, Op::LinComb(terms.to_vec())))
    }

    /// Gradients of the `[1×1]` node `loss` w.r.t. everything recorded.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        if self.shape(loss) != (1, 1) {
            return Err(Error::shape("backward needs a scalar loss"));
        }
        if !self.value(loss).is_finite() {
            return Err(Error::Numeric(format!(
                "non-finite loss {}",
                self.scalar(loss)
            )));
        }
        let mut grads: Vec<Option<Matrix>> = Vec::with_capacity(self.nodes.len());
        grads.resize_with(self.nodes.len(), || None);
        grads[loss.0] = Some(Matrix::scalar(1.0));

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            self.propagate(node, &g, &mut grads)?;
            grads[idx] = Some(g);
        }
        Ok(Gradients {
            nodes: grads,
            params: self.params.clone(),
        })
    }

    fn propagate(&self, node: &Node, g: &Matrix, grads: &mut [Option<Matrix>]) -> Result<()> {
        let val = |v: &Var| &self.nodes[v.0].value;
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                accumulate(grads, *a, g.matmul_nt(val(b))?);
                accumulate(grads, *b, val(a).matmul_tn(g)?);
            }
            Op::MatMulNt(a, b) => {
                accumulate(grads, *a, g.matmul(val(b))?);
                accumulate(grads, *b, g.matmul_tn(val(a))?);
            }
            Op::Transpose(a) => accumulate(grads, *a, g.transpose()),
            Op::Add(a, b) => {
                accumulate(grads, *a, g.clone());
                accumulate(grads, *b, g.clone());
            }
            Op::Sub(a, b) => {
                accumulate(grads, *a, g.clone());
                accumulate(grads, *b, g.map(|e| -e));
            }
            Op::Mul(a, b) => {
                accumulate(grads, *a, g.zip_map(val(b), |x, y| x * y));
                accumulate(grads, *b, g.zip_map(val(a), |x, y| x * y));
            }
            Op::AddRow(x, bias) => {
                accumulate(grads, *x, g.clone());
                accumulate(grads, *bias, g.sum_rows());
            }
            Op::Scale(x, k) => accumulate(grads, *x, g.map(|e| e * k)),
            Op::ScaleBy(x, s) => {
                let k = val(s).item();
                accumulate(grads, *x, g.map(|e| e * k));
                let ds: f64 = g
                    .as_slice()
                    .iter()
                    .zip(val(x).as_slice())
                    .map(|(a, b)| a * b)
                    .sum();
                accumulate(grads, *s, Matrix::scalar(ds));
            }
            Op::Sigmoid(x) => {
                accumulate(grads, *x, g.zip_map(&node.value, |d, y| d * y * (1.0 - y)));
            }
            Op::Tanh(x) => {
                accumulate(grads, *x, g.zip_map(&node.value, |d, y| d * (1.0 - y * y)));
            }
            Op::Gelu(x) => {
                accumulate(grads, *x, g.zip_map(val(x), |d, v| d * gelu_grad(v)));
            }
            Op::SoftmaxRows(x) => {
                let y = &node.value;
                let mut dx = Matrix::zeros(y.rows(), y.cols());
                for r in 0..y.rows() {
                    let yr = y.row(r);
                    let gr = g.row(r);
                    let inner: f64 = yr.iter().zip(gr).map(|(a, b)| a * b).sum();
                    for (c, o) in dx.row_mut(r).iter_mut().enumerate() {
                        *o = yr[c] * (gr[c] - inner);
                    }
                }
                accumulate(grads, *x, dx);
            }
            Op::MeanRows(x) => {
                let rows = val(x).rows();
                let mut dx = Matrix::zeros(rows, g.cols());
                let k = 1.0 / rows as f64;
                for r in 0..rows {
                    for (o, d) in dx.row_mut(r).iter_mut().zip(g.as_slice()) {
                        *o = d * k;
                    }
                }
                accumulate(grads, *x, dx);
            }
            Op::HConcat(parts) => {
                let mut offset = 0;
                for p in parts {
                    let cols = val(p).cols();
                    let mut dp = Matrix::zeros(g.rows(), cols);
                    for r in 0..g.rows() {
                        dp.row_mut(r).copy_from_slice(&g.row(r)[offset..offset + cols]);
                    }
                    accumulate(grads, *p, dp);
                    offset += cols;
                }
            }
            Op::SliceCols(x, start) => {
                let (rows, cols) = val(x).shape();
                let mut dx = Matrix::zeros(rows, cols);
                for r in 0..rows {
                    dx.row_mut(r)[*start..*start + g.cols()].copy_from_slice(g.row(r));
                }
                accumulate(grads, *x, dx);
            }
            Op::LayerNorm {
                x,
                gamma,
                beta,
                xhat,
                inv_std,
            } => {
                let (rows, cols) = xhat.shape();
                let gm = val(gamma).as_slice();
                let mut dgamma = Matrix::zeros(1, cols);
                let mut dbeta = Matrix::zeros(1, cols);
                let mut dx = Matrix::zeros(rows, cols);
                let n = cols as f64;
                for r in 0..rows {
                    let gr = g.row(r);
                    let hr = xhat.row(r);
                    let mut sum_dh = 0.0;
                    let mut sum_dh_h = 0.0;
                    for c in 0..cols {
                        dgamma.as_mut_slice()[c] += gr[c] * hr[c];
                        dbeta.as_mut_slice()[c] += gr[c];
                        let dh = gr[c] * gm[c];
                        sum_dh += dh;
                        sum_dh_h += dh * hr[c];
                    }
                    let inv = inv_std[r];
                    for c in 0..cols {
                        let dh = gr[c] * gm[c];
                        dx.set(r, c, inv / n * (n * dh - sum_dh - hr[c] * sum_dh_h));
                    }
                }
                accumulate(grads, *x, dx);
                accumulate(grads, *gamma, dgamma);
                accumulate(grads, *beta, dbeta);
            }
            Op::Gather(table, ids) => {
                let (rows, cols) = val(table).shape();
                let mut dt = Matrix::zeros(rows, cols);
                for (i, &id) in ids.iter().enumerate() {
                    for (o, d) in dt.row_mut(id).iter_mut().zip(g.row(i)) {
                        *o += d;
                    }
                }
                accumulate(grads, *table, dt);
            }
            Op::Bce { p, target } => {
                let pv = val(p).item();
                let d = if !(PROB_EPS..=1.0 - PROB_EPS).contains(&pv) {
                    0.0
                } else {
                    -target / pv + (1.0 - target) / (1.0 - pv)
                };
                accumulate(grads, *p, Matrix::scalar(g.item() * d));
            }
            Op::CrossEntropy {
                logits,
                class,
                probs,
            } => {
                let k = g.item();
                let mut d = Matrix::row_vector(probs);
                d.as_mut_slice()[*class] -= 1.0;
                d.scale_in_place(k);
                accumulate(grads, *logits, d);
            }
            Op::Mse(a, b) => {
                let n = val(a).len() as f64;
                let k = 2.0 * g.item() / n;
                let diff = val(a).zip_map(val(b), |x, y| (x - y) * k);
                accumulate(grads, *b, diff.map(|e| -e));
                accumulate(grads, *a, diff);
            }
            Op::LinComb(terms) => {
                for (x, k) in terms {
                    accumulate(grads, *x, g.map(|e| e * k));
                }
            }
        }
        Ok(())
    }
}

fn accumulate(grads: &mut [Option<Matrix>], v: Var, g: Matrix) {
    match &mut grads[v.0] {
        Some(existing) => existing.add_assign(&g),
        slot @ None => *slot = Some(g),
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
const GELU_A: f64 = 0.044_715;

pub fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + (GELU_C * (x + GELU_A * x * x * x)).tanh())
}

fn gelu_grad(x: f64) -> f64 {
    let t = (GELU_C * (x + GELU_A * x * x * x)).tanh();
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * GELU_A * x * x)
}

pub(crate) fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    for v in row.iter_mut() {
        *v /= total;
    }
}

fn log_softmax_at(logits: &[f64], class: usize) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = logits.iter().map(|v| (v - max).exp()).sum::<f64>().ln() + max;
    logits[class] - lse
}

pub(crate) fn bce_value(p: f64, target: f64) -> f64 {
    let p = p.clamp(PROB_EPS, 1.0 - PROB_EPS);
    -(target * p.ln() + (1.0 - target) * (1.0 - p).ln())
}
