use serde::{Deserialize, Serialize};

use crate::datapipe::record::LlmJudgment;
use crate::error::{Error, Result};
use crate::fusion::Variant;
use crate::nn::loss::{bce, cross_entropy};

/// Per-step values of the three objective terms and their weighted sum.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub l_cls: f64,
    pub l_usability: f64,
    pub l_text: f64,
    pub l_total: f64,
}

impl LossBreakdown {
    pub fn new(l_cls: f64, l_usability: f64, l_text: f64, weights: LossWeights) -> Result<Self> {
        Ok(Self {
            l_cls,
            l_usability,
            l_text,
            l_total: loss_total(l_cls, l_usability, l_text, weights.alpha, weights.beta)?,
        })
    }

    /// Elementwise mean.
    pub fn mean(items: &[LossBreakdown]) -> LossBreakdown {
        let k = 1.0 / items.len().max(1) as f64;
        let mut out = LossBreakdown::default();
        for b in items {
            out.l_cls += b.l_cls;
            out.l_usability += b.l_usability;
            out.l_text += b.l_text;
            out.l_total += b.l_total;
        }
        LossBreakdown {
            l_cls: out.l_cls * k,
            l_usability: out.l_usability * k,
            l_text: out.l_text * k,
            l_total: out.l_total * k,
        }
    }
}

/// α weights the usability term, β the auxiliary text term.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub alpha: f64,
    pub beta: f64,
}

impl LossWeights {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("beta", beta)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(format!("{name} must be a finite value >= 0, got {v}")));
            }
        }
        Ok(Self { alpha, beta })
    }

    /// Weights actually applied under an ablation: single-stream variants
    /// train on `L_cls` alone and `wo_llm_usability` drops the usability term.
    pub fn effective(self, variant: Variant) -> Self {
        if variant.single_stream().is_some() {
            Self { alpha: 0.0, beta: 0.0 }
        } else if !variant.learns_usability() {
            Self { alpha: 0.0, ..self }
        } else {
            self
        }
    }
}

pub fn loss_cls(y_hat: f64, y: u8) -> Result<f64> {
    bce(y_hat, label_target(y)?)
}

/// `BCE(ŵ₁, 0) + BCE(ŵ₂, target(y_llm))`.
pub fn loss_usability(w_hat: [f64; 2], judgment: LlmJudgment) -> Result<f64> {
    Ok(bce(w_hat[0], 0.0)? + bce(w_hat[1], judgment.binary_target())?)
}

/// `CE(C logits, y) + CE(R logits, y_llm)` with 2 and 3 logits.
pub fn loss_text(c_logits: &[f64], r_logits: &[f64], y: u8, judgment: LlmJudgment) -> Result<f64> {
    if c_logits.len() != 2 || r_logits.len() != 3 {
        return Err(Error::shape(format!(
            "expected 2 content logits and 3 rationale logits, got {} and {}",
            c_logits.len(),
            r_logits.len()
        )));
    }
    label_target(y)?;
    Ok(cross_entropy(c_logits, y as usize)? + cross_entropy(r_logits, judgment.class_index())?)
}

/// `l_cls + α·l_usability/2 + β·l_text/2`.
pub fn loss_total(l_cls: f64, l_usability: f64, l_text: f64, alpha: f64, beta: f64) -> Result<f64> {
    LossWeights::new(alpha, beta)?;
    Ok(l_cls + alpha * l_usability / 2.0 + beta * l_text / 2.0)
}

fn label_target(y: u8) -> Result<f64> {
    match y {
        0 => Ok(0.0),
        1 => Ok(1.0),
        _ => Err(Error::arg(format!("label {y} is not 0 or 1"))),
    }
}
