use crate::autograd::{Tape, Var};
use crate::error::Result;
use crate::fusion::{Example, FactGuard, ForwardVars};
use crate::params::ParamStore;
use crate::training::aux::AuxClassifiers;
use crate::training::losses::{LossBreakdown, LossWeights};

/// Tape handles of one sample's objective.
#[derive(Clone, Debug)]
pub struct ObjectiveVars {
    pub total: Var,
    pub l_cls: Var,
    pub l_usability: Option<Var>,
    pub l_text: Option<Var>,
    pub forward: ForwardVars,
    pub breakdown: LossBreakdown,
}

/// Records `L_cls + α·L_usability/2 + β·L_text/2` for one example.
///
/// `weights` are reduced per variant (see [`LossWeights::effective`]). Terms a
/// variant cannot form are reported as zero.
pub fn objective(
    tape: &mut Tape,
    model: &FactGuard,
    aux: &AuxClassifiers,
    store: &ParamStore,
    ex: &Example,
    weights: LossWeights,
) -> Result<ObjectiveVars> {
    let weights = weights.effective(model.variant());
    let fwd = model.forward(tape, store, ex)?;
    let l_cls = tape.bce(fwd.y_hat, f64::from(ex.label))?;

    let l_usability = if fwd.w_hat.len() == 2 {
        let a = tape.bce(fwd.w_hat[0], 0.0)?;
        let b = tape.bce(fwd.w_hat[1], ex.judgment.binary_target())?;
        Some(tape.lincomb(&[(a, 1.0), (b, 1.0)])?)
    } else {
        None
    };

    let mut text_terms = Vec::new();
    if let (Some(head), Some(c)) = (&aux.content, fwd.content) {
        let logits = head.logits(tape, store, c)?;
        text_terms.push((tape.cross_entropy(logits, usize::from(ex.label))?, 1.0));
    }
    if let (Some(head), Some(r)) = (&aux.rationale, fwd.rationale) {
        let logits = head.logits(tape, store, r)?;
        text_terms.push((tape.cross_entropy(logits, ex.judgment.class_index())?, 1.0));
    }
    let l_text = if text_terms.is_empty() {
        None
    } else {
        Some(tape.lincomb(&text_terms)?)
    };

    let mut terms = vec![(l_cls, 1.0)];
    if let Some(u) = l_usability {
        terms.push((u, weights.alpha / 2.0));
    }
    if let Some(t) = l_text {
        terms.push((t, weights.beta / 2.0));
    }
    let total = tape.lincomb(&terms)?;
    let value = |v: Option<Var>| v.map_or(0.0, |v| tape.scalar(v));
    let breakdown = LossBreakdown::new(tape.scalar(l_cls), value(l_usability), value(l_text), weights)?;
    Ok(ObjectiveVars {
        total,
        l_cls,
        l_usability,
        l_text,
        forward: fwd,
        breakdown,
    })
}
