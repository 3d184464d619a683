//! Central finite-difference verification of tape gradients.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::autograd::{Tape, Var};
use crate::error::{Error, Result};
use crate::params::{ParamId, ParamStore};
use crate::tensor::Matrix;

/// Denominator floor of the relative error.
pub const REL_FLOOR: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradcheckConfig {
    pub epsilon: f64,
    pub tolerance: f64,
}

impl Default for GradcheckConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-3,
            tolerance: 1e-4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Offender {
    pub param: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GradcheckReport {
    pub checked: usize,
    pub failures: usize,
    pub tolerance: f64,
    /// Entry with the largest relative error.
    pub worst: Option<Offender>,
}

impl GradcheckReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    pub fn max_rel_error(&self) -> f64 {
        self.worst.as_ref().map_or(0.0, |w| w.rel_error)
    }

    /// Combines reports of independent checks.
    pub fn merge(mut self, other: GradcheckReport) -> Self {
        self.checked += other.checked;
        self.failures += other.failures;
        self.tolerance = self.tolerance.max(other.tolerance);
        if other.max_rel_error() > self.max_rel_error() || self.worst.is_none() {
            self.worst = other.worst.or(self.worst);
        }
        self
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

/// Analytic gradients of `loss_fn` for the requested parameters. Parameters
/// that never reach the loss get an all-zero gradient.
pub fn analytic_gradients<F>(
    store: &ParamStore,
    ids: &[ParamId],
    loss_fn: &F,
) -> Result<BTreeMap<ParamId, Matrix>>
where
    F: Fn(&ParamStore, &mut Tape) -> Result<Var>,
{
    let mut tape = Tape::new();
    let loss = loss_fn(store, &mut tape)?;
    let grads = tape.backward(loss)?;
    Ok(ids
        .iter()
        .map(|&id| {
            let g = grads.param(id).cloned().unwrap_or_else(|| {
                let (r, c) = store.get(id).shape();
                Matrix::zeros(r, c)
            });
            (id, g)
        })
        .collect())
}

fn eval_loss<F>(store: &ParamStore, loss_fn: &F) -> Result<f64>
where
    F: Fn(&ParamStore, &mut Tape) -> Result<Var>,
{
    let mut tape = Tape::new();
    let loss = loss_fn(store, &mut tape)?;
    let v = tape.scalar(loss);
    if !v.is_finite() {
        return Err(Error::Numeric(format!("non-finite loss {v}")));
    }
    Ok(v)
}

/// Fourth-order central-difference gradient of one parameter tensor,
/// `(−f(x+2ε) + 8f(x+ε) − 8f(x−ε) + f(x−2ε)) / 12ε`. `store` is perturbed in
/// place and restored entry by entry.
pub fn numeric_gradient<F>(store: &mut ParamStore, id: ParamId, loss_fn: &F, epsilon: f64) -> Result<Matrix>
where
    F: Fn(&ParamStore, &mut Tape) -> Result<Var>,
{
    let (rows, cols) = store.get(id).shape();
    let mut out = Matrix::zeros(rows, cols);
    for i in 0..rows * cols {
        let original = store.get(id).as_slice()[i];
        let mut at = |offset: f64| -> Result<f64> {
            store.get_mut(id).as_mut_slice()[i] = original + offset;
            let v = eval_loss(store, loss_fn);
            store.get_mut(id).as_mut_slice()[i] = original;
            v
        };
        let (p2, p1, m1, m2) = (at(2.0 * epsilon)?, at(epsilon)?, at(-epsilon)?, at(-2.0 * epsilon)?);
        out.as_mut_slice()[i] = (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * epsilon);
    }
    Ok(out)
}

/// Compares supplied gradients against central differences of `loss_fn`.
pub fn check_gradients<F>(
    store: &mut ParamStore,
    analytic: &BTreeMap<ParamId, Matrix>,
    loss_fn: &F,
    cfg: GradcheckConfig,
) -> Result<GradcheckReport>
where
    F: Fn(&ParamStore, &mut Tape) -> Result<Var>,
{
    let mut report = GradcheckReport {
        checked: 0,
        failures: 0,
        tolerance: cfg.tolerance,
        worst: None,
    };
    for (&id, grad) in analytic {
        let numeric = numeric_gradient(store, id, loss_fn, cfg.epsilon)?;
        for (i, (&a, &n)) in grad.as_slice().iter().zip(numeric.as_slice()).enumerate() {
            let rel = relative_error(a, n);
            report.checked += 1;
            if rel.is_nan() || rel > cfg.tolerance {
                report.failures += 1;
            }
            if report.worst.as_ref().is_none_or(|w| rel > w.rel_error) {
                report.worst = Some(Offender {
                    param: store.name(id).to_string(),
                    index: i,
                    analytic: a,
                    numeric: n,
                    rel_error: rel,
                });
            }
        }
    }
    Ok(report)
}

/// Analytic gradient plus finite-difference comparison for every entry of
/// `ids`.
pub fn gradcheck<F>(
    store: &mut ParamStore,
    ids: &[ParamId],
    loss_fn: F,
    cfg: GradcheckConfig,
) -> Result<GradcheckReport>
where
    F: Fn(&ParamStore, &mut Tape) -> Result<Var>,
{
    let analytic = analytic_gradients(store, ids, &loss_fn)?;
    check_gradients(store, &analytic, &loss_fn, cfg)
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::nn::linear::Linear;

    fn linear_mse_setup() -> (ParamStore, Linear, Matrix, Matrix) {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut store = ParamStore::new();
        let layer = Linear::new(&mut store, "lin", 4, 3, &mut rng);
        let x = Matrix::from_vec(2, 4, vec![0.1, -0.3, 0.7, 0.2, 0.5, 0.9, -1.1, 0.4]).unwrap();
        let target = Matrix::from_vec(2, 3, vec![0.2, -0.4, 0.6, 1.0, 0.0, -0.5]).unwrap();
        (store, layer, x, target)
    }

    #[test]
    fn linear_mse_passes_tight_tolerance() {
        let (mut store, layer, x, target) = linear_mse_setup();
        let ids = layer.param_ids().to_vec();
        let report = gradcheck(
            &mut store,
            &ids,
            |s, t| {
                let xv = t.leaf(x.clone());
                let y = layer.forward(t, s, xv)?;
                let tv = t.leaf(target.clone());
                t.mse(y, tv)
            },
            GradcheckConfig {
                epsilon: 1e-3,
                tolerance: 1e-6,
            },
        )
        .unwrap();
        assert!(report.passed(), "{report:?}");
        assert_eq!(report.checked, 15);
    }

    #[test]
    fn corrupted_gradient_is_reported() {
        let (mut store, layer, x, target) = linear_mse_setup();
        let loss = |s: &ParamStore, t: &mut Tape| {
            let xv = t.leaf(x.clone());
            let y = layer.forward(t, s, xv)?;
            let tv = t.leaf(target.clone());
            t.mse(y, tv)
        };
        let mut analytic = analytic_gradients(&store, &layer.param_ids(), &loss).unwrap();
        for g in analytic.values_mut() {
            g.scale_in_place(2.0);
        }
        let report = check_gradients(&mut store, &analytic, &loss, GradcheckConfig::default()).unwrap();
        assert!(!report.passed());
        assert!(report.max_rel_error() > 0.4);
    }

    #[test]
    fn non_finite_loss_is_an_error() {
        let mut store = ParamStore::new();
        let id = store.insert("w", Matrix::scalar(1.0));
        let res = gradcheck(
            &mut store,
            &[id],
            |s, t| {
                let w = t.param(s, id);
                Ok(t.scale(w, f64::INFINITY))
            },
            GradcheckConfig::default(),
        );
        assert!(matches!(res, Err(Error::Numeric(_))));
    }
}
