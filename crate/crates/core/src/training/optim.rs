use std::collections::BTreeMap;

use crate::params::{ParamId, ParamStore};
use crate::tensor::Matrix;

/// Adam with decoupled weight decay.
///
/// Each step first decays `θ ← θ·(1 − lr·wd)` and then applies the
/// bias-corrected Adam update. Parameters absent from the gradient map are
/// left untouched, decay included.
#[derive(Clone, Debug)]
pub struct AdamW {
    pub lr: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: i32,
    m: BTreeMap<ParamId, Matrix>,
    v: BTreeMap<ParamId, Matrix>,
}

impl AdamW {
    pub fn new(lr: f64, weight_decay: f64) -> Self {
        Self {
            lr,
            weight_decay,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: BTreeMap::new(),
            v: BTreeMap::new(),
        }
    }

    pub fn steps(&self) -> i32 {
        self.t
    }

    pub fn step(&mut self, store: &mut ParamStore, grads: &BTreeMap<ParamId, Matrix>) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t);
        let bc2 = 1.0 - self.beta2.powi(self.t);
        for (&id, g) in grads {
            let (rows, cols) = g.shape();
            let m = self.m.entry(id).or_insert_with(|| Matrix::zeros(rows, cols));
            let v = self.v.entry(id).or_insert_with(|| Matrix::zeros(rows, cols));
            let theta = store.get_mut(id).as_mut_slice();
            let decay = 1.0 - self.lr * self.weight_decay;
            for (((p, &gi), mi), vi) in theta
                .iter_mut()
                .zip(g.as_slice())
                .zip(m.as_mut_slice())
                .zip(v.as_mut_slice())
            {
                *p *= decay;
                *mi = self.beta1 * *mi + (1.0 - self.beta1) * gi;
                *vi = self.beta2 * *vi + (1.0 - self.beta2) * gi * gi;
                let m_hat = *mi / bc1;
                let v_hat = *vi / bc2;
                *p -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;

    #[test]
    fn first_step_matches_hand_computation() {
        let mut store = ParamStore::new();
        let id = store.insert("w", Matrix::row_vector(&[1.0, -2.0]));
        let mut opt = AdamW::new(0.1, 0.01);
        let grads = BTreeMap::from([(id, Matrix::row_vector(&[0.5, -4.0]))]);
        opt.step(&mut store, &grads);
        // Bias-corrected first step moves each entry by lr·sign(g).
        let got = store.get(id).as_slice();
        assert_abs_diff_eq!(got[0], 1.0 * (1.0 - 0.001) - 0.1 * 0.5 / (0.5 + 1e-8), epsilon = 1e-12);
        assert_abs_diff_eq!(got[1], -2.0 * (1.0 - 0.001) + 0.1 * 4.0 / (4.0 + 1e-8), epsilon = 1e-12);
    }

    #[test]
    fn zero_lr_leaves_parameters_unchanged() {
        let mut store = ParamStore::new();
        let id = store.insert("w", Matrix::row_vector(&[0.3, 0.7]));
        let before = store.clone();
        let mut opt = AdamW::new(0.0, 5e-5);
        opt.step(&mut store, &BTreeMap::from([(id, Matrix::row_vector(&[1.0, 1.0]))]));
        assert_eq!(store, before);
    }

    #[test]
    fn minimises_a_quadratic() {
        let mut store = ParamStore::new();
        let id = store.insert("w", Matrix::row_vector(&[3.0, -1.5]));
        let mut opt = AdamW::new(0.05, 0.0);
        for _ in 0..500 {
            let g = store.get(id).map(|x| 2.0 * (x - 0.25));
            opt.step(&mut store, &BTreeMap::from([(id, g)]));
        }
        for v in store.get(id).as_slice() {
            assert_abs_diff_eq!(*v, 0.25, epsilon = 1e-2);
        }
    }
}
