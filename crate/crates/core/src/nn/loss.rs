//! Value-level versions of the differentiable losses on [`Tape`].
//!
//! [`Tape`]: crate::autograd::Tape

use crate::autograd::{bce_value, softmax_in_place};
use crate::error::{Error, Result};

/// Numerically stable softmax (max-subtracted).
pub fn softmax(v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::arg("softmax of an empty vector"));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::arg("softmax of non-finite logits"));
    }
    let mut out = v.to_vec();
    softmax_in_place(&mut out);
    Ok(out)
}

/// Binary cross-entropy with `p` clamped to `[1e-7, 1 - 1e-7]`. Soft targets
/// are allowed.
pub fn bce(p: f64, y: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&y) {
        return Err(Error::arg(format!("BCE target {y} outside [0, 1]")));
    }
    if p.is_nan() {
        return Err(Error::arg("BCE of NaN probability"));
    }
    Ok(bce_value(p, y))
}

/// `-ln softmax(logits)[class]`.
pub fn cross_entropy(logits: &[f64], class: usize) -> Result<f64> {
    if logits.len() < 2 {
        return Err(Error::shape("cross entropy needs at least two logits"));
    }
    if class >= logits.len() {
        return Err(Error::arg(format!(
            "class {class} out of range for {} logits",
            logits.len()
        )));
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = logits.iter().map(|v| (v - max).exp()).sum::<f64>().ln() + max;
    Ok(lse - logits[class])
}

pub fn mse(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::shape(format!(
            "mse of vectors with lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::arg("mse of empty vectors"));
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64)
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn softmax_examples() {
        for p in softmax(&[0.0, 0.0, 0.0]).unwrap() {
            assert_abs_diff_eq!(p, 1.0 / 3.0, epsilon = 1e-15);
        }
        assert_eq!(softmax(&[7.3]).unwrap(), vec![1.0]);
        let p = softmax(&[1f64.ln(), 3f64.ln()]).unwrap();
        assert_abs_diff_eq!(p[0], 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], 0.75, epsilon = 1e-15);
        assert!(matches!(softmax(&[]), Err(Error::Argument(_))));
    }

    #[test]
    fn softmax_survives_large_logits() {
        let p = softmax(&[1000.0, 999.0, -1000.0]).unwrap();
        assert!(p.iter().all(|v| v.is_finite()));
        assert_abs_diff_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn bce_examples() {
        assert_abs_diff_eq!(bce(0.5, 1.0).unwrap(), 2f64.ln(), epsilon = 1e-12);
        assert!(bce(1.0, 1.0).unwrap() < 1e-6);
        assert!(bce(0.0, 0.0).unwrap() < 1e-6);
        let expected = -0.5 * (0.8f64.ln() + 0.2f64.ln());
        assert_abs_diff_eq!(bce(0.8, 0.5).unwrap(), expected, epsilon = 1e-12);
        assert_abs_diff_eq!(bce(0.8, 0.5).unwrap(), 0.9163, epsilon = 1e-4);
        assert!(matches!(bce(0.5, 1.5), Err(Error::Argument(_))));
        assert!(matches!(bce(0.5, -0.1), Err(Error::Argument(_))));
    }

    #[test]
    fn cross_entropy_examples() {
        assert_abs_diff_eq!(cross_entropy(&[0.2, 0.2], 1).unwrap(), 2f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(cross_entropy(&[1.0; 3], 2).unwrap(), 3f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(
            cross_entropy(&[9f64.ln(), 0.0], 0).unwrap(),
            -(0.9f64.ln()),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(cross_entropy(&[9f64.ln(), 0.0], 0).unwrap(), 0.1054, epsilon = 1e-4);
        assert!(matches!(cross_entropy(&[0.0, 0.0], 2), Err(Error::Argument(_))));
    }

    #[test]
    fn mse_examples() {
        assert_eq!(mse(&[0.3, -2.0], &[0.3, -2.0]).unwrap(), 0.0);
        assert_eq!(mse(&[1.0, 1.0], &[0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(mse(&[2.0, 0.0], &[0.0, 2.0]).unwrap(), 4.0);
        assert!(matches!(mse(&[1.0], &[1.0, 2.0]), Err(Error::Shape(_))));
    }

    proptest! {
        #[test]
        fn softmax_is_a_distribution(v in prop::collection::vec(-50.0f64..50.0, 1..40)) {
            let p = softmax(&v).unwrap();
            prop_assert!(p.iter().all(|x| *x >= 0.0 && *x <= 1.0));
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        }

        #[test]
        fn bce_nonnegative_and_minimised_at_target(p in 0.0f64..=1.0, y in 0.0f64..=1.0) {
            let at_p = bce(p, y).unwrap();
            let at_y = bce(y, y).unwrap();
            prop_assert!(at_p >= 0.0);
            prop_assert!(at_y <= at_p + 1e-12);
        }
    }
}
