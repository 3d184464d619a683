//! Similarity gate on extracted topic content, with an entropy audit.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use unicode_normalization::UnicodeNormalization;

use crate::datapipe::record::Lang;
use crate::encoding::normalize_tokens;
use crate::error::{Error, Result};

pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::arg(format!("vectors of length {} and {}", a.len(), b.len())));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::arg("cosine similarity of a zero vector"));
    }
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// Character-level Shannon entropy in bits per symbol, after NFC.
pub fn shannon_entropy(text: &str) -> Result<f64> {
    let mut counts: BTreeMap<char, usize> = BTreeMap::new();
    let mut total = 0usize;
    for c in text.nfc() {
        *counts.entry(c).or_default() += 1;
        total += 1;
    }
    if total == 0 {
        return Err(Error::arg("entropy of empty text"));
    }
    let n = total as f64;
    let h: f64 = counts
        .values()
        .map(|&k| {
            let p = k as f64 / n;
            -p * p.log2()
        })
        .sum();
    Ok(h.max(0.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateThresholds {
    pub zh: f64,
    pub en: f64,
}

impl Default for GateThresholds {
    fn default() -> Self {
        Self { zh: 0.8, en: 0.9 }
    }
}

impl GateThresholds {
    pub fn for_lang(&self, lang: Lang) -> f64 {
        match lang {
            Lang::Zh => self.zh,
            Lang::En => self.en,
        }
    }

    pub fn accepts(&self, similarity: f64, lang: Lang) -> bool {
        similarity >= self.for_lang(lang)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateReport {
    pub similarity: f64,
    pub threshold: f64,
    pub entropy_original: f64,
    pub entropy_extracted: f64,
    pub attempts: usize,
    pub accepted: bool,
}

/// Fixed-size sentence embedding used to compare news and extraction.
pub trait TextEmbedder: Send + Sync {
    fn embed(&self, text: &str) -> Result<Vec<f64>>;
}

/// Mean of per-token Gaussian vectors seeded by a hash of the token, so the
/// same word maps to the same vector in every run and on every machine.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HashedEncoder {
    pub dim: usize,
}

impl HashedEncoder {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }

    fn token_vector(&self, token: &str) -> Vec<f64> {
        let digest = Sha256::digest(token.as_bytes());
        let mut rng = ChaCha8Rng::from_seed(digest.into());
        (0..self.dim).map(|_| StandardNormal.sample(&mut rng)).collect()
    }
}

impl TextEmbedder for HashedEncoder {
    fn embed(&self, text: &str) -> Result<Vec<f64>> {
        let tokens = normalize_tokens(text);
        if tokens.is_empty() {
            return Err(Error::arg("cannot embed text without tokens"));
        }
        let mut acc = vec![0.0; self.dim];
        for t in &tokens {
            for (a, v) in acc.iter_mut().zip(self.token_vector(t)) {
                *a += v;
            }
        }
        let n = tokens.len() as f64;
        acc.iter_mut().for_each(|a| *a /= n);
        Ok(acc)
    }
}

/// Scores one extraction. `attempts` counts the extraction calls made so far.
pub fn gate(
    news: &str,
    extracted: &str,
    lang: Lang,
    thresholds: &GateThresholds,
    embedder: &dyn TextEmbedder,
    attempts: usize,
) -> Result<GateReport> {
    let entropy_original = shannon_entropy(news)?;
    let threshold = thresholds.for_lang(lang);
    if extracted.trim().is_empty() {
        return Ok(GateReport {
            similarity: -1.0,
            threshold,
            entropy_original,
            entropy_extracted: 0.0,
            attempts,
            accepted: false,
        });
    }
    let similarity = cosine_similarity(&embedder.embed(news)?, &embedder.embed(extracted)?)?;
    Ok(GateReport {
        similarity,
        threshold,
        entropy_original,
        entropy_extracted: shannon_entropy(extracted)?,
        attempts,
        accepted: thresholds.accepts(similarity, lang),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn cosine_examples() {
        assert_abs_diff_eq!(cosine_similarity(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 1.0);
        assert_abs_diff_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_abs_diff_eq!(
            cosine_similarity(&[1.0, 1.0], &[1.0, 0.0]).unwrap(),
            std::f64::consts::FRAC_1_SQRT_2,
            epsilon = 1e-12
        );
        assert!(matches!(cosine_similarity(&[0.0, 0.0], &[1.0, 0.0]), Err(Error::Argument(_))));
        assert!(cosine_similarity(&[1.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn entropy_examples() {
        assert_abs_diff_eq!(shannon_entropy("aaaa").unwrap(), 0.0);
        assert_abs_diff_eq!(shannon_entropy("ab").unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(shannon_entropy("aab").unwrap(), 0.918_295_834_054_489_6, epsilon = 1e-12);
        assert!(matches!(shannon_entropy(""), Err(Error::Argument(_))));
        // Decomposed and precomposed forms count as the same symbol.
        assert_eq!(shannon_entropy("e\u{301}\u{e9}").unwrap(), 0.0);
    }

    #[test]
    fn threshold_examples() {
        let t = GateThresholds::default();
        assert!(t.accepts(0.85, Lang::Zh));
        assert!(!t.accepts(0.85, Lang::En));
        assert!(t.accepts(0.9, Lang::En));
        assert!(t.accepts(0.8, Lang::Zh));
    }

    #[test]
    fn hashed_encoder_tracks_overlap() {
        let e = HashedEncoder::new(64);
        let n = "the river flooded the old town on monday";
        assert_abs_diff_eq!(
            cosine_similarity(&e.embed(n).unwrap(), &e.embed(n).unwrap()).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        let close = cosine_similarity(&e.embed(n).unwrap(), &e.embed("river flooded the old town").unwrap()).unwrap();
        let far = cosine_similarity(&e.embed(n).unwrap(), &e.embed("stock prices rose sharply").unwrap()).unwrap();
        assert!(close > far, "{close} vs {far}");
        assert_eq!(e.embed("x y").unwrap(), HashedEncoder::new(64).embed("x y").unwrap());
    }

    #[test]
    fn empty_extraction_is_rejected() {
        let r = gate("some news", "  ", Lang::Zh, &GateThresholds::default(), &HashedEncoder::new(8), 1).unwrap();
        assert!(!r.accepted);
    }

    fn vector() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-10.0..10.0f64, 1..12)
    }

    proptest! {
        #[test]
        fn entropy_bounded_by_alphabet(s in "[a-e ]{1,40}") {
            let h = shannon_entropy(&s).unwrap();
            let distinct = s.chars().collect::<std::collections::HashSet<_>>().len() as f64;
            prop_assert!(h >= 0.0);
            prop_assert!(h <= distinct.log2() + 1e-12);
        }

        #[test]
        fn uniform_text_reaches_the_bound(k in 1usize..8, reps in 1usize..5) {
            let s: String = (0..k).flat_map(|i| std::iter::repeat_n(char::from(b'a' + i as u8), reps)).collect();
            prop_assert!((shannon_entropy(&s).unwrap() - (k as f64).log2()).abs() < 1e-12);
        }

        #[test]
        fn cosine_symmetric_and_scale_invariant(
            pair in (1usize..10).prop_flat_map(|n| (prop::collection::vec(-10.0..10.0f64, n), prop::collection::vec(-10.0..10.0f64, n))),
            l in 0.01..100.0f64,
            m in 0.01..100.0f64,
        ) {
            let (a, b) = pair;
            prop_assume!(a.iter().any(|&x| x.abs() > 1e-3) && b.iter().any(|&x| x.abs() > 1e-3));
            let s = cosine_similarity(&a, &b).unwrap();
            prop_assert!((s - cosine_similarity(&b, &a).unwrap()).abs() < 1e-12);
            let la: Vec<f64> = a.iter().map(|x| x * l).collect();
            let mb: Vec<f64> = b.iter().map(|x| x * m).collect();
            prop_assert!((s - cosine_similarity(&la, &mb).unwrap()).abs() < 1e-9);
            prop_assert!((-1.0..=1.0).contains(&s));
        }

        #[test]
        fn acceptance_is_a_threshold_rule(s in -1.0..1.0f64, zh in 0.0..1.0f64, en in 0.0..1.0f64) {
            let t = GateThresholds { zh, en };
            prop_assert_eq!(t.accepts(s, Lang::Zh), s >= zh);
            prop_assert_eq!(t.accepts(s, Lang::En), s >= en);
        }

        #[test]
        fn self_similarity_of_vectors(a in vector()) {
            prop_assume!(a.iter().any(|&x| x.abs() > 1e-3));
            prop_assert!((cosine_similarity(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        }
    }
}
