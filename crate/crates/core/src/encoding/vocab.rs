use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};
use crate::params::hex_string;

pub const PAD: usize = 0;
pub const UNK: usize = 1;
pub const CLS: usize = 2;
pub const SPECIALS: [&str; 3] = ["[PAD]", "[UNK]", "[CLS]"];

/// Dense token ids. The three specials always occupy ids 0..3.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl TryFrom<Vec<String>> for Vocabulary {
    type Error = Error;

    fn try_from(tokens: Vec<String>) -> Result<Self> {
        if tokens.len() < SPECIALS.len() || tokens[..SPECIALS.len()] != SPECIALS {
            return Err(Error::Format("vocabulary must start with [PAD] [UNK] [CLS]".into()));
        }
        let index: HashMap<String, usize> =
            tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        if index.len() != tokens.len() {
            return Err(Error::Format("vocabulary contains duplicate tokens".into()));
        }
        Ok(Self { tokens, index })
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.tokens
    }
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// SHA-256 of the newline-joined token list.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for t in &self.tokens {
            h.update(t.as_bytes());
            h.update(b"\n");
        }
        hex_string(&h.finalize())
    }
}

/// Keeps the `max_size - 3` most frequent tokens, ties broken
/// lexicographically.
pub fn build_vocab<S: AsRef<str>>(corpus: &[S], max_size: usize) -> Result<Vocabulary> {
    if corpus.is_empty() {
        return Err(Error::arg("cannot build a vocabulary from an empty corpus"));
    }
    let mut counts: HashMap<String, usize> = HashMap::new();
    for text in corpus {
        for tok in normalize_tokens(text.as_ref()) {
            *counts.entry(tok).or_default() += 1;
        }
    }
    let mut ranked: Vec<(String, usize)> = counts
        .into_iter()
        .filter(|(t, _)| !SPECIALS.contains(&t.as_str()))
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let budget = max_size.saturating_sub(SPECIALS.len());
    let tokens: Vec<String> = SPECIALS
        .iter()
        .map(|s| s.to_string())
        .chain(ranked.into_iter().take(budget).map(|(t, _)| t))
        .collect();
    Vocabulary::try_from(tokens)
}

fn is_cjk(c: char) -> bool {
    matches!(c as u32,
        0x3000..=0x303F      // CJK symbols and punctuation
        | 0x3040..=0x30FF    // kana
        | 0x3400..=0x4DBF
        | 0x4E00..=0x9FFF
        | 0xAC00..=0xD7AF    // hangul syllables
        | 0xF900..=0xFAFF
        | 0xFF00..=0xFFEF    // full-width forms
        | 0x20000..=0x2EBEF)
}

/// NFC, lowercase, whitespace split; CJK characters become one token each.
pub fn normalize_tokens(text: &str) -> Vec<String> {
    let norm: String = text.nfc().collect::<String>().to_lowercase();
    let mut out = Vec::new();
    for word in norm.split_whitespace() {
        let mut run = String::new();
        for c in word.chars() {
            if is_cjk(c) {
                if !run.is_empty() {
                    out.push(std::mem::take(&mut run));
                }
                out.push(c.to_string());
            } else {
                run.push(c);
            }
        }
        if !run.is_empty() {
            out.push(run);
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSequence {
    pub ids: Vec<usize>,
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// `[CLS]` followed by the text's tokens, truncated to `max_len` ids in total.
/// Text that normalizes to nothing yields `[CLS]` alone.
pub fn tokenize(text: &str, vocab: &Vocabulary, max_len: usize) -> Result<TokenSequence> {
    if max_len == 0 {
        return Err(Error::arg("max_len must be at least 1"));
    }
    let ids = std::iter::once(CLS)
        .chain(normalize_tokens(text).iter().map(|t| vocab.id(t).unwrap_or(UNK)))
        .take(max_len)
        .collect();
    Ok(TokenSequence { ids })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn build_vocab_examples() {
        let v = build_vocab(&["a b", "a"], 10).unwrap();
        assert_eq!(v.tokens(), &["[PAD]", "[UNK]", "[CLS]", "a", "b"]);
        assert_eq!(v.id("[PAD]"), Some(PAD));

        let v = build_vocab(&["a b", "a"], 3).unwrap();
        assert_eq!(v.len(), 3);

        let v = build_vocab(&["y x"], 4).unwrap();
        assert_eq!(v.id("x"), Some(3));
        assert_eq!(v.id("y"), None);

        assert!(matches!(build_vocab::<&str>(&[], 10), Err(Error::Argument(_))));
    }

    #[test]
    fn tokenize_examples() {
        let v = build_vocab(&["hello world"], 10).unwrap();
        let h = v.id("hello").unwrap();
        assert_eq!(tokenize("Hello hello", &v, 16).unwrap().ids, vec![CLS, h, h]);
        assert_eq!(tokenize("zebra", &v, 16).unwrap().ids, vec![CLS, UNK]);
        assert_eq!(tokenize("新闻稿", &v, 16).unwrap().len(), 4);
        assert_eq!(tokenize("   ", &v, 16).unwrap().ids, vec![CLS]);
        assert_eq!(tokenize("hello world hello", &v, 2).unwrap().ids, vec![CLS, h]);
    }

    #[test]
    fn mixed_script_splits_cjk_only() {
        assert_eq!(normalize_tokens("GPT说真的 ok"), vec!["gpt", "说", "真", "的", "ok"]);
    }

    #[test]
    fn serde_round_trip() {
        let v = build_vocab(&["b a c a"], 10).unwrap();
        let json = serde_json::to_string(&v).unwrap();
        let back: Vocabulary = serde_json::from_str(&json).unwrap();
        assert_eq!(back, v);
        assert_eq!(back.hash(), v.hash());
        assert!(serde_json::from_str::<Vocabulary>(r#"["a","b","c"]"#).is_err());
    }

    proptest! {
        #[test]
        fn truncation_yields_prefixes(text in "[a-d ]{0,40}", m in 1usize..12, extra in 0usize..12) {
            let v = build_vocab(&["a b c"], 10).unwrap();
            let short = tokenize(&text, &v, m).unwrap();
            let long = tokenize(&text, &v, m + extra).unwrap();
            prop_assert!(!short.is_empty() && short.len() <= m);
            prop_assert_eq!(&long.ids[..short.len()], &short.ids[..]);
            prop_assert!(long.ids.iter().all(|&id| id < v.len()));
        }
    }
}
