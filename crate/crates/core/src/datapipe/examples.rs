//! Turning dataset records into model inputs.

use crate::datapipe::record::{NewsRecord, Split};
use crate::encoding::{build_vocab, tokenize, EmbeddingBundle, Role, Vocabulary};
use crate::error::Result;
use crate::fusion::{Example, StreamInput};

/// Vocabulary over all three texts of the training records.
pub fn corpus_vocab(records: &[NewsRecord], max_size: usize) -> Result<Vocabulary> {
    let texts: Vec<&str> = records
        .iter()
        .filter(|r| r.split == Split::Train)
        .flat_map(|r| [r.n.as_str(), r.c.as_str(), r.r.as_str()])
        .collect();
    build_vocab(&texts, max_size)
}

pub fn token_examples(records: &[NewsRecord], vocab: &Vocabulary, max_len: usize) -> Result<Vec<Example>> {
    records
        .iter()
        .map(|r| {
            let t = |s: &str| tokenize(s, vocab, max_len).map(|seq| StreamInput::Tokens(seq.ids));
            Ok(Example {
                id: r.id.clone(),
                news: t(&r.n)?,
                content: t(&r.c)?,
                rationale: t(&r.r)?,
                label: r.y,
                judgment: r.y_llm,
            })
        })
        .collect()
}

/// Examples backed by precomputed encodings. Roles missing from the bundle
/// become empty token streams, which only variants that ignore them accept.
pub fn bundle_examples(records: &[NewsRecord], bundle: &EmbeddingBundle, d: usize) -> Result<Vec<Example>> {
    records
        .iter()
        .map(|r| {
            let load = |role: Role| -> Result<StreamInput> {
                if bundle.manifest().roles.contains(&role) {
                    Ok(StreamInput::Encoded(bundle.load(&r.id, role, d)?.matrix))
                } else {
                    Ok(StreamInput::Tokens(Vec::new()))
                }
            };
            Ok(Example {
                id: r.id.clone(),
                news: load(Role::News)?,
                content: load(Role::TopicContent)?,
                rationale: load(Role::Rationale)?,
                label: r.y,
                judgment: r.y_llm,
            })
        })
        .collect()
}

pub fn split_examples(records: &[NewsRecord], examples: &[Example], split: Split) -> Vec<Example> {
    records
        .iter()
        .zip(examples)
        .filter(|(r, _)| r.split == split)
        .map(|(_, e)| e.clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evalbench::{make_synthetic, SyntheticSpec};

    #[test]
    fn tokens_and_bundle_agree_on_ids_and_labels() {
        let set = make_synthetic(&SyntheticSpec::new(20, 4), 2).unwrap();
        let vocab = corpus_vocab(&set.records, 200).unwrap();
        assert!(vocab.id("topic_a").is_some());
        let tok = token_examples(&set.records, &vocab, 16).unwrap();
        assert!(matches!(&tok[0].news, StreamInput::Tokens(ids) if ids.len() == 8));

        let dir = tempfile::tempdir().unwrap();
        set.write_bundle(dir.path()).unwrap();
        let bundle = EmbeddingBundle::open(dir.path()).unwrap();
        let enc = bundle_examples(&set.records, &bundle, 4).unwrap();
        assert_eq!(enc, set.examples);
        assert_eq!(split_examples(&set.records, &enc, Split::Val), set.split(Split::Val));
        assert!(bundle_examples(&set.records, &bundle, 5).unwrap_err().is_config());
    }
}
