//! Library-level flows the CLI commands are built from.

use factguard::checkpoint::{load_teacher, save_teacher};
use factguard::datapipe::{
    bundle_examples, corpus_vocab, load_dataset, prepare_dataset, save_dataset, split_examples, token_examples,
    HashedEncoder, Lang, PipelineConfig, ProviderChain, RawRecord, RecordStatus, RetryPolicy, ScriptedProvider,
    Split,
};
use factguard::distill::{distill_train, load_student, save_student, DistillConfig, Student};
use factguard::encoding::{EmbeddingBundle, EncoderConfig};
use factguard::evalbench::{make_synthetic, SyntheticSpec};
use factguard::fusion::{ModelConfig, Teacher};
use factguard::training::{predict_all, train, TrainConfig};

fn small_model(d: usize) -> ModelConfig {
    ModelConfig {
        d,
        heads: 2,
        ..ModelConfig::default()
    }
}

#[test]
fn saved_bundle_trains_and_checkpoint_reloads_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let set = make_synthetic(&SyntheticSpec::new(120, 8), 11).unwrap();
    save_dataset(&set.records, dir.path().join("dataset.jsonl")).unwrap();
    set.write_bundle(dir.path().join("enc")).unwrap();

    let (records, report) = load_dataset(dir.path().join("dataset.jsonl")).unwrap();
    assert_eq!(report.duplicates_dropped, 0);
    assert_eq!(records, set.records);
    let bundle = EmbeddingBundle::open(dir.path().join("enc")).unwrap();
    let examples = bundle_examples(&records, &bundle, 8).unwrap();
    assert_eq!(examples, set.examples);

    let tr = split_examples(&records, &examples, Split::Train);
    let val = split_examples(&records, &examples, Split::Val);
    let mut teacher = Teacher::new(small_model(8), None, 4).unwrap();
    let cfg = TrainConfig {
        batch_size: 8,
        max_epochs: 3,
        ..TrainConfig::default()
    };
    let out = train(&mut teacher, &tr, &val, &cfg, |_, _, _| Ok(())).unwrap();
    assert_eq!(out.history.len(), 3);

    let path = dir.path().join("t.fg1");
    save_teacher(&path, &teacher).unwrap();
    let loaded = load_teacher(&path).unwrap();
    assert_eq!(predict_all(&teacher, &examples).unwrap(), predict_all(&loaded, &examples).unwrap());
}

#[test]
fn text_teacher_and_student_run_from_raw_tokens() {
    let dir = tempfile::tempdir().unwrap();
    let set = make_synthetic(&SyntheticSpec::new(80, 8), 5).unwrap();
    let vocab = corpus_vocab(&set.records, 500).unwrap();
    let examples = token_examples(&set.records, &vocab, 12).unwrap();
    let model = ModelConfig {
        encoder: Some(EncoderConfig {
            vocab_size: vocab.len(),
            max_len: 12,
            layers: 1,
        }),
        ..small_model(8)
    };
    let tr = split_examples(&set.records, &examples, Split::Train);
    let val = split_examples(&set.records, &examples, Split::Val);
    let mut teacher = Teacher::new(model, Some(vocab), 6).unwrap();
    let cfg = TrainConfig {
        batch_size: 8,
        max_epochs: 2,
        ..TrainConfig::default()
    };
    train(&mut teacher, &tr, &val, &cfg, |_, _, _| Ok(())).unwrap();
    let before = teacher.params.fingerprint_all();

    let dc = DistillConfig {
        batch_size: 8,
        max_epochs: 2,
        ..DistillConfig::default()
    };
    let mut student = Student::from_teacher(&teacher, 7, false).unwrap();
    distill_train(&mut student, &teacher, &tr, &val, &dc, |_, _, _| Ok(())).unwrap();
    assert_eq!(teacher.params.fingerprint_all(), before);

    let path = dir.path().join("s.fgd1");
    save_student(&path, &student).unwrap();
    let loaded = load_student(&path).unwrap();
    let r = &set.records[0];
    let p = loaded.infer_text(&r.n).unwrap();
    assert_eq!(p, student.predict(&examples[0].news).unwrap());
    assert!((0.0..=1.0).contains(&p));
}

#[test]
fn prepared_records_feed_the_text_path() {
    let raw: Vec<RawRecord> = (0..20)
        .map(|i| RawRecord {
            id: format!("p{i}"),
            n: format!("Residents of village {i} say the new road opened early this week"),
            y: (i % 2) as u8,
            lang: Lang::En,
            split: None,
            timestamp: Some(f64::from(i)),
        })
        .collect();
    let provider = ScriptedProvider::echo();
    let chain = ProviderChain {
        primary: &provider,
        fallback: None,
        retry: RetryPolicy::immediate(1),
    };
    let prepared = prepare_dataset(raw, &PipelineConfig::new(Lang::En), &chain, &HashedEncoder::new(32)).unwrap();
    assert_eq!(prepared.records.len(), 20);
    assert!(prepared.report.iter().all(|r| r.status == RecordStatus::Accepted));
    let train_count = prepared.records.iter().filter(|r| r.split == Split::Train).count();
    assert!(train_count > 0 && train_count < 20);

    let vocab = corpus_vocab(&prepared.records, 200).unwrap();
    let examples = token_examples(&prepared.records, &vocab, 16).unwrap();
    assert!(examples.iter().all(|e| !e.news.is_empty() && !e.content.is_empty() && !e.rationale.is_empty()));
}
