use criterion::{black_box, criterion_group, criterion_main, Criterion};
use factguard::datapipe::{gate, shannon_entropy, GateThresholds, HashedEncoder, Lang, TextEmbedder};
use factguard_bench::news_text;

fn entropy(c: &mut Criterion) {
    let text = news_text(400);
    c.bench_function("shannon_entropy_400_words", |b| b.iter(|| shannon_entropy(black_box(&text)).unwrap()));
}

fn embed_and_gate(c: &mut Criterion) {
    let news = news_text(200);
    let extracted = news_text(60);
    let enc = HashedEncoder::new(256);
    c.bench_function("hashed_embed_200_words", |b| b.iter(|| enc.embed(black_box(&news)).unwrap()));
    let t = GateThresholds::default();
    c.bench_function("gate_200_vs_60_words", |b| {
        b.iter(|| gate(black_box(&news), black_box(&extracted), Lang::En, &t, &enc, 1).unwrap())
    });
}

criterion_group!(benches, entropy, embed_and_gate);
criterion_main!(benches);
