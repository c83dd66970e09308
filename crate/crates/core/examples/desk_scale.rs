//! Builds a synthetic storybook corpus, trains the main model families and
//! prints the per-class validation table.
//!
//! cargo run --release --example desk_scale -- [books] [stories_per_book] [name_pool]

use cbt::baselines::{
    corpus_sentences, embed_train, Discounting, EmbeddingConfig, KneserNey, KneserNeyPredictor, MaxFrequency,
    WordDistance,
};
use cbt::cbt::{build_dataset, BuilderConfig};
use cbt::corpus::{Lexicon, SegmentConfig, Split, WordClass};
use cbt::eval::{ablate, anonymize, predictions, Ablation, dataset_hash, evaluate, render_markdown, EvalReport};
use cbt::features::InputEncoding;
use cbt::memnn::{train, MemN2NShape, MemoryFormat, TrainConfig};
use cbt::predict::Predictor;
use cbt::selfsup::{selfsup_train, SelfSupConfig};
use cbt::storybook::{generate, to_books, StorybookConfig};

fn main() -> anyhow::Result<()> {
    env_logger::init();
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let cfg = StorybookConfig {
        books: args.first().copied().unwrap_or(10),
        stories_per_book: args.get(1).copied().unwrap_or(24),
        name_pool: args.get(2).copied().unwrap_or(60),
        ..Default::default()
    };
    let books = to_books(&generate(&cfg)?, &Lexicon::default(), &SegmentConfig::default());
    let ds = build_dataset(&books, &WordClass::QUESTION_CLASSES, &BuilderConfig::default())?;
    let train_qs = ds.split(Split::Train);
    let valid_qs = ds.split(Split::Valid);
    println!("train {} valid {}", train_qs.len(), valid_qs.len());

    let mut rows = Vec::new();
    let clock = std::time::Instant::now();
    let mut push = |m: &dyn Predictor| {
        let row = evaluate(m, &valid_qs, 0, "-");
        println!(
            "[{:>6.1}s] {}: {:?}",
            clock.elapsed().as_secs_f64(),
            row.model,
            WordClass::QUESTION_CLASSES.map(|c| row.accuracy(c))
        );
        rows.push(row);
    };

    push(&MaxFrequency::context());
    push(&WordDistance { cfg: Default::default() });
    let kn = KneserNey::train(&corpus_sentences(&train_qs, 1), 5, Discounting::Modified)?;
    push(&KneserNeyPredictor { model: &kn, cache_mu: None });

    for enc in [
        InputEncoding::ContextPlusQuery,
        InputEncoding::Query,
        InputEncoding::Window(5),
        InputEncoding::WindowPosition(5),
    ] {
        let (m, _) = embed_train(&train_qs, &valid_qs, &EmbeddingConfig::for_encoding(enc))?;
        push(&m);
    }

    let ne_train = ds.get(Split::Train, WordClass::NamedEntity);
    let ne_valid = ds.get(Split::Valid, WordClass::NamedEntity);
    let shape = MemN2NShape {
        format: MemoryFormat::Window { b: 5 },
        p: 100,
        hops: 1,
        relu_half: false,
        use_time: true,
    };
    let (window, _) = train(ne_train, ne_valid, &TrainConfig::for_shape(shape))?;
    push(&window);
    let (ss, _) = selfsup_train(ne_train, ne_valid, &SelfSupConfig::default())?;
    push(&ss);
    let hard = ablate(&ss, Ablation::HardScoring)?;
    let hard_row = evaluate(&hard, ne_valid, 0, "-");
    println!("hard scoring NE: {:?}", hard_row.accuracy(WordClass::NamedEntity));
    let soft_pred = predictions(&ss, ne_valid, 0);
    let hard_pred = predictions(&hard, ne_valid, 0);
    let (mut soft_only, mut hard_only) = (0, 0);
    for ((q, s), h) in ne_valid.iter().zip(&soft_pred).zip(&hard_pred) {
        let a = q.answer_index();
        soft_only += usize::from(*s == a && *h != a);
        hard_only += usize::from(*h == a && *s != a);
    }
    println!("soft-only correct {soft_only}, hard-only correct {hard_only}");
    let (anon, _) = selfsup_train(&anonymize(ne_train, 1), &[], &SelfSupConfig::default())?;
    let anon_row = evaluate(&anon, &anonymize(ne_valid, 2), 0, "-");
    println!("anonymized self-sup NE: {:?}", anon_row.accuracy(WordClass::NamedEntity));

    let report = EvalReport {
        rows,
        seed: 0,
        dataset_hash: dataset_hash(&valid_qs),
    };
    println!("{}", render_markdown(&[report]));
    Ok(())
}
