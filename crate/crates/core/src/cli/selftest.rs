use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::baselines::{Discounting, EmbeddingModel, KneserNey};
use crate::cbt::{build_dataset, parse_cbt_str, write_cbt_string, BuilderConfig, Question, NUM_CANDIDATES};
use crate::corpus::{Lexicon, SegmentConfig, WordClass};
use crate::error::Result;
use crate::features::{InputEncoding, Vocab};
use crate::memnn::{check_blocks, grad_check, MemN2N, MemN2NShape, MemoryFormat};
use crate::selfsup::{SelfSupLoss, SelfSupMode, SelfSupModel};
use crate::storybook::{generate, to_books, StorybookConfig};

const TOLERANCE: f64 = 1e-5;
/// Finite-difference step. Realistic questions give losses near 25, where a
/// smaller step is dominated by floating-point cancellation.
const STEP: f64 = 1e-4;

/// One named check and its outcome.
pub struct Check {
    pub name: &'static str,
    pub result: std::result::Result<String, String>,
}

fn check(name: &'static str, f: impl FnOnce() -> std::result::Result<String, String>) -> Check {
    Check { name, result: f() }
}

fn sample() -> Result<Vec<Question>> {
    let cfg = StorybookConfig {
        books: 3,
        stories_per_book: 2,
        sentences_per_story: 40,
        ..Default::default()
    };
    let books = to_books(&generate(&cfg)?, &Lexicon::default(), &SegmentConfig::default());
    let ds = build_dataset(&books, &WordClass::QUESTION_CLASSES, &BuilderConfig::default())?;
    Ok(WordClass::QUESTION_CLASSES
        .iter()
        .flat_map(|&c| ds.get(crate::corpus::Split::Train, c).iter().take(25).cloned())
        .collect())
}

fn worst(name: &str, err: f64) -> std::result::Result<String, String> {
    if err < TOLERANCE {
        Ok(format!("{name}: max relative error {err:.2e}"))
    } else {
        Err(format!("{name}: max relative error {err:.2e} exceeds {TOLERANCE:.0e}"))
    }
}

fn memnn_gradients(q: &Question) -> std::result::Result<String, String> {
    let mut msgs = Vec::new();
    for format in [
        MemoryFormat::Lexical { n_max: 200 },
        MemoryFormat::Window { b: 5 },
        MemoryFormat::Sentential,
    ] {
        for hops in [1, 2] {
            let shape = MemN2NShape {
                format,
                p: 4,
                hops,
                relu_half: false,
                use_time: true,
            };
            let mut m = MemN2N::new(shape, Vocab::build([q], 1), 0.5, &mut ChaCha8Rng::seed_from_u64(3));
            m.gamma = 0.05;
            let ex = m.examples(q, false).remove(0);
            msgs.push(worst(&format!("{format:?} hops {hops}"), grad_check(&m, &ex, STEP).max_rel_err)?);
        }
    }
    Ok(msgs.join("; "))
}

fn selfsup_gradients(q: &Question) -> std::result::Result<String, String> {
    let mut msgs = Vec::new();
    for loss in [SelfSupLoss::SoftmaxNll, SelfSupLoss::Margin(10.0)] {
        let m = SelfSupModel::new(
            5,
            4,
            SelfSupMode::CandidateWindows,
            true,
            Vocab::build([q], 1),
            0.5,
            &mut ChaCha8Rng::seed_from_u64(5),
        );
        let g = m.dense_gradient(q, loss);
        let r = check_blocks(&m, &|m: &SelfSupModel| m.loss(q, loss).unwrap_or(0.0), &g, STEP);
        msgs.push(worst(&format!("{loss:?}"), r.max_rel_err)?);
    }
    Ok(msgs.join("; "))
}

fn embedding_gradients(q: &Question) -> std::result::Result<String, String> {
    let mut msgs = Vec::new();
    for enc in [InputEncoding::ContextPlusQuery, InputEncoding::WindowPosition(3)] {
        let m = EmbeddingModel::new(enc, 4, Vocab::build([q], 1), 0.5, &mut ChaCha8Rng::seed_from_u64(1));
        let g = m.dense_gradient(q);
        let r = check_blocks(&m, &|m: &EmbeddingModel| m.loss(q), &g, STEP);
        msgs.push(worst(&format!("{enc:?}"), r.max_rel_err)?);
    }
    Ok(msgs.join("; "))
}

fn builder_invariants(qs: &[Question]) -> std::result::Result<String, String> {
    for (i, q) in qs.iter().enumerate() {
        q.validate().map_err(|e| format!("question {i}: {e}"))?;
        if q.candidates.len() != NUM_CANDIDATES {
            return Err(format!("question {i}: {} candidates", q.candidates.len()));
        }
        if !q.context_tokens().any(|t| *t == q.answer) {
            return Err(format!("question {i}: answer not in context"));
        }
    }
    Ok(format!("{} questions valid", qs.len()))
}

fn round_trip(qs: &[Question]) -> std::result::Result<String, String> {
    for class in WordClass::QUESTION_CLASSES {
        let subset: Vec<Question> = qs.iter().filter(|q| q.word_class == class).cloned().collect();
        let text = write_cbt_string(&subset);
        let back = parse_cbt_str(&text, "selftest", class).map_err(|e| e.to_string())?;
        if back.len() != subset.len() || back.iter().zip(&subset).any(|(a, b)| !a.same_content(b)) {
            return Err(format!("{class} questions changed across write and parse"));
        }
        if write_cbt_string(&back) != text {
            return Err(format!("{class} serialization is not stable"));
        }
    }
    Ok(format!("{} questions round-tripped", qs.len()))
}

fn kn_normalization(qs: &[Question]) -> std::result::Result<String, String> {
    let corpus = crate::baselines::corpus_sentences(qs, 1);
    let mut worst_gap: f64 = 0.0;
    for disc in [Discounting::Modified, Discounting::Fixed(0.75)] {
        let m = KneserNey::train(&corpus, 3, disc).map_err(|e| e.to_string())?;
        let words: Vec<&str> = m.words().collect();
        for s in corpus.iter().take(5) {
            for k in 0..s.len().min(3) {
                let h: Vec<&str> = s[..k].iter().map(String::as_str).collect();
                let total: f64 = words.iter().map(|w| m.prob(&h, w)).sum();
                worst_gap = worst_gap.max((total - 1.0).abs());
            }
        }
    }
    if worst_gap < 1e-9 {
        Ok(format!("largest deviation from 1: {worst_gap:.1e}"))
    } else {
        Err(format!("distribution sums deviate from 1 by {worst_gap:.2e}"))
    }
}

/// Gradient checks and invariant suites on a small generated corpus.
pub fn run_checks() -> Result<Vec<Check>> {
    let qs = sample()?;
    let q = qs
        .iter()
        .find(|q| q.word_class == WordClass::NamedEntity)
        .unwrap_or(&qs[0]);
    Ok(vec![
        check("memnn gradients", || memnn_gradients(q)),
        check("self-supervised gradients", || selfsup_gradients(q)),
        check("embedding gradients", || embedding_gradients(q)),
        check("builder invariants", || builder_invariants(&qs)),
        check("format round trip", || round_trip(&qs)),
        check("kneser-ney normalization", || kn_normalization(&qs)),
    ])
}
