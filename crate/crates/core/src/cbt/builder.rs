use std::collections::{BTreeMap, HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{Question, BLANK, CONTEXT_SENTENCES, NUM_CANDIDATES};
use crate::corpus::{Book, Lexicon, Split, TaggedToken, WordClass};
use crate::error::{Error, Result};
use crate::util::{fnv1a, splitmix64};

#[derive(Debug, Clone)]
pub struct BuilderConfig {
    pub stride: usize,
    pub rng_seed: u64,
    pub require_answer_in_context: bool,
    pub fallback_chain: HashMap<WordClass, Vec<WordClass>>,
    /// Words never used as last-resort distractors.
    pub stopwords: HashSet<String>,
}

impl Default for BuilderConfig {
    fn default() -> Self {
        use WordClass::*;
        let fallback_chain = HashMap::from([
            (NamedEntity, vec![CommonNoun]),
            (CommonNoun, vec![NamedEntity]),
            (Verb, vec![CommonNoun]),
            (Preposition, vec![CommonNoun]),
        ]);
        BuilderConfig {
            stride: 1,
            rng_seed: 0,
            require_answer_in_context: true,
            fallback_chain,
            stopwords: Lexicon::default().stopwords,
        }
    }
}

impl BuilderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.stride == 0 {
            return Err(Error::Config("stride must be >= 1".into()));
        }
        Ok(())
    }
}

/// 21 consecutive sentences of one book.
#[derive(Debug, Clone, Copy)]
pub struct Passage<'a> {
    pub book_id: &'a str,
    pub index: usize,
    pub sentences: &'a [Vec<TaggedToken>],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rejected {
    NoAnswerOfClass,
    InsufficientCandidates,
}

impl std::fmt::Display for Rejected {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Rejected::NoAnswerOfClass => "no answer of class",
            Rejected::InsufficientCandidates => "insufficient candidates",
        })
    }
}

pub type BuildOutcome = std::result::Result<Question, Rejected>;

/// Passages start at sentence 0, stride, 2*stride, ...; books shorter than
/// 21 sentences yield none.
pub fn enumerate_passages(book: &Book, stride: usize) -> Vec<Passage<'_>> {
    let len = CONTEXT_SENTENCES + 1;
    let stride = stride.max(1);
    if book.sentences.len() < len {
        return Vec::new();
    }
    (0..=book.sentences.len() - len)
        .step_by(stride)
        .enumerate()
        .map(|(index, start)| Passage {
            book_id: &book.id,
            index,
            sentences: &book.sentences[start..start + len],
        })
        .collect()
}

/// The RNG used for one (book, passage, class) triple, independent of
/// processing order.
pub fn passage_rng(seed: u64, book_id: &str, passage_index: usize, class: WordClass) -> ChaCha8Rng {
    let mut h = splitmix64(seed ^ fnv1a(book_id.as_bytes()));
    h = splitmix64(h ^ passage_index as u64);
    h = splitmix64(h ^ class as u64);
    ChaCha8Rng::seed_from_u64(h)
}

/// Distinct surfaces (case-insensitively) in first-occurrence order.
fn distinct_words<'a>(tokens: impl Iterator<Item = &'a TaggedToken>) -> Vec<&'a str> {
    let mut seen = HashSet::new();
    tokens
        .filter(|t| seen.insert(t.token.lower.as_str()))
        .map(|t| t.token.surface.as_str())
        .collect()
}

pub fn build_question<R: Rng>(
    passage: &Passage<'_>,
    word_class: WordClass,
    config: &BuilderConfig,
    rng: &mut R,
) -> BuildOutcome {
    let (context, query) = passage.sentences.split_at(CONTEXT_SENTENCES);
    let query = &query[0];
    let context_words: HashSet<&str> = context
        .iter()
        .flatten()
        .map(|t| t.token.surface.as_str())
        .collect();

    let answer_slots: Vec<usize> = query
        .iter()
        .enumerate()
        .filter(|(_, t)| t.class == word_class)
        .filter(|(_, t)| {
            !config.require_answer_in_context || context_words.contains(t.token.surface.as_str())
        })
        .map(|(i, _)| i)
        .collect();
    let &blank = answer_slots.choose(rng).ok_or(Rejected::NoAnswerOfClass)?;
    let answer = query[blank].token.surface.clone();
    let answer_lower = answer.to_lowercase();

    let mut chosen: Vec<String> = Vec::with_capacity(NUM_CANDIDATES);
    let mut taken: HashSet<String> = HashSet::from([answer_lower]);
    let need = NUM_CANDIDATES - 1;

    let mut widen = |pool: Vec<&str>, chosen: &mut Vec<String>, rng: &mut R| {
        let mut pool: Vec<&str> = pool
            .into_iter()
            .filter(|w| !taken.contains(&w.to_lowercase()))
            .collect();
        let missing = need - chosen.len();
        if pool.len() > missing {
            pool = pool.choose_multiple(rng, missing).copied().collect();
        }
        for w in pool {
            taken.insert(w.to_lowercase());
            chosen.push(w.to_string());
        }
    };

    let ctx_tokens = || context.iter().flatten();
    widen(
        distinct_words(ctx_tokens().filter(|t| t.class == word_class)),
        &mut chosen,
        rng,
    );
    if chosen.len() < need {
        for &fallback in config.fallback_chain.get(&word_class).into_iter().flatten() {
            widen(
                distinct_words(ctx_tokens().filter(|t| t.class == fallback)),
                &mut chosen,
                rng,
            );
            if chosen.len() == need {
                break;
            }
        }
    }
    if chosen.len() < need {
        widen(
            distinct_words(ctx_tokens().filter(|t| {
                !t.token.is_punctuation() && !config.stopwords.contains(&t.token.lower)
            })),
            &mut chosen,
            rng,
        );
    }
    if chosen.len() < need {
        return Err(Rejected::InsufficientCandidates);
    }

    chosen.push(answer.clone());
    chosen.sort();
    let surfaces = |s: &Vec<TaggedToken>| s.iter().map(|t| t.token.surface.clone()).collect();
    let mut q: Vec<String> = surfaces(query);
    q[blank] = BLANK.to_string();
    Ok(Question {
        context: context.iter().map(surfaces).collect(),
        query: q,
        candidates: chosen,
        answer,
        word_class,
        book_id: passage.book_id.to_string(),
        passage_index: passage.index,
    })
}

/// Questions and rejection tallies per (split, class).
#[derive(Debug, Default, Clone)]
pub struct Dataset {
    pub questions: BTreeMap<(Split, WordClass), Vec<Question>>,
    pub rejected: BTreeMap<(Split, WordClass, Rejected), usize>,
}

impl Dataset {
    pub fn get(&self, split: Split, class: WordClass) -> &[Question] {
        self.questions
            .get(&(split, class))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn split(&self, split: Split) -> Vec<Question> {
        self.questions
            .iter()
            .filter(|((s, _), _)| *s == split)
            .flat_map(|(_, qs)| qs.iter().cloned())
            .collect()
    }

    pub fn total(&self) -> usize {
        self.questions.values().map(Vec::len).sum()
    }
}

/// Builds questions for every book, passage and requested class. Output is
/// identical regardless of thread count.
pub fn build_dataset(books: &[Book], classes: &[WordClass], config: &BuilderConfig) -> Result<Dataset> {
    config.validate()?;
    let mut ds = Dataset::default();
    for book in books {
        let passages = enumerate_passages(book, config.stride);
        for &class in classes {
            let outcomes: Vec<BuildOutcome> = passages
                .par_iter()
                .map(|p| {
                    let mut rng = passage_rng(config.rng_seed, p.book_id, p.index, class);
                    build_question(p, class, config, &mut rng)
                })
                .collect();
            let bucket = ds.questions.entry((book.split, class)).or_default();
            for o in outcomes {
                match o {
                    Ok(q) => bucket.push(q),
                    Err(r) => *ds.rejected.entry((book.split, class, r)).or_default() += 1,
                }
            }
        }
    }
    Ok(ds)
}
