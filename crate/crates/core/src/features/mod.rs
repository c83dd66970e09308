//! Feature maps and memory encodings: lexical (one word per slot), window
//! (b words around each candidate mention) and sentential (one sentence per
//! slot, position-weighted).

mod vocab;

pub use vocab::{placeholder, Vocab, NIL, NUM_PLACEHOLDERS, UNK};

use crate::cbt::{Question, BLANK};

/// Per-feature weight. `Pe` is resolved per embedding coordinate at
/// embedding time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Weight {
    Scalar(f64),
    Pe { j: usize, len: usize },
}

impl Weight {
    /// Weight on embedding coordinate `k` (0-based) of a `p`-dimensional
    /// embedding.
    #[inline]
    pub fn at(&self, k: usize, p: usize) -> f64 {
        match *self {
            Weight::Scalar(w) => w,
            Weight::Pe { j, len } => pe_factor(k + 1, j, len, p),
        }
    }
}

/// Position-encoding factor `l_kj = (1 - j/J) - (k/p)(1 - 2j/J)` for
/// 1-based coordinate `k` and word position `j` in a sentence of length `J`.
pub fn pe_factor(k: usize, j: usize, len: usize, p: usize) -> f64 {
    let jj = j as f64 / len as f64;
    (1.0 - jj) - (k as f64 / p as f64) * (1.0 - 2.0 * jj)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Feature {
    pub index: usize,
    pub weight: Weight,
}

impl Feature {
    pub fn one(index: usize) -> Self {
        Feature {
            index,
            weight: Weight::Scalar(1.0),
        }
    }
}

/// A sparse input vector.
pub type Features = Vec<Feature>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    BagOfWords,
    PerPosition(usize),
    PositionalEncoding,
}

impl FeatureKind {
    pub fn dim(self, d: usize) -> usize {
        match self {
            FeatureKind::PerPosition(b) => b * d,
            _ => d,
        }
    }

    pub fn name(self) -> String {
        match self {
            FeatureKind::BagOfWords => "bag_of_words".into(),
            FeatureKind::PerPosition(b) => format!("per_position({b})"),
            FeatureKind::PositionalEncoding => "positional_encoding".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SlotMeta {
    /// Centre word for windows, the word itself for lexical slots, empty
    /// for sentences.
    pub word: String,
    /// Index into the question's candidate list when the centre word is a
    /// candidate.
    pub candidate: Option<usize>,
    /// Offset in the flattened context (or sentence index for sentences).
    pub location: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MemorySlots {
    pub slots: Vec<Features>,
    pub meta: Vec<SlotMeta>,
}

impl MemorySlots {
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// 1-based slot positions.
    pub fn positions(&self) -> impl Iterator<Item = usize> {
        1..=self.slots.len()
    }

    pub fn slots_of_candidate(&self, c: usize) -> impl Iterator<Item = usize> + '_ {
        self.meta
            .iter()
            .enumerate()
            .filter(move |(_, m)| m.candidate == Some(c))
            .map(|(i, _)| i)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum QueryEncoding {
    Features(Features),
    /// Every embedding coordinate set to this value.
    Constant(f64),
}

/// Query value used by the lexical format.
pub const LEXICAL_QUERY_CONSTANT: f64 = 0.1;

fn candidate_lookup(q: &Question) -> Vec<String> {
    q.candidates.iter().map(|c| c.to_lowercase()).collect()
}

fn candidate_of(cands: &[String], lower: &str) -> Option<usize> {
    cands.iter().position(|c| c == lower)
}

/// The last `n_max` words before the blank, in reading order, drawn from the
/// context and then the query.
pub fn preceding_words(q: &Question, n_max: usize) -> Vec<String> {
    let blank = q.blank_position().unwrap_or(q.query.len());
    let all: Vec<&String> = q.context_tokens().chain(&q.query[..blank]).collect();
    let start = all.len().saturating_sub(n_max);
    all[start..].iter().map(|w| w.to_lowercase()).collect()
}

/// Lexical memory over an explicit word sequence (used for the continuation
/// words of lexical scoring as well).
pub fn encode_lexical_words(words: &[String], vocab: &Vocab, cands: &[String]) -> MemorySlots {
    let mut mem = MemorySlots::default();
    for (i, w) in words.iter().enumerate() {
        mem.slots.push(vec![Feature::one(vocab.id(w))]);
        mem.meta.push(SlotMeta {
            word: w.clone(),
            candidate: candidate_of(cands, w),
            location: i,
        });
    }
    mem
}

pub fn encode_lexical(q: &Question, n_max: usize, vocab: &Vocab) -> (MemorySlots, QueryEncoding) {
    let words = preceding_words(q, n_max);
    (
        encode_lexical_words(&words, vocab, &candidate_lookup(q)),
        QueryEncoding::Constant(LEXICAL_QUERY_CONSTANT),
    )
}

/// Window features for `tokens[centre - h ..= centre + h]`, NIL outside
/// the sequence. `skip_centre` drops the centre position.
fn window_features(
    tokens: &[String],
    centre: usize,
    b: usize,
    vocab: &Vocab,
    kind: FeatureKind,
    skip_centre: bool,
) -> Features {
    let h = (b - 1) / 2;
    let d = vocab.len();
    (0..b)
        .filter(|&j| !(skip_centre && j == h))
        .map(|j| {
            let pos = centre as isize + j as isize - h as isize;
            let id = if pos < 0 || pos as usize >= tokens.len() {
                NIL
            } else {
                vocab.id(&tokens[pos as usize])
            };
            match kind {
                FeatureKind::PerPosition(_) => Feature::one(j * d + id),
                _ => Feature::one(id),
            }
        })
        .collect()
}

/// Which windows to store.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowSet {
    /// One window per candidate mention.
    Candidates,
    /// One window per context token.
    All,
}

/// Window memory: one slot per mention of a candidate in the flattened
/// context, features by per-position dictionary (`kind =
/// PerPosition(b)`) or bag of words. The query is the same map applied to
/// the window centred on the blank.
pub fn encode_windows(
    q: &Question,
    b: usize,
    vocab: &Vocab,
    kind: FeatureKind,
    set: WindowSet,
) -> (MemorySlots, QueryEncoding) {
    assert!(b % 2 == 1, "window size must be odd");
    let cands = candidate_lookup(q);
    let ctx: Vec<String> = q.context_tokens().map(|t| t.to_lowercase()).collect();
    let mut mem = MemorySlots::default();
    for (i, w) in ctx.iter().enumerate() {
        let candidate = candidate_of(&cands, w);
        if candidate.is_none() && set == WindowSet::Candidates {
            continue;
        }
        mem.slots.push(window_features(&ctx, i, b, vocab, kind, false));
        mem.meta.push(SlotMeta {
            word: w.clone(),
            candidate,
            location: i,
        });
    }
    let query: Vec<String> = q.query.iter().map(|t| t.to_lowercase()).collect();
    let blank = q.blank_position().unwrap_or(0);
    let qf = window_features(&query, blank, b, vocab, kind, false);
    (mem, QueryEncoding::Features(qf))
}

/// Sentential memory: 20 slots, each word weighted by its position factor;
/// the query is the position-weighted bag of the whole query sentence.
pub fn encode_sentential(q: &Question, vocab: &Vocab) -> (MemorySlots, QueryEncoding) {
    let pe = |s: &[String]| -> Features {
        let len = s.len();
        s.iter()
            .enumerate()
            .map(|(j, w)| Feature {
                index: vocab.id(w),
                weight: Weight::Pe { j: j + 1, len },
            })
            .collect()
    };
    let mut mem = MemorySlots::default();
    for (i, s) in q.context.iter().enumerate() {
        mem.slots.push(pe(s));
        mem.meta.push(SlotMeta {
            word: String::new(),
            candidate: None,
            location: i,
        });
    }
    (mem, QueryEncoding::Features(pe(&q.query)))
}

/// Input encodings of the supervised embedding baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputEncoding {
    ContextPlusQuery,
    Query,
    Window(usize),
    WindowPosition(usize),
}

impl InputEncoding {
    pub fn dim(self, d: usize) -> usize {
        match self {
            InputEncoding::WindowPosition(b) => b * d,
            _ => d,
        }
    }

    pub fn name(self) -> String {
        match self {
            InputEncoding::ContextPlusQuery => "context+query".into(),
            InputEncoding::Query => "query".into(),
            InputEncoding::Window(b) => format!("window({b})"),
            InputEncoding::WindowPosition(b) => format!("window+position({b})"),
        }
    }
}

fn bag(words: impl Iterator<Item = String>, vocab: &Vocab) -> Features {
    let blank = BLANK.to_lowercase();
    words.filter(|w| *w != blank).map(|w| Feature::one(vocab.id(&w))).collect()
}

/// Sparse input for an embedding baseline. The blank itself is not a
/// feature.
pub fn encode_input(q: &Question, enc: InputEncoding, vocab: &Vocab) -> Features {
    let query: Vec<String> = q.query.iter().map(|t| t.to_lowercase()).collect();
    let blank = q.blank_position().unwrap_or(0);
    match enc {
        InputEncoding::ContextPlusQuery => bag(
            q.context_tokens().map(|t| t.to_lowercase()).chain(query.iter().cloned()),
            vocab,
        ),
        InputEncoding::Query => bag(query.into_iter(), vocab),
        InputEncoding::Window(b) => {
            window_features(&query, blank, b, vocab, FeatureKind::BagOfWords, true)
        }
        InputEncoding::WindowPosition(b) => {
            window_features(&query, blank, b, vocab, FeatureKind::PerPosition(b), true)
        }
    }
}
