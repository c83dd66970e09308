//! Interpolated modified Kneser-Ney n-gram model.
//!
//! Persisted format (text, one record per line):
//!
//! ```text
//! kneser-ney 1
//! order <n>
//! discounting modified|fixed <D>
//! vocab <size>
//! <word>                          (size lines, index order)
//! counts <k> <entries>            (k = 1..n)
//! <count>\t<w1> ... <wk>          (sorted by word ids)
//! discount <k> <D1> <D2> <D3+>    (k = 1..n, re-derived and checked on load)
//! end
//! ```
//!
//! Counts at the highest order are raw; lower orders hold continuation
//! counts (distinct left extensions), except n-grams starting with the
//! sentence-start marker, which have no left context and keep raw counts.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use rand::RngCore;
use rayon::prelude::*;

use crate::cbt::{Question, BLANK};
use crate::error::{Error, Result};
use crate::predict::{PredictionScores, Predictor};

pub const START: &str = "<s>";
pub const END: &str = "</s>";
pub const UNK_TOKEN: &str = "<unk>";
const MAX_ORDER: usize = 5;
const ID_BITS: u32 = 24;
const FALLBACK_DISCOUNTS: [f64; 3] = [0.5, 1.0, 1.5];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Discounting {
    /// Three discounts per order from count-of-counts.
    Modified,
    /// One discount for every count (plain interpolated Kneser-Ney).
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct HistStats {
    total: u64,
    n: [u64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct KneserNey {
    order: usize,
    discounting: Discounting,
    words: Vec<String>,
    index: HashMap<String, u32>,
    /// `counts[k - 1]`: packed k-gram -> (continuation) count.
    counts: Vec<HashMap<u128, u64>>,
    hist: Vec<HashMap<u128, HistStats>>,
    discounts: Vec<[f64; 3]>,
}

fn pack(ids: &[u32]) -> u128 {
    ids.iter().fold(0u128, |acc, &i| (acc << ID_BITS) | (i as u128 + 1))
}

fn unpack(mut key: u128, k: usize) -> Vec<u32> {
    let mut out = vec![0; k];
    for slot in out.iter_mut().rev() {
        *slot = (key & ((1 << ID_BITS) - 1)) as u32 - 1;
        key >>= ID_BITS;
    }
    out
}

/// Deduplicated training sentences (lowercased) reconstructed from cloze
/// questions: sentence j of passage i of a book is book sentence
/// `i * stride + j`; the query sentence is restored with its answer.
pub fn corpus_sentences(questions: &[Question], stride: usize) -> Vec<Vec<String>> {
    let mut seen: BTreeMap<(String, usize), Vec<String>> = BTreeMap::new();
    for q in questions {
        let base = q.passage_index * stride.max(1);
        for (j, s) in q.context.iter().enumerate() {
            seen.entry((q.book_id.clone(), base + j))
                .or_insert_with(|| s.iter().map(|w| w.to_lowercase()).collect());
        }
        let filled: Vec<String> = q
            .query
            .iter()
            .map(|w| if w == BLANK { q.answer.to_lowercase() } else { w.to_lowercase() })
            .collect();
        seen.entry((q.book_id.clone(), base + q.context.len())).or_insert(filled);
    }
    seen.into_values().collect()
}

impl KneserNey {
    pub fn order(&self) -> usize {
        self.order
    }

    /// Predictable vocabulary: every word except the start marker.
    pub fn vocab_size(&self) -> usize {
        self.words.len() - 1
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.words.iter().skip(1).map(|s| s.as_str())
    }

    pub fn discounts(&self) -> &[[f64; 3]] {
        &self.discounts
    }

    fn id(&self, w: &str) -> u32 {
        match self.index.get(w) {
            Some(&i) => i,
            None => self
                .index
                .get(&w.to_lowercase())
                .copied()
                .unwrap_or(self.index[UNK_TOKEN]),
        }
    }

    /// Trains on tokenized sentences (lowercased here).
    pub fn train(sentences: &[Vec<String>], order: usize, discounting: Discounting) -> Result<Self> {
        if !(1..=MAX_ORDER).contains(&order) {
            return Err(Error::Config(format!("n-gram order must be 1..={MAX_ORDER}")));
        }
        if let Discounting::Fixed(d) = discounting {
            if !(0.0..=1.0).contains(&d) {
                return Err(Error::Config(format!("fixed discount {d} must be in [0, 1]")));
            }
        }
        if sentences.iter().all(|s| s.is_empty()) {
            return Err(Error::EmptyCorpus);
        }
        let mut vocab: Vec<String> = sentences
            .iter()
            .flatten()
            .map(|w| w.to_lowercase())
            .collect::<HashSet<_>>()
            .into_iter()
            .filter(|w| w != START && w != END && w != UNK_TOKEN)
            .collect();
        vocab.sort();
        let mut words = vec![START.to_string(), END.to_string(), UNK_TOKEN.to_string()];
        words.extend(vocab);
        if words.len() >= (1 << ID_BITS) - 1 {
            return Err(Error::Config("vocabulary too large".into()));
        }
        let index: HashMap<String, u32> =
            words.iter().enumerate().map(|(i, w)| (w.clone(), i as u32)).collect();

        // Raw counts of every order, counted per chunk and merged.
        let raw: Vec<HashMap<u128, u64>> = sentences
            .par_chunks(1024)
            .map(|chunk| {
                let mut local = vec![HashMap::new(); order];
                for s in chunk {
                    let ids: Vec<u32> = std::iter::once(0)
                        .chain(s.iter().map(|w| index[&w.to_lowercase()]))
                        .chain(std::iter::once(1))
                        .collect();
                    for end in 1..ids.len() {
                        for k in 1..=order.min(end + 1) {
                            *local[k - 1].entry(pack(&ids[end + 1 - k..=end])).or_insert(0) += 1;
                        }
                    }
                }
                local
            })
            .reduce(
                || vec![HashMap::new(); order],
                |mut a, b| {
                    for (ma, mb) in a.iter_mut().zip(b) {
                        for (k, v) in mb {
                            *ma.entry(k).or_insert(0) += v;
                        }
                    }
                    a
                },
            );

        let mut counts = Vec::with_capacity(order);
        for k in 1..=order {
            if k == order {
                counts.push(raw[k - 1].clone());
                continue;
            }
            let mut cc: HashMap<u128, u64> = HashMap::new();
            for &key in raw[k].keys() {
                let ids = unpack(key, k + 1);
                *cc.entry(pack(&ids[1..])).or_insert(0) += 1;
            }
            for (&key, &c) in &raw[k - 1] {
                if unpack(key, k)[0] == 0 {
                    cc.insert(key, c);
                }
            }
            counts.push(cc);
        }
        let mut m = KneserNey {
            order,
            discounting,
            words,
            index,
            counts,
            hist: Vec::new(),
            discounts: Vec::new(),
        };
        m.derive();
        Ok(m)
    }

    /// Recomputes discounts and history statistics from the counts.
    fn derive(&mut self) {
        self.discounts = self
            .counts
            .iter()
            .map(|table| match self.discounting {
                Discounting::Fixed(d) => [d; 3],
                Discounting::Modified => modified_discounts(table),
            })
            .collect();
        self.hist = self
            .counts
            .iter()
            .enumerate()
            .map(|(lvl, table)| {
                let k = lvl + 1;
                let mut h: HashMap<u128, HistStats> = HashMap::new();
                for (&key, &c) in table {
                    let ids = unpack(key, k);
                    let st = h.entry(pack(&ids[..k - 1])).or_default();
                    st.total += c;
                    st.n[(c.min(3) - 1) as usize] += 1;
                }
                h
            })
            .collect();
    }

    fn discount(&self, k: usize, c: u64) -> f64 {
        if c == 0 {
            0.0
        } else {
            self.discounts[k - 1][(c.min(3) - 1) as usize]
        }
    }

    fn p_level(&self, ctx: &[u32], w: u32) -> f64 {
        let k = ctx.len() + 1;
        let lower = if k == 1 {
            1.0 / self.vocab_size() as f64
        } else {
            self.p_level(&ctx[1..], w)
        };
        let Some(st) = self.hist[k - 1].get(&pack(ctx)) else {
            return lower;
        };
        let mut key = ctx.to_vec();
        key.push(w);
        let c = self.counts[k - 1].get(&pack(&key)).copied().unwrap_or(0);
        let d = &self.discounts[k - 1];
        let backoff = d[0] * st.n[0] as f64 + d[1] * st.n[1] as f64 + d[2] * st.n[2] as f64;
        ((c as f64 - self.discount(k, c)).max(0.0) + backoff * lower) / st.total as f64
    }

    /// `p(w | history)`; only the last `order - 1` history words matter.
    /// An empty history means the start of a sentence.
    pub fn prob(&self, history: &[&str], w: &str) -> f64 {
        let ids = self.history_ids(history);
        self.p_level(&ids, self.id(w))
    }

    fn history_ids(&self, history: &[&str]) -> Vec<u32> {
        let mut ids: Vec<u32> = std::iter::once(0).chain(history.iter().map(|w| self.id(w))).collect();
        let keep = self.order - 1;
        if ids.len() > keep {
            ids.drain(..ids.len() - keep);
        }
        ids
    }

    /// Per-token probabilities of a sentence followed by the end marker.
    fn token_probs(&self, sentence: &[String]) -> Vec<(u32, f64)> {
        let ids: Vec<u32> = std::iter::once(0)
            .chain(sentence.iter().map(|w| self.id(w)))
            .chain(std::iter::once(1))
            .collect();
        (1..ids.len())
            .map(|i| {
                let lo = i.saturating_sub(self.order - 1);
                (ids[i], self.p_level(&ids[lo..i], ids[i]))
            })
            .collect()
    }

    /// Natural-log probability of a whole sentence including the end marker.
    pub fn score(&self, sentence: &[String]) -> f64 {
        self.token_probs(sentence).iter().map(|(_, p)| p.ln()).sum()
    }

    /// Per-candidate log probability of the query with the candidate in
    /// the blank. With `cache_mu`, each word probability is mixed with the
    /// context unigram frequency: `mu * p_cache + (1 - mu) * p`.
    pub fn candidate_scores(&self, q: &Question, cache_mu: Option<f64>) -> Vec<f64> {
        let blank = q.blank_position().unwrap_or(0);
        let cache: Option<(HashMap<u32, usize>, usize)> = cache_mu.map(|_| {
            let mut c = HashMap::new();
            let mut n = 0;
            for w in q.context_tokens() {
                *c.entry(self.id(w)).or_insert(0) += 1;
                n += 1;
            }
            (c, n)
        });
        q.candidates
            .iter()
            .map(|cand| {
                let mut s: Vec<String> = q.query.clone();
                s[blank] = cand.clone();
                self.token_probs(&s)
                    .into_iter()
                    .map(|(w, p)| {
                        let p = match (&cache, cache_mu) {
                            (Some((c, n)), Some(mu)) => {
                                let pc = c.get(&w).copied().unwrap_or(0) as f64 / (*n).max(1) as f64;
                                mu * pc + (1.0 - mu) * p
                            }
                            _ => p,
                        };
                        p.max(f64::MIN_POSITIVE).ln()
                    })
                    .sum()
            })
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("kneser-ney 1\norder {}\n", self.order);
        match self.discounting {
            Discounting::Modified => out.push_str("discounting modified\n"),
            Discounting::Fixed(d) => {
                let _ = writeln!(out, "discounting fixed {d}");
            }
        }
        let _ = writeln!(out, "vocab {}", self.words.len());
        for w in &self.words {
            let _ = writeln!(out, "{w}");
        }
        for (lvl, table) in self.counts.iter().enumerate() {
            let k = lvl + 1;
            let _ = writeln!(out, "counts {k} {}", table.len());
            let mut rows: Vec<(Vec<u32>, u64)> = table.iter().map(|(&key, &c)| (unpack(key, k), c)).collect();
            rows.sort();
            for (ids, c) in rows {
                let ws: Vec<&str> = ids.iter().map(|&i| self.words[i as usize].as_str()).collect();
                let _ = writeln!(out, "{c}\t{}", ws.join(" "));
            }
        }
        for (lvl, d) in self.discounts.iter().enumerate() {
            let _ = writeln!(out, "discount {} {} {} {}", lvl + 1, d[0], d[1], d[2]);
        }
        out.push_str("end\n");
        out
    }

    pub fn from_text(text: &str, file: &str) -> Result<Self> {
        let all: Vec<&str> = text.lines().collect();
        // Leading `#` lines carry provenance and are skipped.
        let skip = all.iter().take_while(|l| l.starts_with('#')).count();
        let lines = &all[skip..];
        let err = |i: usize, msg: &str| Error::parse(file, skip + i + 1, msg);
        let field = |i: usize, prefix: &str| -> Result<&str> {
            lines
                .get(i)
                .and_then(|l| l.strip_prefix(prefix))
                .ok_or_else(|| err(i, &format!("expected {prefix:?}")))
        };
        if lines.first() != Some(&"kneser-ney 1") {
            return Err(err(0, "not a version-1 Kneser-Ney model"));
        }
        let order: usize = field(1, "order ")?.parse().map_err(|_| err(1, "bad order"))?;
        if !(1..=MAX_ORDER).contains(&order) {
            return Err(err(1, "order out of range"));
        }
        let discounting = match field(2, "discounting ")? {
            "modified" => Discounting::Modified,
            other => match other.strip_prefix("fixed ").and_then(|d| d.parse().ok()) {
                Some(d) => Discounting::Fixed(d),
                None => return Err(err(2, "bad discounting")),
            },
        };
        let n: usize = field(3, "vocab ")?.parse().map_err(|_| err(3, "bad vocabulary size"))?;
        let mut i = 4;
        let words: Vec<String> = lines
            .get(i..i + n)
            .ok_or_else(|| err(i, "truncated vocabulary"))?
            .iter()
            .map(|s| s.to_string())
            .collect();
        if words.get(..3) != Some(&[START.to_string(), END.to_string(), UNK_TOKEN.to_string()][..]) {
            return Err(err(i, "vocabulary must start with the reserved markers"));
        }
        i += n;
        let index: HashMap<String, u32> =
            words.iter().enumerate().map(|(j, w)| (w.clone(), j as u32)).collect();
        let mut counts = Vec::with_capacity(order);
        for k in 1..=order {
            let hdr = field(i, "counts ")?;
            let (kk, entries) = hdr.split_once(' ').ok_or_else(|| err(i, "bad counts header"))?;
            if kk.parse::<usize>().ok() != Some(k) {
                return Err(err(i, "counts out of order"));
            }
            let entries: usize = entries.parse().map_err(|_| err(i, "bad entry count"))?;
            let mut table = HashMap::with_capacity(entries);
            for li in i + 1..i + 1 + entries {
                let line = lines.get(li).ok_or_else(|| err(li, "truncated counts"))?;
                let (c, gram) = line.split_once('\t').ok_or_else(|| err(li, "expected count<TAB>n-gram"))?;
                let c: u64 = c.parse().map_err(|_| err(li, "bad count"))?;
                let ids: Option<Vec<u32>> = gram.split(' ').map(|w| index.get(w).copied()).collect();
                let ids = ids.ok_or_else(|| err(li, "unknown word in n-gram"))?;
                if ids.len() != k {
                    return Err(err(li, "n-gram has the wrong length"));
                }
                table.insert(pack(&ids), c);
            }
            counts.push(table);
            i += 1 + entries;
        }
        let mut m = KneserNey {
            order,
            discounting,
            words,
            index,
            counts,
            hist: Vec::new(),
            discounts: Vec::new(),
        };
        m.derive();
        for k in 1..=order {
            let f: Vec<f64> = field(i, "discount ")?
                .split(' ')
                .skip(1)
                .map(|x| x.parse().map_err(|_| err(i, "bad discount")))
                .collect::<Result<_>>()?;
            let d = m.discounts[k - 1];
            if f.len() != 3 || f.iter().zip(d).any(|(a, b)| (a - b).abs() > 1e-12) {
                return Err(err(i, "stored discounts disagree with the counts"));
            }
            i += 1;
        }
        if lines.get(i) != Some(&"end") {
            return Err(err(i, "missing end marker"));
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        KneserNey::from_text(&text, &path.display().to_string())
    }
}

/// `Y = n1/(n1 + 2 n2)`, `D1 = 1 - 2Y n2/n1`, `D2 = 2 - 3Y n3/n2`,
/// `D3+ = 3 - 4Y n4/n3`, clamped to `[0, i]`; fixed fallback values when a
/// count-of-counts is zero.
fn modified_discounts(table: &HashMap<u128, u64>) -> [f64; 3] {
    let mut n = [0u64; 5];
    for &c in table.values() {
        if (1..=4).contains(&c) {
            n[c as usize] += 1;
        }
    }
    if n[1..].iter().any(|&x| x == 0) {
        return FALLBACK_DISCOUNTS;
    }
    let f = |i: usize| n[i] as f64;
    let y = f(1) / (f(1) + 2.0 * f(2));
    [
        (1.0 - 2.0 * y * f(2) / f(1)).clamp(0.0, 1.0),
        (2.0 - 3.0 * y * f(3) / f(2)).clamp(0.0, 2.0),
        (3.0 - 4.0 * y * f(4) / f(3)).clamp(0.0, 3.0),
    ]
}

/// Kneser-Ney candidate ranking, optionally with the context cache.
pub struct KneserNeyPredictor<'a> {
    pub model: &'a KneserNey,
    pub cache_mu: Option<f64>,
}

impl Predictor for KneserNeyPredictor<'_> {
    fn name(&self) -> String {
        match self.cache_mu {
            Some(mu) => format!("kneser-ney({})+cache(mu={mu})", self.model.order),
            None => format!("kneser-ney({})", self.model.order),
        }
    }

    fn predict(&self, q: &Question, rng: &mut dyn RngCore) -> PredictionScores {
        PredictionScores::from_scores(self.model.candidate_scores(q, self.cache_mu), rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sents(text: &str) -> Vec<Vec<String>> {
        text.split('|')
            .map(|s| s.split_whitespace().map(String::from).collect())
            .collect()
    }

    #[test]
    fn pack_round_trip() {
        let ids = [0, 5, 16_000_000, 3];
        assert_eq!(unpack(pack(&ids), 4), ids);
    }

    #[test]
    fn distributions_are_normalized() {
        let corpus = sents("a b c d e f|b c d a a|g h i j k l|a b c g h|l k j i|c c c a b");
        for order in 1..=4 {
            for disc in [Discounting::Modified, Discounting::Fixed(0.7)] {
                let m = KneserNey::train(&corpus, order, disc).unwrap();
                let words: Vec<&str> = m.words().collect();
                let histories = [vec![], vec!["a"], vec!["a", "b"], vec!["c", "c", "c"], vec!["zz"]];
                for h in &histories {
                    let total: f64 = words.iter().map(|w| m.prob(h, w)).sum();
                    assert!((total - 1.0).abs() < 1e-9, "order {order} {h:?}: {total}");
                }
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(KneserNey::train(&[vec![]], 3, Discounting::Modified), Err(Error::EmptyCorpus)));
        assert!(KneserNey::train(&sents("a"), 6, Discounting::Modified).is_err());
        assert!(KneserNey::train(&sents("a"), 2, Discounting::Fixed(1.5)).is_err());
    }

    #[test]
    fn save_load_is_exact() {
        let corpus = sents("a b c d e f|b c d a a|g h i j k l|a b c g h|l k j i|c c c a b");
        let m = KneserNey::train(&corpus, 3, Discounting::Modified).unwrap();
        let back = KneserNey::from_text(&m.to_text(), "kn").unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_text(), m.to_text());
        let text = m.to_text();
        let line = text.lines().find(|l| l.starts_with("discount 3 ")).unwrap();
        let tampered = text.replacen(line, "discount 3 0.1 0.2 0.3", 1);
        assert!(KneserNey::from_text(&tampered, "kn").is_err());
    }
}
