use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::cbt::{Question, BLANK};
use crate::error::{Error, Result};
use crate::util::sha256_hex;

pub const NIL: usize = 0;
pub const UNK: usize = 1;
const NIL_WORD: &str = "<nil>";
const UNK_WORD: &str = "<unk>";
pub const NUM_PLACEHOLDERS: usize = 10;

pub fn placeholder(k: usize) -> String {
    format!("@entity{k}")
}

/// Lowercased word <-> index table. Index 0 is the padding word, 1 the
/// unknown word, then the ten anonymization placeholders, then corpus words
/// by decreasing count (ties alphabetical).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocab {
    fn from_words(words: Vec<String>) -> Self {
        let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        Vocab { words, index }
    }

    fn reserved() -> Vec<String> {
        let mut w = vec![NIL_WORD.to_string(), UNK_WORD.to_string()];
        w.extend((1..=NUM_PLACEHOLDERS).map(placeholder));
        w
    }

    /// Builds from lowercased tokens of the given (training) questions,
    /// keeping words seen at least `min_count` times.
    pub fn build<'a>(questions: impl IntoIterator<Item = &'a Question>, min_count: usize) -> Self {
        let mut counts: HashMap<String, usize> = HashMap::new();
        for q in questions {
            for t in q.context_tokens().chain(&q.query).chain(&q.candidates) {
                *counts.entry(t.to_lowercase()).or_default() += 1;
            }
        }
        Vocab::from_counts(counts, min_count)
    }

    pub fn from_counts(counts: HashMap<String, usize>, min_count: usize) -> Self {
        let mut words = Vocab::reserved();
        let mut ranked: Vec<(String, usize)> = counts
            .into_iter()
            .filter(|(w, c)| *c >= min_count.max(1) && !words.contains(w))
            .collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        words.extend(ranked.into_iter().map(|(w, _)| w));
        let blank = BLANK.to_lowercase();
        if !words.contains(&blank) {
            words.push(blank);
        }
        Vocab::from_words(words)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Index of a word (case-insensitive), `UNK` when absent.
    pub fn id(&self, word: &str) -> usize {
        if let Some(&i) = self.index.get(word) {
            return i;
        }
        self.index.get(&word.to_lowercase()).copied().unwrap_or(UNK)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.id(word) != UNK
    }

    pub fn word(&self, id: usize) -> &str {
        &self.words[id]
    }

    pub fn hash(&self) -> String {
        sha256_hex(self.words.join("\n").as_bytes())[..16].to_string()
    }

    /// `# d=<n> kind=<kind>` header, then `word<TAB>index` lines.
    pub fn to_text(&self, kind: &str) -> String {
        let mut out = format!("# d={} kind={}\n", self.len(), kind);
        for (i, w) in self.words.iter().enumerate() {
            let _ = writeln!(out, "{w}\t{i}");
        }
        out
    }

    /// Returns the vocabulary and the feature-kind string from its header.
    pub fn from_text(text: &str, file: &str) -> Result<(Self, String)> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| Error::parse(file, 1, "empty vocabulary"))?;
        let mut d = None;
        let mut kind = String::new();
        for field in header.trim_start_matches('#').split_whitespace() {
            if let Some(v) = field.strip_prefix("d=") {
                d = v.parse::<usize>().ok();
            } else if let Some(v) = field.strip_prefix("kind=") {
                kind = v.to_string();
            }
        }
        let d = d.ok_or_else(|| Error::parse(file, 1, "header lacks d=<n>"))?;
        let mut words = Vec::with_capacity(d);
        for (i, line) in lines {
            let (w, idx) = line
                .rsplit_once('\t')
                .ok_or_else(|| Error::parse(file, i + 1, "expected word<TAB>index"))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| Error::parse(file, i + 1, "bad index"))?;
            if idx != words.len() {
                return Err(Error::parse(file, i + 1, "indices must be consecutive"));
            }
            words.push(w.to_string());
        }
        if words.len() != d {
            return Err(Error::parse(file, 1, format!("header says d={d}, found {}", words.len())));
        }
        Ok((Vocab::from_words(words), kind))
    }

    pub fn save(&self, path: &Path, kind: &str) -> Result<()> {
        std::fs::write(path, self.to_text(kind)).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<(Self, String)> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Vocab::from_text(&text, &path.display().to_string())
    }
}
