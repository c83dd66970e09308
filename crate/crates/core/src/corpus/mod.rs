//! Book ingestion: tokenization, sentence segmentation, word-class tagging and
//! the train/valid/test allocation of books.

mod lexicon;
mod segment;
mod tagger;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

pub use lexicon::Lexicon;
pub use segment::{segment_sentences, tokenize, SegmentConfig, DEFAULT_ABBREVIATIONS};
pub use tagger::{parse_tag_file, tag_word_classes, TaggedToken};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Token {
    pub surface: String,
    pub lower: String,
    pub index_in_sentence: usize,
}

impl Token {
    pub fn new(surface: impl Into<String>, index_in_sentence: usize) -> Self {
        let surface = surface.into();
        debug_assert!(!surface.is_empty());
        let lower = surface.to_lowercase();
        Token {
            surface,
            lower,
            index_in_sentence,
        }
    }

    /// True when the token carries no letter or digit.
    pub fn is_punctuation(&self) -> bool {
        !self.surface.chars().any(char::is_alphanumeric)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum WordClass {
    NamedEntity,
    CommonNoun,
    Verb,
    Preposition,
    Other,
}

impl WordClass {
    /// The four question classes, in report column order.
    pub const QUESTION_CLASSES: [WordClass; 4] = [
        WordClass::NamedEntity,
        WordClass::CommonNoun,
        WordClass::Verb,
        WordClass::Preposition,
    ];

    pub fn code(self) -> &'static str {
        match self {
            WordClass::NamedEntity => "NE",
            WordClass::CommonNoun => "CN",
            WordClass::Verb => "V",
            WordClass::Preposition => "P",
            WordClass::Other => "O",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            WordClass::NamedEntity => "Named Entities",
            WordClass::CommonNoun => "Common Nouns",
            WordClass::Verb => "Verbs",
            WordClass::Preposition => "Prepositions",
            WordClass::Other => "Other",
        }
    }
}

impl fmt::Display for WordClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for WordClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "NE" | "NAMEDENTITY" | "NAMED_ENTITY" => Ok(WordClass::NamedEntity),
            "CN" | "N" | "COMMONNOUN" | "COMMON_NOUN" => Ok(WordClass::CommonNoun),
            "V" | "VERB" => Ok(WordClass::Verb),
            "P" | "PREP" | "PREPOSITION" => Ok(WordClass::Preposition),
            "O" | "OTHER" => Ok(WordClass::Other),
            other => Err(Error::Config(format!("unknown word class `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Valid, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "valid" | "validation" | "dev" => Ok(Split::Valid),
            "test" => Ok(Split::Test),
            other => Err(Error::Config(format!("unknown split `{other}`"))),
        }
    }
}

/// A tagged book. Every sentence is non-empty.
#[derive(Debug, Clone, PartialEq)]
pub struct Book {
    pub id: String,
    pub split: Split,
    pub sentences: Vec<Vec<TaggedToken>>,
}

impl Book {
    pub fn from_text(
        id: impl Into<String>,
        text: &str,
        split: Split,
        lexicon: &Lexicon,
        seg: &SegmentConfig,
    ) -> Self {
        let sentences = segment_sentences(text, seg);
        Book {
            id: id.into(),
            split,
            sentences: tag_word_classes(&sentences, lexicon),
        }
    }

    /// Like [`Book::from_text`], but classes come from a sidecar tag file
    /// wherever it provides them.
    pub fn from_text_with_tags(
        id: impl Into<String>,
        text: &str,
        tags: &str,
        split: Split,
        lexicon: &Lexicon,
        seg: &SegmentConfig,
    ) -> Result<Self> {
        let id = id.into();
        let mut book = Book::from_text(id.clone(), text, split, lexicon, seg);
        let overrides = parse_tag_file(tags, &format!("{id}.tags"))?;
        let n_tokens = book.num_tokens();
        if overrides.len() != n_tokens {
            return Err(Error::parse(
                format!("{id}.tags"),
                overrides.len().min(n_tokens) + 1,
                format!("tag file has {} entries for {} tokens", overrides.len(), n_tokens),
            ));
        }
        let mut it = overrides.into_iter().enumerate();
        for tok in book.sentences.iter_mut().flatten() {
            let (i, (surface, class)) = it.next().expect("length checked");
            if surface != tok.token.surface {
                return Err(Error::parse(
                    format!("{id}.tags"),
                    i + 1,
                    format!("token `{surface}` does not match `{}`", tok.token.surface),
                ));
            }
            tok.class = class;
        }
        Ok(book)
    }

    pub fn num_tokens(&self) -> usize {
        self.sentences.iter().map(Vec::len).sum()
    }
}

/// Reads `book_id<TAB>split` lines. `#` starts a comment.
pub fn parse_split_manifest(text: &str, file: &str) -> Result<Vec<(String, Split)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(id), Some(split), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::parse(file, i + 1, "expected `book_id split`"));
        };
        let split = split
            .parse()
            .map_err(|e: Error| Error::parse(file, i + 1, e.to_string()))?;
        out.push((id.to_string(), split));
    }
    Ok(out)
}

/// Loads every `*.txt` under `dir` except `splits.txt` (sorted by file
/// name). A `NAME.tags` sidecar next to `NAME.txt` overrides the rule
/// tagger. Books missing from `manifest` are skipped.
pub fn load_books(
    dir: &Path,
    manifest: &[(String, Split)],
    lexicon: &Lexicon,
    seg: &SegmentConfig,
) -> Result<Vec<Book>> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "txt"))
        .filter(|p| p.file_name().is_some_and(|n| n != "splits.txt"))
        .collect();
    paths.sort();
    let mut books = Vec::new();
    for path in paths {
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let Some((_, split)) = manifest.iter().find(|(m, _)| *m == id) else {
            log::warn!("book {id} not in split manifest, skipped");
            continue;
        };
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let tag_path = path.with_extension("tags");
        let book = if tag_path.exists() {
            let tags = std::fs::read_to_string(&tag_path).map_err(|e| Error::io(&tag_path, e))?;
            Book::from_text_with_tags(id, &text, &tags, *split, lexicon, seg)?
        } else {
            Book::from_text(id, &text, *split, lexicon, seg)
        };
        books.push(book);
    }
    Ok(books)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn class_codes_round_trip() {
        for c in WordClass::QUESTION_CLASSES {
            assert_eq!(c.code().parse::<WordClass>().unwrap(), c);
        }
        assert!("XX".parse::<WordClass>().is_err());
    }

    #[test]
    fn manifest_parsing() {
        let m = parse_split_manifest("# books\nalice train\npeter\tvalid\n\n", "m").unwrap();
        assert_eq!(m, vec![("alice".into(), Split::Train), ("peter".into(), Split::Valid)]);
        let err = parse_split_manifest("alice\n", "m").unwrap_err();
        assert!(err.to_string().contains("m:1"));
    }

    #[test]
    fn sidecar_tags_override_rules() {
        let lex = Lexicon::default();
        let seg = SegmentConfig::default();
        let book = Book::from_text_with_tags(
            "b",
            "Tom ran home.",
            "Tom\tNE\nran\tV\nhome\tNE\n.\tO\n",
            Split::Train,
            &lex,
            &seg,
        )
        .unwrap();
        let classes: Vec<_> = book.sentences[0].iter().map(|t| t.class).collect();
        assert_eq!(
            classes,
            [WordClass::NamedEntity, WordClass::Verb, WordClass::NamedEntity, WordClass::Other]
        );
        let err = Book::from_text_with_tags("b", "Tom ran.", "Tom\tNE\n", Split::Train, &lex, &seg);
        assert!(err.is_err());
    }
}
