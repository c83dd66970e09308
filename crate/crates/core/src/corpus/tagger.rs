use super::{Lexicon, Token, WordClass};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TaggedToken {
    pub token: Token,
    pub class: WordClass,
}

fn is_opening_quote(tok: &Token) -> bool {
    matches!(tok.surface.as_str(), "\"" | "'" | "``" | "`" | "“" | "‘" | "(")
}

/// First letter uppercase followed by at least one lowercase letter, so that
/// shouted all-caps words are not taken for names.
fn is_capitalized(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(char::is_uppercase) && chars.any(char::is_lowercase)
}

/// Assigns one class per token:
/// 1. capitalized, not at sentence start, not a stopword: named entity;
/// 2. preposition; 3. verb; 4. common noun; 5. other.
///
/// A token is at sentence start when every token before it is punctuation,
/// or when it directly follows an opening quote.
pub fn tag_word_classes(sentences: &[Vec<Token>], lexicon: &Lexicon) -> Vec<Vec<TaggedToken>> {
    sentences
        .iter()
        .map(|sentence| {
            let mut seen_word = false;
            let mut prev: Option<&Token> = None;
            sentence
                .iter()
                .map(|tok| {
                    let at_start = !seen_word || prev.is_some_and(is_opening_quote);
                    let class = classify(tok, at_start, lexicon);
                    if !tok.is_punctuation() {
                        seen_word = true;
                    }
                    prev = Some(tok);
                    TaggedToken {
                        token: tok.clone(),
                        class,
                    }
                })
                .collect()
        })
        .collect()
}

fn classify(tok: &Token, at_start: bool, lexicon: &Lexicon) -> WordClass {
    let lower = tok.lower.as_str();
    if !at_start && is_capitalized(&tok.surface) && !lexicon.is_stopword(lower) {
        WordClass::NamedEntity
    } else if lexicon.prepositions.contains(lower) {
        WordClass::Preposition
    } else if lexicon.verbs.contains(lower) {
        WordClass::Verb
    } else if lexicon.common_nouns.contains(lower) {
        WordClass::CommonNoun
    } else {
        WordClass::Other
    }
}

/// Parses a `token<TAB>class` sidecar file.
pub fn parse_tag_file(text: &str, file: &str) -> Result<Vec<(String, WordClass)>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, line)| {
            let (tok, class) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(file, i + 1, "expected token<TAB>class"))?;
            let class = class
                .parse()
                .map_err(|e: Error| Error::parse(file, i + 1, e.to_string()))?;
            Ok((tok.to_string(), class))
        })
        .collect()
}
