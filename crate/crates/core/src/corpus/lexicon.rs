use std::collections::HashSet;
use std::path::Path;

use crate::error::{Error, Result};

const PREPOSITIONS: &str = include_str!("../../data/prepositions.txt");
const VERBS: &str = include_str!("../../data/verbs.txt");
const COMMON_NOUNS: &str = include_str!("../../data/common_nouns.txt");
const STOPWORDS: &str = include_str!("../../data/stopwords.txt");

/// Word lists backing the rule tagger. After construction the four sets are
/// disjoint; overlaps resolve as preposition > verb > common noun > stopword.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    pub prepositions: HashSet<String>,
    pub verbs: HashSet<String>,
    pub common_nouns: HashSet<String>,
    pub stopwords: HashSet<String>,
}

fn read_list(text: &str) -> HashSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

impl Default for Lexicon {
    /// The shipped word lists.
    fn default() -> Self {
        Lexicon::from_lists(PREPOSITIONS, VERBS, COMMON_NOUNS, STOPWORDS)
    }
}

impl Lexicon {
    pub fn from_lists(prepositions: &str, verbs: &str, nouns: &str, stopwords: &str) -> Self {
        Lexicon::new(
            read_list(prepositions),
            read_list(verbs),
            read_list(nouns),
            read_list(stopwords),
        )
    }

    pub fn new(
        prepositions: HashSet<String>,
        mut verbs: HashSet<String>,
        mut common_nouns: HashSet<String>,
        mut stopwords: HashSet<String>,
    ) -> Self {
        verbs.retain(|w| !prepositions.contains(w));
        common_nouns.retain(|w| !prepositions.contains(w) && !verbs.contains(w));
        stopwords.retain(|w| {
            !prepositions.contains(w) && !verbs.contains(w) && !common_nouns.contains(w)
        });
        Lexicon {
            prepositions,
            verbs,
            common_nouns,
            stopwords,
        }
    }

    /// Loads `prepositions.txt`, `verbs.txt`, `common_nouns.txt` and
    /// `stopwords.txt` from `dir`.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let read = |name: &str| {
            let p = dir.join(name);
            std::fs::read_to_string(&p).map_err(|e| Error::io(p, e))
        };
        Ok(Lexicon::from_lists(
            &read("prepositions.txt")?,
            &read("verbs.txt")?,
            &read("common_nouns.txt")?,
            &read("stopwords.txt")?,
        ))
    }

    /// Abbreviation tokens such as `mrs.` match their dotless entry.
    pub fn is_stopword(&self, lower: &str) -> bool {
        self.stopwords.contains(lower) || lower.strip_suffix('.').is_some_and(|w| self.stopwords.contains(w))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_lists_are_disjoint() {
        let lex = Lexicon::default();
        assert!(lex.prepositions.len() >= 45);
        for w in &lex.prepositions {
            assert!(!lex.verbs.contains(w) && !lex.common_nouns.contains(w) && !lex.stopwords.contains(w));
        }
        for w in &lex.verbs {
            assert!(!lex.common_nouns.contains(w) && !lex.stopwords.contains(w));
        }
        for w in &lex.common_nouns {
            assert!(!lex.stopwords.contains(w));
        }
    }

    #[test]
    fn overlap_priority() {
        let lex = Lexicon::from_lists("on\n", "on\nrun\n", "run\nball\n", "ball\nthe\n");
        assert!(lex.prepositions.contains("on"));
        assert!(!lex.verbs.contains("on"));
        assert!(lex.verbs.contains("run") && !lex.common_nouns.contains("run"));
        assert!(lex.common_nouns.contains("ball") && !lex.stopwords.contains("ball"));
        assert!(lex.stopwords.contains("the"));
    }
}
