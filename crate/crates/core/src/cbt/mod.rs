//! Cloze question construction and the plain-text dataset format.

mod builder;
mod format;

pub use builder::{
    build_dataset, build_question, enumerate_passages, passage_rng, BuildOutcome, BuilderConfig,
    Dataset, Passage, Rejected,
};
pub use format::{parse_cbt, parse_cbt_str, write_cbt, write_cbt_string};

use std::collections::HashSet;

use crate::corpus::WordClass;

/// Placeholder token for the removed word.
pub const BLANK: &str = "XXXXX";
pub const CONTEXT_SENTENCES: usize = 20;
pub const NUM_CANDIDATES: usize = 10;

/// One cloze instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Question {
    pub context: Vec<Vec<String>>,
    pub query: Vec<String>,
    pub candidates: Vec<String>,
    pub answer: String,
    pub word_class: WordClass,
    pub book_id: String,
    pub passage_index: usize,
}

impl Question {
    pub fn blank_position(&self) -> Option<usize> {
        self.query.iter().position(|t| t == BLANK)
    }

    pub fn answer_index(&self) -> Option<usize> {
        self.candidates.iter().position(|c| *c == self.answer)
    }

    pub fn context_tokens(&self) -> impl Iterator<Item = &String> {
        self.context.iter().flatten()
    }

    /// Checks every structural invariant of a question, returning the first
    /// violation.
    pub fn validate(&self) -> Result<(), String> {
        if self.context.len() != CONTEXT_SENTENCES {
            return Err(format!("{} context sentences", self.context.len()));
        }
        if self.context.iter().any(Vec::is_empty) {
            return Err("empty context sentence".into());
        }
        let blanks = self.query.iter().filter(|t| *t == BLANK).count();
        if blanks != 1 {
            return Err(format!("{blanks} blanks in query"));
        }
        if self.candidates.len() != NUM_CANDIDATES {
            return Err(format!("{} candidates", self.candidates.len()));
        }
        let lowered: HashSet<String> = self.candidates.iter().map(|c| c.to_lowercase()).collect();
        if lowered.len() != self.candidates.len() {
            return Err("duplicate candidates".into());
        }
        if self.answer_index().is_none() {
            return Err(format!("answer `{}` not among candidates", self.answer));
        }
        let words: HashSet<&str> = self
            .context_tokens()
            .chain(self.query.iter())
            .map(String::as_str)
            .chain(std::iter::once(self.answer.as_str()))
            .collect();
        if let Some(c) = self.candidates.iter().find(|c| !words.contains(c.as_str())) {
            return Err(format!("candidate `{c}` absent from query and context"));
        }
        Ok(())
    }

    /// Content equality over the fields the file format carries.
    pub fn same_content(&self, other: &Question) -> bool {
        self.context == other.context
            && self.query == other.query
            && self.candidates == other.candidates
            && self.answer == other.answer
    }
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;

    /// A valid question over synthetic words: context sentence i is
    /// `w{i} c{i%10} .`, the query is `the XXXXX ran .`, answer `c3`.
    pub fn toy_question() -> Question {
        let context = (0..CONTEXT_SENTENCES)
            .map(|i| vec![format!("w{i}"), format!("c{}", i % 10), ".".to_string()])
            .collect();
        Question {
            context,
            query: vec!["the".into(), BLANK.into(), "ran".into(), ".".into()],
            candidates: (0..10).map(|i| format!("c{i}")).collect(),
            answer: "c3".into(),
            word_class: WordClass::NamedEntity,
            book_id: "toy".into(),
            passage_index: 0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::testutil::toy_question;

    #[test]
    fn toy_is_valid() {
        assert_eq!(toy_question().validate(), Ok(()));
    }

    #[test]
    fn invariant_violations_are_reported() {
        let mut q = toy_question();
        q.candidates.pop();
        assert!(q.validate().unwrap_err().contains("candidates"));

        let mut q = toy_question();
        q.answer = "zz".into();
        assert!(q.validate().is_err());

        let mut q = toy_question();
        q.query[1] = "x".into();
        assert!(q.validate().unwrap_err().contains("blanks"));

        let mut q = toy_question();
        q.candidates[0] = "C1".into();
        assert!(q.validate().is_err());
    }
}
