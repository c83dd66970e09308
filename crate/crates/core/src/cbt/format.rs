//! The released CBT text layout: per question, 20 numbered context lines,
//! then `21 <query>\t<answer>\t\t<c1|...|c10>`, then an empty line.

use std::fmt::Write as _;
use std::path::Path;

use super::{Question, BLANK, CONTEXT_SENTENCES, NUM_CANDIDATES};
use crate::corpus::WordClass;
use crate::error::{Error, Result};

pub fn write_cbt_string(questions: &[Question]) -> String {
    let mut out = String::new();
    for q in questions {
        for (i, s) in q.context.iter().enumerate() {
            let _ = writeln!(out, "{} {}", i + 1, s.join(" "));
        }
        let _ = writeln!(
            out,
            "{} {}\t{}\t\t{}",
            CONTEXT_SENTENCES + 1,
            q.query.join(" "),
            q.answer,
            q.candidates.join("|")
        );
        out.push('\n');
    }
    out
}

pub fn write_cbt(questions: &[Question], path: &Path) -> Result<()> {
    std::fs::write(path, write_cbt_string(questions)).map_err(|e| Error::io(path, e))
}

fn split_tokens(s: &str, file: &str, line: usize) -> Result<Vec<String>> {
    if s.is_empty() {
        return Err(Error::parse(file, line, "empty sentence"));
    }
    s.split(' ')
        .map(|t| {
            if t.is_empty() {
                Err(Error::parse(file, line, "empty token (repeated space)"))
            } else {
                Ok(t.to_string())
            }
        })
        .collect()
}

/// Parses CBT text. `word_class` and `book_id` are not carried by the format
/// and are supplied by the caller; `passage_index` is the ordinal in the file.
pub fn parse_cbt_str(text: &str, file: &str, word_class: WordClass) -> Result<Vec<Question>> {
    let mut questions = Vec::new();
    let mut context: Vec<Vec<String>> = Vec::new();
    let mut expect_blank_line = false;
    let mut last_line = 0;
    for (i, raw) in text.split_inclusive('\n').enumerate() {
        let lineno = i + 1;
        last_line = lineno;
        let Some(line) = raw.strip_suffix('\n') else {
            return Err(Error::parse(file, lineno, "missing final newline"));
        };
        if expect_blank_line {
            if !line.is_empty() {
                return Err(Error::parse(file, lineno, "expected empty line after question"));
            }
            expect_blank_line = false;
            continue;
        }
        let expected = context.len() + 1;
        let (num, rest) = line
            .split_once(' ')
            .ok_or_else(|| Error::parse(file, lineno, "expected `<n> <text>`"))?;
        let n: usize = num
            .parse()
            .map_err(|_| Error::parse(file, lineno, format!("bad line number `{num}`")))?;
        if n != expected {
            return Err(Error::parse(
                file,
                lineno,
                format!("line number {n} out of sequence, expected {expected}"),
            ));
        }
        if n <= CONTEXT_SENTENCES {
            context.push(split_tokens(rest, file, lineno)?);
            continue;
        }
        let fields: Vec<&str> = rest.split('\t').collect();
        let [query, answer, empty, cands] = fields[..] else {
            return Err(Error::parse(
                file,
                lineno,
                format!("expected 4 tab-separated fields, found {}", fields.len()),
            ));
        };
        if !empty.is_empty() {
            return Err(Error::parse(file, lineno, "third field must be empty"));
        }
        let query = split_tokens(query, file, lineno)?;
        if !query.iter().any(|t| t == BLANK) {
            return Err(Error::parse(file, lineno, format!("blank token {BLANK} absent")));
        }
        let candidates: Vec<String> = cands.split('|').map(str::to_string).collect();
        if candidates.len() != NUM_CANDIDATES {
            return Err(Error::parse(
                file,
                lineno,
                format!("expected {NUM_CANDIDATES} candidates, found {}", candidates.len()),
            ));
        }
        if answer.is_empty() {
            return Err(Error::parse(file, lineno, "empty answer"));
        }
        questions.push(Question {
            context: std::mem::take(&mut context),
            query,
            candidates,
            answer: answer.to_string(),
            word_class,
            book_id: String::new(),
            passage_index: questions.len(),
        });
        expect_blank_line = true;
    }
    if !context.is_empty() || expect_blank_line {
        return Err(Error::parse(file, last_line, "truncated question at end of file"));
    }
    Ok(questions)
}

/// Reads a CBT file; the word class is inferred from a `_NE_`, `_CN_`,
/// `_V_` or `_P_` component of the file name, otherwise `Other`.
pub fn parse_cbt(path: &Path) -> Result<Vec<Question>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_cbt_str(&text, &name, class_from_file_name(&name))
}

pub(crate) fn class_from_file_name(name: &str) -> WordClass {
    name.split(['_', '.', '-'])
        .find_map(|part| match part {
            "NE" | "CN" | "V" | "P" => part.parse().ok(),
            _ => None,
        })
        .unwrap_or(WordClass::Other)
}
