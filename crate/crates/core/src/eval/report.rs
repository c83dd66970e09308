use std::fmt::Write as _;
use std::str::FromStr;

use super::{ClassCount, EvalReport, EvalRow};
use crate::corpus::WordClass;
use crate::error::Error;

pub const CSV_HEADER: &str = "model,class,correct,total,accuracy,seed,config_hash";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Markdown,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::Config(format!("unknown report format `{other}`"))),
        }
    }
}

impl ReportFormat {
    pub fn render(self, reports: &[EvalReport]) -> String {
        match self {
            ReportFormat::Markdown => render_markdown(reports),
            ReportFormat::Csv => render_csv(reports),
        }
    }
}

fn cell(row: &EvalRow, class: WordClass) -> String {
    match row.accuracy(class) {
        Some(a) => format!("{a:.3}"),
        None => "n=0".into(),
    }
}

/// One row per model, one column per question class.
pub fn render_markdown(reports: &[EvalReport]) -> String {
    let mut out = String::from("| Model |");
    for c in WordClass::QUESTION_CLASSES {
        let _ = write!(out, " {} |", c.label());
    }
    out.push_str("\n|---|");
    out.push_str(&"---:|".repeat(WordClass::QUESTION_CLASSES.len()));
    out.push('\n');
    for r in reports {
        for row in &r.rows {
            let _ = write!(out, "| {} |", row.model);
            for c in WordClass::QUESTION_CLASSES {
                let _ = write!(out, " {} |", cell(row, c));
            }
            out.push('\n');
        }
    }
    out.push('\n');
    for r in reports {
        let _ = writeln!(out, "dataset {} seed {}", r.dataset_hash, r.seed);
        for row in &r.rows {
            let _ = writeln!(
                out,
                "- {} [{}]: ties {}, unknown candidates {}, filter fallbacks {}, invalid {}",
                row.model, row.config_hash, row.ties, row.unk_questions, row.filter_fallbacks, row.invalid
            );
        }
    }
    out
}

pub fn render_csv(reports: &[EvalReport]) -> String {
    let mut out = format!("{CSV_HEADER}\n");
    for r in reports {
        for row in &r.rows {
            for c in WordClass::QUESTION_CLASSES {
                let n = row.per_class.get(&c).copied().unwrap_or_default();
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    row.model,
                    c.code(),
                    n.correct,
                    n.total,
                    cell(row, c),
                    r.seed,
                    row.config_hash
                );
            }
        }
    }
    out
}

/// Reads rows written by [`render_csv`]. Rows are grouped into one report
/// per seed; `source` stands in for the dataset hash, which the CSV omits.
pub fn parse_csv(text: &str, source: &str) -> Result<Vec<EvalReport>, Error> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == CSV_HEADER => {}
        _ => return Err(Error::parse(source, 1, format!("expected header `{CSV_HEADER}`"))),
    }
    let mut reports: Vec<EvalReport> = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |msg: &str| Error::parse(source, i + 1, msg);
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(bad("expected 7 comma-separated fields"));
        }
        let class: WordClass = f[1].parse().map_err(|_| bad("bad class"))?;
        let count = ClassCount {
            correct: f[2].parse().map_err(|_| bad("bad correct count"))?,
            total: f[3].parse().map_err(|_| bad("bad total"))?,
        };
        if count.correct > count.total {
            return Err(bad("correct exceeds total"));
        }
        let seed: u64 = f[5].parse().map_err(|_| bad("bad seed"))?;
        if reports.last().map_or(true, |r| r.seed != seed) {
            reports.push(EvalReport {
                rows: Vec::new(),
                seed,
                dataset_hash: source.to_string(),
            });
        }
        let rows = &mut reports.last_mut().expect("pushed above").rows;
        let same = rows.last().is_some_and(|r| r.model == f[0] && r.config_hash == f[6]);
        if !same {
            rows.push(EvalRow {
                model: f[0].to_string(),
                config_hash: f[6].to_string(),
                per_class: Default::default(),
                ties: 0,
                unk_questions: 0,
                filter_fallbacks: 0,
                invalid: 0,
            });
        }
        let row = rows.last_mut().expect("pushed above");
        if count.total > 0 {
            row.per_class.insert(class, count);
        }
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report() -> EvalReport {
        let per_class = [
            (WordClass::NamedEntity, ClassCount { correct: 3, total: 4 }),
            (WordClass::CommonNoun, ClassCount { correct: 1, total: 2 }),
            (WordClass::Preposition, ClassCount { correct: 0, total: 5 }),
        ]
        .into_iter()
        .collect();
        EvalReport {
            rows: vec![EvalRow {
                model: "m".into(),
                config_hash: "abc".into(),
                per_class,
                ties: 0,
                unk_questions: 0,
                filter_fallbacks: 0,
                invalid: 0,
            }],
            seed: 1,
            dataset_hash: "d".into(),
        }
    }

    #[test]
    fn empty_class_is_marked() {
        let md = render_markdown(&[report()]);
        assert!(md.starts_with("| Model | Named Entities | Common Nouns | Verbs | Prepositions |"));
        assert!(md.contains("| m | 0.750 | 0.500 | n=0 | 0.000 |"));
        let csv = render_csv(&[report()]);
        assert!(csv.contains("m,V,0,0,n=0,1,abc"));
        assert_eq!(csv.lines().count(), 5);
    }

    #[test]
    fn rendering_is_deterministic() {
        assert_eq!(render_markdown(&[report()]), render_markdown(&[report()]));
        assert_eq!(render_csv(&[report()]), render_csv(&[report()]));
    }

    #[test]
    fn csv_round_trip() {
        let back = parse_csv(&render_csv(&[report()]), "d").unwrap();
        assert_eq!(back, vec![report()]);
        assert!(parse_csv("nope\n", "x").is_err());
        assert!(parse_csv(&format!("{CSV_HEADER}\nm,NE,5,4,1.2,0,h\n"), "x").is_err());
    }
}
