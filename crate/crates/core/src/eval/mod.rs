//! Evaluation harness: per-class accuracy, ensembles, anonymization,
//! parameter sweeps and report rendering.

mod anonymize;
mod ensemble;
mod report;
mod sweep;

pub use anonymize::{anonymize, anonymize_question};
pub use ensemble::{average_distributions, Ensemble};
pub use report::{parse_csv, render_csv, render_markdown, ReportFormat, CSV_HEADER};
pub use sweep::{sweep, SweepPoint, SweepResult, SWEEP_CSV_HEADER};

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cbt::{write_cbt_string, Question};
use crate::corpus::WordClass;
use crate::error::{Error, Result};
use crate::predict::Predictor;
use crate::selfsup::{ScoringOptions, SelfSupModel, SelfSupPredictor};
use crate::util::{derive_seed, sha256_hex};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClassCount {
    pub correct: usize,
    pub total: usize,
}

impl ClassCount {
    pub fn accuracy(&self) -> Option<f64> {
        (self.total > 0).then(|| self.correct as f64 / self.total as f64)
    }
}

/// One model's results.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub model: String,
    pub config_hash: String,
    pub per_class: BTreeMap<WordClass, ClassCount>,
    /// Predictions decided by a random tie-break.
    pub ties: usize,
    /// Questions with a candidate outside the model vocabulary.
    pub unk_questions: usize,
    /// Questions where a candidate filter was ignored.
    pub filter_fallbacks: usize,
    /// Questions failing validation, excluded from the counts.
    pub invalid: usize,
}

impl EvalRow {
    pub fn accuracy(&self, class: WordClass) -> Option<f64> {
        self.per_class.get(&class).and_then(|c| c.accuracy())
    }

    pub fn overall(&self) -> ClassCount {
        self.per_class.values().fold(ClassCount::default(), |a, c| ClassCount {
            correct: a.correct + c.correct,
            total: a.total + c.total,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
    pub seed: u64,
    pub dataset_hash: String,
}

/// Content hash of a question list (its CBT-format serialization).
pub fn dataset_hash(questions: &[Question]) -> String {
    sha256_hex(write_cbt_string(questions).as_bytes())[..16].to_string()
}

/// Predicted candidate index for each question, `None` for invalid ones.
/// Question `i` uses its own RNG stream, so results do not depend on
/// scheduling.
pub fn predictions(model: &dyn Predictor, questions: &[Question], seed: u64) -> Vec<Option<usize>> {
    questions
        .par_iter()
        .enumerate()
        .map(|(i, q)| {
            q.validate().ok()?;
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, i as u64));
            Some(model.predict(q, &mut rng).predicted)
        })
        .collect()
}

/// Accuracy per word class.
pub fn evaluate(model: &dyn Predictor, questions: &[Question], seed: u64, config_hash: &str) -> EvalRow {
    let outcomes: Vec<Option<(bool, bool, bool, bool)>> = questions
        .par_iter()
        .enumerate()
        .map(|(i, q)| {
            if let Err(e) = q.validate() {
                log::warn!("excluding invalid question {} of {}: {e}", q.passage_index, q.book_id);
                return None;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, i as u64));
            let p = model.predict(q, &mut rng);
            Some((
                Some(p.predicted) == q.answer_index(),
                p.tie,
                !p.unk_candidates.is_empty(),
                p.filter_fallback,
            ))
        })
        .collect();
    let mut row = EvalRow {
        model: model.name(),
        config_hash: config_hash.to_string(),
        per_class: WordClass::QUESTION_CLASSES
            .iter()
            .map(|&c| (c, ClassCount::default()))
            .collect(),
        ties: 0,
        unk_questions: 0,
        filter_fallbacks: 0,
        invalid: 0,
    };
    for (q, o) in questions.iter().zip(outcomes) {
        let Some((ok, tie, unk, fb)) = o else {
            row.invalid += 1;
            continue;
        };
        let c = row.per_class.entry(q.word_class).or_default();
        c.total += 1;
        c.correct += ok as usize;
        row.ties += tie as usize;
        row.unk_questions += unk as usize;
        row.filter_fallbacks += fb as usize;
    }
    row
}

/// Test-time ablations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ablation {
    /// Best single window per candidate instead of the soft sum.
    HardScoring,
    /// No slot-position term; changes training, so only models trained
    /// without it qualify.
    NoTime,
}

/// A predictor for `model` under `ablation`. Removing the time term from a
/// model trained with it is refused: that ablation needs retraining.
pub fn ablate(model: &SelfSupModel, ablation: Ablation) -> Result<SelfSupPredictor<'_>> {
    match ablation {
        Ablation::HardScoring => Ok(SelfSupPredictor {
            model,
            opts: ScoringOptions {
                soft: false,
                ..Default::default()
            },
        }),
        Ablation::NoTime if model.use_time => Err(Error::Config(
            "the -time ablation requires a model trained with use_time = false".into(),
        )),
        Ablation::NoTime => Ok(SelfSupPredictor {
            model,
            opts: ScoringOptions::default(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cbt::testutil::toy_question;
    use crate::predict::{OraclePredictor, RandomPredictor};

    fn many(n: usize) -> Vec<Question> {
        let classes = WordClass::QUESTION_CLASSES;
        (0..n)
            .map(|i| {
                let mut q = toy_question();
                q.word_class = classes[i % 4];
                q.passage_index = i;
                q
            })
            .collect()
    }

    #[test]
    fn oracle_is_perfect() {
        let row = evaluate(&OraclePredictor, &many(40), 1, "h");
        for c in WordClass::QUESTION_CLASSES {
            assert_eq!(row.accuracy(c), Some(1.0));
        }
    }

    #[test]
    fn random_is_near_one_tenth() {
        let n = 12_000;
        let row = evaluate(&RandomPredictor, &many(n), 3, "h");
        let acc = row.overall().correct as f64 / n as f64;
        let sd = (0.1 * 0.9 / n as f64).sqrt();
        assert!((acc - 0.1).abs() < 3.0 * sd, "{acc}");
        assert_eq!(row.ties, n);
    }

    #[test]
    fn evaluation_is_pure() {
        let qs = many(200);
        assert_eq!(evaluate(&RandomPredictor, &qs, 9, "h"), evaluate(&RandomPredictor, &qs, 9, "h"));
    }

    #[test]
    fn invalid_questions_are_excluded() {
        let mut qs = many(8);
        qs[0].candidates.pop();
        let row = evaluate(&OraclePredictor, &qs, 0, "h");
        assert_eq!(row.invalid, 1);
        assert_eq!(row.overall().total, 7);
    }
}
