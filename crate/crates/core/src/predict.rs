//! The common prediction interface shared by memory networks and baselines.

use rand::{Rng, RngCore};

use crate::cbt::Question;
use crate::util::{argmax_all, softmax};

/// Per-candidate scores, aligned with `Question::candidates`. Scores live in
/// a log/logit domain: higher is better and `softmax(scores)` is the
/// candidate-restricted distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionScores {
    pub scores: Vec<f64>,
    pub predicted: usize,
    /// Set when the arg-max was drawn among exactly tied candidates.
    pub tie: bool,
    /// Candidates outside the model vocabulary (scored as the unknown word).
    pub unk_candidates: Vec<usize>,
    /// Full-vocabulary answer distribution, when the model has one.
    pub distribution: Option<Vec<f64>>,
    /// Set when a candidate filter removed everything and was ignored.
    pub filter_fallback: bool,
}

impl PredictionScores {
    /// Arg-max with uniform random choice among exact ties.
    pub fn from_scores(scores: Vec<f64>, rng: &mut dyn RngCore) -> Self {
        let best = argmax_all(&scores);
        let (predicted, tie) = match best.len() {
            0 => (0, false),
            1 => (best[0], false),
            n => (best[rng.gen_range(0..n)], true),
        };
        PredictionScores {
            scores,
            predicted,
            tie,
            unk_candidates: Vec::new(),
            distribution: None,
            filter_fallback: false,
        }
    }

    pub fn restricted_softmax(&self) -> Vec<f64> {
        softmax(&self.scores)
    }
}

pub trait Predictor: Sync {
    fn name(&self) -> String;

    fn predict(&self, q: &Question, rng: &mut dyn RngCore) -> PredictionScores;
}

impl<P: Predictor + ?Sized> Predictor for &P {
    fn name(&self) -> String {
        (**self).name()
    }

    fn predict(&self, q: &Question, rng: &mut dyn RngCore) -> PredictionScores {
        (**self).predict(q, rng)
    }
}

/// Always answers correctly; a harness check.
pub struct OraclePredictor;

impl Predictor for OraclePredictor {
    fn name(&self) -> String {
        "oracle".into()
    }

    fn predict(&self, q: &Question, rng: &mut dyn RngCore) -> PredictionScores {
        let mut s = vec![0.0; q.candidates.len()];
        if let Some(i) = q.answer_index() {
            s[i] = 1.0;
        }
        PredictionScores::from_scores(s, rng)
    }
}

/// Uniform random choice among the candidates.
pub struct RandomPredictor;

impl Predictor for RandomPredictor {
    fn name(&self) -> String {
        "random".into()
    }

    fn predict(&self, q: &Question, rng: &mut dyn RngCore) -> PredictionScores {
        PredictionScores::from_scores(vec![0.0; q.candidates.len()], rng)
    }
}
