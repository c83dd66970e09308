use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cbt::Question;
use crate::error::{Error, Result};
use crate::predict::{PredictionScores, Predictor};

/// Uniform average of candidate-restricted distributions.
pub fn average_distributions(members: &[PredictionScores]) -> Result<Vec<f64>> {
    let n = members.first().ok_or(Error::Config("empty ensemble".into()))?.scores.len();
    if members.iter().any(|m| m.scores.len() != n) {
        return Err(Error::IncompatibleCandidates);
    }
    let mut avg = vec![0.0; n];
    for m in members {
        for (a, p) in avg.iter_mut().zip(m.restricted_softmax()) {
            *a += p / members.len() as f64;
        }
    }
    Ok(avg)
}

/// Averages its members' candidate-restricted softmaxes.
pub struct Ensemble<'a> {
    pub members: Vec<&'a dyn Predictor>,
}

impl Ensemble<'_> {
    pub fn combine(&self, q: &Question, rng: &mut dyn RngCore) -> Result<PredictionScores> {
        let preds: Vec<PredictionScores> = self
            .members
            .iter()
            .map(|m| {
                let mut r = ChaCha8Rng::seed_from_u64(rng.next_u64());
                m.predict(q, &mut r)
            })
            .collect();
        let avg = average_distributions(&preds)?;
        Ok(PredictionScores::from_scores(avg.iter().map(|p| p.ln()).collect(), rng))
    }
}

impl Predictor for Ensemble<'_> {
    fn name(&self) -> String {
        match self.members.first() {
            Some(m) => format!("ensemble({}x{})", self.members.len(), m.name()),
            None => "ensemble(empty)".into(),
        }
    }

    fn predict(&self, q: &Question, rng: &mut dyn RngCore) -> PredictionScores {
        self.combine(q, rng)
            .expect("ensemble members score the same candidate list")
    }
}
