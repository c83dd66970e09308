use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::{hard_select, supporting_memory, Scored, SelfSupGrads, SelfSupModel};
use crate::cbt::{Question, BLANK};
use crate::error::{Error, Result};
use crate::features::Vocab;
use crate::sgd::{run_sgd, EpochStats, SgdConfig, SgdModel};
use crate::util::softmax;

/// Which windows are stored and what the training target ranges over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelfSupMode {
    /// Windows around candidate mentions only.
    CandidateWindows,
    /// A window around every context token.
    AllWindows,
    /// Every context word is a possible answer; a word's logit is its best
    /// window score, normalized over the words present.
    AllTargets,
    /// All windows, plus pseudo-questions blanking every query word that
    /// occurs in the context.
    Lm,
}

impl SelfSupMode {
    pub fn name(self) -> &'static str {
        match self {
            SelfSupMode::CandidateWindows => "candidate_windows",
            SelfSupMode::AllWindows => "all_windows",
            SelfSupMode::AllTargets => "all_targets",
            SelfSupMode::Lm => "lm",
        }
    }
}

impl FromStr for SelfSupMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "candidate_windows" => Ok(SelfSupMode::CandidateWindows),
            "all_windows" => Ok(SelfSupMode::AllWindows),
            "all_targets" => Ok(SelfSupMode::AllTargets),
            "lm" => Ok(SelfSupMode::Lm),
            _ => Err(Error::Config(format!("unknown self-supervision mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SelfSupLoss {
    /// `-log softmax(scores)[target]` over all windows.
    SoftmaxNll,
    /// Hinge `max(0, mu - s_target + max_other s)`.
    Margin(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelfSupConfig {
    pub b: usize,
    pub p: usize,
    pub mode: SelfSupMode,
    pub loss: SelfSupLoss,
    pub update_only_on_mistake: bool,
    pub use_time: bool,
    pub init_scale: f64,
    pub sgd: SgdConfig,
}

impl Default for SelfSupConfig {
    /// b=5, p=300, lr 0.01, one example per update.
    fn default() -> Self {
        SelfSupConfig {
            b: 5,
            p: 300,
            mode: SelfSupMode::CandidateWindows,
            loss: SelfSupLoss::SoftmaxNll,
            update_only_on_mistake: true,
            use_time: true,
            init_scale: 0.1,
            sgd: SgdConfig {
                lr: 0.01,
                epochs: 10,
                batch_size: 1,
                seed: 0,
                anneal: true,
            },
        }
    }
}

impl SelfSupConfig {
    pub fn validate(&self) -> Result<()> {
        if self.b % 2 == 0 {
            return Err(Error::Config(format!("window size {} must be odd", self.b)));
        }
        if let SelfSupLoss::Margin(mu) = self.loss {
            if !(mu > 0.0) {
                return Err(Error::Config(format!("margin {mu} must be > 0")));
            }
        }
        self.sgd.validate()
    }
}

/// Loss and per-window score derivatives for one question; `None` when the
/// target has no window, or (with `skip_correct`) the model already selects
/// it.
fn objective(
    model: &SelfSupModel,
    q: &Question,
    loss: SelfSupLoss,
    skip_correct: bool,
) -> Option<(f64, Vec<f64>, Scored)> {
    let s = model.score(q);
    if s.scores.is_empty() {
        return None;
    }
    // Candidate logits and the index of the target among them; each logit
    // is one window score, `slot[k]` says which.
    let (logits, slot, target): (Vec<f64>, Vec<usize>, usize) =
        if model.mode == SelfSupMode::AllTargets {
            let words = SelfSupModel::best_window_per_word(&s.mem, &s.scores);
            let answer = q.answer.to_lowercase();
            let t = words.iter().position(|(w, _)| *w == answer)?;
            let slot: Vec<usize> = words.iter().map(|(_, i)| *i).collect();
            (slot.iter().map(|&i| s.scores[i]).collect(), slot, t)
        } else {
            let t = supporting_memory(q, &s.mem, &s.scores)?;
            (s.scores.clone(), (0..s.scores.len()).collect(), t)
        };
    if skip_correct && hard_select(&logits).ok()? == target {
        return None;
    }
    let mut dlogits = vec![0.0; logits.len()];
    let value = match loss {
        SelfSupLoss::SoftmaxNll => {
            let probs = softmax(&logits);
            for (k, p) in probs.iter().enumerate() {
                dlogits[k] = *p;
            }
            dlogits[target] -= 1.0;
            -probs[target].ln()
        }
        SelfSupLoss::Margin(mu) => {
            let rival = (0..logits.len())
                .filter(|&k| k != target)
                .max_by(|&a, &b| logits[a].total_cmp(&logits[b]).then(b.cmp(&a)));
            match rival {
                Some(r) if mu - logits[target] + logits[r] > 0.0 => {
                    dlogits[target] = -1.0;
                    dlogits[r] = 1.0;
                    mu - logits[target] + logits[r]
                }
                _ => 0.0,
            }
        }
    };
    let mut dscores = vec![0.0; s.scores.len()];
    for (k, g) in dlogits.into_iter().enumerate() {
        dscores[slot[k]] += g;
    }
    Some((value, dscores, s))
}

pub(crate) struct Trainable {
    pub model: SelfSupModel,
    pub loss: SelfSupLoss,
    pub update_only_on_mistake: bool,
}

impl SgdModel for Trainable {
    type Item = Question;
    type Grads = SelfSupGrads;

    fn grads(&self, q: &Question) -> Option<(f64, SelfSupGrads)> {
        let (l, ds, s) = objective(&self.model, q, self.loss, self.update_only_on_mistake)?;
        Some((l, self.model.grads_from_scores(&s, &ds)))
    }

    fn merge(acc: &mut SelfSupGrads, g: SelfSupGrads) {
        acc.merge(&g);
    }

    fn apply(&mut self, g: &SelfSupGrads, lr: f64) {
        self.model.apply(g, lr);
    }

    fn loss(&self, q: &Question) -> Option<f64> {
        objective(&self.model, q, SelfSupLoss::SoftmaxNll, false).map(|(l, _, _)| l)
    }

    fn is_finite(&self) -> bool {
        self.model.is_finite()
    }
}

impl SelfSupModel {
    /// Loss of one question under `loss` (no mistake-skipping).
    pub fn loss(&self, q: &Question, loss: SelfSupLoss) -> Option<f64> {
        objective(self, q, loss, false).map(|(l, _, _)| l)
    }

    /// Analytic gradient in `ParamBlocks` order (dense), for checking.
    pub fn dense_gradient(&self, q: &Question, loss: SelfSupLoss) -> Vec<Vec<f64>> {
        match objective(self, q, loss, false) {
            Some((_, ds, s)) => {
                let g = self.grads_from_scores(&s, &ds);
                vec![g.a.to_dense(self.a.rows, self.p).data, vec![g.gamma]]
            }
            None => vec![vec![0.0; self.a.data.len()], vec![0.0]],
        }
    }
}

/// Pseudo-questions for LM-style training: for each query word (other than
/// the blank) that occurs in the context, a copy of the question with the
/// answer filled in and that word blanked. Originals come first.
pub fn lm_expand(questions: &[Question]) -> Vec<Question> {
    let mut out = questions.to_vec();
    for q in questions {
        let Some(blank) = q.blank_position() else { continue };
        let ctx: std::collections::HashSet<String> =
            q.context_tokens().map(|t| t.to_lowercase()).collect();
        let mut filled = q.query.clone();
        filled[blank] = q.answer.clone();
        for t in 0..filled.len() {
            if t == blank || !ctx.contains(&filled[t].to_lowercase()) {
                continue;
            }
            let mut pq = q.clone();
            pq.query = filled.clone();
            pq.answer = filled[t].clone();
            pq.query[t] = BLANK.to_string();
            out.push(pq);
        }
    }
    out
}

/// Trains a self-supervised window memory network. Consumes the same
/// (question, answer) records as the soft-attention network.
pub fn selfsup_train(
    train_qs: &[Question],
    valid_qs: &[Question],
    cfg: &SelfSupConfig,
) -> Result<(SelfSupModel, Vec<EpochStats>)> {
    cfg.validate()?;
    let vocab = Vocab::build(train_qs, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.sgd.seed);
    let model = SelfSupModel::new(cfg.b, cfg.p, cfg.mode, cfg.use_time, vocab, cfg.init_scale, &mut rng);
    selfsup_train_from(model, train_qs, valid_qs, cfg)
}

pub fn selfsup_train_from(
    model: SelfSupModel,
    train_qs: &[Question],
    valid_qs: &[Question],
    cfg: &SelfSupConfig,
) -> Result<(SelfSupModel, Vec<EpochStats>)> {
    cfg.validate()?;
    let expanded;
    let items = if cfg.mode == SelfSupMode::Lm {
        expanded = lm_expand(train_qs);
        &expanded[..]
    } else {
        train_qs
    };
    let mut t = Trainable {
        model,
        loss: cfg.loss,
        update_only_on_mistake: cfg.update_only_on_mistake,
    };
    let history = run_sgd(&mut t, items, valid_qs, &cfg.sgd)?;
    Ok((t.model, history))
}
