use std::collections::BTreeMap;

use rand::{Rng, RngCore};

use super::train::SelfSupMode;
use crate::cbt::Question;
use crate::error::{Error, Result};
use crate::features::{encode_windows, FeatureKind, Features, MemorySlots, QueryEncoding, Vocab, WindowSet};
use crate::memnn::{Checkpoint, CheckpointKind, ParamBlocks};
use crate::predict::{PredictionScores, Predictor};
use crate::tensor::{embed, Matrix, SparseRows};
use crate::util::{axpy, dot, softmax};

/// Parameters: one key/query embedding `a` over per-position window
/// features (`b * d` rows) and the slot-position scale `gamma`.
#[derive(Debug, Clone, PartialEq)]
pub struct SelfSupModel {
    pub b: usize,
    pub p: usize,
    pub mode: SelfSupMode,
    pub use_time: bool,
    pub vocab: Vocab,
    pub a: Matrix,
    pub gamma: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SelfSupGrads {
    pub a: SparseRows,
    pub gamma: f64,
}

impl SelfSupGrads {
    pub fn merge(&mut self, o: &SelfSupGrads) {
        self.a.merge(&o.a);
        self.gamma += o.gamma;
    }
}

/// Encoded question with the embeddings the scores were computed from.
pub(crate) struct Scored {
    pub mem: MemorySlots,
    pub query: Features,
    pub keys: Vec<Vec<f64>>,
    pub q: Vec<f64>,
    pub scores: Vec<f64>,
}

/// Index of the supporting memory: the highest-scoring window centred on
/// the answer, lowest index on ties. `None` when the answer has no window.
pub fn supporting_memory(q: &Question, mem: &MemorySlots, scores: &[f64]) -> Option<usize> {
    let answer = q.answer.to_lowercase();
    let mut best: Option<usize> = None;
    for (i, m) in mem.meta.iter().enumerate() {
        if m.word == answer && best.map_or(true, |b| scores[i] > scores[b]) {
            best = Some(i);
        }
    }
    best
}

/// Arg-max slot, lowest index on exact ties.
pub fn hard_select(scores: &[f64]) -> Result<usize> {
    if scores.is_empty() {
        return Err(Error::EmptyMemory);
    }
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    Ok(best)
}

/// Per-candidate log-domain scores from window scores: soft sums window
/// probabilities (log of the sum), hard takes the best window score.
/// Candidates without windows get `-inf`.
pub fn aggregate_candidates(mem: &MemorySlots, scores: &[f64], n: usize, soft: bool) -> Vec<f64> {
    let mut out = vec![f64::NEG_INFINITY; n];
    if soft {
        let alphas = softmax(scores);
        let mut mass = vec![0.0; n];
        for (m, a) in mem.meta.iter().zip(&alphas) {
            if let Some(c) = m.candidate {
                mass[c] += a;
            }
        }
        for c in 0..n {
            if mass[c] > 0.0 {
                out[c] = mass[c].ln();
            }
        }
    } else {
        for (m, &s) in mem.meta.iter().zip(scores) {
            if let Some(c) = m.candidate {
                out[c] = out[c].max(s);
            }
        }
    }
    out
}

/// Test-time scoring switches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScoringOptions {
    /// Sum softmaxed window scores per candidate (otherwise: best window).
    pub soft: bool,
    /// Drop candidates that also appear in the query outside the blank.
    pub exclude_query_cooccurrences: bool,
}

impl Default for ScoringOptions {
    fn default() -> Self {
        ScoringOptions {
            soft: true,
            exclude_query_cooccurrences: false,
        }
    }
}

impl SelfSupModel {
    pub fn new<R: Rng>(
        b: usize,
        p: usize,
        mode: SelfSupMode,
        use_time: bool,
        vocab: Vocab,
        init_scale: f64,
        rng: &mut R,
    ) -> Self {
        let rows = FeatureKind::PerPosition(b).dim(vocab.len());
        SelfSupModel {
            b,
            p,
            mode,
            use_time,
            a: Matrix::uniform(rows, p, init_scale, rng),
            gamma: 0.0,
            vocab,
        }
    }

    pub fn window_set(&self) -> WindowSet {
        match self.mode {
            SelfSupMode::CandidateWindows => WindowSet::Candidates,
            _ => WindowSet::All,
        }
    }

    pub fn encode(&self, q: &Question) -> (MemorySlots, Features) {
        let (mem, query) = encode_windows(
            q,
            self.b,
            &self.vocab,
            FeatureKind::PerPosition(self.b),
            self.window_set(),
        );
        let QueryEncoding::Features(f) = query else {
            unreachable!("window queries are feature bags")
        };
        (mem, f)
    }

    pub(crate) fn score(&self, q: &Question) -> Scored {
        let (mem, query) = self.encode(q);
        let qv = embed(&self.a, &query);
        let keys: Vec<Vec<f64>> = mem.slots.iter().map(|f| embed(&self.a, f)).collect();
        let scores = keys
            .iter()
            .enumerate()
            .map(|(i, c)| dot(c, &qv) + self.time_term(i))
            .collect();
        Scored {
            mem,
            query,
            keys,
            q: qv,
            scores,
        }
    }

    fn time_term(&self, i: usize) -> f64 {
        if self.use_time {
            self.gamma * (i + 1) as f64
        } else {
            0.0
        }
    }

    /// Window scores `(A phi_i) . (A phi_q) + gamma i`.
    pub fn window_scores(&self, q: &Question) -> (MemorySlots, Vec<f64>) {
        let s = self.score(q);
        (s.mem, s.scores)
    }

    /// Gradient of a loss given its derivative w.r.t. each window score.
    pub(crate) fn grads_from_scores(&self, s: &Scored, dscores: &[f64]) -> SelfSupGrads {
        let mut g = SelfSupGrads::default();
        let mut dq = vec![0.0; self.p];
        for (i, &ds) in dscores.iter().enumerate() {
            if ds == 0.0 {
                continue;
            }
            let dkey: Vec<f64> = s.q.iter().map(|x| ds * x).collect();
            g.a.add_embed(&s.mem.slots[i], &dkey);
            axpy(ds, &s.keys[i], &mut dq);
            if self.use_time {
                g.gamma += ds * (i + 1) as f64;
            }
        }
        g.a.add_embed(&s.query, &dq);
        g
    }

    pub fn apply(&mut self, g: &SelfSupGrads, lr: f64) {
        g.a.apply(&mut self.a, lr);
        if self.use_time {
            self.gamma -= lr * g.gamma;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.gamma.is_finite()
    }

    /// Per-candidate scores in the log domain (`-inf` for candidates with
    /// no window). Soft: log of the summed window probabilities. Hard: the
    /// best window's score. In the all-targets mode a candidate's logit is
    /// its best window score either way.
    pub fn candidate_scores(&self, q: &Question, opts: ScoringOptions) -> (Vec<f64>, bool) {
        let (mem, scores) = self.window_scores(q);
        let soft = opts.soft && self.mode != SelfSupMode::AllTargets;
        let mut out = aggregate_candidates(&mem, &scores, q.candidates.len(), soft);
        let n = q.candidates.len();
        let mut fallback = false;
        if opts.exclude_query_cooccurrences {
            let blank = q.blank_position();
            let in_query: Vec<String> = q
                .query
                .iter()
                .enumerate()
                .filter(|(i, _)| Some(*i) != blank)
                .map(|(_, w)| w.to_lowercase())
                .collect();
            let keep: Vec<bool> = q
                .candidates
                .iter()
                .map(|c| !in_query.contains(&c.to_lowercase()))
                .collect();
            if keep.iter().any(|&k| k) {
                for c in 0..n {
                    if !keep[c] {
                        out[c] = f64::NEG_INFINITY;
                    }
                }
            } else {
                fallback = true;
                log::debug!("co-occurrence filter removed every candidate; ignoring it");
            }
        }
        (out, fallback)
    }

    pub fn predict_with(&self, q: &Question, opts: ScoringOptions, rng: &mut dyn RngCore) -> PredictionScores {
        let (scores, fallback) = self.candidate_scores(q, opts);
        let mut p = PredictionScores::from_scores(scores, rng);
        p.filter_fallback = fallback;
        p
    }

    /// Soft candidate mass (window probabilities summed per candidate).
    pub fn candidate_mass(&self, q: &Question) -> Vec<f64> {
        let (mem, scores) = self.window_scores(q);
        let alphas = softmax(&scores);
        let mut mass = vec![0.0; q.candidates.len()];
        for (i, m) in mem.meta.iter().enumerate() {
            if let Some(c) = m.candidate {
                mass[c] += alphas[i];
            }
        }
        mass
    }

    pub fn name(&self) -> String {
        format!("selfsup-window(b={})", self.b)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut ck = Checkpoint::new(CheckpointKind::SelfSup, self.vocab.clone());
        ck.set("b", self.b);
        ck.set("p", self.p);
        ck.set("mode", self.mode.name());
        ck.set("use_time", self.use_time);
        ck.set("gamma", self.gamma);
        ck.matrices.push(("A".into(), self.a.clone()));
        ck
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        ck.expect_kind(CheckpointKind::SelfSup)?;
        let m = SelfSupModel {
            b: ck.get("b")?,
            p: ck.get("p")?,
            mode: ck.get("mode")?,
            use_time: ck.get("use_time")?,
            vocab: ck.vocab.clone(),
            a: ck.matrix("A")?.clone(),
            gamma: ck.get("gamma")?,
        };
        if m.a.rows != m.b * m.vocab.len() || m.a.cols != m.p {
            return Err(Error::Checkpoint("matrix shapes do not match the hyperparameters".into()));
        }
        Ok(m)
    }

    /// Distinct window centre words with their best window (all-targets
    /// scoring), in first-occurrence order.
    pub(crate) fn best_window_per_word(mem: &MemorySlots, scores: &[f64]) -> Vec<(String, usize)> {
        let mut best: BTreeMap<&str, usize> = BTreeMap::new();
        let mut order = Vec::new();
        for (i, m) in mem.meta.iter().enumerate() {
            match best.get(m.word.as_str()) {
                Some(&j) if scores[j] >= scores[i] => {}
                Some(_) => {
                    best.insert(&m.word, i);
                }
                None => {
                    best.insert(&m.word, i);
                    order.push(m.word.as_str());
                }
            }
        }
        order.into_iter().map(|w| (w.to_string(), best[w])).collect()
    }
}

impl ParamBlocks for SelfSupModel {
    fn blocks_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        vec![
            ("A", &mut self.a.data[..]),
            ("gamma", std::slice::from_mut(&mut self.gamma)),
        ]
    }
}

/// A self-supervised model with fixed test-time scoring options.
pub struct SelfSupPredictor<'a> {
    pub model: &'a SelfSupModel,
    pub opts: ScoringOptions,
}

impl Predictor for SelfSupPredictor<'_> {
    fn name(&self) -> String {
        let mut n = self.model.name();
        if !self.opts.soft {
            n.push_str("-hard");
        }
        if self.opts.exclude_query_cooccurrences {
            n.push_str("-excl");
        }
        n
    }

    fn predict(&self, q: &Question, rng: &mut dyn RngCore) -> PredictionScores {
        self.model.predict_with(q, self.opts, rng)
    }
}

impl Predictor for SelfSupModel {
    fn name(&self) -> String {
        SelfSupModel::name(self)
    }

    fn predict(&self, q: &Question, rng: &mut dyn RngCore) -> PredictionScores {
        self.predict_with(q, ScoringOptions::default(), rng)
    }
}
