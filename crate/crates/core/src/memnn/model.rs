use rand::Rng;

use crate::cbt::Question;
use crate::error::{Error, Result};
use crate::features::{
    encode_lexical, encode_lexical_words, encode_sentential, encode_windows, preceding_words,
    FeatureKind, MemorySlots, QueryEncoding, Vocab, WindowSet, NIL,
};
use crate::predict::{PredictionScores, Predictor};
use crate::tensor::{embed, Matrix, Rank1Sum, SparseRows};
use crate::util::{axpy, dot, softmax};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MemoryFormat {
    Lexical { n_max: usize },
    Window { b: usize },
    Sentential,
}

impl MemoryFormat {
    pub fn name(self) -> String {
        match self {
            MemoryFormat::Lexical { n_max } => format!("lexical(n={n_max})"),
            MemoryFormat::Window { b } => format!("window(b={b})"),
            MemoryFormat::Sentential => "sentential+pe".into(),
        }
    }

    pub fn feature_kind(self) -> FeatureKind {
        match self {
            MemoryFormat::Window { b } => FeatureKind::PerPosition(b),
            MemoryFormat::Sentential => FeatureKind::PositionalEncoding,
            MemoryFormat::Lexical { .. } => FeatureKind::BagOfWords,
        }
    }
}

/// Architecture hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemN2NShape {
    pub format: MemoryFormat,
    pub p: usize,
    pub hops: usize,
    /// Clamp the upper half of the controller state at zero after each hop.
    pub relu_half: bool,
    /// Scalar slot-position term (window and sentential formats) or time
    /// embeddings (lexical format).
    pub use_time: bool,
}

impl MemN2NShape {
    pub fn lexical_default() -> Self {
        MemN2NShape {
            format: MemoryFormat::Lexical { n_max: 200 },
            p: 200,
            hops: 7,
            relu_half: true,
            use_time: true,
        }
    }

    pub fn window_default() -> Self {
        MemN2NShape {
            format: MemoryFormat::Window { b: 5 },
            p: 100,
            hops: 1,
            relu_half: false,
            use_time: true,
        }
    }

    pub fn sentential_default() -> Self {
        MemN2NShape {
            format: MemoryFormat::Sentential,
            p: 100,
            hops: 1,
            relu_half: false,
            use_time: true,
        }
    }
}

/// Parameters. `a` and `b` are embedding tables with one row per input
/// feature (`b * d` rows for per-position windows), `h` is `p x p`, `u` is
/// `d x p`.
#[derive(Debug, Clone, PartialEq)]
pub struct MemN2N {
    pub shape: MemN2NShape,
    pub vocab: Vocab,
    pub a: Matrix,
    pub b: Matrix,
    pub h: Matrix,
    pub u: Matrix,
    pub gamma: f64,
    pub time_a: Matrix,
    pub time_b: Matrix,
}

/// One encoded training or scoring instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub memory: MemorySlots,
    pub query: QueryEncoding,
    pub target: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionResult {
    pub alphas: Vec<f64>,
    pub m_o: Vec<f64>,
}

/// Soft attention: `alpha = softmax(c_i . q + time_i)`, `m_o = sum alpha_i m_i`.
pub fn attend(q: &[f64], keys: &[Vec<f64>], values: &[Vec<f64>], time: &[f64]) -> Result<AttentionResult> {
    if keys.is_empty() {
        return Err(Error::EmptyMemory);
    }
    let scores: Vec<f64> = keys
        .iter()
        .zip(time)
        .map(|(c, t)| dot(c, q) + t)
        .collect();
    let alphas = softmax(&scores);
    let mut m_o = vec![0.0; q.len()];
    for (a, m) in alphas.iter().zip(values) {
        axpy(*a, m, &mut m_o);
    }
    Ok(AttentionResult { alphas, m_o })
}

/// Forward activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct Forward {
    pub keys: Vec<Vec<f64>>,
    pub values: Vec<Vec<f64>>,
    /// Controller states `q^1 .. q^{K+1}`.
    pub states: Vec<Vec<f64>>,
    /// Pre-activation `H q^k + o^k` per hop.
    pub pre: Vec<Vec<f64>>,
    pub alphas: Vec<Vec<f64>>,
    pub probs: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Grads {
    pub a: SparseRows,
    pub b: SparseRows,
    pub h: Vec<f64>,
    pub u: Rank1Sum,
    pub gamma: f64,
    pub time_a: SparseRows,
    pub time_b: SparseRows,
}

impl Grads {
    pub fn merge(&mut self, o: &Grads) {
        self.a.merge(&o.a);
        self.b.merge(&o.b);
        if self.h.is_empty() {
            self.h = vec![0.0; o.h.len()];
        }
        axpy(1.0, &o.h, &mut self.h);
        self.u.merge(&o.u);
        self.gamma += o.gamma;
        self.time_a.merge(&o.time_a);
        self.time_b.merge(&o.time_b);
    }
}

impl MemN2N {
    pub fn new<R: Rng>(shape: MemN2NShape, vocab: Vocab, init_scale: f64, rng: &mut R) -> Self {
        let d = vocab.len();
        let p = shape.p;
        let input_dim = shape.format.feature_kind().dim(d);
        let n_time = match shape.format {
            MemoryFormat::Lexical { n_max } if shape.use_time => n_max,
            _ => 0,
        };
        MemN2N {
            shape,
            a: Matrix::uniform(input_dim, p, init_scale, rng),
            b: Matrix::uniform(input_dim, p, init_scale, rng),
            h: Matrix::uniform(p, p, init_scale, rng),
            u: Matrix::uniform(d, p, init_scale, rng),
            gamma: 0.0,
            time_a: Matrix::uniform(n_time, p, init_scale, rng),
            time_b: Matrix::uniform(n_time, p, init_scale, rng),
            vocab,
        }
    }

    pub fn p(&self) -> usize {
        self.shape.p
    }

    pub fn d(&self) -> usize {
        self.vocab.len()
    }

    fn is_lexical(&self) -> bool {
        matches!(self.shape.format, MemoryFormat::Lexical { .. })
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite()
            && self.b.is_finite()
            && self.h.is_finite()
            && self.u.is_finite()
            && self.gamma.is_finite()
            && self.time_a.is_finite()
            && self.time_b.is_finite()
    }

    /// Memory and query encoding of a question (never reads the answer).
    pub fn encode(&self, q: &Question) -> (MemorySlots, QueryEncoding) {
        match self.shape.format {
            MemoryFormat::Lexical { n_max } => encode_lexical(q, n_max, &self.vocab),
            MemoryFormat::Window { b } => encode_windows(
                q,
                b,
                &self.vocab,
                FeatureKind::PerPosition(b),
                WindowSet::Candidates,
            ),
            MemoryFormat::Sentential => encode_sentential(q, &self.vocab),
        }
    }

    /// Training examples for a question: the blank, plus (lexical format
    /// with `continuation_targets`) every query word after it.
    pub fn examples(&self, q: &Question, continuation_targets: bool) -> Vec<Example> {
        let (memory, query) = self.encode(q);
        let mut out = vec![Example {
            memory,
            query,
            target: self.vocab.id(&q.answer),
        }];
        if continuation_targets {
            if let MemoryFormat::Lexical { n_max } = self.shape.format {
                let blank = q.blank_position().unwrap_or(0);
                let mut filled = q.clone();
                filled.query[blank] = q.answer.clone();
                for t in blank + 1..q.query.len() {
                    let (memory, query) = self.lexical_memory_before(&filled, t, n_max);
                    out.push(Example {
                        memory,
                        query,
                        target: self.vocab.id(&q.query[t]),
                    });
                }
            }
        }
        out
    }

    fn lexical_memory_before(&self, q: &Question, t: usize, n_max: usize) -> (MemorySlots, QueryEncoding) {
        let mut cut = q.clone();
        cut.query.truncate(t);
        cut.query.push(crate::cbt::BLANK.to_string());
        let words = preceding_words(&cut, n_max);
        let cands: Vec<String> = q.candidates.iter().map(|c| c.to_lowercase()).collect();
        (
            encode_lexical_words(&words, &self.vocab, &cands),
            QueryEncoding::Constant(crate::features::LEXICAL_QUERY_CONSTANT),
        )
    }

    fn slot_embeddings(&self, mem: &MemorySlots) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let n = mem.len();
        let mut keys = Vec::with_capacity(n);
        let mut values = Vec::with_capacity(n);
        let timed = self.is_lexical() && self.time_a.rows > 0;
        for (i, f) in mem.slots.iter().enumerate() {
            let mut c = embed(&self.a, f);
            let mut m = embed(&self.b, f);
            if timed {
                let t = n - 1 - i;
                axpy(1.0, self.time_a.row(t), &mut c);
                axpy(1.0, self.time_b.row(t), &mut m);
            }
            keys.push(c);
            values.push(m);
        }
        (keys, values)
    }

    /// Additive score term per slot: `gamma * i` for 1-based position `i`.
    fn time_scores(&self, n: usize) -> Vec<f64> {
        if self.shape.use_time && !self.is_lexical() {
            (1..=n).map(|i| self.gamma * i as f64).collect()
        } else {
            vec![0.0; n]
        }
    }

    pub fn initial_state(&self, query: &QueryEncoding) -> Vec<f64> {
        match query {
            QueryEncoding::Features(f) => embed(&self.a, f),
            QueryEncoding::Constant(v) => vec![*v; self.p()],
        }
    }

    fn relu_upper(&self, v: &mut [f64]) {
        if self.shape.relu_half {
            let half = v.len() / 2;
            for x in &mut v[half..] {
                *x = x.max(0.0);
            }
        }
    }

    /// Runs all hops and the answer distribution. The padding word never
    /// receives probability.
    pub fn forward(&self, mem: &MemorySlots, query: &QueryEncoding) -> Forward {
        let (keys, values) = self.slot_embeddings(mem);
        let time = self.time_scores(mem.len());
        let mut states = vec![self.initial_state(query)];
        let mut pre = Vec::with_capacity(self.shape.hops);
        let mut alphas = Vec::with_capacity(self.shape.hops);
        if mem.is_empty() {
            log::debug!("empty memory: answering from the query alone");
        }
        for _ in 0..self.shape.hops {
            let q = states.last().expect("non-empty");
            let mut u = self.h.matvec(q);
            match attend(q, &keys, &values, &time) {
                Ok(att) => {
                    axpy(1.0, &att.m_o, &mut u);
                    alphas.push(att.alphas);
                }
                Err(_) => alphas.push(Vec::new()),
            }
            let mut next = u.clone();
            self.relu_upper(&mut next);
            pre.push(u);
            states.push(next);
        }
        let mut logits = self.u.matvec(states.last().expect("non-empty"));
        logits[NIL] = f64::NEG_INFINITY;
        let probs = softmax(&logits);
        Forward {
            keys,
            values,
            states,
            pre,
            alphas,
            probs,
        }
    }

    pub fn loss(&self, ex: &Example) -> f64 {
        -self.forward(&ex.memory, &ex.query).probs[ex.target].ln()
    }

    /// Cross-entropy loss and its gradient for one example.
    pub fn backward(&self, ex: &Example) -> (f64, Grads) {
        let fw = self.forward(&ex.memory, &ex.query);
        let p = self.p();
        let loss = -fw.probs[ex.target].ln();
        let mut g = Grads {
            h: vec![0.0; p * p],
            ..Default::default()
        };

        let mut dlogits = fw.probs.clone();
        dlogits[ex.target] -= 1.0;
        let top = fw.states.last().expect("non-empty");
        let mut dq = self.u.matvec_t(&dlogits);
        g.u.push(dlogits, top.clone());

        let n = ex.memory.len();
        let mut dkeys = vec![vec![0.0; p]; n];
        let mut dvalues = vec![vec![0.0; p]; n];
        for k in (0..self.shape.hops).rev() {
            // through the ReLU on the upper half
            let mut du = dq;
            if self.shape.relu_half {
                let half = p / 2;
                for j in half..p {
                    if fw.pre[k][j] <= 0.0 {
                        du[j] = 0.0;
                    }
                }
            }
            let qk = &fw.states[k];
            for r in 0..p {
                if du[r] != 0.0 {
                    axpy(du[r], qk, &mut g.h[r * p..(r + 1) * p]);
                }
            }
            let mut dqk = self.h.matvec_t(&du);
            let alphas = &fw.alphas[k];
            if !alphas.is_empty() {
                let dalpha: Vec<f64> = fw.values.iter().map(|m| dot(m, &du)).collect();
                let mean: f64 = alphas.iter().zip(&dalpha).map(|(a, d)| a * d).sum();
                for i in 0..n {
                    axpy(alphas[i], &du, &mut dvalues[i]);
                    let ds = alphas[i] * (dalpha[i] - mean);
                    axpy(ds, qk, &mut dkeys[i]);
                    axpy(ds, &fw.keys[i], &mut dqk);
                    if self.shape.use_time && !self.is_lexical() {
                        g.gamma += ds * (i + 1) as f64;
                    }
                }
            }
            dq = dqk;
        }
        if let QueryEncoding::Features(f) = &ex.query {
            g.a.add_embed(f, &dq);
        }
        let timed = self.is_lexical() && self.time_a.rows > 0;
        for (i, f) in ex.memory.slots.iter().enumerate() {
            g.a.add_embed(f, &dkeys[i]);
            g.b.add_embed(f, &dvalues[i]);
            if timed {
                g.time_a.add_row(n - 1 - i, &dkeys[i], 1.0);
                g.time_b.add_row(n - 1 - i, &dvalues[i], 1.0);
            }
        }
        (loss, g)
    }

    /// `params -= lr * grads`
    pub fn apply(&mut self, g: &Grads, lr: f64) {
        g.a.apply(&mut self.a, lr);
        g.b.apply(&mut self.b, lr);
        if !g.h.is_empty() {
            axpy(-lr, &g.h, &mut self.h.data);
        }
        g.u.apply(&mut self.u, lr);
        self.gamma -= lr * g.gamma;
        g.time_a.apply(&mut self.time_a, lr);
        g.time_b.apply(&mut self.time_b, lr);
    }

    /// Full-vocabulary answer distribution for a question.
    pub fn answer_distribution(&self, q: &Question) -> Vec<f64> {
        let (mem, query) = self.encode(q);
        self.forward(&mem, &query).probs
    }

    /// Candidate scores (log-probabilities). For the lexical format the
    /// score adds the log-probability of each query word after the blank,
    /// predicted in turn with the candidate filled in.
    pub fn candidate_scores(&self, q: &Question) -> (Vec<f64>, Vec<usize>, Vec<f64>) {
        let probs = self.answer_distribution(q);
        let ids: Vec<usize> = q.candidates.iter().map(|c| self.vocab.id(c)).collect();
        let unk: Vec<usize> = ids
            .iter()
            .enumerate()
            .filter(|(_, &id)| id == crate::features::UNK)
            .map(|(i, _)| i)
            .collect();
        let mut scores: Vec<f64> = ids.iter().map(|&id| probs[id].ln()).collect();
        if let MemoryFormat::Lexical { n_max } = self.shape.format {
            let blank = q.blank_position().unwrap_or(0);
            for (ci, c) in q.candidates.iter().enumerate() {
                let mut filled = q.clone();
                filled.query[blank] = c.clone();
                for t in blank + 1..q.query.len() {
                    let (mem, query) = self.lexical_memory_before(&filled, t, n_max);
                    let pr = self.forward(&mem, &query).probs;
                    scores[ci] += pr[self.vocab.id(&q.query[t])].ln();
                }
            }
        }
        (scores, unk, probs)
    }

    pub fn name(&self) -> String {
        format!("memnn-{}", self.shape.format.name())
    }
}

impl Predictor for MemN2N {
    fn name(&self) -> String {
        MemN2N::name(self)
    }

    fn predict(&self, q: &Question, rng: &mut dyn rand::RngCore) -> PredictionScores {
        let (scores, unk, probs) = self.candidate_scores(q);
        let mut out = PredictionScores::from_scores(scores, rng);
        out.unk_candidates = unk;
        out.distribution = Some(probs);
        out
    }
}
