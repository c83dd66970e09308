use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cbt::Question;
use crate::error::{Error, Result};
use crate::features::{encode_input, Features, InputEncoding, Vocab, NIL, UNK};
use crate::memnn::{Checkpoint, CheckpointKind, ParamBlocks};
use crate::predict::{PredictionScores, Predictor};
use crate::sgd::{run_sgd, EpochStats, SgdConfig, SgdModel};
use crate::tensor::{embed, Matrix, Rank1Sum, SparseRows};
use crate::util::softmax;

/// Zero-hop bilinear scorer `S(x, w) = (A phi(x)) . (B e_w)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    pub encoding: InputEncoding,
    pub p: usize,
    pub vocab: Vocab,
    /// Input embedding, one row per input feature.
    pub a: Matrix,
    /// Output embedding, one row per word.
    pub b: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingConfig {
    pub encoding: InputEncoding,
    pub p: usize,
    pub init_scale: f64,
    pub sgd: SgdConfig,
}

impl EmbeddingConfig {
    /// p=300; lr 0.005 for the plain window encoding, 0.01 otherwise.
    pub fn for_encoding(encoding: InputEncoding) -> Self {
        let lr = match encoding {
            InputEncoding::Window(_) => 0.005,
            _ => 0.01,
        };
        EmbeddingConfig {
            encoding,
            p: 300,
            init_scale: 0.1,
            sgd: SgdConfig {
                lr,
                epochs: 10,
                batch_size: 1,
                seed: 0,
                anneal: true,
            },
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmbeddingGrads {
    pub a: SparseRows,
    pub b: Rank1Sum,
}

impl EmbeddingModel {
    pub fn new<R: Rng>(encoding: InputEncoding, p: usize, vocab: Vocab, init_scale: f64, rng: &mut R) -> Self {
        let d = vocab.len();
        EmbeddingModel {
            encoding,
            p,
            a: Matrix::uniform(encoding.dim(d), p, init_scale, rng),
            b: Matrix::uniform(d, p, init_scale, rng),
            vocab,
        }
    }

    pub fn input(&self, q: &Question) -> Features {
        encode_input(q, self.encoding, &self.vocab)
    }

    /// Scores of every word; the padding word is excluded.
    pub fn logits(&self, x: &Features) -> (Vec<f64>, Vec<f64>) {
        let u = embed(&self.a, x);
        let mut s = self.b.matvec(&u);
        s[NIL] = f64::NEG_INFINITY;
        (u, s)
    }

    pub fn loss_and_grads(&self, q: &Question) -> (f64, EmbeddingGrads) {
        let x = self.input(q);
        let (u, s) = self.logits(&x);
        let target = self.vocab.id(&q.answer);
        let mut probs = softmax(&s);
        let loss = -probs[target].ln();
        probs[target] -= 1.0;
        let du = self.b.matvec_t(&probs);
        let mut g = EmbeddingGrads::default();
        g.a.add_embed(&x, &du);
        g.b.push(probs, u);
        (loss, g)
    }

    pub fn loss(&self, q: &Question) -> f64 {
        let (_, s) = self.logits(&self.input(q));
        -softmax(&s)[self.vocab.id(&q.answer)].ln()
    }

    pub fn dense_gradient(&self, q: &Question) -> Vec<Vec<f64>> {
        let (_, g) = self.loss_and_grads(q);
        vec![g.a.to_dense(self.a.rows, self.p).data, g.b.to_dense(self.b.rows, self.p).data]
    }

    pub fn candidate_scores(&self, q: &Question) -> (Vec<f64>, Vec<usize>) {
        let (_, s) = self.logits(&self.input(q));
        let ids: Vec<usize> = q.candidates.iter().map(|c| self.vocab.id(c)).collect();
        let unk = (0..ids.len()).filter(|&i| ids[i] == UNK).collect();
        (ids.iter().map(|&i| s[i]).collect(), unk)
    }

    pub fn name(&self) -> String {
        format!("embedding({})", self.encoding.name())
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut ck = Checkpoint::new(CheckpointKind::Embedding, self.vocab.clone());
        ck.set("encoding", encoding_param(self.encoding));
        ck.set("p", self.p);
        ck.matrices.push(("A".into(), self.a.clone()));
        ck.matrices.push(("B".into(), self.b.clone()));
        ck
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        ck.expect_kind(CheckpointKind::Embedding)?;
        let encoding = parse_encoding(&ck.get::<String>("encoding")?)?;
        let m = EmbeddingModel {
            encoding,
            p: ck.get("p")?,
            vocab: ck.vocab.clone(),
            a: ck.matrix("A")?.clone(),
            b: ck.matrix("B")?.clone(),
        };
        let d = m.vocab.len();
        if m.a.rows != encoding.dim(d) || m.b.rows != d || m.a.cols != m.p || m.b.cols != m.p {
            return Err(Error::Checkpoint("matrix shapes do not match the hyperparameters".into()));
        }
        Ok(m)
    }
}

pub(crate) fn encoding_param(e: InputEncoding) -> String {
    match e {
        InputEncoding::ContextPlusQuery => "context_query".into(),
        InputEncoding::Query => "query".into(),
        InputEncoding::Window(b) => format!("window:{b}"),
        InputEncoding::WindowPosition(b) => format!("window_position:{b}"),
    }
}

pub fn parse_encoding(s: &str) -> Result<InputEncoding> {
    let (name, arg) = s.split_once(':').unwrap_or((s, "5"));
    let b: usize = arg
        .parse()
        .map_err(|_| Error::Config(format!("bad window size in {s:?}")))?;
    match name {
        "context_query" => Ok(InputEncoding::ContextPlusQuery),
        "query" => Ok(InputEncoding::Query),
        "window" => Ok(InputEncoding::Window(b)),
        "window_position" => Ok(InputEncoding::WindowPosition(b)),
        _ => Err(Error::Config(format!("unknown input encoding {s:?}"))),
    }
}

impl ParamBlocks for EmbeddingModel {
    fn blocks_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        vec![("A", &mut self.a.data[..]), ("B", &mut self.b.data[..])]
    }
}

impl SgdModel for EmbeddingModel {
    type Item = Question;
    type Grads = EmbeddingGrads;

    fn grads(&self, q: &Question) -> Option<(f64, EmbeddingGrads)> {
        Some(self.loss_and_grads(q))
    }

    fn merge(acc: &mut EmbeddingGrads, g: EmbeddingGrads) {
        acc.a.merge(&g.a);
        acc.b.merge(&g.b);
    }

    fn apply(&mut self, g: &EmbeddingGrads, lr: f64) {
        g.a.apply(&mut self.a, lr);
        g.b.apply(&mut self.b, lr);
    }

    fn loss(&self, q: &Question) -> Option<f64> {
        Some(EmbeddingModel::loss(self, q))
    }

    fn is_finite(&self) -> bool {
        self.a.is_finite() && self.b.is_finite()
    }
}

impl Predictor for EmbeddingModel {
    fn name(&self) -> String {
        EmbeddingModel::name(self)
    }

    fn predict(&self, q: &Question, rng: &mut dyn RngCore) -> PredictionScores {
        let (scores, unk) = self.candidate_scores(q);
        let mut p = PredictionScores::from_scores(scores, rng);
        p.unk_candidates = unk;
        p
    }
}

/// Trains an embedding model with full-vocabulary softmax cross-entropy.
pub fn embed_train(
    train_qs: &[Question],
    valid_qs: &[Question],
    cfg: &EmbeddingConfig,
) -> Result<(EmbeddingModel, Vec<EpochStats>)> {
    let vocab = Vocab::build(train_qs, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.sgd.seed);
    let mut m = EmbeddingModel::new(cfg.encoding, cfg.p, vocab, cfg.init_scale, &mut rng);
    let hist = run_sgd(&mut m, train_qs, valid_qs, &cfg.sgd)?;
    Ok((m, hist))
}
