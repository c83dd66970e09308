use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::{Grads, MemN2N, MemN2NShape};
use crate::cbt::Question;
use crate::error::Result;
use crate::features::Vocab;
use crate::sgd::{run_sgd, SgdConfig, SgdModel};

pub use crate::sgd::EpochStats;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub shape: MemN2NShape,
    pub sgd: SgdConfig,
    pub init_scale: f64,
    /// Lexical format: also train on each query word after the blank.
    pub continuation_targets: bool,
}

impl TrainConfig {
    /// Defaults for a shape: learning rate per memory format (lexical 0.01,
    /// window 0.005, sentential 0.001), one example per update, init scale 0.1.
    pub fn for_shape(shape: MemN2NShape) -> Self {
        use super::MemoryFormat::*;
        let lr = match shape.format {
            Lexical { .. } => 0.01,
            Window { .. } => 0.005,
            Sentential => 0.001,
        };
        TrainConfig {
            shape,
            sgd: SgdConfig {
                lr,
                epochs: 10,
                batch_size: 1,
                seed: 0,
                anneal: true,
            },
            init_scale: 0.1,
            continuation_targets: matches!(shape.format, Lexical { .. }),
        }
    }
}

/// Training wrapper that carries the example-construction flag.
pub(crate) struct Trainable {
    pub model: MemN2N,
    pub continuation_targets: bool,
}

impl SgdModel for Trainable {
    type Item = Question;
    type Grads = Grads;

    fn grads(&self, q: &Question) -> Option<(f64, Grads)> {
        let mut total = 0.0;
        let mut acc: Option<Grads> = None;
        for ex in self.model.examples(q, self.continuation_targets) {
            let (l, g) = self.model.backward(&ex);
            total += l;
            match acc.as_mut() {
                Some(a) => a.merge(&g),
                None => acc = Some(g),
            }
        }
        acc.map(|g| (total, g))
    }

    fn merge(acc: &mut Grads, g: Grads) {
        acc.merge(&g);
    }

    fn apply(&mut self, g: &Grads, lr: f64) {
        self.model.apply(g, lr);
    }

    fn loss(&self, q: &Question) -> Option<f64> {
        let ex = self.model.examples(q, false).into_iter().next()?;
        Some(self.model.loss(&ex))
    }

    fn is_finite(&self) -> bool {
        self.model.is_finite()
    }
}

/// Trains a memory network from scratch; the vocabulary comes from the
/// training questions.
pub fn train(
    train_qs: &[Question],
    valid_qs: &[Question],
    cfg: &TrainConfig,
) -> Result<(MemN2N, Vec<EpochStats>)> {
    let vocab = Vocab::build(train_qs, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.sgd.seed);
    let model = MemN2N::new(cfg.shape, vocab, cfg.init_scale, &mut rng);
    train_from(model, train_qs, valid_qs, cfg)
}

/// Continues training an existing model.
pub fn train_from(
    model: MemN2N,
    train_qs: &[Question],
    valid_qs: &[Question],
    cfg: &TrainConfig,
) -> Result<(MemN2N, Vec<EpochStats>)> {
    let mut t = Trainable {
        model,
        continuation_targets: cfg.continuation_targets,
    };
    let history = run_sgd(&mut t, train_qs, valid_qs, &cfg.sgd)?;
    Ok((t.model, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cbt::testutil::toy_question;
    use crate::memnn::MemoryFormat;
    use crate::predict::Predictor;

    fn small(format: MemoryFormat) -> TrainConfig {
        let mut cfg = TrainConfig::for_shape(MemN2NShape {
            format,
            p: 16,
            hops: 1,
            relu_half: false,
            use_time: true,
        });
        cfg.sgd.lr = 0.5;
        cfg.sgd.epochs = 200;
        cfg.sgd.batch_size = 1;
        cfg.sgd.anneal = false;
        cfg
    }

    #[test]
    fn overfits_a_single_question() {
        for format in [
            MemoryFormat::Window { b: 5 },
            MemoryFormat::Sentential,
            MemoryFormat::Lexical { n_max: 20 },
        ] {
            let q = toy_question();
            let (m, hist) = train(std::slice::from_ref(&q), &[], &small(format)).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            assert_eq!(m.predict(&q, &mut rng).predicted, 3, "{format:?}");
            assert!(hist.last().unwrap().train_loss < hist[0].train_loss);
        }
    }

    #[test]
    fn zero_learning_rate_is_identity() {
        let q = toy_question();
        let mut cfg = small(MemoryFormat::Window { b: 3 });
        cfg.sgd.lr = 0.0;
        cfg.sgd.epochs = 1;
        let vocab = Vocab::build([&q], 1);
        let m0 = MemN2N::new(cfg.shape, vocab, 0.1, &mut ChaCha8Rng::seed_from_u64(4));
        let (m1, _) = train_from(m0.clone(), &[q], &[], &cfg).unwrap();
        assert_eq!(m0, m1);
    }
}
