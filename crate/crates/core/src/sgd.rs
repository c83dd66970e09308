//! Minibatch SGD driver shared by every trained model.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::util::derive_seed;

/// A model trainable by plain SGD on per-item gradients.
pub trait SgdModel: Sync {
    type Item: Sync;
    type Grads: Send;

    /// Loss and gradient for one item; `None` skips the item (no update).
    fn grads(&self, item: &Self::Item) -> Option<(f64, Self::Grads)>;

    fn merge(acc: &mut Self::Grads, g: Self::Grads);

    /// `params -= lr * g`
    fn apply(&mut self, g: &Self::Grads, lr: f64);

    /// Loss without gradient, for validation.
    fn loss(&self, item: &Self::Item) -> Option<f64>;

    fn is_finite(&self) -> bool;
}

#[derive(Debug, Clone, PartialEq)]
pub struct SgdConfig {
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Halve the learning rate when validation loss does not improve.
    pub anneal: bool,
}

impl SgdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr >= 0.0) || !self.lr.is_finite() {
            return Err(Error::Config(format!("learning rate {} must be >= 0", self.lr)));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub valid_loss: Option<f64>,
    pub updates: usize,
    pub skipped: usize,
}

fn mean_loss<M: SgdModel>(model: &M, items: &[M::Item]) -> Option<f64> {
    let losses: Vec<f64> = items.par_iter().filter_map(|i| model.loss(i)).collect();
    (!losses.is_empty()).then(|| losses.iter().sum::<f64>() / losses.len() as f64)
}

/// Runs `cfg.epochs` passes over `train` in a seeded shuffled order. The
/// gradient of a minibatch is the mean of its item gradients, reduced in
/// item order so the result does not depend on the thread count.
pub fn run_sgd<M: SgdModel>(
    model: &mut M,
    train: &[M::Item],
    valid: &[M::Item],
    cfg: &SgdConfig,
) -> Result<Vec<EpochStats>> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut lr = cfg.lr;
    let mut best_valid = f64::INFINITY;
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 0..cfg.epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, epoch as u64));
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut counted = 0usize;
        let mut updates = 0usize;
        for (step, batch) in order.chunks(cfg.batch_size).enumerate() {
            let model_ref: &M = model;
            let results: Vec<Option<(f64, M::Grads)>> = if batch.len() > 1 {
                batch.par_iter().map(|&i| model_ref.grads(&train[i])).collect()
            } else {
                batch.iter().map(|&i| model_ref.grads(&train[i])).collect()
            };
            let mut acc: Option<M::Grads> = None;
            let mut n = 0usize;
            for (loss, g) in results.into_iter().flatten() {
                if !loss.is_finite() {
                    return Err(Error::Diverged { epoch, step, loss });
                }
                total += loss;
                counted += 1;
                n += 1;
                match acc.as_mut() {
                    Some(a) => M::merge(a, g),
                    None => acc = Some(g),
                }
            }
            if let Some(g) = acc {
                if lr > 0.0 {
                    model.apply(&g, lr / n as f64);
                }
                updates += 1;
            }
        }
        if !model.is_finite() {
            return Err(Error::Diverged {
                epoch,
                step: updates,
                loss: f64::NAN,
            });
        }
        let valid_loss = mean_loss(model, valid);
        if let Some(v) = valid_loss {
            if cfg.anneal && v >= best_valid {
                lr /= 2.0;
            }
            best_valid = best_valid.min(v);
        }
        let stats = EpochStats {
            epoch,
            lr,
            train_loss: if counted > 0 { total / counted as f64 } else { 0.0 },
            valid_loss,
            updates,
            skipped: train.len() - counted,
        };
        log::info!(
            "epoch {} lr {:.5} train {:.4} valid {:?} updates {} skipped {}",
            stats.epoch,
            stats.lr,
            stats.train_loss,
            stats.valid_loss,
            stats.updates,
            stats.skipped
        );
        history.push(stats);
    }
    Ok(history)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Least squares on a scalar: loss (w - x)^2.
    struct Scalar {
        w: f64,
    }

    impl SgdModel for Scalar {
        type Item = f64;
        type Grads = f64;

        fn grads(&self, x: &f64) -> Option<(f64, f64)> {
            Some(((self.w - x).powi(2), 2.0 * (self.w - x)))
        }

        fn merge(acc: &mut f64, g: f64) {
            *acc += g;
        }

        fn apply(&mut self, g: &f64, lr: f64) {
            self.w -= lr * g;
        }

        fn loss(&self, x: &f64) -> Option<f64> {
            Some((self.w - x).powi(2))
        }

        fn is_finite(&self) -> bool {
            self.w.is_finite()
        }
    }

    fn cfg() -> SgdConfig {
        SgdConfig {
            lr: 0.1,
            epochs: 50,
            batch_size: 2,
            seed: 0,
            anneal: false,
        }
    }

    #[test]
    fn converges_to_mean() {
        let mut m = Scalar { w: 0.0 };
        let h = run_sgd(&mut m, &[1.0, 3.0], &[], &SgdConfig { epochs: 200, ..cfg() }).unwrap();
        assert!((m.w - 2.0).abs() < 1e-6);
        assert!(h.last().unwrap().train_loss < h[0].train_loss);
    }

    #[test]
    fn zero_rate_leaves_parameters_untouched() {
        let mut m = Scalar { w: 0.25 };
        run_sgd(&mut m, &[1.0, 3.0], &[], &SgdConfig { lr: 0.0, ..cfg() }).unwrap();
        assert_eq!(m.w.to_bits(), 0.25f64.to_bits());
    }

    #[test]
    fn divergence_is_reported() {
        let mut m = Scalar { w: 0.0 };
        let err = run_sgd(&mut m, &[1e200, -1e200], &[], &SgdConfig { lr: 10.0, ..cfg() });
        assert!(matches!(err, Err(Error::Diverged { .. })));
    }

    #[test]
    fn annealing_halves_on_plateau() {
        let mut m = Scalar { w: 2.0 };
        let h = run_sgd(
            &mut m,
            &[1.0, 3.0],
            &[2.0],
            &SgdConfig {
                anneal: true,
                epochs: 3,
                batch_size: 2,
                ..cfg()
            },
        )
        .unwrap();
        assert!(h[2].lr < h[0].lr);
    }

    #[test]
    fn rejects_bad_config() {
        let mut m = Scalar { w: 0.0 };
        assert!(run_sgd(&mut m, &[1.0], &[], &SgdConfig { epochs: 0, ..cfg() }).is_err());
        assert!(run_sgd(&mut m, &[], &[], &cfg()).is_err());
    }
}
