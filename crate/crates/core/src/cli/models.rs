use std::fmt::Write as _;
use std::path::Path;

use super::config::RunConfig;
use crate::baselines::{
    embed_train, Discounting, EmbeddingConfig, EmbeddingModel, FrequencyTable, KneserNey, KneserNeyPredictor,
    MaxFrequency, SlidingWindow, WordDistance, WordDistanceConfig,
};
use crate::cbt::Question;
use crate::error::{Error, Result};
use crate::features::InputEncoding;
use crate::memnn::{
    read_checkpoint, train as memnn_train, Checkpoint, CheckpointKind, MemN2N, MemN2NShape,
    MemoryFormat, TrainConfig,
};
use crate::predict::{Predictor, RandomPredictor};
use crate::selfsup::{selfsup_train, ScoringOptions, SelfSupConfig, SelfSupLoss, SelfSupModel, SelfSupPredictor};
use crate::sgd::SgdConfig;

/// Trainable model families.
pub const TRAINABLE: &[&str] = &[
    "memnn-lexical",
    "memnn-window",
    "memnn-sentential",
    "memnn-window-selfsup",
    "embedding-context-query",
    "embedding-query",
    "embedding-window",
    "embedding-window-position",
    "kn",
    "max-frequency-corpus",
];

/// Models that need no training.
pub const UNTRAINED: &[&str] = &["random", "max-frequency-context", "word-distance", "sliding-window"];

/// Every setting a model or scorer reads.
pub const MODEL_KEYS: &[&str] = &[
    "p",
    "hops",
    "relu_half",
    "use_time",
    "b",
    "n_max",
    "lr",
    "epochs",
    "batch_size",
    "init_scale",
    "anneal",
    "continuation_targets",
    "loss",
    "margin",
    "mode",
    "update_only_on_mistake",
    "order",
    "discount",
    "cache_mu",
    "m",
    "soft",
    "exclude_cooccurrences",
];

pub enum Model {
    MemNN(MemN2N),
    SelfSup(SelfSupModel),
    Embedding(EmbeddingModel),
    Kn(KneserNey),
    Frequency(FrequencyTable),
    Untrained(String),
}

fn sgd(cfg: &RunConfig, lr: f64, batch: usize) -> Result<SgdConfig> {
    Ok(SgdConfig {
        lr: cfg.get("lr", lr)?,
        epochs: cfg.get("epochs", 10)?,
        batch_size: cfg.get("batch_size", batch)?,
        seed: cfg.get("seed", 0)?,
        anneal: cfg.get("anneal", true)?,
    })
}

fn memnn_config(kind: &str, cfg: &RunConfig) -> Result<TrainConfig> {
    let mut shape = match kind {
        "memnn-lexical" => MemN2NShape::lexical_default(),
        "memnn-window" => MemN2NShape::window_default(),
        _ => MemN2NShape::sentential_default(),
    };
    shape.format = match shape.format {
        MemoryFormat::Lexical { n_max } => MemoryFormat::Lexical {
            n_max: cfg.get("n_max", n_max)?,
        },
        MemoryFormat::Window { b } => MemoryFormat::Window { b: cfg.get("b", b)? },
        f => f,
    };
    shape.p = cfg.get("p", shape.p)?;
    shape.hops = cfg.get("hops", shape.hops)?;
    shape.relu_half = cfg.get("relu_half", shape.relu_half)?;
    shape.use_time = cfg.get("use_time", shape.use_time)?;
    let mut tc = TrainConfig::for_shape(shape);
    tc.sgd = sgd(cfg, tc.sgd.lr, tc.sgd.batch_size)?;
    tc.init_scale = cfg.get("init_scale", tc.init_scale)?;
    tc.continuation_targets = cfg.get("continuation_targets", tc.continuation_targets)?;
    Ok(tc)
}

pub fn selfsup_config(cfg: &RunConfig) -> Result<SelfSupConfig> {
    let d = SelfSupConfig::default();
    let loss = match cfg.raw("loss").unwrap_or("softmax_nll") {
        "softmax_nll" => SelfSupLoss::SoftmaxNll,
        "margin" => SelfSupLoss::Margin(cfg.get("margin", 0.1)?),
        other => return Err(Error::Config(format!("unknown loss `{other}`"))),
    };
    let c = SelfSupConfig {
        b: cfg.get("b", d.b)?,
        p: cfg.get("p", d.p)?,
        mode: cfg.get("mode", d.mode)?,
        loss,
        update_only_on_mistake: cfg.get("update_only_on_mistake", d.update_only_on_mistake)?,
        use_time: cfg.get("use_time", d.use_time)?,
        init_scale: cfg.get("init_scale", d.init_scale)?,
        sgd: sgd(cfg, d.sgd.lr, d.sgd.batch_size)?,
    };
    c.validate()?;
    Ok(c)
}

fn embedding_config(kind: &str, cfg: &RunConfig) -> Result<EmbeddingConfig> {
    let b = cfg.get("b", 5)?;
    let encoding = match kind {
        "embedding-context-query" => InputEncoding::ContextPlusQuery,
        "embedding-query" => InputEncoding::Query,
        "embedding-window" => InputEncoding::Window(b),
        _ => InputEncoding::WindowPosition(b),
    };
    let d = EmbeddingConfig::for_encoding(encoding);
    Ok(EmbeddingConfig {
        encoding,
        p: cfg.get("p", d.p)?,
        init_scale: cfg.get("init_scale", d.init_scale)?,
        sgd: sgd(cfg, d.sgd.lr, d.sgd.batch_size)?,
    })
}

fn discounting(cfg: &RunConfig) -> Result<Discounting> {
    match cfg.raw("discount").unwrap_or("modified") {
        "modified" => Ok(Discounting::Modified),
        d => d
            .parse()
            .map(Discounting::Fixed)
            .map_err(|_| Error::Config(format!("discount must be `modified` or a number, got `{d}`"))),
    }
}

/// Training data for [`train_model`].
pub struct TrainData<'a> {
    pub train: &'a [Question],
    pub valid: &'a [Question],
    /// Tokenized training-book sentences, for corpus-level models.
    pub corpus: &'a [Vec<String>],
}

pub fn train_model(kind: &str, cfg: &RunConfig, data: &TrainData<'_>) -> Result<Model> {
    Ok(match kind {
        "memnn-lexical" | "memnn-window" | "memnn-sentential" => {
            Model::MemNN(memnn_train(data.train, data.valid, &memnn_config(kind, cfg)?)?.0)
        }
        "memnn-window-selfsup" => Model::SelfSup(selfsup_train(data.train, data.valid, &selfsup_config(cfg)?)?.0),
        k if k.starts_with("embedding-") => {
            Model::Embedding(embed_train(data.train, data.valid, &embedding_config(k, cfg)?)?.0)
        }
        "kn" => {
            if data.corpus.is_empty() {
                return Err(Error::EmptyCorpus);
            }
            Model::Kn(KneserNey::train(data.corpus, cfg.get("order", 5)?, discounting(cfg)?)?)
        }
        "max-frequency-corpus" => Model::Frequency(FrequencyTable::from_sentences(data.corpus)),
        k if UNTRAINED.contains(&k) => Model::Untrained(k.to_string()),
        other => {
            return Err(Error::Config(format!(
                "unknown model `{other}` (known: {}, {})",
                TRAINABLE.join(", "),
                UNTRAINED.join(", ")
            )))
        }
    })
}

const FREQUENCY_MAGIC: &str = "frequency-table 1";

impl Model {
    /// Serializes with `provenance` (key, value) pairs embedded.
    pub fn to_text(&self, provenance: &[(&str, &str)]) -> Result<String> {
        let with = |mut ck: Checkpoint| {
            for (k, v) in provenance {
                ck.set(k, v);
            }
            ck.to_text()
        };
        let header: String = provenance.iter().map(|(k, v)| format!("# {k}={v}\n")).collect();
        Ok(match self {
            Model::MemNN(m) => with(m.to_checkpoint()),
            Model::SelfSup(m) => with(m.to_checkpoint()),
            Model::Embedding(m) => with(m.to_checkpoint()),
            Model::Kn(m) => header + &m.to_text(),
            Model::Frequency(t) => {
                let mut out = header + FREQUENCY_MAGIC + "\n";
                let mut rows: Vec<(&String, &usize)> = t.counts.iter().collect();
                rows.sort();
                for (w, c) in rows {
                    let _ = writeln!(out, "{w}\t{c}");
                }
                out
            }
            Model::Untrained(k) => return Err(Error::Config(format!("`{k}` has nothing to save"))),
        })
    }

    pub fn save(&self, path: &Path, provenance: &[(&str, &str)]) -> Result<()> {
        std::fs::write(path, self.to_text(provenance)?).map_err(|e| Error::io(path, e))
    }

    /// Reads any file written by [`Model::save`].
    pub fn load(path: &Path) -> Result<Model> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file = path.display().to_string();
        let first = text.lines().find(|l| !l.starts_with('#')).unwrap_or("");
        if first.starts_with("kneser-ney") {
            return Ok(Model::Kn(KneserNey::from_text(&text, &file)?));
        }
        if first == FREQUENCY_MAGIC {
            let mut t = FrequencyTable::default();
            for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.starts_with('#')).skip(1) {
                let (w, c) = line
                    .rsplit_once('\t')
                    .and_then(|(w, c)| Some((w, c.parse().ok()?)))
                    .ok_or_else(|| Error::parse(&file, i + 1, "expected word<TAB>count"))?;
                t.counts.insert(w.to_string(), c);
            }
            return Ok(Model::Frequency(t));
        }
        let ck = read_checkpoint(path)?;
        Ok(match ck.kind {
            CheckpointKind::MemNN => Model::MemNN(MemN2N::from_checkpoint(&ck)?),
            CheckpointKind::SelfSup => Model::SelfSup(SelfSupModel::from_checkpoint(&ck)?),
            CheckpointKind::Embedding => Model::Embedding(EmbeddingModel::from_checkpoint(&ck)?),
        })
    }

    /// File name stem used by `train`.
    pub fn extension(&self) -> &'static str {
        match self {
            Model::Kn(_) => "kn",
            Model::Frequency(_) => "freq",
            _ => "ckpt",
        }
    }

    /// A scorer configured by the test-time settings in `cfg`.
    pub fn predictor(&self, cfg: &RunConfig) -> Result<Box<dyn Predictor + '_>> {
        Ok(match self {
            Model::MemNN(m) => Box::new(m),
            Model::SelfSup(m) => Box::new(SelfSupPredictor {
                model: m,
                opts: ScoringOptions {
                    soft: cfg.get("soft", true)?,
                    exclude_query_cooccurrences: cfg.get("exclude_cooccurrences", false)?,
                },
            }),
            Model::Embedding(m) => Box::new(m),
            Model::Kn(m) => Box::new(KneserNeyPredictor {
                model: m,
                cache_mu: match cfg.raw("cache_mu") {
                    None => None,
                    Some(_) => Some(cfg.require("cache_mu")?),
                },
            }),
            Model::Frequency(t) => Box::new(MaxFrequency::corpus(t.clone())),
            Model::Untrained(k) => match k.as_str() {
                "random" => Box::new(RandomPredictor),
                "max-frequency-context" => Box::new(MaxFrequency::context()),
                "sliding-window" => Box::new(SlidingWindow),
                _ => {
                    let wd = WordDistanceConfig { m: cfg.get("m", 5)? };
                    wd.validate()?;
                    Box::new(WordDistance { cfg: wd })
                }
            },
        })
    }
}
