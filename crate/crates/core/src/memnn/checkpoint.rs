//! Versioned text checkpoint container shared by every trained model.
//!
//! ```text
//! cbt-checkpoint 1
//! kind <memnn|selfsup|embedding>
//! param <key> <value>          (any number, sorted by key)
//! vocab <hash> <d>
//! <word>\t<index>               (d lines)
//! matrix <name> <rows> <cols>
//! <row values, space separated> (rows lines)
//! end
//! ```
//!
//! Floats are written in shortest round-trip form, so save/load is exact.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use super::model::{MemN2N, MemN2NShape, MemoryFormat};
use crate::error::{Error, Result};
use crate::features::Vocab;
use crate::tensor::Matrix;

pub const CHECKPOINT_VERSION: u32 = 1;
const MAGIC: &str = "cbt-checkpoint";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckpointKind {
    MemNN,
    SelfSup,
    Embedding,
}

impl CheckpointKind {
    pub fn tag(self) -> &'static str {
        match self {
            CheckpointKind::MemNN => "memnn",
            CheckpointKind::SelfSup => "selfsup",
            CheckpointKind::Embedding => "embedding",
        }
    }
}

impl FromStr for CheckpointKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "memnn" => Ok(CheckpointKind::MemNN),
            "selfsup" => Ok(CheckpointKind::SelfSup),
            "embedding" => Ok(CheckpointKind::Embedding),
            _ => Err(Error::Checkpoint(format!("unknown model kind {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub kind: CheckpointKind,
    pub params: BTreeMap<String, String>,
    pub vocab: Vocab,
    pub matrices: Vec<(String, Matrix)>,
}

impl Checkpoint {
    pub fn new(kind: CheckpointKind, vocab: Vocab) -> Self {
        Checkpoint {
            kind,
            params: BTreeMap::new(),
            vocab,
            matrices: Vec::new(),
        }
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.params.insert(key.to_string(), value.to_string());
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T> {
        let v = self
            .params
            .get(key)
            .ok_or_else(|| Error::Checkpoint(format!("missing parameter {key}")))?;
        v.parse()
            .map_err(|_| Error::Checkpoint(format!("bad value for {key}: {v:?}")))
    }

    pub fn matrix(&self, name: &str) -> Result<&Matrix> {
        self.matrices
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, m)| m)
            .ok_or_else(|| Error::Checkpoint(format!("missing matrix {name}")))
    }

    pub fn expect_kind(&self, kind: CheckpointKind) -> Result<()> {
        if self.kind != kind {
            return Err(Error::Checkpoint(format!(
                "expected a {} checkpoint, found {}",
                kind.tag(),
                self.kind.tag()
            )));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{MAGIC} {CHECKPOINT_VERSION}\nkind {}\n", self.kind.tag());
        for (k, v) in &self.params {
            let _ = writeln!(out, "param {k} {v}");
        }
        let _ = writeln!(out, "vocab {} {}", self.vocab.hash(), self.vocab.len());
        for i in 0..self.vocab.len() {
            let _ = writeln!(out, "{}\t{i}", self.vocab.word(i));
        }
        for (name, m) in &self.matrices {
            let _ = writeln!(out, "matrix {name} {} {}", m.rows, m.cols);
            for r in 0..m.rows {
                let row: Vec<String> = m.row(r).iter().map(|x| x.to_string()).collect();
                let _ = writeln!(out, "{}", row.join(" "));
            }
        }
        out.push_str("end\n");
        out
    }

    pub fn from_text(text: &str, file: &str) -> Result<Self> {
        let lines: Vec<&str> = text.lines().collect();
        let err = |i: usize, msg: String| Error::parse(file, i + 1, msg);
        let mut i = 0;
        let header = lines.first().ok_or_else(|| err(0, "empty checkpoint".into()))?;
        match header.split_once(' ') {
            Some((MAGIC, v)) if v == CHECKPOINT_VERSION.to_string() => {}
            Some((MAGIC, v)) => return Err(err(0, format!("unsupported version {v}"))),
            _ => return Err(err(0, "not a checkpoint".into())),
        }
        i += 1;
        let kind = lines
            .get(i)
            .and_then(|l| l.strip_prefix("kind "))
            .ok_or_else(|| err(i, "expected kind".into()))?
            .parse()?;
        i += 1;
        let mut params = BTreeMap::new();
        while let Some(rest) = lines.get(i).and_then(|l| l.strip_prefix("param ")) {
            let (k, v) = rest
                .split_once(' ')
                .ok_or_else(|| err(i, "expected param <key> <value>".into()))?;
            params.insert(k.to_string(), v.to_string());
            i += 1;
        }
        let vline = lines
            .get(i)
            .and_then(|l| l.strip_prefix("vocab "))
            .ok_or_else(|| err(i, "expected vocab".into()))?;
        let (hash, d) = vline
            .split_once(' ')
            .ok_or_else(|| err(i, "expected vocab <hash> <d>".into()))?;
        let d: usize = d.parse().map_err(|_| err(i, "bad vocabulary size".into()))?;
        let vstart = i + 1;
        let vend = vstart + d;
        if vend > lines.len() {
            return Err(err(i, "truncated vocabulary".into()));
        }
        let mut vtext = format!("# d={d} kind=checkpoint\n");
        for l in &lines[vstart..vend] {
            vtext.push_str(l);
            vtext.push('\n');
        }
        let (vocab, _) = Vocab::from_text(&vtext, file)?;
        if vocab.hash() != hash {
            return Err(err(i, "vocabulary hash mismatch".into()));
        }
        i = vend;
        let mut matrices = Vec::new();
        loop {
            let line = lines.get(i).ok_or_else(|| err(i, "missing end marker".into()))?;
            if *line == "end" {
                break;
            }
            let f: Vec<&str> = line.split(' ').collect();
            if f.len() != 4 || f[0] != "matrix" {
                return Err(err(i, format!("expected matrix header, found {line:?}")));
            }
            let rows: usize = f[2].parse().map_err(|_| err(i, "bad row count".into()))?;
            let cols: usize = f[3].parse().map_err(|_| err(i, "bad column count".into()))?;
            let mut data = Vec::with_capacity(rows * cols);
            for r in 0..rows {
                let li = i + 1 + r;
                let row = lines.get(li).ok_or_else(|| err(li, "truncated matrix".into()))?;
                let before = data.len();
                for x in row.split(' ').filter(|s| !s.is_empty()) {
                    data.push(x.parse::<f64>().map_err(|_| err(li, format!("bad number {x:?}")))?);
                }
                if data.len() - before != cols {
                    return Err(err(li, format!("expected {cols} values")));
                }
            }
            matrices.push((f[1].to_string(), Matrix { rows, cols, data }));
            i += 1 + rows;
        }
        Ok(Checkpoint {
            kind,
            params,
            vocab,
            matrices,
        })
    }
}

pub fn write_checkpoint(ck: &Checkpoint, path: &Path) -> Result<()> {
    std::fs::write(path, ck.to_text()).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Checkpoint::from_text(&text, &path.display().to_string())
}

impl MemoryFormat {
    pub fn to_param(self) -> String {
        match self {
            MemoryFormat::Lexical { n_max } => format!("lexical:{n_max}"),
            MemoryFormat::Window { b } => format!("window:{b}"),
            MemoryFormat::Sentential => "sentential".into(),
        }
    }
}

impl FromStr for MemoryFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = s.split_once(':').unwrap_or((s, ""));
        let num = |d: usize| -> Result<usize> {
            if arg.is_empty() {
                Ok(d)
            } else {
                arg.parse()
                    .map_err(|_| Error::Config(format!("bad memory format argument {s:?}")))
            }
        };
        match name {
            "lexical" => Ok(MemoryFormat::Lexical { n_max: num(200)? }),
            "window" => Ok(MemoryFormat::Window { b: num(5)? }),
            "sentential" => Ok(MemoryFormat::Sentential),
            _ => Err(Error::Config(format!("unknown memory format {s:?}"))),
        }
    }
}

impl MemN2N {
    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut ck = Checkpoint::new(CheckpointKind::MemNN, self.vocab.clone());
        ck.set("format", self.shape.format.to_param());
        ck.set("p", self.shape.p);
        ck.set("hops", self.shape.hops);
        ck.set("relu_half", self.shape.relu_half);
        ck.set("use_time", self.shape.use_time);
        ck.set("gamma", self.gamma);
        for (n, m) in [
            ("A", &self.a),
            ("B", &self.b),
            ("H", &self.h),
            ("U", &self.u),
            ("time_A", &self.time_a),
            ("time_B", &self.time_b),
        ] {
            ck.matrices.push((n.to_string(), m.clone()));
        }
        ck
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        ck.expect_kind(CheckpointKind::MemNN)?;
        let shape = MemN2NShape {
            format: ck.get("format")?,
            p: ck.get("p")?,
            hops: ck.get("hops")?,
            relu_half: ck.get("relu_half")?,
            use_time: ck.get("use_time")?,
        };
        let m = MemN2N {
            shape,
            vocab: ck.vocab.clone(),
            a: ck.matrix("A")?.clone(),
            b: ck.matrix("B")?.clone(),
            h: ck.matrix("H")?.clone(),
            u: ck.matrix("U")?.clone(),
            gamma: ck.get("gamma")?,
            time_a: ck.matrix("time_A")?.clone(),
            time_b: ck.matrix("time_B")?.clone(),
        };
        let d = m.d();
        let in_dim = shape.format.feature_kind().dim(d);
        let ok = m.a.rows == in_dim
            && m.b.rows == in_dim
            && m.a.cols == shape.p
            && m.b.cols == shape.p
            && m.h.rows == shape.p
            && m.h.cols == shape.p
            && m.u.rows == d
            && m.u.cols == shape.p;
        if !ok {
            return Err(Error::Checkpoint("matrix shapes do not match the hyperparameters".into()));
        }
        Ok(m)
    }
}
