use std::fmt::Write as _;

use super::EvalRow;
use crate::corpus::WordClass;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: String,
    /// Rows produced at this point, or the failure message.
    pub outcome: std::result::Result<Vec<EvalRow>, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub param: String,
    pub seed: u64,
    pub points: Vec<SweepPoint>,
}

pub const SWEEP_CSV_HEADER: &str = "param,value,model,class,correct,total,accuracy,seed,config_hash";

/// Runs `run` at every grid value in order. A failing point is recorded and
/// the sweep moves on.
pub fn sweep<F>(param: &str, grid: &[String], seed: u64, mut run: F) -> Result<SweepResult>
where
    F: FnMut(&str) -> Result<Vec<EvalRow>>,
{
    if grid.is_empty() {
        return Err(Error::Config("sweep grid is empty".into()));
    }
    let points = grid
        .iter()
        .map(|v| {
            let outcome = run(v).map_err(|e| {
                log::warn!("sweep point {param}={v} failed: {e}");
                e.to_string()
            });
            SweepPoint {
                value: v.clone(),
                outcome,
            }
        })
        .collect();
    Ok(SweepResult {
        param: param.to_string(),
        seed,
        points,
    })
}

impl SweepResult {
    /// Accuracy-versus-parameter curve, one line per (point, model, class).
    /// Failed points get a single `failed` line.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{SWEEP_CSV_HEADER}\n");
        for p in &self.points {
            match &p.outcome {
                Ok(rows) => {
                    for row in rows {
                        for c in WordClass::QUESTION_CLASSES {
                            let n = row.per_class.get(&c).copied().unwrap_or_default();
                            let acc = n.accuracy().map_or("n=0".to_string(), |a| format!("{a:.6}"));
                            let _ = writeln!(
                                out,
                                "{},{},{},{},{},{},{},{},{}",
                                self.param,
                                p.value,
                                row.model,
                                c.code(),
                                n.correct,
                                n.total,
                                acc,
                                self.seed,
                                row.config_hash
                            );
                        }
                    }
                }
                Err(msg) => {
                    let msg = msg.replace([',', '\n'], ";");
                    let _ = writeln!(out, "{},{},failed: {msg},-,0,0,failed,{},-", self.param, p.value, self.seed);
                }
            }
        }
        out
    }

    /// Grid value with the best accuracy for `class` (first on ties),
    /// taking the first model row at each point.
    pub fn peak(&self, class: WordClass) -> Option<(&str, f64)> {
        let mut best: Option<(&str, f64)> = None;
        for p in &self.points {
            let Ok(rows) = &p.outcome else { continue };
            let Some(acc) = rows.first().and_then(|r| r.accuracy(class)) else {
                continue;
            };
            if best.map_or(true, |(_, b)| acc > b) {
                best = Some((&p.value, acc));
            }
        }
        best
    }

    pub fn failures(&self) -> usize {
        self.points.iter().filter(|p| p.outcome.is_err()).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::ClassCount;

    fn row(correct: usize) -> EvalRow {
        EvalRow {
            model: "m".into(),
            config_hash: "h".into(),
            per_class: [(WordClass::NamedEntity, ClassCount { correct, total: 10 })].into_iter().collect(),
            ties: 0,
            unk_questions: 0,
            filter_fallbacks: 0,
            invalid: 0,
        }
    }

    #[test]
    fn one_point_per_grid_value_and_failures_continue() {
        let grid: Vec<String> = ["1", "3", "5", "9"].map(String::from).to_vec();
        let r = sweep("b", &grid, 0, |v| match v {
            "3" => Err(Error::Config("boom".into())),
            v => Ok(vec![row(v.parse().unwrap())]),
        })
        .unwrap();
        assert_eq!(r.points.len(), 4);
        assert_eq!(r.failures(), 1);
        assert_eq!(r.peak(WordClass::NamedEntity), Some(("9", 0.9)));
        let csv = r.to_csv();
        assert_eq!(csv.lines().filter(|l| l.contains(",failed")).count(), 1);
        assert!(csv.contains("b,5,m,NE,5,10,0.500000,0,h"));
    }

    #[test]
    fn empty_grid_is_rejected() {
        assert!(sweep("b", &[], 0, |_| Ok(vec![])).is_err());
    }
}
