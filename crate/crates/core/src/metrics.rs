//! Accuracy, earliness, stability, ESS and data consumption.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::StudentId;
use crate::pipeline::{AcquisitionLedger, PredictionMatrix};

/// Students x checkpoints boolean grid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrectnessGrid {
    n_students: usize,
    n_checkpoints: usize,
    correct: Vec<bool>,
}

impl CorrectnessGrid {
    pub fn new(rows: &[Vec<bool>]) -> Result<Self> {
        let n_checkpoints = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_checkpoints) {
            return Err(Error::Invariant(
                "correctness grid is not rectangular".into(),
            ));
        }
        Ok(CorrectnessGrid {
            n_students: rows.len(),
            n_checkpoints,
            correct: rows.concat(),
        })
    }

    pub fn from_flat(n_students: usize, n_checkpoints: usize, correct: Vec<bool>) -> Result<Self> {
        if correct.len() != n_students * n_checkpoints {
            return Err(Error::Invariant(
                "correctness grid is not rectangular".into(),
            ));
        }
        Ok(CorrectnessGrid {
            n_students,
            n_checkpoints,
            correct,
        })
    }

    pub fn from_matrix(m: &PredictionMatrix) -> Self {
        CorrectnessGrid {
            n_students: m.n_students(),
            n_checkpoints: m.n_checkpoints(),
            correct: m.correctness(),
        }
    }

    pub fn n_students(&self) -> usize {
        self.n_students
    }

    pub fn n_checkpoints(&self) -> usize {
        self.n_checkpoints
    }

    pub fn row(&self, i: usize) -> &[bool] {
        &self.correct[i * self.n_checkpoints..(i + 1) * self.n_checkpoints]
    }

    pub fn column(&self, t: usize) -> Vec<bool> {
        (0..self.n_students).map(|i| self.row(i)[t]).collect()
    }

    fn check_prefix(&self, upto: usize) {
        assert!(
            upto < self.n_checkpoints,
            "checkpoint index {upto} out of range for {} checkpoints",
            self.n_checkpoints
        );
        assert!(self.n_students > 0, "metrics need at least one student");
    }
}

/// Fraction of correct entries.
pub fn accuracy(column: &[bool]) -> f64 {
    assert!(!column.is_empty(), "accuracy of an empty column");
    column.iter().filter(|&&c| c).count() as f64 / column.len() as f64
}

fn first_correct(row: &[bool]) -> Option<usize> {
    row.iter().position(|&c| c)
}

fn longest_run(row: &[bool]) -> usize {
    let (mut best, mut cur) = (0, 0);
    for &c in row {
        cur = if c { cur + 1 } else { 0 };
        best = best.max(cur);
    }
    best
}

/// Mean over students of the first correct index in `[0..=upto]`, divided by
/// `upto + 1`. Students never correct in the prefix count as 1.
pub fn earliness(grid: &CorrectnessGrid, upto: usize) -> f64 {
    grid.check_prefix(upto);
    let len = (upto + 1) as f64;
    let sum: f64 = (0..grid.n_students)
        .map(|i| first_correct(&grid.row(i)[..=upto]).map_or(1.0, |k| k as f64 / len))
        .sum();
    sum / grid.n_students as f64
}

/// Mean over students of the longest correct run in `[0..=upto]`, divided by
/// `upto + 1`.
pub fn stability(grid: &CorrectnessGrid, upto: usize) -> f64 {
    grid.check_prefix(upto);
    let len = (upto + 1) as f64;
    let sum: f64 = (0..grid.n_students)
        .map(|i| longest_run(&grid.row(i)[..=upto]) as f64 / len)
        .sum();
    sum / grid.n_students as f64
}

/// Harmonic mean of `1 - earliness` and `stability`; 0 when both are 0.
pub fn ess_value(earliness: f64, stability: f64) -> f64 {
    let denom = (1.0 - earliness) + stability;
    if denom == 0.0 {
        0.0
    } else {
        2.0 * (1.0 - earliness) * stability / denom
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EssBreakdown {
    pub earliness: f64,
    pub stability: f64,
    pub ess: f64,
    /// (first correct index, longest run) per student within the prefix.
    pub per_student: Vec<(Option<usize>, usize)>,
}

pub fn ess(grid: &CorrectnessGrid, upto: usize) -> EssBreakdown {
    let e = earliness(grid, upto);
    let s = stability(grid, upto);
    EssBreakdown {
        earliness: e,
        stability: s,
        ess: ess_value(e, s),
        per_student: (0..grid.n_students)
            .map(|i| {
                let row = &grid.row(i)[..=upto];
                (first_correct(row), longest_run(row))
            })
            .collect(),
    }
}

/// Mean number of data sources per student: `n_base` plus the student's
/// ledger entries.
pub fn data_consumption(ledger: &AcquisitionLedger, cohort: &[StudentId], n_base: usize) -> f64 {
    assert!(!cohort.is_empty(), "consumption of an empty cohort");
    let total: usize = cohort.iter().map(|id| n_base + ledger.count_for(id)).sum();
    total as f64 / cohort.len() as f64
}

/// Two decimals, truncated toward zero (1.4654 prints as 1.46).
pub fn format_consumption(c: f64) -> String {
    // The small nudge keeps exact values such as 1.15 from printing as 1.14.
    format!("{:.2}", ((c * 100.0) + 1e-9).floor() / 100.0)
}

/// `(ms - fep) / ms * 100`, rounded to the nearest integer.
pub fn consumption_reduction_percent(ms: f64, fep: f64) -> i64 {
    ((ms - fep) / ms * 100.0).round() as i64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMetrics {
    pub checkpoint_day: i32,
    pub accuracy: f64,
    pub earliness: f64,
    pub stability: f64,
    pub ess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMetrics {
    pub model: String,
    pub checkpoints: Vec<CheckpointMetrics>,
    pub consumption: f64,
}

impl ModelMetrics {
    pub fn compute(model: &str, matrix: &PredictionMatrix, ledger: &AcquisitionLedger) -> Self {
        let grid = CorrectnessGrid::from_matrix(matrix);
        let checkpoints = matrix
            .checkpoint_days
            .iter()
            .enumerate()
            .map(|(t, &day)| {
                let b = ess(&grid, t);
                CheckpointMetrics {
                    checkpoint_day: day,
                    accuracy: accuracy(&grid.column(t)),
                    earliness: b.earliness,
                    stability: b.stability,
                    ess: b.ess,
                }
            })
            .collect();
        ModelMetrics {
            model: model.to_string(),
            checkpoints,
            consumption: data_consumption(ledger, &matrix.student_ids, 1),
        }
    }
}

pub const METRICS_HEADER: &str =
    "model,checkpoint_day,accuracy,earliness,stability,ess,consumption";

/// One row per (model, checkpoint) with an empty consumption cell, then one
/// consumption row per model with empty metric cells.
pub fn metrics_csv(models: &[ModelMetrics]) -> String {
    let mut out = format!("{METRICS_HEADER}\n");
    for m in models {
        for c in &m.checkpoints {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},",
                m.model, c.checkpoint_day, c.accuracy, c.earliness, c.stability, c.ess
            );
        }
    }
    for m in models {
        let _ = writeln!(out, "{},,,,,,{}", m.model, m.consumption);
    }
    out
}

/// Inverse of [`metrics_csv`].
pub fn parse_metrics_csv(text: &str) -> Result<Vec<ModelMetrics>> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = rdr
        .headers()
        .map_err(|e| Error::Decode(format!("metrics header: {e}")))?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if header != METRICS_HEADER {
        return Err(Error::Decode(format!(
            "unexpected metrics header {header:?}"
        )));
    }
    let mut models: Vec<ModelMetrics> = Vec::new();
    let num = |s: &str, row: usize| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|_| Error::Decode(format!("metrics row {row}: bad number {s:?}")))
    };
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| Error::Decode(format!("metrics row {row}: {e}")))?;
        if rec.len() != 7 {
            return Err(Error::Decode(format!(
                "metrics row {row}: expected 7 fields"
            )));
        }
        let name = &rec[0];
        let idx = match models.iter().position(|m| m.model == name) {
            Some(i) => i,
            None => {
                models.push(ModelMetrics {
                    model: name.to_string(),
                    checkpoints: Vec::new(),
                    consumption: f64::NAN,
                });
                models.len() - 1
            }
        };
        if rec[1].is_empty() {
            models[idx].consumption = num(&rec[6], row)?;
        } else {
            let day = rec[1]
                .parse::<i32>()
                .map_err(|_| Error::Decode(format!("metrics row {row}: bad day {:?}", &rec[1])))?;
            models[idx].checkpoints.push(CheckpointMetrics {
                checkpoint_day: day,
                accuracy: num(&rec[2], row)?,
                earliness: num(&rec[3], row)?,
                stability: num(&rec[4], row)?,
                ess: num(&rec[5], row)?,
            });
        }
    }
    if let Some(m) = models.iter().find(|m| m.consumption.is_nan()) {
        return Err(Error::Decode(format!(
            "no consumption row for model {}",
            m.model
        )));
    }
    Ok(models)
}
