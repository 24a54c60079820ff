use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::Label;
use crate::ingest::{SourceTag, StudentId};
use crate::pipeline::ledger::AcquisitionLedger;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    One,
    Two,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::One => "1",
            Phase::Two => "2",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub predicted: Label,
    pub truth: Label,
    pub p_success: f64,
    pub confidence: f64,
    pub correct: bool,
    pub phase: Phase,
    pub sources_used: BTreeSet<SourceTag>,
}

/// Students x checkpoints grid of predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionMatrix {
    pub student_ids: Vec<StudentId>,
    pub checkpoint_days: Vec<i32>,
    /// Row-major: `cells[i * checkpoint_days.len() + t]`.
    pub cells: Vec<Cell>,
}

impl PredictionMatrix {
    pub fn n_students(&self) -> usize {
        self.student_ids.len()
    }

    pub fn n_checkpoints(&self) -> usize {
        self.checkpoint_days.len()
    }

    pub fn cell(&self, student: usize, checkpoint: usize) -> &Cell {
        &self.cells[student * self.n_checkpoints() + checkpoint]
    }

    pub fn row(&self, student: usize) -> &[Cell] {
        let t = self.n_checkpoints();
        &self.cells[student * t..(student + 1) * t]
    }

    pub fn correctness(&self) -> Vec<bool> {
        self.cells.iter().map(|c| c.correct).collect()
    }

    /// Ledger implied by the matrix: each student's first use of each
    /// additional source.
    pub fn implied_ledger(&self) -> AcquisitionLedger {
        let mut ledger = AcquisitionLedger::new();
        for (i, id) in self.student_ids.iter().enumerate() {
            for (t, cell) in self.row(i).iter().enumerate() {
                for tag in cell.sources_used.iter().filter(|s| s.is_additional()) {
                    ledger.acquire(id, *tag, t);
                }
            }
        }
        ledger
    }

    pub fn check_invariants(&self) -> Result<()> {
        if self.cells.len() != self.n_students() * self.n_checkpoints() {
            return Err(Error::Invariant(
                "prediction matrix is not rectangular".into(),
            ));
        }
        for (i, id) in self.student_ids.iter().enumerate() {
            for (t, c) in self.row(i).iter().enumerate() {
                if c.correct != (c.predicted == c.truth) {
                    return Err(Error::Invariant(format!(
                        "cell ({id}, {t}) correctness flag disagrees with its labels"
                    )));
                }
                if c.phase == Phase::Two && !c.sources_used.iter().any(|s| s.is_additional()) {
                    return Err(Error::Invariant(format!(
                        "cell ({id}, {t}) is phase two without an additional source"
                    )));
                }
                if !(0.5..=1.0).contains(&c.confidence) {
                    return Err(Error::Invariant(format!(
                        "cell ({id}, {t}) has confidence {} outside [0.5, 1]",
                        c.confidence
                    )));
                }
            }
        }
        Ok(())
    }

    /// Columns: student_id, checkpoint_day, predicted, correct, confidence,
    /// phase, sources.
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("student_id,checkpoint_day,predicted,correct,confidence,phase,sources\n");
        for (i, id) in self.student_ids.iter().enumerate() {
            for (t, c) in self.row(i).iter().enumerate() {
                let sources = c
                    .sources_used
                    .iter()
                    .map(|s| s.to_string())
                    .collect::<Vec<_>>()
                    .join("+");
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    id,
                    self.checkpoint_days[t],
                    c.predicted.as_str(),
                    c.correct,
                    c.confidence,
                    c.phase.as_str(),
                    sources
                );
            }
        }
        out
    }
}
