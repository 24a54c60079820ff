use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateKind {
    /// Acquire additional data when phase-one confidence is below the threshold.
    ConfidenceThreshold,
}

/// How the threshold was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Calibration {
    None,
    HoldoutTuned,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateConfig {
    pub kind: GateKind,
    pub threshold: f64,
    pub calibration: Calibration,
}

/// Checks `threshold` lies in (0.5, 1]. At 0.5 the gate could never fire and
/// above 1 it would always fire.
pub fn validate_threshold(threshold: f64) -> Result<()> {
    if threshold > 0.5 && threshold <= 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "gate threshold must lie in (0.5, 1], got {threshold}"
        )))
    }
}

impl GateConfig {
    pub fn fixed(threshold: f64) -> Result<Self> {
        validate_threshold(threshold)?;
        Ok(GateConfig {
            kind: GateKind::ConfidenceThreshold,
            threshold,
            calibration: Calibration::None,
        })
    }

    pub fn fires(&self, confidence: f64) -> bool {
        match self.kind {
            GateKind::ConfidenceThreshold => confidence < self.threshold,
        }
    }
}

/// One row of the tuning table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateTrial {
    pub threshold: f64,
    pub accuracy: f64,
    pub consumption: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TunedGate {
    pub gate: GateConfig,
    pub trials: Vec<GateTrial>,
}

/// Highest accuracy wins; ties go to the lower consumption, then to the
/// lower threshold.
pub fn select_trial(trials: &[GateTrial]) -> Option<GateTrial> {
    trials.iter().copied().reduce(|best, t| {
        let better = t.accuracy > best.accuracy
            || (t.accuracy == best.accuracy
                && (t.consumption < best.consumption
                    || (t.consumption == best.consumption && t.threshold < best.threshold)));
        if better {
            t
        } else {
            best
        }
    })
}
