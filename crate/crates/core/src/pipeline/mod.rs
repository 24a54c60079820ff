//! Single-source, multi-source and gated (FEP) prediction over a checkpoint
//! schedule.
//!
//! The single-source model sees only the primary bundle. The multi-source
//! model sees the primary bundle concatenated with every additional bundle.
//! The gated model predicts with the single-source model first and, for a
//! student whose confidence falls below the gate threshold (or who already
//! holds the additional data), substitutes the multi-source prediction. The
//! additional data is paid for once, at the first checkpoint it is needed,
//! and reused at every later checkpoint.
//!
//! Both models are trained once per checkpoint on the full training
//! partition; per-checkpoint training runs in parallel, and the gating pass
//! is a serial walk over the finished predictions in checkpoint order.

pub mod gate;
pub mod ledger;
pub mod matrix;

use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{
    label_next_assessment, CheckpointSchedule, FeatureBuilder, FeatureConfig, Label,
};
use crate::ingest::{SourceBundle, SourceTag, StudentId};
use crate::learner::{Classifier, Learner, Prediction};
use crate::metrics::data_consumption;

pub use gate::{select_trial, Calibration, GateConfig, GateKind, GateTrial, TunedGate};
pub use ledger::AcquisitionLedger;
pub use matrix::{Cell, Phase, PredictionMatrix};

/// Inputs shared by every model run.
#[derive(Debug, Clone)]
pub struct ExperimentData<'a> {
    pub primary: &'a SourceBundle,
    pub additional: &'a [SourceBundle],
    pub schedule: &'a CheckpointSchedule,
    pub features: FeatureConfig,
    pub pass_threshold: f64,
}

impl ExperimentData<'_> {
    pub fn additional_tags(&self) -> BTreeSet<SourceTag> {
        self.additional.iter().map(|b| b.source_tag).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<StudentId>,
    pub test: Vec<StudentId>,
}

/// Seeded stratified split. Each stratum contributes
/// `round(size * test_fraction)` students to the test side; both sides keep
/// the order of `cohort`.
pub fn stratified_split(
    cohort: &[StudentId],
    strata: &[bool],
    test_fraction: f64,
    seed: u64,
) -> Result<Split> {
    if cohort.len() != strata.len() {
        return Err(Error::Data("stratum labels do not match the cohort".into()));
    }
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Config(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut is_test = vec![false; cohort.len()];
    for class in [true, false] {
        let mut members: Vec<usize> = (0..cohort.len()).filter(|&i| strata[i] == class).collect();
        members.shuffle(&mut rng);
        let k = (members.len() as f64 * test_fraction).round() as usize;
        for &i in &members[..k] {
            is_test[i] = true;
        }
    }
    let mut split = Split {
        train: Vec::new(),
        test: Vec::new(),
    };
    for (i, id) in cohort.iter().enumerate() {
        if is_test[i] {
            split.test.push(id.clone());
        } else {
            split.train.push(id.clone());
        }
    }
    if split.train.is_empty() || split.test.is_empty() {
        return Err(Error::Data(format!(
            "split of {} students leaves an empty partition",
            cohort.len()
        )));
    }
    Ok(split)
}

/// Final-outcome strata (success = Pass or Distinction) from the primary bundle.
pub fn final_outcome_strata(primary: &SourceBundle, cohort: &[StudentId]) -> Vec<bool> {
    let by_id: HashMap<&StudentId, bool> = primary
        .demographics
        .iter()
        .map(|d| (&d.student_id, d.final_result.is_some_and(|r| r.succeeded())))
        .collect();
    cohort
        .iter()
        .map(|id| by_id.get(id).copied().unwrap_or(false))
        .collect()
}

/// Predictions of both models at one checkpoint for the evaluated students.
#[derive(Debug, Clone)]
struct CheckpointPredictions {
    day: i32,
    truth: Vec<Label>,
    single: Option<Vec<Prediction>>,
    multi: Option<Vec<Prediction>>,
}

/// Single- and multi-source predictions for every checkpoint, ready to be
/// gated at any threshold without refitting.
#[derive(Debug, Clone)]
pub struct TrainedCheckpoints {
    eval: Vec<StudentId>,
    tags: BTreeSet<SourceTag>,
    checkpoints: Vec<CheckpointPredictions>,
}

impl TrainedCheckpoints {
    /// Fits both models once per checkpoint on `split.train` and scores
    /// `split.test`.
    pub fn fit<L: Learner>(data: &ExperimentData<'_>, split: &Split, learner: &L) -> Result<Self> {
        Ok(TrainedCheckpoints {
            eval: split.test.clone(),
            tags: data.additional_tags(),
            checkpoints: predict_checkpoints(data, &split.train, &split.test, learner, true, true)?,
        })
    }

    pub fn checkpoint_days(&self) -> Vec<i32> {
        self.checkpoints.iter().map(|c| c.day).collect()
    }

    pub fn ss(&self) -> PredictionMatrix {
        fixed_matrix(&self.eval, &self.checkpoints, false, &self.tags)
    }

    pub fn ms(&self) -> PredictionMatrix {
        fixed_matrix(&self.eval, &self.checkpoints, true, &self.tags)
    }

    pub fn fep(&self, gate: &GateConfig) -> Result<(PredictionMatrix, AcquisitionLedger)> {
        validate_gate(gate)?;
        Ok(gated_matrix(
            &self.eval,
            &self.checkpoints,
            gate,
            &self.tags,
        ))
    }

    pub fn runs(&self, gate: &GateConfig) -> Result<ModelRuns> {
        let (fep, fep_ledger) = self.fep(gate)?;
        Ok(ModelRuns {
            ss: self.ss(),
            ms: self.ms(),
            fep,
            fep_ledger,
        })
    }
}

fn has_later_assessment(primary: &SourceBundle, day: i32) -> bool {
    primary
        .assessment_catalog
        .iter()
        .any(|a| a.deadline_day.is_some_and(|d| d > day))
}

fn predict_checkpoints<L: Learner>(
    data: &ExperimentData<'_>,
    train: &[StudentId],
    eval: &[StudentId],
    learner: &L,
    want_single: bool,
    want_multi: bool,
) -> Result<Vec<CheckpointPredictions>> {
    if train.is_empty() || eval.is_empty() {
        return Err(Error::Data(
            "train and evaluation partitions must be nonempty".into(),
        ));
    }
    let primary = FeatureBuilder::new(data.primary, &data.features);
    let extra: Vec<FeatureBuilder<'_>> = data
        .additional
        .iter()
        .map(|b| FeatureBuilder::new(b, &data.features))
        .collect();
    let days: Vec<i32> = data
        .schedule
        .days()
        .iter()
        .copied()
        .filter(|&d| {
            let keep = has_later_assessment(data.primary, d);
            if !keep {
                log::warn!("dropping checkpoint day {d}: no later assessment to label");
            }
            keep
        })
        .collect();

    let per_day = |day: i32| -> Result<CheckpointPredictions> {
        let y_train = label_next_assessment(data.primary, day, train, data.pass_threshold)?;
        let y_eval = label_next_assessment(data.primary, day, eval, data.pass_threshold)?;
        let p_train = primary.at(day, train)?;
        let p_eval = primary.at(day, eval)?;
        let single = if want_single {
            Some(learner.fit(&p_train, &y_train)?.predict(&p_eval)?)
        } else {
            None
        };
        let multi = if want_multi {
            let mut c_train = p_train;
            let mut c_eval = p_eval;
            for b in &extra {
                c_train = c_train.hstack(&b.at(day.min(b_len(b)), train)?)?;
                c_eval = c_eval.hstack(&b.at(day.min(b_len(b)), eval)?)?;
            }
            Some(learner.fit(&c_train, &y_train)?.predict(&c_eval)?)
        } else {
            None
        };
        Ok(CheckpointPredictions {
            day,
            truth: y_eval.labels,
            single,
            multi,
        })
    };
    days.into_par_iter().map(per_day).collect()
}

// Additional bundles describe finished courses; their aggregates ignore the
// checkpoint, which only has to lie inside the bundle's span.
fn b_len(b: &FeatureBuilder<'_>) -> i32 {
    b.span() as i32
}

fn cell(p: &Prediction, truth: Label, phase: Phase, sources: &BTreeSet<SourceTag>) -> Cell {
    Cell {
        predicted: p.predicted_class,
        truth,
        p_success: p.p_success,
        confidence: p.confidence,
        correct: p.predicted_class == truth,
        phase,
        sources_used: sources.clone(),
    }
}

fn fixed_matrix(
    eval: &[StudentId],
    cps: &[CheckpointPredictions],
    multi: bool,
    tags: &BTreeSet<SourceTag>,
) -> PredictionMatrix {
    let mut sources = BTreeSet::from([SourceTag::Primary]);
    if multi {
        sources.extend(tags.iter().copied());
    }
    let phase = if multi { Phase::Two } else { Phase::One };
    let mut cells = Vec::with_capacity(eval.len() * cps.len());
    for i in 0..eval.len() {
        for cp in cps {
            let preds = if multi { &cp.multi } else { &cp.single };
            let p = &preds.as_ref().expect("requested predictions")[i];
            cells.push(cell(p, cp.truth[i], phase, &sources));
        }
    }
    PredictionMatrix {
        student_ids: eval.to_vec(),
        checkpoint_days: cps.iter().map(|c| c.day).collect(),
        cells,
    }
}

fn gated_matrix(
    eval: &[StudentId],
    cps: &[CheckpointPredictions],
    gate: &GateConfig,
    tags: &BTreeSet<SourceTag>,
) -> (PredictionMatrix, AcquisitionLedger) {
    let single_sources = BTreeSet::from([SourceTag::Primary]);
    let mut multi_sources = single_sources.clone();
    multi_sources.extend(tags.iter().copied());
    let mut ledger = AcquisitionLedger::new();
    let t_count = cps.len();
    let mut cells: Vec<Option<Cell>> = vec![None; eval.len() * t_count];
    for (t, cp) in cps.iter().enumerate() {
        let single = cp.single.as_ref().expect("single-source predictions");
        let multi = cp.multi.as_ref().expect("multi-source predictions");
        for (i, id) in eval.iter().enumerate() {
            let escalate = ledger.holds_any(id) || gate.fires(single[i].confidence);
            let c = if escalate {
                for tag in tags {
                    ledger.acquire(id, *tag, t);
                }
                cell(&multi[i], cp.truth[i], Phase::Two, &multi_sources)
            } else {
                cell(&single[i], cp.truth[i], Phase::One, &single_sources)
            };
            cells[i * t_count + t] = Some(c);
        }
    }
    let matrix = PredictionMatrix {
        student_ids: eval.to_vec(),
        checkpoint_days: cps.iter().map(|c| c.day).collect(),
        cells: cells
            .into_iter()
            .map(|c| c.expect("every cell filled"))
            .collect(),
    };
    (matrix, ledger)
}

/// Single-source model on the primary bundle.
pub fn run_ss<L: Learner>(
    data: &ExperimentData<'_>,
    split: &Split,
    learner: &L,
) -> Result<PredictionMatrix> {
    let cps = predict_checkpoints(data, &split.train, &split.test, learner, true, false)?;
    Ok(fixed_matrix(
        &split.test,
        &cps,
        false,
        &data.additional_tags(),
    ))
}

/// Multi-source model on the primary and every additional bundle.
pub fn run_ms<L: Learner>(
    data: &ExperimentData<'_>,
    split: &Split,
    learner: &L,
) -> Result<PredictionMatrix> {
    let cps = predict_checkpoints(data, &split.train, &split.test, learner, false, true)?;
    Ok(fixed_matrix(
        &split.test,
        &cps,
        true,
        &data.additional_tags(),
    ))
}

/// Gated two-phase model.
pub fn run_fep<L: Learner>(
    data: &ExperimentData<'_>,
    split: &Split,
    learner: &L,
    gate: &GateConfig,
) -> Result<(PredictionMatrix, AcquisitionLedger)> {
    validate_gate(gate)?;
    let cps = predict_checkpoints(data, &split.train, &split.test, learner, true, true)?;
    Ok(gated_matrix(
        &split.test,
        &cps,
        gate,
        &data.additional_tags(),
    ))
}

fn validate_gate(gate: &GateConfig) -> Result<()> {
    gate::validate_threshold(gate.threshold)
}

/// All three models from one set of trained per-checkpoint models.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelRuns {
    pub ss: PredictionMatrix,
    pub ms: PredictionMatrix,
    pub fep: PredictionMatrix,
    pub fep_ledger: AcquisitionLedger,
}

impl ModelRuns {
    /// Cross-model invariants: correctness flags, phase/source agreement,
    /// phase-two cells equal to the multi-source cells, and ledger bounds.
    pub fn check_invariants(&self) -> Result<()> {
        for m in [&self.ss, &self.ms, &self.fep] {
            m.check_invariants()?;
        }
        for (f, (s, m)) in self
            .fep
            .cells
            .iter()
            .zip(self.ss.cells.iter().zip(&self.ms.cells))
        {
            let expected = if f.phase == Phase::Two { m } else { s };
            if f != expected {
                return Err(Error::Invariant(
                    "gated cell differs from the model that produced it".into(),
                ));
            }
        }
        for (id, tag, at) in self.fep_ledger.iter() {
            let i = self
                .fep
                .student_ids
                .iter()
                .position(|s| s == id)
                .ok_or_else(|| Error::Invariant(format!("ledger holds unknown student {id}")))?;
            for (t, c) in self.fep.row(i).iter().enumerate() {
                if c.sources_used.contains(&tag) && t < at {
                    return Err(Error::Invariant(format!(
                        "{id} used {tag} at checkpoint {t} before acquiring it at {at}"
                    )));
                }
            }
        }
        let cohort = &self.fep.student_ids;
        let ss = data_consumption(&self.ss.implied_ledger(), cohort, 1);
        let fep = data_consumption(&self.fep_ledger, cohort, 1);
        let ms = data_consumption(&self.ms.implied_ledger(), cohort, 1);
        if !(ss <= fep && fep <= ms) {
            return Err(Error::Invariant(format!(
                "consumption ordering violated: ss {ss}, fep {fep}, ms {ms}"
            )));
        }
        Ok(())
    }
}

pub fn run_all<L: Learner>(
    data: &ExperimentData<'_>,
    split: &Split,
    learner: &L,
    gate: &GateConfig,
) -> Result<ModelRuns> {
    validate_gate(gate)?;
    TrainedCheckpoints::fit(data, split, learner)?.runs(gate)
}

/// Pick the gate threshold on a holdout carved out of the training partition.
///
/// The training students are split (stratified, `holdout_fraction`) into a
/// fitting and a holdout part; both models are fitted once per checkpoint and
/// every threshold in `grid` is scored by gated accuracy over all holdout
/// cells.
pub fn tune_gate<L: Learner>(
    data: &ExperimentData<'_>,
    train: &[StudentId],
    learner: &L,
    grid: &[f64],
    holdout_fraction: f64,
    seed: u64,
) -> Result<TunedGate> {
    if grid.is_empty() {
        return Err(Error::Config("gate grid is empty".into()));
    }
    for &t in grid {
        gate::validate_threshold(t)?;
    }
    let strata = final_outcome_strata(data.primary, train);
    let inner = stratified_split(train, &strata, holdout_fraction, seed)?;
    let trained = TrainedCheckpoints::fit(data, &inner, learner)?;
    let trials: Vec<GateTrial> = grid
        .iter()
        .map(|&threshold| {
            let gate = GateConfig {
                kind: GateKind::ConfidenceThreshold,
                threshold,
                calibration: Calibration::HoldoutTuned,
            };
            let (m, ledger) =
                gated_matrix(&trained.eval, &trained.checkpoints, &gate, &trained.tags);
            let correct = m.cells.iter().filter(|c| c.correct).count();
            GateTrial {
                threshold,
                accuracy: correct as f64 / m.cells.len().max(1) as f64,
                consumption: data_consumption(&ledger, &trained.eval, 1),
            }
        })
        .collect();
    let best = select_trial(&trials).expect("grid is nonempty");
    Ok(TunedGate {
        gate: GateConfig {
            kind: GateKind::ConfidenceThreshold,
            threshold: best.threshold,
            calibration: Calibration::HoldoutTuned,
        },
        trials,
    })
}
