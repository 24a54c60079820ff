//! Configuration-driven runs of the three models over several seeds, and the
//! text report rendered from a finished run directory.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{
    derive_schedule, explicit_schedule, CheckpointSchedule, FeatureBuilder, FeatureConfig,
    REFERENCE_CHECKPOINT_DAYS,
};
use crate::ingest::{
    build_additional_source, build_primary_source, experiment_cohort, generate_synthetic,
    load_oulad, CohortSummary, LoadOptions, SourceBundle, SyntheticSpec,
};
use crate::learner::BoostingConfig;
use crate::metrics::{
    consumption_reduction_percent, format_consumption, metrics_csv, parse_metrics_csv, ModelMetrics,
};
use crate::pipeline::{
    final_outcome_strata, run_all, stratified_split, tune_gate, ExperimentData, GateConfig,
    GateTrial,
};

pub const MODELS: [&str; 3] = ["ss", "ms", "fep"];

/// Cohort reported for the reference course in the original study.
pub const REFERENCE_COHORT: CohortSummary = CohortSummary {
    students: 694,
    succeeded: 378,
    failed: 316,
};

/// Ten-point threshold grid used when the config names neither a grid nor a
/// fixed threshold.
pub fn default_gate_grid() -> Vec<f64> {
    let mut g = vec![0.5 + 1e-9];
    g.extend((11..=19).map(|k| k as f64 / 20.0));
    g
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oulad_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticSpec>,
    #[serde(default = "default_course")]
    pub course_id: String,
    #[serde(default = "default_semester")]
    pub semester_id: String,
    /// Overrides the schedule derived from assessment deadlines.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoints: Option<Vec<i32>>,
    #[serde(default = "default_bad_rows")]
    pub bad_row_fraction: f64,
}

fn default_course() -> String {
    "CCC".into()
}
fn default_semester() -> String {
    "2014J".into()
}
fn default_bad_rows() -> f64 {
    0.001
}
fn default_pass() -> f64 {
    40.0
}
fn default_test_fraction() -> f64 {
    0.2
}
fn default_holdout() -> f64 {
    0.25
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    #[serde(default = "default_pass")]
    pub pass_threshold: f64,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default = "default_holdout")]
    pub holdout_fraction: f64,
    pub data: DataConfig,
    #[serde(default)]
    pub learner: BoostingConfig,
    #[serde(default)]
    pub features: FeatureConfig,
    #[serde(default)]
    pub gate: GateSpec,
    /// Run record written by a previous run; ignored on input.
    #[serde(default, skip_serializing)]
    pub manifest: Option<toml::Table>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config; relative paths inside it resolve against its directory.
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: ExperimentConfig =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(Path::new("."));
        cfg.output_dir = base.join(&cfg.output_dir);
        cfg.data.oulad_dir = cfg.data.oulad_dir.as_deref().map(|d| base.join(d));
        cfg.validate()
            .map_err(|e| within(&path.display().to_string(), e))?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        match (&self.data.oulad_dir, &self.data.synthetic) {
            (Some(_), Some(_)) => {
                return bad("data: set exactly one of oulad_dir and synthetic, not both".into())
            }
            (None, None) => return bad("data: set one of oulad_dir or synthetic".into()),
            (None, Some(spec)) => spec.validate().map_err(|e| within("data.synthetic", e))?,
            (Some(_), None) => {}
        }
        if self.seeds.is_empty() {
            return bad("seeds: at least one seed is required".into());
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return bad("seeds: duplicate seed".into());
        }
        if !(0.0..=100.0).contains(&self.pass_threshold) {
            return bad(format!(
                "pass_threshold: {} outside [0, 100]",
                self.pass_threshold
            ));
        }
        for (name, f) in [
            ("test_fraction", self.test_fraction),
            ("holdout_fraction", self.holdout_fraction),
        ] {
            if !(f > 0.0 && f < 1.0) {
                return bad(format!("{name}: {f} outside (0, 1)"));
            }
        }
        if !(self.data.bad_row_fraction >= 0.0 && self.data.bad_row_fraction < 1.0) {
            return bad("data.bad_row_fraction: must lie in [0, 1)".into());
        }
        if let Some(days) = &self.data.checkpoints {
            if days.len() < 2 || days.windows(2).any(|w| w[0] >= w[1]) {
                return bad("data.checkpoints: need at least 2 strictly increasing days".into());
            }
        }
        self.learner.validate().map_err(|e| within("learner", e))?;
        match (&self.gate.grid, self.gate.threshold) {
            (Some(_), Some(_)) => return bad("gate: set grid or threshold, not both".into()),
            (Some(grid), None) => {
                if grid.is_empty() {
                    return bad("gate.grid: empty".into());
                }
                for &t in grid {
                    crate::pipeline::gate::validate_threshold(t)
                        .map_err(|e| within("gate.grid", e))?;
                }
            }
            (None, Some(t)) => crate::pipeline::gate::validate_threshold(t)
                .map_err(|e| within("gate.threshold", e))?,
            (None, None) => {}
        }
        Ok(())
    }

    pub fn gate_grid(&self) -> Vec<f64> {
        self.gate.grid.clone().unwrap_or_else(default_gate_grid)
    }
}

fn within(context: &str, e: Error) -> Error {
    match e {
        Error::Config(m) => Error::Config(format!("{context}: {m}")),
        other => other,
    }
}

/// Primary and additional bundles for one seed.
struct SeedData {
    primary: SourceBundle,
    additional: Vec<SourceBundle>,
}

fn oulad_data(cfg: &ExperimentConfig, dir: &Path) -> Result<SeedData> {
    let opts = LoadOptions {
        bad_row_fraction: cfg.data.bad_row_fraction,
        ..LoadOptions::default()
    };
    let tables = load_oulad(dir, &opts)?;
    for d in &tables.diagnostics {
        log::warn!("{}: row {}: {}", d.file, d.row, d.message);
    }
    let primary = build_primary_source(&tables, &cfg.data.course_id, &cfg.data.semester_id, None)?;
    let additional = build_additional_source(&tables, &primary, None)?;
    Ok(SeedData {
        primary,
        additional: vec![additional],
    })
}

fn schedule_for(cfg: &ExperimentConfig, primary: &SourceBundle) -> Result<CheckpointSchedule> {
    match &cfg.data.checkpoints {
        Some(days) => explicit_schedule(days.clone(), primary),
        None => derive_schedule(primary),
    }
}

/// Everything a seed produced, as written to `seed_<s>/`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedOutcome {
    pub seed: u64,
    pub metrics: Vec<ModelMetrics>,
    pub gate: GateConfig,
    pub trials: Vec<GateTrial>,
    pub cohort: CohortSummary,
    pub test_students: usize,
    pub gated_students: usize,
    pub checkpoint_days: Vec<i32>,
    pub feature_names: Vec<String>,
}

fn run_seed(
    cfg: &ExperimentConfig,
    data: &SeedData,
    seed: u64,
) -> Result<(SeedOutcome, BTreeMap<String, String>)> {
    let schedule = schedule_for(cfg, &data.primary)?;
    let exp = ExperimentData {
        primary: &data.primary,
        additional: &data.additional,
        schedule: &schedule,
        features: cfg.features.clone(),
        pass_threshold: cfg.pass_threshold,
    };
    let cohort = experiment_cohort(&data.primary, &data.additional);
    if cohort.is_empty() {
        return Err(Error::Data("no student appears in every source".into()));
    }
    let strata = final_outcome_strata(&data.primary, &cohort);
    let split = stratified_split(&cohort, &strata, cfg.test_fraction, seed)?;
    let learner = BoostingConfig {
        seed: cfg.learner.seed.wrapping_add(seed),
        ..cfg.learner.clone()
    };
    let (gate, trials) = match cfg.gate.threshold {
        Some(t) => (GateConfig::fixed(t)?, Vec::new()),
        None => {
            let tuned = tune_gate(
                &exp,
                &split.train,
                &learner,
                &cfg.gate_grid(),
                cfg.holdout_fraction,
                seed ^ 0x9e37_79b9_7f4a_7c15,
            )?;
            (tuned.gate, tuned.trials)
        }
    };
    let runs = run_all(&exp, &split, &learner, &gate)?;
    runs.check_invariants()?;

    let metrics = vec![
        ModelMetrics::compute("ss", &runs.ss, &runs.ss.implied_ledger()),
        ModelMetrics::compute("ms", &runs.ms, &runs.ms.implied_ledger()),
        ModelMetrics::compute("fep", &runs.fep, &runs.fep_ledger),
    ];
    let mut names: Vec<String> = FeatureBuilder::new(&data.primary, &cfg.features)
        .names()
        .to_vec();
    for b in &data.additional {
        names.extend(
            FeatureBuilder::new(b, &cfg.features)
                .names()
                .iter()
                .cloned(),
        );
    }

    let mut files = BTreeMap::new();
    files.insert("metrics.csv".to_string(), metrics_csv(&metrics));
    files.insert("predictions_ss.csv".to_string(), runs.ss.to_csv());
    files.insert("predictions_ms.csv".to_string(), runs.ms.to_csv());
    files.insert("predictions_fep.csv".to_string(), runs.fep.to_csv());
    let mut grid = String::from("threshold,accuracy,consumption,chosen\n");
    for t in &trials {
        let _ = writeln!(
            grid,
            "{},{},{},{}",
            t.threshold,
            t.accuracy,
            t.consumption,
            t.threshold == gate.threshold
        );
    }
    files.insert("gate_grid.csv".to_string(), grid);

    let outcome = SeedOutcome {
        seed,
        metrics,
        gate,
        trials,
        cohort: CohortSummary::of(&data.primary, &cohort),
        test_students: split.test.len(),
        gated_students: runs.fep_ledger.n_students(),
        checkpoint_days: runs.fep.checkpoint_days.clone(),
        feature_names: names,
    };
    Ok((outcome, files))
}

/// Result of a whole run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub seeds: Vec<SeedOutcome>,
}

/// Runs every seed, writing per-seed files, `aggregate.csv`, `ess_plot.csv`
/// and `manifest.toml` under the output directory. `jobs` bounds the worker
/// threads; outputs do not depend on it.
pub fn run_experiment(cfg: &ExperimentConfig, jobs: Option<usize>) -> Result<RunSummary> {
    cfg.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        if j == 0 {
            return Err(Error::Config("jobs must be at least 1".into()));
        }
        builder = builder.num_threads(j);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Data(format!("cannot start worker pool: {e}")))?;

    let shared = match &cfg.data.oulad_dir {
        Some(dir) => Some(oulad_data(cfg, dir)?),
        None => None,
    };
    let results: Vec<Result<(SeedOutcome, BTreeMap<String, String>)>> = pool.install(|| {
        cfg.seeds
            .par_iter()
            .map(|&seed| match (&shared, &cfg.data.synthetic) {
                (Some(d), _) => run_seed(cfg, d, seed),
                (None, Some(spec)) => {
                    let (primary, additional) = generate_synthetic(spec, seed)?;
                    let d = SeedData {
                        primary,
                        additional: vec![additional],
                    };
                    run_seed(cfg, &d, seed)
                }
                (None, None) => unreachable!("validated"),
            })
            .collect()
    });

    let out = &cfg.output_dir;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut seeds = Vec::with_capacity(results.len());
    for r in results {
        let (outcome, files) = r?;
        let dir = out.join(format!("seed_{}", outcome.seed));
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for (name, body) in files {
            let p = dir.join(name);
            fs::write(&p, body).map_err(|e| Error::io(&p, e))?;
        }
        log::info!(
            "seed {}: threshold {}, gated {}/{}",
            outcome.seed,
            outcome.gate.threshold,
            outcome.gated_students,
            outcome.test_students
        );
        seeds.push(outcome);
    }

    let per_seed: Vec<Vec<ModelMetrics>> = seeds.iter().map(|s| s.metrics.clone()).collect();
    let agg = aggregate(&per_seed)?;
    write(out, "aggregate.csv", &aggregate_csv(&agg))?;
    write(out, "ess_plot.csv", &ess_plot_csv(&agg))?;
    write(out, "manifest.toml", &manifest_toml(cfg, &seeds))?;
    Ok(RunSummary {
        output_dir: out.clone(),
        seeds,
    })
}

fn write(dir: &Path, name: &str, body: &str) -> Result<()> {
    let p = dir.join(name);
    fs::write(&p, body).map_err(|e| Error::io(&p, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single seed.
    pub std: f64,
}

impl MeanStd {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let std = if xs.len() < 2 {
            0.0
        } else {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        MeanStd { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub checkpoint_day: i32,
    pub accuracy: MeanStd,
    pub earliness: MeanStd,
    pub stability: MeanStd,
    pub ess: MeanStd,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelAggregate {
    pub model: String,
    pub n_seeds: usize,
    pub rows: Vec<AggregateRow>,
    pub consumption: MeanStd,
}

/// Mean and spread across seeds, per model and checkpoint.
pub fn aggregate(per_seed: &[Vec<ModelMetrics>]) -> Result<Vec<ModelAggregate>> {
    let first = per_seed
        .first()
        .ok_or_else(|| Error::Data("no seeds to aggregate".into()))?;
    let mut out = Vec::new();
    for (mi, m0) in first.iter().enumerate() {
        let runs: Vec<&ModelMetrics> = per_seed
            .iter()
            .map(|s| {
                s.get(mi)
                    .filter(|m| m.model == m0.model)
                    .ok_or_else(|| Error::Data(format!("model {} missing in a seed", m0.model)))
            })
            .collect::<Result<_>>()?;
        let days: Vec<i32> = m0.checkpoints.iter().map(|c| c.checkpoint_day).collect();
        if runs.iter().any(|m| {
            m.checkpoints
                .iter()
                .map(|c| c.checkpoint_day)
                .ne(days.iter().copied())
        }) {
            return Err(Error::Data(format!(
                "seeds disagree on the checkpoints of model {}",
                m0.model
            )));
        }
        let rows = (0..days.len())
            .map(|t| {
                let col = |f: fn(&crate::metrics::CheckpointMetrics) -> f64| {
                    MeanStd::of(
                        &runs
                            .iter()
                            .map(|m| f(&m.checkpoints[t]))
                            .collect::<Vec<_>>(),
                    )
                };
                AggregateRow {
                    checkpoint_day: days[t],
                    accuracy: col(|c| c.accuracy),
                    earliness: col(|c| c.earliness),
                    stability: col(|c| c.stability),
                    ess: col(|c| c.ess),
                }
            })
            .collect();
        out.push(ModelAggregate {
            model: m0.model.clone(),
            n_seeds: runs.len(),
            rows,
            consumption: MeanStd::of(&runs.iter().map(|m| m.consumption).collect::<Vec<_>>()),
        });
    }
    Ok(out)
}

pub fn aggregate_csv(agg: &[ModelAggregate]) -> String {
    let mut out = String::from(
        "model,checkpoint_day,n_seeds,accuracy_mean,accuracy_std,earliness_mean,earliness_std,\
         stability_mean,stability_std,ess_mean,ess_std,consumption_mean,consumption_std\n",
    );
    for m in agg {
        for r in &m.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},,",
                m.model,
                r.checkpoint_day,
                m.n_seeds,
                r.accuracy.mean,
                r.accuracy.std,
                r.earliness.mean,
                r.earliness.std,
                r.stability.mean,
                r.stability.std,
                r.ess.mean,
                r.ess.std
            );
        }
    }
    for m in agg {
        let _ = writeln!(
            out,
            "{},,{},,,,,,,,,{},{}",
            m.model, m.n_seeds, m.consumption.mean, m.consumption.std
        );
    }
    out
}

/// Mean ESS by checkpoint day, one column per model.
pub fn ess_plot_csv(agg: &[ModelAggregate]) -> String {
    let mut out = String::from("checkpoint_day");
    for m in agg {
        let _ = write!(out, ",{}", m.model);
    }
    out.push('\n');
    let days: Vec<i32> = agg
        .first()
        .map(|m| m.rows.iter().map(|r| r.checkpoint_day).collect())
        .unwrap_or_default();
    for (t, d) in days.iter().enumerate() {
        let _ = write!(out, "{d}");
        for m in agg {
            let _ = write!(out, ",{}", m.rows[t].ess.mean);
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub seed: u64,
    pub gate_threshold: f64,
    pub gate_calibration: crate::pipeline::Calibration,
    pub cohort_students: usize,
    pub cohort_succeeded: usize,
    pub cohort_failed: usize,
    pub test_students: usize,
    pub gated_students: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub software: String,
    pub data_source: String,
    pub checkpoint_days: Vec<i32>,
    pub schedule_origin: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_checkpoint_days: Option<Vec<i32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_cohort: Option<CohortSummary>,
    pub feature_names: Vec<String>,
    pub seed: Vec<SeedRecord>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    #[serde(flatten)]
    config: &'a ExperimentConfig,
    manifest: RunRecord,
}

#[derive(Deserialize)]
struct ManifestIn {
    seeds: Vec<u64>,
    manifest: RunRecord,
}

/// The resolved config plus a `[manifest]` record of what the run did. The
/// file is itself a valid config for rerunning the experiment.
pub fn manifest_toml(cfg: &ExperimentConfig, seeds: &[SeedOutcome]) -> String {
    let first = &seeds[0];
    let is_oulad = cfg.data.oulad_dir.is_some();
    let record = RunRecord {
        software: format!("fep-core {}", env!("CARGO_PKG_VERSION")),
        data_source: if is_oulad { "oulad" } else { "synthetic" }.into(),
        checkpoint_days: first.checkpoint_days.clone(),
        schedule_origin: if cfg.data.checkpoints.is_some() {
            "explicit"
        } else {
            "assessment_deadlines"
        }
        .into(),
        reference_checkpoint_days: is_oulad.then(|| REFERENCE_CHECKPOINT_DAYS.to_vec()),
        reference_cohort: is_oulad.then_some(REFERENCE_COHORT),
        feature_names: first.feature_names.clone(),
        seed: seeds
            .iter()
            .map(|s| SeedRecord {
                seed: s.seed,
                gate_threshold: s.gate.threshold,
                gate_calibration: s.gate.calibration,
                cohort_students: s.cohort.students,
                cohort_succeeded: s.cohort.succeeded,
                cohort_failed: s.cohort.failed,
                test_students: s.test_students,
                gated_students: s.gated_students,
            })
            .collect(),
    };
    toml::to_string(&Manifest {
        config: cfg,
        manifest: record,
    })
    .expect("manifest serializes")
}

fn require(path: &Path) -> Result<String> {
    if !path.is_file() {
        return Err(Error::MissingFile {
            file: path.display().to_string(),
        });
    }
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Recomputes the aggregate from the per-seed metric files of a finished run.
pub fn load_run(run_dir: &Path) -> Result<(RunRecord, Vec<ModelAggregate>)> {
    let text = require(&run_dir.join("manifest.toml"))?;
    let m: ManifestIn =
        toml::from_str(&text).map_err(|e| Error::Decode(format!("manifest.toml: {e}")))?;
    require(&run_dir.join("aggregate.csv"))?;
    let mut per_seed = Vec::new();
    for s in &m.seeds {
        let p = run_dir.join(format!("seed_{s}")).join("metrics.csv");
        per_seed.push(parse_metrics_csv(&require(&p)?)?);
    }
    let agg = aggregate(&per_seed)?;
    Ok((m.manifest, agg))
}

fn model_label(m: &str) -> String {
    m.to_uppercase()
}

/// Accuracy and ESS tables (models as rows, checkpoint days as columns),
/// then the consumption line.
pub fn render_report(run_dir: &Path) -> Result<String> {
    let (record, agg) = load_run(run_dir)?;
    let n_seeds = agg.first().map_or(0, |m| m.n_seeds);
    let mut out = String::new();
    let table = |out: &mut String, title: &str, pick: fn(&AggregateRow) -> MeanStd| {
        let _ = writeln!(out, "{title} (mean ± std over {n_seeds} seeds)");
        let _ = write!(out, "{:<6}", "day");
        for r in &agg[0].rows {
            let _ = write!(out, " {:>13}", r.checkpoint_day);
        }
        out.push('\n');
        for m in &agg {
            let _ = write!(out, "{:<6}", model_label(&m.model));
            for r in &m.rows {
                let v = pick(r);
                let _ = write!(out, " {:>13}", format!("{:.3}±{:.3}", v.mean, v.std));
            }
            out.push('\n');
        }
        out.push('\n');
    };
    table(&mut out, "Accuracy", |r| r.accuracy);
    table(&mut out, "ESS", |r| r.ess);

    let cons: BTreeMap<&str, f64> = agg
        .iter()
        .map(|m| (m.model.as_str(), m.consumption.mean))
        .collect();
    let parts: Vec<String> = agg
        .iter()
        .map(|m| {
            format!(
                "{} {}",
                model_label(&m.model),
                format_consumption(m.consumption.mean)
            )
        })
        .collect();
    let _ = write!(out, "Consumption: {}", parts.join(", "));
    if let (Some(&ms), Some(&fep)) = (cons.get("ms"), cons.get("fep")) {
        let _ = write!(
            out,
            ", reduction {}%",
            consumption_reduction_percent(ms, fep)
        );
    }
    out.push('\n');

    if let Some(reference) = record.reference_cohort {
        let _ = writeln!(
            out,
            "\nCohort (achieved vs reference {} / {} succeeded / {} failed):",
            reference.students, reference.succeeded, reference.failed
        );
        for s in &record.seed {
            let _ = writeln!(
                out,
                "  seed {}: {} students, {} succeeded, {} failed (delta {:+})",
                s.seed,
                s.cohort_students,
                s.cohort_succeeded,
                s.cohort_failed,
                s.cohort_students as i64 - reference.students as i64
            );
        }
    }
    let thresholds: Vec<String> = record
        .seed
        .iter()
        .map(|s| format!("{}:{}", s.seed, s.gate_threshold))
        .collect();
    let _ = writeln!(out, "Gate thresholds by seed: {}", thresholds.join(" "));
    Ok(out)
}
