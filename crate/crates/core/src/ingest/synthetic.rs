//! Seeded two-source benchmark generator.
//!
//! Each student has a latent ability quantized to steps of 0.1. Assessment
//! `k` has a difficulty offset by 0.05 from that grid, so with zero noise no
//! student sits exactly on a pass/fail boundary. Recorded scores are
//! `40 + 10 * (ability - difficulty + primary_noise * e)`. The primary course
//! exposes those scores plus activity logs driven by a noisy view of ability;
//! the prior course exposes a view of ability whose precision grows with
//! `additional_signal` (0 = pure noise, 1 = exact).

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::bundle::{
    AssessmentInfo, AssessmentKind, AssessmentRecord, FinalResult, InteractionEvent, SourceBundle,
    SourceTag, StudentDemographics, StudentId, Vocabularies, BUNDLE_FORMAT, BUNDLE_VERSION,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticSpec {
    pub n_students: i64,
    pub n_checkpoints: i64,
    /// Standard deviation of per-assessment and activity noise, in ability units.
    pub primary_noise: f64,
    /// Informativeness of the prior course about ability, in [0, 1].
    pub additional_signal: f64,
    /// Difficulties are spread evenly over [-spread, spread].
    pub difficulty_spread: f64,
    pub days_between_deadlines: i64,
    /// Mean daily probability of activity for an average student.
    pub activity_rate: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_students: 1000,
            n_checkpoints: 8,
            primary_noise: 0.5,
            additional_signal: 0.9,
            difficulty_spread: 0.6,
            days_between_deadlines: 14,
            activity_rate: 0.5,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_students <= 0 {
            return Err(Error::Config(format!(
                "n_students must be positive, got {}",
                self.n_students
            )));
        }
        if self.n_checkpoints < 2 {
            return Err(Error::Config(format!(
                "n_checkpoints must be at least 2, got {}",
                self.n_checkpoints
            )));
        }
        if self.days_between_deadlines <= 0 {
            return Err(Error::Config(
                "days_between_deadlines must be positive".into(),
            ));
        }
        if !(self.primary_noise.is_finite() && self.primary_noise >= 0.0) {
            return Err(Error::Config(
                "primary_noise must be finite and >= 0".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.additional_signal) {
            return Err(Error::Config("additional_signal must lie in [0, 1]".into()));
        }
        if !(self.difficulty_spread.is_finite() && self.difficulty_spread >= 0.0) {
            return Err(Error::Config(
                "difficulty_spread must be finite and >= 0".into(),
            ));
        }
        if !(self.activity_rate > 0.0 && self.activity_rate < 1.0) {
            return Err(Error::Config("activity_rate must lie in (0, 1)".into()));
        }
        let length = self.days_between_deadlines * (self.n_checkpoints + 1);
        if length > 100_000 {
            return Err(Error::Config("course length exceeds 100000 days".into()));
        }
        if self.n_students > 1_000_000 {
            return Err(Error::Config("n_students exceeds 1000000".into()));
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: SyntheticSpec = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("spec serialization is infallible")
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn course_length_days(&self) -> u32 {
        (self.days_between_deadlines * (self.n_checkpoints + 1)) as u32
    }

    /// Difficulty of assessment `k` (0-based; index `n_checkpoints` is the exam).
    pub fn difficulty(&self, k: usize) -> f64 {
        let n = self.n_checkpoints as f64;
        let raw = if n > 0.0 {
            -self.difficulty_spread + 2.0 * self.difficulty_spread * k as f64 / n
        } else {
            0.0
        };
        (raw * 10.0).round() / 10.0 + 0.05
    }
}

const PRIOR_LENGTH: u32 = 100;
const PRIOR_DEADLINES: [i32; 3] = [25, 50, 75];

fn vocabularies() -> Vocabularies {
    let own = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    Vocabularies {
        genders: own(&["F", "M"]),
        regions: own(&["North", "South", "East", "West"]),
        highest_education: own(&["Lower", "Middle", "Higher"]),
        age_bands: own(&["0-35", "35-55", "55<="]),
        activity_types: own(&["forum", "quiz", "resource"]),
    }
}

fn score(x: f64) -> f64 {
    ((40.0 + 10.0 * x).clamp(0.0, 100.0) * 10.0).round() / 10.0
}

fn result_of(exam: f64) -> FinalResult {
    if exam >= 70.0 {
        FinalResult::Distinction
    } else if exam >= 40.0 {
        FinalResult::Pass
    } else {
        FinalResult::Fail
    }
}

/// Generate a primary and an additional bundle. Pure in `(spec, seed)`.
pub fn generate_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<(SourceBundle, SourceBundle)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let std_normal: Normal<f64> = Normal::new(0.0, 1.0).expect("unit normal");
    let n = spec.n_students as usize;
    let t = spec.n_checkpoints as usize;
    let vocab = vocabularies();
    let length = spec.course_length_days();
    let step = spec.days_between_deadlines as i32;

    let ids: Vec<StudentId> = (0..n).map(|i| StudentId(format!("s{i:06}"))).collect();
    let ability: Vec<f64> = (0..n)
        .map(|_| (std_normal.sample(&mut rng) * 10.0).round() / 10.0)
        .collect();
    let activity_view: Vec<f64> = ability
        .iter()
        .map(|a| a + spec.primary_noise * std_normal.sample(&mut rng))
        .collect();

    let mut catalog = Vec::with_capacity(t + 1);
    for k in 0..=t {
        catalog.push(AssessmentInfo {
            assessment_id: format!("A{k:02}"),
            kind: if k == t {
                AssessmentKind::Exam
            } else {
                AssessmentKind::Tma
            },
            deadline_day: Some(step * (k as i32 + 1)),
            weight: if k == t { 100.0 } else { 0.0 },
        });
    }

    let mut demographics = Vec::with_capacity(n);
    let mut assessments = Vec::with_capacity(n * (t + 1));
    for i in 0..n {
        let mut exam = 0.0;
        for (k, info) in catalog.iter().enumerate() {
            let noise = spec.primary_noise * std_normal.sample(&mut rng);
            let s = score(ability[i] - spec.difficulty(k) + noise);
            let deadline = info.deadline_day.expect("synthetic deadlines are set");
            let early = if k == t { 0 } else { rng.random_range(0..=3) };
            assessments.push(AssessmentRecord {
                student_id: ids[i].clone(),
                assessment_id: info.assessment_id.clone(),
                deadline_day: info.deadline_day,
                submitted_day: Some(deadline - early),
                score: Some(s),
                weight: info.weight,
            });
            if k == t {
                exam = s;
            }
        }
        demographics.push(random_demographics(
            &mut rng,
            &vocab,
            ids[i].clone(),
            Some(result_of(exam)),
        ));
    }

    let mut events = Vec::new();
    let rate_logit = (spec.activity_rate / (1.0 - spec.activity_rate)).ln();
    for (i, id) in ids.iter().enumerate() {
        let v = activity_view[i];
        let p_active = 1.0 / (1.0 + (-(rate_logit + 0.8 * v)).exp());
        let intensity: Poisson<f64> = Poisson::new(3.0 * (0.3 * v).exp()).expect("positive rate");
        for day in -7..(length as i32) {
            if rng.random::<f64>() < p_active {
                let a = rng.random_range(0..vocab.activity_types.len());
                let clicks = 1 + intensity.sample(&mut rng) as u32;
                events.push(InteractionEvent {
                    student_id: id.clone(),
                    activity_type: vocab.activity_types[a].clone(),
                    day,
                    clicks,
                });
            }
        }
    }

    let primary = SourceBundle {
        source_tag: SourceTag::Primary,
        course_id: "SYN".into(),
        semester_id: "S1".into(),
        course_length_days: length,
        vocabularies: vocab.clone(),
        assessment_catalog: catalog,
        demographics,
        events,
        assessments,
    };

    // Prior course.
    let s = spec.additional_signal;
    let mut prior_catalog: Vec<AssessmentInfo> = PRIOR_DEADLINES
        .iter()
        .enumerate()
        .map(|(k, &d)| AssessmentInfo {
            assessment_id: format!("P{k:02}"),
            kind: AssessmentKind::Tma,
            deadline_day: Some(d),
            weight: 0.0,
        })
        .collect();
    prior_catalog.push(AssessmentInfo {
        assessment_id: "PEX".into(),
        kind: AssessmentKind::Exam,
        deadline_day: Some(PRIOR_LENGTH as i32),
        weight: 100.0,
    });
    let mut prior_demo = Vec::with_capacity(n);
    let mut prior_assess = Vec::with_capacity(n * prior_catalog.len());
    let mut prior_events = Vec::new();
    for i in 0..n {
        let view = s * ability[i] + (1.0 - s) * std_normal.sample(&mut rng);
        let mut exam = 0.0;
        for info in &prior_catalog {
            let sc = score(view);
            prior_assess.push(AssessmentRecord {
                student_id: ids[i].clone(),
                assessment_id: info.assessment_id.clone(),
                deadline_day: info.deadline_day,
                submitted_day: info.deadline_day,
                score: Some(sc),
                weight: info.weight,
            });
            exam = sc;
        }
        let final_result = result_of(exam);
        prior_demo.push(random_demographics(
            &mut rng,
            &vocab,
            ids[i].clone(),
            Some(final_result),
        ));
        for _ in 0..rng.random_range(5..15) {
            prior_events.push(InteractionEvent {
                student_id: ids[i].clone(),
                activity_type: vocab.activity_types
                    [rng.random_range(0..vocab.activity_types.len())]
                .clone(),
                day: rng.random_range(0..PRIOR_LENGTH as i32),
                clicks: rng.random_range(1..20),
            });
        }
    }
    // Demographics describe the same person in both courses.
    for (p, d) in prior_demo.iter_mut().zip(&primary.demographics) {
        let result = p.final_result;
        *p = d.clone();
        p.final_result = result;
    }
    let additional = SourceBundle {
        source_tag: SourceTag::Additional(0),
        course_id: "PRE".into(),
        semester_id: "S0".into(),
        course_length_days: PRIOR_LENGTH,
        vocabularies: vocab,
        assessment_catalog: prior_catalog,
        demographics: prior_demo,
        events: prior_events,
        assessments: prior_assess,
    };
    primary.validate()?;
    additional.validate()?;
    Ok((primary, additional))
}

fn random_demographics(
    rng: &mut ChaCha8Rng,
    vocab: &Vocabularies,
    id: StudentId,
    final_result: Option<FinalResult>,
) -> StudentDemographics {
    let pick = |rng: &mut ChaCha8Rng, xs: &[String]| xs[rng.random_range(0..xs.len())].clone();
    StudentDemographics {
        student_id: id,
        gender: pick(rng, &vocab.genders),
        region: pick(rng, &vocab.regions),
        highest_education: pick(rng, &vocab.highest_education),
        age_band: pick(rng, &vocab.age_bands),
        disability: rng.random::<f64>() < 0.1,
        num_prev_attempts: if rng.random::<f64>() < 0.15 { 1 } else { 0 },
        final_result,
    }
}

/// File names written by [`write_synthetic`].
pub const SYNTHETIC_FILES: [&str; 3] = ["primary.json", "additional.json", "schema.json"];

/// Generates both bundles and writes them, with a schema sidecar describing
/// the bundle layout, the spec and the seed, into `out_dir`.
pub fn write_synthetic(
    spec: &SyntheticSpec,
    seed: u64,
    out_dir: &Path,
) -> Result<Vec<std::path::PathBuf>> {
    let (primary, additional) = generate_synthetic(spec, seed)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let summary = |b: &SourceBundle| {
        serde_json::json!({
            "source_tag": b.source_tag.to_string(),
            "course_id": b.course_id,
            "semester_id": b.semester_id,
            "course_length_days": b.course_length_days,
            "students": b.demographics.len(),
            "events": b.events.len(),
            "assessment_records": b.assessments.len(),
            "assessments": b.assessment_catalog.iter().map(|a| &a.assessment_id).collect::<Vec<_>>(),
        })
    };
    let schema = serde_json::json!({
        "format": BUNDLE_FORMAT,
        "version": BUNDLE_VERSION,
        "seed": seed,
        "spec": spec,
        "fields": {
            "demographics": ["student_id", "gender", "region", "highest_education", "age_band",
                "disability", "num_prev_attempts", "final_result"],
            "events": ["student_id", "activity_type", "day", "clicks"],
            "assessments": ["student_id", "assessment_id", "deadline_day", "submitted_day",
                "score", "weight"],
            "assessment_catalog": ["assessment_id", "kind", "deadline_day", "weight"],
        },
        "vocabularies": primary.vocabularies,
        "files": {
            "primary.json": summary(&primary),
            "additional.json": summary(&additional),
        },
    });
    let paths: Vec<std::path::PathBuf> = SYNTHETIC_FILES.iter().map(|f| out_dir.join(f)).collect();
    primary.write(&paths[0])?;
    additional.write(&paths[1])?;
    let text = serde_json::to_string_pretty(&schema).expect("schema serializes");
    std::fs::write(&paths[2], text).map_err(|e| Error::io(&paths[2], e))?;
    Ok(paths)
}
