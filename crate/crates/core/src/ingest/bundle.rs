//! Per-source student data and its on-disk cache format.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Opaque student identifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StudentId(pub String);

impl StudentId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for StudentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for StudentId {
    fn from(s: &str) -> Self {
        StudentId(s.to_owned())
    }
}

impl From<u64> for StudentId {
    fn from(n: u64) -> Self {
        StudentId(n.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceTag {
    Primary,
    Additional(u32),
}

impl SourceTag {
    pub fn is_additional(self) -> bool {
        matches!(self, SourceTag::Additional(_))
    }
}

impl fmt::Display for SourceTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SourceTag::Primary => f.write_str("primary"),
            SourceTag::Additional(i) => write!(f, "additional{i}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FinalResult {
    Pass,
    Distinction,
    Fail,
    Withdrawn,
}

impl FinalResult {
    pub const ALL: [FinalResult; 4] = [
        FinalResult::Pass,
        FinalResult::Distinction,
        FinalResult::Fail,
        FinalResult::Withdrawn,
    ];

    /// Pass and Distinction count as success for cohort bookkeeping.
    pub fn succeeded(self) -> bool {
        matches!(self, FinalResult::Pass | FinalResult::Distinction)
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "Pass" => Some(FinalResult::Pass),
            "Distinction" => Some(FinalResult::Distinction),
            "Fail" => Some(FinalResult::Fail),
            "Withdrawn" => Some(FinalResult::Withdrawn),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FinalResult::Pass => "Pass",
            FinalResult::Distinction => "Distinction",
            FinalResult::Fail => "Fail",
            FinalResult::Withdrawn => "Withdrawn",
        }
    }
}

/// Closed vocabularies for every categorical column of a bundle. Values not
/// listed here are rejected when a bundle is validated.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabularies {
    pub genders: Vec<String>,
    pub regions: Vec<String>,
    pub highest_education: Vec<String>,
    pub age_bands: Vec<String>,
    pub activity_types: Vec<String>,
}

impl Vocabularies {
    /// Demographic vocabularies of the public OULAD release. Activity types
    /// are taken from the `vle` table at load time.
    pub fn oulad(activity_types: Vec<String>) -> Self {
        let own = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        Vocabularies {
            genders: own(&["F", "M"]),
            regions: own(&[
                "East Anglian Region",
                "East Midlands Region",
                "Ireland",
                "London Region",
                "North Region",
                "North Western Region",
                "Scotland",
                "South East Region",
                "South Region",
                "South West Region",
                "Wales",
                "West Midlands Region",
                "Yorkshire Region",
            ]),
            highest_education: own(&[
                "No Formal quals",
                "Lower Than A Level",
                "A Level or Equivalent",
                "HE Qualification",
                "Post Graduate Qualification",
            ]),
            age_bands: own(&["0-35", "35-55", "55<="]),
            activity_types,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudentDemographics {
    pub student_id: StudentId,
    pub gender: String,
    pub region: String,
    pub highest_education: String,
    pub age_band: String,
    pub disability: bool,
    pub num_prev_attempts: u32,
    /// Outcome of the course this bundle describes, when known.
    pub final_result: Option<FinalResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionEvent {
    pub student_id: StudentId,
    pub activity_type: String,
    /// Offset from course start; negative for pre-course activity.
    pub day: i32,
    pub clicks: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AssessmentKind {
    Tma,
    Cma,
    Exam,
}

impl AssessmentKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "TMA" => Some(AssessmentKind::Tma),
            "CMA" => Some(AssessmentKind::Cma),
            "Exam" => Some(AssessmentKind::Exam),
            _ => None,
        }
    }
}

/// Course-level description of one assessment, independent of submissions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessmentInfo {
    pub assessment_id: String,
    pub kind: AssessmentKind,
    pub deadline_day: Option<i32>,
    pub weight: f64,
}

impl AssessmentInfo {
    pub fn is_final(&self) -> bool {
        self.kind == AssessmentKind::Exam
    }
}

/// One student's submission of one assessment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessmentRecord {
    pub student_id: StudentId,
    pub assessment_id: String,
    pub deadline_day: Option<i32>,
    pub submitted_day: Option<i32>,
    pub score: Option<f64>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceBundle {
    pub source_tag: SourceTag,
    pub course_id: String,
    pub semester_id: String,
    pub course_length_days: u32,
    pub vocabularies: Vocabularies,
    pub assessment_catalog: Vec<AssessmentInfo>,
    pub demographics: Vec<StudentDemographics>,
    pub events: Vec<InteractionEvent>,
    pub assessments: Vec<AssessmentRecord>,
}

pub const BUNDLE_FORMAT: &str = "fep-bundle";
pub const BUNDLE_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct BundleFile {
    format: String,
    version: u32,
    bundle: SourceBundle,
}

impl SourceBundle {
    pub fn validate(&self) -> Result<()> {
        if self.course_length_days == 0 {
            return Err(Error::Data("course_length_days must be positive".into()));
        }
        let v = &self.vocabularies;
        let mut ids = HashSet::with_capacity(self.demographics.len());
        for d in &self.demographics {
            if !ids.insert(&d.student_id) {
                return Err(Error::Data(format!(
                    "duplicate student id {}",
                    d.student_id
                )));
            }
            for (field, value, vocab) in [
                ("gender", &d.gender, &v.genders),
                ("region", &d.region, &v.regions),
                (
                    "highest_education",
                    &d.highest_education,
                    &v.highest_education,
                ),
                ("age_band", &d.age_band, &v.age_bands),
            ] {
                if !vocab.contains(value) {
                    return Err(Error::Data(format!(
                        "student {}: {field} value {value:?} is not in the declared vocabulary",
                        d.student_id
                    )));
                }
            }
        }
        let activity: HashSet<&String> = v.activity_types.iter().collect();
        let span = self.course_length_days as i64;
        for e in &self.events {
            if !ids.contains(&e.student_id) {
                return Err(Error::Data(format!(
                    "event for unknown student {}",
                    e.student_id
                )));
            }
            if !activity.contains(&e.activity_type) {
                return Err(Error::Data(format!(
                    "activity type {:?} is not in the declared vocabulary",
                    e.activity_type
                )));
            }
            if (e.day as i64) > span || (e.day as i64) < -span {
                return Err(Error::Data(format!(
                    "event day {} outside course span of {} days",
                    e.day, span
                )));
            }
        }
        let mut catalog_ids = HashSet::new();
        for a in &self.assessment_catalog {
            if !catalog_ids.insert(a.assessment_id.as_str()) {
                return Err(Error::Data(format!(
                    "duplicate assessment {}",
                    a.assessment_id
                )));
            }
            if !a.is_final() && a.deadline_day.is_none() {
                return Err(Error::Data(format!(
                    "non-final assessment {} has no deadline",
                    a.assessment_id
                )));
            }
        }
        for r in &self.assessments {
            if !ids.contains(&r.student_id) {
                return Err(Error::Data(format!(
                    "assessment record for unknown student {}",
                    r.student_id
                )));
            }
            if !catalog_ids.contains(r.assessment_id.as_str()) {
                return Err(Error::Data(format!(
                    "record for unknown assessment {}",
                    r.assessment_id
                )));
            }
            if let Some(s) = r.score {
                if !(0.0..=100.0).contains(&s) {
                    return Err(Error::Data(format!("score {s} outside [0, 100]")));
                }
            }
        }
        Ok(())
    }

    pub fn student_ids(&self) -> Vec<StudentId> {
        self.demographics
            .iter()
            .map(|d| d.student_id.clone())
            .collect()
    }

    pub fn student_set(&self) -> BTreeSet<&StudentId> {
        self.demographics.iter().map(|d| &d.student_id).collect()
    }

    pub fn demographics_of(&self, id: &StudentId) -> Option<&StudentDemographics> {
        self.demographics.iter().find(|d| &d.student_id == id)
    }

    pub fn to_json(&self) -> String {
        let file = BundleFile {
            format: BUNDLE_FORMAT.into(),
            version: BUNDLE_VERSION,
            bundle: self.clone(),
        };
        serde_json::to_string_pretty(&file).expect("bundle serialization is infallible")
    }

    /// Decode and validate a bundle cache document.
    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Header {
            format: String,
            version: u32,
        }
        let header: Header =
            serde_json::from_str(text).map_err(|e| Error::Decode(e.to_string()))?;
        if header.format != BUNDLE_FORMAT || header.version != BUNDLE_VERSION {
            return Err(Error::FormatVersion {
                expected: format!("{BUNDLE_FORMAT}/{BUNDLE_VERSION}"),
                found: format!("{}/{}", header.format, header.version),
            });
        }
        let file: BundleFile =
            serde_json::from_str(text).map_err(|e| Error::Decode(e.to_string()))?;
        file.bundle.validate()?;
        Ok(file.bundle)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
