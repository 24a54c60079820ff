//! Assembly of primary and prior-course bundles from raw OULAD tables.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use crate::error::{Error, Result};
use crate::ingest::bundle::{
    AssessmentInfo, AssessmentRecord, InteractionEvent, SourceBundle, SourceTag,
    StudentDemographics, StudentId, Vocabularies,
};
use crate::ingest::oulad::{RawTables, StudentInfoRow};

/// Approximate absolute start day of an OULAD presentation code such as
/// `2014J`. `B` presentations start in February and `J` in October.
pub fn presentation_start(code: &str) -> Result<i64> {
    let bad = || Error::Data(format!("unrecognized presentation code {code:?}"));
    if code.len() != 5 {
        return Err(bad());
    }
    let year: i64 = code[..4].parse().map_err(|_| bad())?;
    let day_of_year = match &code[4..] {
        "B" => 31,
        "J" => 273,
        _ => return Err(bad()),
    };
    Ok(year * 365 + day_of_year)
}

fn demographics_from(row: &StudentInfoRow) -> StudentDemographics {
    StudentDemographics {
        student_id: StudentId::from(row.id_student),
        gender: row.gender.clone(),
        region: row.region.clone(),
        highest_education: row.highest_education.clone(),
        age_band: row.age_band.clone(),
        disability: row.disability,
        num_prev_attempts: row.num_of_prev_attempts,
        final_result: Some(row.final_result),
    }
}

fn demographic_vocab(
    activity_types: BTreeSet<String>,
    tables_vocab: Option<&Vocabularies>,
) -> Vocabularies {
    let mut v = tables_vocab
        .cloned()
        .unwrap_or_else(|| Vocabularies::oulad(Vec::new()));
    v.activity_types = activity_types.into_iter().collect();
    v
}

type CourseKey = (String, String);

/// Everything belonging to a set of (course, student) registrations.
fn assemble(
    tables: &RawTables,
    tag: SourceTag,
    course_id: String,
    semester_id: String,
    course_length_days: u32,
    wanted: &HashMap<u64, CourseKey>,
    vocab: Option<&Vocabularies>,
) -> Result<SourceBundle> {
    let courses: HashSet<&CourseKey> = wanted.values().collect();
    let in_course =
        |m: &str, p: &str, s: u64| wanted.get(&s).is_some_and(|(wm, wp)| wm == m && wp == p);

    let mut demographics: Vec<StudentDemographics> = tables
        .student_info
        .iter()
        .filter(|r| in_course(&r.code_module, &r.code_presentation, r.id_student))
        .map(demographics_from)
        .collect();
    demographics.sort_by(|a, b| a.student_id.cmp(&b.student_id));

    let mut catalog = Vec::new();
    let mut catalog_by_id: HashMap<u64, usize> = HashMap::new();
    for a in &tables.assessments {
        let key = (a.code_module.to_string(), a.code_presentation.to_string());
        if courses.contains(&key) {
            catalog_by_id.insert(a.id_assessment, catalog.len());
            catalog.push((
                key,
                AssessmentInfo {
                    assessment_id: a.id_assessment.to_string(),
                    kind: a.assessment_type,
                    deadline_day: a.date,
                    weight: a.weight,
                },
            ));
        }
    }

    let mut assessments = Vec::new();
    for sa in &tables.student_assessments {
        let Some(&idx) = catalog_by_id.get(&sa.id_assessment) else {
            continue;
        };
        let (key, info) = &catalog[idx];
        if wanted.get(&sa.id_student) != Some(key) {
            continue;
        }
        assessments.push(AssessmentRecord {
            student_id: StudentId::from(sa.id_student),
            assessment_id: info.assessment_id.clone(),
            deadline_day: info.deadline_day,
            submitted_day: sa.date_submitted,
            score: sa.score,
            weight: info.weight,
        });
    }

    let sites = tables.site_activity();
    let mut activity_types = BTreeSet::new();
    for v in &tables.vle {
        if courses.contains(&(v.code_module.to_string(), v.code_presentation.to_string())) {
            activity_types.insert(v.activity_type.clone());
        }
    }
    let mut events = Vec::new();
    for e in &tables.student_vle {
        if !in_course(&e.code_module, &e.code_presentation, e.id_student) {
            continue;
        }
        let activity = sites.get(&e.id_site).ok_or_else(|| {
            Error::Data(format!("studentVle references unknown site {}", e.id_site))
        })?;
        activity_types.insert(activity.to_string());
        events.push(InteractionEvent {
            student_id: StudentId::from(e.id_student),
            activity_type: activity.to_string(),
            day: e.date,
            clicks: e.sum_click,
        });
    }

    let bundle = SourceBundle {
        source_tag: tag,
        course_id,
        semester_id,
        course_length_days,
        vocabularies: demographic_vocab(activity_types, vocab),
        assessment_catalog: catalog.into_iter().map(|(_, info)| info).collect(),
        demographics,
        events,
        assessments,
    };
    bundle.validate()?;
    Ok(bundle)
}

/// Primary bundle: every student registered in `course_id`/`semester_id`.
pub fn build_primary_source(
    tables: &RawTables,
    course_id: &str,
    semester_id: &str,
    vocab: Option<&Vocabularies>,
) -> Result<SourceBundle> {
    let length = tables
        .course_length(course_id, semester_id)
        .ok_or_else(|| Error::UnknownCourse {
            course_id: course_id.to_string(),
            semester_id: semester_id.to_string(),
            available: tables
                .course_pairs()
                .iter()
                .map(|(m, p)| format!("{m}/{p}"))
                .collect::<Vec<_>>()
                .join(", "),
        })?;
    let key = (course_id.to_string(), semester_id.to_string());
    let wanted: HashMap<u64, CourseKey> = tables
        .student_info
        .iter()
        .filter(|r| {
            r.code_module.as_str() == course_id && r.code_presentation.as_str() == semester_id
        })
        .map(|r| (r.id_student, key.clone()))
        .collect();
    assemble(
        tables,
        SourceTag::Primary,
        course_id.to_string(),
        semester_id.to_string(),
        length,
        &wanted,
        vocab,
    )
}

/// The prior course chosen for one student.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PriorCourse {
    pub course_id: String,
    pub semester_id: String,
    pub end_day: i64,
}

/// For each primary student, the most recently finished prior course that the
/// student completed. Students without one are absent from the map.
pub fn select_prior_courses(
    tables: &RawTables,
    primary: &SourceBundle,
) -> Result<BTreeMap<StudentId, PriorCourse>> {
    let primary_start = presentation_start(&primary.semester_id)?;
    let mut first_deadline: HashMap<CourseKey, i32> = HashMap::new();
    for a in &tables.assessments {
        if let Some(d) = a.date {
            let key = (a.code_module.to_string(), a.code_presentation.to_string());
            first_deadline
                .entry(key)
                .and_modify(|x| *x = (*x).min(d))
                .or_insert(d);
        }
    }
    let lengths: HashMap<CourseKey, u32> = tables
        .courses
        .iter()
        .map(|c| {
            (
                (c.code_module.to_string(), c.code_presentation.to_string()),
                c.length_days,
            )
        })
        .collect();
    let has_info: HashSet<(u64, &str, &str)> = tables
        .student_info
        .iter()
        .map(|r| {
            (
                r.id_student,
                r.code_module.as_str(),
                r.code_presentation.as_str(),
            )
        })
        .collect();
    let cohort: HashSet<u64> = primary
        .demographics
        .iter()
        .filter_map(|d| d.student_id.as_str().parse().ok())
        .collect();

    let mut chosen: BTreeMap<StudentId, PriorCourse> = BTreeMap::new();
    for r in &tables.registrations {
        if !cohort.contains(&r.id_student) {
            continue;
        }
        let module = r.code_module.as_str();
        let pres = r.code_presentation.as_str();
        if module == primary.course_id && pres == primary.semester_id {
            continue;
        }
        if !has_info.contains(&(r.id_student, module, pres)) {
            continue;
        }
        let key = (module.to_string(), pres.to_string());
        let Some(&length) = lengths.get(&key) else {
            continue;
        };
        let end_day = presentation_start(pres)? + length as i64;
        if end_day >= primary_start {
            continue;
        }
        let completed = match (r.date_unregistration, first_deadline.get(&key)) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some(unreg), Some(&first)) => unreg >= first,
        };
        if !completed {
            continue;
        }
        let candidate = PriorCourse {
            course_id: key.0,
            semester_id: key.1,
            end_day,
        };
        let id = StudentId::from(r.id_student);
        let replace = match chosen.get(&id) {
            None => true,
            Some(cur) => {
                candidate.end_day > cur.end_day
                    || (candidate.end_day == cur.end_day
                        && (&candidate.course_id, &candidate.semester_id)
                            < (&cur.course_id, &cur.semester_id))
            }
        };
        if replace {
            chosen.insert(id, candidate);
        }
    }
    Ok(chosen)
}

/// Additional bundle holding each primary student's most recent completed
/// prior course. Students without such a course are not included.
pub fn build_additional_source(
    tables: &RawTables,
    primary: &SourceBundle,
    vocab: Option<&Vocabularies>,
) -> Result<SourceBundle> {
    let chosen = select_prior_courses(tables, primary)?;
    let mut wanted = HashMap::new();
    let mut length = 1;
    for (id, prior) in &chosen {
        let raw: u64 = id.as_str().parse().expect("OULAD ids are numeric");
        let key = (prior.course_id.clone(), prior.semester_id.clone());
        length = length.max(tables.course_length(&key.0, &key.1).unwrap_or(1));
        wanted.insert(raw, key);
    }
    assemble(
        tables,
        SourceTag::Additional(0),
        "prior".to_string(),
        format!("before-{}", primary.semester_id),
        length,
        &wanted,
        vocab,
    )
}

/// Students present in the primary bundle and every additional bundle, in
/// primary order.
pub fn experiment_cohort(primary: &SourceBundle, additional: &[SourceBundle]) -> Vec<StudentId> {
    let sets: Vec<BTreeSet<&StudentId>> = additional.iter().map(|b| b.student_set()).collect();
    primary
        .demographics
        .iter()
        .map(|d| &d.student_id)
        .filter(|id| sets.iter().all(|s| s.contains(id)))
        .cloned()
        .collect()
}

/// Cohort size split by final outcome in the primary course.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct CohortSummary {
    pub students: usize,
    pub succeeded: usize,
    pub failed: usize,
}

impl CohortSummary {
    pub fn of(primary: &SourceBundle, cohort: &[StudentId]) -> Self {
        let wanted: HashSet<&StudentId> = cohort.iter().collect();
        let mut s = CohortSummary {
            students: 0,
            succeeded: 0,
            failed: 0,
        };
        for d in &primary.demographics {
            if !wanted.contains(&d.student_id) {
                continue;
            }
            s.students += 1;
            match d.final_result {
                Some(r) if r.succeeded() => s.succeeded += 1,
                _ => s.failed += 1,
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presentation_ordering() {
        let b13 = presentation_start("2013B").unwrap();
        let j13 = presentation_start("2013J").unwrap();
        let b14 = presentation_start("2014B").unwrap();
        let j14 = presentation_start("2014J").unwrap();
        assert!(b13 < j13 && j13 < b14 && b14 < j14);
        assert!(presentation_start("2014X").is_err());
        assert!(presentation_start("14J").is_err());
    }
}
