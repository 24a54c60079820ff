//! Typed reader for the seven OULAD CSV tables.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::Read;
use std::path::Path;

use arrayvec::ArrayString;

use crate::error::{Error, Result};
use crate::ingest::bundle::{AssessmentKind, FinalResult, Vocabularies};

/// Short course or presentation code such as `CCC` or `2014J`.
pub type Code = ArrayString<16>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TableKind {
    StudentInfo,
    StudentRegistration,
    StudentAssessment,
    Assessments,
    StudentVle,
    Vle,
    Courses,
}

impl TableKind {
    pub const ALL: [TableKind; 7] = [
        TableKind::StudentInfo,
        TableKind::StudentRegistration,
        TableKind::StudentAssessment,
        TableKind::Assessments,
        TableKind::StudentVle,
        TableKind::Vle,
        TableKind::Courses,
    ];

    pub fn file_name(self) -> &'static str {
        match self {
            TableKind::StudentInfo => "studentInfo.csv",
            TableKind::StudentRegistration => "studentRegistration.csv",
            TableKind::StudentAssessment => "studentAssessment.csv",
            TableKind::Assessments => "assessments.csv",
            TableKind::StudentVle => "studentVle.csv",
            TableKind::Vle => "vle.csv",
            TableKind::Courses => "courses.csv",
        }
    }

    pub fn header(self) -> &'static [&'static str] {
        match self {
            TableKind::StudentInfo => &[
                "code_module",
                "code_presentation",
                "id_student",
                "gender",
                "region",
                "highest_education",
                "imd_band",
                "age_band",
                "num_of_prev_attempts",
                "studied_credits",
                "disability",
                "final_result",
            ],
            TableKind::StudentRegistration => &[
                "code_module",
                "code_presentation",
                "id_student",
                "date_registration",
                "date_unregistration",
            ],
            TableKind::StudentAssessment => &[
                "id_assessment",
                "id_student",
                "date_submitted",
                "is_banked",
                "score",
            ],
            TableKind::Assessments => &[
                "code_module",
                "code_presentation",
                "id_assessment",
                "assessment_type",
                "date",
                "weight",
            ],
            TableKind::StudentVle => &[
                "code_module",
                "code_presentation",
                "id_student",
                "id_site",
                "date",
                "sum_click",
            ],
            TableKind::Vle => &[
                "id_site",
                "code_module",
                "code_presentation",
                "activity_type",
                "week_from",
                "week_to",
            ],
            TableKind::Courses => &[
                "code_module",
                "code_presentation",
                "module_presentation_length",
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CourseRow {
    pub code_module: Code,
    pub code_presentation: Code,
    pub length_days: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudentInfoRow {
    pub code_module: Code,
    pub code_presentation: Code,
    pub id_student: u64,
    pub gender: String,
    pub region: String,
    pub highest_education: String,
    pub imd_band: Option<String>,
    pub age_band: String,
    pub num_of_prev_attempts: u32,
    pub studied_credits: u32,
    pub disability: bool,
    pub final_result: FinalResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegistrationRow {
    pub code_module: Code,
    pub code_presentation: Code,
    pub id_student: u64,
    pub date_registration: Option<i32>,
    pub date_unregistration: Option<i32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssessmentRow {
    pub code_module: Code,
    pub code_presentation: Code,
    pub id_assessment: u64,
    pub assessment_type: AssessmentKind,
    pub date: Option<i32>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudentAssessmentRow {
    pub id_assessment: u64,
    pub id_student: u64,
    pub date_submitted: Option<i32>,
    pub is_banked: bool,
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudentVleRow {
    pub code_module: Code,
    pub code_presentation: Code,
    pub id_student: u64,
    pub id_site: u64,
    pub date: i32,
    pub sum_click: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VleRow {
    pub id_site: u64,
    pub code_module: Code,
    pub code_presentation: Code,
    pub activity_type: String,
    pub week_from: Option<i32>,
    pub week_to: Option<i32>,
}

/// A rejected row that stayed within the bad-row budget.
#[derive(Debug, Clone, PartialEq)]
pub struct RowDiagnostic {
    pub file: &'static str,
    pub row: u64,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct LoadOptions {
    /// Fraction of data rows per file that may be rejected before the load aborts.
    pub bad_row_fraction: f64,
    /// Demographic vocabularies enforced on `studentInfo`.
    pub vocabularies: Vocabularies,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            bad_row_fraction: 0.001,
            vocabularies: Vocabularies::oulad(Vec::new()),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RawTables {
    pub courses: Vec<CourseRow>,
    pub student_info: Vec<StudentInfoRow>,
    pub registrations: Vec<RegistrationRow>,
    pub assessments: Vec<AssessmentRow>,
    pub student_assessments: Vec<StudentAssessmentRow>,
    pub student_vle: Vec<StudentVleRow>,
    pub vle: Vec<VleRow>,
    pub diagnostics: Vec<RowDiagnostic>,
}

impl RawTables {
    pub fn row_counts(&self) -> BTreeMap<&'static str, usize> {
        BTreeMap::from([
            (TableKind::StudentInfo.file_name(), self.student_info.len()),
            (
                TableKind::StudentRegistration.file_name(),
                self.registrations.len(),
            ),
            (
                TableKind::StudentAssessment.file_name(),
                self.student_assessments.len(),
            ),
            (TableKind::Assessments.file_name(), self.assessments.len()),
            (TableKind::StudentVle.file_name(), self.student_vle.len()),
            (TableKind::Vle.file_name(), self.vle.len()),
            (TableKind::Courses.file_name(), self.courses.len()),
        ])
    }

    pub fn course_pairs(&self) -> BTreeSet<(String, String)> {
        self.courses
            .iter()
            .map(|c| (c.code_module.to_string(), c.code_presentation.to_string()))
            .collect()
    }

    pub fn course_length(&self, module: &str, presentation: &str) -> Option<u32> {
        self.courses
            .iter()
            .find(|c| {
                c.code_module.as_str() == module && c.code_presentation.as_str() == presentation
            })
            .map(|c| c.length_days)
    }

    pub fn site_activity(&self) -> HashMap<u64, &str> {
        self.vle
            .iter()
            .map(|v| (v.id_site, v.activity_type.as_str()))
            .collect()
    }
}

struct Cells<'a> {
    file: &'static str,
    row: u64,
    header: &'static [&'static str],
    record: &'a csv::StringRecord,
}

impl Cells<'_> {
    fn fail(&self, col: usize, message: impl Into<String>) -> Error {
        Error::Cell {
            file: self.file.to_string(),
            row: self.row,
            column: self.header[col].to_string(),
            message: message.into(),
        }
    }

    fn raw(&self, col: usize) -> &str {
        self.record.get(col).unwrap_or("").trim()
    }

    fn is_missing(&self, col: usize) -> bool {
        matches!(self.raw(col), "" | "?")
    }

    fn text(&self, col: usize) -> Result<String> {
        if self.is_missing(col) {
            return Err(self.fail(col, "empty value"));
        }
        Ok(self.raw(col).to_string())
    }

    fn code(&self, col: usize) -> Result<Code> {
        let s = self.raw(col);
        if s.is_empty() {
            return Err(self.fail(col, "empty code"));
        }
        Code::from(s).map_err(|_| self.fail(col, format!("code {s:?} too long")))
    }

    fn parse<T: std::str::FromStr>(&self, col: usize) -> Result<T> {
        let s = self.raw(col);
        s.parse()
            .map_err(|_| self.fail(col, format!("cannot parse {s:?}")))
    }

    fn opt<T: std::str::FromStr>(&self, col: usize) -> Result<Option<T>> {
        if self.is_missing(col) {
            Ok(None)
        } else {
            self.parse(col).map(Some)
        }
    }

    fn flag(&self, col: usize, yes: &str, no: &str) -> Result<bool> {
        match self.raw(col) {
            s if s == yes => Ok(true),
            s if s == no => Ok(false),
            s => Err(self.fail(col, format!("expected {yes:?} or {no:?}, found {s:?}"))),
        }
    }

    fn finite(&self, col: usize) -> Result<f64> {
        let v: f64 = self.parse(col)?;
        if !v.is_finite() {
            return Err(self.fail(col, "non-finite number"));
        }
        Ok(v)
    }

    fn in_vocab(&self, col: usize, vocab: &[String]) -> Result<String> {
        let s = self.text(col)?;
        if !vocab.contains(&s) {
            return Err(self.fail(col, format!("value {s:?} not in the declared vocabulary")));
        }
        Ok(s)
    }
}

trait TableRow: Sized {
    const KIND: TableKind;
    fn parse(cells: &Cells<'_>, opts: &LoadOptions) -> Result<Self>;
}

impl TableRow for CourseRow {
    const KIND: TableKind = TableKind::Courses;
    fn parse(c: &Cells<'_>, _: &LoadOptions) -> Result<Self> {
        let length_days: u32 = c.parse(2)?;
        if length_days == 0 {
            return Err(c.fail(2, "course length must be positive"));
        }
        Ok(CourseRow {
            code_module: c.code(0)?,
            code_presentation: c.code(1)?,
            length_days,
        })
    }
}

impl TableRow for StudentInfoRow {
    const KIND: TableKind = TableKind::StudentInfo;
    fn parse(c: &Cells<'_>, opts: &LoadOptions) -> Result<Self> {
        let v = &opts.vocabularies;
        let final_raw = c.text(11)?;
        Ok(StudentInfoRow {
            code_module: c.code(0)?,
            code_presentation: c.code(1)?,
            id_student: c.parse(2)?,
            gender: c.in_vocab(3, &v.genders)?,
            region: c.in_vocab(4, &v.regions)?,
            highest_education: c.in_vocab(5, &v.highest_education)?,
            imd_band: c.opt(6)?,
            age_band: c.in_vocab(7, &v.age_bands)?,
            num_of_prev_attempts: c.parse(8)?,
            studied_credits: c.parse(9)?,
            disability: c.flag(10, "Y", "N")?,
            final_result: FinalResult::parse(&final_raw)
                .ok_or_else(|| c.fail(11, format!("unknown final_result {final_raw:?}")))?,
        })
    }
}

impl TableRow for RegistrationRow {
    const KIND: TableKind = TableKind::StudentRegistration;
    fn parse(c: &Cells<'_>, _: &LoadOptions) -> Result<Self> {
        Ok(RegistrationRow {
            code_module: c.code(0)?,
            code_presentation: c.code(1)?,
            id_student: c.parse(2)?,
            date_registration: c.opt(3)?,
            date_unregistration: c.opt(4)?,
        })
    }
}

impl TableRow for AssessmentRow {
    const KIND: TableKind = TableKind::Assessments;
    fn parse(c: &Cells<'_>, _: &LoadOptions) -> Result<Self> {
        let kind_raw = c.text(3)?;
        let weight = c.finite(5)?;
        if !(0.0..=100.0).contains(&weight) {
            return Err(c.fail(5, format!("weight {weight} outside [0, 100]")));
        }
        Ok(AssessmentRow {
            code_module: c.code(0)?,
            code_presentation: c.code(1)?,
            id_assessment: c.parse(2)?,
            assessment_type: AssessmentKind::parse(&kind_raw)
                .ok_or_else(|| c.fail(3, format!("unknown assessment type {kind_raw:?}")))?,
            date: c.opt(4)?,
            weight,
        })
    }
}

impl TableRow for StudentAssessmentRow {
    const KIND: TableKind = TableKind::StudentAssessment;
    fn parse(c: &Cells<'_>, _: &LoadOptions) -> Result<Self> {
        let score = if c.is_missing(4) {
            None
        } else {
            Some(c.finite(4)?)
        };
        if let Some(s) = score {
            if !(0.0..=100.0).contains(&s) {
                return Err(c.fail(4, format!("score {s} outside [0, 100]")));
            }
        }
        Ok(StudentAssessmentRow {
            id_assessment: c.parse(0)?,
            id_student: c.parse(1)?,
            date_submitted: c.opt(2)?,
            is_banked: c.flag(3, "1", "0")?,
            score,
        })
    }
}

impl TableRow for StudentVleRow {
    const KIND: TableKind = TableKind::StudentVle;
    fn parse(c: &Cells<'_>, _: &LoadOptions) -> Result<Self> {
        Ok(StudentVleRow {
            code_module: c.code(0)?,
            code_presentation: c.code(1)?,
            id_student: c.parse(2)?,
            id_site: c.parse(3)?,
            date: c.parse(4)?,
            sum_click: c.parse(5)?,
        })
    }
}

impl TableRow for VleRow {
    const KIND: TableKind = TableKind::Vle;
    fn parse(c: &Cells<'_>, _: &LoadOptions) -> Result<Self> {
        Ok(VleRow {
            id_site: c.parse(0)?,
            code_module: c.code(1)?,
            code_presentation: c.code(2)?,
            activity_type: c.text(3)?,
            week_from: c.opt(4)?,
            week_to: c.opt(5)?,
        })
    }
}

fn parse_rows<T: TableRow, R: Read>(
    reader: R,
    opts: &LoadOptions,
) -> Result<(Vec<T>, Vec<RowDiagnostic>)> {
    let kind = T::KIND;
    let file = kind.file_name();
    let expected = kind.header();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let found = rdr
        .headers()
        .map_err(|e| Error::Decode(format!("{file}: unreadable header: {e}")))?
        .clone();
    let found_names: Vec<&str> = found.iter().map(str::trim).collect();
    if found_names != expected {
        return Err(Error::HeaderMismatch {
            file: file.to_string(),
            expected: expected.join(","),
            found: found_names.join(","),
        });
    }

    let mut rows = Vec::new();
    let mut bad: Vec<RowDiagnostic> = Vec::new();
    let mut record = csv::StringRecord::new();
    let mut total = 0usize;
    loop {
        let line = rdr.position().line() + 1;
        match rdr.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {
                total += 1;
                let row = record.position().map_or(line, |p| p.line());
                if record.len() != expected.len() {
                    bad.push(RowDiagnostic {
                        file,
                        row,
                        message: format!(
                            "{file}: row {row}: expected {} fields, found {}",
                            expected.len(),
                            record.len()
                        ),
                    });
                    continue;
                }
                let cells = Cells {
                    file,
                    row,
                    header: expected,
                    record: &record,
                };
                match T::parse(&cells, opts) {
                    Ok(r) => rows.push(r),
                    Err(e) => bad.push(RowDiagnostic {
                        file,
                        row,
                        message: e.to_string(),
                    }),
                }
            }
            Err(e) => {
                total += 1;
                // Invalid UTF-8 and similar are per-row failures; I/O errors are not.
                if matches!(e.kind(), csv::ErrorKind::Io(_)) {
                    return Err(Error::Decode(format!("{file}: {e}")));
                }
                bad.push(RowDiagnostic {
                    file,
                    row: line,
                    message: format!("{file}: row {line}: {e}"),
                });
            }
        }
    }

    let budget = (opts.bad_row_fraction.max(0.0) * total as f64).floor() as usize;
    if bad.len() > budget {
        return Err(Error::BadRowBudget {
            file: file.to_string(),
            bad: bad.len(),
            budget,
            first: bad[0].message.clone(),
        });
    }
    for d in &bad {
        log::warn!("rejected {}", d.message);
    }
    Ok((rows, bad))
}

/// Parse one table from an in-memory buffer; returns the number of accepted rows.
pub fn parse_table_bytes(kind: TableKind, bytes: &[u8], opts: &LoadOptions) -> Result<usize> {
    Ok(match kind {
        TableKind::StudentInfo => parse_rows::<StudentInfoRow, _>(bytes, opts)?.0.len(),
        TableKind::StudentRegistration => parse_rows::<RegistrationRow, _>(bytes, opts)?.0.len(),
        TableKind::StudentAssessment => parse_rows::<StudentAssessmentRow, _>(bytes, opts)?.0.len(),
        TableKind::Assessments => parse_rows::<AssessmentRow, _>(bytes, opts)?.0.len(),
        TableKind::StudentVle => parse_rows::<StudentVleRow, _>(bytes, opts)?.0.len(),
        TableKind::Vle => parse_rows::<VleRow, _>(bytes, opts)?.0.len(),
        TableKind::Courses => parse_rows::<CourseRow, _>(bytes, opts)?.0.len(),
    })
}

fn load_one<T: TableRow + Send>(
    dir: &Path,
    opts: &LoadOptions,
) -> Result<(Vec<T>, Vec<RowDiagnostic>)> {
    let path = dir.join(T::KIND.file_name());
    let f = File::open(&path).map_err(|e| Error::io(&path, e))?;
    parse_rows::<T, _>(std::io::BufReader::with_capacity(1 << 20, f), opts)
}

/// Read the seven OULAD tables from `dir`, one thread per file.
pub fn load_oulad(dir: &Path, opts: &LoadOptions) -> Result<RawTables> {
    for kind in TableKind::ALL {
        if !dir.join(kind.file_name()).is_file() {
            return Err(Error::MissingFile {
                file: kind.file_name().to_string(),
            });
        }
    }

    let (info, reg, sa, asm, svle, vle, courses) = std::thread::scope(|s| {
        let info = s.spawn(|| load_one::<StudentInfoRow>(dir, opts));
        let reg = s.spawn(|| load_one::<RegistrationRow>(dir, opts));
        let sa = s.spawn(|| load_one::<StudentAssessmentRow>(dir, opts));
        let asm = s.spawn(|| load_one::<AssessmentRow>(dir, opts));
        let svle = s.spawn(|| load_one::<StudentVleRow>(dir, opts));
        let vle = s.spawn(|| load_one::<VleRow>(dir, opts));
        let courses = s.spawn(|| load_one::<CourseRow>(dir, opts));
        (
            info.join().expect("loader thread panicked"),
            reg.join().expect("loader thread panicked"),
            sa.join().expect("loader thread panicked"),
            asm.join().expect("loader thread panicked"),
            svle.join().expect("loader thread panicked"),
            vle.join().expect("loader thread panicked"),
            courses.join().expect("loader thread panicked"),
        )
    });

    let mut tables = RawTables::default();
    let mut diagnostics = Vec::new();
    macro_rules! take {
        ($field:ident, $res:expr) => {{
            let (rows, diag) = $res?;
            tables.$field = rows;
            diagnostics.extend(diag);
        }};
    }
    take!(student_info, info);
    take!(registrations, reg);
    take!(student_assessments, sa);
    take!(assessments, asm);
    take!(student_vle, svle);
    take!(vle, vle);
    take!(courses, courses);
    tables.diagnostics = diagnostics;
    for (file, n) in tables.row_counts() {
        log::info!("{file}: {n} rows");
    }
    Ok(tables)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> LoadOptions {
        LoadOptions::default()
    }

    #[test]
    fn parses_quoted_courses() {
        let csv = "\"code_module\",\"code_presentation\",\"module_presentation_length\"\n\"CCC\",\"2014J\",\"269\"\n";
        let (rows, diag) = parse_rows::<CourseRow, _>(csv.as_bytes(), &opts()).unwrap();
        assert!(diag.is_empty());
        assert_eq!(rows[0].code_module.as_str(), "CCC");
        assert_eq!(rows[0].length_days, 269);
    }

    #[test]
    fn empty_table_with_header_is_fine() {
        let csv = "code_module,code_presentation,module_presentation_length\n";
        let n = parse_table_bytes(TableKind::Courses, csv.as_bytes(), &opts()).unwrap();
        assert_eq!(n, 0);
    }

    #[test]
    fn header_mismatch_lists_both() {
        let csv = "code_module,presentation,length\n";
        let err = parse_table_bytes(TableKind::Courses, csv.as_bytes(), &opts()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("module_presentation_length"), "{msg}");
        assert!(msg.contains("presentation,length"), "{msg}");
    }

    #[test]
    fn bad_cell_names_file_row_and_column() {
        let csv = "id_assessment,id_student,date_submitted,is_banked,score\n1752,11391,18,0,78\n1752,28400,abc,0,70\n";
        let err = parse_table_bytes(TableKind::StudentAssessment, csv.as_bytes(), &opts())
            .unwrap_err()
            .to_string();
        assert!(err.contains("studentAssessment.csv"), "{err}");
        assert!(err.contains("row 3"), "{err}");
        assert!(err.contains("date_submitted"), "{err}");
    }

    #[test]
    fn missing_score_markers() {
        let csv = "id_assessment,id_student,date_submitted,is_banked,score\n1,2,3,0,?\n1,3,3,1,\n";
        let (rows, _) = parse_rows::<StudentAssessmentRow, _>(csv.as_bytes(), &opts()).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.score.is_none()));
        assert!(rows[1].is_banked);
    }

    #[test]
    fn bad_rows_within_budget_are_reported() {
        let mut csv = String::from("id_assessment,id_student,date_submitted,is_banked,score\n");
        for i in 0..2000 {
            csv.push_str(&format!("1,{i},5,0,50\n"));
        }
        csv.push_str("1,x,5,0,50\n");
        let o = LoadOptions {
            bad_row_fraction: 0.001,
            ..opts()
        };
        let (rows, diag) = parse_rows::<StudentAssessmentRow, _>(csv.as_bytes(), &o).unwrap();
        assert_eq!(rows.len(), 2000);
        assert_eq!(diag.len(), 1);
        assert_eq!(diag[0].row, 2002);
    }

    #[test]
    fn unknown_demographic_value_is_rejected() {
        let csv = "code_module,code_presentation,id_student,gender,region,highest_education,imd_band,age_band,num_of_prev_attempts,studied_credits,disability,final_result\n\
AAA,2013J,11391,M,Narnia,HE Qualification,90-100%,55<=,0,240,N,Pass\n";
        let err = parse_table_bytes(TableKind::StudentInfo, csv.as_bytes(), &opts())
            .unwrap_err()
            .to_string();
        assert!(err.contains("Narnia") && err.contains("region"), "{err}");
    }

    #[test]
    fn wrong_field_count_is_a_bad_row() {
        let csv = "code_module,code_presentation,module_presentation_length\nAAA,2013J\n";
        assert!(parse_table_bytes(TableKind::Courses, csv.as_bytes(), &opts()).is_err());
    }
}
