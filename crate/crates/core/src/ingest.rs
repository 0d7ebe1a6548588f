//! Reading and writing the delimited input files (admissions, diagnoses,
//! lab events, prescriptions, note events) and cohort selection.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::model::{
    parse_timestamp, AdmissionRecord, DiagnosisEntry, Gender, LabObservation, NoteRecord,
    PrescriptionRecord,
};
use crate::notes::CodeMaps;
use crate::{Error, Result};

/// How many distinct principal-diagnosis codes the cohort keeps.
pub const COHORT_TOP_CODES: usize = 10;

/// Conventional file names inside an input or output directory.
pub const ADMISSIONS_FILE: &str = "admissions.csv";
pub const DIAGNOSES_FILE: &str = "diagnoses.csv";
pub const LABEVENTS_FILE: &str = "labevents.csv";
pub const PRESCRIPTIONS_FILE: &str = "prescriptions.csv";
pub const NOTEEVENTS_FILE: &str = "noteevents.csv";

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct InputPaths {
    pub admissions: PathBuf,
    pub diagnoses: PathBuf,
    pub labevents: PathBuf,
    pub prescriptions: PathBuf,
    pub noteevents: PathBuf,
}

impl InputPaths {
    pub fn in_dir(dir: &Path) -> Self {
        InputPaths {
            admissions: dir.join(ADMISSIONS_FILE),
            diagnoses: dir.join(DIAGNOSES_FILE),
            labevents: dir.join(LABEVENTS_FILE),
            prescriptions: dir.join(PRESCRIPTIONS_FILE),
            noteevents: dir.join(NOTEEVENTS_FILE),
        }
    }
}

/// One skipped row and why.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseIssue {
    pub file: PathBuf,
    /// 1-based data row number (header excluded).
    pub row: u64,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct ParseReport {
    pub issues: Vec<ParseIssue>,
    pub rows_read: usize,
    pub rows_kept: usize,
}

impl ParseReport {
    fn skip(&mut self, file: &Path, row: u64, message: impl Into<String>) {
        self.issues.push(ParseIssue { file: file.to_path_buf(), row, message: message.into() });
    }
}

/// Everything the pipeline consumes, with diagnoses folded into admissions.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RecordSet {
    pub admissions: Vec<AdmissionRecord>,
    pub labs: Vec<LabObservation>,
    pub prescriptions: Vec<PrescriptionRecord>,
    pub notes: Vec<NoteRecord>,
}

impl RecordSet {
    /// Labs, prescriptions, and notes of one admission, in stored order.
    pub fn events_of(
        &self,
        admission_id: &str,
    ) -> (Vec<&LabObservation>, Vec<&PrescriptionRecord>, Vec<&NoteRecord>) {
        (
            self.labs.iter().filter(|l| l.admission_id == admission_id).collect(),
            self.prescriptions.iter().filter(|p| p.admission_id == admission_id).collect(),
            self.notes.iter().filter(|n| n.admission_id == admission_id).collect(),
        )
    }
}

struct Columns {
    indices: Vec<usize>,
}

impl Columns {
    /// Resolves required column names against the header, rejecting the file
    /// when any is missing. Header names are matched case-insensitively.
    fn resolve(path: &Path, headers: &csv::StringRecord, required: &[&str]) -> Result<Columns> {
        let lowered: Vec<String> =
            headers.iter().map(|h| h.trim().to_ascii_lowercase()).collect();
        let mut indices = Vec::with_capacity(required.len());
        for name in required {
            match lowered.iter().position(|h| h == name) {
                Some(i) => indices.push(i),
                None => {
                    return Err(Error::MissingColumn {
                        file: path.to_path_buf(),
                        column: (*name).to_string(),
                    })
                }
            }
        }
        Ok(Columns { indices })
    }

    fn get<'r>(&self, record: &'r csv::StringRecord, col: usize) -> &'r str {
        record.get(self.indices[col]).unwrap_or("").trim()
    }
}

fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::Malformed(format!("{}: {e}", path.display())))
}

fn for_each_row<F>(path: &Path, required: &[&str], mut f: F) -> Result<()>
where
    F: FnMut(u64, &Columns, &csv::StringRecord) -> Result<()>,
{
    let mut rdr = reader(path)?;
    let headers = rdr.headers().map_err(|e| Error::csv(path, e))?.clone();
    let columns = Columns::resolve(path, &headers, required)?;
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::csv(path, e))?;
        f(i as u64 + 1, &columns, &record)?;
    }
    Ok(())
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" => Some(true),
        "0" | "false" | "no" => Some(false),
        _ => None,
    }
}

fn optional_f64(s: &str) -> std::result::Result<Option<f64>, std::num::ParseFloatError> {
    if s.is_empty() {
        Ok(None)
    } else {
        s.parse().map(Some)
    }
}

/// Reads all five files into typed records. Malformed rows are skipped and
/// reported; a missing required column rejects the whole file. Diagnoses are
/// CCS-mapped and attached to their admissions sorted by priority.
pub fn ingest_records(paths: &InputPaths, maps: &CodeMaps) -> Result<(RecordSet, ParseReport)> {
    let mut report = ParseReport::default();
    let mut set = RecordSet::default();

    let path = &paths.admissions;
    let mut admission_order: Vec<String> = Vec::new();
    let mut admissions: BTreeMap<String, AdmissionRecord> = BTreeMap::new();
    for_each_row(
        path,
        &[
            "admission_id",
            "patient_id",
            "admit_time",
            "discharge_time",
            "gender",
            "age_years",
            "mortality_label",
        ],
        |row, cols, record| {
            report.rows_read += 1;
            let admission_id = cols.get(record, 0).to_string();
            if admission_id.is_empty() {
                report.skip(path, row, "empty admission_id");
                return Ok(());
            }
            if admissions.contains_key(&admission_id) {
                report.skip(path, row, format!("duplicate admission_id '{admission_id}'"));
                return Ok(());
            }
            let admit_time = match parse_timestamp(cols.get(record, 2)) {
                Ok(t) => t,
                Err(e) => {
                    report.skip(path, row, format!("admit_time: {e}"));
                    return Ok(());
                }
            };
            let discharge_time = match parse_timestamp(cols.get(record, 3)) {
                Ok(t) => t,
                Err(e) => {
                    report.skip(path, row, format!("discharge_time: {e}"));
                    return Ok(());
                }
            };
            if admit_time > discharge_time {
                report.skip(path, row, "admit_time after discharge_time");
                return Ok(());
            }
            let gender = Gender::parse(cols.get(record, 4));
            let age_years: u32 = match cols.get(record, 5).parse() {
                Ok(a) => a,
                Err(e) => {
                    report.skip(path, row, format!("age_years: {e}"));
                    return Ok(());
                }
            };
            let record_out = AdmissionRecord {
                admission_id: admission_id.clone(),
                patient_id: cols.get(record, 1).to_string(),
                admit_time,
                discharge_time,
                gender,
                age_years,
                mortality_label: match parse_bool(cols.get(record, 6)) {
                    Some(b) => b,
                    None => {
                        report.skip(path, row, "mortality_label must be 0/1/true/false");
                        return Ok(());
                    }
                },
                diagnoses: Vec::new(),
            };
            if let Err(e) = record_out.demographics() {
                report.skip(path, row, e.to_string());
                return Ok(());
            }
            report.rows_kept += 1;
            admission_order.push(admission_id.clone());
            admissions.insert(admission_id, record_out);
            Ok(())
        },
    )?;

    let path = &paths.diagnoses;
    for_each_row(path, &["admission_id", "icd9_code", "priority"], |row, cols, record| {
        report.rows_read += 1;
        let admission_id = cols.get(record, 0);
        let Some(admission) = admissions.get_mut(admission_id) else {
            report.skip(path, row, format!("unknown admission_id '{admission_id}'"));
            return Ok(());
        };
        let icd9_code = cols.get(record, 1).to_string();
        if icd9_code.is_empty() {
            report.skip(path, row, "empty icd9_code");
            return Ok(());
        }
        let priority: u32 = match cols.get(record, 2).parse() {
            Ok(p) if p >= 1 => p,
            Ok(_) => {
                report.skip(path, row, "priority must be >= 1");
                return Ok(());
            }
            Err(e) => {
                report.skip(path, row, format!("priority: {e}"));
                return Ok(());
            }
        };
        if admission.diagnoses.iter().any(|d| d.priority == priority) {
            report.skip(
                path,
                row,
                format!("duplicate priority {priority} for admission '{admission_id}'"),
            );
            return Ok(());
        }
        report.rows_kept += 1;
        admission.diagnoses.push(DiagnosisEntry {
            ccs_category: maps.ccs_of(&icd9_code).to_string(),
            icd9_code,
            priority,
        });
        Ok(())
    })?;
    for admission in admissions.values_mut() {
        admission.diagnoses.sort_by_key(|d| d.priority);
    }
    set.admissions =
        admission_order.iter().map(|id| admissions.remove(id).expect("ordered id")).collect();

    let path = &paths.labevents;
    for_each_row(
        path,
        &["admission_id", "time", "lab_name", "value", "ref_low", "ref_high"],
        |row, cols, record| {
            report.rows_read += 1;
            let time = match parse_timestamp(cols.get(record, 1)) {
                Ok(t) => t,
                Err(e) => {
                    report.skip(path, row, format!("time: {e}"));
                    return Ok(());
                }
            };
            let value: f64 = match cols.get(record, 3).parse() {
                Ok(v) => v,
                Err(e) => {
                    report.skip(path, row, format!("value: {e}"));
                    return Ok(());
                }
            };
            let (ref_low, ref_high) =
                match (optional_f64(cols.get(record, 4)), optional_f64(cols.get(record, 5))) {
                    (Ok(lo), Ok(hi)) => (lo, hi),
                    (Err(e), _) | (_, Err(e)) => {
                        report.skip(path, row, format!("reference bound: {e}"));
                        return Ok(());
                    }
                };
            if let (Some(lo), Some(hi)) = (ref_low, ref_high) {
                if lo >= hi {
                    report.skip(path, row, format!("ref_low {lo} not below ref_high {hi}"));
                    return Ok(());
                }
            }
            let lab_name = cols.get(record, 2).to_string();
            if lab_name.is_empty() {
                report.skip(path, row, "empty lab_name");
                return Ok(());
            }
            report.rows_kept += 1;
            set.labs.push(LabObservation {
                admission_id: cols.get(record, 0).to_string(),
                time,
                lab_name,
                value,
                ref_low,
                ref_high,
            });
            Ok(())
        },
    )?;

    let path = &paths.prescriptions;
    for_each_row(path, &["admission_id", "time", "drug_name"], |row, cols, record| {
        report.rows_read += 1;
        let time = match parse_timestamp(cols.get(record, 1)) {
            Ok(t) => t,
            Err(e) => {
                report.skip(path, row, format!("time: {e}"));
                return Ok(());
            }
        };
        let drug_name = cols.get(record, 2).to_string();
        if drug_name.is_empty() {
            report.skip(path, row, "empty drug_name");
            return Ok(());
        }
        report.rows_kept += 1;
        set.prescriptions.push(PrescriptionRecord {
            admission_id: cols.get(record, 0).to_string(),
            time,
            drug_name,
        });
        Ok(())
    })?;

    let path = &paths.noteevents;
    for_each_row(
        path,
        &["note_id", "admission_id", "time", "category", "text"],
        |row, cols, record| {
            report.rows_read += 1;
            let time = match parse_timestamp(cols.get(record, 2)) {
                Ok(t) => t,
                Err(e) => {
                    report.skip(path, row, format!("time: {e}"));
                    return Ok(());
                }
            };
            let note_id = cols.get(record, 0).to_string();
            if note_id.is_empty() {
                report.skip(path, row, "empty note_id");
                return Ok(());
            }
            report.rows_kept += 1;
            set.notes.push(NoteRecord {
                note_id,
                admission_id: cols.get(record, 1).to_string(),
                time,
                category: cols.get(record, 3).to_string(),
                text: record.get(cols.indices[4]).unwrap_or("").to_string(),
            });
            Ok(())
        },
    )?;

    Ok((set, report))
}

/// The `COHORT_TOP_CODES` most frequent principal-diagnosis codes; frequency
/// ties resolve to the lexicographically smaller code.
pub fn top_principal_codes(admissions: &[AdmissionRecord]) -> Vec<String> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for admission in admissions {
        if let Some(principal) = admission.diagnoses.iter().find(|d| d.priority == 1) {
            *counts.entry(&principal.icd9_code).or_insert(0) += 1;
        }
    }
    let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    ranked.into_iter().take(COHORT_TOP_CODES).map(|(code, _)| code.to_string()).collect()
}

/// Keeps admissions whose principal diagnosis is among the top codes and that
/// have at least one lab and one prescription.
pub fn select_cohort(set: &RecordSet) -> RecordSet {
    let top: std::collections::BTreeSet<String> =
        top_principal_codes(&set.admissions).into_iter().collect();
    let mut keep: Vec<AdmissionRecord> = Vec::new();
    for admission in &set.admissions {
        let Some(principal) = admission.diagnoses.iter().find(|d| d.priority == 1) else {
            continue;
        };
        if !top.contains(&principal.icd9_code) {
            continue;
        }
        let has_labs = set.labs.iter().any(|l| l.admission_id == admission.admission_id);
        let has_rx =
            set.prescriptions.iter().any(|p| p.admission_id == admission.admission_id);
        if has_labs && has_rx {
            keep.push(admission.clone());
        }
    }
    let kept: std::collections::BTreeSet<&str> =
        keep.iter().map(|a| a.admission_id.as_str()).collect();
    RecordSet {
        labs: set.labs.iter().filter(|l| kept.contains(l.admission_id.as_str())).cloned().collect(),
        prescriptions: set
            .prescriptions
            .iter()
            .filter(|p| kept.contains(p.admission_id.as_str()))
            .cloned()
            .collect(),
        notes: set
            .notes
            .iter()
            .filter(|n| kept.contains(n.admission_id.as_str()))
            .cloned()
            .collect(),
        admissions: keep,
    }
}

fn write_csv<F>(path: &Path, headers: &[&str], mut rows: F) -> Result<()>
where
    F: FnMut(&mut csv::Writer<Vec<u8>>) -> Result<()>,
{
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(headers).map_err(|e| Error::csv(path, e))?;
    rows(&mut wtr)?;
    let bytes = wtr.into_inner().map_err(|e| Error::Malformed(e.to_string()))?;
    crate::write_atomic(path, &bytes)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes the record set back out in the ingestion schema (canonical column
/// order, ISO timestamps). Reading the result reproduces the records exactly.
pub fn write_records(dir: &Path, set: &RecordSet) -> Result<InputPaths> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let paths = InputPaths::in_dir(dir);
    use crate::model::format_timestamp as ts;

    write_csv(
        &paths.admissions,
        &[
            "admission_id",
            "patient_id",
            "admit_time",
            "discharge_time",
            "gender",
            "age_years",
            "mortality_label",
        ],
        |w| {
            for a in &set.admissions {
                w.write_record([
                    a.admission_id.as_str(),
                    a.patient_id.as_str(),
                    &ts(a.admit_time),
                    &ts(a.discharge_time),
                    a.gender.token(),
                    &a.age_years.to_string(),
                    if a.mortality_label { "1" } else { "0" },
                ])
                .map_err(|e| Error::csv(&paths.admissions, e))?;
            }
            Ok(())
        },
    )?;

    write_csv(&paths.diagnoses, &["admission_id", "icd9_code", "priority"], |w| {
        for a in &set.admissions {
            for d in &a.diagnoses {
                w.write_record([
                    a.admission_id.as_str(),
                    d.icd9_code.as_str(),
                    &d.priority.to_string(),
                ])
                .map_err(|e| Error::csv(&paths.diagnoses, e))?;
            }
        }
        Ok(())
    })?;

    write_csv(
        &paths.labevents,
        &["admission_id", "time", "lab_name", "value", "ref_low", "ref_high"],
        |w| {
            for l in &set.labs {
                w.write_record([
                    l.admission_id.as_str(),
                    &ts(l.time),
                    l.lab_name.as_str(),
                    &l.value.to_string(),
                    &fmt_opt(l.ref_low),
                    &fmt_opt(l.ref_high),
                ])
                .map_err(|e| Error::csv(&paths.labevents, e))?;
            }
            Ok(())
        },
    )?;

    write_csv(&paths.prescriptions, &["admission_id", "time", "drug_name"], |w| {
        for p in &set.prescriptions {
            w.write_record([p.admission_id.as_str(), &ts(p.time), p.drug_name.as_str()])
                .map_err(|e| Error::csv(&paths.prescriptions, e))?;
        }
        Ok(())
    })?;

    write_csv(
        &paths.noteevents,
        &["note_id", "admission_id", "time", "category", "text"],
        |w| {
            for n in &set.notes {
                w.write_record([
                    n.note_id.as_str(),
                    n.admission_id.as_str(),
                    &ts(n.time),
                    n.category.as_str(),
                    n.text.as_str(),
                ])
                .map_err(|e| Error::csv(&paths.noteevents, e))?;
            }
            Ok(())
        },
    )?;

    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resources::default_code_maps;

    fn fixture_dir() -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join(ADMISSIONS_FILE),
            "admission_id,patient_id,admit_time,discharge_time,gender,age_years,mortality_label\n\
             A1,P1,2019-03-01 08:00:00,2019-03-04 12:00:00,F,35,0\n\
             A2,P2,2019-05-10 09:30:00,2019-05-12 10:00:00,M,67,1\n\
             A3,P3,2019-06-01 00:00:00,2019-06-02 00:00:00,F,45,0\n",
        )
        .unwrap();
        std::fs::write(
            dir.path().join(DIAGNOSES_FILE),
            "admission_id,icd9_code,priority\n\
             A1,250.00,1\nA1,250.60,2\nA2,401.9,1\nA3,250.00,1\n",
        )
        .unwrap();
        std::fs::write(
            dir.path().join(LABEVENTS_FILE),
            "admission_id,time,lab_name,value,ref_low,ref_high\n\
             A1,2019-03-01 09:00:00,Glucose,200,70,110\n\
             A1,2019-03-02 09:00:00,Glucose,95,70,110\n\
             A2,2019-05-10 10:00:00,Creatinine,2.4,0.6,1.2\n\
             A3,2019-06-01 10:00:00,Glucose,80,70,110\n",
        )
        .unwrap();
        std::fs::write(
            dir.path().join(PRESCRIPTIONS_FILE),
            "admission_id,time,drug_name\n\
             A1,2019-03-01 10:00:00,Insulin\n\
             A2,2019-05-10 11:00:00,Lisinopril\n",
        )
        .unwrap();
        std::fs::write(
            dir.path().join(NOTEEVENTS_FILE),
            "note_id,admission_id,time,category,text\n\
             N1,A1,2019-03-01 12:00:00,Discharge summary,\"HPI:\nPatient has diabetes mellitus type 2.\"\n",
        )
        .unwrap();
        dir
    }

    #[test]
    fn fixture_round_trips_through_ingest() {
        let dir = fixture_dir();
        let maps = default_code_maps().unwrap();
        let paths = InputPaths::in_dir(dir.path());
        let (set, report) = ingest_records(&paths, &maps).unwrap();
        assert_eq!(set.admissions.len(), 3);
        assert_eq!(report.issues, vec![]);
        assert_eq!(set.admissions[0].diagnoses.len(), 2);
        assert_eq!(set.admissions[0].diagnoses[0].ccs_category, "CCS49");
        assert_eq!(set.labs.len(), 4);
        assert_eq!(set.notes[0].text.lines().count(), 2);

        let out = tempfile::tempdir().unwrap();
        let out_paths = write_records(out.path(), &set).unwrap();
        let (again, report) = ingest_records(&out_paths, &maps).unwrap();
        assert_eq!(report.issues, vec![]);
        assert_eq!(again, set);
    }

    #[test]
    fn malformed_rows_are_skipped_and_reported() {
        let dir = fixture_dir();
        std::fs::write(
            dir.path().join(LABEVENTS_FILE),
            "admission_id,time,lab_name,value,ref_low,ref_high\n\
             A1,2019-03-01 09:00:00,Glucose,not-a-number,70,110\n\
             A1,2019-03-01 09:00:00,Glucose,90,110,70\n\
             A1,bad-time,Glucose,90,70,110\n\
             A1,2019-03-01 09:00:00,Glucose,90,70,110\n",
        )
        .unwrap();
        let (set, report) =
            ingest_records(&InputPaths::in_dir(dir.path()), &default_code_maps().unwrap()).unwrap();
        assert_eq!(set.labs.len(), 1);
        let lab_issues: Vec<_> = report
            .issues
            .iter()
            .filter(|i| i.file.ends_with(LABEVENTS_FILE))
            .collect();
        assert_eq!(lab_issues.len(), 3);
        assert_eq!(lab_issues[0].row, 1);
        assert!(lab_issues[0].message.contains("value"));
        assert!(lab_issues[1].message.contains("ref_low"));
    }

    #[test]
    fn missing_column_rejects_the_file() {
        let dir = fixture_dir();
        std::fs::write(
            dir.path().join(ADMISSIONS_FILE),
            "admission_id,patient_id,discharge_time,gender,age_years,mortality_label\nA1,P1,2019-03-04 12:00:00,F,35,0\n",
        )
        .unwrap();
        let err = ingest_records(&InputPaths::in_dir(dir.path()), &default_code_maps().unwrap());
        match err {
            Err(Error::MissingColumn { column, .. }) => assert_eq!(column, "admit_time"),
            other => panic!("expected MissingColumn, got {other:?}"),
        }
    }

    #[test]
    fn orphan_and_duplicate_diagnoses_are_reported() {
        let dir = fixture_dir();
        std::fs::write(
            dir.path().join(DIAGNOSES_FILE),
            "admission_id,icd9_code,priority\n\
             A1,250.00,1\nA1,401.9,1\nA9,428.0,1\nA1,250.60,2\n",
        )
        .unwrap();
        let (set, report) =
            ingest_records(&InputPaths::in_dir(dir.path()), &default_code_maps().unwrap()).unwrap();
        assert_eq!(set.admissions[0].diagnoses.len(), 2);
        let messages: Vec<&str> = report.issues.iter().map(|i| i.message.as_str()).collect();
        assert!(messages.iter().any(|m| m.contains("duplicate priority 1")));
        assert!(messages.iter().any(|m| m.contains("unknown admission_id 'A9'")));
    }

    fn admission(id: &str, principal: &str) -> AdmissionRecord {
        AdmissionRecord {
            admission_id: id.to_string(),
            patient_id: format!("P{id}"),
            admit_time: 0,
            discharge_time: 1000,
            gender: Gender::Female,
            age_years: 50,
            mortality_label: false,
            diagnoses: vec![DiagnosisEntry {
                icd9_code: principal.to_string(),
                priority: 1,
                ccs_category: format!("C{principal}"),
            }],
        }
    }

    fn one_each(id: &str) -> (LabObservation, PrescriptionRecord) {
        (
            LabObservation {
                admission_id: id.to_string(),
                time: 10,
                lab_name: "Glucose".into(),
                value: 90.0,
                ref_low: Some(70.0),
                ref_high: Some(110.0),
            },
            PrescriptionRecord { admission_id: id.to_string(), time: 10, drug_name: "Aspirin".into() },
        )
    }

    #[test]
    fn cohort_keeps_top_codes_and_requires_both_event_kinds() {
        // 12 distinct principal codes; c10 and c11 occur once, the rest twice.
        let mut set = RecordSet::default();
        for code in 0..12 {
            let reps = if code < 10 { 2 } else { 1 };
            for r in 0..reps {
                let id = format!("A{code:02}x{r}");
                set.admissions.push(admission(&id, &format!("c{code:02}")));
                let (lab, rx) = one_each(&id);
                set.labs.push(lab);
                set.prescriptions.push(rx);
            }
        }
        let selected = select_cohort(&set);
        assert_eq!(selected.admissions.len(), 20);
        assert!(selected
            .admissions
            .iter()
            .all(|a| a.diagnoses[0].icd9_code.as_str() < "c10"));

        // Admissions lacking labs or prescriptions drop out.
        let mut set = RecordSet::default();
        for (i, id) in ["L1", "L2", "L3"].iter().enumerate() {
            set.admissions.push(admission(id, "c1"));
            let (lab, rx) = one_each(id);
            if i != 1 {
                set.labs.push(lab);
            }
            if i != 2 {
                set.prescriptions.push(rx);
            }
        }
        let selected = select_cohort(&set);
        assert_eq!(selected.admissions.len(), 1);
        assert_eq!(selected.admissions[0].admission_id, "L1");
        assert_eq!(selected.labs.len(), 1);
        assert_eq!(selected.prescriptions.len(), 1);
    }

    #[test]
    fn cohort_rank_ties_break_lexicographically() {
        // Eleven codes, all equally frequent: the ten smallest survive.
        let mut set = RecordSet::default();
        for code in 0..11 {
            let id = format!("T{code:02}");
            set.admissions.push(admission(&id, &format!("z{code:02}")));
            let (lab, rx) = one_each(&id);
            set.labs.push(lab);
            set.prescriptions.push(rx);
        }
        let selected = select_cohort(&set);
        assert_eq!(selected.admissions.len(), 10);
        assert!(selected.admissions.iter().all(|a| a.diagnoses[0].icd9_code != "z10"));
    }

    #[test]
    fn cohort_selection_ignores_row_order() {
        let mut set = RecordSet::default();
        for code in 0..12 {
            for r in 0..(12 - code) {
                let id = format!("B{code:02}x{r}");
                set.admissions.push(admission(&id, &format!("c{code:02}")));
                let (lab, rx) = one_each(&id);
                set.labs.push(lab);
                set.prescriptions.push(rx);
            }
        }
        let forward = select_cohort(&set);
        let mut reversed = set.clone();
        reversed.admissions.reverse();
        reversed.labs.reverse();
        reversed.prescriptions.reverse();
        let backward = select_cohort(&reversed);
        let mut f: Vec<&str> = forward.admissions.iter().map(|a| a.admission_id.as_str()).collect();
        let mut b: Vec<&str> =
            backward.admissions.iter().map(|a| a.admission_id.as_str()).collect();
        f.sort();
        b.sort();
        assert_eq!(f, b);
    }
}
