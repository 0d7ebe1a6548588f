//! Core record types and the unified quadruple event representation.
//!
//! Structured rows (labs, prescriptions) and note-derived concepts all reduce
//! to quadruples `{time, temporal event type, event, value}`. Tokens are
//! normalized once here so every downstream consumer (trees, sequences,
//! embeddings) sees the same spelling.

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Epoch seconds. All record times share this clock.
pub type Timestamp = i64;

/// Event token used for prescription quadruples.
pub const MAIN_DRUG_EVENT: &str = "MainDrug";

const TIME_FORMAT: &str = "%Y-%m-%d %H:%M:%S";

/// Parses a timestamp in `YYYY-MM-DD HH:MM:SS` (a `T` separator is accepted).
pub fn parse_timestamp(s: &str) -> Result<Timestamp> {
    let trimmed = s.trim();
    NaiveDateTime::parse_from_str(trimmed, TIME_FORMAT)
        .or_else(|_| NaiveDateTime::parse_from_str(trimmed, "%Y-%m-%dT%H:%M:%S"))
        .map(|dt| dt.and_utc().timestamp())
        .map_err(|e| Error::Malformed(format!("bad timestamp '{trimmed}': {e}")))
}

/// Formats a timestamp back to the canonical `YYYY-MM-DD HH:MM:SS` form.
pub fn format_timestamp(t: Timestamp) -> String {
    match chrono::DateTime::from_timestamp(t, 0) {
        Some(dt) => dt.naive_utc().format(TIME_FORMAT).to_string(),
        None => format!("@{t}"),
    }
}

/// How long an event stays relevant after it is detected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TemporalEventType {
    /// Happened before admission; relevant to the whole stay.
    Retrospective,
    /// Detected during the stay and persists from then on.
    LongLasting,
    /// Relevant only within its own time interval.
    ShortTerm,
}

impl TemporalEventType {
    pub fn as_str(self) -> &'static str {
        match self {
            TemporalEventType::Retrospective => "Retrospective",
            TemporalEventType::LongLasting => "LongLasting",
            TemporalEventType::ShortTerm => "ShortTerm",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "Retrospective" => Ok(TemporalEventType::Retrospective),
            "LongLasting" => Ok(TemporalEventType::LongLasting),
            "ShortTerm" => Ok(TemporalEventType::ShortTerm),
            other => Err(Error::Malformed(format!("unknown event type '{other}'"))),
        }
    }
}

/// Unified event record: when, how long it matters, what, and which value.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Quadruple {
    pub time: Timestamp,
    pub event_type: TemporalEventType,
    pub event: String,
    pub value: String,
}

impl Quadruple {
    /// Builds a quadruple from already-normalized tokens, rejecting empty or
    /// separator-carrying tokens that would corrupt sequence files.
    pub fn new(
        time: Timestamp,
        event_type: TemporalEventType,
        event: impl Into<String>,
        value: impl Into<String>,
    ) -> Result<Self> {
        let event = event.into();
        let value = value.into();
        for (name, tok) in [("event", &event), ("value", &value)] {
            if tok.is_empty() {
                return Err(Error::InvalidQuadruple(format!("{name} token is empty")));
            }
            if tok.chars().any(|c| c.is_whitespace()) {
                return Err(Error::InvalidQuadruple(format!(
                    "{name} token '{tok}' contains whitespace"
                )));
            }
        }
        Ok(Quadruple { time, event_type, event, value })
    }

    /// Pair label as it appears in tree nodes and sequences.
    pub fn pair_label(&self) -> String {
        format!("{}{}", self.event, self.value)
    }
}

/// Reduces a raw string to a single token: drop everything that is not
/// alphanumeric, uppercase the first character, lowercase the rest.
/// `"diabetes mellitus type 2"` becomes `"Diabetesmellitustype2"`.
pub fn normalize_token(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut first = true;
    for c in raw.chars().filter(|c| c.is_alphanumeric()) {
        if first {
            out.extend(c.to_uppercase());
            first = false;
        } else {
            out.extend(c.to_lowercase());
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gender {
    Female,
    Male,
    Other,
}

impl Gender {
    pub fn token(self) -> &'static str {
        match self {
            Gender::Female => "Female",
            Gender::Male => "Male",
            Gender::Other => "Other",
        }
    }

    /// Accepts the usual single-letter and spelled-out encodings.
    pub fn parse(s: &str) -> Self {
        match s.trim().to_ascii_uppercase().as_str() {
            "F" | "FEMALE" => Gender::Female,
            "M" | "MALE" => Gender::Male,
            _ => Gender::Other,
        }
    }
}

/// Maximum age accepted by [`age_bin`]; anything above is treated as corrupt.
pub const MAX_AGE_YEARS: u32 = 130;

/// Decade bin for an age in years, shifted so a 35-year-old lands in bin 4:
/// `floor(age/width) + 1` with the default width of 10 years.
pub fn age_bin(age_years: u32) -> Result<String> {
    age_bin_with_width(age_years, 10)
}

/// [`age_bin`] with a configurable bin width in years.
pub fn age_bin_with_width(age_years: u32, width: u32) -> Result<String> {
    if width == 0 {
        return Err(Error::Malformed("age bin width must be positive".into()));
    }
    if age_years > MAX_AGE_YEARS {
        return Err(Error::Malformed(format!("age {age_years} is out of range")));
    }
    Ok((age_years / width + 1).to_string())
}

/// The demographic pair attached to every interval of a temporal tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Demographics {
    pub gender: Gender,
    pub age_bin: String,
}

impl Demographics {
    pub fn new(gender: Gender, age_years: u32) -> Result<Self> {
        Ok(Demographics { gender, age_bin: age_bin(age_years)? })
    }

    /// (event, value) tokens of the demographic pair node.
    pub fn pair(&self) -> (String, String) {
        (self.gender.token().to_string(), self.age_bin.clone())
    }

    /// Concatenated form used by flat sequences, e.g. `"Female4"`.
    pub fn token(&self) -> String {
        format!("{}{}", self.gender.token(), self.age_bin)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosisEntry {
    pub icd9_code: String,
    /// 1 = principal diagnosis; strictly positive and unique per admission.
    pub priority: u32,
    /// CCS category; `"UNMAPPED"` when no mapping exists.
    pub ccs_category: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissionRecord {
    pub admission_id: String,
    pub patient_id: String,
    pub admit_time: Timestamp,
    pub discharge_time: Timestamp,
    pub gender: Gender,
    pub age_years: u32,
    pub mortality_label: bool,
    pub diagnoses: Vec<DiagnosisEntry>,
}

impl AdmissionRecord {
    pub fn demographics(&self) -> Result<Demographics> {
        Demographics::new(self.gender, self.age_years)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabObservation {
    pub admission_id: String,
    pub time: Timestamp,
    pub lab_name: String,
    pub value: f64,
    pub ref_low: Option<f64>,
    pub ref_high: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrescriptionRecord {
    pub admission_id: String,
    pub time: Timestamp,
    pub drug_name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoteRecord {
    pub note_id: String,
    pub admission_id: String,
    pub time: Timestamp,
    pub category: String,
    pub text: String,
}

/// Discretized lab level relative to the reference range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabLevel {
    Low,
    Normal,
    High,
}

impl LabLevel {
    pub fn as_str(self) -> &'static str {
        match self {
            LabLevel::Low => "Low",
            LabLevel::Normal => "Normal",
            LabLevel::High => "High",
        }
    }
}

/// Maps a lab value to Low/Normal/High against its reference range.
/// Values on a bound count as Normal. Observations carrying neither bound are
/// unusable and yield `None` with a logged warning.
pub fn discretize_lab(obs: &LabObservation) -> Option<LabLevel> {
    let level = match (obs.ref_low, obs.ref_high) {
        (None, None) => {
            log::warn!(
                "lab '{}' at {} has no reference range; skipping value {}",
                obs.lab_name,
                obs.admission_id,
                obs.value
            );
            return None;
        }
        (Some(low), _) if obs.value < low => LabLevel::Low,
        (_, Some(high)) if obs.value > high => LabLevel::High,
        _ => LabLevel::Normal,
    };
    Some(level)
}

/// Converts structured rows to ShortTerm quadruples.
///
/// Labs become `(time, ShortTerm, <lab token>, <level>)`; prescriptions become
/// `(time, ShortTerm, MainDrug, <drug token>)`. Labs with no reference bounds
/// are skipped; everything else is kept. Output is sorted by
/// `(time, event, value)`, so input order does not matter.
pub fn structured_to_quadruples(
    labs: &[LabObservation],
    prescriptions: &[PrescriptionRecord],
) -> Result<Vec<Quadruple>> {
    let mut out = Vec::with_capacity(labs.len() + prescriptions.len());
    for lab in labs {
        let Some(level) = discretize_lab(lab) else { continue };
        let event = normalize_token(&lab.lab_name);
        if event.is_empty() {
            return Err(Error::InvalidQuadruple(format!(
                "lab name '{}' is empty after normalization",
                lab.lab_name
            )));
        }
        out.push(Quadruple::new(lab.time, TemporalEventType::ShortTerm, event, level.as_str())?);
    }
    for rx in prescriptions {
        let value = normalize_token(&rx.drug_name);
        if value.is_empty() {
            return Err(Error::InvalidQuadruple(format!(
                "drug name '{}' is empty after normalization",
                rx.drug_name
            )));
        }
        out.push(Quadruple::new(rx.time, TemporalEventType::ShortTerm, MAIN_DRUG_EVENT, value)?);
    }
    out.sort_by(|a, b| {
        (a.time, &a.event, &a.value).cmp(&(b.time, &b.event, &b.value))
    });
    Ok(out)
}
