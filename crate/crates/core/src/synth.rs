//! Synthetic cohort generation with planted retrieval and outcome signal.
//!
//! Each catalog disease owns two day templates of structured events (one lab
//! at a fixed level plus one drug per day). Diseases are paired so that both
//! members of a pair emit the same bag of individual events but combine them
//! differently within a day: the flat event bag cannot tell the two apart
//! while the within-interval combinations can. Prior conditions surface in
//! note history sections and, with some probability, as secondary diagnosis
//! codes; the history-effect parameter `beta` controls how often the
//! principal diagnosis is drawn from those prior conditions. Mortality risk
//! grows with the severity of the principal and of the history burden, and a
//! severity marker lab leaks a weak version of that risk into the
//! structured events.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::ingest::RecordSet;
use crate::model::{
    AdmissionRecord, DiagnosisEntry, Gender, LabLevel, LabObservation, NoteRecord,
    PrescriptionRecord, Timestamp,
};
use crate::{Error, Result};

/// 2019-01-01 00:00:00 UTC; all admissions start within a year of this.
const BASE_TIME: Timestamp = 1_546_300_800;
const DAY: i64 = 86_400;
const HOUR: i64 = 3_600;

/// Chance that a prior condition is also coded as a secondary diagnosis.
const SECONDARY_CODE_RATE: f64 = 0.7;
/// Chance that a disease mention uses its abbreviation when one exists.
const ABBREVIATION_RATE: f64 = 0.35;
/// Chance that an admission carries one extra normal-range lab.
const BACKGROUND_LAB_RATE: f64 = 0.25;
/// Chance that an admission carries one extra common drug order.
const COMMON_DRUG_RATE: f64 = 0.25;

/// One generatable disease. Surfaces, codes, and abbreviations mirror the
/// bundled lexicon and code maps; a unit test keeps them in sync.
#[derive(Debug, Clone, Copy)]
pub struct DiseaseProfile {
    pub surface: &'static str,
    pub abbreviation: Option<&'static str>,
    pub cui: &'static str,
    pub icd9: &'static str,
    pub ccs: &'static str,
    /// Contribution to mortality risk, in [0, 1].
    pub severity: f64,
    /// Typical presenting symptom, as a lexicon surface form.
    pub symptom: &'static str,
}

pub const DISEASE_CATALOG: [DiseaseProfile; 18] = [
    DiseaseProfile {
        surface: "diabetes mellitus type 2",
        abbreviation: Some("dm2"),
        cui: "C0011860",
        icd9: "250.00",
        ccs: "CCS49",
        severity: 0.35,
        symptom: "fatigue",
    },
    DiseaseProfile {
        surface: "diabetic neuropathy",
        abbreviation: None,
        cui: "C0011882",
        icd9: "250.60",
        ccs: "CCS50",
        severity: 0.30,
        symptom: "dizziness",
    },
    DiseaseProfile {
        surface: "essential hypertension",
        abbreviation: Some("htn"),
        cui: "C0085580",
        icd9: "401.9",
        ccs: "CCS98",
        severity: 0.25,
        symptom: "headache",
    },
    DiseaseProfile {
        surface: "congestive heart failure",
        abbreviation: Some("chf"),
        cui: "C0018802",
        icd9: "428.0",
        ccs: "CCS108",
        severity: 0.75,
        symptom: "edema",
    },
    DiseaseProfile {
        surface: "atrial fibrillation",
        abbreviation: Some("afib"),
        cui: "C0004238",
        icd9: "427.31",
        ccs: "CCS106",
        severity: 0.50,
        symptom: "palpitations",
    },
    DiseaseProfile {
        surface: "myocardial infarction",
        abbreviation: Some("mi"),
        cui: "C0027051",
        icd9: "410.90",
        ccs: "CCS100",
        severity: 0.85,
        symptom: "chest pain",
    },
    DiseaseProfile {
        surface: "pneumonia",
        abbreviation: None,
        cui: "C0032285",
        icd9: "486",
        ccs: "CCS122",
        severity: 0.60,
        symptom: "cough",
    },
    DiseaseProfile {
        surface: "chronic obstructive pulmonary disease",
        abbreviation: Some("copd"),
        cui: "C0024117",
        icd9: "496",
        ccs: "CCS127",
        severity: 0.55,
        symptom: "shortness of breath",
    },
    DiseaseProfile {
        surface: "asthma",
        abbreviation: None,
        cui: "C0004096",
        icd9: "493.90",
        ccs: "CCS128",
        severity: 0.30,
        symptom: "dyspnea",
    },
    DiseaseProfile {
        surface: "chronic kidney disease",
        abbreviation: Some("ckd"),
        cui: "C1561643",
        icd9: "585.9",
        ccs: "CCS158",
        severity: 0.60,
        symptom: "edema",
    },
    DiseaseProfile {
        surface: "urinary tract infection",
        abbreviation: Some("uti"),
        cui: "C0042029",
        icd9: "599.0",
        ccs: "CCS159",
        severity: 0.35,
        symptom: "fever",
    },
    DiseaseProfile {
        surface: "sepsis",
        abbreviation: None,
        cui: "C0243026",
        icd9: "038.9",
        ccs: "CCS2",
        severity: 0.95,
        symptom: "fever",
    },
    DiseaseProfile {
        surface: "ischemic stroke",
        abbreviation: None,
        cui: "C0948008",
        icd9: "434.91",
        ccs: "CCS109",
        severity: 0.80,
        symptom: "dizziness",
    },
    DiseaseProfile {
        surface: "iron deficiency anemia",
        abbreviation: Some("ida"),
        cui: "C0162316",
        icd9: "280.9",
        ccs: "CCS59",
        severity: 0.30,
        symptom: "fatigue",
    },
    DiseaseProfile {
        surface: "thalassemia",
        abbreviation: None,
        cui: "C0039730",
        icd9: "282.40",
        ccs: "CCS61",
        severity: 0.40,
        symptom: "fatigue",
    },
    DiseaseProfile {
        surface: "hyperlipidemia",
        abbreviation: Some("hld"),
        cui: "C0020473",
        icd9: "272.4",
        ccs: "CCS53",
        severity: 0.20,
        symptom: "headache",
    },
    DiseaseProfile {
        surface: "hypothyroidism",
        abbreviation: None,
        cui: "C0020676",
        icd9: "244.9",
        ccs: "CCS48",
        severity: 0.25,
        symptom: "tiredness",
    },
    DiseaseProfile {
        surface: "gastroesophageal reflux disease",
        abbreviation: Some("gerd"),
        cui: "C0017168",
        icd9: "530.81",
        ccs: "CCS138",
        severity: 0.15,
        symptom: "nausea",
    },
];

#[derive(Debug, Clone, Copy)]
struct LabSpec {
    name: &'static str,
    low: f64,
    high: f64,
}

const LAB_POOL: [LabSpec; 12] = [
    LabSpec { name: "Glucose", low: 70.0, high: 110.0 },
    LabSpec { name: "Creatinine", low: 0.6, high: 1.2 },
    LabSpec { name: "Potassium", low: 3.5, high: 5.0 },
    LabSpec { name: "Sodium", low: 135.0, high: 145.0 },
    LabSpec { name: "Hemoglobin", low: 12.0, high: 16.0 },
    LabSpec { name: "WBC", low: 4.0, high: 11.0 },
    LabSpec { name: "Platelets", low: 150.0, high: 400.0 },
    LabSpec { name: "Troponin", low: 0.01, high: 0.04 },
    LabSpec { name: "BNP", low: 10.0, high: 100.0 },
    LabSpec { name: "TSH", low: 0.4, high: 4.0 },
    LabSpec { name: "Bilirubin", low: 0.1, high: 1.2 },
    LabSpec { name: "Albumin", low: 3.4, high: 5.4 },
];

/// Marker lab whose level tracks mortality risk.
const SEVERITY_LAB: LabSpec = LabSpec { name: "Lactate", low: 0.5, high: 2.0 };

const DRUG_POOL: [&str; 12] = [
    "Insulin",
    "Metformin",
    "Lisinopril",
    "Amlodipine",
    "Furosemide",
    "Warfarin",
    "Atorvastatin",
    "Albuterol",
    "Prednisone",
    "Levothyroxine",
    "Ceftriaxone",
    "Omeprazole",
];

const COMMON_DRUGS: [&str; 2] = ["Aspirin", "Acetaminophen"];

#[derive(Debug, Clone, Copy)]
struct DayTemplate {
    lab: LabSpec,
    level: LabLevel,
    drug: &'static str,
}

/// The two day templates of a disease.
///
/// Pair `k` covers diseases `2k` and `2k + 1` and owns two lab tokens and two
/// drug tokens. The first member combines lab `a` with drug `a` and lab `b`
/// with drug `b`; the second member crosses them. Both members therefore emit
/// identical event bags over enough days while no two diseases share a
/// (lab level, drug) day combination.
fn day_templates(disease: usize) -> [DayTemplate; 2] {
    let pair = disease / 2;
    let level = if pair < 6 { LabLevel::High } else { LabLevel::Low };
    let lab_a = LAB_POOL[(2 * pair) % LAB_POOL.len()];
    let lab_b = LAB_POOL[(2 * pair + 1) % LAB_POOL.len()];
    let drug_a = DRUG_POOL[(2 * pair) % DRUG_POOL.len()];
    let drug_b = DRUG_POOL[(2 * pair + 1) % DRUG_POOL.len()];
    if disease % 2 == 0 {
        [
            DayTemplate { lab: lab_a, level, drug: drug_a },
            DayTemplate { lab: lab_b, level, drug: drug_b },
        ]
    } else {
        [
            DayTemplate { lab: lab_a, level, drug: drug_b },
            DayTemplate { lab: lab_b, level, drug: drug_a },
        ]
    }
}

/// Draws a lab value inside the requested band, rounded to three decimals.
/// Bands never touch the reference bounds, so rounding cannot move a value
/// across a boundary.
fn value_in_band(rng: &mut ChaCha8Rng, spec: LabSpec, level: LabLevel) -> f64 {
    let raw = match level {
        LabLevel::Low => rng.gen_range(spec.low * 0.5..spec.low * 0.95),
        LabLevel::Normal => rng.gen_range(spec.low..spec.high),
        LabLevel::High => rng.gen_range(spec.high * 1.05..spec.high * 1.5),
    };
    (raw * 1000.0).round() / 1000.0
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct SynthParams {
    pub num_patients: usize,
    /// Number of catalog diseases in play, from the front of the catalog.
    pub num_diseases: usize,
    /// Probability that the principal diagnosis is drawn from the patient's
    /// prior conditions rather than uniformly from the catalog.
    pub beta: f64,
    pub notes_per_admission: usize,
    pub days_min: u32,
    pub days_max: u32,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            num_patients: 100,
            num_diseases: 10,
            beta: 0.8,
            notes_per_admission: 2,
            days_min: 2,
            days_max: 5,
            seed: 1,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        if self.num_patients < 20 {
            return Err(Error::InvalidSynthParams(format!(
                "num_patients must be at least 20, got {}",
                self.num_patients
            )));
        }
        if self.num_diseases < 4 || self.num_diseases > DISEASE_CATALOG.len() {
            return Err(Error::InvalidSynthParams(format!(
                "num_diseases must be in [4, {}], got {}",
                DISEASE_CATALOG.len(),
                self.num_diseases
            )));
        }
        if !(0.0..=1.0).contains(&self.beta) || !self.beta.is_finite() {
            return Err(Error::InvalidSynthParams(format!(
                "beta must be in [0, 1], got {}",
                self.beta
            )));
        }
        if self.days_min < 1 || self.days_min > self.days_max || self.days_max > 14 {
            return Err(Error::InvalidSynthParams(format!(
                "day range must satisfy 1 <= days_min <= days_max <= 14, got {}..{}",
                self.days_min, self.days_max
            )));
        }
        if self.notes_per_admission > 10 {
            return Err(Error::InvalidSynthParams(format!(
                "notes_per_admission must be at most 10, got {}",
                self.notes_per_admission
            )));
        }
        Ok(())
    }
}

/// Ground truth behind a generated cohort: catalog indices of each
/// admission's prior conditions and principal diagnosis, parallel to
/// `RecordSet::admissions`.
#[derive(Debug, Clone, Default)]
pub struct CohortTruth {
    pub histories: Vec<Vec<usize>>,
    pub principals: Vec<usize>,
}

pub fn generate_cohort(params: &SynthParams) -> Result<RecordSet> {
    generate_cohort_with_truth(params).map(|(set, _)| set)
}

pub fn generate_cohort_with_truth(params: &SynthParams) -> Result<(RecordSet, CohortTruth)> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut set = RecordSet::default();
    let mut truth = CohortTruth::default();
    for idx in 0..params.num_patients {
        generate_admission(&mut rng, idx + 1, params, &mut set, &mut truth);
    }
    Ok((set, truth))
}

fn generate_admission(
    rng: &mut ChaCha8Rng,
    index: usize,
    params: &SynthParams,
    set: &mut RecordSet,
    truth: &mut CohortTruth,
) {
    let n = params.num_diseases;
    let admission_id = format!("A{index:05}");
    let patient_id = format!("P{index:05}");

    let gender = if rng.gen_bool(0.5) { Gender::Female } else { Gender::Male };
    let age_years = rng.gen_range(35..65u32);
    let admit_time =
        BASE_TIME + i64::from(rng.gen_range(0..365u32)) * DAY + i64::from(rng.gen_range(6..18u32)) * HOUR;
    let days = rng.gen_range(params.days_min..=params.days_max) as i64;
    let discharge_time = admit_time + days * DAY - HOUR;

    let history_len = rng.gen_range(1..=3usize).min(n - 1);
    let mut history = rand::seq::index::sample(rng, n, history_len).into_vec();
    history.sort_unstable();
    let principal = if rng.gen_bool(params.beta) {
        history[rng.gen_range(0..history.len())]
    } else {
        rng.gen_range(0..n)
    };

    let risk = mortality_risk(rng, principal, &history);
    let mortality_label = rng.gen_bool(risk);

    let diagnoses = code_diagnoses(rng, principal, &history);
    push_structured_events(rng, &admission_id, principal, days, admit_time, risk, set);
    push_notes(rng, params, &admission_id, principal, &history, admit_time, discharge_time, days, set);

    set.admissions.push(AdmissionRecord {
        admission_id,
        patient_id,
        admit_time,
        discharge_time,
        gender,
        age_years,
        mortality_label,
        diagnoses,
    });
    truth.histories.push(history);
    truth.principals.push(principal);
}

/// Risk rises with the principal's severity and the summed severity of prior
/// conditions, with a little noise. The steep slope keeps the outcome close
/// to deterministic given the clinical profile, so only profiles near the
/// threshold carry label noise; calibrated to kill roughly a fifth of the
/// default cohort.
fn mortality_risk(rng: &mut ChaCha8Rng, principal: usize, history: &[usize]) -> f64 {
    let burden: f64 = history.iter().map(|&d| DISEASE_CATALOG[d].severity).sum();
    let noise = rng.gen_range(-0.1..0.1);
    let z = DISEASE_CATALOG[principal].severity + 0.45 * burden + noise;
    sigmoid((z - 1.25) / 0.08)
}

/// Priority 1 is the principal; each prior condition other than the
/// principal is coded as a secondary with probability [`SECONDARY_CODE_RATE`].
fn code_diagnoses(rng: &mut ChaCha8Rng, principal: usize, history: &[usize]) -> Vec<DiagnosisEntry> {
    let mut out = vec![entry(principal, 1)];
    let mut priority = 2;
    for &d in history {
        if d == principal {
            continue;
        }
        if rng.gen_bool(SECONDARY_CODE_RATE) {
            out.push(entry(d, priority));
            priority += 1;
        }
    }
    out
}

fn entry(disease: usize, priority: u32) -> DiagnosisEntry {
    let profile = &DISEASE_CATALOG[disease];
    DiagnosisEntry {
        icd9_code: profile.icd9.to_string(),
        priority,
        ccs_category: profile.ccs.to_string(),
    }
}

/// One signature lab and drug per day, drawn from the disease's two day
/// templates. The severity marker recurs daily in proportion to risk at a
/// fixed late hour, so each template day has only a with-marker and a
/// without-marker form; other background events stay off most days so that
/// day combinations recur across admissions.
fn push_structured_events(
    rng: &mut ChaCha8Rng,
    admission_id: &str,
    principal: usize,
    days: i64,
    admit_time: Timestamp,
    risk: f64,
    set: &mut RecordSet,
) {
    let templates = day_templates(principal);
    let marker_chance = (0.1 + 0.6 * risk).min(0.9);
    for day in 0..days {
        let day_start = admit_time + day * DAY;
        let template = templates[rng.gen_range(0..2usize)];
        let lab_time = day_start + rng.gen_range(1..10i64) * HOUR;
        let value = value_in_band(rng, template.lab, template.level);
        set.labs.push(LabObservation {
            admission_id: admission_id.to_string(),
            time: lab_time,
            lab_name: template.lab.name.to_string(),
            value,
            ref_low: Some(template.lab.low),
            ref_high: Some(template.lab.high),
        });
        let rx_time = day_start + rng.gen_range(10..20i64) * HOUR;
        set.prescriptions.push(PrescriptionRecord {
            admission_id: admission_id.to_string(),
            time: rx_time,
            drug_name: template.drug.to_string(),
        });
        if rng.gen_bool(marker_chance) {
            let value = value_in_band(rng, SEVERITY_LAB, LabLevel::High);
            set.labs.push(LabObservation {
                admission_id: admission_id.to_string(),
                time: day_start + 21 * HOUR,
                lab_name: SEVERITY_LAB.name.to_string(),
                value,
                ref_low: Some(SEVERITY_LAB.low),
                ref_high: Some(SEVERITY_LAB.high),
            });
        }
    }
    if rng.gen_bool(BACKGROUND_LAB_RATE) {
        let spec = LAB_POOL[rng.gen_range(0..LAB_POOL.len())];
        let day = rng.gen_range(0..days);
        let time = admit_time + day * DAY + rng.gen_range(1..20i64) * HOUR;
        let value = value_in_band(rng, spec, LabLevel::Normal);
        set.labs.push(LabObservation {
            admission_id: admission_id.to_string(),
            time,
            lab_name: spec.name.to_string(),
            value,
            ref_low: Some(spec.low),
            ref_high: Some(spec.high),
        });
    }
    if rng.gen_bool(COMMON_DRUG_RATE) {
        let drug = COMMON_DRUGS[rng.gen_range(0..COMMON_DRUGS.len())];
        let day = rng.gen_range(0..days);
        let time = admit_time + day * DAY + rng.gen_range(1..20i64) * HOUR;
        set.prescriptions.push(PrescriptionRecord {
            admission_id: admission_id.to_string(),
            time,
            drug_name: drug.to_string(),
        });
    }
}

/// A disease mention, occasionally through its abbreviation.
fn render_mention(rng: &mut ChaCha8Rng, disease: usize) -> String {
    let profile = &DISEASE_CATALOG[disease];
    match profile.abbreviation {
        Some(abbr) if rng.gen_bool(ABBREVIATION_RATE) => abbr.to_string(),
        _ => profile.surface.to_string(),
    }
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().collect::<String>() + chars.as_str(),
        None => String::new(),
    }
}

/// A symptom other than the principal's, for negated decoy lines.
fn decoy_symptom(principal: usize) -> &'static str {
    if DISEASE_CATALOG[principal].symptom == "nausea" {
        "headache"
    } else {
        "nausea"
    }
}

/// A disease outside the history set, for negated decoy lines.
fn decoy_disease(rng: &mut ChaCha8Rng, n: usize, history: &[usize]) -> usize {
    loop {
        let candidate = rng.gen_range(0..n);
        if !history.contains(&candidate) {
            return candidate;
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn push_notes(
    rng: &mut ChaCha8Rng,
    params: &SynthParams,
    admission_id: &str,
    principal: usize,
    history: &[usize],
    admit_time: Timestamp,
    discharge_time: Timestamp,
    days: i64,
    set: &mut RecordSet,
) {
    if params.notes_per_admission == 0 {
        return;
    }
    let profile = &DISEASE_CATALOG[principal];
    let mut note_seq = 0usize;
    let mut push = |set: &mut RecordSet, time: Timestamp, category: &str, text: String| {
        note_seq += 1;
        set.notes.push(NoteRecord {
            note_id: format!("{admission_id}-N{note_seq}"),
            admission_id: admission_id.to_string(),
            time,
            category: category.to_string(),
            text,
        });
    };

    let mut admission_text = String::new();
    admission_text.push_str("Chief Complaint:\n");
    admission_text.push_str(&format!("{}.\n", capitalize(profile.symptom)));
    admission_text.push_str("History of Present Illness:\n");
    admission_text.push_str(&format!(
        "Patient presents with {}. Reports {}.\n",
        render_mention(rng, principal),
        profile.symptom
    ));
    admission_text.push_str("Past Medical History:\n");
    for &d in history {
        admission_text.push_str(&format!("History of {}.\n", render_mention(rng, d)));
    }
    let decoy = decoy_disease(rng, params.num_diseases, history);
    admission_text.push_str(&format!("Denies {}.\n", DISEASE_CATALOG[decoy].surface));
    admission_text.push_str("Medications:\n");
    let templates = day_templates(principal);
    admission_text.push_str(&format!("{}, {}.\n", templates[0].drug, templates[1].drug));
    admission_text.push_str("Findings:\n");
    admission_text.push_str(&format!(
        "{} noted on exam. No {}.\n",
        capitalize(profile.symptom),
        decoy_symptom(principal)
    ));
    push(set, admit_time + 2 * HOUR, "Admission note", admission_text);

    if params.notes_per_admission >= 2 {
        let mut discharge_text = String::new();
        discharge_text.push_str("Hospital Course:\n");
        discharge_text.push_str(&format!(
            "Treated for {}. {} improved.\n",
            render_mention(rng, principal),
            capitalize(profile.symptom)
        ));
        discharge_text.push_str("Discharge Condition:\n");
        discharge_text.push_str("Stable at discharge.\n");
        push(set, discharge_time - HOUR, "Discharge summary", discharge_text);
    }

    for extra in 2..params.notes_per_admission {
        let day = ((extra - 1) as i64).min(days - 1);
        let time = admit_time + day * DAY + 3 * HOUR;
        let text = format!("Findings:\n{} persists.\n", capitalize(profile.symptom));
        push(set, time, "Progress note", text);
    }
}
