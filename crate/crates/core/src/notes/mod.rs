//! Note processing: section canonicalization, dictionary NER with negation
//! filtering, CUI → ICD-9 → CCS mapping, and conversion to quadruples.

mod matcher;
mod sections;

pub use matcher::{extract_concept_mentions, ConceptLexicon, ConceptMention, SemanticType};
pub use sections::{canonicalize_sections, CanonicalSection, NoteSection, SectionHeaderDictionary};

use std::collections::{BTreeMap, HashMap};

use crate::model::{normalize_token, NoteRecord, Quadruple, TemporalEventType, Timestamp};
use crate::{Error, Result};

/// CCS value for concepts whose CUI has no ICD-9 mapping.
pub const UNMAPPED: &str = "UNMAPPED";

/// CUI → ICD-9 and ICD-9 → CCS lookup tables.
#[derive(Debug, Clone, Default)]
pub struct CodeMaps {
    cui_to_icd9: HashMap<String, Vec<String>>,
    icd9_to_ccs: HashMap<String, String>,
}

impl CodeMaps {
    pub fn from_tsv(cui_icd9: &str, icd9_ccs: &str) -> Result<Self> {
        let mut cui_to_icd9: HashMap<String, Vec<String>> = HashMap::new();
        for (lineno, line) in cui_icd9.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (cui, code) = line.split_once('\t').ok_or_else(|| {
                Error::Malformed(format!("cui-icd9 line {}: missing tab", lineno + 1))
            })?;
            cui_to_icd9.entry(cui.trim().to_string()).or_default().push(code.trim().to_string());
        }
        let mut icd9_to_ccs = HashMap::new();
        for (lineno, line) in icd9_ccs.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (code, ccs) = line.split_once('\t').ok_or_else(|| {
                Error::Malformed(format!("icd9-ccs line {}: missing tab", lineno + 1))
            })?;
            icd9_to_ccs.insert(code.trim().to_string(), ccs.trim().to_string());
        }
        Ok(CodeMaps { cui_to_icd9, icd9_to_ccs })
    }

    pub fn icd9_codes(&self, cui: &str) -> &[String] {
        self.cui_to_icd9.get(cui).map_or(&[], |v| v.as_slice())
    }

    /// CCS category of an ICD-9 code, or [`UNMAPPED`].
    pub fn ccs_of(&self, icd9: &str) -> &str {
        self.icd9_to_ccs.get(icd9).map_or(UNMAPPED, |s| s.as_str())
    }
}

/// A concept mention annotated with diagnosis codes.
#[derive(Debug, Clone, PartialEq)]
pub struct MappedConcept {
    pub label: String,
    pub cui: String,
    /// (icd9, ccs) pairs; empty when the CUI has no ICD-9 mapping.
    pub codes: Vec<(String, String)>,
    pub semantic_type: SemanticType,
    pub section: CanonicalSection,
    pub note_time: Timestamp,
}

impl MappedConcept {
    /// First mapped CCS category, or [`UNMAPPED`].
    pub fn primary_ccs(&self) -> &str {
        self.codes.first().map_or(UNMAPPED, |(_, ccs)| ccs.as_str())
    }
}

/// Annotates non-negated mentions with ICD-9/CCS codes.
///
/// Negated mentions are dropped here as a second line of defense; duplicate
/// (cui, section) pairs collapse to one, keeping the earliest note time.
/// Output order is (note_time, section, cui), so the result is deterministic
/// for any input permutation.
pub fn map_concepts(mentions: &[ConceptMention], maps: &CodeMaps) -> Vec<MappedConcept> {
    let mut earliest: BTreeMap<(String, CanonicalSection), &ConceptMention> = BTreeMap::new();
    for mention in mentions {
        if mention.negated {
            continue;
        }
        let key = (mention.cui.clone(), mention.section);
        match earliest.get(&key) {
            Some(prev) if prev.note_time <= mention.note_time => {}
            _ => {
                earliest.insert(key, mention);
            }
        }
    }
    let mut out: Vec<MappedConcept> = earliest
        .into_values()
        .map(|m| {
            let codes = maps
                .icd9_codes(&m.cui)
                .iter()
                .map(|icd9| (icd9.clone(), maps.ccs_of(icd9).to_string()))
                .collect();
            MappedConcept {
                label: m.label.clone(),
                cui: m.cui.clone(),
                codes,
                semantic_type: m.semantic_type,
                section: m.section,
                note_time: m.note_time,
            }
        })
        .collect();
    out.sort_by(|a, b| {
        (a.note_time, a.section, &a.cui).cmp(&(b.note_time, b.section, &b.cui))
    });
    out
}

/// Turns mapped concepts into quadruples.
///
/// Event token is "Disease" or "Symptom"; the value is the normalized
/// preferred label. Sections with no assigned temporal class default to
/// LongLasting with a logged warning.
pub fn concepts_to_quadruples(concepts: &[MappedConcept]) -> Result<Vec<Quadruple>> {
    let mut out = Vec::with_capacity(concepts.len());
    for concept in concepts {
        let event_type = concept.section.temporal_class().unwrap_or_else(|| {
            log::warn!(
                "section {} has no temporal class; defaulting '{}' to LongLasting",
                concept.section.as_str(),
                concept.label
            );
            TemporalEventType::LongLasting
        });
        let value = normalize_token(&concept.label);
        if value.is_empty() {
            return Err(Error::InvalidQuadruple(format!(
                "concept label '{}' is empty after normalization",
                concept.label
            )));
        }
        out.push(Quadruple::new(
            concept.note_time,
            event_type,
            concept.semantic_type.event_token(),
            value,
        )?);
    }
    out.sort_by(|a, b| {
        (a.time, a.event_type, &a.event, &a.value).cmp(&(b.time, b.event_type, &b.event, &b.value))
    });
    Ok(out)
}

/// Runs section detection and concept extraction over one note.
pub fn extract_note_mentions(
    note: &NoteRecord,
    dict: &SectionHeaderDictionary,
    lexicon: &ConceptLexicon,
) -> Result<Vec<ConceptMention>> {
    let sections = canonicalize_sections(&note.text, dict, note.time)?;
    let mut mentions = Vec::new();
    for section in &sections {
        mentions.extend(extract_concept_mentions(section, lexicon));
    }
    Ok(mentions)
}

/// Serializes mentions in the external interchange format:
/// `note_id<TAB>section<TAB>cui<TAB>semantic_type<TAB>label<TAB>negated`.
pub fn format_mention_line(note_id: &str, m: &ConceptMention) -> String {
    format!(
        "{}\t{}\t{}\t{}\t{}\t{}",
        note_id,
        m.section.as_str(),
        m.cui,
        m.semantic_type.as_str(),
        m.label,
        u8::from(m.negated)
    )
}

/// A non-fatal problem encountered while importing external mentions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImportIssue {
    pub line: usize,
    pub message: String,
}

/// Parses externally extracted mentions (e.g. MetaMap/cTAKES output converted
/// to the interchange format), resolving each note id against the cohort's
/// notes. Malformed rows and unknown note ids are skipped and reported.
pub fn parse_external_mentions(
    content: &str,
    notes: &[NoteRecord],
) -> (BTreeMap<String, Vec<ConceptMention>>, Vec<ImportIssue>) {
    let note_index: HashMap<&str, &NoteRecord> =
        notes.iter().map(|n| (n.note_id.as_str(), n)).collect();
    let mut by_admission: BTreeMap<String, Vec<ConceptMention>> = BTreeMap::new();
    let mut issues = Vec::new();
    for (lineno, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let mut fail = |message: String| issues.push(ImportIssue { line: lineno + 1, message });
        if fields.len() != 6 {
            fail(format!("expected 6 fields, got {}", fields.len()));
            continue;
        }
        let Some(note) = note_index.get(fields[0]) else {
            fail(format!("unknown note id '{}'", fields[0]));
            continue;
        };
        let Some(section) = CanonicalSection::parse(fields[1]) else {
            fail(format!("unknown section '{}'", fields[1]));
            continue;
        };
        let semantic_type = match SemanticType::parse(fields[3]) {
            Ok(t) => t,
            Err(e) => {
                fail(e.to_string());
                continue;
            }
        };
        let negated = match fields[5].trim() {
            "0" => false,
            "1" => true,
            other => {
                fail(format!("negated flag must be 0 or 1, got '{other}'"));
                continue;
            }
        };
        by_admission.entry(note.admission_id.clone()).or_default().push(ConceptMention {
            surface: fields[4].to_string(),
            label: fields[4].to_string(),
            cui: fields[2].to_string(),
            semantic_type,
            negated,
            section,
            note_time: note.time,
        });
    }
    (by_admission, issues)
}
