//! Note section detection against a header dictionary.

use std::collections::HashMap;

use crate::model::{TemporalEventType, Timestamp};
use crate::{Error, Result};

/// The fixed set of canonical section names notes are mapped onto.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CanonicalSection {
    Preamble,
    Hpi,
    Pmh,
    FamilyHistory,
    Findings,
    HospitalCourse,
    Medications,
    DischargeCondition,
}

impl CanonicalSection {
    pub fn as_str(self) -> &'static str {
        match self {
            CanonicalSection::Preamble => "Preamble",
            CanonicalSection::Hpi => "HPI",
            CanonicalSection::Pmh => "PMH",
            CanonicalSection::FamilyHistory => "FamilyHistory",
            CanonicalSection::Findings => "Findings",
            CanonicalSection::HospitalCourse => "HospitalCourse",
            CanonicalSection::Medications => "Medications",
            CanonicalSection::DischargeCondition => "DischargeCondition",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "Preamble" => Some(CanonicalSection::Preamble),
            "HPI" => Some(CanonicalSection::Hpi),
            "PMH" => Some(CanonicalSection::Pmh),
            "FamilyHistory" => Some(CanonicalSection::FamilyHistory),
            "Findings" => Some(CanonicalSection::Findings),
            "HospitalCourse" => Some(CanonicalSection::HospitalCourse),
            "Medications" => Some(CanonicalSection::Medications),
            "DischargeCondition" => Some(CanonicalSection::DischargeCondition),
            _ => None,
        }
    }

    /// Temporal class of concepts found in this section. `None` means the
    /// section has no assigned class and callers fall back to LongLasting.
    pub fn temporal_class(self) -> Option<TemporalEventType> {
        match self {
            CanonicalSection::Hpi | CanonicalSection::Pmh | CanonicalSection::FamilyHistory => {
                Some(TemporalEventType::Retrospective)
            }
            CanonicalSection::Findings
            | CanonicalSection::HospitalCourse
            | CanonicalSection::DischargeCondition => Some(TemporalEventType::LongLasting),
            CanonicalSection::Preamble | CanonicalSection::Medications => None,
        }
    }
}

/// Maps raw header phrases (case-insensitive) onto canonical section names.
#[derive(Debug, Clone)]
pub struct SectionHeaderDictionary {
    entries: HashMap<String, CanonicalSection>,
}

impl SectionHeaderDictionary {
    pub fn from_entries<I, S>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, S)>,
        S: AsRef<str>,
    {
        let mut map = HashMap::new();
        for (raw, canonical) in entries {
            let key = raw.as_ref().trim().to_lowercase();
            if key.is_empty() {
                return Err(Error::Malformed("empty section header phrase".into()));
            }
            let section = CanonicalSection::parse(canonical.as_ref().trim()).ok_or_else(|| {
                Error::UnknownSection {
                    surface: raw.as_ref().to_string(),
                    canonical: canonical.as_ref().to_string(),
                }
            })?;
            if map.insert(key, section).is_some() {
                return Err(Error::Malformed(format!(
                    "duplicate section header phrase '{}'",
                    raw.as_ref()
                )));
            }
        }
        Ok(SectionHeaderDictionary { entries: map })
    }

    /// Parses the `raw phrase<TAB>CANONICAL` file format.
    pub fn parse_tsv(content: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (lineno, line) in content.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (raw, canonical) = line.split_once('\t').ok_or_else(|| {
                Error::Malformed(format!("section dictionary line {}: missing tab", lineno + 1))
            })?;
            pairs.push((raw.to_string(), canonical.to_string()));
        }
        Self::from_entries(pairs)
    }

    /// Looks up a header line; the line is trimmed and one trailing colon is
    /// dropped before the case-insensitive match.
    pub fn match_header_line(&self, line: &str) -> Option<CanonicalSection> {
        let trimmed = line.trim();
        let without_colon = trimmed.strip_suffix(':').unwrap_or(trimmed);
        self.entries.get(&without_colon.trim().to_lowercase()).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// One detected section of a note. `char_span` is a byte range into the
/// original note text covering the header line and the body, so that the
/// concatenation of all spans reconstructs the note exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct NoteSection {
    pub canonical_name: CanonicalSection,
    /// Body text after the header line (the whole span for a Preamble).
    pub text: String,
    pub char_span: (usize, usize),
    pub note_time: Timestamp,
}

/// Splits a note at recognized header lines.
///
/// Every section runs from its header line to the next recognized header (or
/// end of note); anything before the first header becomes a Preamble section.
/// A note with no recognized header is one big Preamble.
pub fn canonicalize_sections(
    note_text: &str,
    dict: &SectionHeaderDictionary,
    note_time: Timestamp,
) -> Result<Vec<NoteSection>> {
    if note_text.is_empty() {
        return Err(Error::Malformed("empty note text".into()));
    }

    // (byte offset of header line start, byte offset of body start, section)
    let mut headers: Vec<(usize, usize, CanonicalSection)> = Vec::new();
    let mut offset = 0;
    for line in note_text.split_inclusive('\n') {
        let stripped = line.strip_suffix('\n').unwrap_or(line);
        let stripped = stripped.strip_suffix('\r').unwrap_or(stripped);
        if let Some(section) = dict.match_header_line(stripped) {
            headers.push((offset, offset + line.len(), section));
        }
        offset += line.len();
    }

    let mut sections = Vec::new();
    let first_header = headers.first().map_or(note_text.len(), |h| h.0);
    if first_header > 0 {
        sections.push(NoteSection {
            canonical_name: CanonicalSection::Preamble,
            text: note_text[..first_header].to_string(),
            char_span: (0, first_header),
            note_time,
        });
    }
    for (i, &(start, body_start, section)) in headers.iter().enumerate() {
        let end = headers.get(i + 1).map_or(note_text.len(), |h| h.0);
        sections.push(NoteSection {
            canonical_name: section,
            text: note_text[body_start..end].to_string(),
            char_span: (start, end),
            note_time,
        });
    }
    Ok(sections)
}
