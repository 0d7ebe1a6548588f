//! Dictionary NER over section text: greedy longest match with abbreviation
//! expansion and a NegEx-style pre-trigger negation window.

use std::collections::HashMap;

use super::sections::{CanonicalSection, NoteSection};
use crate::model::Timestamp;
use crate::{Error, Result};

const NEGATION_WINDOW: usize = 5;
const NEGATION_TRIGGERS: [&str; 4] = ["no", "denies", "without", "not"];
const NEGATION_BIGRAM: (&str, &str) = ("negative", "for");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SemanticType {
    DiseaseDisorder,
    SignSymptom,
}

impl SemanticType {
    pub fn as_str(self) -> &'static str {
        match self {
            SemanticType::DiseaseDisorder => "DiseaseDisorder",
            SemanticType::SignSymptom => "SignSymptom",
        }
    }

    /// Quadruple event token for this semantic type.
    pub fn event_token(self) -> &'static str {
        match self {
            SemanticType::DiseaseDisorder => "Disease",
            SemanticType::SignSymptom => "Symptom",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "DiseaseDisorder" | "DiseaseDisorderMention" => Ok(SemanticType::DiseaseDisorder),
            "SignSymptom" | "SignSymptomMention" => Ok(SemanticType::SignSymptom),
            other => Err(Error::UnknownSemanticType(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Concept {
    cui: String,
    semantic_type: SemanticType,
    label: String,
}

#[derive(Debug, Clone)]
struct SurfaceForm {
    tokens: Vec<String>,
    concept: usize,
}

/// Disease/sign/symptom dictionary with surface forms and abbreviations.
#[derive(Debug, Clone)]
pub struct ConceptLexicon {
    concepts: Vec<Concept>,
    /// Surface forms grouped by first token, longest first.
    by_first_token: HashMap<String, Vec<SurfaceForm>>,
    abbreviations: HashMap<String, String>,
}

impl ConceptLexicon {
    pub fn from_tsv(lexicon: &str, abbreviations: &str) -> Result<Self> {
        let mut concepts: Vec<Concept> = Vec::new();
        let mut cui_index: HashMap<String, usize> = HashMap::new();
        let mut by_first_token: HashMap<String, Vec<SurfaceForm>> = HashMap::new();
        let mut seen_surfaces: HashMap<String, String> = HashMap::new();

        for (lineno, line) in lexicon.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 4 {
                return Err(Error::Malformed(format!(
                    "lexicon line {}: expected 4 tab-separated fields",
                    lineno + 1
                )));
            }
            let (surface, cui, sem, label) = (fields[0], fields[1], fields[2], fields[3]);
            let tokens = fold_tokens(surface);
            if tokens.is_empty() {
                return Err(Error::EmptyLexiconSurface(cui.to_string()));
            }
            if cui.trim().is_empty() {
                return Err(Error::Malformed(format!("lexicon line {}: empty CUI", lineno + 1)));
            }
            let folded = tokens.join(" ");
            if let Some(prev) = seen_surfaces.insert(folded.clone(), cui.to_string()) {
                return Err(Error::Malformed(format!(
                    "surface '{surface}' appears for both {prev} and {cui}"
                )));
            }
            let semantic_type = SemanticType::parse(sem)?;
            let idx = match cui_index.get(cui) {
                Some(&i) => {
                    let existing = &concepts[i];
                    if existing.semantic_type != semantic_type || existing.label != label {
                        return Err(Error::Malformed(format!(
                            "CUI {cui} has conflicting type or label across lexicon lines"
                        )));
                    }
                    i
                }
                None => {
                    concepts.push(Concept {
                        cui: cui.to_string(),
                        semantic_type,
                        label: label.to_string(),
                    });
                    cui_index.insert(cui.to_string(), concepts.len() - 1);
                    concepts.len() - 1
                }
            };
            by_first_token
                .entry(tokens[0].clone())
                .or_default()
                .push(SurfaceForm { tokens, concept: idx });
        }

        for forms in by_first_token.values_mut() {
            forms.sort_by(|a, b| {
                b.tokens.len().cmp(&a.tokens.len()).then_with(|| a.tokens.cmp(&b.tokens))
            });
        }

        let mut abbrev_map = HashMap::new();
        for (lineno, line) in abbreviations.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (short, long) = line.split_once('\t').ok_or_else(|| {
                Error::Malformed(format!("abbreviation line {}: missing tab", lineno + 1))
            })?;
            abbrev_map.insert(short.trim().to_lowercase(), long.trim().to_string());
        }

        Ok(ConceptLexicon { concepts, by_first_token, abbreviations: abbrev_map })
    }

    pub fn num_concepts(&self) -> usize {
        self.concepts.len()
    }

    pub fn label_of(&self, cui: &str) -> Option<&str> {
        self.concepts.iter().find(|c| c.cui == cui).map(|c| c.label.as_str())
    }
}

/// One dictionary hit inside a note section.
#[derive(Debug, Clone, PartialEq)]
pub struct ConceptMention {
    pub surface: String,
    pub label: String,
    pub cui: String,
    pub semantic_type: SemanticType,
    pub negated: bool,
    pub section: CanonicalSection,
    pub note_time: Timestamp,
}

#[derive(Debug, Clone)]
struct Tok {
    folded: String,
    sentence: usize,
}

/// Case-folded tokens split on non-alphanumeric characters.
fn fold_tokens(text: &str) -> Vec<String> {
    tokenize(text).into_iter().map(|t| t.folded).collect()
}

fn tokenize(text: &str) -> Vec<Tok> {
    let mut toks = Vec::new();
    let mut current = String::new();
    let mut sentence = 0usize;
    for c in text.chars() {
        if c.is_alphanumeric() {
            current.extend(c.to_lowercase());
        } else {
            if !current.is_empty() {
                toks.push(Tok { folded: std::mem::take(&mut current), sentence });
            }
            if matches!(c, '.' | '!' | '?' | ';' | '\n') {
                sentence += 1;
            }
        }
    }
    if !current.is_empty() {
        toks.push(Tok { folded: current, sentence });
    }
    toks
}

/// Scans one section for lexicon concepts.
///
/// Tokens are case-folded, abbreviations expanded in place, then a greedy
/// longest-match scan runs over the token stream; matches never cross
/// sentence boundaries. A mention is negated when a trigger ends within the
/// five tokens before it in the same sentence.
pub fn extract_concept_mentions(
    section: &NoteSection,
    lexicon: &ConceptLexicon,
) -> Vec<ConceptMention> {
    let raw = tokenize(&section.text);
    let mut toks: Vec<Tok> = Vec::with_capacity(raw.len());
    for tok in raw {
        match lexicon.abbreviations.get(&tok.folded) {
            Some(long) => {
                for part in fold_tokens(long) {
                    toks.push(Tok { folded: part, sentence: tok.sentence });
                }
            }
            None => toks.push(tok),
        }
    }

    let mut mentions = Vec::new();
    let mut i = 0;
    while i < toks.len() {
        let Some(forms) = lexicon.by_first_token.get(&toks[i].folded) else {
            i += 1;
            continue;
        };
        let mut matched = None;
        for form in forms {
            let end = i + form.tokens.len();
            if end > toks.len() {
                continue;
            }
            let fits = toks[i..end].iter().zip(&form.tokens).all(|(t, f)| &t.folded == f)
                && toks[i..end].iter().all(|t| t.sentence == toks[i].sentence);
            if fits {
                matched = Some((form, end));
                break;
            }
        }
        let Some((form, end)) = matched else {
            i += 1;
            continue;
        };
        let concept = &lexicon.concepts[form.concept];
        mentions.push(ConceptMention {
            surface: form.tokens.join(" "),
            label: concept.label.clone(),
            cui: concept.cui.clone(),
            semantic_type: concept.semantic_type,
            negated: is_negated(&toks, i),
            section: section.canonical_name,
            note_time: section.note_time,
        });
        i = end;
    }
    mentions
}

/// True when a negation trigger ends within the window before token `start`
/// and no sentence boundary intervenes.
fn is_negated(toks: &[Tok], start: usize) -> bool {
    let sentence = toks[start].sentence;
    let from = start.saturating_sub(NEGATION_WINDOW);
    for j in from..start {
        if toks[j].sentence != sentence {
            continue;
        }
        let word = toks[j].folded.as_str();
        if NEGATION_TRIGGERS.contains(&word) {
            return true;
        }
        if word == NEGATION_BIGRAM.1
            && j > 0
            && toks[j - 1].folded == NEGATION_BIGRAM.0
            && toks[j - 1].sentence == sentence
        {
            return true;
        }
    }
    false
}
