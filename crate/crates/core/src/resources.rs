//! Bundled section dictionary, concept lexicon, and code maps.
//!
//! These are small stand-ins shaped like the real UMLS/CCS resources so the
//! pipeline runs self-contained; user-supplied files in the same formats can
//! replace any of them through the configuration.

use crate::notes::{CodeMaps, ConceptLexicon, SectionHeaderDictionary};
use crate::Result;

pub const SECTION_HEADERS_TSV: &str = include_str!("../data/section_headers.tsv");
pub const LEXICON_TSV: &str = include_str!("../data/lexicon.tsv");
pub const ABBREVIATIONS_TSV: &str = include_str!("../data/abbreviations.tsv");
pub const CUI_ICD9_TSV: &str = include_str!("../data/cui_icd9.tsv");
pub const ICD9_CCS_TSV: &str = include_str!("../data/icd9_ccs.tsv");

pub fn default_section_dictionary() -> Result<SectionHeaderDictionary> {
    SectionHeaderDictionary::parse_tsv(SECTION_HEADERS_TSV)
}

pub fn default_lexicon() -> Result<ConceptLexicon> {
    ConceptLexicon::from_tsv(LEXICON_TSV, ABBREVIATIONS_TSV)
}

pub fn default_code_maps() -> Result<CodeMaps> {
    CodeMaps::from_tsv(CUI_ICD9_TSV, ICD9_CCS_TSV)
}
