//! Heterogeneous EMR representation pipeline: unify structured and
//! note-derived clinical events into temporal quadruples, build per-admission
//! temporal trees, flatten them into level sequences, embed admissions as
//! document vectors, and evaluate the result on patient-similarity retrieval
//! and in-hospital mortality prediction.

pub mod embedding;
mod error;
pub mod ingest;
pub mod model;
pub mod notes;
pub mod par;
pub mod pipeline;
pub mod predict;
pub mod resources;
pub mod simeval;
pub mod synth;
pub mod tree;
pub mod wilcoxon;

pub use error::{Error, Result};

/// Writes via a sibling temp file and rename, so readers never observe a
/// partially written artifact.
pub fn write_atomic(path: &std::path::Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| std::path::Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    std::io::Write::write_all(&mut tmp, bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}
