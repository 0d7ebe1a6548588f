//! Paragraph-vector document embeddings (PV-DBOW / PV-DM) trained with
//! negative sampling over the level-sequence corpus.

pub mod ns;
mod train;
mod vocab;

pub use vocab::{NoiseTable, Vocabulary};

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrainMode {
    PvDbow,
    PvDm,
}

/// Hyperparameters; defaults match common document-embedding practice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    pub vector_size: usize,
    pub window: usize,
    pub sample_threshold: f64,
    pub negative: usize,
    pub alpha: f64,
    pub min_alpha: f64,
    pub epochs: usize,
    pub min_count: u64,
    pub workers: usize,
    pub mode: TrainMode,
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            vector_size: 200,
            window: 5,
            sample_threshold: 1e-5,
            negative: 5,
            alpha: 0.025,
            min_alpha: 0.0001,
            epochs: 10,
            min_count: 5,
            workers: 1,
            mode: TrainMode::PvDbow,
            seed: 1,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.vector_size == 0 {
            return Err(Error::InvalidTrainingConfig("vector_size must be positive".into()));
        }
        if !(self.min_alpha > 0.0 && self.min_alpha <= self.alpha) {
            return Err(Error::InvalidTrainingConfig(
                "require 0 < min_alpha <= alpha".into(),
            ));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidTrainingConfig("epochs must be positive".into()));
        }
        if self.workers == 0 {
            return Err(Error::InvalidTrainingConfig("workers must be positive".into()));
        }
        Ok(())
    }
}

/// One admission's training input: a tag plus its texts (the four level
/// sequences, or the single flat sequence under scenario S).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedDocument {
    pub tag: String,
    pub texts: Vec<Vec<String>>,
}

/// Trained embedding: document vectors keyed by tag plus input word vectors.
#[derive(Debug, Clone)]
pub struct EmbeddingModel {
    config: TrainingConfig,
    doc_tags: Vec<String>,
    tag_index: HashMap<String, usize>,
    doc_vectors: Vec<f64>,
    word_tokens: Vec<String>,
    word_vectors: Vec<f64>,
    final_alpha: f64,
}

/// Builds the frequency-filtered vocabulary with subsampling probabilities.
pub fn build_vocabulary(
    corpus: &[TaggedDocument],
    min_count: u64,
    sample_threshold: f64,
) -> Result<Vocabulary> {
    Vocabulary::build(corpus, min_count, sample_threshold)
}

/// Trains document vectors over the corpus.
///
/// The objective per position is `log σ(u_t·h) + Σ log σ(−u_n·h)` with noise
/// drawn from the unigram distribution raised to 0.75; `h` is the document
/// vector (PV-DBOW) or the mean of the document vector and the window's word
/// vectors (PV-DM). The learning rate decays linearly from `alpha` to
/// `min_alpha` over all scheduled positions. Windows never span two texts.
pub fn train(corpus: &[TaggedDocument], config: &TrainingConfig) -> Result<EmbeddingModel> {
    config.validate()?;
    if corpus.is_empty() {
        return Err(Error::InvalidTrainingConfig("corpus is empty".into()));
    }
    let mut tag_index = HashMap::with_capacity(corpus.len());
    for (i, doc) in corpus.iter().enumerate() {
        if tag_index.insert(doc.tag.clone(), i).is_some() {
            return Err(Error::InvalidTrainingConfig(format!(
                "duplicate document tag '{}'",
                doc.tag
            )));
        }
    }

    let vocab = Vocabulary::build(corpus, config.min_count, config.sample_threshold)?;
    let docs: Vec<Vec<Vec<usize>>> = corpus
        .iter()
        .map(|doc| {
            doc.texts
                .iter()
                .map(|text| text.iter().filter_map(|t| vocab.get(t)).collect())
                .collect()
        })
        .collect();

    let artifacts = train::run_training(&docs, &vocab, config)?;

    Ok(EmbeddingModel {
        config: config.clone(),
        doc_tags: corpus.iter().map(|d| d.tag.clone()).collect(),
        tag_index,
        doc_vectors: artifacts.doc_vectors,
        word_tokens: vocab.tokens().to_vec(),
        word_vectors: artifacts.word_vectors,
        final_alpha: artifacts.final_alpha,
    })
}

impl EmbeddingModel {
    pub fn config(&self) -> &TrainingConfig {
        &self.config
    }

    pub fn vector_size(&self) -> usize {
        self.config.vector_size
    }

    pub fn num_docs(&self) -> usize {
        self.doc_tags.len()
    }

    pub fn tags(&self) -> &[String] {
        &self.doc_tags
    }

    /// Learning rate after the final update; equals `min_alpha` when the
    /// schedule ran to completion.
    pub fn final_learning_rate(&self) -> f64 {
        self.final_alpha
    }

    /// The stored vector for a trained admission tag.
    pub fn patient_vector(&self, tag: &str) -> Result<&[f64]> {
        let &idx = self.tag_index.get(tag).ok_or_else(|| Error::UnknownTag(tag.to_string()))?;
        Ok(self.doc_row(idx))
    }

    pub fn doc_row(&self, idx: usize) -> &[f64] {
        let dim = self.config.vector_size;
        &self.doc_vectors[idx * dim..(idx + 1) * dim]
    }

    pub fn word_tokens(&self) -> &[String] {
        &self.word_tokens
    }

    pub fn word_row(&self, idx: usize) -> &[f64] {
        let dim = self.config.vector_size;
        &self.word_vectors[idx * dim..(idx + 1) * dim]
    }

    /// Builds a model directly from rows, for fixtures and loading.
    pub fn from_rows(
        config: TrainingConfig,
        tagged_rows: Vec<(String, Vec<f64>)>,
        word_rows: Vec<(String, Vec<f64>)>,
        final_alpha: f64,
    ) -> Result<Self> {
        let dim = config.vector_size;
        let mut doc_tags = Vec::with_capacity(tagged_rows.len());
        let mut doc_vectors = Vec::with_capacity(tagged_rows.len() * dim);
        let mut tag_index = HashMap::new();
        for (tag, row) in tagged_rows {
            if row.len() != dim {
                return Err(Error::MalformedModel(format!(
                    "doc row '{tag}' has {} values, expected {dim}",
                    row.len()
                )));
            }
            if tag_index.insert(tag.clone(), doc_tags.len()).is_some() {
                return Err(Error::MalformedModel(format!("duplicate doc tag '{tag}'")));
            }
            doc_tags.push(tag);
            doc_vectors.extend(row);
        }
        let mut word_tokens = Vec::with_capacity(word_rows.len());
        let mut word_vectors = Vec::with_capacity(word_rows.len() * dim);
        for (token, row) in word_rows {
            if row.len() != dim {
                return Err(Error::MalformedModel(format!(
                    "word row '{token}' has {} values, expected {dim}",
                    row.len()
                )));
            }
            word_tokens.push(token);
            word_vectors.extend(row);
        }
        Ok(EmbeddingModel {
            config,
            doc_tags,
            tag_index,
            doc_vectors,
            word_tokens,
            word_vectors,
            final_alpha,
        })
    }

    /// Serializes the model: a `#config` header line followed by one
    /// `doc|word<TAB>key<TAB>f1 f2 ...` line per vector. Floats use the
    /// shortest representation that parses back to the identical bits.
    pub fn to_text(&self) -> String {
        let header = serde_json::json!({
            "config": &self.config,
            "final_alpha": self.final_alpha,
        });
        let mut out = String::new();
        let _ = writeln!(out, "#config\t{header}");
        let dim = self.config.vector_size;
        for (i, tag) in self.doc_tags.iter().enumerate() {
            let _ = write!(out, "doc\t{tag}\t");
            push_floats(&mut out, &self.doc_vectors[i * dim..(i + 1) * dim]);
        }
        for (i, token) in self.word_tokens.iter().enumerate() {
            let _ = write!(out, "word\t{token}\t");
            push_floats(&mut out, &self.word_vectors[i * dim..(i + 1) * dim]);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .and_then(|l| l.strip_prefix("#config\t"))
            .ok_or_else(|| Error::MalformedModel("missing #config header".into()))?;
        #[derive(Deserialize)]
        struct Header {
            config: TrainingConfig,
            final_alpha: f64,
        }
        let header: Header = serde_json::from_str(header)
            .map_err(|e| Error::MalformedModel(format!("bad header: {e}")))?;
        let mut docs = Vec::new();
        let mut words = Vec::new();
        for (lineno, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let mut parts = line.splitn(3, '\t');
            let (Some(kind), Some(key), Some(values)) =
                (parts.next(), parts.next(), parts.next())
            else {
                return Err(Error::MalformedModel(format!("line {}: want 3 fields", lineno + 2)));
            };
            let row: Vec<f64> = values
                .split(' ')
                .map(|v| {
                    v.parse::<f64>().map_err(|e| {
                        Error::MalformedModel(format!("line {}: {e}", lineno + 2))
                    })
                })
                .collect::<Result<_>>()?;
            match kind {
                "doc" => docs.push((key.to_string(), row)),
                "word" => words.push((key.to_string(), row)),
                other => {
                    return Err(Error::MalformedModel(format!(
                        "line {}: unknown kind '{other}'",
                        lineno + 2
                    )))
                }
            }
        }
        Self::from_rows(header.config, docs, words, header.final_alpha)
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        crate::write_atomic(path, self.to_text().as_bytes())
    }

    pub fn read_from(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

fn push_floats(out: &mut String, values: &[f64]) {
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{v}");
    }
    out.push('\n');
}

/// Cosine similarity; zero vectors compare as 0.
pub fn cosine_similarity(u: &[f64], v: &[f64]) -> f64 {
    assert_eq!(u.len(), v.len(), "cosine of different-length vectors");
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu: f64 = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        0.0
    } else {
        dot / (nu * nv)
    }
}

/// Groups sequence-dump lines into tagged documents. Tags appear in first-seen
/// order; texts are ordered by level.
pub fn corpus_from_sequences(content: &str) -> Result<Vec<TaggedDocument>> {
    let mut order: Vec<String> = Vec::new();
    let mut texts: HashMap<String, Vec<(u8, Vec<String>)>> = HashMap::new();
    for line in content.lines() {
        if line.trim().is_empty() {
            continue;
        }
        let (id, level, tokens) = crate::tree::parse_sequence_line(line)?;
        let entry = texts.entry(id.clone()).or_insert_with(|| {
            order.push(id.clone());
            Vec::new()
        });
        if entry.iter().any(|(l, _)| *l == level) {
            return Err(Error::Malformed(format!("duplicate level {level} for '{id}'")));
        }
        entry.push((level, tokens));
    }
    Ok(order
        .into_iter()
        .map(|tag| {
            let mut levels = texts.remove(&tag).unwrap();
            levels.sort_by_key(|(l, _)| *l);
            TaggedDocument { tag, texts: levels.into_iter().map(|(_, t)| t).collect() }
        })
        .collect())
}
