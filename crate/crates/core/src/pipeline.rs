//! Staged end-to-end orchestration with manifest-based resumability.
//!
//! A run walks six stages: `cohort` (ingest or generate the record set),
//! `extract` (notes to concepts, structured rows to quadruples), `build-seqs`
//! (per-scenario trees and sequence dumps), `train` (per-scenario document
//! embeddings), `eval-sim` (similarity metrics against the diagnosis gold
//! standard), and `predict` (mortality cross-validation). Every stage writes
//! its artifacts under the output directory and records itself in
//! `manifest.json` together with a hash of the configuration; rerunning with
//! an unchanged configuration skips completed stages, while a changed
//! configuration restarts from scratch. Artifacts are written atomically, so
//! an interrupted stage leaves only its "incomplete" marker behind.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::embedding::{corpus_from_sequences, train, EmbeddingModel, TrainingConfig};
use crate::ingest::{
    ingest_records, select_cohort, write_records, InputPaths, ParseReport, RecordSet,
};
use crate::model::{AdmissionRecord, Quadruple, TemporalEventType};
use crate::notes::{
    concepts_to_quadruples, extract_note_mentions, format_mention_line, map_concepts,
    parse_external_mentions, ConceptMention,
};
use crate::predict::{mortality_cv_experiment, LabeledEmbeddingSet};
use crate::resources::{default_code_maps, default_lexicon, default_section_dictionary};
use crate::simeval::{compare_scenarios, CodeLevel, GoldStandard, WeightScheme, DEFAULT_KS};
use crate::synth::{generate_cohort, SynthParams};
use crate::tree::{
    bfs_level_sequences, build_temporal_tree, flat_sequence, flat_sequence_line, parse_sequence_line,
    sequence_lines, Scenario,
};
use crate::{par, write_atomic, Error, Result};

pub const STAGE_ORDER: [&str; 6] =
    ["cohort", "extract", "build-seqs", "train", "eval-sim", "predict"];

const MANIFEST_FILE: &str = "manifest.json";
const QUADRUPLES_FILE: &str = "quadruples.tsv";
const MENTIONS_FILE: &str = "mentions.tsv";

fn default_scenarios() -> Vec<Scenario> {
    Scenario::ALL.to_vec()
}

fn default_interval() -> i64 {
    86_400
}

fn default_ks() -> Vec<usize> {
    DEFAULT_KS.to_vec()
}

fn default_repeats() -> usize {
    5
}

fn default_seed() -> u64 {
    1
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Mirror of the run configuration file. Exactly one of `input` (paths to
/// existing delimited files) and `synthetic` (generator parameters) must be
/// present.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    #[serde(default)]
    pub input: Option<InputPaths>,
    #[serde(default)]
    pub synthetic: Option<SynthParams>,
    #[serde(default = "default_scenarios")]
    pub scenarios: Vec<Scenario>,
    /// Tree interval length in seconds.
    #[serde(default = "default_interval")]
    pub interval_length: i64,
    #[serde(default)]
    pub embedding: TrainingConfig,
    /// Cutoffs for the retrieval metrics.
    #[serde(default = "default_ks")]
    pub ks: Vec<usize>,
    #[serde(default)]
    pub code_level: CodeLevel,
    #[serde(default)]
    pub weight_scheme: WeightScheme,
    #[serde(default = "default_repeats")]
    pub prediction_repeats: usize,
    #[serde(default = "default_seed")]
    pub prediction_seed: u64,
    /// Optional pre-extracted concept mentions in the interchange format,
    /// used in place of the built-in matcher.
    #[serde(default)]
    pub external_mentions: Option<PathBuf>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            input: None,
            synthetic: Some(SynthParams::default()),
            scenarios: default_scenarios(),
            interval_length: default_interval(),
            embedding: TrainingConfig::default(),
            ks: default_ks(),
            code_level: CodeLevel::default(),
            weight_scheme: WeightScheme::default(),
            prediction_repeats: default_repeats(),
            prediction_seed: default_seed(),
            external_mentions: None,
            output_dir: default_output_dir(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_str(content: &str) -> Result<Self> {
        let config: PipelineConfig =
            toml::from_str(content).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&content)
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.input, &self.synthetic) {
            (Some(_), Some(_)) => {
                return Err(Error::InvalidConfig(
                    "input paths and synthetic parameters are mutually exclusive".into(),
                ))
            }
            (None, None) => {
                return Err(Error::InvalidConfig(
                    "either input paths or synthetic parameters must be given".into(),
                ))
            }
            _ => {}
        }
        if let Some(params) = &self.synthetic {
            params.validate()?;
        }
        if self.scenarios.is_empty() {
            return Err(Error::InvalidConfig("scenario list is empty".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for s in &self.scenarios {
            if !seen.insert(*s) {
                return Err(Error::InvalidConfig(format!("scenario {s} listed twice")));
            }
        }
        if self.interval_length < 1 {
            return Err(Error::InvalidConfig(format!(
                "interval_length must be positive, got {}",
                self.interval_length
            )));
        }
        if self.ks.is_empty() {
            return Err(Error::InvalidConfig("k list is empty".into()));
        }
        let mut ks_seen = std::collections::BTreeSet::new();
        for &k in &self.ks {
            if k == 0 {
                return Err(Error::InvalidConfig("k must be positive".into()));
            }
            if !ks_seen.insert(k) {
                return Err(Error::InvalidConfig(format!("k {k} listed twice")));
            }
        }
        if self.prediction_repeats == 0 {
            return Err(Error::InvalidConfig("prediction_repeats must be positive".into()));
        }
        self.embedding.validate()?;
        Ok(())
    }

    /// Hash of the canonical JSON serialization; manifest entries made under
    /// a different configuration are never reused.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&json);
        let mut hex = String::with_capacity(64);
        for byte in digest {
            hex.push_str(&format!("{byte:02x}"));
        }
        hex
    }

    fn cohort_dir(&self) -> PathBuf {
        self.output_dir.join("cohort")
    }

    fn extract_dir(&self) -> PathBuf {
        self.output_dir.join("extract")
    }

    fn seqs_dir(&self) -> PathBuf {
        self.output_dir.join("seqs")
    }

    fn models_dir(&self) -> PathBuf {
        self.output_dir.join("models")
    }

    fn metrics_dir(&self) -> PathBuf {
        self.output_dir.join("metrics")
    }

    pub fn sequence_file(&self, scenario: Scenario) -> PathBuf {
        self.seqs_dir().join(format!("{}.txt", scenario.as_str()))
    }

    pub fn model_file(&self, scenario: Scenario) -> PathBuf {
        self.models_dir().join(format!("{}.txt", scenario.as_str()))
    }

    pub fn similarity_report_file(&self) -> PathBuf {
        self.metrics_dir().join("similarity.tsv")
    }

    pub fn prediction_report_file(&self) -> PathBuf {
        self.metrics_dir().join("prediction.tsv")
    }
}

const STATUS_COMPLETE: &str = "complete";
const STATUS_INCOMPLETE: &str = "incomplete";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageEntry {
    pub status: String,
    pub seconds: f64,
}

/// On-disk run state: which stages finished under which configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub stages: BTreeMap<String, StageEntry>,
}

impl Manifest {
    fn fresh(hash: String) -> Self {
        Manifest { config_hash: hash, stages: BTreeMap::new() }
    }

    fn path(output_dir: &Path) -> PathBuf {
        output_dir.join(MANIFEST_FILE)
    }

    /// Loads the manifest when it exists and matches `hash`; anything else
    /// (absent, unreadable, stale hash) starts a fresh run state.
    pub fn load_or_fresh(output_dir: &Path, hash: &str) -> Self {
        let path = Self::path(output_dir);
        let Ok(content) = std::fs::read_to_string(&path) else {
            return Manifest::fresh(hash.to_string());
        };
        match serde_json::from_str::<Manifest>(&content) {
            Ok(manifest) if manifest.config_hash == hash => manifest,
            Ok(_) => {
                log::info!("configuration changed; restarting all stages");
                Manifest::fresh(hash.to_string())
            }
            Err(e) => {
                log::warn!("unreadable manifest {}: {e}; restarting", path.display());
                Manifest::fresh(hash.to_string())
            }
        }
    }

    fn write(&self, output_dir: &Path) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("manifest serializes");
        bytes.push(b'\n');
        write_atomic(&Self::path(output_dir), &bytes)
    }

    pub fn is_complete(&self, stage: &str) -> bool {
        self.stages.get(stage).is_some_and(|e| e.status == STATUS_COMPLETE)
    }
}

/// Runs every stage in order, skipping the ones the manifest already marks
/// complete for this configuration.
pub fn run_pipeline(config: &PipelineConfig) -> Result<Manifest> {
    config.validate()?;
    let hash = config.hash();
    let mut manifest = Manifest::load_or_fresh(&config.output_dir, &hash);
    for stage in STAGE_ORDER {
        if manifest.is_complete(stage) {
            log::info!("stage {stage}: up to date, skipped");
            continue;
        }
        execute_stage(config, stage, &mut manifest)?;
    }
    Ok(manifest)
}

/// Runs one stage unconditionally, assuming earlier artifacts exist.
pub fn run_stage(config: &PipelineConfig, stage: &str) -> Result<Manifest> {
    config.validate()?;
    let hash = config.hash();
    let mut manifest = Manifest::load_or_fresh(&config.output_dir, &hash);
    execute_stage(config, stage, &mut manifest)?;
    Ok(manifest)
}

fn execute_stage(config: &PipelineConfig, stage: &str, manifest: &mut Manifest) -> Result<()> {
    let run = match stage {
        "cohort" => stage_cohort,
        "extract" => stage_extract,
        "build-seqs" => stage_build_seqs,
        "train" => stage_train,
        "eval-sim" => stage_eval_sim,
        "predict" => stage_predict,
        other => return Err(Error::InvalidConfig(format!("unknown stage '{other}'"))),
    };
    manifest
        .stages
        .insert(stage.to_string(), StageEntry { status: STATUS_INCOMPLETE.into(), seconds: 0.0 });
    manifest.write(&config.output_dir)?;
    let started = Instant::now();
    run(config).map_err(Error::stage(stage_name(stage)))?;
    let seconds = (started.elapsed().as_secs_f64() * 1000.0).round() / 1000.0;
    manifest
        .stages
        .insert(stage.to_string(), StageEntry { status: STATUS_COMPLETE.into(), seconds });
    manifest.write(&config.output_dir)?;
    log::info!("stage {stage}: done in {seconds:.3}s");
    Ok(())
}

fn stage_name(stage: &str) -> &'static str {
    STAGE_ORDER.iter().find(|s| **s == stage).copied().unwrap_or("unknown")
}

/// Reads the cohort CSVs written by the `cohort` stage.
fn read_cohort(config: &PipelineConfig, stage: &'static str) -> Result<RecordSet> {
    let paths = InputPaths::in_dir(&config.cohort_dir());
    if !paths.admissions.exists() {
        return Err(Error::MissingArtifact { stage, path: paths.admissions });
    }
    let maps = default_code_maps()?;
    let (set, report) = ingest_records(&paths, &maps)?;
    for issue in &report.issues {
        log::warn!("cohort artifact {}: row {}: {}", issue.file.display(), issue.row, issue.message);
    }
    Ok(set)
}

fn write_parse_report(dir: &Path, report: &ParseReport) -> Result<()> {
    let mut out = String::from("file\trow\tmessage\n");
    for issue in &report.issues {
        out.push_str(&format!("{}\t{}\t{}\n", issue.file.display(), issue.row, issue.message));
    }
    write_atomic(&dir.join("parse_report.tsv"), out.as_bytes())
}

/// Ingests or generates the record set, applies cohort selection, and writes
/// the canonical cohort CSVs.
fn stage_cohort(config: &PipelineConfig) -> Result<()> {
    let dir = config.cohort_dir();
    let (set, report) = match (&config.input, &config.synthetic) {
        (Some(paths), None) => {
            let maps = default_code_maps()?;
            ingest_records(paths, &maps)?
        }
        (None, Some(params)) => (generate_cohort(params)?, ParseReport::default()),
        _ => return Err(Error::InvalidConfig("exactly one cohort source required".into())),
    };
    let selected = select_cohort(&set);
    log::info!(
        "cohort: {} of {} admissions kept, {} rows skipped",
        selected.admissions.len(),
        set.admissions.len(),
        report.issues.len()
    );
    write_records(&dir, &selected)?;
    write_parse_report(&dir, &report)
}

fn quadruple_line(admission_id: &str, q: &Quadruple) -> String {
    format!("{admission_id}\t{}\t{}\t{}\t{}", q.time, q.event_type.as_str(), q.event, q.value)
}

fn parse_quadruple_line(line: &str) -> Result<(String, Quadruple)> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 5 {
        return Err(Error::Malformed(format!("expected 5 quadruple fields, got: '{line}'")));
    }
    let time = fields[1]
        .parse::<i64>()
        .map_err(|_| Error::Malformed(format!("bad quadruple time '{}'", fields[1])))?;
    let event_type = TemporalEventType::parse(fields[2])?;
    let quadruple = Quadruple::new(time, event_type, fields[3], fields[4])?;
    Ok((fields[0].to_string(), quadruple))
}

/// Reads the quadruple dump grouped per admission, preserving file order.
pub fn read_quadruples(path: &Path) -> Result<BTreeMap<String, Vec<Quadruple>>> {
    let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut by_admission: BTreeMap<String, Vec<Quadruple>> = BTreeMap::new();
    for line in content.lines().filter(|l| !l.trim().is_empty()) {
        let (admission, quadruple) = parse_quadruple_line(line)?;
        by_admission.entry(admission).or_default().push(quadruple);
    }
    Ok(by_admission)
}

/// Converts notes to concept quadruples (built-in matcher or imported
/// mentions) and merges them with the structured-event quadruples.
fn stage_extract(config: &PipelineConfig) -> Result<()> {
    let set = read_cohort(config, "extract")?;
    let dir = config.extract_dir();
    let maps = default_code_maps()?;

    let mentions_by_admission: BTreeMap<String, Vec<ConceptMention>> =
        if let Some(path) = &config.external_mentions {
            let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let (by_admission, issues) = parse_external_mentions(&content, &set.notes);
            for issue in &issues {
                log::warn!("external mentions line {}: {}", issue.line, issue.message);
            }
            write_atomic(&dir.join(MENTIONS_FILE), content.as_bytes())?;
            by_admission
        } else {
            let lexicon = default_lexicon()?;
            let dict = default_section_dictionary()?;
            let per_note = par::try_map_vec(&set.notes, |note| {
                extract_note_mentions(note, &dict, &lexicon)
            })?;
            let mut dump = String::new();
            let mut by_admission: BTreeMap<String, Vec<ConceptMention>> = BTreeMap::new();
            for (note, mentions) in set.notes.iter().zip(per_note) {
                for m in &mentions {
                    dump.push_str(&format_mention_line(&note.note_id, m));
                    dump.push('\n');
                }
                by_admission.entry(note.admission_id.clone()).or_default().extend(mentions);
            }
            write_atomic(&dir.join(MENTIONS_FILE), dump.as_bytes())?;
            by_admission
        };

    let mut dump = String::new();
    for admission in &set.admissions {
        let (labs, prescriptions, _) = set.events_of(&admission.admission_id);
        let labs: Vec<_> = labs.into_iter().cloned().collect();
        let prescriptions: Vec<_> = prescriptions.into_iter().cloned().collect();
        let mut quadruples = crate::model::structured_to_quadruples(&labs, &prescriptions)?;
        if let Some(mentions) = mentions_by_admission.get(&admission.admission_id) {
            let kept: Vec<ConceptMention> =
                mentions.iter().filter(|m| !m.negated).cloned().collect();
            let concepts = map_concepts(&kept, &maps);
            quadruples.extend(concepts_to_quadruples(&concepts)?);
        }
        quadruples.sort_by(|a, b| {
            (a.time, a.event_type.as_str(), &a.event, &a.value).cmp(&(
                b.time,
                b.event_type.as_str(),
                &b.event,
                &b.value,
            ))
        });
        for q in &quadruples {
            dump.push_str(&quadruple_line(&admission.admission_id, q));
            dump.push('\n');
        }
    }
    write_atomic(&dir.join(QUADRUPLES_FILE), dump.as_bytes())
}

/// Builds the per-scenario sequence dumps: BFS level sequences from the
/// temporal tree for the tree scenarios, flat event bags for scenario S.
fn stage_build_seqs(config: &PipelineConfig) -> Result<()> {
    let set = read_cohort(config, "build-seqs")?;
    let quadruples_path = config.extract_dir().join(QUADRUPLES_FILE);
    if !quadruples_path.exists() {
        return Err(Error::MissingArtifact { stage: "build-seqs", path: quadruples_path });
    }
    let by_admission = read_quadruples(&quadruples_path)?;
    let empty: Vec<Quadruple> = Vec::new();

    for &scenario in &config.scenarios {
        let per_admission = par::try_map_vec(&set.admissions, |admission| {
            let demographics = admission.demographics()?;
            let quadruples = by_admission.get(&admission.admission_id).unwrap_or(&empty);
            if scenario == Scenario::S {
                let tokens = flat_sequence(quadruples, &demographics);
                Ok(flat_sequence_line(&admission.admission_id, &tokens))
            } else {
                let tree = build_temporal_tree(
                    quadruples,
                    &demographics,
                    scenario,
                    config.interval_length,
                    admission.admit_time,
                )?;
                let seqs = bfs_level_sequences(&tree);
                Ok(sequence_lines(&admission.admission_id, &seqs).join("\n"))
            }
        })?;
        let mut content = per_admission.join("\n");
        content.push('\n');
        write_atomic(&config.sequence_file(scenario), content.as_bytes())?;
    }
    Ok(())
}

/// Trains one document-embedding model per scenario from its sequence dump.
fn stage_train(config: &PipelineConfig) -> Result<()> {
    for &scenario in &config.scenarios {
        let path = config.sequence_file(scenario);
        if !path.exists() {
            return Err(Error::MissingArtifact { stage: "train", path });
        }
        let content = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let corpus = corpus_from_sequences(&content)?;
        let model = train(&corpus, &config.embedding)?;
        model.write_to(&config.model_file(scenario))?;
        log::info!(
            "train {}: {} documents, {} word types",
            scenario,
            model.num_docs(),
            model.word_tokens().len()
        );
    }
    Ok(())
}

fn load_models(config: &PipelineConfig, stage: &'static str) -> Result<BTreeMap<Scenario, EmbeddingModel>> {
    let mut models = BTreeMap::new();
    for &scenario in &config.scenarios {
        let path = config.model_file(scenario);
        if !path.exists() {
            return Err(Error::MissingArtifact { stage, path });
        }
        models.insert(scenario, EmbeddingModel::read_from(&path)?);
    }
    Ok(models)
}

fn diagnosis_map(admissions: &[AdmissionRecord]) -> BTreeMap<String, Vec<crate::model::DiagnosisEntry>> {
    admissions.iter().map(|a| (a.admission_id.clone(), a.diagnoses.clone())).collect()
}

/// Scores every scenario's embedding against the diagnosis gold standard.
fn stage_eval_sim(config: &PipelineConfig) -> Result<()> {
    let set = read_cohort(config, "eval-sim")?;
    let models = load_models(config, "eval-sim")?;
    let gold =
        GoldStandard::build(&diagnosis_map(&set.admissions), config.code_level, config.weight_scheme)?;
    let report = compare_scenarios(&models, &gold, &config.ks)?;
    write_atomic(&config.similarity_report_file(), report.to_tsv().as_bytes())?;
    write_atomic(
        &config.metrics_dir().join("similarity_summary.txt"),
        report.summary().as_bytes(),
    )
}

/// Runs the mortality cross-validation on every scenario's document vectors.
fn stage_predict(config: &PipelineConfig) -> Result<()> {
    let set = read_cohort(config, "predict")?;
    let models = load_models(config, "predict")?;
    let labels: BTreeMap<&str, bool> =
        set.admissions.iter().map(|a| (a.admission_id.as_str(), a.mortality_label)).collect();
    let mut out = String::from("scenario\tf1_micro_mean\tf1_micro_std\troc_auc_mean\troc_auc_std\n");
    for (scenario, model) in &models {
        let mut rows = Vec::with_capacity(model.num_docs());
        for (idx, tag) in model.tags().iter().enumerate() {
            let Some(&label) = labels.get(tag.as_str()) else {
                return Err(Error::MismatchedAdmissions(format!(
                    "no mortality label for '{tag}'"
                )));
            };
            rows.push((tag.clone(), model.doc_row(idx).to_vec(), label));
        }
        let data = LabeledEmbeddingSet::new(rows)?;
        let report = mortality_cv_experiment(&data, config.prediction_repeats, config.prediction_seed)?;
        out.push_str(&report.tsv_row(scenario.as_str()));
        out.push('\n');
    }
    write_atomic(&config.prediction_report_file(), out.as_bytes())
}

/// Parses a sequence dump back into `(admission, level, tokens)` rows;
/// kept close to the pipeline because stages exchange files, not memory.
pub fn read_sequence_dump(path: &Path) -> Result<Vec<(String, u8, Vec<String>)>> {
    let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    content.lines().filter(|l| !l.trim().is_empty()).map(parse_sequence_line).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config(dir: &Path) -> PipelineConfig {
        PipelineConfig {
            synthetic: Some(SynthParams {
                num_patients: 60,
                num_diseases: 6,
                ..SynthParams::default()
            }),
            embedding: TrainingConfig {
                vector_size: 16,
                epochs: 2,
                min_count: 1,
                ..TrainingConfig::default()
            },
            ks: vec![1, 5],
            output_dir: dir.to_path_buf(),
            ..PipelineConfig::default()
        }
    }

    #[test]
    fn toml_round_trip_and_defaults() {
        let text = r#"
            [synthetic]
            num_patients = 40
            seed = 7

            [embedding]
            vector_size = 32
        "#;
        let config = PipelineConfig::from_toml_str(text).unwrap();
        assert_eq!(config.synthetic.as_ref().unwrap().num_patients, 40);
        assert_eq!(config.synthetic.as_ref().unwrap().seed, 7);
        assert_eq!(config.embedding.vector_size, 32);
        assert_eq!(config.scenarios, Scenario::ALL.to_vec());
        assert_eq!(config.ks, vec![1, 5, 10, 20]);
        assert_eq!(config.interval_length, 86_400);
        assert_eq!(config.output_dir, PathBuf::from("out"));
    }

    #[test]
    fn scenario_names_parse_in_uppercase() {
        let text = r#"
            scenarios = ["S", "SUTTR"]
            [synthetic]
        "#;
        let config = PipelineConfig::from_toml_str(text).unwrap();
        assert_eq!(config.scenarios, vec![Scenario::S, Scenario::Suttr]);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let both = r#"
            [input]
            admissions = "a.csv"
            diagnoses = "d.csv"
            labevents = "l.csv"
            prescriptions = "p.csv"
            noteevents = "n.csv"
            [synthetic]
        "#;
        assert!(matches!(PipelineConfig::from_toml_str(both), Err(Error::InvalidConfig(_))));
        assert!(matches!(PipelineConfig::from_toml_str(""), Err(Error::InvalidConfig(_))));
        let dup = r#"
            scenarios = ["S", "S"]
            [synthetic]
        "#;
        assert!(matches!(PipelineConfig::from_toml_str(dup), Err(Error::InvalidConfig(_))));
        let bad_k = r#"
            ks = [0]
            [synthetic]
        "#;
        assert!(matches!(PipelineConfig::from_toml_str(bad_k), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn hash_tracks_config_changes() {
        let dir = tempfile::tempdir().unwrap();
        let a = tiny_config(dir.path());
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.interval_length = 3600;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn quadruple_lines_round_trip() {
        let q = Quadruple::new(42, TemporalEventType::Retrospective, "Disease", "Sepsis").unwrap();
        let line = quadruple_line("A00001", &q);
        let (admission, parsed) = parse_quadruple_line(&line).unwrap();
        assert_eq!(admission, "A00001");
        assert_eq!(parsed, q);
        assert!(parse_quadruple_line("A00001\tnot-a-time\tShortTerm\tx\ty").is_err());
        assert!(parse_quadruple_line("too\tfew").is_err());
    }

    #[test]
    fn full_run_produces_all_artifacts_and_resumes() {
        let dir = tempfile::tempdir().unwrap();
        let config = tiny_config(dir.path());
        let manifest = run_pipeline(&config).unwrap();
        for stage in STAGE_ORDER {
            assert!(manifest.is_complete(stage), "stage {stage} not complete");
        }
        for scenario in Scenario::ALL {
            assert!(config.sequence_file(scenario).exists());
            assert!(config.model_file(scenario).exists());
        }
        let sim = std::fs::read_to_string(config.similarity_report_file()).unwrap();
        let rows = sim.lines().count() - 1;
        assert_eq!(rows, 4 * 3 * 2, "4 scenarios x 3 metrics x 2 ks");
        let pred = std::fs::read_to_string(config.prediction_report_file()).unwrap();
        assert_eq!(pred.lines().count(), 5, "header + 4 scenario rows");

        let before = std::fs::metadata(config.similarity_report_file()).unwrap().modified().unwrap();
        let again = run_pipeline(&config).unwrap();
        for stage in STAGE_ORDER {
            assert!(again.is_complete(stage));
        }
        let after = std::fs::metadata(config.similarity_report_file()).unwrap().modified().unwrap();
        assert_eq!(before, after, "completed stage reran instead of skipping");
    }

    #[test]
    fn changed_config_restarts_stages() {
        let dir = tempfile::tempdir().unwrap();
        let config = tiny_config(dir.path());
        run_pipeline(&config).unwrap();
        let mut changed = config.clone();
        changed.ks = vec![1, 3];
        let manifest = Manifest::load_or_fresh(&changed.output_dir, &changed.hash());
        assert!(manifest.stages.is_empty(), "stale manifest must not carry over");
    }

    #[test]
    fn scenario_s_only_produces_flat_sequences_only() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = tiny_config(dir.path());
        config.scenarios = vec![Scenario::S];
        run_pipeline(&config).unwrap();
        assert!(config.sequence_file(Scenario::S).exists());
        assert!(!config.sequence_file(Scenario::Suttr).exists());
        let rows = read_sequence_dump(&config.sequence_file(Scenario::S)).unwrap();
        assert!(rows.iter().all(|(_, level, _)| *level == 1));
    }

    #[test]
    fn single_stage_requires_prior_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let config = tiny_config(dir.path());
        let err = run_stage(&config, "build-seqs").unwrap_err();
        match err {
            Error::Stage { stage, source } => {
                assert_eq!(stage, "build-seqs");
                assert!(matches!(*source, Error::MissingArtifact { .. }));
            }
            other => panic!("expected stage error, got {other:?}"),
        }
    }

    #[test]
    fn interrupted_stage_leaves_incomplete_marker() {
        let dir = tempfile::tempdir().unwrap();
        let config = tiny_config(dir.path());
        assert!(run_stage(&config, "train").is_err());
        let manifest = Manifest::load_or_fresh(&config.output_dir, &config.hash());
        let entry = manifest.stages.get("train").unwrap();
        assert_eq!(entry.status, STATUS_INCOMPLETE);
    }
}
