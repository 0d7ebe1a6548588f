//! Temporal-tree construction and BFS level sequences.
//!
//! A tree has a root, one subtree per populated time interval, up to three
//! branches per interval (retrospective, persistent, real-time, in that
//! order), event-value pair nodes under each branch, and two leaves per pair.
//! Which quadruples land where depends on the representation scenario.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::model::{Demographics, Quadruple, TemporalEventType, Timestamp};
use crate::{Error, Result};

/// Default interval length: one day in seconds.
pub const DEFAULT_INTERVAL_SECS: i64 = 86_400;

/// The four patient-representation scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Scenario {
    /// Structured data only, flat sequence, no tree.
    S,
    /// Structured data arranged in the temporal tree.
    Stt,
    /// Structured + note concepts, notes shown once in the first interval.
    Sutt,
    /// Structured + note concepts re-injected into every applicable interval.
    Suttr,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [Scenario::S, Scenario::Stt, Scenario::Sutt, Scenario::Suttr];

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::S => "S",
            Scenario::Stt => "STT",
            Scenario::Sutt => "SUTT",
            Scenario::Suttr => "SUTTR",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "S" => Ok(Scenario::S),
            "STT" => Ok(Scenario::Stt),
            "SUTT" => Ok(Scenario::Sutt),
            "SUTTR" => Ok(Scenario::Suttr),
            other => Err(Error::Malformed(format!("unknown scenario '{other}'"))),
        }
    }
}

/// Branch kinds in their fixed left-to-right order within an interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum BranchKind {
    Retrospective,
    Persistent,
    RealTime,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairNode {
    pub event: String,
    pub value: String,
    /// Non-leaf label: concatenation of the two leaf tokens.
    pub label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchNode {
    pub kind: BranchKind,
    pub pairs: Vec<PairNode>,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalNode {
    pub index: i64,
    pub branches: Vec<BranchNode>,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemporalTree {
    pub intervals: Vec<IntervalNode>,
    pub root_label: String,
}

/// BFS level sequences of a tree; `seq1` is the leaf level.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LevelSequences {
    pub seq1: Vec<String>,
    pub seq2: Vec<String>,
    pub seq3: Vec<String>,
    pub seq4: Vec<String>,
}

impl LevelSequences {
    pub fn levels(&self) -> [&Vec<String>; 4] {
        [&self.seq1, &self.seq2, &self.seq3, &self.seq4]
    }
}

/// Sort key of a pair within a branch: first detection time, then tokens.
type PairKey = (Timestamp, String, String);

/// Detection time placed before any real timestamp so the demographic pair
/// sorts first in every persistent branch.
const DEMOGRAPHIC_TIME: Timestamp = Timestamp::MIN;

fn interval_index(time: Timestamp, admit_time: Timestamp, interval_length: i64) -> i64 {
    (time - admit_time).div_euclid(interval_length)
}

/// Deduplicated pair set ordered by (first detection, event, value).
#[derive(Default)]
struct PairSet {
    pairs: BTreeMap<(String, String), Timestamp>,
}

impl PairSet {
    fn insert(&mut self, event: &str, value: &str, time: Timestamp) {
        let key = (event.to_string(), value.to_string());
        match self.pairs.get_mut(&key) {
            Some(existing) => *existing = (*existing).min(time),
            None => {
                self.pairs.insert(key, time);
            }
        }
    }

    fn sorted(&self) -> Vec<PairKey> {
        let mut out: Vec<PairKey> = self
            .pairs
            .iter()
            .map(|((e, v), &t)| (t, e.clone(), v.clone()))
            .collect();
        out.sort();
        out
    }
}

/// Builds the per-admission temporal tree for a non-flat scenario.
///
/// Interval index = floor((time − admit_time) / interval_length). An interval
/// exists iff a ShortTerm quadruple or a newly detected LongLasting quadruple
/// (under a scenario that keeps notes) falls into it; the demographic pair
/// goes into the persistent branch of every existing interval. Quadruples
/// before admission that are not Retrospective clamp to the admission start
/// with a warning.
pub fn build_temporal_tree(
    quadruples: &[Quadruple],
    demographics: &Demographics,
    scenario: Scenario,
    interval_length: i64,
    admit_time: Timestamp,
) -> Result<TemporalTree> {
    if scenario == Scenario::S {
        return Err(Error::FlatScenario);
    }
    if interval_length <= 0 {
        return Err(Error::InvalidIntervalLength(interval_length));
    }

    let keep_notes = matches!(scenario, Scenario::Sutt | Scenario::Suttr);

    let mut retro = PairSet::default();
    // LongLasting pairs keyed like PairSet but tracking the detection interval.
    let mut long_lasting: BTreeMap<(String, String), (Timestamp, i64)> = BTreeMap::new();
    let mut short_term: BTreeMap<i64, PairSet> = BTreeMap::new();

    for q in quadruples {
        match q.event_type {
            TemporalEventType::Retrospective => {
                if keep_notes {
                    retro.insert(&q.event, &q.value, q.time);
                }
            }
            TemporalEventType::LongLasting => {
                if keep_notes {
                    let time = clamp_to_admission(q, admit_time);
                    let interval = interval_index(time, admit_time, interval_length);
                    let key = (q.event.clone(), q.value.clone());
                    match long_lasting.get_mut(&key) {
                        Some(existing) => *existing = (*existing).min((time, interval)),
                        None => {
                            long_lasting.insert(key, (time, interval));
                        }
                    }
                }
            }
            TemporalEventType::ShortTerm => {
                let time = clamp_to_admission(q, admit_time);
                let interval = interval_index(time, admit_time, interval_length);
                short_term.entry(interval).or_default().insert(&q.event, &q.value, time);
            }
        }
    }

    // Populated intervals: ShortTerm occurrences plus LongLasting detections.
    let mut interval_indices: Vec<i64> = short_term.keys().copied().collect();
    for &(_, interval) in long_lasting.values() {
        interval_indices.push(interval);
    }
    interval_indices.sort_unstable();
    interval_indices.dedup();

    let first_interval = interval_indices.first().copied();
    let retro_pairs = retro.sorted();

    let mut intervals = Vec::with_capacity(interval_indices.len());
    for &idx in &interval_indices {
        let mut branches = Vec::new();

        let show_retro = match scenario {
            Scenario::Suttr => true,
            Scenario::Sutt => Some(idx) == first_interval,
            _ => false,
        };
        if show_retro && !retro_pairs.is_empty() {
            branches.push(make_branch(BranchKind::Retrospective, retro_pairs.clone()));
        }

        let mut persistent = vec![(
            DEMOGRAPHIC_TIME,
            demographics.gender.token().to_string(),
            demographics.age_bin.clone(),
        )];
        for ((event, value), &(time, detected)) in &long_lasting {
            let show = match scenario {
                Scenario::Suttr => detected <= idx,
                Scenario::Sutt => Some(idx) == first_interval,
                _ => false,
            };
            if show {
                persistent.push((time, event.clone(), value.clone()));
            }
        }
        persistent.sort();
        branches.push(make_branch(BranchKind::Persistent, persistent));

        if let Some(set) = short_term.get(&idx) {
            let pairs = set.sorted();
            if !pairs.is_empty() {
                branches.push(make_branch(BranchKind::RealTime, pairs));
            }
        }

        let label = branches.iter().map(|b| b.label.as_str()).collect();
        intervals.push(IntervalNode { index: idx, branches, label });
    }

    let root_label = intervals.iter().map(|i| i.label.as_str()).collect();
    Ok(TemporalTree { intervals, root_label })
}

fn clamp_to_admission(q: &Quadruple, admit_time: Timestamp) -> Timestamp {
    if q.time < admit_time {
        log::warn!(
            "{} quadruple {} at {} precedes admission; clamping to interval 0",
            q.event_type.as_str(),
            q.pair_label(),
            q.time
        );
        admit_time
    } else {
        q.time
    }
}

fn make_branch(kind: BranchKind, pairs: Vec<PairKey>) -> BranchNode {
    let pairs: Vec<PairNode> = pairs
        .into_iter()
        .map(|(_, event, value)| {
            let label = format!("{event}{value}");
            PairNode { event, value, label }
        })
        .collect();
    let label = pairs.iter().map(|p| p.label.as_str()).collect();
    BranchNode { kind, pairs, label }
}

/// Level-order node labels, leaf level first. The root label is excluded.
pub fn bfs_level_sequences(tree: &TemporalTree) -> LevelSequences {
    let mut seqs = LevelSequences::default();
    for interval in &tree.intervals {
        seqs.seq4.push(interval.label.clone());
        for branch in &interval.branches {
            seqs.seq3.push(branch.label.clone());
            for pair in &branch.pairs {
                seqs.seq2.push(pair.label.clone());
                seqs.seq1.push(pair.event.clone());
                seqs.seq1.push(pair.value.clone());
            }
        }
    }
    seqs
}

/// Flat scenario-S token list: the demographic token followed by the
/// chronologically ordered ShortTerm pair labels.
pub fn flat_sequence(quadruples: &[Quadruple], demographics: &Demographics) -> Vec<String> {
    let mut events: Vec<&Quadruple> = quadruples
        .iter()
        .filter(|q| q.event_type == TemporalEventType::ShortTerm)
        .collect();
    events.sort_by(|a, b| (a.time, &a.event, &a.value).cmp(&(b.time, &b.event, &b.value)));
    let mut out = Vec::with_capacity(events.len() + 1);
    out.push(demographics.token());
    out.extend(events.iter().map(|q| q.pair_label()));
    out
}

/// Renders the four level sequences in the dump format, one line per level:
/// `admission_id<TAB>levelN<TAB>token token ...`.
pub fn sequence_lines(admission_id: &str, seqs: &LevelSequences) -> Vec<String> {
    seqs.levels()
        .iter()
        .enumerate()
        .map(|(i, tokens)| format!("{}\tlevel{}\t{}", admission_id, i + 1, tokens.join(" ")))
        .collect()
}

/// Renders a flat scenario-S sequence as a single level-1 line.
pub fn flat_sequence_line(admission_id: &str, tokens: &[String]) -> String {
    format!("{}\tlevel1\t{}", admission_id, tokens.join(" "))
}

/// Parses one dump line back into (admission_id, level, tokens).
pub fn parse_sequence_line(line: &str) -> Result<(String, u8, Vec<String>)> {
    let mut parts = line.splitn(3, '\t');
    let (Some(id), Some(level), Some(tokens)) = (parts.next(), parts.next(), parts.next()) else {
        return Err(Error::Malformed(format!("sequence line needs 3 fields: '{line}'")));
    };
    let level: u8 = level
        .strip_prefix("level")
        .and_then(|n| n.parse().ok())
        .filter(|n| (1..=4).contains(n))
        .ok_or_else(|| Error::Malformed(format!("bad level field in '{line}'")))?;
    let tokens = tokens.split_whitespace().map(str::to_string).collect();
    Ok((id.to_string(), level, tokens))
}
