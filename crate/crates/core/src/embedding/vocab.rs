//! Vocabulary construction, subsampling probabilities, and the noise table.

use std::collections::HashMap;

use rand::Rng;

use super::TaggedDocument;
use crate::{Error, Result};

/// Exponent applied to unigram counts for the negative-sampling noise
/// distribution.
const NOISE_POWER: f64 = 0.75;

#[derive(Debug, Clone)]
pub struct Vocabulary {
    tokens: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, usize>,
    /// Total count over retained tokens.
    total: u64,
    keep_prob: Vec<f64>,
}

impl Vocabulary {
    /// Counts tokens across all texts, drops those under `min_count`, and
    /// precomputes subsampling keep probabilities
    /// `min(1, sqrt(t/f) + t/f)` with `f` the token's frequency fraction.
    /// A non-positive threshold disables subsampling.
    pub fn build(
        corpus: &[TaggedDocument],
        min_count: u64,
        sample_threshold: f64,
    ) -> Result<Self> {
        let mut counts: HashMap<&str, u64> = HashMap::new();
        for doc in corpus {
            for text in &doc.texts {
                for token in text {
                    *counts.entry(token.as_str()).or_insert(0) += 1;
                }
            }
        }
        let mut retained: Vec<(&str, u64)> =
            counts.into_iter().filter(|&(_, c)| c >= min_count.max(1)).collect();
        if retained.is_empty() {
            return Err(Error::EmptyVocabulary);
        }
        // Deterministic dense indices: most frequent first, ties by token.
        retained.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));

        let total: u64 = retained.iter().map(|&(_, c)| c).sum();
        let tokens: Vec<String> = retained.iter().map(|&(t, _)| t.to_string()).collect();
        let counts: Vec<u64> = retained.iter().map(|&(_, c)| c).collect();
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        let keep_prob = counts
            .iter()
            .map(|&c| {
                if sample_threshold <= 0.0 {
                    return 1.0;
                }
                let f = c as f64 / total as f64;
                ((sample_threshold / f).sqrt() + sample_threshold / f).min(1.0)
            })
            .collect();
        Ok(Vocabulary { tokens, counts, index, total, keep_prob })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, idx: usize) -> &str {
        &self.tokens[idx]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn count(&self, idx: usize) -> u64 {
        self.counts[idx]
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn keep_probability(&self, idx: usize) -> f64 {
        self.keep_prob[idx]
    }

    pub fn noise_table(&self) -> NoiseTable {
        let mut cumulative = Vec::with_capacity(self.counts.len());
        let mut acc = 0.0;
        for &c in &self.counts {
            acc += (c as f64).powf(NOISE_POWER);
            cumulative.push(acc);
        }
        NoiseTable { cumulative }
    }
}

/// Cumulative unigram^0.75 distribution for drawing negative samples.
#[derive(Debug, Clone)]
pub struct NoiseTable {
    cumulative: Vec<f64>,
}

impl NoiseTable {
    pub fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        let max = *self.cumulative.last().expect("noise table is never empty");
        let r = rng.gen::<f64>() * max;
        self.cumulative.partition_point(|&c| c <= r).min(self.cumulative.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.cumulative.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cumulative.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn doc(tokens: &[&str]) -> TaggedDocument {
        TaggedDocument {
            tag: "T".into(),
            texts: vec![tokens.iter().map(|s| s.to_string()).collect()],
        }
    }

    #[test]
    fn min_count_filters_and_indices_are_dense() {
        let corpus = vec![doc(&["a"; 10]), doc(&["b"; 10]), doc(&["c"; 10]), doc(&["rare"; 4])];
        let vocab = Vocabulary::build(&corpus, 5, 1e-5).unwrap();
        assert_eq!(vocab.len(), 3);
        assert!(vocab.get("rare").is_none());
        let mut indices: Vec<usize> =
            ["a", "b", "c"].iter().map(|t| vocab.get(t).unwrap()).collect();
        indices.sort_unstable();
        assert_eq!(indices, vec![0, 1, 2]);
        assert_eq!(vocab.total(), 30);
    }

    #[test]
    fn at_threshold_token_is_included() {
        let corpus = vec![doc(&["x"; 5]), doc(&["y"; 4])];
        let vocab = Vocabulary::build(&corpus, 5, 1e-5).unwrap();
        assert_eq!(vocab.len(), 1);
        assert_eq!(vocab.get("x"), Some(0));
        assert_eq!(vocab.count(0), 5);
    }

    #[test]
    fn empty_vocabulary_is_an_error() {
        let corpus = vec![doc(&["once"])];
        assert!(matches!(Vocabulary::build(&corpus, 5, 1e-5), Err(Error::EmptyVocabulary)));
    }

    #[test]
    fn keep_probability_matches_formula() {
        let corpus = vec![doc(&["common"; 990]), doc(&["rare"; 10])];
        let t = 0.01;
        let vocab = Vocabulary::build(&corpus, 1, t).unwrap();
        let idx = vocab.get("common").unwrap();
        let f = 0.99;
        let expected = (t / f).sqrt() + t / f;
        assert!((vocab.keep_probability(idx) - expected).abs() < 1e-12);
        // Rare enough tokens saturate: sqrt(t/f) + t/f >= 1 at f == t.
        assert_eq!(vocab.keep_probability(vocab.get("rare").unwrap()), 1.0);
    }

    #[test]
    fn subsampling_disabled_by_nonpositive_threshold() {
        let corpus = vec![doc(&["common"; 90])];
        let vocab = Vocabulary::build(&corpus, 1, 0.0).unwrap();
        assert_eq!(vocab.keep_probability(0), 1.0);
    }

    #[test]
    fn noise_sampling_tracks_powered_frequencies() {
        let corpus = vec![doc(&["hot"; 80]), doc(&["cold"; 20])];
        let vocab = Vocabulary::build(&corpus, 1, 0.0).unwrap();
        let table = vocab.noise_table();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut hits = vec![0usize; vocab.len()];
        let draws = 20_000;
        for _ in 0..draws {
            hits[table.sample(&mut rng)] += 1;
        }
        let hot = vocab.get("hot").unwrap();
        let expected = 80f64.powf(0.75) / (80f64.powf(0.75) + 20f64.powf(0.75));
        let observed = hits[hot] as f64 / draws as f64;
        assert!((observed - expected).abs() < 0.02, "observed {observed}, expected {expected}");
    }
}
