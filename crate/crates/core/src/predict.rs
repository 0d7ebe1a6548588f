//! Mortality prediction harness: NearMiss undersampling, KNN over embedding
//! vectors, and repeated nested cross-validation.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::par;
use crate::{Error, Result};

/// Neighbours considered per majority sample by NearMiss-1.
pub const NEAR_MISS_M: usize = 3;
/// Inclusive KNN search range for model selection.
pub const K_MIN: usize = 1;
pub const K_MAX: usize = 20;
/// Outer folds, inner training share, and fold re-draw budget.
pub const OUTER_FOLDS: usize = 5;
pub const INNER_TRAIN_RATIO: f64 = 0.8;
pub const FOLD_DRAW_ATTEMPTS: usize = 10;
/// Fewest labeled rows the experiment accepts.
pub const MIN_ROWS: usize = 50;

/// Embedding rows with a boolean outcome label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledEmbeddingSet {
    ids: Vec<String>,
    vectors: Vec<Vec<f64>>,
    labels: Vec<bool>,
}

impl LabeledEmbeddingSet {
    pub fn new(rows: Vec<(String, Vec<f64>, bool)>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InsufficientData("no labeled rows".into()));
        }
        let dim = rows[0].1.len();
        let mut ids = Vec::with_capacity(rows.len());
        let mut vectors = Vec::with_capacity(rows.len());
        let mut labels = Vec::with_capacity(rows.len());
        let mut seen = std::collections::BTreeSet::new();
        for (id, vector, label) in rows {
            if vector.len() != dim {
                return Err(Error::Malformed(format!(
                    "vector for '{id}' has {} dims, expected {dim}",
                    vector.len()
                )));
            }
            if !seen.insert(id.clone()) {
                return Err(Error::Malformed(format!("duplicate admission id '{id}'")));
            }
            ids.push(id);
            vectors.push(vector);
            labels.push(label);
        }
        Ok(LabeledEmbeddingSet { ids, vectors, labels })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&l| l).count()
    }

    fn subset(&self, indices: &[usize]) -> LabeledEmbeddingSet {
        LabeledEmbeddingSet {
            ids: indices.iter().map(|&i| self.ids[i].clone()).collect(),
            vectors: indices.iter().map(|&i| self.vectors[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// NearMiss-1 over the negative (majority) class: keep the `|minority|`
/// negative samples whose mean distance to their `min(m, |minority|)` nearest
/// positive samples is smallest; positives are kept whole. Row order is
/// preserved. When negatives do not outnumber positives the input passes
/// through unchanged with a warning.
pub fn near_miss_undersample(data: &LabeledEmbeddingSet, m: usize) -> Result<LabeledEmbeddingSet> {
    let minority: Vec<usize> = (0..data.len()).filter(|&i| data.labels[i]).collect();
    let majority: Vec<usize> = (0..data.len()).filter(|&i| !data.labels[i]).collect();
    if minority.is_empty() || majority.is_empty() {
        return Err(Error::InsufficientData(
            "undersampling needs both classes present".into(),
        ));
    }
    if majority.len() <= minority.len() {
        log::warn!("negative class is not larger than positive class; skipping undersampling");
        return Ok(data.clone());
    }

    let neighbours = m.min(minority.len());
    let mut scored: Vec<(f64, &str, usize)> = majority
        .iter()
        .map(|&i| {
            let mut dists: Vec<f64> =
                minority.iter().map(|&j| euclidean(&data.vectors[i], &data.vectors[j])).collect();
            dists.sort_by(|a, b| a.partial_cmp(b).expect("finite distance"));
            let mean = dists[..neighbours].iter().sum::<f64>() / neighbours as f64;
            (mean, data.ids[i].as_str(), i)
        })
        .collect();
    scored.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite distance").then(a.1.cmp(b.1)));

    let mut keep: Vec<usize> = scored[..minority.len()].iter().map(|s| s.2).collect();
    keep.extend(&minority);
    keep.sort_unstable();
    Ok(data.subset(&keep))
}

/// KNN score and label per test vector: score = positive share of the k
/// nearest training rows (ties by id), predicted = score >= 0.5.
pub fn knn_scores(
    train: &LabeledEmbeddingSet,
    test: &[Vec<f64>],
    k: usize,
) -> Result<Vec<(f64, bool)>> {
    if k < 1 || k > train.len() {
        return Err(Error::InvalidK { k, corpus: train.len() });
    }
    Ok(par::map_vec(test, |point| {
        let mut order: Vec<usize> = (0..train.len()).collect();
        let dists: Vec<f64> = train.vectors.iter().map(|v| euclidean(point, v)).collect();
        order.sort_by(|&a, &b| {
            dists[a]
                .partial_cmp(&dists[b])
                .expect("finite distance")
                .then(train.ids[a].cmp(&train.ids[b]))
        });
        let positive = order[..k].iter().filter(|&&i| train.labels[i]).count();
        let score = positive as f64 / k as f64;
        (score, score >= 0.5)
    }))
}

/// Micro-averaged F1, which for single-label binary prediction is exactly the
/// pooled accuracy.
pub fn f1_micro(predicted: &[bool], actual: &[bool]) -> Result<f64> {
    if predicted.len() != actual.len() {
        return Err(Error::UnpairedSamples(predicted.len(), actual.len()));
    }
    if predicted.is_empty() {
        return Err(Error::InsufficientData("no predictions to score".into()));
    }
    let correct = predicted.iter().zip(actual).filter(|(p, a)| p == a).count();
    Ok(correct as f64 / predicted.len() as f64)
}

/// Area under the ROC curve by the rank (Mann-Whitney) formulation with
/// average ranks for tied scores.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::UnpairedSamples(scores.len(), labels.len()));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::InsufficientData("ROC-AUC needs both classes present".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("finite score"));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1..=j+1 share the average rank.
        let avg_rank = (i + j + 2) as f64 / 2.0;
        for &idx in &order[i..=j] {
            if labels[idx] {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// Cross-validation outcome across repeats.
#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub f1_micro_mean: f64,
    pub f1_micro_std: f64,
    pub roc_auc_mean: f64,
    pub roc_auc_std: f64,
    /// Chosen k per repeat per outer fold.
    pub chosen_k: Vec<Vec<usize>>,
    pub repeats: usize,
}

impl CvReport {
    /// `label  f1_mean  f1_std  auc_mean  auc_std` row for the results table.
    pub fn tsv_row(&self, label: &str) -> String {
        format!(
            "{label}\t{:.4}\t{:.4}\t{:.4}\t{:.4}",
            self.f1_micro_mean, self.f1_micro_std, self.roc_auc_mean, self.roc_auc_std
        )
    }
}

fn stream_seed(master: u64, stream: u64) -> u64 {
    // splitmix64 step keeps per-repeat streams decorrelated.
    let mut z = master.wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stratified fold assignment; `folds[f]` lists row indices of fold `f`.
fn draw_stratified_folds(
    data: &LabeledEmbeddingSet,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Vec<usize>>> {
    for _ in 0..FOLD_DRAW_ATTEMPTS {
        let mut positives: Vec<usize> = (0..data.len()).filter(|&i| data.labels[i]).collect();
        let mut negatives: Vec<usize> = (0..data.len()).filter(|&i| !data.labels[i]).collect();
        positives.shuffle(rng);
        negatives.shuffle(rng);
        let mut folds = vec![Vec::new(); OUTER_FOLDS];
        for (i, idx) in positives.iter().chain(&negatives).enumerate() {
            folds[i % OUTER_FOLDS].push(*idx);
        }
        let usable = folds.iter().all(|fold| {
            let pos = fold.iter().filter(|&&i| data.labels[i]).count();
            pos > 0 && pos < fold.len()
        });
        if usable {
            return Ok(folds);
        }
    }
    Err(Error::FoldDrawFailed(FOLD_DRAW_ATTEMPTS))
}

/// Picks k in `[K_MIN, K_MAX]` by f1-micro on an 80:20 split of the already
/// undersampled training data; smallest k wins on ties.
fn select_k(train: &LabeledEmbeddingSet, rng: &mut ChaCha8Rng) -> Result<usize> {
    let mut indices: Vec<usize> = (0..train.len()).collect();
    indices.shuffle(rng);
    let cut = ((train.len() as f64 * INNER_TRAIN_RATIO) as usize).max(1);
    let sub_train = train.subset(&indices[..cut]);
    let sub_val = train.subset(&indices[cut.min(indices.len())..]);
    if sub_val.is_empty() {
        return Ok(K_MIN);
    }
    let k_cap = K_MAX.min(sub_train.len());
    let mut best = (K_MIN, -1.0);
    for k in K_MIN..=k_cap {
        let predictions = knn_scores(&sub_train, sub_val.vectors(), k)?;
        let predicted: Vec<bool> = predictions.iter().map(|(_, p)| *p).collect();
        let score = f1_micro(&predicted, sub_val.labels())?;
        if score > best.1 {
            best = (k, score);
        }
    }
    Ok(best.0)
}

struct RepeatOutcome {
    f1: f64,
    auc: f64,
    chosen_k: Vec<usize>,
}

fn run_repeat(data: &LabeledEmbeddingSet, seed: u64) -> Result<RepeatOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let folds = draw_stratified_folds(data, &mut rng)?;
    let mut predicted = Vec::with_capacity(data.len());
    let mut actual = Vec::with_capacity(data.len());
    let mut scores = Vec::with_capacity(data.len());
    let mut chosen_k = Vec::with_capacity(OUTER_FOLDS);
    for held_out in 0..OUTER_FOLDS {
        let train_idx: Vec<usize> = folds
            .iter()
            .enumerate()
            .filter(|(f, _)| *f != held_out)
            .flat_map(|(_, fold)| fold.iter().copied())
            .collect();
        let train = near_miss_undersample(&data.subset(&train_idx), NEAR_MISS_M)?;
        let k = select_k(&train, &mut rng)?;
        chosen_k.push(k);
        let test = data.subset(&folds[held_out]);
        for ((score, label), &truth) in
            knn_scores(&train, test.vectors(), k)?.into_iter().zip(test.labels())
        {
            scores.push(score);
            predicted.push(label);
            actual.push(truth);
        }
    }
    Ok(RepeatOutcome {
        f1: f1_micro(&predicted, &actual)?,
        auc: roc_auc(&scores, &actual)?,
        chosen_k,
    })
}

fn mean_and_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Repeated nested cross-validation: stratified 5-fold outer loop, NearMiss
/// undersampling and 80:20 k-selection inside each training fold, pooled
/// accuracy and rank-based AUC per repeat, means and population stds across
/// repeats. Deterministic for a fixed seed.
pub fn mortality_cv_experiment(
    data: &LabeledEmbeddingSet,
    repeats: usize,
    seed: u64,
) -> Result<CvReport> {
    if data.len() < MIN_ROWS {
        return Err(Error::InsufficientData(format!(
            "{} labeled rows; need at least {MIN_ROWS}",
            data.len()
        )));
    }
    let positives = data.positives();
    if positives == 0 || positives == data.len() {
        return Err(Error::InsufficientData("both outcome classes must be present".into()));
    }
    if repeats == 0 {
        return Err(Error::InsufficientData("at least one repeat required".into()));
    }

    let repeat_ids: Vec<u64> = (0..repeats as u64).collect();
    let outcomes = par::try_map_vec(&repeat_ids, |&r| run_repeat(data, stream_seed(seed, r)))?;

    let f1s: Vec<f64> = outcomes.iter().map(|o| o.f1).collect();
    let aucs: Vec<f64> = outcomes.iter().map(|o| o.auc).collect();
    let (f1_micro_mean, f1_micro_std) = mean_and_std(&f1s);
    let (roc_auc_mean, roc_auc_std) = mean_and_std(&aucs);
    Ok(CvReport {
        f1_micro_mean,
        f1_micro_std,
        roc_auc_mean,
        roc_auc_std,
        chosen_k: outcomes.into_iter().map(|o| o.chosen_k).collect(),
        repeats,
    })
}
