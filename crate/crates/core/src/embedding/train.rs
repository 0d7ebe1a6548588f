//! Stochastic training loop shared by PV-DBOW and PV-DM.
//!
//! Parameters live in atomic matrices so multiple workers can update them
//! hogwild-style without locks; with a single worker the walk over the corpus
//! is fully deterministic.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ns::sigmoid;
use super::vocab::{NoiseTable, Vocabulary};
use super::{TrainMode, TrainingConfig};
use crate::{Error, Result};

/// Row-major f64 matrix stored as atomic bit patterns.
pub(super) struct AtomicMatrix {
    cols: usize,
    data: Vec<AtomicU64>,
}

impl AtomicMatrix {
    fn from_values(values: Vec<f64>, cols: usize) -> Self {
        let data = values.into_iter().map(|v| AtomicU64::new(v.to_bits())).collect();
        AtomicMatrix { cols, data }
    }

    fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_values(vec![0.0; rows * cols], cols)
    }

    fn load_row(&self, row: usize, buf: &mut [f64]) {
        let base = row * self.cols;
        for (c, slot) in buf.iter_mut().enumerate() {
            *slot = f64::from_bits(self.data[base + c].load(Ordering::Relaxed));
        }
    }

    fn add_to_buf(&self, row: usize, buf: &mut [f64]) {
        let base = row * self.cols;
        for (c, slot) in buf.iter_mut().enumerate() {
            *slot += f64::from_bits(self.data[base + c].load(Ordering::Relaxed));
        }
    }

    /// row += scale * delta. Plain read-modify-write; racy updates may drop,
    /// which the hogwild contract tolerates.
    fn add_row(&self, row: usize, delta: &[f64], scale: f64) {
        let base = row * self.cols;
        for (c, d) in delta.iter().enumerate() {
            let cell = &self.data[base + c];
            let current = f64::from_bits(cell.load(Ordering::Relaxed));
            cell.store((current + scale * d).to_bits(), Ordering::Relaxed);
        }
    }

    fn into_values(self) -> Vec<f64> {
        self.data.into_iter().map(|a| f64::from_bits(a.into_inner())).collect()
    }
}

pub(super) struct TrainArtifacts {
    pub doc_vectors: Vec<f64>,
    pub word_vectors: Vec<f64>,
    pub final_alpha: f64,
}

fn worker_seed(seed: u64, worker: usize) -> u64 {
    let mut z = seed ^ ((worker as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Trains over pre-tokenized documents (per doc, per text, vocabulary
/// indices) and returns the raw parameter matrices.
pub(super) fn run_training(
    docs: &[Vec<Vec<usize>>],
    vocab: &Vocabulary,
    config: &TrainingConfig,
) -> Result<TrainArtifacts> {
    let dim = config.vector_size;
    let vocab_size = vocab.len();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut uniform_init = |n: usize| -> Vec<f64> {
        (0..n).map(|_| (rng.gen::<f64>() - 0.5) / dim as f64).collect()
    };
    let doc_vectors = AtomicMatrix::from_values(uniform_init(docs.len() * dim), dim);
    let word_vectors = AtomicMatrix::from_values(uniform_init(vocab_size * dim), dim);
    let output = AtomicMatrix::zeros(vocab_size, dim);

    let positions_per_epoch: u64 =
        docs.iter().flat_map(|d| d.iter()).map(|t| t.len() as u64).sum();
    let total_updates = positions_per_epoch * config.epochs as u64;
    let counter = AtomicU64::new(0);
    let noise = vocab.noise_table();

    let ctx = WorkerContext {
        docs,
        vocab,
        config,
        noise: &noise,
        doc_vectors: &doc_vectors,
        word_vectors: &word_vectors,
        output: &output,
        counter: &counter,
        total_updates: total_updates.max(1),
    };

    if config.workers <= 1 {
        worker_loop(&ctx, 0)?;
    } else {
        let ctx = &ctx;
        let results: Vec<Result<()>> = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..config.workers)
                .map(|w| scope.spawn(move || worker_loop(ctx, w)))
                .collect();
            handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
        });
        for r in results {
            r?;
        }
    }

    let progressed = counter.load(Ordering::Relaxed);
    let range = config.alpha - config.min_alpha;
    let final_alpha = (config.alpha
        - range * progressed as f64 / ctx.total_updates as f64)
        .max(config.min_alpha);

    Ok(TrainArtifacts {
        doc_vectors: doc_vectors.into_values(),
        word_vectors: word_vectors.into_values(),
        final_alpha,
    })
}

struct WorkerContext<'a> {
    docs: &'a [Vec<Vec<usize>>],
    vocab: &'a Vocabulary,
    config: &'a TrainingConfig,
    noise: &'a NoiseTable,
    doc_vectors: &'a AtomicMatrix,
    word_vectors: &'a AtomicMatrix,
    output: &'a AtomicMatrix,
    counter: &'a AtomicU64,
    total_updates: u64,
}

fn worker_loop(ctx: &WorkerContext<'_>, worker: usize) -> Result<()> {
    let config = ctx.config;
    let dim = config.vector_size;
    let workers = config.workers.max(1);
    let range = config.alpha - config.min_alpha;
    let vocab_size = ctx.vocab.len();

    let mut rng = ChaCha8Rng::seed_from_u64(worker_seed(config.seed, worker));
    let mut h = vec![0.0; dim];
    let mut grad_h = vec![0.0; dim];
    let mut row_buf = vec![0.0; dim];
    let mut reduced: Vec<(usize, f64)> = Vec::new();
    let mut negatives: Vec<usize> = Vec::with_capacity(config.negative);

    for _epoch in 0..config.epochs {
        for (d, doc) in ctx.docs.iter().enumerate() {
            if d % workers != worker {
                continue;
            }
            for text in doc {
                // Subsample the text; every position advances the shared
                // learning-rate clock whether or not it is kept.
                reduced.clear();
                for &token in text {
                    let step = ctx.counter.fetch_add(1, Ordering::Relaxed);
                    let lr = (config.alpha
                        - range * step as f64 / ctx.total_updates as f64)
                        .max(config.min_alpha);
                    let keep = ctx.vocab.keep_probability(token);
                    if keep >= 1.0 || rng.gen::<f64>() < keep {
                        reduced.push((token, lr));
                    }
                }
                for pos in 0..reduced.len() {
                    let (target, lr) = reduced[pos];
                    negatives.clear();
                    if vocab_size > 1 {
                        for _ in 0..config.negative {
                            loop {
                                let n = ctx.noise.sample(&mut rng);
                                if n != target {
                                    negatives.push(n);
                                    break;
                                }
                            }
                        }
                    }
                    match config.mode {
                        TrainMode::PvDbow => {
                            ctx.doc_vectors.load_row(d, &mut h);
                            ns_update(ctx.output, &h, target, &negatives, lr, &mut grad_h, &mut row_buf)?;
                            ctx.doc_vectors.add_row(d, &grad_h, 1.0);
                        }
                        TrainMode::PvDm => {
                            let lo = pos.saturating_sub(config.window);
                            let hi = (pos + config.window + 1).min(reduced.len());
                            ctx.doc_vectors.load_row(d, &mut h);
                            let mut contributors = 1.0;
                            for j in lo..hi {
                                if j != pos {
                                    ctx.word_vectors.add_to_buf(reduced[j].0, &mut h);
                                    contributors += 1.0;
                                }
                            }
                            for v in h.iter_mut() {
                                *v /= contributors;
                            }
                            ns_update(ctx.output, &h, target, &negatives, lr, &mut grad_h, &mut row_buf)?;
                            let scale = 1.0 / contributors;
                            ctx.doc_vectors.add_row(d, &grad_h, scale);
                            for j in lo..hi {
                                if j != pos {
                                    ctx.word_vectors.add_row(reduced[j].0, &grad_h, scale);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

/// One negative-sampling step against the output matrix: accumulates the
/// learning-rate-scaled gradient for the hidden vector in `grad_h` and
/// updates the touched output rows in place.
fn ns_update(
    output: &AtomicMatrix,
    h: &[f64],
    target: usize,
    negatives: &[usize],
    lr: f64,
    grad_h: &mut [f64],
    row_buf: &mut [f64],
) -> Result<()> {
    grad_h.fill(0.0);
    let labeled = std::iter::once((target, 1.0)).chain(negatives.iter().map(|&n| (n, 0.0)));
    for (row, label) in labeled {
        output.load_row(row, row_buf);
        let dot: f64 = row_buf.iter().zip(h.iter()).map(|(a, b)| a * b).sum();
        if !dot.is_finite() {
            return Err(Error::NonFiniteLoss);
        }
        let coef = (label - sigmoid(dot)) * lr;
        for (g, r) in grad_h.iter_mut().zip(row_buf.iter()) {
            *g += coef * r;
        }
        output.add_row(row, h, coef);
    }
    Ok(())
}
