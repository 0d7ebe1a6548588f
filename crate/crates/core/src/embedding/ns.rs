//! Negative-sampling objective and its analytic gradients.
//!
//! These are the definitional, side-effect-free forms used by the gradient
//! tests; the training loop applies the same formulas in place.

use std::collections::BTreeMap;

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// log σ(x), computed without overflow for large |x|.
pub fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn output_row(output: &[f64], dim: usize, row: usize) -> &[f64] {
    &output[row * dim..(row + 1) * dim]
}

/// Objective for one (hidden vector, target, negatives) sample:
/// `log σ(u_t·h) + Σ_j log σ(−u_nj·h)` over the flat row-major `output`.
pub fn ns_objective(
    h: &[f64],
    output: &[f64],
    dim: usize,
    target: usize,
    negatives: &[usize],
) -> f64 {
    let mut obj = log_sigmoid(dot(output_row(output, dim, target), h));
    for &n in negatives {
        obj += log_sigmoid(-dot(output_row(output, dim, n), h));
    }
    obj
}

/// Analytic gradients of [`ns_objective`] with respect to `h` and to every
/// touched output row. Duplicate negative rows accumulate.
pub fn ns_gradients(
    h: &[f64],
    output: &[f64],
    dim: usize,
    target: usize,
    negatives: &[usize],
) -> (Vec<f64>, BTreeMap<usize, Vec<f64>>) {
    let mut grad_h = vec![0.0; dim];
    let mut grad_rows: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let labeled = std::iter::once((target, 1.0)).chain(negatives.iter().map(|&n| (n, 0.0)));
    for (row, label) in labeled {
        let u = output_row(output, dim, row);
        let coef = label - sigmoid(dot(u, h));
        for c in 0..dim {
            grad_h[c] += coef * u[c];
        }
        let entry = grad_rows.entry(row).or_insert_with(|| vec![0.0; dim]);
        for c in 0..dim {
            entry[c] += coef * h[c];
        }
    }
    (grad_h, grad_rows)
}
