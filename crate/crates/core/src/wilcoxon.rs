//! Paired two-sided Wilcoxon signed-rank test.
//!
//! Exact null distribution (dynamic program over doubled ranks, so average
//! ranks for ties stay integral) up to [`EXACT_LIMIT`] nonzero differences;
//! normal approximation with continuity and tie corrections beyond that.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::{Error, Result};

/// Fewest nonzero paired differences the test will accept.
pub const MIN_NONZERO_DIFFS: usize = 5;
/// Largest n handled by the exact null distribution.
pub const EXACT_LIMIT: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WilcoxonMethod {
    Exact,
    NormalApproximation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WilcoxonResult {
    /// Nonzero differences actually ranked.
    pub n: usize,
    pub w_plus: f64,
    pub w_minus: f64,
    pub p_value: f64,
    pub method: WilcoxonMethod,
}

/// Two-sided test of the hypothesis that paired samples share a location.
///
/// Zero differences are dropped; absolute differences are ranked with average
/// ranks for ties. The reported p-value is `min(1, 2 * P(W <= min(W+, W-)))`.
pub fn wilcoxon_signed_rank(x: &[f64], y: &[f64]) -> Result<WilcoxonResult> {
    if x.len() != y.len() {
        return Err(Error::UnpairedSamples(x.len(), y.len()));
    }
    let diffs: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(a, b)| a - b)
        .filter(|d| *d != 0.0)
        .collect();
    let n = diffs.len();
    if n < MIN_NONZERO_DIFFS {
        return Err(Error::TooFewDifferences { needed: MIN_NONZERO_DIFFS, got: n });
    }

    let doubled = doubled_average_ranks(&diffs);
    let w_plus_doubled: u64 = diffs
        .iter()
        .zip(&doubled)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| *r)
        .sum();
    let total_doubled: u64 = doubled.iter().sum();
    let w_minus_doubled = total_doubled - w_plus_doubled;
    let t_doubled = w_plus_doubled.min(w_minus_doubled);

    let (p_value, method) = if n <= EXACT_LIMIT {
        (exact_p(&doubled, t_doubled, n), WilcoxonMethod::Exact)
    } else {
        (approx_p(&doubled, t_doubled, n), WilcoxonMethod::NormalApproximation)
    };

    Ok(WilcoxonResult {
        n,
        w_plus: w_plus_doubled as f64 / 2.0,
        w_minus: w_minus_doubled as f64 / 2.0,
        p_value,
        method,
    })
}

/// Average ranks of |d| multiplied by two, so ties ending in .5 stay exact.
fn doubled_average_ranks(diffs: &[f64]) -> Vec<u64> {
    let n = diffs.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| diffs[a].abs().partial_cmp(&diffs[b].abs()).expect("finite diffs"));
    let mut doubled = vec![0u64; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && diffs[order[j + 1]].abs() == diffs[order[i]].abs() {
            j += 1;
        }
        // Positions i..=j (0-based) share ranks i+1..=j+1; the average rank
        // doubled is (i+1) + (j+1).
        let avg_doubled = (i + j + 2) as u64;
        for &idx in &order[i..=j] {
            doubled[idx] = avg_doubled;
        }
        i = j + 1;
    }
    doubled
}

/// P-value from the exact distribution of the doubled rank-sum over all 2^n
/// sign assignments.
fn exact_p(doubled: &[u64], t_doubled: u64, n: usize) -> f64 {
    let total: u64 = doubled.iter().sum();
    let mut counts = vec![0u64; total as usize + 1];
    counts[0] = 1;
    let mut reachable = 0usize;
    for &r in doubled {
        let r = r as usize;
        reachable += r;
        for s in (0..=reachable.saturating_sub(r)).rev() {
            if counts[s] > 0 {
                counts[s + r] += counts[s];
            }
        }
    }
    let favorable: u64 = counts[..=t_doubled as usize].iter().sum();
    let p = 2.0 * favorable as f64 / (1u64 << n) as f64;
    p.min(1.0)
}

/// Normal approximation with continuity correction and the tie correction
/// `sum(t^3 - t) / 48` subtracted from the variance.
fn approx_p(doubled: &[u64], t_doubled: u64, n: usize) -> f64 {
    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let mut variance = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0;
    let mut sorted = doubled.to_vec();
    sorted.sort_unstable();
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        variance -= (t * t * t - t) / 48.0;
        i = j + 1;
    }
    if variance <= 0.0 {
        // All differences tied at one magnitude and on one side only happens
        // for degenerate inputs; report no evidence rather than divide by 0.
        return 1.0;
    }
    let t = t_doubled as f64 / 2.0;
    let z = (t - mean + 0.5) / variance.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    (2.0 * normal.cdf(z)).min(1.0)
}
