//! One-tailed Wilcoxon signed-rank test for paired samples.
//!
//! Zero differences are dropped. Tied absolute differences share their
//! average rank. With at most [`EXACT_MAX_N`] non-zero differences the
//! p-value is exact: the null distribution of W+ over all 2^m sign
//! assignments is built by counting subset sums of the (doubled) ranks.
//! Larger samples use the normal approximation with continuity correction
//! and tie-corrected variance.

use serde::{Deserialize, Serialize};

use super::special::normal_cdf;
use crate::error::{Error, Result};

pub const EXACT_MAX_N: usize = 20;
pub const MIN_NONZERO: usize = 5;

/// Absolute differences closer than this (relative to the largest one) are
/// treated as tied; smaller differences are treated as zero.
const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Alternative {
    /// a tends to exceed b.
    Greater,
    /// a tends to fall below b.
    Less,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PMethod {
    Exact,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// Sum of ranks of the positive differences a − b.
    pub w_plus: f64,
    pub p_value: f64,
    /// Non-zero differences used.
    pub n: usize,
    pub method: PMethod,
}

/// Signed ranks of the non-zero differences: (average rank, difference > 0).
pub fn signed_ranks(diffs: &[f64]) -> Vec<(f64, bool)> {
    let scale = diffs.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let tol = TIE_TOLERANCE * scale.max(f64::MIN_POSITIVE);
    let mut nz: Vec<(f64, bool)> = diffs
        .iter()
        .filter(|d| d.abs() > tol)
        .map(|&d| (d.abs(), d > 0.0))
        .collect();
    nz.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut out = Vec::with_capacity(nz.len());
    let mut i = 0;
    while i < nz.len() {
        let mut j = i + 1;
        while j < nz.len() && nz[j].0 - nz[i].0 <= tol {
            j += 1;
        }
        // ranks i+1 ..= j share their mean
        let rank = (i + 1 + j) as f64 / 2.0;
        out.extend(nz[i..j].iter().map(|&(_, pos)| (rank, pos)));
        i = j;
    }
    out
}

/// Null distribution of W+ as (w, probability) pairs in increasing w.
pub fn exact_null_distribution(ranks: &[f64]) -> Vec<(f64, f64)> {
    let counts = subset_sum_counts(ranks);
    let total = 2f64.powi(ranks.len() as i32);
    counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0.0)
        .map(|(s2, &c)| (s2 as f64 / 2.0, c / total))
        .collect()
}

/// counts[s] = number of rank subsets whose doubled sum is s.
fn subset_sum_counts(ranks: &[f64]) -> Vec<f64> {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let max: usize = doubled.iter().sum();
    let mut counts = vec![0.0f64; max + 1];
    counts[0] = 1.0;
    let mut reach = 0;
    for &r in &doubled {
        for s in (0..=reach).rev() {
            if counts[s] > 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    counts
}

/// Exact one-tailed p-value of an observed W+ given the ranks.
pub fn exact_p(ranks: &[f64], w_plus: f64, alternative: Alternative) -> f64 {
    let counts = subset_sum_counts(ranks);
    let total = 2f64.powi(ranks.len() as i32);
    let w2 = (2.0 * w_plus).round() as usize;
    let tail: f64 = match alternative {
        Alternative::Greater => counts[w2.min(counts.len())..].iter().sum(),
        Alternative::Less => counts[..=w2.min(counts.len() - 1)].iter().sum(),
    };
    tail / total
}

/// Normal-approximation one-tailed p-value with continuity correction.
pub fn normal_p(ranks: &[f64], w_plus: f64, alternative: Alternative) -> Result<f64> {
    let m = ranks.len() as f64;
    let mean = m * (m + 1.0) / 4.0;
    let mut sorted: Vec<f64> = ranks.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        i = j;
    }
    let var = m * (m + 1.0) * (2.0 * m + 1.0) / 24.0 - tie_term / 48.0;
    let sd = var.sqrt();
    match alternative {
        Alternative::Greater => normal_cdf(-(w_plus - mean - 0.5) / sd),
        Alternative::Less => normal_cdf((w_plus - mean + 0.5) / sd),
    }
}

pub fn wilcoxon_one_tailed(a: &[f64], b: &[f64], alternative: Alternative) -> Result<WilcoxonResult> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!(
            "paired samples differ in length ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let signed = signed_ranks(&diffs);
    if signed.is_empty() {
        return Err(Error::invalid("all paired differences are zero"));
    }
    if signed.len() < MIN_NONZERO {
        return Err(Error::invalid(format!(
            "need at least {MIN_NONZERO} non-zero differences, found {}",
            signed.len()
        )));
    }
    let ranks: Vec<f64> = signed.iter().map(|&(r, _)| r).collect();
    let w_plus: f64 = signed.iter().filter(|(_, pos)| *pos).map(|(r, _)| r).sum();
    let (p_value, method) = if ranks.len() <= EXACT_MAX_N {
        (exact_p(&ranks, w_plus, alternative), PMethod::Exact)
    } else {
        (normal_p(&ranks, w_plus, alternative)?, PMethod::Normal)
    };
    Ok(WilcoxonResult {
        w_plus,
        p_value,
        n: ranks.len(),
        method,
    })
}
