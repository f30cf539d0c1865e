//! Annotator-agreement upper bounds estimated by resampling.
//!
//! * one-vs-rest: per sentence, one random annotator's rating against the
//!   mean of the remaining annotators.
//! * half-vs-half: per sentence, a random split of the annotators into two
//!   halves (sizes ⌊n/2⌋ and ⌈n/2⌉), comparing the two group means.
//!
//! Each estimate is the mean Pearson r over `n_trials` trials. Trial `t` draws
//! from a ChaCha8 stream seeded with `seed` and stream id `t`, so trials are
//! independent of evaluation order.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::pearson;
use crate::error::{Error, Result};
use crate::ratings::{Provenance, RatingSet};

pub const DEFAULT_TRIALS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpperBound {
    pub value: f64,
    pub n_trials: usize,
    /// Trials skipped because one side was constant across sentences.
    pub degenerate_trials: usize,
    pub n_sentences: usize,
    /// Sentences with fewer than two ratings.
    pub excluded_sentences: Vec<String>,
    pub seed: u64,
    pub outlier_filtered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpperBounds {
    pub ub1: UpperBound,
    pub ub2: UpperBound,
}

/// The RNG used for trial `trial`.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// Ratings of one sentence with their sum.
struct Pool {
    ratings: Vec<f64>,
    sum: f64,
}

fn eligible(rs: &RatingSet) -> (Vec<Pool>, Vec<String>) {
    let mut pools = Vec::new();
    let mut excluded = Vec::new();
    for (s, xs) in rs.by_sentence() {
        if xs.len() >= 2 {
            let sum = xs.iter().sum();
            pools.push(Pool { ratings: xs, sum });
        } else {
            excluded.push(s.to_owned());
        }
    }
    (pools, excluded)
}

fn estimate<F>(rs: &RatingSet, n_trials: usize, seed: u64, mut trial: F) -> Result<UpperBound>
where
    F: FnMut(&[Pool], &mut ChaCha8Rng, &mut Vec<f64>, &mut Vec<f64>),
{
    if n_trials == 0 {
        return Err(Error::Usage("n_trials must be positive".into()));
    }
    let (pools, excluded) = eligible(rs);
    if pools.len() < 3 {
        return Err(Error::invalid(format!(
            "need at least 3 sentences with two or more ratings, found {}",
            pools.len()
        )));
    }
    let mut xs = Vec::with_capacity(pools.len());
    let mut ys = Vec::with_capacity(pools.len());
    let mut total = 0.0;
    let mut used = 0usize;
    for t in 0..n_trials {
        let mut rng = trial_rng(seed, t);
        xs.clear();
        ys.clear();
        trial(&pools, &mut rng, &mut xs, &mut ys);
        if let Ok(r) = pearson(&xs, &ys) {
            total += r;
            used += 1;
        }
    }
    if used == 0 {
        return Err(Error::invalid(
            "every trial produced a constant rating vector; correlation undefined",
        ));
    }
    Ok(UpperBound {
        value: total / used as f64,
        n_trials,
        degenerate_trials: n_trials - used,
        n_sentences: pools.len(),
        excluded_sentences: excluded,
        seed,
        outlier_filtered: rs.provenance == Provenance::OutlierFiltered,
    })
}

/// One-vs-rest annotator correlation.
pub fn ub_one_vs_rest(rs: &RatingSet, n_trials: usize, seed: u64) -> Result<UpperBound> {
    estimate(rs, n_trials, seed, |pools, rng, xs, ys| {
        for pool in pools {
            let n = pool.ratings.len();
            let pick = pool.ratings[rng.gen_range(0..n)];
            xs.push(pick);
            ys.push((pool.sum - pick) / (n - 1) as f64);
        }
    })
}

/// Half-vs-half annotator correlation.
pub fn ub_half_vs_half(rs: &RatingSet, n_trials: usize, seed: u64) -> Result<UpperBound> {
    let mut buf: Vec<f64> = Vec::new();
    estimate(rs, n_trials, seed, |pools, rng, xs, ys| {
        for pool in pools {
            let n = pool.ratings.len();
            let half = n / 2;
            buf.clear();
            buf.extend_from_slice(&pool.ratings);
            let (chosen, _) = buf.partial_shuffle(rng, half);
            let s: f64 = chosen.iter().sum();
            xs.push(s / half as f64);
            ys.push((pool.sum - s) / (n - half) as f64);
        }
    })
}

pub fn upper_bounds(rs: &RatingSet, n_trials: usize, seed: u64) -> Result<UpperBounds> {
    Ok(UpperBounds {
        ub1: ub_one_vs_rest(rs, n_trials, seed)?,
        ub2: ub_half_vs_half(rs, n_trials, seed)?,
    })
}
