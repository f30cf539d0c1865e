//! Interpolated Kneser–Ney n-gram model with one fixed discount.
//!
//! For an order-`n` model the top level uses raw counts of n-grams, every
//! lower level uses continuation counts (the number of distinct tokens seen
//! immediately to the left), and the unigram level is interpolated with the
//! uniform distribution over predictable tokens so that no probability is 0.
//!
//! ```text
//! P_k(w | h) = (max(c_k(h w) - D, 0) + D · N1+(h •) · P_{k-1}(w | h')) / c_k(h •)
//! ```
//!
//! where `h'` drops the oldest token of `h`, and a history with
//! `c_k(h •) = 0` backs off to `P_{k-1}` directly.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::vocab::{TokenId, Vocab, BOS_ID, EOS_ID};
use crate::error::{Error, Result};

pub const MIN_ORDER: usize = 2;
pub const MAX_ORDER: usize = 5;
pub const DEFAULT_DISCOUNT: f64 = 0.75;

#[derive(Debug, Clone, PartialEq)]
pub struct KneserNey {
    order: usize,
    discount: f64,
    vocab: Vocab,
    /// `counts[k - 1]`: k-gram → raw count (k = order) or continuation count.
    counts: Vec<HashMap<Vec<TokenId>, u64>>,
    /// `histories[k - 1]`: (k-1)-gram → (Σ_w counts, distinct w).
    histories: Vec<HashMap<Vec<TokenId>, (u64, u64)>>,
}

fn check_params(order: usize, discount: f64) -> Result<()> {
    if !(MIN_ORDER..=MAX_ORDER).contains(&order) {
        return Err(Error::Usage(format!(
            "n-gram order must be between {MIN_ORDER} and {MAX_ORDER}, got {order}"
        )));
    }
    if !(discount > 0.0 && discount < 1.0) {
        return Err(Error::Usage(format!(
            "discount must lie in (0, 1), got {discount}"
        )));
    }
    Ok(())
}

impl KneserNey {
    /// Train on tokenized sentences. Each sentence is padded with `order - 1`
    /// start markers and one end marker.
    pub fn train<'a, I>(sentences: I, vocab: &Vocab, order: usize, discount: f64) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [String]>,
    {
        check_params(order, discount)?;
        let mut top: HashMap<Vec<TokenId>, u64> = HashMap::new();
        for s in sentences {
            let padded = pad(&vocab.ids(s), order);
            for end in order - 1..padded.len() {
                *top.entry(padded[end + 1 - order..=end].to_vec()).or_default() += 1;
            }
        }
        if top.is_empty() {
            return Err(Error::invalid("cannot train an n-gram model on an empty corpus"));
        }
        Ok(Self::from_top_counts(order, discount, vocab.clone(), top))
    }

    /// Derive continuation counts and history tables from top-order counts.
    fn from_top_counts(
        order: usize,
        discount: f64,
        vocab: Vocab,
        top: HashMap<Vec<TokenId>, u64>,
    ) -> Self {
        let mut counts: Vec<HashMap<Vec<TokenId>, u64>> = vec![HashMap::new(); order];
        // Every distinct (k+1)-gram suffix of an observed n-gram contributes
        // one left extension to its k-gram suffix.
        for k in (1..order).rev() {
            let longer: Vec<Vec<TokenId>> = if k + 1 == order {
                top.keys().cloned().collect()
            } else {
                counts[k].keys().cloned().collect()
            };
            let level = &mut counts[k - 1];
            for g in longer {
                *level.entry(g[1..].to_vec()).or_default() += 1;
            }
        }
        counts[order - 1] = top;
        let histories = counts
            .iter()
            .map(|level| {
                let mut h: HashMap<Vec<TokenId>, (u64, u64)> = HashMap::new();
                for (g, &c) in level {
                    let e = h.entry(g[..g.len() - 1].to_vec()).or_default();
                    e.0 += c;
                    e.1 += 1;
                }
                h
            })
            .collect();
        KneserNey {
            order,
            discount,
            vocab,
            counts,
            histories,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    /// Histories with at least one observed continuation at the top order.
    pub fn observed_histories(&self) -> impl Iterator<Item = &[TokenId]> {
        self.histories[self.order - 1].keys().map(Vec::as_slice)
    }

    /// P(w | history). Only the last `order - 1` history ids matter; shorter
    /// histories are left-padded with start markers.
    pub fn prob_ids(&self, history: &[TokenId], w: TokenId) -> f64 {
        let n = self.order - 1;
        let hist: Vec<TokenId> = if history.len() >= n {
            history[history.len() - n..].to_vec()
        } else {
            let mut h = vec![BOS_ID; n - history.len()];
            h.extend_from_slice(history);
            h
        };
        self.level_prob(self.order, &hist, w)
    }

    fn level_prob(&self, k: usize, hist: &[TokenId], w: TokenId) -> f64 {
        debug_assert_eq!(hist.len(), k - 1);
        let d = self.discount;
        if k == 1 {
            let (sum, types) = self.histories[0].get(&[][..]).copied().unwrap_or((0, 0));
            let uniform = 1.0 / self.vocab.n_predictable() as f64;
            if sum == 0 {
                return uniform;
            }
            let c = self.counts[0].get(&[w][..]).copied().unwrap_or(0) as f64;
            return ((c - d).max(0.0) + d * types as f64 * uniform) / sum as f64;
        }
        let lower = self.level_prob(k - 1, &hist[1..], w);
        match self.histories[k - 1].get(hist) {
            Some(&(sum, types)) if sum > 0 => {
                let mut key = hist.to_vec();
                key.push(w);
                let c = self.counts[k - 1].get(&key).copied().unwrap_or(0) as f64;
                ((c - d).max(0.0) + d * types as f64 * lower) / sum as f64
            }
            _ => lower,
        }
    }

    /// ln P(next | history) over words; `next` may be the end marker.
    pub fn log_prob(&self, history: &[String], next: &str) -> f64 {
        let n = self.order - 1;
        let tail = &history[history.len().saturating_sub(n)..];
        let ids = self.vocab.ids(tail);
        let w = if next == super::vocab::EOS {
            EOS_ID
        } else {
            self.vocab.id(next)
        };
        self.prob_ids(&ids, w).ln()
    }

    pub(crate) fn to_stored(&self) -> StoredNgram {
        let mut entries: Vec<(Vec<TokenId>, u64)> = self.counts[self.order - 1]
            .iter()
            .map(|(g, &c)| (g.clone(), c))
            .collect();
        entries.sort_unstable();
        StoredNgram { counts: entries }
    }

    pub(crate) fn from_stored(
        order: usize,
        discount: f64,
        vocab: &Vocab,
        stored: StoredNgram,
    ) -> Result<Self> {
        check_params(order, discount)?;
        let mut top = HashMap::with_capacity(stored.counts.len());
        for (g, c) in stored.counts {
            if g.len() != order || c == 0 || g.iter().any(|&t| t as usize >= vocab.len()) {
                return Err(Error::invalid_field(
                    "counts",
                    format!("malformed n-gram entry {g:?}"),
                ));
            }
            top.insert(g, c);
        }
        if top.is_empty() {
            return Err(Error::invalid_field("counts", "no n-gram counts"));
        }
        Ok(Self::from_top_counts(order, discount, vocab.clone(), top))
    }
}

/// Top-order counts; lower levels are re-derived on load.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct StoredNgram {
    pub counts: Vec<(Vec<TokenId>, u64)>,
}

pub(crate) fn pad(ids: &[TokenId], order: usize) -> Vec<TokenId> {
    let mut p = vec![BOS_ID; order - 1];
    p.extend_from_slice(ids);
    p.push(EOS_ID);
    p
}
