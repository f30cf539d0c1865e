use serde::{Deserialize, Serialize};

use super::vocab::{TokenId, Vocab, BOS_ID, EOS_ID, UNK_ID};
use crate::error::{Error, Result};

/// Additive-δ smoothed unigram distribution over the vocabulary words plus
/// the unknown token. Out-of-vocabulary training tokens are counted as
/// unknown.
#[derive(Debug, Clone, PartialEq)]
pub struct UnigramModel {
    vocab: Vocab,
    counts: Vec<u64>,
    total: u64,
    delta: f64,
}

impl UnigramModel {
    pub fn train<'a, I>(sentences: I, vocab: &Vocab, delta: f64) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [String]>,
    {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::Usage(format!("unigram delta must be positive, got {delta}")));
        }
        let mut counts = vec![0u64; vocab.len()];
        let mut total = 0u64;
        for s in sentences {
            for w in s {
                counts[vocab.id(w) as usize] += 1;
                total += 1;
            }
        }
        if total == 0 {
            return Err(Error::invalid("cannot train a unigram model on an empty corpus"));
        }
        Ok(UnigramModel {
            vocab: vocab.clone(),
            counts,
            total,
            delta,
        })
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Size of the support: vocabulary words plus the unknown token.
    fn support(&self) -> usize {
        self.vocab.len() - 2
    }

    fn in_support(id: TokenId) -> bool {
        id != BOS_ID && id != EOS_ID
    }

    pub fn prob_id(&self, id: TokenId) -> f64 {
        debug_assert!(Self::in_support(id));
        (self.counts[id as usize] as f64 + self.delta)
            / (self.total as f64 + self.delta * self.support() as f64)
    }

    /// P(w); out-of-vocabulary words get the unknown token's probability.
    pub fn prob(&self, word: &str) -> f64 {
        self.prob_id(self.vocab.id(word))
    }

    pub fn log_prob(&self, word: &str) -> f64 {
        self.prob(word).ln()
    }

    /// log P_u(s) = Σ log P(w_i).
    pub fn sentence_log_prob(&self, tokens: &[String]) -> f64 {
        tokens.iter().map(|w| self.log_prob(w)).sum()
    }

    /// Ids the distribution ranges over.
    pub fn support_ids(&self) -> impl Iterator<Item = TokenId> + '_ {
        (0..self.vocab.len() as TokenId).filter(|&i| Self::in_support(i))
    }

    pub(crate) fn to_stored(&self) -> StoredUnigram {
        StoredUnigram {
            delta: self.delta,
            counts: self.counts.clone(),
        }
    }

    pub(crate) fn from_stored(vocab: &Vocab, s: StoredUnigram) -> Result<Self> {
        if s.counts.len() != vocab.len() {
            return Err(Error::invalid_field(
                "unigram.counts",
                format!("expected {} counts, found {}", vocab.len(), s.counts.len()),
            ));
        }
        let total = s.counts.iter().sum();
        if total == 0 || !(s.delta > 0.0) {
            return Err(Error::invalid_field("unigram", "empty counts or non-positive delta"));
        }
        Ok(UnigramModel {
            vocab: vocab.clone(),
            counts: s.counts,
            total,
            delta: s.delta,
        })
    }

    pub fn unk_prob(&self) -> f64 {
        self.prob_id(UNK_ID)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct StoredUnigram {
    pub delta: f64,
    pub counts: Vec<u64>,
}
