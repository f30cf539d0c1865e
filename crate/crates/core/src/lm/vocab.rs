use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::model::END_MARKER;

pub const UNK: &str = "<unk>";
pub const BOS: &str = "<s>";
pub const EOS: &str = END_MARKER;

pub type TokenId = u32;

pub const UNK_ID: TokenId = 0;
pub const BOS_ID: TokenId = 1;
pub const EOS_ID: TokenId = 2;

/// Word list with reserved ids for the unknown token and the two sentence
/// boundary markers. Words follow in lexicographic order, which makes ids a
/// pure function of the training corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, TokenId>,
}

impl Vocab {
    /// Keep every word seen at least `min_count` times.
    pub fn build<'a, I>(sentences: I, min_count: u64) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [String]>,
    {
        if min_count == 0 {
            return Err(Error::Usage("min_count must be at least 1".into()));
        }
        let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
        for s in sentences {
            for w in s {
                *counts.entry(w.as_str()).or_default() += 1;
            }
        }
        let words = counts
            .into_iter()
            .filter(|&(w, c)| c >= min_count && !is_reserved(w))
            .map(|(w, _)| w.to_owned());
        Ok(Self::from_words(words))
    }

    /// Rebuild from a stored word list (reserved entries excluded).
    pub fn from_words<I: IntoIterator<Item = String>>(words: I) -> Self {
        let mut tokens: Vec<String> = vec![UNK.into(), BOS.into(), EOS.into()];
        tokens.extend(words);
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as TokenId))
            .collect();
        Vocab { tokens, index }
    }

    /// Id of `word`, or [`UNK_ID`] when it is out of vocabulary.
    pub fn id(&self, word: &str) -> TokenId {
        self.index.get(word).copied().unwrap_or(UNK_ID)
    }

    pub fn ids(&self, words: &[String]) -> Vec<TokenId> {
        words.iter().map(|w| self.id(w)).collect()
    }

    pub fn token(&self, id: TokenId) -> &str {
        &self.tokens[id as usize]
    }

    /// Total entries including the three reserved ones.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.len() == 3
    }

    /// Words without reserved entries, in id order.
    pub fn words(&self) -> &[String] {
        &self.tokens[3..]
    }

    /// Ids that a next-token distribution ranges over: every word, the
    /// unknown token and the end marker (the start marker is never predicted).
    pub fn predictable(&self) -> impl Iterator<Item = TokenId> + '_ {
        (0..self.tokens.len() as TokenId).filter(|&i| i != BOS_ID)
    }

    pub fn n_predictable(&self) -> usize {
        self.tokens.len() - 1
    }
}

fn is_reserved(w: &str) -> bool {
    w == UNK || w == BOS || w == EOS
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(lines: &[&str]) -> Vec<Vec<String>> {
        lines
            .iter()
            .map(|l| l.split_whitespace().map(str::to_owned).collect())
            .collect()
    }

    #[test]
    fn min_count_threshold() {
        let c = corpus(&["a a b", "c a"]);
        let v = Vocab::build(c.iter().map(|s| s.as_slice()), 2).unwrap();
        assert_eq!(v.words(), ["a"]);
        assert_eq!(v.id("b"), UNK_ID);
        assert_eq!(v.id("a"), 3);
        let v1 = Vocab::build(c.iter().map(|s| s.as_slice()), 1).unwrap();
        assert_eq!(v1.words(), ["a", "b", "c"]);
        assert_eq!(v1.n_predictable(), 5);
    }

    #[test]
    fn reserved_words_in_text_are_not_duplicated() {
        let c = corpus(&["<s> x </s>"]);
        let v = Vocab::build(c.iter().map(|s| s.as_slice()), 1).unwrap();
        assert_eq!(v.words(), ["x"]);
    }
}
