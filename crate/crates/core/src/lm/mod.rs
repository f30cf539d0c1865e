//! Native probability providers and the provider abstraction.
//!
//! * [`UnigramModel`]: additive-δ unigram distribution used for the
//!   unigram-normalized measures.
//! * [`KneserNey`]: interpolated Kneser–Ney n-gram model.
//! * [`NgramLm`]: a forward and a backward Kneser–Ney model plus a unigram
//!   model trained on the same corpus and vocabulary. It scores sentences
//!   left-to-right (a true probability) and bidirectionally (a confidence
//!   score that does not normalize over sentences).
//! * [`LogProbProvider`]: anything that can produce a [`TokenLogProbRecord`],
//!   including records precomputed by an external neural-model exporter.

mod kneser_ney;
mod unigram;
mod vocab;

pub use kneser_ney::{KneserNey, DEFAULT_DISCOUNT, MAX_ORDER, MIN_ORDER};
pub use unigram::UnigramModel;
pub use vocab::{TokenId, Vocab, BOS, BOS_ID, EOS, EOS_ID, UNK, UNK_ID};

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    Direction, ExperimentType, TestSentence, TokenLogProb, TokenLogProbRecord, END_MARKER,
};

pub const DEFAULT_MIN_COUNT: u64 = 2;
pub const DEFAULT_UNIGRAM_DELTA: f64 = 1.0;
pub const MODEL_FORMAT_VERSION: u32 = 1;

pub const NGRAM_PROVIDER: &str = "ngram-kn";
pub const UNIGRAM_PROVIDER: &str = "unigram";

/// A left-to-right conditional distribution over next tokens.
pub trait ConditionalLm {
    /// ln P(next | history). `history` is the full preceding token stream
    /// without boundary markers; `next` may be [`END_MARKER`].
    fn cond_log_prob(&self, history: &[String], next: &str) -> f64;
}

impl ConditionalLm for KneserNey {
    fn cond_log_prob(&self, history: &[String], next: &str) -> f64 {
        self.log_prob(history, next)
    }
}

/// Chain-rule scoring of `target` after `context`: one entry per target token
/// and a final end-marker entry. Context tokens condition the scores but
/// never appear in the output.
pub fn score_uni<M: ConditionalLm + ?Sized>(
    model: &M,
    target: &[String],
    context: &[String],
) -> Vec<TokenLogProb> {
    let mut stream: Vec<String> = Vec::with_capacity(context.len() + target.len());
    stream.extend_from_slice(context);
    let mut out = Vec::with_capacity(target.len() + 1);
    for w in target {
        out.push(TokenLogProb {
            t: w.clone(),
            lp: model.cond_log_prob(&stream, w),
        });
        stream.push(w.clone());
    }
    out.push(TokenLogProb {
        t: END_MARKER.to_owned(),
        lp: model.cond_log_prob(&stream, END_MARKER),
    });
    out
}

/// exp(−Σ lp / N) over every predicted token of `heldout`, end markers
/// included.
pub fn perplexity<M: ConditionalLm + ?Sized>(model: &M, heldout: &[Vec<String>]) -> Result<f64> {
    let mut total = 0.0;
    let mut n = 0usize;
    for s in heldout {
        for t in score_uni(model, s, &[]) {
            total += t.lp;
            n += 1;
        }
    }
    if heldout.is_empty() {
        return Err(Error::invalid("perplexity needs a non-empty heldout set"));
    }
    Ok((-total / n as f64).exp())
}

/// Forward and backward Kneser–Ney models with a unigram model, all sharing
/// one vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct NgramLm {
    forward: KneserNey,
    backward: KneserNey,
    unigram: UnigramModel,
    min_count: u64,
}

/// Training hyperparameters for [`NgramLm`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NgramConfig {
    pub order: usize,
    pub discount: f64,
    pub min_count: u64,
    pub unigram_delta: f64,
}

impl Default for NgramConfig {
    fn default() -> Self {
        NgramConfig {
            order: 3,
            discount: DEFAULT_DISCOUNT,
            min_count: DEFAULT_MIN_COUNT,
            unigram_delta: DEFAULT_UNIGRAM_DELTA,
        }
    }
}

impl NgramLm {
    pub fn train(sentences: &[Vec<String>], cfg: NgramConfig) -> Result<Self> {
        let it = || sentences.iter().map(Vec::as_slice);
        if it().all(<[String]>::is_empty) {
            return Err(Error::invalid("training corpus is empty"));
        }
        let vocab = Vocab::build(it(), cfg.min_count)?;
        let forward = KneserNey::train(it(), &vocab, cfg.order, cfg.discount)?;
        let reversed: Vec<Vec<String>> = sentences
            .iter()
            .map(|s| s.iter().rev().cloned().collect())
            .collect();
        let backward = KneserNey::train(
            reversed.iter().map(Vec::as_slice),
            &vocab,
            cfg.order,
            cfg.discount,
        )?;
        let unigram = UnigramModel::train(it(), &vocab, cfg.unigram_delta)?;
        Ok(NgramLm {
            forward,
            backward,
            unigram,
            min_count: cfg.min_count,
        })
    }

    pub fn forward(&self) -> &KneserNey {
        &self.forward
    }

    pub fn backward(&self) -> &KneserNey {
        &self.backward
    }

    pub fn unigram(&self) -> &UnigramModel {
        &self.unigram
    }

    pub fn order(&self) -> usize {
        self.forward.order()
    }

    pub fn config(&self) -> NgramConfig {
        NgramConfig {
            order: self.forward.order(),
            discount: self.forward.discount(),
            min_count: self.min_count,
            unigram_delta: self.unigram.delta(),
        }
    }

    pub fn score_uni(&self, target: &[String], context: &[String]) -> Vec<TokenLogProb> {
        score_uni(&self.forward, target, context)
    }

    /// Per-token mean of the forward log-probability given the left
    /// neighbours (context included) and the backward log-probability given
    /// the right neighbours within the target. No end-marker entry.
    pub fn score_bi(&self, target: &[String], context: &[String]) -> Vec<TokenLogProb> {
        let mut left: Vec<String> = context.to_vec();
        let mut out = Vec::with_capacity(target.len());
        for (i, w) in target.iter().enumerate() {
            let fwd = self.forward.log_prob(&left, w);
            let right_reversed: Vec<String> = target[i + 1..].iter().rev().cloned().collect();
            let bwd = self.backward.log_prob(&right_reversed, w);
            out.push(TokenLogProb {
                t: w.clone(),
                lp: 0.5 * (fwd + bwd),
            });
            left.push(w.clone());
        }
        out
    }

    pub fn perplexity(&self, heldout: &[Vec<String>]) -> Result<f64> {
        perplexity(&self.forward, heldout)
    }

    pub fn to_json(&self) -> String {
        let stored = StoredModel {
            format_version: MODEL_FORMAT_VERSION,
            kind: NGRAM_PROVIDER.to_owned(),
            order: self.forward.order(),
            discount: self.forward.discount(),
            min_count: self.min_count,
            vocab: self.forward.vocab().words().to_vec(),
            forward: self.forward.to_stored(),
            backward: self.backward.to_stored(),
            unigram: self.unigram.to_stored(),
        };
        let mut s = serde_json::to_string(&stored).expect("serializable model");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let stored: StoredModel = serde_json::from_str(text)
            .map_err(|e| Error::invalid(format!("malformed model file: {e}")))?;
        if stored.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::invalid_field(
                "format_version",
                format!(
                    "unsupported model format version {} (expected {MODEL_FORMAT_VERSION})",
                    stored.format_version
                ),
            ));
        }
        if stored.kind != NGRAM_PROVIDER {
            return Err(Error::invalid_field("kind", format!("unknown kind `{}`", stored.kind)));
        }
        let vocab = Vocab::from_words(stored.vocab);
        Ok(NgramLm {
            forward: KneserNey::from_stored(stored.order, stored.discount, &vocab, stored.forward)?,
            backward: KneserNey::from_stored(
                stored.order,
                stored.discount,
                &vocab,
                stored.backward,
            )?,
            unigram: UnigramModel::from_stored(&vocab, stored.unigram)?,
            min_count: stored.min_count,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::model::write_atomic(path, self.to_json().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// On-disk JSON layout of an [`NgramLm`]. Vocabulary words are listed in id
/// order after the three reserved ids (`<unk>`=0, `<s>`=1, `</s>`=2); count
/// tables hold top-order n-grams as id lists, sorted.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StoredModel {
    format_version: u32,
    kind: String,
    order: usize,
    discount: f64,
    min_count: u64,
    vocab: Vec<String>,
    forward: kneser_ney::StoredNgram,
    backward: kneser_ney::StoredNgram,
    unigram: unigram::StoredUnigram,
}

/// Standalone unigram model file (used to normalize adapter-supplied scores).
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StoredUnigramFile {
    format_version: u32,
    kind: String,
    vocab: Vec<String>,
    unigram: unigram::StoredUnigram,
}

impl UnigramModel {
    pub fn to_json(&self) -> String {
        let stored = StoredUnigramFile {
            format_version: MODEL_FORMAT_VERSION,
            kind: UNIGRAM_PROVIDER.to_owned(),
            vocab: self.vocab().words().to_vec(),
            unigram: self.to_stored(),
        };
        let mut s = serde_json::to_string(&stored).expect("serializable model");
        s.push('\n');
        s
    }

    /// Accepts either a standalone unigram file or an n-gram model file, whose
    /// embedded unigram model is used.
    pub fn from_json(text: &str) -> Result<Self> {
        if let Ok(stored) = serde_json::from_str::<StoredUnigramFile>(text) {
            if stored.format_version != MODEL_FORMAT_VERSION || stored.kind != UNIGRAM_PROVIDER {
                return Err(Error::invalid_field("kind", "not a unigram model file"));
            }
            let vocab = Vocab::from_words(stored.vocab);
            return UnigramModel::from_stored(&vocab, stored.unigram);
        }
        NgramLm::from_json(text).map(|m| m.unigram)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::model::write_atomic(path, self.to_json().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// A source of per-token log-probabilities for test sentences.
pub trait LogProbProvider {
    fn name(&self) -> &str;

    fn supports(&self, direction: Direction) -> bool;

    /// Score `sentence.target` under `variant`'s context.
    fn score(
        &self,
        sentence: &TestSentence,
        variant: ExperimentType,
        direction: Direction,
    ) -> Result<TokenLogProbRecord>;
}

fn unsupported(provider: &str, direction: Direction) -> Error {
    Error::Usage(format!(
        "provider `{provider}` does not support direction `{direction}`"
    ))
}

impl LogProbProvider for NgramLm {
    fn name(&self) -> &str {
        NGRAM_PROVIDER
    }

    fn supports(&self, _direction: Direction) -> bool {
        true
    }

    fn score(
        &self,
        sentence: &TestSentence,
        variant: ExperimentType,
        direction: Direction,
    ) -> Result<TokenLogProbRecord> {
        let context = sentence.context_tokens(variant)?;
        let tokens = match direction {
            Direction::Uni => self.score_uni(&sentence.target, &context),
            Direction::Bi => self.score_bi(&sentence.target, &context),
        };
        let rec = TokenLogProbRecord {
            sentence_id: sentence.id.clone(),
            provider: NGRAM_PROVIDER.to_owned(),
            direction,
            context_variant: variant,
            tokens,
            n_target_tokens: sentence.target.len(),
        };
        rec.validate()?;
        Ok(rec)
    }
}

impl LogProbProvider for UnigramModel {
    fn name(&self) -> &str {
        UNIGRAM_PROVIDER
    }

    fn supports(&self, direction: Direction) -> bool {
        direction == Direction::Uni
    }

    fn score(
        &self,
        sentence: &TestSentence,
        variant: ExperimentType,
        direction: Direction,
    ) -> Result<TokenLogProbRecord> {
        if direction != Direction::Uni {
            return Err(unsupported(UNIGRAM_PROVIDER, direction));
        }
        // Context has no effect on a unigram model, but a required context
        // must still exist.
        sentence.context_tokens(variant)?;
        Ok(TokenLogProbRecord {
            sentence_id: sentence.id.clone(),
            provider: UNIGRAM_PROVIDER.to_owned(),
            direction,
            context_variant: variant,
            tokens: sentence
                .target
                .iter()
                .map(|w| TokenLogProb {
                    t: w.clone(),
                    lp: self.log_prob(w),
                })
                .collect(),
            n_target_tokens: sentence.target.len(),
        })
    }
}

/// Serves records loaded from a logprobs.jsonl file.
#[derive(Debug, Clone)]
pub struct RecordProvider {
    name: String,
    records: HashMap<(String, Direction, ExperimentType), TokenLogProbRecord>,
}

impl RecordProvider {
    /// All records must come from one provider; a repeated
    /// (sentence, direction, variant) key is an error.
    pub fn new(records: Vec<TokenLogProbRecord>) -> Result<Self> {
        let name = records
            .first()
            .map(|r| r.provider.clone())
            .ok_or_else(|| Error::invalid("logprobs file contains no records"))?;
        let mut map = HashMap::with_capacity(records.len());
        for (i, r) in records.into_iter().enumerate() {
            if r.provider != name {
                return Err(Error::invalid_at(
                    i + 1,
                    Some("provider"),
                    format!("mixed providers `{name}` and `{}`", r.provider),
                ));
            }
            let key = (r.sentence_id.clone(), r.direction, r.context_variant);
            if map.insert(key, r).is_some() {
                return Err(Error::invalid_at(
                    i + 1,
                    Some("sentence_id"),
                    "duplicate (sentence_id, direction, context_variant)",
                ));
            }
        }
        Ok(RecordProvider { name, records: map })
    }
}

impl LogProbProvider for RecordProvider {
    fn name(&self) -> &str {
        &self.name
    }

    fn supports(&self, direction: Direction) -> bool {
        self.records.keys().any(|k| k.1 == direction)
    }

    fn score(
        &self,
        sentence: &TestSentence,
        variant: ExperimentType,
        direction: Direction,
    ) -> Result<TokenLogProbRecord> {
        sentence.context_tokens(variant)?;
        self.records
            .get(&(sentence.id.clone(), direction, variant))
            .cloned()
            .ok_or_else(|| {
                Error::invalid(format!(
                    "no {direction}/{variant} record for sentence `{}` from provider `{}`",
                    sentence.id, self.name
                ))
            })
    }
}
