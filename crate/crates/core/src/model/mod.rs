//! Domain types shared by every stage of the toolkit, and the readers and
//! writers for its file formats.
//!
//! All text is lowercased and tokenized at ingestion (see [`tokenize`]), and
//! every log-probability is in nats.

mod io;
mod tokenize;

pub use io::{
    load_hits, load_logprobs, load_mean_ratings, load_ratings, load_scores, load_testset,
    parse_logprobs, parse_ratings, parse_testset, write_atomic, write_hits, write_json,
    write_logprobs, write_mean_ratings, write_ratings, write_scores, write_testset, MeanRatingRow,
    ScoreRow,
};
pub use tokenize::{detokenize, tokenize};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sentence-final boundary marker. Unidirectional native records carry its
/// log-probability as a trailing token entry.
pub const END_MARKER: &str = "</s>";

/// Number of context sentences shown before a target.
pub const CONTEXT_SENTENCES: usize = 3;

/// The four raw points of the ordinal rating scale:
/// bad, not very good, mostly good, good.
pub const SCALE_POINTS: [f64; 4] = [1.0, 2.0, 3.0, 4.0];

/// A tokenized, lowercased sentence.
pub type Tokens = Vec<String>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Original,
    Degraded,
}

/// Which context the raters (or the model) saw before the target.
///
/// The three mean-rating vectors built from these experiments are written
/// h∅ (`None`), h+ (`Real`) and h− (`Random`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentType {
    None,
    Real,
    Random,
}

impl ExperimentType {
    pub const ALL: [ExperimentType; 3] =
        [ExperimentType::None, ExperimentType::Real, ExperimentType::Random];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentType::None => "none",
            ExperimentType::Real => "real",
            ExperimentType::Random => "random",
        }
    }
}

impl fmt::Display for ExperimentType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(ExperimentType::None),
            "real" => Ok(ExperimentType::Real),
            "random" => Ok(ExperimentType::Random),
            other => Err(Error::invalid_field(
                "experiment",
                format!("unknown experiment type `{other}` (expected none, real or random)"),
            )),
        }
    }
}

/// Scoring direction: left-to-right chain rule, or bidirectional
/// pseudo-likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Uni,
    Bi,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Uni => "uni",
            Direction::Bi => "bi",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uni" => Ok(Direction::Uni),
            "bi" => Ok(Direction::Bi),
            other => Err(Error::invalid_field(
                "direction",
                format!("unknown direction `{other}` (expected uni or bi)"),
            )),
        }
    }
}

/// A target sentence with its three preceding sentences and, optionally, three
/// running sentences from an unrelated document.
#[derive(Debug, Clone, PartialEq)]
pub struct TestSentence {
    pub id: String,
    pub target: Tokens,
    pub real_context: Vec<Tokens>,
    pub random_context: Option<Vec<Tokens>>,
    pub origin: Origin,
    pub degradation_level: u32,
}

impl TestSentence {
    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::invalid_field("id", "id must be non-empty"));
        }
        if self.target.is_empty() {
            return Err(Error::invalid_field("target", "target must have at least 1 token"));
        }
        check_context("real_context", &self.real_context)?;
        if let Some(rc) = &self.random_context {
            check_context("random_context", rc)?;
        }
        match (self.origin, self.degradation_level) {
            (Origin::Original, 0) => Ok(()),
            (Origin::Original, _) => Err(Error::invalid_field(
                "degradation_level",
                "an original sentence must have degradation_level 0",
            )),
            (Origin::Degraded, 0) => Err(Error::invalid_field(
                "degradation_level",
                "a degraded sentence must have degradation_level > 0",
            )),
            (Origin::Degraded, _) => Ok(()),
        }
    }

    /// Context tokens for a variant, flattened in reading order. `None` yields
    /// an empty slice; a missing random context is an error.
    pub fn context_tokens(&self, variant: ExperimentType) -> Result<Vec<String>> {
        let sentences = match variant {
            ExperimentType::None => return Ok(Vec::new()),
            ExperimentType::Real => &self.real_context,
            ExperimentType::Random => self.random_context.as_ref().ok_or_else(|| {
                Error::invalid_field(
                    "random_context",
                    format!("sentence `{}` has no random_context", self.id),
                )
            })?,
        };
        Ok(sentences.iter().flatten().cloned().collect())
    }

    /// Identifies the source paragraph. Degraded variants share the real
    /// context of the original they were derived from.
    pub fn source_key(&self) -> &[Tokens] {
        &self.real_context
    }
}

fn check_context(field: &str, ctx: &[Tokens]) -> Result<()> {
    if ctx.len() != CONTEXT_SENTENCES {
        return Err(Error::invalid_field(
            field,
            format!("{field} must have exactly {CONTEXT_SENTENCES} sentences"),
        ));
    }
    if ctx.iter().any(|s| s.is_empty()) {
        return Err(Error::invalid_field(
            field,
            "each context sentence must have at least 1 token",
        ));
    }
    Ok(())
}

/// One worker's rating of one sentence in one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingRecord {
    pub worker_id: String,
    pub sentence_id: String,
    pub experiment: ExperimentType,
    pub rating: f64,
}

impl RatingRecord {
    pub fn new(
        worker_id: impl Into<String>,
        sentence_id: impl Into<String>,
        experiment: ExperimentType,
        rating: f64,
    ) -> Self {
        RatingRecord {
            worker_id: worker_id.into(),
            sentence_id: sentence_id.into(),
            experiment,
            rating,
        }
    }
}

pub fn is_scale_point(r: f64) -> bool {
    SCALE_POINTS.contains(&r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenLogProb {
    pub t: String,
    pub lp: f64,
}

/// Per-token log-probabilities of one target sentence under one provider,
/// direction and context variant.
///
/// For native unidirectional scoring the list ends with an [`END_MARKER`]
/// entry; `n_target_tokens` never counts that entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenLogProbRecord {
    pub sentence_id: String,
    pub provider: String,
    pub direction: Direction,
    pub context_variant: ExperimentType,
    pub tokens: Vec<TokenLogProb>,
    pub n_target_tokens: usize,
}

impl TokenLogProbRecord {
    pub fn validate(&self) -> Result<()> {
        if self.n_target_tokens == 0 {
            return Err(Error::invalid_field(
                "n_target_tokens",
                "n_target_tokens must be positive",
            ));
        }
        for (i, tok) in self.tokens.iter().enumerate() {
            if !tok.lp.is_finite() {
                return Err(Error::invalid_field(
                    "tokens",
                    format!("token {i} (`{}`) has non-finite log-probability", tok.t),
                ));
            }
            if tok.lp > 0.0 {
                return Err(Error::invalid_field(
                    "tokens",
                    format!(
                        "token {i} (`{}`) has positive log-probability {}",
                        tok.t, tok.lp
                    ),
                ));
            }
        }
        let counted = self.counted_tokens();
        if counted != self.n_target_tokens {
            return Err(Error::invalid_field(
                "n_target_tokens",
                format!(
                    "n_target_tokens is {} but the record has {counted} target tokens",
                    self.n_target_tokens
                ),
            ));
        }
        Ok(())
    }

    /// Number of entries excluding a trailing end marker.
    pub fn counted_tokens(&self) -> usize {
        match self.tokens.last() {
            Some(last) if last.t == END_MARKER => self.tokens.len() - 1,
            _ => self.tokens.len(),
        }
    }

    /// Σ lp over every entry, including the end marker when present.
    pub fn total_lp(&self) -> f64 {
        self.tokens.iter().map(|t| t.lp).sum()
    }
}

/// The five acceptability measures for one scored sentence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureVector {
    pub lp: f64,
    pub mean_lp: f64,
    pub pen_lp: f64,
    pub norm_lp: f64,
    pub slor: f64,
    pub alpha: f64,
    pub n_tokens: usize,
}

/// Measure names in output-column order.
pub const MEASURE_NAMES: [&str; 5] = ["lp", "mean_lp", "pen_lp", "norm_lp", "slor"];

impl MeasureVector {
    pub fn values(&self) -> [f64; 5] {
        [self.lp, self.mean_lp, self.pen_lp, self.norm_lp, self.slor]
    }
}
