//! Acceptability measures: normalizations of a sentence log-probability.
//!
//! | measure | value |
//! |---------|-------|
//! | LP      | log P(s) |
//! | MeanLP  | log P(s) / \|s\| |
//! | PenLP   | log P(s) / ((5 + \|s\|) / 6)^α |
//! | NormLP  | −log P(s) / log P_u(s) |
//! | SLOR    | (log P(s) − log P_u(s)) / \|s\| |
//!
//! `P_u` is the unigram sentence probability and `|s|` counts target tokens
//! only. Context never enters `P_u` or `|s|`.

use crate::error::{Error, Result};
use crate::lm::{LogProbProvider, UnigramModel};
use crate::model::{Direction, ExperimentType, MeasureVector, TestSentence};

pub const DEFAULT_ALPHA: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureInput {
    /// Σ of the provider's token log-probabilities (nats).
    pub model_lp: f64,
    /// log P_u(s) over target tokens (nats, strictly negative).
    pub unigram_lp: f64,
    pub n_tokens: usize,
    pub alpha: f64,
}

/// Length penalty ((5 + n) / 6)^α.
pub fn length_penalty(n_tokens: usize, alpha: f64) -> f64 {
    ((5.0 + n_tokens as f64) / 6.0).powf(alpha)
}

pub fn compute_measures(input: MeasureInput) -> Result<MeasureVector> {
    let MeasureInput {
        model_lp,
        unigram_lp,
        n_tokens,
        alpha,
    } = input;
    if n_tokens == 0 {
        return Err(Error::invalid_field("n_tokens", "sentence length must be positive"));
    }
    if unigram_lp == 0.0 {
        return Err(Error::invalid_field(
            "unigram_lp",
            "unigram log-probability is 0, NormLP is undefined",
        ));
    }
    if !(unigram_lp < 0.0) || !unigram_lp.is_finite() {
        return Err(Error::invalid_field(
            "unigram_lp",
            format!("unigram log-probability must be finite and negative, got {unigram_lp}"),
        ));
    }
    if !(model_lp <= 0.0) || !model_lp.is_finite() {
        return Err(Error::invalid_field(
            "model_lp",
            format!("model log-probability must be finite and ≤ 0, got {model_lp}"),
        ));
    }
    if !alpha.is_finite() {
        return Err(Error::invalid_field("alpha", "alpha must be finite"));
    }
    let n = n_tokens as f64;
    Ok(MeasureVector {
        lp: model_lp,
        mean_lp: model_lp / n,
        pen_lp: model_lp / length_penalty(n_tokens, alpha),
        norm_lp: -model_lp / unigram_lp,
        slor: (model_lp - unigram_lp) / n,
        alpha,
        n_tokens,
    })
}

/// Score one test sentence under a context variant and turn the result into
/// measures. `|s|` is the record's `n_target_tokens`; `log P_u(s)` always
/// comes from the native unigram model over the sentence's word tokens.
pub fn score_variant<P: LogProbProvider + ?Sized>(
    provider: &P,
    sentence: &TestSentence,
    variant: ExperimentType,
    unigram: &UnigramModel,
    direction: Direction,
    alpha: f64,
) -> Result<MeasureVector> {
    let record = provider.score(sentence, variant, direction)?;
    compute_measures(MeasureInput {
        model_lp: record.total_lp(),
        unigram_lp: unigram.sentence_log_prob(&sentence.target),
        n_tokens: record.n_target_tokens,
        alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn input(model_lp: f64, unigram_lp: f64, n: usize, alpha: f64) -> MeasureInput {
        MeasureInput {
            model_lp,
            unigram_lp,
            n_tokens: n,
            alpha,
        }
    }

    #[test]
    fn worked_example() {
        let m = compute_measures(input(-20.0, -40.0, 10, 0.8)).unwrap();
        assert_eq!(m.lp, -20.0);
        assert_eq!(m.mean_lp, -2.0);
        assert_eq!(m.norm_lp, -0.5);
        assert_eq!(m.slor, 2.0);
        // 50-digit evaluation: (15/6)^0.8 = 2.0813830185046828510...
        assert!((m.pen_lp - (-9.608_995_471_851_45)).abs() < 1e-12, "{}", m.pen_lp);
        assert!((length_penalty(10, 0.8) - 2.081_383_018_504_683).abs() < 1e-14);
    }

    #[test]
    fn single_token_pen_lp_equals_lp() {
        let m = compute_measures(input(-3.7, -5.0, 1, 0.8)).unwrap();
        assert_eq!(m.pen_lp, m.lp);
    }

    #[test]
    fn equal_model_and_unigram() {
        let m = compute_measures(input(-12.5, -12.5, 4, 0.8)).unwrap();
        assert_eq!(m.slor, 0.0);
        assert_eq!(m.norm_lp, -1.0);
    }

    #[test]
    fn errors() {
        assert!(compute_measures(input(-1.0, 0.0, 3, 0.8)).is_err());
        assert!(compute_measures(input(-1.0, -2.0, 0, 0.8)).is_err());
        assert!(compute_measures(input(0.5, -2.0, 3, 0.8)).is_err());
        assert!(compute_measures(input(f64::NEG_INFINITY, -2.0, 3, 0.8)).is_err());
    }

    #[test]
    fn alpha_zero_gives_lp() {
        for n in 1..30 {
            let m = compute_measures(input(-7.25, -9.0, n, 0.0)).unwrap();
            assert_eq!(m.pen_lp, m.lp);
        }
    }

    #[test]
    fn pen_over_mean_tends_to_six_at_alpha_one() {
        let mut prev = 0.0;
        for &n in &[10usize, 100, 1_000, 100_000, 10_000_000] {
            let m = compute_measures(input(-1.0, -2.0, n, 1.0)).unwrap();
            let ratio = m.pen_lp / m.mean_lp;
            assert!(ratio > prev && ratio < 6.0);
            prev = ratio;
        }
        assert!((prev - 6.0).abs() < 1e-5);
    }

    #[test]
    fn small_alpha_approaches_lp() {
        let lp = -11.0;
        let m = compute_measures(input(lp, -20.0, 25, 1e-9)).unwrap();
        assert!((m.pen_lp - lp).abs() < 1e-7);
    }
}
