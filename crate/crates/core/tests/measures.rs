mod common;

use acceptability::lm::{LogProbProvider, NgramConfig, NgramLm, RecordProvider};
use acceptability::measures::{compute_measures, length_penalty, score_variant, MeasureInput};
use acceptability::model::{
    load_logprobs, write_logprobs, Direction, ExperimentType, Origin, TestSentence, END_MARKER,
};
use common::{kn_fixture, toks};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn input(model_lp: f64, unigram_lp: f64, n_tokens: usize, alpha: f64) -> MeasureInput {
    MeasureInput {
        model_lp,
        unigram_lp,
        n_tokens,
        alpha,
    }
}

/// Same formulas along a different floating-point route.
fn oracle(i: MeasureInput) -> [f64; 5] {
    let n = i.n_tokens as f64;
    let pen = i.model_lp * (-i.alpha * ((5.0 + n).ln() - 6f64.ln())).exp();
    [
        i.model_lp,
        i.model_lp * n.recip(),
        pen,
        i.model_lp / i.unigram_lp.abs(),
        i.model_lp / n - i.unigram_lp / n,
    ]
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

// (model_lp, unigram_lp, n, alpha) → (mean, pen, norm, slor), 40-digit evaluation
const FROZEN: [(f64, f64, usize, f64, [f64; 4]); 6] = [
    (-20.0, -40.0, 10, 0.8, [-2.0, -9.608_995_471_851_449_866, -0.5, 2.0]),
    (-3.7, -5.0, 1, 0.8, [-3.7, -3.7, -0.74, 1.3]),
    (
        -123.456,
        -150.25,
        37,
        0.8,
        [-3.336_648_648_648_648_649, -26.027_578_776_831_002_9, -0.821_670_549_084_858_569, 0.724_162_162_162_162_162],
    ),
    (-0.001, -0.5, 2, 1.0, [-0.0005, -0.000_857_142_857_142_857_143, -0.002, 0.2495]),
    (
        -987.5,
        -1200.125,
        250,
        0.6,
        [-3.95, -104.112_708_845_261_39, -0.822_830_955_108_842_829, 0.8505],
    ),
    (
        -14.2,
        -9.1,
        7,
        0.25,
        [-2.028_571_428_571_428_571, -11.940_729_096_602_746_51, -1.560_439_560_439_560_44, -0.728_571_428_571_428_571],
    ),
];

#[test]
fn frozen_high_precision_values() {
    for (lp, ulp, n, a, want) in FROZEN {
        let m = compute_measures(input(lp, ulp, n, a)).unwrap();
        assert_eq!(m.lp, lp);
        let got = [m.mean_lp, m.pen_lp, m.norm_lp, m.slor];
        for (g, w) in got.iter().zip(want) {
            assert!(rel(*g, w) < 1e-14, "{lp} {ulp} {n} {a}: {g} vs {w}");
        }
    }
}

#[test]
fn worked_examples_are_exact() {
    let m = compute_measures(input(-20.0, -40.0, 10, 0.8)).unwrap();
    assert_eq!(m.values()[..2], [-20.0, -2.0]);
    assert_eq!(m.norm_lp, -0.5);
    assert_eq!(m.slor, 2.0);
    assert!((length_penalty(10, 0.8) - 2.0814).abs() < 5e-5);
    let one = compute_measures(input(-3.7, -5.0, 1, 0.8)).unwrap();
    assert_eq!(one.pen_lp, one.lp);
}

#[test]
fn random_inputs_match_independent_route() {
    let mut r = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..1000 {
        let i = input(
            -r.gen_range(0.0..500.0),
            -r.gen_range(1e-3..600.0),
            r.gen_range(1..200),
            r.gen_range(0.0..2.0),
        );
        let got = compute_measures(i).unwrap().values();
        for (g, w) in got.iter().zip(oracle(i)) {
            assert!(rel(*g, w) < 1e-9, "{i:?}");
        }
    }
}

#[test]
fn alpha_limits() {
    for n in [1usize, 5, 40, 300] {
        let m = compute_measures(input(-30.0, -50.0, n, 1e-10)).unwrap();
        assert!(rel(m.pen_lp, m.lp) < 1e-9);
    }
    let ratios: Vec<f64> = [10usize, 1_000, 1_000_000]
        .iter()
        .map(|&n| {
            let m = compute_measures(input(-5.0, -9.0, n, 1.0)).unwrap();
            m.pen_lp / m.mean_lp
        })
        .collect();
    assert!(ratios.windows(2).all(|w| w[0] < w[1]));
    assert!((ratios[2] - 6.0).abs() < 1e-4);
}

proptest! {
    #[test]
    fn strictly_increasing_in_model_lp(
        lo in -400.0f64..-1e-3,
        step in 1e-6f64..50.0,
        ulp in -400.0f64..-1e-3,
        n in 1usize..300,
        alpha in 0.0f64..2.0,
    ) {
        let hi = (lo + step).min(0.0);
        prop_assume!(hi > lo);
        let a = compute_measures(input(lo, ulp, n, alpha)).unwrap().values();
        let b = compute_measures(input(hi, ulp, n, alpha)).unwrap().values();
        for k in 0..5 {
            prop_assert!(b[k] > a[k], "measure {} at {} vs {}", k, lo, hi);
        }
    }

    #[test]
    fn equal_model_and_unigram_is_neutral(lp in -400.0f64..-1e-6, n in 1usize..300) {
        let m = compute_measures(input(lp, lp, n, 0.8)).unwrap();
        prop_assert_eq!(m.slor, 0.0);
        prop_assert_eq!(m.norm_lp, -1.0);
    }

    #[test]
    fn pure_and_reproducible(lp in -400.0f64..0.0, ulp in -400.0f64..-1e-6, n in 1usize..300) {
        let a = compute_measures(input(lp, ulp, n, 0.8)).unwrap();
        let b = compute_measures(input(lp, ulp, n, 0.8)).unwrap();
        prop_assert_eq!(a, b);
    }
}

fn fixture_lm(order: usize) -> NgramLm {
    NgramLm::train(
        &kn_fixture(),
        NgramConfig {
            order,
            min_count: 1,
            ..NgramConfig::default()
        },
    )
    .unwrap()
}

fn sentence(target: &str, real: [&str; 3], random: Option<[&str; 3]>) -> TestSentence {
    TestSentence {
        id: "t001".into(),
        target: toks(target),
        real_context: real.iter().map(|s| toks(s)).collect(),
        random_context: random.map(|r| r.iter().map(|s| toks(s)).collect()),
        origin: Origin::Original,
        degradation_level: 0,
    }
}

#[test]
fn empty_context_scores_the_bare_target() {
    let lm = fixture_lm(3);
    let s = sentence("a b c", ["c", "a", "b"], None);
    let rec = lm.score(&s, ExperimentType::None, Direction::Uni).unwrap();
    assert_eq!(rec.tokens, lm.score_uni(&s.target, &[]));
    assert_eq!(rec.tokens.last().unwrap().t, END_MARKER);
    assert_eq!(rec.n_target_tokens, 3);
    assert_eq!(rec.tokens.len(), 4);
    let bi = lm.score(&s, ExperimentType::None, Direction::Bi).unwrap();
    assert_eq!(bi.tokens.len(), 3);
    assert!(bi.tokens.iter().all(|t| t.t != END_MARKER));
}

#[test]
fn bigram_context_changes_only_the_first_target_token() {
    let lm = fixture_lm(2);
    // "c b" never occurs in training
    let s = sentence("b c", ["a b", "b c", "a c"], None);
    let none = lm.score(&s, ExperimentType::None, Direction::Uni).unwrap();
    let real = lm.score(&s, ExperimentType::Real, Direction::Uni).unwrap();
    assert_ne!(none.tokens[0].lp, real.tokens[0].lp);
    assert_eq!(none.tokens[1..], real.tokens[1..]);
}

#[test]
fn unigram_term_ignores_context() {
    let lm = fixture_lm(3);
    let s = sentence("a b c", ["c a", "b", "a b"], Some(["b c", "c", "c a"]));
    let ms: Vec<_> = ExperimentType::ALL
        .iter()
        .map(|&v| score_variant(&lm, &s, v, lm.unigram(), Direction::Uni, 0.8).unwrap())
        .collect();
    let ulp = lm.unigram().sentence_log_prob(&s.target);
    for m in &ms {
        assert_eq!(m.n_tokens, 3);
        let back = m.lp - m.slor * 3.0;
        assert!((back - ulp).abs() < 1e-12);
        assert!((-m.lp / m.norm_lp - ulp).abs() < 1e-12);
    }
}

#[test]
fn missing_random_context_is_an_error() {
    let lm = fixture_lm(3);
    let s = sentence("a b", ["a", "b", "c"], None);
    assert!(score_variant(&lm, &s, ExperimentType::Random, lm.unigram(), Direction::Uni, 0.8).is_err());
}

#[test]
fn logprobs_file_path_matches_native_scores() {
    let lm = fixture_lm(3);
    let sentences = vec![
        sentence("a b c", ["c a", "b", "a b"], Some(["b c", "c", "c a"])),
        TestSentence {
            id: "t002".into(),
            ..sentence("c a b", ["a", "a c", "b"], Some(["c", "b", "a"]))
        },
    ];
    let mut records = Vec::new();
    for s in &sentences {
        for v in ExperimentType::ALL {
            for d in [Direction::Uni, Direction::Bi] {
                records.push(lm.score(s, v, d).unwrap());
            }
        }
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("logprobs.jsonl");
    write_logprobs(&path, &records).unwrap();
    let loaded = load_logprobs(&path).unwrap();
    assert_eq!(loaded, records);
    let provider = RecordProvider::new(loaded).unwrap();
    for s in &sentences {
        for v in ExperimentType::ALL {
            for d in [Direction::Uni, Direction::Bi] {
                let native = score_variant(&lm, s, v, lm.unigram(), d, 0.8).unwrap();
                let file = score_variant(&provider, s, v, lm.unigram(), d, 0.8).unwrap();
                assert_eq!(native, file);
            }
        }
    }
}
