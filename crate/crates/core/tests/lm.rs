mod common;

use acceptability::corpus::sentences;
use acceptability::lm::{
    perplexity, score_uni, KneserNey, NgramConfig, NgramLm, Vocab, BOS_ID,
};
use acceptability::simulate::toy_corpus;
use common::{kn_fixture, toks, NaiveKn, KN_HAND_TABLE};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn fixture_model(order: usize) -> KneserNey {
    let s = kn_fixture();
    let v = Vocab::build(s.iter().map(Vec::as_slice), 1).unwrap();
    KneserNey::train(s.iter().map(Vec::as_slice), &v, order, 0.75).unwrap()
}

fn p(m: &KneserNey, hist: &[&str], w: &str) -> f64 {
    let v = m.vocab();
    let ids: Vec<u32> = hist
        .iter()
        .map(|h| if *h == "<s>" { BOS_ID } else { v.id(h) })
        .collect();
    m.prob_ids(&ids, v.id(w))
}

#[test]
fn hand_computed_bigram_table() {
    let m = fixture_model(2);
    for (h, w, want) in KN_HAND_TABLE {
        let got = p(&m, &[h], w);
        assert!((got - want).abs() < 1e-12, "P({w}|{h}) = {got}, want {want}");
    }
}

fn all_histories(alphabet: &[String], len: usize) -> Vec<Vec<String>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|h| {
                alphabet.iter().map(move |a| {
                    let mut g = h.clone();
                    g.push(a.clone());
                    g
                })
            })
            .collect();
    }
    out
}

#[test]
fn matches_naive_oracle_for_orders_2_to_4() {
    let s = kn_fixture();
    for order in 2..=4 {
        for d in [0.3, 0.75] {
            let v = Vocab::build(s.iter().map(Vec::as_slice), 1).unwrap();
            let m = KneserNey::train(s.iter().map(Vec::as_slice), &v, order, d).unwrap();
            let naive = NaiveKn::new(&s, order, d);
            let mut alphabet = naive.predictable.clone();
            alphabet.push("<s>".into());
            for h in all_histories(&alphabet, order - 1) {
                let hr: Vec<&str> = h.iter().map(String::as_str).collect();
                for w in &naive.predictable {
                    let (a, b) = (p(&m, &hr, w), naive.prob(&h, w));
                    assert!((a - b).abs() < 1e-12, "order {order} D {d}: P({w}|{h:?}) {a} vs {b}");
                }
            }
        }
    }
}

#[test]
fn conditionals_sum_to_one_everywhere() {
    let s = kn_fixture();
    for order in 2..=4 {
        let m = fixture_model(order);
        let v = m.vocab();
        let ids: Vec<u32> = (0..v.len() as u32).collect();
        let pred: Vec<u32> = v.predictable().collect();
        let mut hists = vec![Vec::new()];
        for _ in 0..order - 1 {
            hists = hists
                .into_iter()
                .flat_map(|h: Vec<u32>| {
                    ids.iter().map(move |&i| {
                        let mut g = h.clone();
                        g.push(i);
                        g
                    })
                })
                .collect();
        }
        for h in hists {
            let total: f64 = pred.iter().map(|&w| m.prob_ids(&h, w)).sum();
            assert!((total - 1.0).abs() < 1e-12, "order {order} history {h:?}: {total}");
        }
        assert!(!s.is_empty());
    }
}

#[test]
fn short_sentences_carry_at_most_unit_mass() {
    let alphabet = toks("a b c <unk>");
    for order in 2..=3 {
        let m = fixture_model(order);
        let mut cumulative = 0.0;
        for len in 0..=3 {
            let mass: f64 = all_histories(&alphabet, len)
                .iter()
                .map(|s| score_uni(&m, s, &[]).iter().map(|t| t.lp).sum::<f64>().exp())
                .sum();
            assert!(mass > 0.0);
            cumulative += mass;
            assert!(cumulative <= 1.0 + 1e-12, "order {order}, L ≤ {len}: {cumulative}");
        }
    }
}

fn toy_lm(order: usize) -> (NgramLm, Vec<Vec<String>>) {
    let docs = toy_corpus(400, 11);
    let lm = NgramLm::train(
        &sentences(&docs),
        NgramConfig {
            order,
            ..NgramConfig::default()
        },
    )
    .unwrap();
    (lm, sentences(&toy_corpus(60, 12)))
}

#[test]
fn chain_rule_identity() {
    let (lm, held) = toy_lm(3);
    for w in held.windows(4).take(100) {
        let ctx: Vec<String> = w[..3].concat();
        let target = &w[3];
        let sum = |v: &[acceptability::model::TokenLogProb]| v.iter().map(|t| t.lp).sum::<f64>();
        let conditioned = sum(&lm.score_uni(target, &ctx));
        let joint = sum(&lm.score_uni(&[ctx.clone(), target.clone()].concat(), &[]));
        let ctx_only = lm.score_uni(&ctx, &[]);
        let prefix = sum(&ctx_only[..ctx_only.len() - 1]);
        assert!((conditioned - (joint - prefix)).abs() < 1e-9);
    }
}

#[test]
fn bigram_context_only_touches_first_token() {
    let (lm, held) = toy_lm(2);
    for w in held.windows(2).take(50) {
        let (ctx, target) = (&w[0], &w[1]);
        let none = lm.score_uni(target, &[]);
        let real = lm.score_uni(target, ctx);
        assert_eq!(none.len(), real.len());
        for (i, (a, b)) in none.iter().zip(&real).enumerate().skip(1) {
            assert_eq!(a.lp, b.lp, "position {i}");
        }
    }
}

#[test]
fn observed_bigrams_beat_unobserved_order() {
    // Every bigram of "a b c" is observed; "c b a" uses only unseen bigrams.
    let s = kn_fixture();
    let v = Vocab::build(s.iter().map(Vec::as_slice), 1).unwrap();
    let m = KneserNey::train(s.iter().map(Vec::as_slice), &v, 2, 0.75).unwrap();
    let total = |x: &str| score_uni(&m, &toks(x), &[]).iter().map(|t| t.lp).sum::<f64>();
    assert!(total("a b c") > total("c b a"));
    assert!(total("a b") > total("b a"));
}

#[test]
fn natural_sentences_beat_shuffles() {
    let (lm, held) = toy_lm(3);
    let mut r = ChaCha8Rng::seed_from_u64(5);
    let mut wins = 0;
    let mut trials = 0;
    for s in held.iter().take(100) {
        let mut sh = s.clone();
        while sh == *s {
            sh.shuffle(&mut r);
        }
        trials += 1;
        let total = |x: &[String]| lm.score_uni(x, &[]).iter().map(|t| t.lp).sum::<f64>();
        if total(s) > total(&sh) {
            wins += 1;
        }
    }
    assert!(wins * 100 >= 95 * trials, "{wins}/{trials}");
}

#[test]
fn bidirectional_scores_localise_a_corruption() {
    // Two disjoint patterns; swapping the middle token of one for the other's
    // breaks both neighbouring transitions around position 2 only.
    let mut corpus = Vec::new();
    for _ in 0..5 {
        corpus.push(toks("a b c d e"));
        corpus.push(toks("f g h i j"));
    }
    let lm = NgramLm::train(
        &corpus,
        NgramConfig {
            min_count: 1,
            ..NgramConfig::default()
        },
    )
    .unwrap();
    let good = lm.score_bi(&toks("a b c d e"), &[]);
    let bad = lm.score_bi(&toks("a b h d e"), &[]);
    let drops: Vec<f64> = good.iter().zip(&bad).map(|(x, y)| x.lp - y.lp).collect();
    for (i, d) in drops.iter().enumerate() {
        if i != 2 {
            assert!(drops[2] > *d, "drops {drops:?}");
        }
    }
}

#[test]
fn training_text_is_no_more_perplexing_than_its_shuffles() {
    let train: Vec<Vec<String>> = sentences(&toy_corpus(50, 4));
    let lm = NgramLm::train(&train, NgramConfig::default()).unwrap();
    let base = perplexity(lm.forward(), &train).unwrap();
    let mut r = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..5 {
        let shuffled: Vec<Vec<String>> = train
            .iter()
            .map(|s| {
                let mut t = s.clone();
                t.shuffle(&mut r);
                t
            })
            .collect();
        assert!(base <= perplexity(lm.forward(), &shuffled).unwrap());
    }
}

#[test]
fn model_file_round_trip_is_exact() {
    let (lm, held) = toy_lm(3);
    let text = lm.to_json();
    let back = NgramLm::from_json(&text).unwrap();
    assert_eq!(back.to_json(), text);
    for s in held.iter().take(20) {
        assert_eq!(lm.score_uni(s, &[]), back.score_uni(s, &[]));
        assert_eq!(lm.score_bi(s, &[]), back.score_bi(s, &[]));
    }
}

#[test]
fn bad_hyperparameters_are_usage_errors() {
    let s = kn_fixture();
    for order in [1, 6] {
        let e = NgramLm::train(
            &s,
            NgramConfig {
                order,
                ..NgramConfig::default()
            },
        )
        .unwrap_err();
        assert_eq!(e.exit_code(), 1);
    }
    let e = NgramLm::train(&[Vec::new()], NgramConfig::default()).unwrap_err();
    assert_eq!(e.exit_code(), 2);
}
