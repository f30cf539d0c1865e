mod common;

use std::collections::{HashMap, HashSet};

use acceptability::corpus::{load_corpus, Document};
use acceptability::model::{Origin, TestSentence, CONTEXT_SENTENCES};
use acceptability::simulate::toy_corpus;
use acceptability::testgen::{
    assign_random_contexts, build_hits, build_testset, degrade, is_eligible_paragraph,
    validate_hit, HIT_DEGRADED, HIT_ORIGINALS, HIT_SIZE,
};
use acceptability::Error;
use common::{data, toks};
use proptest::prelude::*;

fn corpus() -> Vec<Document> {
    toy_corpus(120, 9)
}

fn full(seed: u64) -> Vec<TestSentence> {
    let c = corpus();
    let ts = build_testset(&c, 30, &[1, 2, 3, 4], seed).unwrap();
    assign_random_contexts(&ts, &c, seed + 1).unwrap()
}

#[test]
fn shape_of_the_test_set() {
    let ts = full(5);
    assert_eq!(ts.len(), 150);
    let ids: HashSet<&str> = ts.iter().map(|s| s.id.as_str()).collect();
    assert_eq!(ids.len(), 150);
    for chunk in ts.chunks(5) {
        let orig = &chunk[0];
        assert_eq!(orig.origin, Origin::Original);
        assert_eq!(orig.degradation_level, 0);
        for (k, d) in chunk[1..].iter().enumerate() {
            assert_eq!(d.id, format!("{}-l{}", orig.id, k + 1));
            assert_eq!(d.origin, Origin::Degraded);
            assert_eq!(d.degradation_level, k as u32 + 1);
            assert_eq!(d.real_context, orig.real_context);
            assert_eq!(d.random_context, orig.random_context);
        }
    }
    for s in &ts {
        s.validate().unwrap();
    }
}

#[test]
fn real_context_precedes_the_target_in_its_paragraph() {
    let c = corpus();
    for s in full(6).iter().filter(|s| s.origin == Origin::Original) {
        let mut run = s.real_context.clone();
        run.push(s.target.clone());
        let hits = c
            .iter()
            .filter(|d| is_eligible_paragraph(d) && d.windows(run.len()).any(|w| w == run.as_slice()))
            .count();
        assert!(hits >= 1, "{}", s.id);
    }
}

#[test]
fn random_context_comes_from_another_document() {
    let c = corpus();
    for s in full(7) {
        let random = s.random_context.as_ref().unwrap();
        assert_eq!(random.len(), CONTEXT_SENTENCES);
        let source = c.iter().find(|d| d.windows(3).any(|w| w == random.as_slice())).unwrap();
        assert!(!source.windows(3).any(|w| w == s.real_context.as_slice()));
        assert_ne!(random, &s.real_context);
    }
}

#[test]
fn seeds_determine_the_output() {
    assert_eq!(full(8), full(8));
    assert_ne!(full(8), full(9));
}

#[test]
fn bad_requests() {
    let c = corpus();
    assert!(matches!(build_testset(&c, 5, &[0, 1], 1), Err(Error::Usage(_))));
    assert!(matches!(build_testset(&c, 5, &[2, 2], 1), Err(Error::Usage(_))));
    let eligible = c.iter().filter(|d| is_eligible_paragraph(d)).count();
    let e = build_testset(&c, eligible + 1, &[1], 1).unwrap_err();
    assert!(e.to_string().contains("short by 1"), "{e}");
    assert_eq!(build_testset(&c, 1, &[], 1).unwrap().len(), 1);
}

#[test]
fn hits_partition_the_test_set() {
    let ts = full(10);
    let hits = build_hits(&ts, 3).unwrap();
    assert_eq!(hits.len(), ts.len() / HIT_SIZE);
    let by_id: HashMap<&str, &TestSentence> = ts.iter().map(|s| (s.id.as_str(), s)).collect();
    let mut seen = HashSet::new();
    for h in &hits {
        validate_hit(h, &by_id).unwrap();
        let originals = h.sentence_ids.iter().filter(|id| !id.contains("-l")).count();
        assert_eq!(originals, HIT_ORIGINALS);
        assert_eq!(h.sentence_ids.len() - originals, HIT_DEGRADED);
        for id in &h.sentence_ids {
            assert!(seen.insert(id.clone()));
        }
    }
    assert_eq!(seen.len(), ts.len());
    assert_eq!(hits, build_hits(&ts, 3).unwrap());
}

#[test]
fn hits_reject_unpartitionable_sets() {
    let c = corpus();
    let ts = build_testset(&c, 10, &[1, 2], 2).unwrap();
    assert!(build_hits(&ts, 1).is_err());
}

#[test]
fn validate_hit_catches_shared_sources() {
    let ts = full(11);
    let by_id: HashMap<&str, &TestSentence> = ts.iter().map(|s| (s.id.as_str(), s)).collect();
    let mut h = build_hits(&ts, 4).unwrap().remove(0);
    let orig = h.sentence_ids.iter().find(|id| !id.contains("-l")).unwrap().clone();
    let sibling = format!("{orig}-l1");
    let pos = h.sentence_ids.iter().position(|id| id.contains("-l")).unwrap();
    h.sentence_ids[pos] = sibling;
    assert!(validate_hit(&h, &by_id).is_err());
}

#[test]
fn bundled_testset_is_consistent_with_bundled_corpus() {
    let c = load_corpus(&data("toy_corpus.txt")).unwrap();
    let ts = acceptability::model::load_testset(&data("testset.jsonl")).unwrap();
    let hits = acceptability::model::load_hits(&data("hits.jsonl")).unwrap();
    assert_eq!(ts.len(), 250);
    assert_eq!(hits.len(), 25);
    let by_id: HashMap<&str, &TestSentence> = ts.iter().map(|s| (s.id.as_str(), s)).collect();
    for h in &hits {
        validate_hit(h, &by_id).unwrap();
    }
    for s in ts.iter().filter(|s| s.origin == Origin::Original) {
        let mut run = s.real_context.clone();
        run.push(s.target.clone());
        assert!(c.iter().any(|d| d.windows(4).any(|w| w == run.as_slice())));
    }
}

fn edit_distance(a: &[String], b: &[String]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for (i, x) in a.iter().enumerate() {
        let mut cur = vec![i + 1];
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur.push(sub.min(prev[j + 1] + 1).min(cur[j] + 1));
        }
        prev = cur;
    }
    prev[b.len()]
}

#[test]
fn corruption_grows_with_level_on_average() {
    let c = corpus();
    let vocab = acceptability::testgen::corpus_vocab(&c);
    let sentences: Vec<_> = c.iter().flatten().take(20).cloned().collect();
    let mut means = Vec::new();
    let mut unchanged = 0usize;
    for level in 1..=6u32 {
        let mut total = 0usize;
        for seed in 0..100u64 {
            for s in &sentences {
                let d = degrade(s, level, seed, &vocab).unwrap();
                total += edit_distance(s, &d);
                unchanged += usize::from(&d == s);
            }
        }
        means.push(total as f64 / 2000.0);
    }
    assert!(means.windows(2).all(|w| w[1] >= w[0]), "{means:?}");
    assert!(means[0] >= 1.0);
    // cancelling steps (a swap undone, a duplicate dropped) are rare
    assert!(unchanged < 12_000 / 50, "{unchanged}");
}

#[test]
fn short_sentence_paragraphs_are_never_sampled() {
    let long = |w: &str| toks(&format!("{w} one two three four five ."));
    let mut bad = vec![long("a"), long("b"), toks("only four words here ."), long("c")];
    bad.push(long("d"));
    let good = vec![long("e"), long("f"), long("g"), long("h")];
    let c = vec![bad, good.clone()];
    for seed in 0..20 {
        let ts = build_testset(&c, 1, &[], seed).unwrap();
        assert!(good.contains(&ts[0].target));
    }
    assert!(build_testset(&c, 2, &[], 0).is_err());
}

#[test]
fn two_document_corpus_forces_the_other_document() {
    let long = |w: &str| toks(&format!("{w} one two three four five ."));
    let a: Document = ["a", "b", "c", "d", "e"].iter().map(|w| long(w)).collect();
    let b: Document = ["f", "g", "h", "i"].iter().map(|w| long(w)).collect();
    let c = vec![a, b.clone()];
    for seed in 0..10 {
        let ts = build_testset(&c[..1], 1, &[1], seed).unwrap();
        for s in assign_random_contexts(&ts, &c, seed).unwrap() {
            let r = s.random_context.unwrap();
            assert!(b.windows(3).any(|w| w == r.as_slice()));
        }
    }
}

proptest! {
    #[test]
    fn degradation_changes_the_sentence(seed in any::<u64>(), level in 1u32..6) {
        let s = toks("the quick brown fox jumps over the lazy dog");
        let vocab: Vec<String> = {
            let mut v = s.clone();
            v.extend(toks("cat sat mat"));
            v.sort();
            v.dedup();
            v
        };
        let d = degrade(&s, level, seed, &vocab).unwrap();
        prop_assert!(!d.is_empty());
        prop_assert!(d.len() + level as usize >= s.len());
        prop_assert!(d.len() <= s.len() + level as usize);
        prop_assert_eq!(&d, &degrade(&s, level, seed, &vocab).unwrap());
    }
}
