mod common;

use std::fs;

use common::{cli, data};

/// The bundled data directory is reproduced by the commands in
/// `examples/make_fixtures.rs`.
#[test]
fn bundled_data_regenerates_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let d = |s: &str| dir.path().join(s).to_str().unwrap().to_owned();
    assert_eq!(cli(&["toy-corpus", "--docs", "300", "--seed", "1", "--out", &d("corpus")]), 0);
    let corpus = d("corpus/corpus.txt");
    assert_eq!(cli(&["build-testset", "--corpus", &corpus, "--seed", "42", "--out", &d("ts")]), 0);
    let (testset, hits) = (d("ts/testset.jsonl"), d("ts/hits.jsonl"));
    assert_eq!(
        cli(&["simulate-ratings", "--testset", &testset, "--hits", &hits, "--seed", "42", "--out", &d("r")]),
        0
    );
    for (made, bundled) in [
        (corpus.as_str(), "toy_corpus.txt"),
        (testset.as_str(), "testset.jsonl"),
        (hits.as_str(), "hits.jsonl"),
        (&d("r/ratings.csv"), "synthetic_ratings.csv"),
    ] {
        assert!(fs::read(made).unwrap() == fs::read(data(bundled)).unwrap(), "{bundled} differs");
    }
}
