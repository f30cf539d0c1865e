//! Regenerate the bundled data files in `data/` through the command line.
//!
//! cargo run --example make_fixtures

use std::path::{Path, PathBuf};

/// Command lines and the (produced, bundled) files they yield.
const STEPS: [(&str, &[(&str, &str)]); 3] = [
    ("toy-corpus --docs 300 --seed 1", &[("corpus.txt", "toy_corpus.txt")]),
    (
        "build-testset --corpus {data}/toy_corpus.txt --seed 42",
        &[("testset.jsonl", "testset.jsonl"), ("hits.jsonl", "hits.jsonl")],
    ),
    (
        "simulate-ratings --testset {data}/testset.jsonl --hits {data}/hits.jsonl --seed 42",
        &[("ratings.csv", "synthetic_ratings.csv")],
    ),
];

fn main() {
    let data = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data");
    std::fs::create_dir_all(&data).expect("data dir");
    let tmp = tempfile::tempdir().expect("temp dir");
    for (i, (cmd, files)) in STEPS.iter().enumerate() {
        let out = tmp.path().join(i.to_string());
        run(cmd, &data, &out);
        for (produced, bundled) in *files {
            std::fs::copy(out.join(produced), data.join(bundled)).expect("copy fixture");
            println!("wrote {}", data.join(bundled).display());
        }
    }
}

fn run(cmd: &str, data: &Path, out: &Path) {
    let line = cmd.replace("{data}", &data.display().to_string());
    let mut args = vec!["acceptability".to_string()];
    args.extend(line.split_whitespace().map(str::to_owned));
    args.extend(["--out".to_string(), out.display().to_string()]);
    let code = acceptability::cli::run(args);
    assert_eq!(code, 0, "`{line}` failed");
}
