#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::PathBuf;

pub fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

pub fn toks(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_owned).collect()
}

/// Five short sentences over {a, b, c}; [`KN_HAND_TABLE`] was worked out by
/// hand from these.
pub const KN_FIXTURE: [&str; 5] = ["a b", "a c", "b c", "a b c", "c a"];

/// Bigram conditionals P(w | h) of [`KN_FIXTURE`] at D = 0.75, min_count 1.
/// Bigram counts after padding:
/// <s>a 3, <s>b 1, <s>c 1, ab 2, ac 1, a</s> 1, bc 2, b</s> 1, ca 1, c</s> 3.
/// Continuation counts: a 2, b 2, c 3, </s> 3 (sum 10, 4 types); five
/// predictable tokens, so the lowest level mixes in 1/5.
pub const KN_HAND_TABLE: [(&str, &str, f64); 19] = [
    ("<s>", "a", 0.53325),
    ("<s>", "b", 0.13325),
    ("<s>", "c", 0.17825),
    ("<s>", "</s>", 0.12825),
    ("<s>", "<unk>", 0.027),
    ("a", "a", 0.1040625),
    ("a", "b", 0.4165625),
    ("a", "c", 0.2228125),
    ("a", "</s>", 0.2228125),
    ("a", "<unk>", 0.03375),
    ("b", "</s>", 0.6775 / 3.0),
    ("c", "a", 0.131875),
    ("c", "b", 0.069375),
    ("c", "c", 0.106875),
    ("c", "</s>", 0.669375),
    ("c", "<unk>", 0.0225),
    // unseen history: continuation unigram
    ("zzz", "a", 0.185),
    ("zzz", "c", 0.285),
    ("zzz", "<unk>", 0.06),
];

pub fn kn_fixture() -> Vec<Vec<String>> {
    KN_FIXTURE.iter().map(|s| toks(s)).collect()
}

/// Run the binary's entry point in-process.
pub fn cli(args: &[&str]) -> i32 {
    let mut v = vec!["acceptability"];
    v.extend_from_slice(args);
    acceptability::cli::run(v)
}

/// Straightforward interpolated Kneser-Ney over strings, rebuilt from the raw
/// sentences. Shares no code with the library model.
pub struct NaiveKn {
    order: usize,
    d: f64,
    /// tables[k - 1]: k-gram → count (raw at the top, continuation below)
    tables: Vec<HashMap<Vec<String>, f64>>,
    pub predictable: Vec<String>,
}

impl NaiveKn {
    pub fn new(sentences: &[Vec<String>], order: usize, d: f64) -> Self {
        let mut top: HashMap<Vec<String>, f64> = HashMap::new();
        let mut words = BTreeSet::new();
        for s in sentences {
            let mut p = vec!["<s>".to_string(); order - 1];
            p.extend(s.iter().cloned());
            p.push("</s>".into());
            words.extend(s.iter().cloned());
            for i in 0..=p.len() - order {
                *top.entry(p[i..i + order].to_vec()).or_default() += 1.0;
            }
        }
        let mut tables = vec![HashMap::new(); order];
        tables[order - 1] = top;
        for k in (1..order).rev() {
            let mut left: HashMap<Vec<String>, HashSet<String>> = HashMap::new();
            for g in tables[k].keys() {
                left.entry(g[1..].to_vec()).or_default().insert(g[0].clone());
            }
            tables[k - 1] = left.into_iter().map(|(g, s)| (g, s.len() as f64)).collect();
        }
        let mut predictable: Vec<String> = words.into_iter().collect();
        predictable.push("<unk>".into());
        predictable.push("</s>".into());
        NaiveKn {
            order,
            d,
            tables,
            predictable,
        }
    }

    fn level(&self, k: usize, h: &[String], w: &str) -> f64 {
        let t = &self.tables[k - 1];
        let (mut sum, mut types, mut c) = (0.0, 0.0, 0.0);
        for (g, &n) in t {
            if g[..k - 1] == *h {
                sum += n;
                types += 1.0;
                if g[k - 1] == w {
                    c = n;
                }
            }
        }
        let lower = if k == 1 {
            1.0 / self.predictable.len() as f64
        } else {
            self.level(k - 1, &h[1..], w)
        };
        if sum == 0.0 {
            return lower;
        }
        ((c - self.d).max(0.0) + self.d * types * lower) / sum
    }

    /// P(w | h) where `h` holds exactly `order - 1` tokens (use "<s>" to pad).
    pub fn prob(&self, h: &[String], w: &str) -> f64 {
        assert_eq!(h.len(), self.order - 1);
        let known = |x: &str| x == "<s>" || self.predictable.iter().any(|p| p == x);
        let h: Vec<String> = h
            .iter()
            .map(|x| if known(x) { x.clone() } else { "<unk>".into() })
            .collect();
        let w = if known(w) { w } else { "<unk>" };
        self.level(self.order, &h, w)
    }
}
