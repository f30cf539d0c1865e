//! Test-set construction: graded corruptions of natural target sentences,
//! random-context pairing and HIT bundling.
//!
//! Corruption levels stand in for round-trip translation through different
//! pivot languages. Level `k` applies `k` noise operations in sequence, each
//! drawn from its own seeded stream, so level `k + 1` extends level `k` by
//! one operation.

use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{word_count, Document};
use crate::error::{Error, Result};
use crate::model::{Origin, TestSentence, Tokens, CONTEXT_SENTENCES};
use crate::rng::{derive_seed, rng, sub_rng};

/// Minimum sentences in an eligible paragraph (three context + one target).
pub const MIN_PARAGRAPH_SENTENCES: usize = CONTEXT_SENTENCES + 1;
/// Minimum words in every sentence of an eligible paragraph.
pub const MIN_SENTENCE_WORDS: usize = 5;

pub const HIT_SIZE: usize = 10;
pub const HIT_ORIGINALS: usize = 2;
pub const HIT_DEGRADED: usize = HIT_SIZE - HIT_ORIGINALS;
pub const HIT_MAX_ATTEMPTS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseOp {
    DropWord,
    DuplicateWord,
    SwapAdjacent,
    SubstituteFromVocab,
}

impl NoiseOp {
    pub const ALL: [NoiseOp; 4] = [
        NoiseOp::DropWord,
        NoiseOp::DuplicateWord,
        NoiseOp::SwapAdjacent,
        NoiseOp::SubstituteFromVocab,
    ];

    /// Positions the op can act on, or `None` if it does not apply.
    fn positions(self, tokens: &[String], vocab: &[String]) -> Option<usize> {
        let n = tokens.len();
        match self {
            NoiseOp::DropWord | NoiseOp::SwapAdjacent if n < 2 => None,
            NoiseOp::SwapAdjacent => Some(n - 1),
            NoiseOp::SubstituteFromVocab if vocab.len() < 2 => None,
            _ => Some(n),
        }
    }
}

/// Apply one op at `index`. Substitution writes `replacement`.
pub fn apply_op(
    tokens: &[String],
    op: NoiseOp,
    index: usize,
    replacement: Option<&str>,
) -> Result<Tokens> {
    let n = tokens.len();
    let bad_index = || Error::invalid(format!("{op:?} index {index} out of range for {n} tokens"));
    let mut out = tokens.to_vec();
    match op {
        NoiseOp::DropWord => {
            if n < 2 {
                return Err(Error::invalid("cannot drop from a 1-token sentence"));
            }
            if index >= n {
                return Err(bad_index());
            }
            out.remove(index);
        }
        NoiseOp::DuplicateWord => {
            if index >= n {
                return Err(bad_index());
            }
            out.insert(index, tokens[index].clone());
        }
        NoiseOp::SwapAdjacent => {
            if index + 1 >= n {
                return Err(bad_index());
            }
            out.swap(index, index + 1);
        }
        NoiseOp::SubstituteFromVocab => {
            if index >= n {
                return Err(bad_index());
            }
            let r = replacement
                .ok_or_else(|| Error::invalid("substitution needs a replacement token"))?;
            if r == tokens[index] {
                return Err(Error::invalid("replacement must differ from the replaced token"));
            }
            out[index] = r.to_owned();
        }
    }
    Ok(out)
}

/// Apply `level` noise steps to `sentence`. Each step picks an op uniformly
/// among those applicable, a position uniformly, and for substitution a
/// replacement uniformly from `vocab` minus the replaced token. `vocab` must
/// be sorted and free of duplicates.
pub fn degrade(sentence: &[String], level: u32, seed: u64, vocab: &[String]) -> Result<Tokens> {
    if sentence.len() < 2 {
        return Err(Error::invalid(
            "degradation needs a sentence of at least 2 tokens",
        ));
    }
    if level == 0 {
        return Err(Error::invalid("degradation level must be at least 1"));
    }
    let mut cur = sentence.to_vec();
    for step in 0..level {
        let mut r = sub_rng(seed, &[u64::from(step)]);
        let ops: Vec<(NoiseOp, usize)> = NoiseOp::ALL
            .iter()
            .filter_map(|&op| op.positions(&cur, vocab).map(|p| (op, p)))
            .collect();
        let (op, n_pos) = ops[r.gen_range(0..ops.len())];
        let index = r.gen_range(0..n_pos);
        let replacement = if op == NoiseOp::SubstituteFromVocab {
            let old = &cur[index];
            let skip = vocab.binary_search(old).ok();
            let range = vocab.len() - usize::from(skip.is_some());
            let mut j = r.gen_range(0..range);
            if skip.is_some_and(|s| j >= s) {
                j += 1;
            }
            Some(vocab[j].as_str())
        } else {
            None
        };
        cur = apply_op(&cur, op, index, replacement)?;
    }
    Ok(cur)
}

/// Sorted distinct tokens of a corpus.
pub fn corpus_vocab(corpus: &[Document]) -> Vec<String> {
    let mut v: Vec<String> = corpus
        .iter()
        .flatten()
        .flatten()
        .cloned()
        .collect::<HashSet<_>>()
        .into_iter()
        .collect();
    v.sort_unstable();
    v
}

pub fn is_eligible_paragraph(doc: &Document) -> bool {
    doc.len() >= MIN_PARAGRAPH_SENTENCES
        && doc.iter().all(|s| word_count(s) >= MIN_SENTENCE_WORDS)
}

fn id_width(n: usize) -> usize {
    n.saturating_sub(1).to_string().len().max(3)
}

/// Sample `n_targets` eligible paragraphs, pick one target per paragraph (any
/// sentence with three predecessors) and emit the original plus one degraded
/// variant per level. Originals get ids `tNNN`, variants `tNNN-lK`.
pub fn build_testset(
    corpus: &[Document],
    n_targets: usize,
    levels: &[u32],
    seed: u64,
) -> Result<Vec<TestSentence>> {
    let mut seen = HashSet::new();
    for &l in levels {
        if l == 0 {
            return Err(Error::Usage("degradation levels must be at least 1".into()));
        }
        if !seen.insert(l) {
            return Err(Error::Usage(format!("degradation level {l} repeated")));
        }
    }
    let eligible: Vec<usize> = (0..corpus.len())
        .filter(|&i| is_eligible_paragraph(&corpus[i]))
        .collect();
    if eligible.len() < n_targets {
        return Err(Error::invalid(format!(
            "corpus has {} eligible paragraphs (≥{MIN_PARAGRAPH_SENTENCES} sentences of ≥{MIN_SENTENCE_WORDS} words) but {n_targets} targets were requested; short by {}",
            eligible.len(),
            n_targets - eligible.len()
        )));
    }
    let mut r = rng(seed);
    let mut chosen: Vec<usize> = rand::seq::index::sample(&mut r, eligible.len(), n_targets)
        .into_iter()
        .map(|i| eligible[i])
        .collect();
    chosen.sort_unstable();
    let vocab = corpus_vocab(corpus);
    let width = id_width(n_targets);
    let mut out = Vec::with_capacity(n_targets * (1 + levels.len()));
    for (t, &doc_idx) in chosen.iter().enumerate() {
        let doc = &corpus[doc_idx];
        let mut tr = sub_rng(seed, &[1, t as u64]);
        let target_idx = tr.gen_range(CONTEXT_SENTENCES..doc.len());
        let target = doc[target_idx].clone();
        let real_context = doc[target_idx - CONTEXT_SENTENCES..target_idx].to_vec();
        let base_id = format!("t{t:0width$}");
        out.push(TestSentence {
            id: base_id.clone(),
            target: target.clone(),
            real_context: real_context.clone(),
            random_context: None,
            origin: Origin::Original,
            degradation_level: 0,
        });
        let target_seed = derive_seed(seed, &[2, t as u64]);
        for &level in levels {
            out.push(TestSentence {
                id: format!("{base_id}-l{level}"),
                target: degrade(&target, level, target_seed, &vocab)?,
                real_context: real_context.clone(),
                random_context: None,
                origin: Origin::Degraded,
                degradation_level: level,
            });
        }
    }
    Ok(out)
}

fn contains_run(doc: &Document, run: &[Tokens]) -> bool {
    !run.is_empty() && doc.windows(run.len()).any(|w| w == run)
}

/// Give every sentence three consecutive sentences from a document that does
/// not contain its real context. Sentences sharing a real context (an
/// original and its variants) share the random context.
pub fn assign_random_contexts(
    testset: &[TestSentence],
    corpus: &[Document],
    seed: u64,
) -> Result<Vec<TestSentence>> {
    if corpus.len() < 2 {
        return Err(Error::invalid(
            "random contexts need a corpus of at least 2 documents",
        ));
    }
    let mut r = rng(seed);
    let mut cache: HashMap<&[Tokens], Vec<Tokens>> = HashMap::new();
    let mut out = Vec::with_capacity(testset.len());
    for s in testset {
        let key = s.source_key();
        if !cache.contains_key(key) {
            let candidates: Vec<&Document> = corpus
                .iter()
                .filter(|d| d.len() >= CONTEXT_SENTENCES && !contains_run(d, key))
                .collect();
            if candidates.is_empty() {
                return Err(Error::invalid(format!(
                    "no document other than the source of `{}` has {CONTEXT_SENTENCES} sentences",
                    s.id
                )));
            }
            let doc = candidates[r.gen_range(0..candidates.len())];
            let start = r.gen_range(0..=doc.len() - CONTEXT_SENTENCES);
            cache.insert(key, doc[start..start + CONTEXT_SENTENCES].to_vec());
        }
        let mut t = s.clone();
        t.random_context = Some(cache[key].clone());
        out.push(t);
    }
    Ok(out)
}

/// One crowdsourcing task: 2 originals and 8 degraded sentences.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hit {
    pub hit_id: String,
    pub sentence_ids: Vec<String>,
}

/// Check a HIT: 10 distinct known sentences, 2 originals and 8 degraded, the
/// degraded ones from 8 different sources, none shared with either original.
pub fn validate_hit(hit: &Hit, by_id: &HashMap<&str, &TestSentence>) -> Result<()> {
    let fail = |msg: String| Err(Error::invalid(format!("HIT `{}`: {msg}", hit.hit_id)));
    if hit.sentence_ids.len() != HIT_SIZE {
        return fail(format!(
            "has {} sentences, expected {HIT_SIZE}",
            hit.sentence_ids.len()
        ));
    }
    let mut members = Vec::with_capacity(HIT_SIZE);
    let mut ids = HashSet::new();
    for id in &hit.sentence_ids {
        if !ids.insert(id) {
            return fail(format!("sentence `{id}` appears twice"));
        }
        match by_id.get(id.as_str()) {
            Some(s) => members.push(*s),
            None => return fail(format!("unknown sentence `{id}`")),
        }
    }
    let (originals, degraded): (Vec<&TestSentence>, Vec<&TestSentence>) =
        members.iter().partition(|s| s.origin == Origin::Original);
    if originals.len() != HIT_ORIGINALS {
        return fail(format!(
            "has {} originals, expected {HIT_ORIGINALS}",
            originals.len()
        ));
    }
    let mut sources: HashSet<&[Tokens]> = originals.iter().map(|s| s.source_key()).collect();
    for d in degraded {
        if !sources.insert(d.source_key()) {
            return fail(format!(
                "degraded sentence `{}` shares its source with another member",
                d.id
            ));
        }
    }
    Ok(())
}

/// Partition a test set into HITs. Originals are paired at random; each HIT
/// then takes one degraded sentence from each of the 8 admissible sources
/// with the most sentences left. A failed attempt is retried with a fresh
/// stream up to [`HIT_MAX_ATTEMPTS`] times.
pub fn build_hits(testset: &[TestSentence], seed: u64) -> Result<Vec<Hit>> {
    let originals: Vec<usize> = (0..testset.len())
        .filter(|&i| testset[i].origin == Origin::Original)
        .collect();
    let degraded: Vec<usize> = (0..testset.len())
        .filter(|&i| testset[i].origin == Origin::Degraded)
        .collect();
    if testset.is_empty()
        || testset.len() % HIT_SIZE != 0
        || originals.len() * HIT_DEGRADED != degraded.len() * HIT_ORIGINALS
    {
        return Err(Error::invalid(format!(
            "test set of {} sentences ({} originals, {} degraded) cannot be split into HITs of {HIT_ORIGINALS} originals + {HIT_DEGRADED} degraded",
            testset.len(),
            originals.len(),
            degraded.len()
        )));
    }
    let mut source_ids: HashMap<&[Tokens], usize> = HashMap::new();
    let mut source_of = vec![0usize; testset.len()];
    for (i, s) in testset.iter().enumerate() {
        let next = source_ids.len();
        source_of[i] = *source_ids.entry(s.source_key()).or_insert(next);
    }
    let n_sources = source_ids.len();
    let by_id: HashMap<&str, &TestSentence> =
        testset.iter().map(|s| (s.id.as_str(), s)).collect();

    for attempt in 0..HIT_MAX_ATTEMPTS {
        let mut r = sub_rng(seed, &[attempt as u64]);
        let mut origs = originals.clone();
        origs.shuffle(&mut r);
        let mut pools: Vec<Vec<usize>> = vec![Vec::new(); n_sources];
        for &d in &degraded {
            pools[source_of[d]].push(d);
        }
        for p in &mut pools {
            p.shuffle(&mut r);
        }
        let mut hits = Vec::with_capacity(origs.len() / HIT_ORIGINALS);
        let mut ok = true;
        for (h, pair) in origs.chunks(HIT_ORIGINALS).enumerate() {
            let forbidden: HashSet<usize> = pair.iter().map(|&o| source_of[o]).collect();
            let mut cands: Vec<(usize, u32)> = (0..n_sources)
                .filter(|s| !forbidden.contains(s) && !pools[*s].is_empty())
                .map(|s| (s, r.gen()))
                .collect();
            if cands.len() < HIT_DEGRADED {
                ok = false;
                break;
            }
            cands.sort_by(|a, b| pools[b.0].len().cmp(&pools[a.0].len()).then(a.1.cmp(&b.1)));
            let mut ids: Vec<String> = pair.iter().map(|&o| testset[o].id.clone()).collect();
            for &(s, _) in &cands[..HIT_DEGRADED] {
                let d = pools[s].pop().expect("non-empty pool");
                ids.push(testset[d].id.clone());
            }
            ids.shuffle(&mut r);
            hits.push(Hit {
                hit_id: format!("hit{:02}", h + 1),
                sentence_ids: ids,
            });
        }
        if ok {
            for hit in &hits {
                validate_hit(hit, &by_id)?;
            }
            return Ok(hits);
        }
    }
    Err(Error::invalid(format!(
        "no valid HIT partition found after {HIT_MAX_ATTEMPTS} attempts (seed {seed})"
    )))
}
