use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use super::{
    out_dir, AggregateArgs, BuildTestsetArgs, EvaluateArgs, ScoreArgs, SimulateRatingsArgs,
    ToyCorpusArgs, TrainLmArgs,
};
use crate::corpus::{corpus_to_string, load_corpus, sentences};
use crate::error::{Error, Result};
use crate::lm::{LogProbProvider, NgramConfig, NgramLm, RecordProvider, UnigramModel};
use crate::measures::score_variant;
use crate::model::{
    load_hits, load_logprobs, load_mean_ratings, load_ratings, load_scores, load_testset,
    write_atomic, write_hits, write_json, write_mean_ratings, write_ratings, write_scores,
    write_testset, Direction, ExperimentType, Origin, ScoreRow, TestSentence, MEASURE_NAMES,
};
use crate::ratings::{run_pipeline, ExperimentAudit, PipelineConfig, RatingSet};
use crate::rng::derive_seed;
use crate::simulate::{self, AnnotatorConfig};
use crate::stats::pearson;
use crate::testgen::{self, HIT_DEGRADED, HIT_ORIGINALS, HIT_SIZE};

pub(crate) fn originals_of(testset: &[TestSentence]) -> HashSet<String> {
    testset
        .iter()
        .filter(|s| s.origin == Origin::Original)
        .map(|s| s.id.clone())
        .collect()
}

fn hit_shape_ok(testset: &[TestSentence]) -> bool {
    let n_orig = testset
        .iter()
        .filter(|s| s.origin == Origin::Original)
        .count();
    let n_deg = testset.len() - n_orig;
    !testset.is_empty()
        && testset.len() % HIT_SIZE == 0
        && n_orig * HIT_DEGRADED == n_deg * HIT_ORIGINALS
}

pub fn build_testset(a: &BuildTestsetArgs, seed: u64) -> Result<()> {
    if a.n_targets == 0 {
        return Err(Error::Usage("--n-targets must be positive".into()));
    }
    let corpus = load_corpus(&a.corpus)?;
    let ts = testgen::build_testset(&corpus, a.n_targets, &a.levels.0, derive_seed(seed, &[0]))?;
    let ts = testgen::assign_random_contexts(&ts, &corpus, derive_seed(seed, &[1]))?;
    out_dir(&a.out)?;
    write_testset(&a.out.join("testset.jsonl"), &ts)?;
    let mut per_level: BTreeMap<u32, usize> = BTreeMap::new();
    for s in &ts {
        *per_level.entry(s.degradation_level).or_default() += 1;
    }
    println!("{} sentences written to {}", ts.len(), a.out.join("testset.jsonl").display());
    for (l, n) in per_level {
        println!("  level {l}: {n}");
    }
    if hit_shape_ok(&ts) {
        let hits = testgen::build_hits(&ts, derive_seed(seed, &[2]))?;
        write_hits(&a.out.join("hits.jsonl"), &hits)?;
        println!("{} HITs written to {}", hits.len(), a.out.join("hits.jsonl").display());
    } else {
        log::warn!(
            "test set does not divide into HITs of {HIT_ORIGINALS} originals + {HIT_DEGRADED} degraded; hits.jsonl not written"
        );
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct AggregateAudit {
    experiments: Vec<ExperimentAudit>,
    /// Outliers removed over all experiments, as a fraction of the ratings
    /// that survived worker filtering.
    overall_discard_fraction: f64,
}

pub fn aggregate(a: &AggregateArgs) -> Result<()> {
    let records = load_ratings(&a.ratings)?;
    if records.is_empty() {
        return Err(Error::invalid(format!(
            "{} contains no ratings",
            a.ratings.display()
        )));
    }
    let originals = match &a.testset {
        Some(p) => originals_of(&load_testset(p)?),
        None => {
            log::warn!("no --testset given; workers cannot be screened on original sentences");
            HashSet::new()
        }
    };
    let cfg = PipelineConfig {
        min_fraction: a.min_fraction,
        outlier_sd: a.outlier_sd,
    };
    let mut rows = Vec::new();
    let mut audits = Vec::new();
    for rs in RatingSet::split_raw(records).into_values() {
        let out = run_pipeline(rs, &originals, cfg)?;
        rows.extend(out.means.rows());
        audits.push(out.audit);
    }
    rows.sort_by(|x, y| {
        x.sentence_id
            .cmp(&y.sentence_id)
            .then(x.experiment.cmp(&y.experiment))
    });
    let (removed, kept) = audits.iter().fold((0, 0), |(r, k), au| {
        (
            r + au.removed_ratings.len(),
            k + au.raw_records - au.worker_filter.records_removed,
        )
    });
    let audit = AggregateAudit {
        overall_discard_fraction: removed as f64 / kept as f64,
        experiments: audits,
    };
    out_dir(&a.out)?;
    write_mean_ratings(&a.out.join("mean_ratings.csv"), &rows)?;
    write_json(&a.out.join("audit.json"), &audit)?;
    for au in &audit.experiments {
        println!(
            "{}: {} of {} workers kept, {} users calibrated, {} outliers discarded ({:.1}%)",
            au.experiment,
            au.worker_filter.workers_after,
            au.worker_filter.workers_before,
            au.calibration.adjusted_users.len(),
            au.removed_ratings.len(),
            100.0 * au.discard_fraction
        );
    }
    println!(
        "overall: {removed} of {kept} ratings discarded ({:.1}%)",
        100.0 * audit.overall_discard_fraction
    );
    Ok(())
}

pub fn train_lm(a: &TrainLmArgs) -> Result<()> {
    let sents = sentences(&load_corpus(&a.corpus)?);
    let lm = NgramLm::train(
        &sents,
        NgramConfig {
            order: a.order,
            discount: a.discount,
            min_count: a.min_count,
            unigram_delta: a.unigram_delta,
        },
    )?;
    out_dir(&a.out)?;
    lm.save(&a.out.join("model.json"))?;
    println!(
        "order-{} model over {} sentences, vocabulary {} → {}",
        a.order,
        sents.len(),
        lm.forward().vocab().len(),
        a.out.join("model.json").display()
    );
    if let Some(h) = &a.heldout {
        let ppl = lm.perplexity(&sentences(&load_corpus(h)?))?;
        println!("heldout perplexity: {ppl:.4}");
    }
    Ok(())
}

fn score_all<P: LogProbProvider + ?Sized>(
    provider: &P,
    testset: &[TestSentence],
    variant: ExperimentType,
    direction: Direction,
    unigram: &UnigramModel,
    alpha: f64,
) -> Result<Vec<ScoreRow>> {
    if !provider.supports(direction) {
        return Err(Error::Usage(format!(
            "provider `{}` has no `{direction}` scores",
            provider.name()
        )));
    }
    let mut sorted: Vec<&TestSentence> = testset.iter().collect();
    sorted.sort_by(|x, y| x.id.cmp(&y.id));
    sorted
        .into_iter()
        .map(|s| {
            let m = score_variant(provider, s, variant, unigram, direction, alpha)?;
            Ok(ScoreRow {
                sentence_id: s.id.clone(),
                provider: provider.name().to_owned(),
                direction,
                context_variant: variant,
                lp: m.lp,
                mean_lp: m.mean_lp,
                pen_lp: m.pen_lp,
                norm_lp: m.norm_lp,
                slor: m.slor,
                n_tokens: m.n_tokens,
            })
        })
        .collect()
}

pub fn score(a: &ScoreArgs) -> Result<()> {
    if !(a.alpha.is_finite() && a.alpha >= 0.0) {
        return Err(Error::Usage(format!(
            "--alpha must be finite and non-negative, got {}",
            a.alpha
        )));
    }
    let testset = load_testset(&a.testset)?;
    let variant = a.context.into();
    let direction = a.direction.into();
    let rows = match (&a.model, &a.logprobs) {
        (Some(m), None) => {
            let lm = NgramLm::load(m)?;
            let own;
            let uni = match &a.unigram {
                Some(p) => {
                    own = UnigramModel::load(p)?;
                    &own
                }
                None => lm.unigram(),
            };
            score_all(&lm, &testset, variant, direction, uni, a.alpha)?
        }
        (None, Some(l)) => {
            let uni_path = a
                .unigram
                .as_ref()
                .ok_or_else(|| Error::Usage("--logprobs requires --unigram".into()))?;
            let uni = UnigramModel::load(uni_path)?;
            let provider = RecordProvider::new(load_logprobs(l)?)?;
            score_all(&provider, &testset, variant, direction, &uni, a.alpha)?
        }
        _ => {
            return Err(Error::Usage(
                "exactly one of --model and --logprobs is required".into(),
            ))
        }
    };
    out_dir(&a.out)?;
    write_scores(&a.out.join("scores.csv"), &rows)?;
    println!(
        "{} sentences scored ({direction}, context {variant}) → {}",
        rows.len(),
        a.out.join("scores.csv").display()
    );
    Ok(())
}

/// One row of correlations.csv.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub provider: String,
    pub direction: Direction,
    pub context_variant: ExperimentType,
    pub measure: String,
    /// Which human ratings the measure is compared with.
    pub experiment: ExperimentType,
    pub n: usize,
    pub pearson: f64,
}

type ScoreKey = (String, &'static str, ExperimentType);

pub fn evaluate(a: &EvaluateArgs) -> Result<()> {
    let mut groups: BTreeMap<ScoreKey, (Direction, BTreeMap<String, [f64; 5]>)> = BTreeMap::new();
    for p in &a.scores {
        for row in load_scores(p)? {
            let key = (row.provider.clone(), row.direction.as_str(), row.context_variant);
            let g = &mut groups.entry(key).or_insert((row.direction, BTreeMap::new())).1;
            if g.insert(row.sentence_id.clone(), row.values()).is_some() {
                return Err(Error::invalid(format!(
                    "sentence `{}` scored twice by {}/{}/{}",
                    row.sentence_id, row.provider, row.direction, row.context_variant
                )));
            }
        }
    }
    let means = load_mean_ratings(&a.mean_ratings)?;
    let experiments: BTreeSet<ExperimentType> = means.iter().map(|r| r.experiment).collect();
    if groups.is_empty() || experiments.is_empty() {
        return Err(Error::invalid("scores or mean ratings are empty"));
    }
    let mut out = Vec::new();
    for ((provider, _, variant), (direction, scores)) in &groups {
        for &exp in &experiments {
            let human: BTreeMap<&str, f64> = means
                .iter()
                .filter(|r| r.experiment == exp)
                .map(|r| (r.sentence_id.as_str(), r.mean))
                .collect();
            let aligned: Vec<(&[f64; 5], f64)> = scores
                .iter()
                .filter_map(|(id, v)| human.get(id.as_str()).map(|&h| (v, h)))
                .collect();
            if aligned.len() < 3 {
                return Err(Error::invalid(format!(
                    "only {} sentences align between {provider}/{direction}/{variant} scores and `{exp}` ratings; need 3",
                    aligned.len()
                )));
            }
            let ys: Vec<f64> = aligned.iter().map(|(_, h)| *h).collect();
            for (i, name) in MEASURE_NAMES.iter().enumerate() {
                let xs: Vec<f64> = aligned.iter().map(|(v, _)| v[i]).collect();
                out.push(CorrelationRow {
                    provider: provider.clone(),
                    direction: *direction,
                    context_variant: *variant,
                    measure: (*name).to_owned(),
                    experiment: exp,
                    n: aligned.len(),
                    pearson: pearson(&xs, &ys).map_err(|e| {
                        Error::invalid(format!("{provider}/{direction}/{variant} {name} vs `{exp}`: {e}"))
                    })?,
                });
            }
        }
    }
    out_dir(&a.out)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &out {
        w.serialize(r).expect("serializable row");
    }
    write_atomic(
        &a.out.join("correlations.csv"),
        &w.into_inner().expect("in-memory writer"),
    )?;
    println!("provider\tdirection\tcontext\tmeasure\tratings\tn\tpearson");
    for r in &out {
        println!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{:.3}",
            r.provider, r.direction, r.context_variant, r.measure, r.experiment, r.n, r.pearson
        );
    }
    Ok(())
}

pub fn simulate_ratings(a: &SimulateRatingsArgs, seed: u64) -> Result<()> {
    let testset = load_testset(&a.testset)?;
    let hits = load_hits(&a.hits)?;
    let cfg = AnnotatorConfig {
        workers_per_hit: a.workers_per_hit,
        pool_size: a.pool_size,
        ..AnnotatorConfig::default()
    };
    let mut records =
        simulate::simulate_ratings(&testset, &hits, &ExperimentType::ALL, &cfg, seed)?;
    records.sort_by(|x, y| {
        (x.experiment, &x.sentence_id, &x.worker_id).cmp(&(y.experiment, &y.sentence_id, &y.worker_id))
    });
    out_dir(&a.out)?;
    write_ratings(&a.out.join("ratings.csv"), &records)?;
    println!(
        "{} ratings written to {}",
        records.len(),
        a.out.join("ratings.csv").display()
    );
    Ok(())
}

pub fn toy_corpus(a: &ToyCorpusArgs, seed: u64) -> Result<()> {
    if a.docs == 0 {
        return Err(Error::Usage("--docs must be positive".into()));
    }
    out_dir(&a.out)?;
    let path = a.out.join("corpus.txt");
    write_atomic(
        &path,
        corpus_to_string(&simulate::toy_corpus(a.docs, seed)).as_bytes(),
    )?;
    println!("{} documents written to {}", a.docs, path.display());
    Ok(())
}
