//! Seeded synthetic data: a topical toy corpus and simulated annotators.
//!
//! The toy corpus is generated from a small template grammar. Each document
//! picks a topic and a protagonist and strings together template sentences,
//! so the text has stable local word order (good for n-gram models) and
//! document-level topical coherence (good for real vs random contexts).
//!
//! The annotator simulator rates every sentence of every HIT with a fixed
//! number of workers per experiment. A sentence has a latent acceptability
//! set by its degradation level plus item noise. A worker's rating is that
//! latent value plus the worker's bias and rating noise, rounded onto the
//! 4-point scale. With probability `error_prob` a rating is instead drawn
//! uniformly from the scale; this probability is higher when a context is
//! shown. A real context also adds `coherence_shift` to the latent value.
//! Spammers rate uniformly at random throughout.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::model::{ExperimentType, RatingRecord, TestSentence, SCALE_POINTS};
use crate::rng::sub_rng;
use crate::testgen::Hit;

struct Topic {
    nouns: &'static [&'static str],
    places: &'static [&'static str],
    tverbs: &'static [&'static str],
    iverbs: &'static [&'static str],
    adjs: &'static [&'static str],
}

const TOPICS: [Topic; 6] = [
    Topic {
        nouns: &["baker", "oven", "loaf", "cake", "knife", "kettle", "cook", "bowl", "spoon", "pie"],
        places: &["kitchen", "bakery", "pantry", "market"],
        tverbs: &["baked", "sliced", "washed", "carried", "filled", "dropped"],
        iverbs: &["cooled", "waited", "rested", "smoked", "hummed"],
        adjs: &["warm", "fresh", "sweet", "crusty", "heavy", "clean"],
    },
    Topic {
        nouns: &["farmer", "horse", "cow", "tractor", "fence", "barn", "goat", "field", "sheep", "hay"],
        places: &["farm", "meadow", "valley", "stable"],
        tverbs: &["fed", "mended", "pulled", "counted", "ploughed", "sold"],
        iverbs: &["grazed", "slept", "wandered", "rested", "grew"],
        adjs: &["muddy", "old", "tired", "brown", "quiet", "strong"],
    },
    Topic {
        nouns: &["sailor", "boat", "net", "anchor", "wave", "gull", "captain", "rope", "sail", "fish"],
        places: &["harbour", "beach", "island", "pier"],
        tverbs: &["caught", "tied", "repaired", "spotted", "steered", "hauled"],
        iverbs: &["drifted", "sank", "floated", "returned", "rolled"],
        adjs: &["salty", "wet", "blue", "rough", "calm", "wide"],
    },
    Topic {
        nouns: &["driver", "bus", "tram", "bridge", "shop", "clerk", "lamp", "street", "tower", "crowd"],
        places: &["city", "station", "square", "office"],
        tverbs: &["painted", "crossed", "closed", "watched", "built", "cleaned"],
        iverbs: &["stopped", "waited", "arrived", "glowed", "stood"],
        adjs: &["busy", "noisy", "tall", "grey", "bright", "crowded"],
    },
    Topic {
        nouns: &["teacher", "pupil", "book", "desk", "lesson", "chalk", "map", "pencil", "bell", "poem"],
        places: &["school", "library", "classroom", "hall"],
        tverbs: &["read", "wrote", "opened", "borrowed", "explained", "studied"],
        iverbs: &["listened", "laughed", "rang", "learned", "waited"],
        adjs: &["new", "difficult", "short", "careful", "clever", "long"],
    },
    Topic {
        nouns: &["hunter", "fox", "owl", "tree", "river", "deer", "path", "stone", "leaf", "wolf"],
        places: &["forest", "hill", "cave", "woods"],
        tverbs: &["followed", "found", "climbed", "crossed", "heard", "chased"],
        iverbs: &["hid", "howled", "ran", "fell", "vanished"],
        adjs: &["dark", "green", "wild", "silent", "cold", "deep"],
    },
];

const NAMES: [&str; 12] = [
    "anna", "ben", "clara", "david", "ella", "frank", "grace", "henry", "iris", "jack", "kate",
    "leo",
];

const TIMES: [&str; 5] = ["in the morning", "at noon", "that evening", "at night", "on sunday"];

fn pick<'a>(r: &mut ChaCha8Rng, xs: &[&'a str]) -> &'a str {
    xs[r.gen_range(0..xs.len())]
}

fn sentence(r: &mut ChaCha8Rng, t: &Topic, name: &str) -> String {
    let n1 = pick(r, t.nouns);
    let mut n2 = pick(r, t.nouns);
    while n2 == n1 {
        n2 = pick(r, t.nouns);
    }
    let place = pick(r, t.places);
    let tv = pick(r, t.tverbs);
    let iv = pick(r, t.iverbs);
    let a1 = pick(r, t.adjs);
    let mut a2 = pick(r, t.adjs);
    while a2 == a1 {
        a2 = pick(r, t.adjs);
    }
    let time = pick(r, &TIMES);
    match r.gen_range(0..10) {
        0 => format!("the {a1} {n1} {tv} the {n2} ."),
        1 => format!("{name} {tv} the {a1} {n1} in the {place} ."),
        2 => format!("a {n1} {iv} near the {place} {time} ."),
        3 => format!("the {n1} in the {place} was {a1} and {a2} ."),
        4 => format!("{time} , {name} {tv} a {n1} ."),
        5 => format!("the {n1} that {name} {tv} was very {a1} ."),
        6 => format!("{name} said that the {n1} {iv} again ."),
        7 => format!("then the {a1} {n1} {iv} beside the {n2} ."),
        8 => format!("nobody {tv} the {n1} , so it {iv} ."),
        _ => format!("{name} and the {n1} {iv} at the {place} ."),
    }
}

/// A toy corpus of `n_docs` documents with 4 to 8 sentences each.
pub fn toy_corpus(n_docs: usize, seed: u64) -> Vec<Document> {
    (0..n_docs)
        .map(|d| {
            let mut r = sub_rng(seed, &[d as u64]);
            let topic = &TOPICS[r.gen_range(0..TOPICS.len())];
            let name = pick(&mut r, &NAMES);
            let len = r.gen_range(4..=8);
            (0..len)
                .map(|_| crate::model::tokenize(&sentence(&mut r, topic, name)))
                .collect()
        })
        .collect()
}

/// Annotator simulation parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatorConfig {
    pub workers_per_hit: usize,
    /// Workers available per experiment. Pools are disjoint across experiments.
    pub pool_size: usize,
    pub spammer_fraction: f64,
    /// Fraction of workers with a large systematic bias.
    pub biased_fraction: f64,
    pub strong_bias: f64,
    pub bias_sd: f64,
    pub rating_noise_sd: f64,
    pub item_sd: f64,
    /// Latent mean by degradation level; levels past the end use the last.
    pub level_means: Vec<f64>,
    pub error_prob_none: f64,
    pub error_prob_context: f64,
    pub coherence_shift: f64,
}

impl Default for AnnotatorConfig {
    fn default() -> Self {
        AnnotatorConfig {
            workers_per_hit: 20,
            pool_size: 60,
            spammer_fraction: 0.07,
            biased_fraction: 0.06,
            strong_bias: 1.3,
            bias_sd: 0.25,
            rating_noise_sd: 0.45,
            item_sd: 0.4,
            level_means: vec![3.5, 2.9, 2.45, 2.1, 1.8],
            error_prob_none: 0.04,
            error_prob_context: 0.15,
            coherence_shift: 0.25,
        }
    }
}

impl AnnotatorConfig {
    fn validate(&self) -> Result<()> {
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        if self.workers_per_hit == 0 || self.pool_size < self.workers_per_hit {
            return Err(Error::Usage(format!(
                "pool_size ({}) must be at least workers_per_hit ({}) and both positive",
                self.pool_size, self.workers_per_hit
            )));
        }
        if ![
            self.spammer_fraction,
            self.biased_fraction,
            self.error_prob_none,
            self.error_prob_context,
        ]
        .into_iter()
        .all(prob)
        {
            return Err(Error::Usage("fractions and probabilities must lie in [0, 1]".into()));
        }
        if self.level_means.is_empty() {
            return Err(Error::Usage("level_means must not be empty".into()));
        }
        if !(self.bias_sd >= 0.0 && self.rating_noise_sd >= 0.0 && self.item_sd >= 0.0) {
            return Err(Error::Usage("standard deviations must be non-negative".into()));
        }
        Ok(())
    }

    fn error_prob(&self, exp: ExperimentType) -> f64 {
        match exp {
            ExperimentType::None => self.error_prob_none,
            _ => self.error_prob_context,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Worker {
    Honest { bias: f64 },
    Spammer,
}

fn normal(sd: f64) -> Normal<f64> {
    Normal::new(0.0, sd).expect("finite non-negative sd")
}

fn to_scale(x: f64) -> f64 {
    x.round().clamp(SCALE_POINTS[0], SCALE_POINTS[SCALE_POINTS.len() - 1])
}

/// Latent acceptability per sentence id, shared by all experiments.
pub fn latent_acceptability(
    testset: &[TestSentence],
    cfg: &AnnotatorConfig,
    seed: u64,
) -> HashMap<String, f64> {
    let item = normal(cfg.item_sd);
    testset
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut r = sub_rng(seed, &[0, i as u64]);
            let lvl = (s.degradation_level as usize).min(cfg.level_means.len() - 1);
            (s.id.clone(), cfg.level_means[lvl] + item.sample(&mut r))
        })
        .collect()
}

/// Ratings for every sentence of every HIT under each requested experiment.
/// Records come out ordered by experiment, HIT, worker, then HIT position.
pub fn simulate_ratings(
    testset: &[TestSentence],
    hits: &[Hit],
    experiments: &[ExperimentType],
    cfg: &AnnotatorConfig,
    seed: u64,
) -> Result<Vec<RatingRecord>> {
    cfg.validate()?;
    let known: HashMap<&str, &TestSentence> = testset.iter().map(|s| (s.id.as_str(), s)).collect();
    for h in hits {
        if let Some(id) = h.sentence_ids.iter().find(|id| !known.contains_key(id.as_str())) {
            return Err(Error::invalid(format!(
                "HIT `{}` names unknown sentence `{id}`",
                h.hit_id
            )));
        }
    }
    let latent = latent_acceptability(testset, cfg, seed);
    let noise = normal(cfg.rating_noise_sd);
    let mut out = Vec::new();
    for (e, &exp) in experiments.iter().enumerate() {
        let e = e as u64 + 1;
        let mut wr = sub_rng(seed, &[e, 0]);
        let bias = normal(cfg.bias_sd);
        let workers: Vec<Worker> = (0..cfg.pool_size)
            .map(|_| {
                let u: f64 = wr.gen();
                if u < cfg.spammer_fraction {
                    Worker::Spammer
                } else if u < cfg.spammer_fraction + cfg.biased_fraction {
                    let sign = if wr.gen::<bool>() { 1.0 } else { -1.0 };
                    Worker::Honest {
                        bias: sign * cfg.strong_bias,
                    }
                } else {
                    Worker::Honest {
                        bias: bias.sample(&mut wr),
                    }
                }
            })
            .collect();
        let p_err = cfg.error_prob(exp);
        let shift = if exp == ExperimentType::Real {
            cfg.coherence_shift
        } else {
            0.0
        };
        for (h, hit) in hits.iter().enumerate() {
            let mut hr = sub_rng(seed, &[e, 1, h as u64]);
            let mut chosen: Vec<usize> =
                rand::seq::index::sample(&mut hr, cfg.pool_size, cfg.workers_per_hit).into_vec();
            chosen.sort_unstable();
            for w in chosen {
                for sid in &hit.sentence_ids {
                    let rating = match workers[w] {
                        Worker::Spammer => *SCALE_POINTS.choose(&mut hr).expect("scale"),
                        Worker::Honest { .. } if hr.gen::<f64>() < p_err => {
                            *SCALE_POINTS.choose(&mut hr).expect("scale")
                        }
                        Worker::Honest { bias } => {
                            to_scale(latent[sid.as_str()] + shift + bias + noise.sample(&mut hr))
                        }
                    };
                    out.push(RatingRecord::new(
                        format!("{}-w{w:03}", exp.as_str()),
                        sid.clone(),
                        exp,
                        rating,
                    ));
                }
            }
        }
    }
    Ok(out)
}
