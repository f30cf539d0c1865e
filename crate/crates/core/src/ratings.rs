//! Post-processing of crowdsourced ratings: worker filtering, per-user
//! calibration, per-sentence outlier removal and mean aggregation.
//!
//! Each stage consumes a [`RatingSet`] at the previous [`Provenance`] and
//! refuses anything else, so calibration can never run twice.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ExperimentType, MeanRatingRow, RatingRecord};

pub const DEFAULT_MIN_FRACTION: f64 = 0.75;
pub const DEFAULT_OUTLIER_SD: f64 = 2.0;
/// Shift applied to a user whose mean rating strays too far from the
/// overall mean.
pub const CALIBRATION_STEP: f64 = 1.0;
/// Raw ratings at or above this count as accepting an original sentence.
pub const ORIGINAL_PASS_RATING: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Raw,
    WorkerFiltered,
    Calibrated,
    OutlierFiltered,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatingSet {
    pub experiment: ExperimentType,
    pub records: Vec<RatingRecord>,
    pub provenance: Provenance,
}

impl RatingSet {
    /// Split raw records into one set per experiment present.
    pub fn split_raw(records: Vec<RatingRecord>) -> BTreeMap<ExperimentType, RatingSet> {
        let mut out: BTreeMap<ExperimentType, RatingSet> = BTreeMap::new();
        for r in records {
            out.entry(r.experiment)
                .or_insert_with(|| RatingSet {
                    experiment: r.experiment,
                    records: Vec::new(),
                    provenance: Provenance::Raw,
                })
                .records
                .push(r);
        }
        out
    }

    pub fn raw(experiment: ExperimentType, records: Vec<RatingRecord>) -> Result<Self> {
        if let Some(r) = records.iter().find(|r| r.experiment != experiment) {
            return Err(Error::invalid(format!(
                "record for sentence `{}` belongs to experiment `{}`, not `{experiment}`",
                r.sentence_id, r.experiment
            )));
        }
        Ok(RatingSet {
            experiment,
            records,
            provenance: Provenance::Raw,
        })
    }

    /// Ratings grouped by sentence id, in sentence-id order; within a
    /// sentence, input order.
    pub fn by_sentence(&self) -> BTreeMap<&str, Vec<f64>> {
        let mut m: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
        for r in &self.records {
            m.entry(&r.sentence_id).or_default().push(r.rating);
        }
        m
    }

    fn expect(&self, stage: &str, p: Provenance) -> Result<()> {
        if self.provenance != p {
            return Err(Error::Usage(format!(
                "{stage} requires a {p:?} rating set, got {:?}",
                self.provenance
            )));
        }
        Ok(())
    }
}

/// Outcome of [`filter_workers`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkerFilterReport {
    pub removed_workers: Vec<String>,
    /// Workers with no rating on an original sentence; kept.
    pub unverifiable_workers: Vec<String>,
    pub workers_before: usize,
    pub workers_after: usize,
    pub records_removed: usize,
}

/// Drop every record of a worker whose fraction of original-sentence ratings
/// at or above 3.0 is below `min_fraction`.
pub fn filter_workers(
    rs: RatingSet,
    originals: &HashSet<String>,
    min_fraction: f64,
) -> Result<(RatingSet, WorkerFilterReport)> {
    rs.expect("filter_workers", Provenance::Raw)?;
    if !(min_fraction > 0.0 && min_fraction <= 1.0) {
        return Err(Error::Usage(format!(
            "min_fraction must lie in (0, 1], got {min_fraction}"
        )));
    }
    let mut tally: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for r in &rs.records {
        let e = tally.entry(&r.worker_id).or_default();
        if originals.contains(&r.sentence_id) {
            e.0 += 1;
            if r.rating >= ORIGINAL_PASS_RATING {
                e.1 += 1;
            }
        }
    }
    let mut removed = BTreeSet::new();
    let mut unverifiable = Vec::new();
    for (&w, &(n, pass)) in &tally {
        if n == 0 {
            unverifiable.push(w.to_owned());
        } else if (pass as f64) < min_fraction * n as f64 {
            removed.insert(w.to_owned());
        }
    }
    let workers_before = tally.len();
    drop(tally);
    let before = rs.records.len();
    let records: Vec<RatingRecord> = rs
        .records
        .into_iter()
        .filter(|r| !removed.contains(&r.worker_id))
        .collect();
    let report = WorkerFilterReport {
        workers_before,
        workers_after: workers_before - removed.len(),
        records_removed: before - records.len(),
        removed_workers: removed.into_iter().collect(),
        unverifiable_workers: unverifiable,
    };
    Ok((
        RatingSet {
            experiment: rs.experiment,
            records,
            provenance: Provenance::WorkerFiltered,
        },
        report,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserAdjustment {
    pub worker_id: String,
    pub user_mean: f64,
    pub shift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    /// Mean of the per-user mean ratings.
    pub overall_mean: f64,
    pub adjusted_users: Vec<UserAdjustment>,
}

/// Shift every rating of a user by −1.0 (+1.0) when the user's mean exceeds
/// (falls below) the mean of all user means by strictly more than 1.0.
/// One pass; the overall mean is computed once before any shift.
pub fn calibrate(rs: RatingSet) -> Result<(RatingSet, CalibrationReport)> {
    rs.expect("calibrate", Provenance::WorkerFiltered)?;
    if rs.records.is_empty() {
        return Err(Error::invalid(format!(
            "cannot calibrate an empty rating set (experiment `{}`)",
            rs.experiment
        )));
    }
    let mut sums: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for r in &rs.records {
        let e = sums.entry(&r.worker_id).or_default();
        e.0 += r.rating;
        e.1 += 1;
    }
    let user_means: BTreeMap<&str, f64> =
        sums.iter().map(|(&w, &(s, n))| (w, s / n as f64)).collect();
    let overall = user_means.values().sum::<f64>() / user_means.len() as f64;
    let mut adjusted = Vec::new();
    let mut shifts: BTreeMap<String, f64> = BTreeMap::new();
    for (&w, &m) in &user_means {
        let shift = if m - overall > CALIBRATION_STEP {
            -CALIBRATION_STEP
        } else if overall - m > CALIBRATION_STEP {
            CALIBRATION_STEP
        } else {
            continue;
        };
        shifts.insert(w.to_owned(), shift);
        adjusted.push(UserAdjustment {
            worker_id: w.to_owned(),
            user_mean: m,
            shift,
        });
    }
    let records = rs
        .records
        .into_iter()
        .map(|mut r| {
            if let Some(s) = shifts.get(&r.worker_id) {
                r.rating += s;
            }
            r
        })
        .collect();
    Ok((
        RatingSet {
            experiment: rs.experiment,
            records,
            provenance: Provenance::Calibrated,
        },
        CalibrationReport {
            overall_mean: overall,
            adjusted_users: adjusted,
        },
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemovedRating {
    pub worker_id: String,
    pub sentence_id: String,
    pub rating: f64,
    pub sentence_mean: f64,
    pub sentence_sd: f64,
}

/// Mean and sample (n − 1) standard deviation.
pub fn mean_and_sample_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Remove ratings further than `k` sample standard deviations from their
/// sentence mean. Mean and SD are computed once, before removal. Sentences
/// with a single rating are untouched.
pub fn remove_outliers(rs: RatingSet, k: f64) -> Result<(RatingSet, Vec<RemovedRating>)> {
    rs.expect("remove_outliers", Provenance::Calibrated)?;
    if !(k > 0.0) {
        return Err(Error::Usage(format!("outlier threshold must be positive, got {k}")));
    }
    let stats: BTreeMap<String, (f64, f64)> = rs
        .by_sentence()
        .into_iter()
        .map(|(s, xs)| (s.to_owned(), mean_and_sample_sd(&xs)))
        .collect();
    let mut removed = Vec::new();
    let mut kept = Vec::with_capacity(rs.records.len());
    for r in rs.records {
        let (mean, sd) = stats[&r.sentence_id];
        if sd.is_finite() && (r.rating - mean).abs() > k * sd {
            removed.push(RemovedRating {
                worker_id: r.worker_id,
                sentence_id: r.sentence_id,
                rating: r.rating,
                sentence_mean: mean,
                sentence_sd: sd,
            });
        } else {
            kept.push(r);
        }
    }
    Ok((
        RatingSet {
            experiment: rs.experiment,
            records: kept,
            provenance: Provenance::OutlierFiltered,
        },
        removed,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanRating {
    pub mean: f64,
    pub n_ratings: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MeanRatings {
    pub experiment: Option<ExperimentType>,
    pub by_sentence: BTreeMap<String, MeanRating>,
}

impl MeanRatings {
    pub fn rows(&self) -> Vec<MeanRatingRow> {
        let exp = self.experiment.unwrap_or(ExperimentType::None);
        self.by_sentence
            .iter()
            .map(|(s, m)| MeanRatingRow {
                sentence_id: s.clone(),
                experiment: exp,
                mean: m.mean,
                n_ratings: m.n_ratings,
            })
            .collect()
    }

    pub fn from_rows(rows: &[MeanRatingRow], experiment: ExperimentType) -> Result<Self> {
        let mut by_sentence = BTreeMap::new();
        for r in rows.iter().filter(|r| r.experiment == experiment) {
            if r.n_ratings == 0 {
                return Err(Error::invalid_field(
                    "n_ratings",
                    format!("sentence `{}` has n_ratings = 0", r.sentence_id),
                ));
            }
            let m = MeanRating {
                mean: r.mean,
                n_ratings: r.n_ratings,
            };
            if by_sentence.insert(r.sentence_id.clone(), m).is_some() {
                return Err(Error::invalid_field(
                    "sentence_id",
                    format!("duplicate sentence `{}` in experiment `{experiment}`", r.sentence_id),
                ));
            }
        }
        Ok(MeanRatings {
            experiment: Some(experiment),
            by_sentence,
        })
    }
}

/// Per-sentence arithmetic mean of the surviving ratings. `expected`
/// sentences with no surviving ratings are reported in the second value.
pub fn aggregate(rs: &RatingSet, expected: &[String]) -> Result<(MeanRatings, Vec<String>)> {
    rs.expect("aggregate", Provenance::OutlierFiltered)?;
    let grouped = rs.by_sentence();
    let by_sentence: BTreeMap<String, MeanRating> = grouped
        .iter()
        .map(|(&s, xs)| {
            (
                s.to_owned(),
                MeanRating {
                    mean: xs.iter().sum::<f64>() / xs.len() as f64,
                    n_ratings: xs.len(),
                },
            )
        })
        .collect();
    let missing = expected
        .iter()
        .filter(|s| !by_sentence.contains_key(*s))
        .cloned()
        .collect();
    Ok((
        MeanRatings {
            experiment: Some(rs.experiment),
            by_sentence,
        },
        missing,
    ))
}

/// Pipeline parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub min_fraction: f64,
    pub outlier_sd: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            min_fraction: DEFAULT_MIN_FRACTION,
            outlier_sd: DEFAULT_OUTLIER_SD,
        }
    }
}

/// Audit trail of one experiment's pass through the pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentAudit {
    pub experiment: ExperimentType,
    pub raw_records: usize,
    pub worker_filter: WorkerFilterReport,
    pub calibration: CalibrationReport,
    pub removed_ratings: Vec<RemovedRating>,
    /// Outlier-removed ratings as a fraction of the ratings that survived
    /// worker filtering.
    pub discard_fraction: f64,
    pub sentences_without_ratings: Vec<String>,
    pub mean_ratings_per_sentence: f64,
}

/// Everything the pipeline produces for one experiment.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub calibrated: RatingSet,
    pub filtered: RatingSet,
    pub means: MeanRatings,
    pub audit: ExperimentAudit,
}

/// filter_workers → calibrate → remove_outliers → aggregate.
pub fn run_pipeline(
    raw: RatingSet,
    originals: &HashSet<String>,
    cfg: PipelineConfig,
) -> Result<PipelineOutput> {
    let experiment = raw.experiment;
    let raw_records = raw.records.len();
    let expected: Vec<String> = raw
        .by_sentence()
        .keys()
        .map(|s| (*s).to_owned())
        .collect();
    let (wf, worker_filter) = filter_workers(raw, originals, cfg.min_fraction)?;
    let after_workers = wf.records.len();
    let (calibrated, calibration) = calibrate(wf)?;
    let (filtered, removed_ratings) = remove_outliers(calibrated.clone(), cfg.outlier_sd)?;
    let (means, missing) = aggregate(&filtered, &expected)?;
    let mean_n = if means.by_sentence.is_empty() {
        0.0
    } else {
        filtered.records.len() as f64 / means.by_sentence.len() as f64
    };
    let audit = ExperimentAudit {
        experiment,
        raw_records,
        worker_filter,
        calibration,
        discard_fraction: removed_ratings.len() as f64 / after_workers as f64,
        removed_ratings,
        sentences_without_ratings: missing,
        mean_ratings_per_sentence: mean_n,
    };
    Ok(PipelineOutput {
        calibrated,
        filtered,
        means,
        audit,
    })
}
