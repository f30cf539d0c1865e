//! Context-effect analysis over the three rating experiments.

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::commands::originals_of;
use super::{out_dir, AnalyzeContextArgs};
use crate::error::{Error, Result};
use crate::model::{
    load_mean_ratings, load_ratings, load_testset, write_atomic, write_json, ExperimentType,
};
use crate::ratings::{run_pipeline, MeanRatings, PipelineConfig, RatingSet};
use crate::stats::{
    compare_regression_lines, fit_line, pearson, upper_bounds, wilcoxon_one_tailed, Alternative,
    LineFit, RegressionComparison, UpperBounds, WilcoxonResult,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwisePearson {
    pub real_vs_none: Option<f64>,
    pub random_vs_none: Option<f64>,
    pub random_vs_real: Option<f64>,
}

/// In-context mean ratings regressed on out-of-context ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextLines {
    pub real_on_none: LineFit,
    pub random_on_none: LineFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpperBoundPair {
    pub outlier_filtered: UpperBounds,
    pub unfiltered: UpperBounds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineSummary {
    pub experiment: ExperimentType,
    pub raw_records: usize,
    pub workers_before: usize,
    pub workers_after: usize,
    pub adjusted_users: usize,
    pub removed_outliers: usize,
    pub discard_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Warning {
    pub analysis: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub n_sentences: usize,
    pub pearson: PairwisePearson,
    pub lines: Option<ContextLines>,
    /// One-tailed test of real-context ratings above random-context ones.
    pub wilcoxon_real_gt_random: Option<WilcoxonResult>,
    pub regression: Option<RegressionComparison>,
    /// Keyed by experiment; empty when only mean ratings were given.
    pub upper_bounds: BTreeMap<ExperimentType, UpperBoundPair>,
    pub pipeline: Vec<PipelineSummary>,
    pub warnings: Vec<Warning>,
}

/// Aligned mean ratings for the three experiments.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisInputs {
    pub ids: Vec<String>,
    pub none: Vec<f64>,
    pub real: Vec<f64>,
    pub random: Vec<f64>,
}

impl AnalysisInputs {
    /// Fails unless the three sets cover exactly the same sentences.
    pub fn align(none: &MeanRatings, real: &MeanRatings, random: &MeanRatings) -> Result<Self> {
        for (name, other) in [("real", real), ("random", random)] {
            if let Some(id) = none
                .by_sentence
                .keys()
                .find(|k| !other.by_sentence.contains_key(*k))
                .or_else(|| {
                    other
                        .by_sentence
                        .keys()
                        .find(|k| !none.by_sentence.contains_key(*k))
                })
            {
                return Err(Error::invalid(format!(
                    "ratings are misaligned: sentence `{id}` is in only one of the `none` and `{name}` sets ({} vs {} sentences)",
                    none.by_sentence.len(),
                    other.by_sentence.len()
                )));
            }
        }
        let ids: Vec<String> = none.by_sentence.keys().cloned().collect();
        let col = |m: &MeanRatings| ids.iter().map(|i| m.by_sentence[i].mean).collect();
        Ok(AnalysisInputs {
            none: col(none),
            real: col(real),
            random: col(random),
            ids,
        })
    }
}

/// Validation failures become warnings; numerical failures propagate.
fn soft<T>(analysis: &str, r: Result<T>, warnings: &mut Vec<Warning>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(e @ Error::Numerical(_)) => Err(e),
        Err(e) => {
            warnings.push(Warning {
                analysis: analysis.to_owned(),
                message: e.to_string(),
            });
            Ok(None)
        }
    }
}

/// Correlations, regression lines, the Wilcoxon test and the regression
/// comparison over aligned mean ratings.
pub fn analyze_context(x: &AnalysisInputs) -> Result<AnalysisReport> {
    let mut w = Vec::new();
    let pearson = PairwisePearson {
        real_vs_none: soft("pearson real_vs_none", pearson(&x.none, &x.real), &mut w)?,
        random_vs_none: soft("pearson random_vs_none", pearson(&x.none, &x.random), &mut w)?,
        random_vs_real: soft("pearson random_vs_real", pearson(&x.real, &x.random), &mut w)?,
    };
    let lines = soft(
        "lines",
        fit_line(&x.none, &x.real).and_then(|real_on_none| {
            Ok(ContextLines {
                real_on_none,
                random_on_none: fit_line(&x.none, &x.random)?,
            })
        }),
        &mut w,
    )?;
    let wilcoxon = soft(
        "wilcoxon",
        wilcoxon_one_tailed(&x.real, &x.random, Alternative::Greater),
        &mut w,
    )?;
    let regression = soft(
        "regression",
        compare_regression_lines(&x.none, &x.real, &x.random),
        &mut w,
    )?;
    if let Some(r) = &regression {
        let scale = x.none.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if r.max_abs_residual <= 1e-9 * scale.max(1.0) {
            w.push(Warning {
                analysis: "regression".into(),
                message: "exact fit: standard errors are zero and p-values are degenerate".into(),
            });
        }
    }
    Ok(AnalysisReport {
        n_sentences: x.ids.len(),
        pearson,
        lines,
        wilcoxon_real_gt_random: wilcoxon,
        regression,
        upper_bounds: BTreeMap::new(),
        pipeline: Vec::new(),
        warnings: w,
    })
}

enum Kind {
    Raw,
    Means,
}

fn sniff(path: &Path) -> Result<Kind> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut first = String::new();
    BufReader::new(f)
        .read_line(&mut first)
        .map_err(|e| Error::io(path, e))?;
    match first.trim().split(',').next() {
        Some("worker_id") => Ok(Kind::Raw),
        Some("sentence_id") => Ok(Kind::Means),
        _ => Err(Error::invalid_at(
            1,
            None,
            format!(
                "{}: expected a ratings.csv or mean_ratings.csv header",
                path.display()
            ),
        )),
    }
}

fn write_scatter(path: &Path, x: &AnalysisInputs, cols: [(&str, &[f64]); 2]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let write = |w: &mut csv::Writer<Vec<u8>>, rec: &[String]| {
        w.write_record(rec).expect("in-memory csv");
    };
    write(
        &mut w,
        &["sentence_id".into(), cols[0].0.into(), cols[1].0.into()],
    );
    for (i, id) in x.ids.iter().enumerate() {
        write(
            &mut w,
            &[id.clone(), cols[0].1[i].to_string(), cols[1].1[i].to_string()],
        );
    }
    write_atomic(path, &w.into_inner().expect("in-memory csv"))
}

pub fn cmd_analyze_context(a: &AnalyzeContextArgs, seed: u64) -> Result<AnalysisReport> {
    if a.trials == 0 {
        return Err(Error::Usage("--trials must be positive".into()));
    }
    let cfg = PipelineConfig {
        min_fraction: a.min_fraction,
        outlier_sd: a.outlier_sd,
    };
    let mut originals: Option<HashSet<String>> = None;
    let mut warnings = Vec::new();
    let mut means = Vec::new();
    let mut bounds = BTreeMap::new();
    let mut pipeline = Vec::new();
    for (exp, path) in [
        (ExperimentType::None, &a.ratings_none),
        (ExperimentType::Real, &a.ratings_real),
        (ExperimentType::Random, &a.ratings_random),
    ] {
        match sniff(path)? {
            Kind::Means => {
                let m = MeanRatings::from_rows(&load_mean_ratings(path)?, exp)?;
                if m.by_sentence.is_empty() {
                    return Err(Error::invalid(format!(
                        "{} has no `{exp}` rows",
                        path.display()
                    )));
                }
                warnings.push(Warning {
                    analysis: format!("upper_bounds {exp}"),
                    message: "mean ratings given; upper bounds need individual ratings".into(),
                });
                means.push(m);
            }
            Kind::Raw => {
                let recs: Vec<_> = load_ratings(path)?
                    .into_iter()
                    .filter(|r| r.experiment == exp)
                    .collect();
                if recs.is_empty() {
                    return Err(Error::invalid(format!(
                        "{} has no `{exp}` ratings",
                        path.display()
                    )));
                }
                if originals.is_none() {
                    originals = Some(match &a.testset {
                        Some(p) => originals_of(&load_testset(p)?),
                        None => {
                            warnings.push(Warning {
                                analysis: "worker_filter".into(),
                                message: "no --testset given; workers were not screened".into(),
                            });
                            HashSet::new()
                        }
                    });
                }
                let out = run_pipeline(
                    RatingSet::raw(exp, recs)?,
                    originals.as_ref().expect("set above"),
                    cfg,
                )?;
                let au = &out.audit;
                pipeline.push(PipelineSummary {
                    experiment: exp,
                    raw_records: au.raw_records,
                    workers_before: au.worker_filter.workers_before,
                    workers_after: au.worker_filter.workers_after,
                    adjusted_users: au.calibration.adjusted_users.len(),
                    removed_outliers: au.removed_ratings.len(),
                    discard_fraction: au.discard_fraction,
                });
                let pair = soft(
                    &format!("upper_bounds {exp}"),
                    upper_bounds(&out.filtered, a.trials, seed).and_then(|outlier_filtered| {
                        Ok(UpperBoundPair {
                            outlier_filtered,
                            unfiltered: upper_bounds(&out.calibrated, a.trials, seed)?,
                        })
                    }),
                    &mut warnings,
                )?;
                if let Some(p) = pair {
                    bounds.insert(exp, p);
                }
                means.push(out.means);
            }
        }
    }
    let x = AnalysisInputs::align(&means[0], &means[1], &means[2])?;
    let mut report = analyze_context(&x)?;
    report.upper_bounds = bounds;
    report.pipeline = pipeline;
    warnings.append(&mut report.warnings);
    report.warnings = warnings;

    out_dir(&a.out)?;
    write_json(&a.out.join("report.json"), &report)?;
    write_scatter(
        &a.out.join("scatter_real_vs_none.csv"),
        &x,
        [("h_none", &x.none), ("h_real", &x.real)],
    )?;
    write_scatter(
        &a.out.join("scatter_random_vs_none.csv"),
        &x,
        [("h_none", &x.none), ("h_random", &x.random)],
    )?;
    write_scatter(
        &a.out.join("scatter_random_vs_real.csv"),
        &x,
        [("h_real", &x.real), ("h_random", &x.random)],
    )?;
    print_summary(&report);
    Ok(report)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |r| format!("{r:.3}"))
}

fn print_summary(r: &AnalysisReport) {
    println!("sentences: {}", r.n_sentences);
    println!(
        "pearson  h+ vs h0 {}  h- vs h0 {}  h- vs h+ {}",
        fmt_opt(r.pearson.real_vs_none),
        fmt_opt(r.pearson.random_vs_none),
        fmt_opt(r.pearson.random_vs_real)
    );
    if let Some(l) = &r.lines {
        println!(
            "slopes   h+ on h0 {:.3}  h- on h0 {:.3}",
            l.real_on_none.slope, l.random_on_none.slope
        );
    }
    if let Some(wx) = &r.wilcoxon_real_gt_random {
        println!("wilcoxon h+ > h-  W+ = {}  p = {:.3e}", wx.w_plus, wx.p_value);
    }
    if let Some(c) = &r.regression {
        println!(
            "regression  p_offset = {:.3e}  p_interaction = {:.3e}",
            c.p_offset, c.p_interaction
        );
    }
    for (exp, b) in &r.upper_bounds {
        println!(
            "upper bounds {exp}: UB1 {:.3} UB2 {:.3} (unfiltered UB1 {:.3} UB2 {:.3})",
            b.outlier_filtered.ub1.value,
            b.outlier_filtered.ub2.value,
            b.unfiltered.ub1.value,
            b.unfiltered.ub2.value
        );
    }
    for wn in &r.warnings {
        println!("warning [{}]: {}", wn.analysis, wn.message);
    }
}
