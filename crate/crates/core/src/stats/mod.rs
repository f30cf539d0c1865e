//! Correlation, significance tests and agreement bounds used to analyze
//! ratings and evaluate acceptability measures.

mod bounds;
mod regression;
pub mod special;
mod wilcoxon;

pub use bounds::{
    trial_rng, ub_half_vs_half, ub_one_vs_rest, upper_bounds, UpperBound, UpperBounds,
    DEFAULT_TRIALS,
};
pub use regression::{
    compare_regression_lines, fit_line, ols, LineFit, OlsFit, RegressionComparison,
    MIN_REGRESSION_SENTENCES,
};
pub use wilcoxon::{
    exact_null_distribution, exact_p, normal_p, signed_ranks, wilcoxon_one_tailed, Alternative,
    PMethod, WilcoxonResult, EXACT_MAX_N,
};

use crate::error::{Error, Result};

/// Sample Pearson correlation, clamped to [−1, 1].
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!(
            "vectors differ in length ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 3 {
        return Err(Error::invalid(format!(
            "correlation needs at least 3 points, got {}",
            x.len()
        )));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::invalid("undefined correlation (zero variance)"));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}
