//! Ordinary least squares with classical standard errors, and the
//! two-line comparison used for in-context vs out-of-context ratings.

use serde::{Deserialize, Serialize};

use super::special::student_t_two_sided;
use crate::error::{Error, Result};

pub const MIN_REGRESSION_SENTENCES: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub t_stats: Vec<f64>,
    /// Two-sided p-values from the t distribution with `df` degrees of freedom.
    pub p_values: Vec<f64>,
    pub residual_ss: f64,
    pub df: usize,
    pub max_abs_residual: f64,
}

/// Fit y = X β by least squares. Rows of `x` are observations.
pub fn ols(x: &[Vec<f64>], y: &[f64]) -> Result<OlsFit> {
    let n = x.len();
    if n != y.len() {
        return Err(Error::invalid("design rows and response differ in length"));
    }
    let p = x.first().map_or(0, Vec::len);
    if p == 0 || x.iter().any(|r| r.len() != p) {
        return Err(Error::invalid("design matrix must be rectangular and non-empty"));
    }
    if n <= p {
        return Err(Error::invalid(format!(
            "need more observations ({n}) than coefficients ({p})"
        )));
    }
    // Normal equations X'X β = X'y solved through a Cholesky factor.
    let mut xtx = vec![vec![0.0; p]; p];
    let mut xty = vec![0.0; p];
    for (row, &yi) in x.iter().zip(y) {
        for i in 0..p {
            xty[i] += row[i] * yi;
            for j in 0..=i {
                xtx[i][j] += row[i] * row[j];
            }
        }
    }
    for i in 0..p {
        for j in 0..i {
            xtx[j][i] = xtx[i][j];
        }
    }
    let l = cholesky(&xtx)?;
    let beta = chol_solve(&l, &xty);
    let mut residual_ss = 0.0;
    let mut max_abs_residual = 0.0f64;
    for (row, &yi) in x.iter().zip(y) {
        let fitted: f64 = row.iter().zip(&beta).map(|(a, b)| a * b).sum();
        let r = yi - fitted;
        residual_ss += r * r;
        max_abs_residual = max_abs_residual.max(r.abs());
    }
    let df = n - p;
    let sigma2 = residual_ss / df as f64;
    let mut std_errors = Vec::with_capacity(p);
    for i in 0..p {
        let mut e = vec![0.0; p];
        e[i] = 1.0;
        let col = chol_solve(&l, &e);
        std_errors.push((sigma2 * col[i]).sqrt());
    }
    let mut t_stats = Vec::with_capacity(p);
    let mut p_values = Vec::with_capacity(p);
    for (b, se) in beta.iter().zip(&std_errors) {
        // A perfect fit has zero standard errors.
        let t = if *se > 0.0 {
            b / se
        } else if *b == 0.0 {
            0.0
        } else {
            b.signum() * f64::INFINITY
        };
        t_stats.push(t);
        p_values.push(student_t_two_sided(t, df as f64)?);
    }
    Ok(OlsFit {
        coefficients: beta,
        std_errors,
        t_stats,
        p_values,
        residual_ss,
        df,
        max_abs_residual,
    })
}

fn cholesky(a: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let p = a.len();
    let scale = (0..p).fold(0.0f64, |m, i| m.max(a[i][i].abs()));
    let mut l = vec![vec![0.0; p]; p];
    for i in 0..p {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = a[i][i] - s;
                if d <= scale * 1e-12 {
                    return Err(Error::invalid(
                        "rank-deficient design matrix (collinear predictors)",
                    ));
                }
                l[i][i] = d.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    Ok(l)
}

fn chol_solve(l: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let p = l.len();
    let mut z = vec![0.0; p];
    for i in 0..p {
        let s: f64 = (0..i).map(|k| l[i][k] * z[k]).sum();
        z[i] = (b[i] - s) / l[i][i];
    }
    let mut x = vec![0.0; p];
    for i in (0..p).rev() {
        let s: f64 = (i + 1..p).map(|k| l[k][i] * x[k]).sum();
        x[i] = (z[i] - s) / l[i][i];
    }
    x
}

/// Intercept and slope of y on x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    let design: Vec<Vec<f64>> = x.iter().map(|&xi| vec![1.0, xi]).collect();
    let fit = ols(&design, y)?;
    Ok(LineFit {
        intercept: fit.coefficients[0],
        slope: fit.coefficients[1],
    })
}

/// Regression of in-context ratings on out-of-context ratings with the
/// context type (real = 1, random = 0) as a second predictor:
///
/// y = β0 + β1·h_out + β2·is_real + β3·h_out·is_real
///
/// β2 measures a difference in offset, β3 a difference in slope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionComparison {
    /// (intercept, slope on h_out, context offset, interaction)
    pub coefficients: [f64; 4],
    pub std_errors: [f64; 4],
    pub t_stats: [f64; 4],
    pub p_offset: f64,
    pub p_interaction: f64,
    /// Stacked observations minus 4.
    pub df: usize,
    pub n_sentences: usize,
    pub max_abs_residual: f64,
}

pub fn compare_regression_lines(
    h_out: &[f64],
    h_in_real: &[f64],
    h_in_random: &[f64],
) -> Result<RegressionComparison> {
    let n = h_out.len();
    if h_in_real.len() != n || h_in_random.len() != n {
        return Err(Error::invalid("rating vectors are not aligned"));
    }
    if n < MIN_REGRESSION_SENTENCES {
        return Err(Error::invalid(format!(
            "need at least {MIN_REGRESSION_SENTENCES} sentences, got {n}"
        )));
    }
    let mut x = Vec::with_capacity(2 * n);
    let mut y = Vec::with_capacity(2 * n);
    for i in 0..n {
        x.push(vec![1.0, h_out[i], 1.0, h_out[i]]);
        y.push(h_in_real[i]);
        x.push(vec![1.0, h_out[i], 0.0, 0.0]);
        y.push(h_in_random[i]);
    }
    let fit = ols(&x, &y)?;
    let arr = |v: &[f64]| [v[0], v[1], v[2], v[3]];
    Ok(RegressionComparison {
        coefficients: arr(&fit.coefficients),
        std_errors: arr(&fit.std_errors),
        t_stats: arr(&fit.t_stats),
        p_offset: fit.p_values[2],
        p_interaction: fit.p_values[3],
        df: fit.df,
        n_sentences: n,
        max_abs_residual: fit.max_abs_residual,
    })
}
