use std::fmt;

use serde::Serialize;

use crate::numerics::{normal_cdf, normal_quantile};

use super::{corrected_vcov, CorrectedCovariance, RankRegError, RankRegressionFit};

pub const DF_WARNING: &str = "residual degrees of freedom are not valid for regressions on estimated ranks; \
z-values and p-values use the standard normal distribution";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientRow {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    /// `estimate / std_error`; infinite with the estimate's sign when the standard error is 0.
    pub z_value: f64,
    pub p_value: f64,
    pub stars: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientTable {
    pub rows: Vec<CoefficientRow>,
    pub nobs: usize,
}

fn stars(p: f64) -> &'static str {
    match p {
        p if p < 0.001 => "***",
        p if p < 0.01 => "**",
        p if p < 0.05 => "*",
        p if p < 0.1 => ".",
        _ => "",
    }
}

fn row(name: &str, estimate: f64, se: f64) -> CoefficientRow {
    let (z, p) = if se > 0.0 {
        let z = estimate / se;
        (z, (2.0 * normal_cdf(-z.abs())).min(1.0))
    } else if estimate == 0.0 {
        (0.0, 1.0)
    } else {
        (f64::INFINITY.copysign(estimate), 0.0)
    };
    CoefficientRow {
        name: name.to_string(),
        estimate,
        std_error: se,
        z_value: z,
        p_value: p,
        stars: stars(p),
    }
}

pub fn summarize_with(fit: &RankRegressionFit, cov: &CorrectedCovariance) -> CoefficientTable {
    let rows = fit
        .column_names()
        .iter()
        .zip(fit.coefficients())
        .zip(cov.std_errors())
        .map(|((name, &b), se)| row(name, b, se))
        .collect();
    CoefficientTable { rows, nobs: fit.nobs() }
}

/// Coefficient table with corrected standard errors, z-values and two-sided normal p-values.
pub fn summarize(fit: &RankRegressionFit) -> Result<CoefficientTable, RankRegError> {
    Ok(summarize_with(fit, &corrected_vcov(fit)?))
}

impl fmt::Display for CoefficientTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let w = self.rows.iter().map(|r| r.name.len()).max().unwrap_or(0).max(4);
        writeln!(
            f,
            "{:w$}  {:>12} {:>12} {:>9} {:>10}",
            "", "Estimate", "Std. Error", "z value", "Pr(>|z|)"
        )?;
        for r in &self.rows {
            let p = if r.p_value < 2e-16 {
                "<2e-16".to_string()
            } else {
                format!("{:.3e}", r.p_value)
            };
            writeln!(
                f,
                "{:w$}  {:>12.6} {:>12.6} {:>9.3} {:>10} {}",
                r.name, r.estimate, r.std_error, r.z_value, p, r.stars
            )?;
        }
        writeln!(f, "---\nSignif. codes: 0 '***' 0.001 '**' 0.01 '*' 0.05 '.' 0.1 ' ' 1")?;
        write!(f, "n = {}. Note: {DF_WARNING}.", self.nobs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfidenceInterval {
    pub name: String,
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
}

pub fn confint_with(
    fit: &RankRegressionFit,
    cov: &CorrectedCovariance,
    level: f64,
) -> Result<Vec<ConfidenceInterval>, RankRegError> {
    if !(level > 0.0 && level < 1.0) {
        return Err(RankRegError::InvalidLevel(level));
    }
    let q = normal_quantile((1.0 + level) / 2.0);
    Ok(fit
        .column_names()
        .iter()
        .zip(fit.coefficients())
        .zip(cov.std_errors())
        .map(|((name, &b), se)| ConfidenceInterval {
            name: name.clone(),
            estimate: b,
            lower: b - q * se,
            upper: b + q * se,
        })
        .collect())
}

/// `estimate -/+ z_{(1+level)/2} * se` with corrected standard errors.
pub fn confint(fit: &RankRegressionFit, level: f64) -> Result<Vec<ConfidenceInterval>, RankRegError> {
    confint_with(fit, &corrected_vcov(fit)?, level)
}
