//! Regressions on fractional ranks with asymptotic standard errors that
//! account for the ranks being estimated.
//!
//! ```
//! use rankinfer::rankreg::{fit, summarize, RankRegressionModel};
//! use rankinfer::table::{Column, TableData};
//!
//! let data = TableData::new(vec![
//!     ("parent", Column::from(vec![3.0, 1.0, 4.0, 1.5, 5.0, 9.0, 2.0, 6.0])),
//!     ("child", Column::from(vec![2.0, 7.0, 1.0, 8.0, 2.5, 8.5, 1.8, 2.8])),
//! ])
//! .unwrap();
//! let model = RankRegressionModel::parse("r(child) ~ r(parent)").unwrap();
//! let fitted = fit(&model, &data).unwrap();
//! let table = summarize(&fitted).unwrap();
//! assert_eq!(table.rows[1].name, "r(parent)");
//! ```

mod design;
pub mod formula;
mod indicator;
mod summary;
mod variance;

use thiserror::Error;

use crate::numerics::NumericsError;
use crate::ranking::RankingError;
use crate::table::TableError;

pub use design::{build_design, fit, fit_design, predict, BaseColumn, ColumnRole, Design, RankRegressionFit};
pub use formula::{parse_formula, FormulaError, ParsedFormula, Term};
pub use indicator::{indicator_matvec, IndicatorOperator};
pub use summary::{
    confint, confint_with, summarize, summarize_with, CoefficientRow, CoefficientTable, ConfidenceInterval, DF_WARNING,
};
pub use variance::{corrected_vcov, gammas, h_terms, projection_coefficients, CorrectedCovariance, HTerms};

#[derive(Debug, Error)]
pub enum RankRegError {
    #[error("{0}")]
    Formula(#[from] FormulaError),
    #[error("at most one ranked regressor is supported, found {}", .0.join(", "))]
    MultipleRankedRegressors(Vec<String>),
    #[error("term `{0}` appears more than once")]
    DuplicateTerm(String),
    #[error("no column named `{0}`")]
    MissingColumn(String),
    #[error("column `{column}` has a missing value in row {row}; subset or impute before fitting")]
    MissingValues { column: String, row: usize },
    #[error("column `{column}` row {row}: `{value}` is not a number")]
    NonNumeric { column: String, row: usize, value: String },
    #[error("group `{level}` has {rows} row(s); every group needs at least 2")]
    EmptyGroup { level: String, rows: usize },
    #[error("column `{column}` has level `{level}` that was not seen when fitting")]
    UnknownLevel { column: String, level: String },
    #[error("design has {columns} columns but only {rows} rows")]
    TooFewObservations { rows: usize, columns: usize },
    #[error("design matrix is rank deficient (pivot ratio {ratio:.3e}); regressors are collinear")]
    RankDeficient { ratio: f64 },
    #[error("omega must lie in [0, 1], got {0}")]
    InvalidOmega(f64),
    #[error("confidence level must lie in (0, 1), got {0}")]
    InvalidLevel(f64),
    #[error("{what} has a non-finite entry at position {index}")]
    NonFinite { what: String, index: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Numerics(NumericsError),
    #[error(transparent)]
    Table(TableError),
}

impl From<NumericsError> for RankRegError {
    fn from(e: NumericsError) -> Self {
        match e {
            NumericsError::RankDeficient { ratio } => RankRegError::RankDeficient { ratio },
            other => RankRegError::Numerics(other),
        }
    }
}

impl From<TableError> for RankRegError {
    fn from(e: TableError) -> Self {
        match e {
            TableError::MissingColumn(c) => RankRegError::MissingColumn(c),
            TableError::MissingValue { column, row } => RankRegError::MissingValues { column, row },
            TableError::NonNumeric { column, row, value } => RankRegError::NonNumeric { column, row, value },
            other => RankRegError::Table(other),
        }
    }
}

impl From<RankingError> for RankRegError {
    fn from(e: RankingError) -> Self {
        match e {
            RankingError::NonFinite { index, .. } => RankRegError::NonFinite {
                what: "ranked column".into(),
                index,
            },
            RankingError::InvalidOmega(w) => RankRegError::InvalidOmega(w),
            RankingError::Empty => RankRegError::TooFewObservations { rows: 0, columns: 1 },
        }
    }
}

/// What to regress on what. Ranked variables enter as increasing fractional
/// ranks with tie parameter `omega`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankRegressionModel {
    response: Term,
    regressors: Vec<Term>,
    intercept: bool,
    group: Option<String>,
    omega: f64,
}

impl RankRegressionModel {
    pub fn new(response: Term, regressors: Vec<Term>) -> Result<Self, RankRegError> {
        let model = Self {
            response,
            regressors,
            intercept: true,
            group: None,
            omega: 1.0,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn parse(formula: &str) -> Result<Self, RankRegError> {
        let f = parse_formula(formula)?;
        let mut model = Self::new(f.response, f.regressors)?;
        if let Some(g) = f.group {
            model = model.grouped_by(g)?;
        }
        Ok(model)
    }

    pub fn grouped_by(mut self, group: impl Into<String>) -> Result<Self, RankRegError> {
        self.group = Some(group.into());
        self.validate()?;
        Ok(self)
    }

    pub fn with_omega(mut self, omega: f64) -> Result<Self, RankRegError> {
        if !(0.0..=1.0).contains(&omega) {
            return Err(RankRegError::InvalidOmega(omega));
        }
        self.omega = omega;
        Ok(self)
    }

    pub fn without_intercept(mut self) -> Self {
        self.intercept = false;
        self
    }

    fn validate(&self) -> Result<(), RankRegError> {
        let ranked: Vec<String> = self.regressors.iter().filter(|t| t.ranked).map(Term::label).collect();
        if ranked.len() > 1 {
            return Err(RankRegError::MultipleRankedRegressors(ranked));
        }
        let mut seen = std::collections::HashSet::new();
        seen.insert(self.response.name.as_str());
        for t in &self.regressors {
            if !seen.insert(t.name.as_str()) {
                return Err(RankRegError::DuplicateTerm(t.name.clone()));
            }
        }
        if let Some(g) = &self.group {
            if seen.contains(g.as_str()) {
                return Err(RankRegError::DuplicateTerm(g.clone()));
            }
        }
        Ok(())
    }

    pub fn response(&self) -> &Term {
        &self.response
    }

    pub fn regressors(&self) -> &[Term] {
        &self.regressors
    }

    pub fn has_intercept(&self) -> bool {
        self.intercept
    }

    pub fn group(&self) -> Option<&str> {
        self.group.as_deref()
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn ranked_regressor(&self) -> Option<&Term> {
        self.regressors.iter().find(|t| t.ranked)
    }

    /// The model written back as a formula.
    pub fn formula(&self) -> String {
        let rhs: Vec<String> = self.regressors.iter().map(Term::label).collect();
        match &self.group {
            Some(g) if rhs.len() == 1 => format!("{} ~ {}:{}", self.response.label(), rhs[0], g),
            Some(g) => format!("{} ~ ({}):{}", self.response.label(), rhs.join(" + "), g),
            None => format!("{} ~ {}", self.response.label(), rhs.join(" + ")),
        }
    }
}
