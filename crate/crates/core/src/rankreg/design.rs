use std::collections::BTreeMap;

use nalgebra::DVector;

use crate::numerics::{qr_decompose, DenseMatrix, QrFactorization};
use crate::ranking::{frank, frank_against, TieRule};
use crate::table::{Column, TableData};

use super::{RankRegError, RankRegressionModel};

/// One column of the design before group expansion.
#[derive(Debug, Clone, PartialEq)]
pub enum BaseColumn {
    Intercept,
    Ranked(String),
    Numeric(String),
    /// Treatment dummy `1{var == level}`.
    Dummy {
        var: String,
        level: String,
    },
}

impl BaseColumn {
    fn name(&self) -> String {
        match self {
            BaseColumn::Intercept => "(Intercept)".into(),
            BaseColumn::Ranked(v) => format!("r({v})"),
            BaseColumn::Numeric(v) => v.clone(),
            BaseColumn::Dummy { var, level } => format!("{var}{level}"),
        }
    }
}

/// How a design column relates to the ranked regressor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ColumnRole {
    /// The column is `R^X` (times a group indicator when grouped).
    pub ranked: bool,
    /// Level index of the group indicator multiplying this column.
    pub group: Option<usize>,
}

/// A design matrix together with what is needed to rebuild it for new data.
#[derive(Debug, Clone)]
pub struct Design {
    pub(crate) model: RankRegressionModel,
    pub(crate) base: Vec<BaseColumn>,
    pub(crate) categorical_levels: BTreeMap<String, Vec<String>>,
    pub(crate) group_levels: Vec<String>,
    pub(crate) column_names: Vec<String>,
    pub(crate) roles: Vec<ColumnRole>,
    pub(crate) z: DenseMatrix,
    pub(crate) response: Vec<f64>,
    pub(crate) response_raw: Vec<f64>,
    pub(crate) regressor_raw: Option<Vec<f64>>,
    pub(crate) regressor_ranks: Option<Vec<f64>>,
    pub(crate) group_rows: Option<Vec<usize>>,
    pub(crate) warnings: Vec<String>,
}

impl Design {
    pub fn z(&self) -> &DenseMatrix {
        &self.z
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn roles(&self) -> &[ColumnRole] {
        &self.roles
    }

    /// The regression response: fractional ranks when the response is ranked.
    pub fn response(&self) -> &[f64] {
        &self.response
    }

    pub fn response_raw(&self) -> &[f64] {
        &self.response_raw
    }

    /// Fractional ranks of the response, if it is ranked.
    pub fn response_ranks(&self) -> Option<&[f64]> {
        self.model.response().ranked.then_some(self.response.as_slice())
    }

    pub fn regressor_raw(&self) -> Option<&[f64]> {
        self.regressor_raw.as_deref()
    }

    /// Fractional ranks of the ranked regressor, if there is one.
    pub fn regressor_ranks(&self) -> Option<&[f64]> {
        self.regressor_ranks.as_deref()
    }

    pub fn group_levels(&self) -> &[String] {
        &self.group_levels
    }

    /// Group level index of every row, when grouped.
    pub fn group_rows(&self) -> Option<&[usize]> {
        self.group_rows.as_deref()
    }

    pub fn model(&self) -> &RankRegressionModel {
        &self.model
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn nobs(&self) -> usize {
        self.z.nrows()
    }
}

/// Levels in sorted order: numerically when every label is a number, otherwise lexicographically.
fn sorted_levels(labels: &[String]) -> Vec<String> {
    let mut levels: Vec<String> = labels.to_vec();
    levels.sort();
    levels.dedup();
    let numeric: Option<Vec<f64>> = levels.iter().map(|l| l.parse::<f64>().ok()).collect();
    if let Some(keys) = numeric {
        let mut paired: Vec<(f64, String)> = keys.into_iter().zip(levels).collect();
        paired.sort_by(|a, b| a.0.total_cmp(&b.0));
        levels = paired.into_iter().map(|(_, l)| l).collect();
    }
    levels
}

fn level_index(levels: &[String], column: &str, labels: &[String]) -> Result<Vec<usize>, RankRegError> {
    let lookup: BTreeMap<&str, usize> = levels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    labels
        .iter()
        .map(|l| {
            lookup
                .get(l.as_str())
                .copied()
                .ok_or_else(|| RankRegError::UnknownLevel {
                    column: column.into(),
                    level: l.clone(),
                })
        })
        .collect()
}

fn rule(omega: f64) -> Result<TieRule, RankRegError> {
    Ok(TieRule::increasing(omega)?)
}

/// Base columns evaluated on `data`, with `rank` turning raw ranked-regressor values into ranks.
fn evaluate_base(
    base: &[BaseColumn],
    data: &TableData,
    rank: &dyn Fn(&[f64]) -> Result<Vec<f64>, RankRegError>,
) -> Result<(Vec<Vec<f64>>, Option<(Vec<f64>, Vec<f64>)>), RankRegError> {
    let n = data.nrows();
    let mut cols = Vec::with_capacity(base.len());
    let mut ranked = None;
    let mut label_cache: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    for b in base {
        let col = match b {
            BaseColumn::Intercept => vec![1.0; n],
            BaseColumn::Numeric(v) => data.numeric(v)?,
            BaseColumn::Ranked(v) => {
                let raw = data.numeric(v)?;
                let r = rank(&raw)?;
                ranked = Some((raw, r.clone()));
                r
            }
            BaseColumn::Dummy { var, level } => {
                if !label_cache.contains_key(var.as_str()) {
                    label_cache.insert(var, data.labels(var)?);
                }
                label_cache[var.as_str()]
                    .iter()
                    .map(|l| f64::from(u8::from(l == level)))
                    .collect()
            }
        };
        cols.push(col);
    }
    Ok((cols, ranked))
}

fn check_categorical_levels(levels: &BTreeMap<String, Vec<String>>, data: &TableData) -> Result<(), RankRegError> {
    for (var, known) in levels {
        if let Some(level) = data.labels(var)?.into_iter().find(|l| !known.contains(l)) {
            return Err(RankRegError::UnknownLevel {
                column: var.clone(),
                level,
            });
        }
    }
    Ok(())
}

/// Expands base columns by group and assembles Z.
fn assemble(
    base: &[BaseColumn],
    cols: &[Vec<f64>],
    group_rows: Option<&[usize]>,
    group_levels: &[String],
    group_name: Option<&str>,
) -> (DenseMatrix, Vec<String>, Vec<ColumnRole>) {
    let n = cols.first().map(Vec::len).unwrap_or(0);
    match (group_rows, group_name) {
        (Some(rows), Some(g)) => {
            let k = base.len() * group_levels.len();
            let mut z = DenseMatrix::zeros(n, k);
            let mut names = Vec::with_capacity(k);
            let mut roles = Vec::with_capacity(k);
            let mut c = 0;
            for b in 0..base.len() {
                for (lvl, level) in group_levels.iter().enumerate() {
                    let mut col = z.column_mut(c);
                    for i in 0..n {
                        if rows[i] == lvl {
                            col[i] = cols[b][i];
                        }
                    }
                    names.push(match &base[b] {
                        BaseColumn::Intercept => format!("{g}{level}"),
                        other => format!("{}:{g}{level}", other.name()),
                    });
                    roles.push(ColumnRole {
                        ranked: matches!(base[b], BaseColumn::Ranked(_)),
                        group: Some(lvl),
                    });
                    c += 1;
                }
            }
            (z, names, roles)
        }
        _ => {
            let mut z = DenseMatrix::zeros(n, base.len());
            let mut names = Vec::with_capacity(base.len());
            let mut roles = Vec::with_capacity(base.len());
            for b in 0..base.len() {
                let c = b;
                z.column_mut(c).copy_from_slice(&cols[b]);
                names.push(base[b].name());
                roles.push(ColumnRole {
                    ranked: matches!(base[b], BaseColumn::Ranked(_)),
                    group: None,
                });
            }
            (z, names, roles)
        }
    }
}

/// Builds the design matrix for `model` on `data`.
///
/// Numeric covariates enter as they are; text covariates become treatment
/// dummies for every level but the first in sorted order. With a group column
/// every design column, including the intercept, is interacted with each group
/// indicator and there is no global intercept. A group column with a single
/// level falls back to the ungrouped model and records a warning.
pub fn build_design(model: &RankRegressionModel, data: &TableData) -> Result<Design, RankRegError> {
    let omega = model.omega();
    let response_raw = data.numeric(&model.response().name)?;
    let response = if model.response().ranked {
        frank(&response_raw, rule(omega)?)?.values
    } else {
        response_raw.clone()
    };

    let mut base = Vec::new();
    let mut categorical_levels = BTreeMap::new();
    if model.has_intercept() {
        base.push(BaseColumn::Intercept);
    }
    for t in model.regressors() {
        if t.ranked {
            base.push(BaseColumn::Ranked(t.name.clone()));
            continue;
        }
        match data.column(&t.name)? {
            Column::Numeric(_) => base.push(BaseColumn::Numeric(t.name.clone())),
            Column::Categorical(_) => {
                let labels = data.labels(&t.name)?;
                let levels = sorted_levels(&labels);
                for level in levels.iter().skip(1) {
                    base.push(BaseColumn::Dummy {
                        var: t.name.clone(),
                        level: level.clone(),
                    });
                }
                categorical_levels.insert(t.name.clone(), levels);
            }
        }
    }

    let mut warnings = Vec::new();
    let mut group_levels = Vec::new();
    let mut group_rows = None;
    if let Some(g) = model.group() {
        let labels = data.labels(g)?;
        let levels = sorted_levels(&labels);
        let rows = level_index(&levels, g, &labels)?;
        let mut sizes = vec![0usize; levels.len()];
        rows.iter().for_each(|&r| sizes[r] += 1);
        if let Some((lvl, &size)) = sizes.iter().enumerate().find(|(_, &s)| s < 2) {
            return Err(RankRegError::EmptyGroup {
                level: levels[lvl].clone(),
                rows: size,
            });
        }
        if levels.len() == 1 {
            warnings.push(format!(
                "group column `{g}` has a single level `{}`; fitted without grouping",
                levels[0]
            ));
        } else {
            group_levels = levels;
            group_rows = Some(rows);
        }
    }

    let rank_rule = rule(omega)?;
    let (cols, ranked) = evaluate_base(&base, data, &|raw| Ok(frank(raw, rank_rule)?.values))?;
    let group_name = group_rows.as_ref().and(model.group());
    let (z, column_names, roles) = assemble(&base, &cols, group_rows.as_deref(), &group_levels, group_name);
    let (regressor_raw, regressor_ranks) = match ranked {
        Some((raw, r)) => (Some(raw), Some(r)),
        None => (None, None),
    };
    let model = match group_name {
        Some(_) => model.clone(),
        None => RankRegressionModel {
            group: None,
            ..model.clone()
        },
    };
    Ok(Design {
        model,
        base,
        categorical_levels,
        group_levels,
        column_names,
        roles,
        z,
        response,
        response_raw,
        regressor_raw,
        regressor_ranks,
        group_rows,
        warnings,
    })
}

/// An OLS fit on a rank design.
#[derive(Debug, Clone)]
pub struct RankRegressionFit {
    design: Design,
    qr: QrFactorization,
    coefficients: Vec<f64>,
    residuals: Vec<f64>,
}

impl RankRegressionFit {
    pub fn design(&self) -> &Design {
        &self.design
    }

    pub fn qr(&self) -> &QrFactorization {
        &self.qr
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.design
            .column_names
            .iter()
            .position(|c| c == name)
            .map(|i| self.coefficients[i])
    }

    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    pub fn column_names(&self) -> &[String] {
        &self.design.column_names
    }

    pub fn nobs(&self) -> usize {
        self.design.nobs()
    }

    pub fn model(&self) -> &RankRegressionModel {
        &self.design.model
    }

    pub fn warnings(&self) -> &[String] {
        &self.design.warnings
    }

    /// `Z beta` on the training rows.
    pub fn fitted_values(&self) -> Vec<f64> {
        (&self.design.z * DVector::from_column_slice(&self.coefficients))
            .as_slice()
            .to_vec()
    }
}

pub fn fit_design(design: Design) -> Result<RankRegressionFit, RankRegError> {
    let (rows, columns) = design.z.shape();
    if columns == 0 || rows < columns {
        return Err(RankRegError::TooFewObservations { rows, columns });
    }
    let qr = qr_decompose(&design.z)?;
    let coefficients = qr.solve(&design.response)?;
    if let Some(i) = coefficients.iter().position(|c| !c.is_finite()) {
        return Err(RankRegError::NonFinite {
            what: "coefficient vector".into(),
            index: i,
        });
    }
    let fitted = &design.z * DVector::from_column_slice(&coefficients);
    let residuals = design.response.iter().zip(fitted.iter()).map(|(y, f)| y - f).collect();
    Ok(RankRegressionFit {
        design,
        qr,
        coefficients,
        residuals,
    })
}

/// Builds the design and fits it by OLS.
pub fn fit(model: &RankRegressionModel, data: &TableData) -> Result<RankRegressionFit, RankRegError> {
    fit_design(build_design(model, data)?)
}

/// Fitted values for new rows. The ranked regressor of each new row is ranked
/// against the training sample, so values outside its range get ranks at or
/// beyond the boundary.
pub fn predict(fit: &RankRegressionFit, newdata: &TableData) -> Result<Vec<f64>, RankRegError> {
    let d = &fit.design;
    let rank_rule = rule(d.model.omega())?;
    let reference = d.regressor_raw.clone().unwrap_or_default();
    check_categorical_levels(&d.categorical_levels, newdata)?;
    let (cols, _) = evaluate_base(&d.base, newdata, &|raw| {
        Ok(frank_against(raw, &reference, rank_rule)?.values)
    })?;
    let group_rows = match d.model.group() {
        Some(g) => Some(level_index(&d.group_levels, g, &newdata.labels(g)?)?),
        None => None,
    };
    let (z, _, _) = assemble(&d.base, &cols, group_rows.as_deref(), &d.group_levels, d.model.group());
    Ok((&z * DVector::from_column_slice(&fit.coefficients)).as_slice().to_vec())
}
