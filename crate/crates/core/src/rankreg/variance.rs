use nalgebra::DVector;
use rayon::prelude::*;

use crate::numerics::{inverse_from_qr, DenseMatrix};

use super::{IndicatorOperator, RankRegError, RankRegressionFit};

/// `(Z'Z)^-1 D^-1` with `D = diag((Z'Z)^-1)`. Column `j` has a 1 in row `j`
/// and minus the coefficients of the regression of `Z_j` on the other
/// columns everywhere else.
pub fn projection_coefficients(fit: &RankRegressionFit) -> Result<DenseMatrix, RankRegError> {
    let mut m = inverse_from_qr(fit.qr())?;
    for j in 0..m.ncols() {
        let d = m[(j, j)];
        m.column_mut(j).unscale_mut(d);
        m[(j, j)] = 1.0;
    }
    Ok(m)
}

/// `gamma_j`: coefficients from regressing column `j` on the remaining
/// columns, in column order with `j` skipped.
pub fn gammas(projection: &DenseMatrix, j: usize) -> Vec<f64> {
    (0..projection.nrows())
        .filter(|&k| k != j)
        .map(|k| -projection[(k, j)])
        .collect()
}

/// Per-observation influence pieces for one coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct HTerms {
    pub h1: Vec<f64>,
    pub h2: Vec<f64>,
    pub h3: Vec<f64>,
    /// `mean(nu^2)` for the coefficient's projection residual `nu`.
    pub sigma_nu_sq: f64,
}

impl HTerms {
    pub fn total(&self) -> Vec<f64> {
        self.h1
            .iter()
            .zip(&self.h2)
            .zip(&self.h3)
            .map(|((a, b), c)| a + b + c)
            .collect()
    }
}

/// Shared per-fit state: the indicator operators (one sort per ranked
/// variable) and the rank multipliers.
struct Workspace<'a> {
    fit: &'a RankRegressionFit,
    op_y: Option<IndicatorOperator>,
    op_x: Option<IndicatorOperator>,
    /// `r_k`: sum of the ranked-regressor coefficients active in row `k`.
    r: Vec<f64>,
}

impl<'a> Workspace<'a> {
    fn new(fit: &'a RankRegressionFit) -> Result<Self, RankRegError> {
        let d = fit.design();
        let omega = d.model().omega();
        let op_y = match d.model().response().ranked {
            true => Some(IndicatorOperator::new(d.response_raw(), omega)?),
            false => None,
        };
        let op_x = match d.regressor_raw() {
            Some(x) => Some(IndicatorOperator::new(x, omega)?),
            None => None,
        };
        let r = Self::ranked_multiplier(fit, fit.coefficients());
        Ok(Self { fit, op_y, op_x, r })
    }

    /// `sum_c w_c * m_kc` over ranked columns `c`, where `m_kc` is the
    /// group indicator of the column (or 1).
    fn ranked_multiplier(fit: &RankRegressionFit, w: &[f64]) -> Vec<f64> {
        let d = fit.design();
        let n = d.nobs();
        let mut out = vec![0.0; n];
        for (c, role) in d.roles().iter().enumerate() {
            if !role.ranked {
                continue;
            }
            match (role.group, d.group_rows()) {
                (Some(lvl), Some(rows)) => {
                    for k in 0..n {
                        if rows[k] == lvl {
                            out[k] += w[c];
                        }
                    }
                }
                _ => out.iter_mut().for_each(|o| *o += w[c]),
            }
        }
        out
    }

    fn h_terms(&self, g: &[f64]) -> HTerms {
        let d = self.fit.design();
        let n = d.nobs();
        let nf = n as f64;
        let eps = self.fit.residuals();
        let nu = (d.z() * DVector::from_column_slice(g)).data.as_vec().clone();
        let sigma_nu_sq = nu.iter().map(|v| v * v).sum::<f64>() / nf;
        let h1: Vec<f64> = eps.iter().zip(&nu).map(|(e, v)| e * v).collect();
        let eps_nu: f64 = h1.iter().sum();

        // H2: the response residual with each estimated rank replaced by its indicator.
        let mut h2 = vec![eps_nu / nf; n];
        if let (Some(op), Some(ry)) = (&self.op_y, d.response_ranks()) {
            let iy = op.apply(&nu);
            let shift: f64 = ry.iter().zip(&nu).map(|(a, b)| a * b).sum();
            h2.iter_mut().zip(&iy).for_each(|(h, v)| *h += (v - shift) / nf);
        }
        if let (Some(op), Some(rx)) = (&self.op_x, d.regressor_ranks()) {
            let r_nu: Vec<f64> = self.r.iter().zip(&nu).map(|(a, b)| a * b).collect();
            let ix = op.apply(&r_nu);
            let shift: f64 = r_nu.iter().zip(rx).map(|(a, b)| a * b).sum();
            h2.iter_mut().zip(&ix).for_each(|(h, v)| *h -= (v - shift) / nf);
        }

        // H3: the projection residual with the regressor rank replaced by its indicator.
        let mut h3 = vec![eps_nu / nf; n];
        if let (Some(op), Some(rx)) = (&self.op_x, d.regressor_ranks()) {
            let u = Self::ranked_multiplier(self.fit, g);
            let eps_u: Vec<f64> = eps.iter().zip(&u).map(|(a, b)| a * b).collect();
            let ix = op.apply(&eps_u);
            let shift: f64 = eps_u.iter().zip(rx).map(|(a, b)| a * b).sum();
            h3.iter_mut().zip(&ix).for_each(|(h, v)| *h += (v - shift) / nf);
        }
        HTerms {
            h1,
            h2,
            h3,
            sigma_nu_sq,
        }
    }

    /// `H1 + H2 + H3` and `mean(nu^2)` without the separate pieces, with
    /// both regressor-rank products taken as the single product
    /// `I_X (eps * u - r * nu)`.
    fn influence(&self, g: &[f64], scratch: &mut Scratch) -> (Vec<f64>, f64) {
        let d = self.fit.design();
        let n = d.nobs();
        let nf = n as f64;
        let zs = d.z().as_slice();
        let eps = self.fit.residuals();
        let ry = self.op_y.as_ref().and(d.response_ranks());
        let rx = self.op_x.as_ref().and(d.regressor_ranks());
        let ranked: Vec<(f64, Option<usize>)> = d
            .roles()
            .iter()
            .zip(g)
            .filter(|(role, _)| role.ranked)
            .map(|(role, &gc)| (gc, role.group))
            .collect();
        let rows = d.group_rows();

        let Scratch { nu, t, staged } = scratch;
        nu.resize(n, 0.0);
        t.resize(n, 0.0);
        let mut total = vec![0.0; n];
        let (mut nu_sq, mut eps_nu, mut ry_nu, mut t_rx) = (0.0, 0.0, 0.0, 0.0);
        for i in 0..n {
            let mut v = 0.0;
            for (c, gc) in g.iter().enumerate() {
                v += zs[c * n + i] * gc;
            }
            nu[i] = v;
            nu_sq += v * v;
            total[i] = eps[i] * v;
            eps_nu += total[i];
            if let Some(ry) = ry {
                ry_nu += ry[i] * v;
            }
            if let Some(rx) = rx {
                let mut u = 0.0;
                for &(gc, lvl) in &ranked {
                    match (lvl, rows) {
                        (Some(l), Some(rows)) if rows[i] != l => {}
                        _ => u += gc,
                    }
                }
                t[i] = eps[i] * u - self.r[i] * v;
                t_rx += t[i] * rx[i];
            }
        }
        if let Some(op) = &self.op_y {
            op.accumulate(nu, 1.0 / nf, &mut total, staged);
        }
        if let Some(op) = &self.op_x {
            op.accumulate(t, 1.0 / nf, &mut total, staged);
        }
        let shift = (2.0 * eps_nu - ry_nu - t_rx) / nf;
        total.iter_mut().for_each(|s| *s += shift);
        (total, nu_sq / nf)
    }
}

/// Per-worker buffers reused across coefficients.
#[derive(Default)]
struct Scratch {
    nu: Vec<f64>,
    t: Vec<f64>,
    staged: Vec<f64>,
}

/// H-terms of coefficient `j`, given the projection matrix from
/// [`projection_coefficients`].
pub fn h_terms(fit: &RankRegressionFit, projection: &DenseMatrix, j: usize) -> Result<HTerms, RankRegError> {
    let k = fit.coefficients().len();
    if projection.shape() != (k, k) || j >= k {
        return Err(RankRegError::DimensionMismatch(format!(
            "projection is {:?} and j = {j} for a fit with {k} coefficients",
            projection.shape()
        )));
    }
    let ws = Workspace::new(fit)?;
    Ok(ws.h_terms(projection.column(j).as_slice()))
}

/// Covariance of the coefficient vector that accounts for estimated ranks.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectedCovariance {
    /// `Sigma / n`, the covariance of the coefficient estimates.
    pub vcov: DenseMatrix,
    /// The asymptotic covariance `Sigma`.
    pub asymptotic: DenseMatrix,
    pub sigma_nu_sq: Vec<f64>,
    pub nobs: usize,
}

impl CorrectedCovariance {
    pub fn std_errors(&self) -> Vec<f64> {
        self.vcov.diagonal().iter().map(|v| v.max(0.0).sqrt()).collect()
    }
}

/// `Sigma_jk = sum_i S_ij S_ik / (n s_j s_k)` where `S_ij = H1 + H2 + H3` of
/// coefficient `j` and `s_j = mean(nu_j^2)`.
pub fn corrected_vcov(fit: &RankRegressionFit) -> Result<CorrectedCovariance, RankRegError> {
    let projection = projection_coefficients(fit)?;
    let ws = Workspace::new(fit)?;
    let k = projection.ncols();
    let n = fit.nobs();
    let per_coef: Vec<(Vec<f64>, f64)> = (0..k)
        .into_par_iter()
        .map_init(Scratch::default, |scratch, j| {
            ws.influence(projection.column(j).as_slice(), scratch)
        })
        .collect();
    let nf = n as f64;
    let mut asymptotic = DenseMatrix::zeros(k, k);
    for a in 0..k {
        for b in a..k {
            let cross: f64 = per_coef[a].0.iter().zip(&per_coef[b].0).map(|(x, y)| x * y).sum();
            let v = cross / (nf * per_coef[a].1 * per_coef[b].1);
            asymptotic[(a, b)] = v;
            asymptotic[(b, a)] = v;
        }
    }
    Ok(CorrectedCovariance {
        vcov: &asymptotic / nf,
        asymptotic,
        sigma_nu_sq: per_coef.iter().map(|p| p.1).collect(),
        nobs: n,
    })
}
