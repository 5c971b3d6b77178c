//! Brute-force reference implementations shared by the integration and
//! acceptance tests: double loops and normal equations, independent of the
//! library code.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rankinfer::numerics::SeededRng;

pub fn indicator(u: f64, v: f64, omega: f64) -> f64 {
    omega * f64::from(u8::from(u <= v)) + (1.0 - omega) * f64::from(u8::from(u < v))
}

pub fn naive_matvec(x: &[f64], v: &[f64], omega: f64) -> Vec<f64> {
    x.iter()
        .map(|&xi| x.iter().zip(v).map(|(&xk, &vk)| indicator(xi, xk, omega) * vk).sum())
        .collect()
}

/// Increasing fractional rank by counting.
pub fn naive_frank(x: &[f64], omega: f64) -> Vec<f64> {
    let n = x.len() as f64;
    x.iter()
        .map(|&xi| {
            let weak = x.iter().filter(|&&v| v <= xi).count() as f64;
            let strict = x.iter().filter(|&&v| v < xi).count() as f64;
            (omega * weak + (1.0 - omega) * strict + 1.0 - omega) / n
        })
        .collect()
}

/// OLS through the normal equations.
pub fn ols(z: &DMatrix<f64>, y: &[f64]) -> Vec<f64> {
    let zt = z.transpose();
    let lhs = &zt * z;
    let rhs = &zt * DVector::from_column_slice(y);
    lhs.lu()
        .solve(&rhs)
        .expect("singular normal equations")
        .as_slice()
        .to_vec()
}

pub fn drop_column(z: &DMatrix<f64>, j: usize) -> DMatrix<f64> {
    z.clone().remove_column(j)
}

/// Coefficients of column `j` regressed on the other columns.
pub fn per_column_gamma(z: &DMatrix<f64>, j: usize) -> Vec<f64> {
    ols(&drop_column(z, j), z.column(j).as_slice())
}

/// Heteroskedasticity-robust (HC0) sandwich covariance.
pub fn hc0(z: &DMatrix<f64>, resid: &[f64]) -> DMatrix<f64> {
    let bread = (z.transpose() * z).try_inverse().unwrap();
    let mut meat = DMatrix::zeros(z.ncols(), z.ncols());
    for i in 0..z.nrows() {
        let zi = z.row(i).transpose();
        meat += &zi * zi.transpose() * resid[i] * resid[i];
    }
    &bread * meat * &bread
}

/// Classical homoskedastic OLS covariance `s^2 (Z'Z)^-1` with `n - k` degrees of freedom.
pub fn homoskedastic_vcov(z: &DMatrix<f64>, resid: &[f64]) -> DMatrix<f64> {
    let (n, k) = z.shape();
    let s2 = resid.iter().map(|e| e * e).sum::<f64>() / (n - k) as f64;
    (z.transpose() * z).try_inverse().unwrap() * s2
}

/// Pearson correlation of mid-ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let rx = naive_frank(x, 0.5);
    let ry = naive_frank(y, 0.5);
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for i in 0..x.len() {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Inputs of a rank regression, described from scratch.
#[derive(Clone, Debug)]
pub struct RankProblem {
    pub y: Vec<f64>,
    pub y_ranked: bool,
    pub x: Option<Vec<f64>>,
    pub w: Vec<Vec<f64>>,
    /// Group level (0-based) of each row.
    pub groups: Option<(usize, Vec<usize>)>,
    pub omega: f64,
}

/// Design in the library's column order: intercept, `r(X)`, covariates; when
/// grouped every one of those is repeated per level.
pub struct OracleFit {
    pub z: DMatrix<f64>,
    pub theta: Vec<f64>,
    pub resid: Vec<f64>,
    pub vcov: DMatrix<f64>,
    pub ry: Vec<f64>,
    pub rx: Option<Vec<f64>>,
}

impl RankProblem {
    fn response(&self) -> Vec<f64> {
        if self.y_ranked {
            naive_frank(&self.y, self.omega)
        } else {
            self.y.clone()
        }
    }

    fn base(&self, rx: &Option<Vec<f64>>) -> Vec<(Vec<f64>, bool)> {
        let n = self.y.len();
        let mut base = vec![(vec![1.0; n], false)];
        if let Some(r) = rx {
            base.push((r.clone(), true));
        }
        for w in &self.w {
            base.push((w.clone(), false));
        }
        base
    }

    /// Design columns and, for each, whether it is ranked and its row mask.
    fn design(&self, rx: &Option<Vec<f64>>) -> (DMatrix<f64>, Vec<bool>, Vec<Vec<f64>>) {
        let n = self.y.len();
        let base = self.base(rx);
        let mut cols = Vec::new();
        let mut ranked = Vec::new();
        let mut masks = Vec::new();
        match &self.groups {
            None => {
                for (c, r) in base {
                    cols.push(c);
                    ranked.push(r);
                    masks.push(vec![1.0; n]);
                }
            }
            Some((levels, g)) => {
                for (c, r) in base {
                    for lvl in 0..*levels {
                        let mask: Vec<f64> = g.iter().map(|&gi| f64::from(u8::from(gi == lvl))).collect();
                        cols.push(c.iter().zip(&mask).map(|(a, b)| a * b).collect());
                        ranked.push(r);
                        masks.push(mask);
                    }
                }
            }
        }
        let z = DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i]);
        (z, ranked, masks)
    }

    /// Every quantity recomputed from the definitions with O(n^2) loops.
    pub fn oracle(&self) -> OracleFit {
        let n = self.y.len();
        let nf = n as f64;
        let omega = self.omega;
        let ry = self.response();
        let rx = self.x.as_ref().map(|x| naive_frank(x, omega));
        let (z, ranked, masks) = self.design(&rx);
        let k = z.ncols();
        let theta = ols(&z, &ry);
        let fitted = &z * DVector::from_column_slice(&theta);
        let resid: Vec<f64> = (0..n).map(|i| ry[i] - fitted[i]).collect();

        // Design entry of column c at row k, with the regressor rank of row k
        // replaced by I(X_i, X_k) when the column is ranked.
        let z_sub = |i: usize, kk: usize, c: usize| -> f64 {
            if ranked[c] {
                let x = self.x.as_ref().unwrap();
                indicator(x[i], x[kk], omega) * masks[c][kk]
            } else {
                z[(kk, c)]
            }
        };
        let y_sub = |i: usize, kk: usize| -> f64 {
            if self.y_ranked {
                indicator(self.y[i], self.y[kk], omega)
            } else {
                ry[kk]
            }
        };

        let mut sums = Vec::with_capacity(k);
        let mut sig = Vec::with_capacity(k);
        for j in 0..k {
            let gamma = per_column_gamma(&z, j);
            let others: Vec<usize> = (0..k).filter(|&c| c != j).collect();
            let nu: Vec<f64> = (0..n)
                .map(|r| z[(r, j)] - others.iter().zip(&gamma).map(|(&c, g)| g * z[(r, c)]).sum::<f64>())
                .collect();
            let s2 = nu.iter().map(|v| v * v).sum::<f64>() / nf;
            let mut total = vec![0.0; n];
            for i in 0..n {
                let h1 = resid[i] * nu[i];
                let mut h2 = 0.0;
                let mut h3 = 0.0;
                for kk in 0..n {
                    let a = y_sub(i, kk) - (0..k).map(|c| theta[c] * z_sub(i, kk, c)).sum::<f64>();
                    h2 += a * nu[kk];
                    let b = z_sub(i, kk, j)
                        - others
                            .iter()
                            .zip(&gamma)
                            .map(|(&c, g)| g * z_sub(i, kk, c))
                            .sum::<f64>();
                    h3 += resid[kk] * b;
                }
                total[i] = h1 + h2 / nf + h3 / nf;
            }
            sums.push(total);
            sig.push(s2);
        }
        let vcov = DMatrix::from_fn(k, k, |a, b| {
            let cross: f64 = sums[a].iter().zip(&sums[b]).map(|(x, y)| x * y).sum();
            cross / (nf * sig[a] * sig[b]) / nf
        });
        OracleFit {
            z,
            theta,
            resid,
            vcov,
            ry,
            rx,
        }
    }
}

/// Values drawn from `0..levels` so that ties are frequent.
pub fn tied_values(rng: &mut SeededRng, n: usize, levels: u64) -> Vec<f64> {
    (0..n).map(|_| rng.next_below(levels) as f64).collect()
}

pub fn normals(rng: &mut SeededRng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.next_normal()).collect()
}

/// Bivariate normal pairs with correlation `rho`.
pub fn gaussian_pairs(rng: &mut SeededRng, n: usize, rho: f64) -> (Vec<f64>, Vec<f64>) {
    let x = normals(rng, n);
    let e = normals(rng, n);
    let y = x
        .iter()
        .zip(&e)
        .map(|(a, b)| rho * a + (1.0 - rho * rho).sqrt() * b)
        .collect();
    (x, y)
}

pub fn max_rel_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let scale = b.amax().max(f64::MIN_POSITIVE);
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs() / scale)
        .fold(0.0, f64::max)
}

impl RankProblem {
    /// Ranked response on one ranked regressor plus `covariates` normal
    /// columns. With `ties` the values are rounded so that ties are common.
    pub fn random(rng: &mut SeededRng, n: usize, covariates: usize, ties: bool, omega: f64) -> Self {
        let x = if ties {
            tied_values(rng, n, (n / 8) as u64)
        } else {
            normals(rng, n)
        };
        let w: Vec<Vec<f64>> = (0..covariates).map(|_| normals(rng, n)).collect();
        let y: Vec<f64> = (0..n)
            .map(|i| {
                let base = 0.5 * x[i] + w.iter().map(|c| 0.3 * c[i]).sum::<f64>() + rng.next_normal();
                if ties {
                    base.round()
                } else {
                    base
                }
            })
            .collect();
        RankProblem {
            y,
            y_ranked: true,
            x: Some(x),
            w,
            groups: None,
            omega,
        }
    }

    /// The same problem as a table plus formula for the library.
    pub fn to_table(&self) -> (rankinfer::table::TableData, String) {
        use rankinfer::table::{Column, TableData};
        let mut cols: Vec<(String, Column)> = vec![("y".into(), Column::from(self.y.clone()))];
        let mut terms = Vec::new();
        if let Some(x) = &self.x {
            cols.push(("x".into(), Column::from(x.clone())));
            terms.push("r(x)".to_string());
        }
        for (i, w) in self.w.iter().enumerate() {
            cols.push((format!("w{}", i + 1), Column::from(w.clone())));
            terms.push(format!("w{}", i + 1));
        }
        let lhs = if self.y_ranked { "r(y)" } else { "y" };
        let formula = match &self.groups {
            None => format!("{lhs} ~ {}", terms.join(" + ")),
            Some((_, g)) => {
                cols.push((
                    "g".into(),
                    Column::from(g.iter().map(|&v| v as f64).collect::<Vec<_>>()),
                ));
                format!("{lhs} ~ ({}):g", terms.join(" + "))
            }
        };
        (TableData::new(cols).unwrap(), formula)
    }
}
