//! Finite-sample confidence sets for the ranks of multinomial probabilities.
//!
//! Conditional on `S = X_k + X_l`, `X_k` is Binomial(S, theta_k / (theta_k +
//! theta_l)), so `H_{k,l}: theta_k <= theta_l` is tested with the upper tail
//! of Binomial(S, 1/2) at `X_k`. The p-values of a family of such hypotheses
//! are adjusted (Holm or Bonferroni) and rejections are turned into rank
//! bounds exactly as in the Gaussian construction.

use crate::numerics::log_binom_tail;
use crate::rankcs::{CsMode, RankConfidenceSet, RankInterval, Sidedness};
use crate::ranking::{irank, TieRule};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MultinomError {
    #[error("need at least 2 categories, got {0}")]
    InsufficientCategories(usize),
    #[error("total count must be positive")]
    EmptySample,
    #[error("coverage must lie in (0, 1), got {0}")]
    InvalidCoverage(f64),
    #[error("category index {index} out of range for {categories} categories")]
    IndexOutOfRange { index: usize, categories: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Correction {
    Holm,
    Bonferroni,
}

/// Observed category counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultinomialCounts {
    counts: Vec<u64>,
    labels: Option<Vec<String>>,
}

impl MultinomialCounts {
    pub fn new(counts: Vec<u64>) -> Result<Self, MultinomError> {
        if counts.len() < 2 {
            return Err(MultinomError::InsufficientCategories(counts.len()));
        }
        if counts.iter().all(|&c| c == 0) {
            return Err(MultinomError::EmptySample);
        }
        Ok(Self { counts, labels: None })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Self {
        self.labels = Some(labels);
        self
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// Largest `S` for which the tail is summed in exact integer arithmetic.
const EXACT_MAX_TOTAL: u64 = 62;

/// p-value for `H_{k,l}: theta_k <= theta_l`:
/// `2^-S sum_{i = X_k}^{S} C(S, i)` with `S = X_k + X_l`.
///
/// Correctly rounded for `S <= 62`; above that the tail is summed in log space.
pub fn pairwise_pvalue(xk: u64, xl: u64) -> f64 {
    let s = xk + xl;
    if s == 0 {
        return 1.0;
    }
    if s <= EXACT_MAX_TOTAL {
        return exact_tail(xk, s);
    }
    log_binom_tail(xk, s).exp().clamp(0.0, 1.0)
}

fn exact_tail(x: u64, s: u64) -> f64 {
    let mut c = 1u128;
    let mut total = 0u128;
    for i in 0..=s {
        if i >= x {
            total += c;
        }
        c = c * u128::from(s - i) / u128::from(i + 1);
    }
    // total < 2^62 converts with a single rounding; the power of two is exact
    total as f64 * 0.5f64.powi(s as i32)
}

/// p-values for every ordered pair `(k, l)`, `k != l`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwisePValueTable {
    values: BTreeMap<(usize, usize), f64>,
}

impl PairwisePValueTable {
    pub fn from_counts(data: &MultinomialCounts) -> Self {
        let x = data.counts();
        let mut values = BTreeMap::new();
        for k in 0..x.len() {
            for l in 0..x.len() {
                if k != l {
                    values.insert((k, l), pairwise_pvalue(x[k], x[l]));
                }
            }
        }
        Self { values }
    }

    pub fn get(&self, k: usize, l: usize) -> Option<f64> {
        self.values.get(&(k, l)).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.values.iter().map(|(&key, &v)| (key, v))
    }
}

/// Familywise adjustment; the family size is `pvals.len()`.
///
/// Holm sorts ascending (ties by position), multiplies the `r`-th smallest by
/// `M - r + 1` and enforces monotonicity with a running maximum.
pub fn adjust_pvalues(pvals: &[f64], method: Correction) -> Vec<f64> {
    let m = pvals.len() as f64;
    match method {
        Correction::Bonferroni => pvals.iter().map(|p| (m * p).min(1.0)).collect(),
        Correction::Holm => {
            let mut order: Vec<usize> = (0..pvals.len()).collect();
            order.sort_by(|&a, &b| pvals[a].total_cmp(&pvals[b]).then(a.cmp(&b)));
            let mut adjusted = vec![0.0; pvals.len()];
            let mut running = 0.0f64;
            for (r, &idx) in order.iter().enumerate() {
                running = running.max(((m - r as f64) * pvals[idx]).min(1.0));
                adjusted[idx] = running;
            }
            adjusted
        }
    }
}

fn interval_from_rejections(j: usize, p: usize, rank: f64, rejected: impl Fn(usize, usize) -> bool) -> RankInterval {
    // H_{k,j} rejected: theta_j < theta_k. H_{j,k} rejected: theta_j > theta_k.
    let better = (0..p).filter(|&k| k != j && rejected(k, j)).count();
    let worse = (0..p).filter(|&k| k != j && rejected(j, k)).count();
    RankInterval {
        index: j,
        lower: better + 1,
        rank,
        upper: p - worse,
    }
}

/// Marginal mode tests, for each target `j`, the `2(p-1)` hypotheses that
/// involve `j`; simultaneous mode tests all `p(p-1)` ordered pairs at once.
/// A hypothesis is rejected when its adjusted p-value is `<= 1 - coverage`.
pub fn cs_ranks_multinomial(
    data: &MultinomialCounts,
    coverage: f64,
    mode: CsMode,
    method: Correction,
    indices: Option<&[usize]>,
) -> Result<RankConfidenceSet, MultinomError> {
    let p = data.len();
    if p < 2 {
        return Err(MultinomError::InsufficientCategories(p));
    }
    if !(coverage > 0.0 && coverage < 1.0) {
        return Err(MultinomError::InvalidCoverage(coverage));
    }
    let targets: Vec<usize> = match indices {
        Some(ix) => {
            if let Some(&index) = ix.iter().find(|&&j| j >= p) {
                return Err(MultinomError::IndexOutOfRange { index, categories: p });
            }
            ix.to_vec()
        }
        None => (0..p).collect(),
    };
    let alpha = 1.0 - coverage;
    let table = PairwisePValueTable::from_counts(data);
    let as_f64: Vec<f64> = data.counts().iter().map(|&c| c as f64).collect();
    let ranks = irank(&as_f64, TieRule::league_table())
        .expect("counts are finite")
        .values;

    let intervals = match mode {
        CsMode::Simultaneous => {
            let pairs: Vec<(usize, usize)> = table.iter().map(|(key, _)| key).collect();
            let raw: Vec<f64> = table.iter().map(|(_, v)| v).collect();
            let adjusted = adjust_pvalues(&raw, method);
            let rejected: BTreeMap<(usize, usize), bool> = pairs
                .into_iter()
                .zip(adjusted)
                .map(|(key, a)| (key, a <= alpha))
                .collect();
            targets
                .iter()
                .map(|&j| interval_from_rejections(j, p, ranks[j], |k, l| rejected[&(k, l)]))
                .collect()
        }
        CsMode::Marginal => targets
            .iter()
            .map(|&j| {
                let mut pairs = Vec::with_capacity(2 * (p - 1));
                for k in (0..p).filter(|&k| k != j) {
                    pairs.push((k, j));
                    pairs.push((j, k));
                }
                let raw: Vec<f64> = pairs.iter().map(|&(k, l)| table.get(k, l).unwrap()).collect();
                let adjusted = adjust_pvalues(&raw, method);
                let rejected: BTreeMap<(usize, usize), bool> = pairs
                    .into_iter()
                    .zip(adjusted)
                    .map(|(key, a)| (key, a <= alpha))
                    .collect();
                interval_from_rejections(j, p, ranks[j], |k, l| rejected[&(k, l)])
            })
            .collect(),
    };
    Ok(RankConfidenceSet {
        populations: p,
        coverage,
        mode,
        sidedness: Sidedness::TwoSided,
        intervals,
    })
}
