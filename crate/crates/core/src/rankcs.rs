//! Confidence sets for ranks under Gaussian asymptotics.
//!
//! Every procedure starts from estimates `theta_hat` with covariance
//! `sigma_hat`, simulates `m` draws `Z ~ N(0, sigma_hat)` once, and turns
//! studentized maxima of pairwise differences into a critical value `c`.
//! The interval `theta_hat_j - theta_hat_k +/- se_jk * c` for each pair then
//! decides which populations are significantly better (`N_j^-`) or worse
//! (`N_j^+`) than `j`, and the rank set is `{|N_j^-| + 1, ..., p - |N_j^+|}`.
//!
//! Ranks reported next to the sets are decreasing with `omega = 0`
//! (largest estimate gets rank 1). All population indices are zero-based.

use crate::numerics::{cholesky_psd, mvn_sample, DenseMatrix, NumericsError, SeededRng};
use crate::ranking::{irank, RankingError, TieRule};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Pairs whose difference has a standard error below this are rejected.
pub const MIN_PAIR_SE: f64 = 1e-12;

const SYMMETRY_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RankCsError {
    #[error("populations {j} and {k} have a degenerate difference (standard error {se:.3e})")]
    DegeneratePair { j: usize, k: usize, se: f64 },
    #[error("invalid estimates: {0}")]
    InvalidEstimates(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Ranking(#[from] RankingError),
}

/// Point estimates and their estimated covariance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatesWithCovariance {
    theta_hat: Vec<f64>,
    sigma_hat: DenseMatrix,
    labels: Option<Vec<String>>,
}

impl EstimatesWithCovariance {
    pub fn new(theta_hat: Vec<f64>, sigma_hat: DenseMatrix) -> Result<Self, RankCsError> {
        let p = theta_hat.len();
        if p < 2 {
            return Err(RankCsError::InvalidEstimates(format!(
                "need at least 2 populations, got {p}"
            )));
        }
        if sigma_hat.shape() != (p, p) {
            return Err(RankCsError::InvalidEstimates(format!(
                "covariance is {}x{} but there are {p} estimates",
                sigma_hat.nrows(),
                sigma_hat.ncols()
            )));
        }
        if theta_hat.iter().chain(sigma_hat.iter()).any(|v| !v.is_finite()) {
            return Err(RankCsError::InvalidEstimates(
                "non-finite estimate or covariance entry".into(),
            ));
        }
        let scale = sigma_hat.amax().max(1.0);
        for j in 0..p {
            if sigma_hat[(j, j)] < 0.0 {
                return Err(RankCsError::InvalidEstimates(format!(
                    "negative variance for population {j}"
                )));
            }
            for k in (j + 1)..p {
                if (sigma_hat[(j, k)] - sigma_hat[(k, j)]).abs() > SYMMETRY_TOL * scale {
                    return Err(RankCsError::InvalidEstimates(format!(
                        "covariance is not symmetric at ({j}, {k})"
                    )));
                }
            }
        }
        Ok(Self {
            theta_hat,
            sigma_hat,
            labels: None,
        })
    }

    /// Independent estimates: `sigma_hat = diag(se^2)`.
    pub fn from_standard_errors(theta_hat: Vec<f64>, se: &[f64]) -> Result<Self, RankCsError> {
        if se.len() != theta_hat.len() {
            return Err(RankCsError::InvalidEstimates(format!(
                "{} estimates but {} standard errors",
                theta_hat.len(),
                se.len()
            )));
        }
        if se.iter().any(|s| *s < 0.0) {
            return Err(RankCsError::InvalidEstimates("negative standard error".into()));
        }
        let var: Vec<f64> = se.iter().map(|s| s * s).collect();
        Self::new(theta_hat, DenseMatrix::from_diagonal(&nalgebra::DVector::from_vec(var)))
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self, RankCsError> {
        if labels.len() != self.theta_hat.len() {
            return Err(RankCsError::InvalidEstimates(format!(
                "{} labels for {} populations",
                labels.len(),
                self.theta_hat.len()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn theta_hat(&self) -> &[f64] {
        &self.theta_hat
    }

    pub fn sigma_hat(&self) -> &DenseMatrix {
        &self.sigma_hat
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.theta_hat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta_hat.is_empty()
    }

    /// Same covariance, estimates multiplied by -1.
    pub fn negated(&self) -> Self {
        Self {
            theta_hat: self.theta_hat.iter().map(|t| -t).collect(),
            sigma_hat: self.sigma_hat.clone(),
            labels: self.labels.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    draws: usize,
    coverage: f64,
    seed: u64,
}

impl BootstrapConfig {
    pub const DEFAULT_DRAWS: usize = 1000;
    pub const MIN_DRAWS: usize = 100;

    pub fn new(draws: usize, coverage: f64, seed: u64) -> Result<Self, RankCsError> {
        if draws < Self::MIN_DRAWS {
            return Err(RankCsError::InvalidConfig(format!(
                "at least {} bootstrap draws required, got {draws}",
                Self::MIN_DRAWS
            )));
        }
        if !(coverage > 0.0 && coverage < 1.0) {
            return Err(RankCsError::InvalidConfig(format!(
                "coverage must lie in (0, 1), got {coverage}"
            )));
        }
        Ok(Self { draws, coverage, seed })
    }

    pub fn with_seed(seed: u64) -> Self {
        Self {
            draws: Self::DEFAULT_DRAWS,
            coverage: 0.95,
            seed,
        }
    }

    pub fn draws(&self) -> usize {
        self.draws
    }

    pub fn coverage(&self) -> f64 {
        self.coverage
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CsMode {
    Marginal,
    Simultaneous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sidedness {
    TwoSided,
    LowerBoundsOnly,
}

/// Rank set `{lower, ..., upper}` for one population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankInterval {
    pub index: usize,
    pub lower: usize,
    pub rank: f64,
    pub upper: usize,
}

impl RankInterval {
    pub fn contains(&self, rank: f64) -> bool {
        self.lower as f64 <= rank && rank <= self.upper as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankConfidenceSet {
    pub populations: usize,
    pub coverage: f64,
    pub mode: CsMode,
    pub sidedness: Sidedness,
    pub intervals: Vec<RankInterval>,
}

impl RankConfidenceSet {
    pub fn get(&self, index: usize) -> Option<&RankInterval> {
        self.intervals.iter().find(|iv| iv.index == index)
    }

    pub fn lower(&self) -> Vec<usize> {
        self.intervals.iter().map(|iv| iv.lower).collect()
    }

    pub fn upper(&self) -> Vec<usize> {
        self.intervals.iter().map(|iv| iv.upper).collect()
    }
}

/// Populations that may be among the tau best.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauBestSet {
    pub tau: usize,
    pub coverage: f64,
    pub members: Vec<usize>,
}

/// Standard errors of all pairwise differences,
/// `se_jk^2 = sigma_jj + sigma_kk - 2 sigma_jk`.
pub fn pairwise_se(est: &EstimatesWithCovariance) -> Result<DenseMatrix, RankCsError> {
    let p = est.len();
    let s = &est.sigma_hat;
    let mut se = DenseMatrix::zeros(p, p);
    for j in 0..p {
        for k in (j + 1)..p {
            let v = s[(j, j)] + s[(k, k)] - 2.0 * s[(j, k)];
            let v = if v < 0.0 && v > -1e-12 { 0.0 } else { v };
            let d = v.max(0.0).sqrt();
            if !(d >= MIN_PAIR_SE) {
                return Err(RankCsError::DegeneratePair { j, k, se: d });
            }
            se[(j, k)] = d;
            se[(k, j)] = d;
        }
    }
    Ok(se)
}

/// One shared parametric-bootstrap sample and the pairwise standard errors.
struct Bootstrap {
    /// `p x m`: one draw per column.
    draws: DenseMatrix,
    se: DenseMatrix,
    coverage: f64,
}

impl Bootstrap {
    fn simulate(est: &EstimatesWithCovariance, cfg: &BootstrapConfig) -> Result<Self, RankCsError> {
        let se = pairwise_se(est)?;
        let l = cholesky_psd(&est.sigma_hat, SYMMETRY_TOL)?;
        let mut rng = SeededRng::new(cfg.seed);
        let draws = mvn_sample(&l, &mut rng, cfg.draws)?.transpose();
        Ok(Self {
            draws,
            se,
            coverage: cfg.coverage,
        })
    }

    fn p(&self) -> usize {
        self.se.nrows()
    }

    fn maxima<F>(&self, stat: F) -> Vec<f64>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        (0..self.draws.ncols())
            .into_par_iter()
            .map(|r| stat(self.draws.column(r).as_slice()))
            .collect()
    }

    /// Draws of `max_{k != j} |Z_j - Z_k| / se_jk`.
    fn marginal_maxima(&self, j: usize) -> Vec<f64> {
        let p = self.p();
        self.maxima(|z| {
            (0..p)
                .filter(|&k| k != j)
                .map(|k| (z[j] - z[k]).abs() / self.se[(j, k)])
                .fold(f64::NEG_INFINITY, f64::max)
        })
    }

    /// Draws of `max_{j != k} |Z_j - Z_k| / se_jk`.
    fn simultaneous_maxima(&self) -> Vec<f64> {
        let p = self.p();
        self.maxima(|z| {
            let mut best = f64::NEG_INFINITY;
            for j in 0..p {
                for k in (j + 1)..p {
                    best = best.max((z[j] - z[k]).abs() / self.se[(j, k)]);
                }
            }
            best
        })
    }

    /// Draws of `max_{(j, k): k != j} (Z_k - Z_j) / se_jk` over ordered pairs.
    fn upper_maxima(&self) -> Vec<f64> {
        let p = self.p();
        self.maxima(|z| {
            let mut best = f64::NEG_INFINITY;
            for j in 0..p {
                for k in 0..p {
                    if k != j {
                        best = best.max((z[k] - z[j]) / self.se[(j, k)]);
                    }
                }
            }
            best
        })
    }

    fn quantile(&self, draws: Vec<f64>) -> f64 {
        empirical_quantile(draws, self.coverage)
    }
}

/// Smallest order statistic whose (1-based) index is at least
/// `ceil(m * coverage)`.
pub fn empirical_quantile(mut draws: Vec<f64>, coverage: f64) -> f64 {
    assert!(!draws.is_empty());
    draws.sort_by(|a, b| a.total_cmp(b));
    let m = draws.len();
    // Guard against 1000 * 0.95 landing a hair above 950.
    let k = ((m as f64 * coverage) - 1e-9).ceil().clamp(1.0, m as f64) as usize;
    draws[k - 1]
}

fn check_index(est: &EstimatesWithCovariance, j: usize) -> Result<(), RankCsError> {
    if j >= est.len() {
        return Err(RankCsError::InvalidConfig(format!(
            "population index {j} out of range for {} populations",
            est.len()
        )));
    }
    Ok(())
}

/// Critical value for the marginal set of population `j`.
pub fn critical_value_marginal(
    est: &EstimatesWithCovariance,
    j: usize,
    cfg: &BootstrapConfig,
) -> Result<f64, RankCsError> {
    check_index(est, j)?;
    let boot = Bootstrap::simulate(est, cfg)?;
    Ok(boot.quantile(boot.marginal_maxima(j)))
}

/// Critical value shared by all populations in the simultaneous set.
pub fn critical_value_simultaneous(est: &EstimatesWithCovariance, cfg: &BootstrapConfig) -> Result<f64, RankCsError> {
    let boot = Bootstrap::simulate(est, cfg)?;
    Ok(boot.quantile(boot.simultaneous_maxima()))
}

/// Critical value for simultaneous lower confidence bounds.
pub fn critical_value_upper(est: &EstimatesWithCovariance, cfg: &BootstrapConfig) -> Result<f64, RankCsError> {
    let boot = Bootstrap::simulate(est, cfg)?;
    Ok(boot.quantile(boot.upper_maxima()))
}

fn estimated_ranks(est: &EstimatesWithCovariance) -> Result<Vec<f64>, RankCsError> {
    Ok(irank(&est.theta_hat, TieRule::league_table())?.values)
}

fn two_sided_interval(est: &EstimatesWithCovariance, se: &DenseMatrix, j: usize, c: f64, rank: f64) -> RankInterval {
    let p = est.len();
    let theta = &est.theta_hat;
    let mut better = 0;
    let mut worse = 0;
    for k in (0..p).filter(|&k| k != j) {
        let diff = theta[j] - theta[k];
        let half = se[(j, k)] * c;
        if diff + half < 0.0 {
            better += 1;
        } else if diff - half > 0.0 {
            worse += 1;
        }
    }
    RankInterval {
        index: j,
        lower: better + 1,
        rank,
        upper: p - worse,
    }
}

/// Marginal or simultaneous two-sided rank sets.
///
/// `indices` restricts which populations are reported (marginal mode only
/// computes those); `None` means all. Each requested population gets its own
/// marginal critical value, all computed from one shared bootstrap sample.
pub fn cs_ranks(
    est: &EstimatesWithCovariance,
    cfg: &BootstrapConfig,
    mode: CsMode,
    indices: Option<&[usize]>,
) -> Result<RankConfidenceSet, RankCsError> {
    let p = est.len();
    let targets: Vec<usize> = match indices {
        Some(ix) => {
            for &j in ix {
                check_index(est, j)?;
            }
            ix.to_vec()
        }
        None => (0..p).collect(),
    };
    let boot = Bootstrap::simulate(est, cfg)?;
    let ranks = estimated_ranks(est)?;
    let intervals = match mode {
        CsMode::Simultaneous => {
            let c = boot.quantile(boot.simultaneous_maxima());
            targets
                .iter()
                .map(|&j| two_sided_interval(est, &boot.se, j, c, ranks[j]))
                .collect()
        }
        CsMode::Marginal => targets
            .iter()
            .map(|&j| {
                let c = boot.quantile(boot.marginal_maxima(j));
                two_sided_interval(est, &boot.se, j, c, ranks[j])
            })
            .collect(),
    };
    Ok(RankConfidenceSet {
        populations: p,
        coverage: cfg.coverage,
        mode,
        sidedness: Sidedness::TwoSided,
        intervals,
    })
}

/// Simultaneous lower confidence bounds; every upper endpoint is `p`.
pub fn cs_ranks_lower(est: &EstimatesWithCovariance, cfg: &BootstrapConfig) -> Result<RankConfidenceSet, RankCsError> {
    let p = est.len();
    let boot = Bootstrap::simulate(est, cfg)?;
    let c = boot.quantile(boot.upper_maxima());
    let ranks = estimated_ranks(est)?;
    let theta = &est.theta_hat;
    let intervals = (0..p)
        .map(|j| {
            let better = (0..p)
                .filter(|&k| k != j && theta[j] - theta[k] + boot.se[(j, k)] * c < 0.0)
                .count();
            RankInterval {
                index: j,
                lower: better + 1,
                rank: ranks[j],
                upper: p,
            }
        })
        .collect();
    Ok(RankConfidenceSet {
        populations: p,
        coverage: cfg.coverage,
        mode: CsMode::Simultaneous,
        sidedness: Sidedness::LowerBoundsOnly,
        intervals,
    })
}

/// Projection confidence set for the tau best: `{j : L_j <= tau}` from the
/// simultaneous lower bounds.
pub fn cs_tau_best(
    est: &EstimatesWithCovariance,
    cfg: &BootstrapConfig,
    tau: usize,
) -> Result<TauBestSet, RankCsError> {
    if tau == 0 || tau > est.len() {
        return Err(RankCsError::InvalidConfig(format!(
            "tau must lie in 1..={}, got {tau}",
            est.len()
        )));
    }
    let lower = cs_ranks_lower(est, cfg)?;
    let members = lower
        .intervals
        .iter()
        .filter(|iv| iv.lower <= tau)
        .map(|iv| iv.index)
        .collect();
    Ok(TauBestSet {
        tau,
        coverage: cfg.coverage,
        members,
    })
}

/// The tau best of the negated estimates.
pub fn cs_tau_worst(
    est: &EstimatesWithCovariance,
    cfg: &BootstrapConfig,
    tau: usize,
) -> Result<TauBestSet, RankCsError> {
    cs_tau_best(&est.negated(), cfg, tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::normal_quantile;
    use proptest::prelude::*;

    fn iid(theta: Vec<f64>, var: f64) -> EstimatesWithCovariance {
        let p = theta.len();
        EstimatesWithCovariance::new(theta, DenseMatrix::identity(p, p) * var).unwrap()
    }

    fn cfg(seed: u64) -> BootstrapConfig {
        BootstrapConfig::with_seed(seed)
    }

    #[test]
    fn pairwise_se_examples() {
        let se = pairwise_se(&iid(vec![0.0, 1.0, 2.0], 1.0)).unwrap();
        for j in 0..3 {
            assert_eq!(se[(j, j)], 0.0);
            for k in 0..3 {
                if j != k {
                    assert!((se[(j, k)] - 2f64.sqrt()).abs() < 1e-15);
                }
            }
        }
        let est = EstimatesWithCovariance::from_standard_errors(vec![1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        let se = pairwise_se(&est).unwrap();
        assert!((se[(0, 2)] - 10f64.sqrt()).abs() < 1e-15);
        assert!((se[(1, 2)] - 13f64.sqrt()).abs() < 1e-15);

        let sigma = DenseMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let est = EstimatesWithCovariance::new(vec![0.0, 1.0], sigma).unwrap();
        assert!(matches!(
            pairwise_se(&est),
            Err(RankCsError::DegeneratePair { j: 0, k: 1, .. })
        ));
    }

    #[test]
    fn invalid_inputs() {
        assert!(EstimatesWithCovariance::new(vec![1.0], DenseMatrix::identity(1, 1)).is_err());
        let asym = DenseMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.0, 1.0]);
        assert!(EstimatesWithCovariance::new(vec![1.0, 2.0], asym).is_err());
        assert!(BootstrapConfig::new(99, 0.95, 0).is_err());
        assert!(BootstrapConfig::new(100, 1.0, 0).is_err());
        let est = iid(vec![0.0, 1.0, 2.0], 1.0);
        assert!(cs_tau_best(&est, &cfg(0), 0).is_err());
        assert!(cs_ranks(&est, &cfg(0), CsMode::Marginal, Some(&[3])).is_err());
    }

    #[test]
    fn quantile_convention() {
        let draws: Vec<f64> = (1..=1000).map(f64::from).collect();
        assert_eq!(empirical_quantile(draws.clone(), 0.95), 950.0);
        assert_eq!(empirical_quantile(draws.clone(), 0.9505), 951.0);
        assert_eq!(empirical_quantile(draws, 0.0001), 1.0);
    }

    #[test]
    fn two_populations_give_normal_quantile() {
        let est = iid(vec![0.0, 0.0], 1.0);
        let cfg = BootstrapConfig::new(100_000, 0.95, 42).unwrap();
        let c = critical_value_marginal(&est, 0, &cfg).unwrap();
        assert!((c - normal_quantile(0.975)).abs() < 0.03, "c = {c}");
        assert_eq!(critical_value_simultaneous(&est, &cfg).unwrap(), c);
    }

    #[test]
    fn critical_values_are_scale_free() {
        let est = iid((0..6).map(f64::from).collect(), 1.0);
        let scaled = iid((0..6).map(f64::from).collect(), 16.0);
        let a = critical_value_simultaneous(&est, &cfg(5)).unwrap();
        let b = critical_value_simultaneous(&scaled, &cfg(5)).unwrap();
        assert!((a - b).abs() < 1e-12);
        let a = critical_value_marginal(&est, 2, &cfg(5)).unwrap();
        let b = critical_value_marginal(&scaled, 2, &cfg(5)).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn simultaneous_dominates_marginal() {
        let est = iid(vec![0.0; 10], 1.0);
        let sim = critical_value_simultaneous(&est, &cfg(9)).unwrap();
        for j in 0..10 {
            let marg = critical_value_marginal(&est, j, &cfg(9)).unwrap();
            assert!(marg > normal_quantile(0.975));
            assert!(sim >= marg);
        }
    }

    #[test]
    fn upper_critical_value_is_over_both_orientations() {
        // Ordered pairs cover both signs of every difference.
        let est = iid(vec![0.0, 1.0, 3.0, 3.5], 0.5);
        assert_eq!(
            critical_value_upper(&est, &cfg(2)).unwrap(),
            critical_value_simultaneous(&est, &cfg(2)).unwrap()
        );
    }

    #[test]
    fn well_separated_estimates_pin_ranks() {
        let est = iid(vec![0.0, 10.0, 20.0], 1.0);
        for mode in [CsMode::Marginal, CsMode::Simultaneous] {
            let cs = cs_ranks(&est, &cfg(1), mode, None).unwrap();
            assert_eq!(cs.lower(), vec![3, 2, 1]);
            assert_eq!(cs.upper(), vec![3, 2, 1]);
        }
        let tiny = iid(vec![0.3, 0.1, 0.5, 0.2], 1e-8);
        let cs = cs_ranks(&tiny, &cfg(1), CsMode::Simultaneous, None).unwrap();
        for iv in &cs.intervals {
            assert_eq!(iv.lower as f64, iv.rank);
            assert_eq!(iv.upper as f64, iv.rank);
        }
        let lower = cs_ranks_lower(&est, &cfg(1)).unwrap();
        assert_eq!(lower.lower(), vec![3, 2, 1]);
        assert_eq!(lower.upper(), vec![3, 3, 3]);
        assert_eq!(lower.sidedness, Sidedness::LowerBoundsOnly);
    }

    #[test]
    fn equal_estimates_are_uninformative() {
        let est = iid(vec![1.0; 5], 1.0);
        for mode in [CsMode::Marginal, CsMode::Simultaneous] {
            let cs = cs_ranks(&est, &cfg(3), mode, None).unwrap();
            assert!(cs.intervals.iter().all(|iv| iv.lower == 1 && iv.upper == 5));
        }
        assert!(cs_ranks_lower(&est, &cfg(3))
            .unwrap()
            .intervals
            .iter()
            .all(|iv| iv.lower == 1));
        assert_eq!(cs_tau_best(&est, &cfg(3), 1).unwrap().members, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn marginal_subset_matches_full_run() {
        let est = iid(vec![0.0, 0.5, 1.3, 2.0, 2.2], 0.1);
        let full = cs_ranks(&est, &cfg(8), CsMode::Marginal, None).unwrap();
        let sub = cs_ranks(&est, &cfg(8), CsMode::Marginal, Some(&[3, 1])).unwrap();
        assert_eq!(sub.intervals.len(), 2);
        assert_eq!(sub.intervals[0], full.intervals[3]);
        assert_eq!(sub.intervals[1], full.intervals[1]);
    }

    #[test]
    fn tau_best_and_worst() {
        let est = iid(vec![0.0, 10.0, 20.0], 1.0);
        assert_eq!(cs_tau_best(&est, &cfg(4), 1).unwrap().members, vec![2]);
        assert_eq!(cs_tau_worst(&est, &cfg(4), 1).unwrap().members, vec![0]);
        assert_eq!(cs_tau_best(&est, &cfg(4), 3).unwrap().members, vec![0, 1, 2]);
        assert_eq!(cs_tau_worst(&est, &cfg(4), 3).unwrap().members, vec![0, 1, 2]);
        let noisy = iid(vec![0.0, 0.4, 1.0, 1.1, 3.0], 0.2);
        for tau in 1..=5 {
            assert_eq!(
                cs_tau_worst(&noisy, &cfg(6), tau).unwrap(),
                cs_tau_best(&noisy.negated(), &cfg(6), tau).unwrap()
            );
        }
    }

    fn estimates() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (3usize..9).prop_flat_map(|p| {
            (
                prop::collection::vec(-3.0f64..3.0, p),
                prop::collection::vec(0.05f64..1.0, p),
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn structural_invariants((theta, se) in estimates(), seed in 0u64..1000, tau_frac in 0.0f64..1.0) {
            let p = theta.len();
            let est = EstimatesWithCovariance::from_standard_errors(theta, &se).unwrap();
            let cfg = BootstrapConfig::new(200, 0.9, seed).unwrap();
            let marg = cs_ranks(&est, &cfg, CsMode::Marginal, None).unwrap();
            let sim = cs_ranks(&est, &cfg, CsMode::Simultaneous, None).unwrap();
            let low = cs_ranks_lower(&est, &cfg).unwrap();
            for j in 0..p {
                let (m, s) = (&marg.intervals[j], &sim.intervals[j]);
                prop_assert!(s.lower <= m.lower && s.upper >= m.upper);
                prop_assert!(m.contains(m.rank) && s.contains(s.rank) && low.intervals[j].contains(m.rank));
                prop_assert!(1 <= s.lower && s.upper <= p);
            }
            let tau = 1 + ((p - 1) as f64 * tau_frac) as usize;
            let best = cs_tau_best(&est, &cfg, tau).unwrap();
            prop_assert!(best.members.len() >= tau);
            for iv in &marg.intervals {
                if iv.rank <= tau as f64 {
                    prop_assert!(best.members.contains(&iv.index));
                }
            }
        }

        #[test]
        fn location_scale_invariance((theta, se) in estimates(), seed in 0u64..1000, shift in -5i32..5) {
            let a = 4.0;
            let est = EstimatesWithCovariance::from_standard_errors(theta.clone(), &se).unwrap();
            let moved = EstimatesWithCovariance::from_standard_errors(
                theta.iter().map(|t| a * t + f64::from(shift)).collect(),
                &se.iter().map(|s| a * s).collect::<Vec<_>>(),
            ).unwrap();
            let cfg = BootstrapConfig::new(200, 0.95, seed).unwrap();
            let x = cs_ranks(&est, &cfg, CsMode::Simultaneous, None).unwrap();
            let y = cs_ranks(&moved, &cfg, CsMode::Simultaneous, None).unwrap();
            prop_assert_eq!(x.lower(), y.lower());
            prop_assert_eq!(x.upper(), y.upper());
        }
    }
}
