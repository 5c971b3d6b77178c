//! Dense linear algebra and random-sampling kernels shared by the
//! statistical modules.
//!
//! Matrices are `nalgebra::DMatrix<f64>`. The QR and eigen routines come from
//! nalgebra; the rank checks, the PSD repair policy and the normal variate
//! transform are ours, so results stay reproducible across platforms.

use nalgebra::{DMatrix, DVector, Dyn};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

pub type DenseMatrix = DMatrix<f64>;

/// Relative pivot tolerance below which a QR factor is declared rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Eigenvalues down to `-PSD_CLIP * max_eigenvalue` are clipped to zero.
pub const PSD_CLIP: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("matrix is rank deficient (pivot ratio {ratio:.3e} below tolerance; regressors are collinear)")]
    RankDeficient { ratio: f64 },
    #[error("matrix is not positive semidefinite (eigenvalue {min_eigenvalue:.3e} below clip threshold)")]
    NotPsd { min_eigenvalue: f64 },
    #[error("matrix is not symmetric (|S[{row},{col}] - S[{col},{row}]| = {gap:.3e})")]
    NotSymmetric { row: usize, col: usize, gap: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix has non-finite entries")]
    NonFinite,
}

/// Householder QR factorization of a tall design matrix.
#[derive(Debug, Clone)]
pub struct QrFactorization {
    qr: nalgebra::linalg::QR<f64, Dyn, Dyn>,
    r: DenseMatrix,
}

impl QrFactorization {
    /// Upper-triangular factor, `cols x cols`.
    pub fn r(&self) -> &DenseMatrix {
        &self.r
    }

    /// Thin orthonormal factor, `rows x cols`.
    pub fn q(&self) -> DenseMatrix {
        self.qr.q()
    }

    pub fn ncols(&self) -> usize {
        self.r.ncols()
    }

    /// Least-squares solution of `Z b = y`.
    pub fn solve(&self, y: &[f64]) -> Result<Vec<f64>, NumericsError> {
        let (rows, cols) = self.qr.qr_internal().shape();
        if y.len() != rows {
            return Err(NumericsError::DimensionMismatch(format!(
                "response has {} entries, design has {rows} rows",
                y.len()
            )));
        }
        let mut qty = DenseMatrix::from_column_slice(rows, 1, y);
        self.qr.q_tr_mul(&mut qty);
        let head = DVector::from_iterator(cols, qty.column(0).iter().take(cols).copied());
        let beta = self
            .r
            .solve_upper_triangular(&head)
            .ok_or(NumericsError::RankDeficient { ratio: 0.0 })?;
        Ok(beta.iter().copied().collect())
    }
}

/// Factor `z = QR`. Fails when the smallest diagonal magnitude of `R` is below
/// [`RANK_TOLERANCE`] times the largest.
pub fn qr_decompose(z: &DenseMatrix) -> Result<QrFactorization, NumericsError> {
    let (rows, cols) = z.shape();
    if cols == 0 || rows < cols {
        return Err(NumericsError::DimensionMismatch(format!(
            "QR needs rows >= cols >= 1, got {rows}x{cols}"
        )));
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(NumericsError::NonFinite);
    }
    let qr = z.clone().qr();
    let r = qr.r();
    let diag: Vec<f64> = (0..cols).map(|i| r[(i, i)].abs()).collect();
    let largest = diag.iter().copied().fold(0.0, f64::max);
    let smallest = diag.iter().copied().fold(f64::INFINITY, f64::min);
    if largest == 0.0 || smallest <= RANK_TOLERANCE * largest {
        let ratio = if largest == 0.0 { 0.0 } else { smallest / largest };
        return Err(NumericsError::RankDeficient { ratio });
    }
    Ok(QrFactorization { qr, r })
}

/// `(Z'Z)^-1` from the QR factor, via `R^-1 R^-T`.
pub fn inverse_from_qr(f: &QrFactorization) -> Result<DenseMatrix, NumericsError> {
    let p = f.ncols();
    let r_inv =
        f.r.solve_upper_triangular(&DenseMatrix::identity(p, p))
            .ok_or(NumericsError::RankDeficient { ratio: 0.0 })?;
    let inv = &r_inv * r_inv.transpose();
    Ok((&inv + inv.transpose()) * 0.5)
}

/// Lower-triangular `L` with `LL' = S`.
///
/// Singular but numerically PSD input falls back to a symmetric eigen
/// decomposition with small negative eigenvalues clipped; the resulting
/// square root is re-triangularized with a QR step.
pub fn cholesky_psd(s: &DenseMatrix, tol: f64) -> Result<DenseMatrix, NumericsError> {
    let (rows, cols) = s.shape();
    if rows != cols {
        return Err(NumericsError::DimensionMismatch(format!(
            "covariance must be square, got {rows}x{cols}"
        )));
    }
    if s.iter().any(|v| !v.is_finite()) {
        return Err(NumericsError::NonFinite);
    }
    let scale = s.amax().max(1.0);
    for i in 0..rows {
        for j in (i + 1)..rows {
            let gap = (s[(i, j)] - s[(j, i)]).abs();
            if gap > tol * scale {
                return Err(NumericsError::NotSymmetric { row: i, col: j, gap });
            }
        }
    }
    let sym = (s + s.transpose()) * 0.5;
    if let Some(chol) = sym.clone().cholesky() {
        return Ok(chol.l());
    }

    let eig = sym.symmetric_eigen();
    let max_ev = eig.eigenvalues.max().max(0.0);
    let min_ev = eig.eigenvalues.min();
    if min_ev < -PSD_CLIP * max_ev || (max_ev == 0.0 && min_ev < 0.0) {
        return Err(NumericsError::NotPsd { min_eigenvalue: min_ev });
    }
    let mut root = eig.eigenvectors.clone();
    for (j, lambda) in eig.eigenvalues.iter().enumerate() {
        let w = lambda.max(0.0).sqrt();
        root.column_mut(j).scale_mut(w);
    }
    // root * root' = S; with root' = QR we get S = R'R.
    let r = root.transpose().qr().r();
    Ok(r.transpose())
}

/// Counter-based ChaCha20 stream keyed by `(seed, stream)`.
///
/// `ChaCha20Rng::seed_from_u64` expands the seed with PCG32 (documented and
/// stable in `rand_core`), and `stream` selects an independent ChaCha stream
/// for the same key. Normal variates come from [`normal_quantile`] applied to
/// open-interval uniforms built from the top 53 bits of each word, so a given
/// `(seed, stream)` produces the same draws on every platform.
#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    stream: u64,
    inner: ChaCha20Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self::substream(seed, 0)
    }

    /// Independent substream for parallel or replicated work.
    pub fn substream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha20Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { seed, stream, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on the open interval (0, 1).
    pub fn next_uniform(&mut self) -> f64 {
        ((self.inner.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_normal(&mut self) -> f64 {
        normal_quantile(self.next_uniform())
    }

    /// Uniform integer in `0..n` (rejection sampling, no modulo bias).
    pub fn next_below(&mut self, n: u64) -> u64 {
        assert!(n > 0);
        let zone = u64::MAX - u64::MAX % n;
        loop {
            let x = self.inner.next_u64();
            if x < zone {
                return x % n;
            }
        }
    }
}

/// `m x p` matrix whose rows are `L xi` with `xi` i.i.d. standard normal.
/// Draws are consumed row by row.
pub fn mvn_sample(l: &DenseMatrix, rng: &mut SeededRng, m: usize) -> Result<DenseMatrix, NumericsError> {
    let (p, c) = l.shape();
    if p != c {
        return Err(NumericsError::DimensionMismatch(format!(
            "factor must be square, got {p}x{c}"
        )));
    }
    let mut out = DenseMatrix::zeros(m, p);
    let mut xi = vec![0.0; p];
    for row in 0..m {
        xi.iter_mut().for_each(|x| *x = rng.next_normal());
        for i in 0..p {
            let mut acc = 0.0;
            for (k, x) in xi.iter().enumerate().take(i + 1) {
                acc += l[(i, k)] * x;
            }
            out[(row, i)] = acc;
        }
    }
    Ok(out)
}

/// Standard normal quantile, Wichura's AS 241 (PPND16), relative accuracy
/// about 1e-16.
pub fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q
            * (((((((r * 2509.0809287301226727 + 33430.575583588128105) * r + 67265.770927008700853) * r
                + 45921.953931549871457)
                * r
                + 13731.693765509461125)
                * r
                + 1971.5909503065514427)
                * r
                + 133.14166789178437745)
                * r
                + 3.387132872796366608)
            / (((((((r * 5226.495278852545925 + 28729.085735721942674) * r + 39307.89580009271061) * r
                + 21213.794301586595867)
                * r
                + 5394.1960214247511077)
                * r
                + 687.1870074920579083)
                * r
                + 42.313330701600911252)
                * r
                + 1.0);
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let mut r = libm::sqrt(-libm::log(tail));
    let val = if r <= 5.0 {
        r -= 1.6;
        (((((((r * 7.7454501427834140764e-4 + 0.0227238449892691845833) * r + 0.24178072517745061177) * r
            + 1.27045825245236838258)
            * r
            + 3.64784832476320460504)
            * r
            + 5.7694972214606914055)
            * r
            + 4.6303378461565452959)
            * r
            + 1.42343711074968357734)
            / (((((((r * 1.05075007164441684324e-9 + 5.475938084995344946e-4) * r + 0.0151986665636164571966) * r
                + 0.14810397642748007459)
                * r
                + 0.68976733498510000455)
                * r
                + 1.6763848301838038494)
                * r
                + 2.05319162663775882187)
                * r
                + 1.0)
    } else {
        r -= 5.0;
        (((((((r * 2.01033439929228813265e-7 + 2.71155556874348757815e-5) * r + 0.0012426609473880784386) * r
            + 0.026532189526576123093)
            * r
            + 0.29656057182850489123)
            * r
            + 1.7848265399172913358)
            * r
            + 5.4637849111641143699)
            * r
            + 6.6579046435011037772)
            / (((((((r * 2.04426310338993978564e-15 + 1.4215117583164458887e-7) * r + 1.8463183175100546818e-5) * r
                + 7.868691311456132591e-4)
                * r
                + 0.0148753612908506148525)
                * r
                + 0.13692988092273580531)
                * r
                + 0.59983220655588793769)
                * r
                + 1.0)
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// `log( 2^-s * sum_{i=x}^{s} C(s, i) )`, the upper tail of Binomial(s, 1/2).
///
/// The largest summand is evaluated directly in log space and every other
/// summand as a product of ratios relative to it, so nothing overflows and
/// the sum stops once the remaining terms are negligible.
pub fn log_binom_tail(x: u64, s: u64) -> f64 {
    assert!(x <= s, "log_binom_tail needs x <= s (got x={x}, s={s})");
    if x == 0 {
        return 0.0;
    }
    let peak = x.max(s.div_ceil(2));
    let log_peak = log_binom_half_pmf(peak, s);

    let mut sum = 1.0;
    // upward: t(i+1)/t(i) = (s - i)/(i + 1)
    let mut term = 1.0;
    let mut i = peak;
    while i < s {
        term *= (s - i) as f64 / (i + 1) as f64;
        sum += term;
        i += 1;
        if term < sum * 1e-18 {
            break;
        }
    }
    // downward to x: t(i-1)/t(i) = i/(s - i + 1)
    let mut term = 1.0;
    let mut i = peak;
    while i > x {
        term *= i as f64 / (s - i + 1) as f64;
        sum += term;
        i -= 1;
        if term < sum * 1e-18 {
            break;
        }
    }
    (log_peak + sum.ln()).min(0.0)
}

/// `log( C(s, k) / 2^s )`.
fn log_binom_half_pmf(k: u64, s: u64) -> f64 {
    let ln2 = std::f64::consts::LN_2;
    if k == 0 || k == s {
        return -(s as f64) * ln2;
    }
    if s <= 1024 {
        let k = k.min(s - k);
        let log_c: f64 = (1..=k).map(|i| ((s - k + i) as f64 / i as f64).ln()).sum();
        return log_c - s as f64 * ln2;
    }
    // Saddle-point form (Loader 2000) avoids cancellation for large s.
    let n = s as f64;
    let kf = k as f64;
    let half = n / 2.0;
    let lc = stirling_error(n)
        - stirling_error(kf)
        - stirling_error(n - kf)
        - deviance_term(kf, half)
        - deviance_term(n - kf, half);
    let lf = (2.0 * std::f64::consts::PI).ln() + kf.ln() + (-kf / n).ln_1p();
    lc - 0.5 * lf
}

/// `ln(n!) - [(n + 1/2) ln n - n + ln sqrt(2 pi)]` for integer-valued `n >= 1`.
fn stirling_error(n: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n <= 15.0 {
        let ln_fact: f64 = (2..=n as u64).map(|i| (i as f64).ln()).sum();
        return ln_fact - (n + 0.5) * n.ln() + n - 0.5 * (2.0 * std::f64::consts::PI).ln();
    }
    let nn = n * n;
    if n > 500.0 {
        return (S0 - S1 / nn) / n;
    }
    if n > 80.0 {
        return (S0 - (S1 - S2 / nn) / nn) / n;
    }
    if n > 35.0 {
        return (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n;
    }
    (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
}

/// `x ln(x/np) + np - x`, with a series near `x = np`.
fn deviance_term(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let mut v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let s1 = s + ej / (2 * j + 1) as f64;
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        return s;
    }
    x * (x / np).ln() + np - x
}

/// Where a tie group's total is placed before the running sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Placement {
    First,
    Last,
}

/// Collapse each contiguous run of equal `group_ids` to its total (at the
/// first or last position of the run, zeros elsewhere) and return the
/// cumulative sum of the result.
pub fn grouped_cumsum<G: PartialEq>(v: &[f64], group_ids: &[G], placement: Placement) -> Vec<f64> {
    assert_eq!(v.len(), group_ids.len(), "grouped_cumsum: length mismatch");
    let n = v.len();
    let mut out = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && group_ids[end] == group_ids[start] {
            end += 1;
        }
        let total: f64 = v[start..end].iter().sum();
        match placement {
            Placement::First => out[start] = total,
            Placement::Last => out[end - 1] = total,
        }
        start = end;
    }
    let mut acc = 0.0;
    for x in out.iter_mut() {
        acc += *x;
        *x = acc;
    }
    out
}
