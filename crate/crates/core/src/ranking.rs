//! Integer and fractional ranks with configurable tie handling.
//!
//! For an increasing ranking the integer rank of `theta_j` is
//!
//! ```text
//! omega * #{k : theta_k <= theta_j} + (1 - omega) * #{k : theta_k < theta_j} + 1 - omega
//! ```
//!
//! and a decreasing ranking flips the comparisons. `omega = 0` gives the
//! smallest rank within a tie group, `omega = 0.5` the mid-rank and
//! `omega = 1` the largest. Fractional ranks divide by the length of the
//! reference vector.
//!
//! Ties are detected with exact equality.

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RankingError {
    #[error("non-finite value {value} at position {index}")]
    NonFinite { index: usize, value: f64 },
    #[error("tie parameter omega must lie in [0, 1], got {0}")]
    InvalidOmega(f64),
    #[error("cannot rank an empty vector")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Increasing,
    Decreasing,
}

/// Tie parameter `omega` and ranking direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TieRule {
    omega: f64,
    direction: Direction,
}

impl TieRule {
    pub fn new(omega: f64, direction: Direction) -> Result<Self, RankingError> {
        if !(0.0..=1.0).contains(&omega) {
            return Err(RankingError::InvalidOmega(omega));
        }
        Ok(Self { omega, direction })
    }

    pub fn increasing(omega: f64) -> Result<Self, RankingError> {
        Self::new(omega, Direction::Increasing)
    }

    pub fn decreasing(omega: f64) -> Result<Self, RankingError> {
        Self::new(omega, Direction::Decreasing)
    }

    /// Smallest rank, best population first.
    pub fn league_table() -> Self {
        Self {
            omega: 0.0,
            direction: Direction::Decreasing,
        }
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }
}

impl Default for TieRule {
    fn default() -> Self {
        Self::league_table()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankKind {
    Integer,
    Fractional,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankVector {
    pub values: Vec<f64>,
    pub kind: RankKind,
}

impl RankVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn check_finite(v: &[f64]) -> Result<(), RankingError> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(index) => Err(RankingError::NonFinite { index, value: v[index] }),
        None => Ok(()),
    }
}

/// Reference values sorted so that "better" comes later: ascending for an
/// increasing ranking, descending for a decreasing one.
fn oriented_sort(reference: &[f64], direction: Direction) -> Vec<f64> {
    let mut sorted = reference.to_vec();
    match direction {
        Direction::Increasing => sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal)),
        Direction::Decreasing => sorted.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal)),
    }
    sorted
}

/// `(#strictly before x, #weakly before x)` in the oriented sort order.
fn counts(sorted: &[f64], x: f64, direction: Direction) -> (usize, usize) {
    match direction {
        Direction::Increasing => (sorted.partition_point(|&r| r < x), sorted.partition_point(|&r| r <= x)),
        Direction::Decreasing => (sorted.partition_point(|&r| r > x), sorted.partition_point(|&r| r >= x)),
    }
}

fn blend(strict: usize, weak: usize, omega: f64) -> f64 {
    strict as f64 + 1.0 + omega * (weak as f64 - strict as f64 - 1.0)
}

/// Integer ranks of `theta` among themselves.
pub fn irank(theta: &[f64], rule: TieRule) -> Result<RankVector, RankingError> {
    if theta.is_empty() {
        return Err(RankingError::Empty);
    }
    check_finite(theta)?;
    let n = theta.len();
    let mut order: Vec<usize> = (0..n).collect();
    match rule.direction {
        Direction::Increasing => order.sort_by(|&a, &b| theta[a].partial_cmp(&theta[b]).unwrap()),
        Direction::Decreasing => order.sort_by(|&a, &b| theta[b].partial_cmp(&theta[a]).unwrap()),
    }
    let mut values = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && theta[order[end]] == theta[order[start]] {
            end += 1;
        }
        let r = blend(start, end, rule.omega);
        for &idx in &order[start..end] {
            values[idx] = r;
        }
        start = end;
    }
    Ok(RankVector {
        values,
        kind: RankKind::Integer,
    })
}

/// Fractional ranks: `irank(theta) / p`.
pub fn frank(theta: &[f64], rule: TieRule) -> Result<RankVector, RankingError> {
    let mut r = irank(theta, rule)?;
    let p = theta.len() as f64;
    r.values.iter_mut().for_each(|v| *v /= p);
    r.kind = RankKind::Fractional;
    Ok(r)
}

/// Integer ranks of each `x_i` counted against `reference`. Queries outside
/// the range of the reference get the formula value unchanged.
pub fn irank_against(x: &[f64], reference: &[f64], rule: TieRule) -> Result<RankVector, RankingError> {
    if reference.is_empty() {
        return Err(RankingError::Empty);
    }
    check_finite(x)?;
    check_finite(reference)?;
    let sorted = oriented_sort(reference, rule.direction);
    let values = x
        .iter()
        .map(|&xi| {
            let (strict, weak) = counts(&sorted, xi, rule.direction);
            blend(strict, weak, rule.omega)
        })
        .collect();
    Ok(RankVector {
        values,
        kind: RankKind::Integer,
    })
}

/// `irank_against / reference.len()`; values above 1 (or equal to 0) are
/// possible for queries outside the reference support.
pub fn frank_against(x: &[f64], reference: &[f64], rule: TieRule) -> Result<RankVector, RankingError> {
    let mut r = irank_against(x, reference, rule)?;
    let p = reference.len() as f64;
    r.values.iter_mut().for_each(|v| *v /= p);
    r.kind = RankKind::Fractional;
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TABLE: [f64; 10] = [3.0, 4.0, 7.0, 7.0, 10.0, 11.0, 15.0, 15.0, 15.0, 15.0];

    /// Direct double loop over the definition.
    fn all_close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12 * y.abs().max(1.0))
    }

    fn naive(x: &[f64], reference: &[f64], rule: TieRule) -> Vec<f64> {
        x.iter()
            .map(|&xi| {
                let (mut weak, mut strict) = (0.0, 0.0);
                for &r in reference {
                    let (w, s) = match rule.direction {
                        Direction::Increasing => (r <= xi, r < xi),
                        Direction::Decreasing => (r >= xi, r > xi),
                    };
                    weak += w as u8 as f64;
                    strict += s as u8 as f64;
                }
                rule.omega * weak + (1.0 - rule.omega) * strict + 1.0 - rule.omega
            })
            .collect()
    }

    #[test]
    fn table_rows() {
        let rows = [
            (0.0, [1.0, 2.0, 3.0, 3.0, 5.0, 6.0, 7.0, 7.0, 7.0, 7.0]),
            (0.5, [1.0, 2.0, 3.5, 3.5, 5.0, 6.0, 8.5, 8.5, 8.5, 8.5]),
            (1.0, [1.0, 2.0, 4.0, 4.0, 5.0, 6.0, 10.0, 10.0, 10.0, 10.0]),
        ];
        for (omega, want) in rows {
            let r = irank(&TABLE, TieRule::increasing(omega).unwrap()).unwrap();
            assert_eq!(r.values, want.to_vec(), "omega = {omega}");
        }
    }

    #[test]
    fn fractional_table_row() {
        let r = frank(&TABLE, TieRule::increasing(1.0).unwrap()).unwrap();
        assert_eq!(r.values, vec![0.1, 0.2, 0.4, 0.4, 0.5, 0.6, 1.0, 1.0, 1.0, 1.0]);
        assert_eq!(r.kind, RankKind::Fractional);
    }

    #[test]
    fn constant_and_singleton() {
        let c = [2.5; 4];
        assert_eq!(
            frank(&c, TieRule::increasing(1.0).unwrap()).unwrap().values,
            vec![1.0; 4]
        );
        assert_eq!(
            frank(&c, TieRule::increasing(0.0).unwrap()).unwrap().values,
            vec![0.25; 4]
        );
        for rule in [TieRule::league_table(), TieRule::increasing(0.3).unwrap()] {
            assert_eq!(irank(&[42.0], rule).unwrap().values, vec![1.0]);
        }
    }

    #[test]
    fn against_reference() {
        let inc0 = TieRule::increasing(0.0).unwrap();
        let inc1 = TieRule::increasing(1.0).unwrap();
        assert_eq!(irank_against(&[5.0], &[1.0, 2.0, 3.0], inc0).unwrap().values, vec![4.0]);
        assert_eq!(irank_against(&[2.0], &[2.0, 2.0], inc1).unwrap().values, vec![2.0]);
        assert_eq!(
            frank_against(&[5.0], &[1.0, 2.0, 3.0], inc0).unwrap().values,
            vec![4.0 / 3.0]
        );
        assert_eq!(frank_against(&[0.0], &[1.0, 2.0, 3.0], inc1).unwrap().values, vec![0.0]);
        assert_eq!(
            frank_against(&TABLE, &TABLE, inc1).unwrap().values,
            frank(&TABLE, inc1).unwrap().values
        );
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            irank(&[1.0, f64::NAN], TieRule::default()),
            Err(RankingError::NonFinite { index: 1, .. })
        ));
        assert!(matches!(
            irank_against(&[f64::INFINITY], &[1.0], TieRule::default()),
            Err(RankingError::NonFinite { index: 0, .. })
        ));
        assert!(matches!(TieRule::increasing(1.5), Err(RankingError::InvalidOmega(_))));
        assert!(matches!(irank(&[], TieRule::default()), Err(RankingError::Empty)));
    }

    fn tied_vector() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0i32..8, 1..40).prop_map(|v| v.into_iter().map(|x| x as f64 * 0.5).collect())
    }

    fn any_rule() -> impl Strategy<Value = TieRule> {
        (prop::sample::select(vec![0.0, 0.25, 0.3, 0.5, 1.0]), any::<bool>()).prop_map(|(w, inc)| {
            TieRule::new(
                w,
                if inc {
                    Direction::Increasing
                } else {
                    Direction::Decreasing
                },
            )
            .unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn fractional_times_length_is_integer_rank(theta in tied_vector(), rule in any_rule()) {
            let i = irank(&theta, rule).unwrap();
            let f = frank(&theta, rule).unwrap();
            let p = theta.len() as f64;
            for (a, b) in f.values.iter().zip(&i.values) {
                prop_assert_eq!(*a, *b / p);
                prop_assert!((a * p - b).abs() <= 4.0 * f64::EPSILON * b);
            }
        }

        #[test]
        fn sort_scan_matches_double_loop(theta in tied_vector(), rule in any_rule()) {
            let r = irank(&theta, rule).unwrap().values;
            prop_assert!(all_close(&r, &naive(&theta, &theta, rule)));
            for j in 0..theta.len() {
                for k in 0..theta.len() {
                    let better = match rule.direction() {
                        Direction::Increasing => theta[j] < theta[k],
                        Direction::Decreasing => theta[j] > theta[k],
                    };
                    if better {
                        prop_assert!(r[j] < r[k]);
                    }
                }
            }
        }

        #[test]
        fn against_matches_double_loop(x in tied_vector(), reference in tied_vector(), rule in any_rule()) {
            prop_assert!(all_close(&irank_against(&x, &reference, rule).unwrap().values, &naive(&x, &reference, rule)));
            prop_assert_eq!(irank_against(&x, &x, rule).unwrap().values, irank(&x, rule).unwrap().values);
        }

        #[test]
        fn affine_in_omega(theta in tied_vector(), omega in 0.0f64..=1.0, inc in any::<bool>()) {
            let dir = if inc { Direction::Increasing } else { Direction::Decreasing };
            let r = irank(&theta, TieRule::new(omega, dir).unwrap()).unwrap();
            let r0 = irank(&theta, TieRule::new(0.0, dir).unwrap()).unwrap();
            let r1 = irank(&theta, TieRule::new(1.0, dir).unwrap()).unwrap();
            for j in 0..theta.len() {
                let want = omega * r1.values[j] + (1.0 - omega) * r0.values[j];
                prop_assert!((r.values[j] - want).abs() < 1e-12);
            }
        }

        #[test]
        fn distinct_values_give_permutation(raw in prop::collection::hash_set(-1000i32..1000, 1..50), omega in 0.0f64..=1.0) {
            let theta: Vec<f64> = raw.into_iter().map(f64::from).collect();
            let p = theta.len();
            let up = irank(&theta, TieRule::increasing(omega).unwrap()).unwrap();
            let down = irank(&theta, TieRule::decreasing(omega).unwrap()).unwrap();
            let mut sorted = up.values.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            prop_assert_eq!(sorted, (1..=p).map(|r| r as f64).collect::<Vec<_>>());
            for j in 0..p {
                prop_assert_eq!(down.values[j], (p + 1) as f64 - up.values[j]);
                for k in 0..p {
                    if theta[j] < theta[k] {
                        prop_assert!(up.values[j] < up.values[k]);
                    }
                }
            }
        }
    }
}
