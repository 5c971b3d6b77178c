//! Products with the tie-aware indicator matrix
//! `I[i][k] = omega * 1{x_i <= x_k} + (1 - omega) * 1{x_i < x_k}` in O(n log n).
//!
//! With `x` sorted in descending order, entry `i` of `I v` is the sum of `v`
//! over all earlier tie runs plus `omega` times the sum over its own run.
//! That is the `omega` blend of the weak cumulative sum (run totals placed
//! first) and the strict one (run totals placed last, shifted down by one),
//! evaluated in a single pass over the runs.

use super::RankRegError;

/// Observations per block of the staged permutation (128 KiB of `f64`).
const BLOCK_SHIFT: u32 = 14;

/// Flag on `slot[pos]` marking the last sorted position of a tie run.
const RUN_END: u32 = 1 << 31;

/// The indicator matrix of one variable, with its sort computed once and
/// reused across products.
///
/// The sort permutation is applied through a staging buffer laid out by
/// observation block: `staged[e]` holds observation `obs[e]`, blocks in
/// ascending order and sorted positions ascending within each block, and
/// sorted position `pos` lives at `staged[slot[pos] & !RUN_END]`. Moving between
/// observation order and sorted order then touches memory either
/// sequentially or within a single block.
#[derive(Debug, Clone)]
pub struct IndicatorOperator {
    slot: Vec<u32>,
    obs: Vec<u32>,
    omega: f64,
}

/// Order-preserving map from finite `f64` to `u64`, with `-0.0 == 0.0`.
fn sort_key(v: f64) -> u64 {
    let bits = if v == 0.0 { 0u64 } else { v.to_bits() };
    if bits >> 63 == 1 {
        !bits
    } else {
        bits | (1 << 63)
    }
}

impl IndicatorOperator {
    pub fn new(x: &[f64], omega: f64) -> Result<Self, RankRegError> {
        if !(0.0..=1.0).contains(&omega) {
            return Err(RankRegError::InvalidOmega(omega));
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(RankRegError::NonFinite {
                what: "indicator input".into(),
                index: i,
            });
        }
        let n = u32::try_from(x.len()).ok().filter(|&n| n < RUN_END).ok_or_else(|| {
            RankRegError::DimensionMismatch(format!("{} observations exceed the supported maximum", x.len()))
        })?;
        let mut slot = vec![0u32; x.len()];
        let mut obs = vec![0u32; x.len()];
        // descending key in the high half, observation in the low half
        let mut keyed: Vec<u128> = x
            .iter()
            .zip(0..n)
            .map(|(&v, i)| (u128::from(!sort_key(v)) << 64) | u128::from(i))
            .collect();
        keyed.sort_unstable();

        let blocks = (x.len() >> BLOCK_SHIFT) + 1;
        let mut cursor = vec![0u32; blocks + 1];
        for &k in &keyed {
            cursor[(k as u32 >> BLOCK_SHIFT) as usize + 1] += 1;
        }
        for b in 1..=blocks {
            cursor[b] += cursor[b - 1];
        }
        for (pos, &k) in keyed.iter().enumerate() {
            let i = k as u32;
            let c = &mut cursor[(i >> BLOCK_SHIFT) as usize];
            let end = keyed.get(pos + 1).is_none_or(|next| next >> 64 != k >> 64);
            slot[pos] = *c | if end { RUN_END } else { 0 };
            obs[*c as usize] = i;
            *c += 1;
        }
        Ok(Self { slot, obs, omega })
    }

    pub fn len(&self) -> usize {
        self.slot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slot.is_empty()
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// `I v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        self.accumulate(v, 1.0, &mut out, &mut Vec::new());
        out
    }

    /// `out += alpha * I v`, with `staged` as scratch space.
    pub fn accumulate(&self, v: &[f64], alpha: f64, out: &mut [f64], staged: &mut Vec<f64>) {
        assert_eq!(v.len(), self.len(), "indicator operand length");
        assert_eq!(out.len(), self.len(), "indicator output length");
        staged.clear();
        staged.extend(self.obs.iter().map(|&i| v[i as usize]));
        let (mut before, mut total, mut start) = (0.0, 0.0, 0);
        for (pos, &s) in self.slot.iter().enumerate() {
            total += staged[(s & !RUN_END) as usize];
            if s & RUN_END != 0 {
                let c = alpha * (before + self.omega * total);
                for &e in &self.slot[start..=pos] {
                    staged[(e & !RUN_END) as usize] = c;
                }
                before += total;
                total = 0.0;
                start = pos + 1;
            }
        }
        for (&i, &c) in self.obs.iter().zip(staged.iter()) {
            out[i as usize] += c;
        }
    }
}

/// One-off product `I v` for the indicator matrix of `x`.
pub fn indicator_matvec(x: &[f64], v: &[f64], omega: f64) -> Result<Vec<f64>, RankRegError> {
    if x.len() != v.len() {
        return Err(RankRegError::DimensionMismatch(format!(
            "x has {} entries, v has {}",
            x.len(),
            v.len()
        )));
    }
    if let Some(i) = v.iter().position(|a| !a.is_finite()) {
        return Err(RankRegError::NonFinite {
            what: "indicator operand".into(),
            index: i,
        });
    }
    Ok(IndicatorOperator::new(x, omega)?.apply(v))
}
