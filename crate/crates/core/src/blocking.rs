//! Dyadic big/small block decomposition.
//!
//! The dyadic interval `[2^m + 1, 2^{m+1}]` is cut into alternating big blocks
//! `I_{m,j}` of length `m1 = 2^⌊α₁ m⌋` and small blocks `J_{m,j}` of length
//! `m2 = ⌊C* ln 2^m⌋`:
//!
//! ```text
//! κ(n)     = ⌊(n − 2^m) / (m1 + m2)⌋
//! I_{m,j}  = [2^m + (m1+m2)(j−1) + 1,  2^m + (m1+m2)(j−1) + m1]      j ≤ κ(2^{m+1})
//! J_{m,j}  = [2^m + (m1+m2)(j−1) + m1 + 1,  2^m + (m1+m2) j]
//! I_{m,κ+1} = [2^m + (m1+m2)κ + 1,  2^{m+1} ∧ (2^m + (m1+m2)κ + m1)]
//! J_{m,κ+1} = [2^m + (m1+m2)κ + m1 + 1,  2^{m+1}]
//! ```
//!
//! The tail ranges may be empty. Together the blocks tile the interval.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::hilbert::HilbertVec;

/// Inclusive integer range; empty when `end < start`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockRange {
    pub start: u64,
    pub end: u64,
}

impl BlockRange {
    pub fn len(&self) -> u64 {
        if self.end < self.start {
            0
        } else {
            self.end - self.start + 1
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, i: u64) -> bool {
        self.start <= i && i <= self.end
    }

    pub fn indices(&self) -> impl Iterator<Item = u64> {
        self.start..self.start + self.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockPlan {
    pub m: u32,
    pub alpha1: f64,
    pub cstar: f64,
    pub m1: u64,
    pub m2: u64,
    /// Set when `⌊C* ln 2^m⌋ = 0` was raised to 1.
    pub m2_clamped: bool,
    /// `κ(2^{m+1})`, the number of full big blocks.
    pub kappa_full: u64,
    /// `I_{m,1}, …, I_{m,κ+1}`.
    pub big: Vec<BlockRange>,
    /// `J_{m,1}, …, J_{m,κ+1}`.
    pub small: Vec<BlockRange>,
}

pub fn build_plan(m: u32, alpha1: f64, cstar: f64) -> Result<BlockPlan> {
    ensure(
        (1..=62).contains(&m),
        format!("dyadic level m = {m} outside 1..=62"),
    )?;
    ensure(
        alpha1 > 0.0 && alpha1 < 1.0,
        format!("alpha1 must lie in (0, 1) (got {alpha1})"),
    )?;
    ensure(
        cstar > 0.0 && cstar.is_finite(),
        format!("cstar must be positive (got {cstar})"),
    )?;
    let m1 = 1u64 << (alpha1 * m as f64).floor() as u32;
    let raw_m2 = (cstar * m as f64 * std::f64::consts::LN_2).floor() as u64;
    let m2_clamped = raw_m2 == 0;
    let m2 = raw_m2.max(1);

    let base = 1u64 << m;
    let top = base << 1;
    let stride = m1 + m2;
    let kappa_full = base / stride;

    let mut big = Vec::with_capacity(kappa_full as usize + 1);
    let mut small = Vec::with_capacity(kappa_full as usize + 1);
    for j in 0..kappa_full {
        let lo = base + stride * j;
        big.push(BlockRange {
            start: lo + 1,
            end: lo + m1,
        });
        small.push(BlockRange {
            start: lo + m1 + 1,
            end: lo + stride,
        });
    }
    let lo = base + stride * kappa_full;
    big.push(BlockRange {
        start: lo + 1,
        end: top.min(lo + m1),
    });
    small.push(BlockRange {
        start: lo + m1 + 1,
        end: top,
    });

    Ok(BlockPlan {
        m,
        alpha1,
        cstar,
        m1,
        m2,
        m2_clamped,
        kappa_full,
        big,
        small,
    })
}

impl BlockPlan {
    /// First index of the dyadic interval, `2^m + 1`.
    pub fn first(&self) -> u64 {
        (1u64 << self.m) + 1
    }

    /// Last index of the dyadic interval, `2^{m+1}`.
    pub fn last(&self) -> u64 {
        1u64 << (self.m + 1)
    }

    /// `I_{m,1}, J_{m,1}, I_{m,2}, …` in index order.
    pub fn ordered_blocks(&self) -> impl Iterator<Item = (BlockKind, usize, BlockRange)> + '_ {
        self.big
            .iter()
            .zip(&self.small)
            .enumerate()
            .flat_map(|(j, (b, s))| [(BlockKind::Big, j, *b), (BlockKind::Small, j, *s)])
    }

    /// `i_{m,j}`, the smallest element of the `j`-th (one-based) big block.
    pub fn block_start(&self, j: usize) -> Option<u64> {
        self.big.get(j.checked_sub(1)?).map(|r| r.start)
    }

    /// True when `i` lies in some small block, i.e. `i ∈ 𝒥(m)`.
    pub fn in_small(&self, i: u64) -> bool {
        self.locate(i).is_some_and(|(k, _)| k == BlockKind::Small)
    }

    /// Block containing index `i`, if `i` lies in the dyadic interval.
    pub fn locate(&self, i: u64) -> Option<(BlockKind, usize)> {
        if i < self.first() || i > self.last() {
            return None;
        }
        let stride = self.m1 + self.m2;
        let off = i - self.first();
        let j = (off / stride) as usize;
        let within = off % stride;
        Some(if within < self.m1 {
            (BlockKind::Big, j)
        } else {
            (BlockKind::Small, j)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockKind {
    Big,
    Small,
}

/// `κ(n) = ⌊(n − 2^m)/(m1 + m2)⌋` for `n` in the dyadic interval.
pub fn kappa(plan: &BlockPlan, n: u64) -> Result<u64> {
    ensure(
        n >= plan.first() && n <= plan.last(),
        format!(
            "n = {n} outside the dyadic interval [{}, {}]",
            plan.first(),
            plan.last()
        ),
    )?;
    Ok((n - (1u64 << plan.m)) / (plan.m1 + plan.m2))
}

/// Big- and small-block sums `Y_{m,j}`, `Z_{m,j}` (tails included, so each
/// list has `κ + 1` entries). `path[0]` holds `X_1`.
pub fn block_sums(
    path: &[HilbertVec],
    plan: &BlockPlan,
) -> Result<(Vec<HilbertVec>, Vec<HilbertVec>)> {
    let need = plan.last() as usize;
    if path.len() < need {
        return Err(Error::domain(format!(
            "path of length {} does not cover index {need}",
            path.len()
        )));
    }
    let dim = path[0].dim();
    let sum = |r: &BlockRange| -> Result<HilbertVec> {
        let mut acc = HilbertVec::zeros(dim);
        for i in r.start..=r.end {
            acc.try_add_assign(&path[i as usize - 1])?;
        }
        Ok(acc)
    };
    let ys = plan.big.iter().map(sum).collect::<Result<Vec<_>>>()?;
    let zs = plan.small.iter().map(sum).collect::<Result<Vec<_>>>()?;
    Ok((ys, zs))
}

/// Smallest constant `2(1 − α₁)(p′ − ½)/β` for the small-block length that
/// makes the coupling failure probabilities summable over `m`.
pub fn default_cstar(alpha1: f64, pprime: f64, beta: f64) -> Result<f64> {
    ensure(
        alpha1 > 0.0 && alpha1 < 1.0,
        format!("alpha1 must lie in (0, 1) (got {alpha1})"),
    )?;
    ensure(pprime > 2.0, format!("pprime must exceed 2 (got {pprime})"))?;
    ensure(
        beta > 0.0,
        format!("mixing rate beta must be positive (got {beta})"),
    )?;
    Ok(2.0 * (1.0 - alpha1) * (pprime - 0.5) / beta)
}
