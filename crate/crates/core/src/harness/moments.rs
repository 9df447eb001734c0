//! Moment growth of partial sums and of big/small block sums.

use std::f64::consts::LN_2;

use serde::Serialize;

use crate::blocking::{block_sums, BlockPlan};
use crate::error::{ensure, Error, Result};
use crate::hilbert::HilbertVec;
use crate::linalg::fit_line;
use crate::reduce::pairwise_sum;

use super::batch::{PathBatch, Runner};

/// Dyadic horizons used by [`moment_slope`].
pub const MOMENT_GRID: std::ops::RangeInclusive<u32> = 6..=12;

#[derive(Debug, Clone, Serialize)]
pub struct MomentRow {
    pub n: usize,
    pub mean_norm_pow: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentSlope {
    pub slope: f64,
    pub intercept: f64,
    pub rows: Vec<MomentRow>,
}

/// Column means over replicas, reduced pairwise in replica order.
fn column_means(per_replica: &[Vec<f64>]) -> Vec<f64> {
    let cols = per_replica.first().map_or(0, Vec::len);
    (0..cols)
        .map(|c| {
            let col: Vec<f64> = per_replica.iter().map(|row| row[c]).collect();
            pairwise_sum(&col) / col.len() as f64
        })
        .collect()
}

fn check_pprime(batch: &PathBatch, pprime: f64) -> Result<()> {
    let order = batch.source().moment_order();
    ensure(
        pprime >= 2.0 && pprime < order,
        format!("pprime must lie in [2, {order}) (got {pprime})"),
    )
}

/// Least-squares slope of `log mean ||S_n||^{p′}` against `log n` over the
/// dyadic horizons `2^6..2^12` that fit in the batch.
pub fn moment_slope(batch: &PathBatch, runner: &Runner, pprime: f64) -> Result<MomentSlope> {
    check_pprime(batch, pprime)?;
    let grid: Vec<usize> = MOMENT_GRID
        .map(|e| 1usize << e)
        .filter(|&n| n <= batch.n())
        .collect();
    ensure(
        grid.len() >= 3,
        format!(
            "moment slope needs at least 3 dyadic horizons in 2^6..2^12 (batch has n = {})",
            batch.n()
        ),
    )?;
    let horizon = *grid.last().expect("non-empty grid");
    let per_replica = batch.map_paths(runner, |_, path| {
        let mut acc = HilbertVec::zeros(batch.dim());
        let mut out = Vec::with_capacity(grid.len());
        let mut next = grid.iter().peekable();
        for (i, x) in path[..horizon].iter().enumerate() {
            acc += x;
            if next.peek() == Some(&&(i + 1)) {
                out.push(acc.norm().powf(pprime));
                next.next();
            }
        }
        Ok(out)
    })?;
    let means = column_means(&per_replica);
    if means.iter().any(|&m| !(m > 0.0 && m.is_finite())) {
        return Err(Error::domain(
            "partial-sum moments vanish or diverge; slope is undefined",
        ));
    }
    let xs: Vec<f64> = grid.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = means.iter().map(|m| m.ln()).collect();
    let (slope, intercept) = fit_line(&xs, &ys);
    Ok(MomentSlope {
        slope,
        intercept,
        rows: grid
            .into_iter()
            .zip(means)
            .map(|(n, mean_norm_pow)| MomentRow { n, mean_norm_pow })
            .collect(),
    })
}

fn check_horizon(batch: &PathBatch, plans: &[BlockPlan]) -> Result<()> {
    ensure(!plans.is_empty(), "at least one blocking plan is required")?;
    for plan in plans {
        ensure(
            plan.last() as usize <= batch.n(),
            format!(
                "plan for m = {} reaches index {} beyond the batch horizon {}",
                plan.m,
                plan.last(),
                batch.n()
            ),
        )?;
    }
    Ok(())
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// `last ≤ factor · median`: the column shows no sustained upward trend.
pub fn bounded_column(xs: &[f64], factor: f64) -> bool {
    match xs.last() {
        Some(&last) => last <= factor * median(xs),
        None => true,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockMomentRow {
    pub m: u32,
    pub m1: u64,
    pub m2: u64,
    /// `mean ||Y||^{p′} / m1^{p′/2}`.
    pub big: f64,
    /// `mean ||Z||^{p′} / m2^{p′/2}`.
    pub small: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockMomentTable {
    pub rows: Vec<BlockMomentRow>,
    pub pass: bool,
}

/// Mean `||·||^{p′}` over the full blocks, or over all non-empty ones when
/// the interval holds no full block.
fn mean_block_pow(
    sums: &[HilbertVec],
    full: usize,
    lens: impl Fn(usize) -> u64,
    pprime: f64,
) -> f64 {
    let idx: Vec<usize> = if full > 0 {
        (0..full).collect()
    } else {
        (0..sums.len()).filter(|&j| lens(j) > 0).collect()
    };
    if idx.is_empty() {
        return 0.0;
    }
    idx.iter()
        .map(|&j| sums[j].norm().powf(pprime))
        .sum::<f64>()
        / idx.len() as f64
}

/// Normalized block moments per level; passes when neither column grows
/// past `factor` times its median at the last level.
pub fn block_moment_check(
    batch: &PathBatch,
    runner: &Runner,
    plans: &[BlockPlan],
    pprime: f64,
    factor: f64,
) -> Result<BlockMomentTable> {
    check_pprime(batch, pprime)?;
    check_horizon(batch, plans)?;
    let per_replica = batch.map_paths(runner, |_, path| {
        let mut out = Vec::with_capacity(2 * plans.len());
        for plan in plans {
            let (ys, zs) = block_sums(path, plan)?;
            let full = plan.kappa_full as usize;
            out.push(mean_block_pow(&ys, full, |j| plan.big[j].len(), pprime));
            out.push(mean_block_pow(&zs, full, |j| plan.small[j].len(), pprime));
        }
        Ok(out)
    })?;
    let means = column_means(&per_replica);
    let rows: Vec<BlockMomentRow> = plans
        .iter()
        .enumerate()
        .map(|(i, plan)| BlockMomentRow {
            m: plan.m,
            m1: plan.m1,
            m2: plan.m2,
            big: means[2 * i] / (plan.m1 as f64).powf(pprime / 2.0),
            small: means[2 * i + 1] / (plan.m2 as f64).powf(pprime / 2.0),
        })
        .collect();
    let big: Vec<f64> = rows.iter().map(|r| r.big).collect();
    let small: Vec<f64> = rows.iter().map(|r| r.small).collect();
    let pass = bounded_column(&big, factor) && bounded_column(&small, factor);
    Ok(BlockMomentTable { rows, pass })
}

#[derive(Debug, Clone, Serialize)]
pub struct SmallBlockRow {
    pub m: u32,
    pub normalized_max: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SmallBlockTable {
    pub rows: Vec<SmallBlockRow>,
    /// Least-squares slope of the column over `m`, first two levels dropped.
    pub slope: f64,
    pub pass: bool,
}

/// `max_i ||Σ_{ℓ ∈ J(m), ℓ ≤ i} X_ℓ||` for one path.
fn small_block_max(path: &[HilbertVec], plan: &BlockPlan) -> f64 {
    let mut acc = HilbertVec::zeros(path[0].dim());
    let mut best: f64 = 0.0;
    for r in &plan.small {
        for i in r.indices() {
            acc += &path[i as usize - 1];
            best = best.max(acc.norm());
        }
    }
    best
}

/// Replica-averaged small-block maxima scaled by `2^{(1−α₁)m/2} · m ln 2`;
/// passes when their trend over `m` (after the first two levels) is at most
/// `margin`.
pub fn small_block_growth(
    batch: &PathBatch,
    runner: &Runner,
    plans: &[BlockPlan],
    alpha1: f64,
    margin: f64,
) -> Result<SmallBlockTable> {
    check_horizon(batch, plans)?;
    for plan in plans {
        ensure(
            plan.alpha1 == alpha1,
            format!(
                "plan for m = {} was built with alpha1 = {}",
                plan.m, plan.alpha1
            ),
        )?;
    }
    ensure(
        plans.len() >= 4,
        "small-block trend needs at least four levels (two are dropped as burn-in)",
    )?;
    let per_replica = batch.map_paths(runner, |_, path| {
        Ok(plans
            .iter()
            .map(|plan| small_block_max(path, plan))
            .collect())
    })?;
    let means = column_means(&per_replica);
    let rows: Vec<SmallBlockRow> = plans
        .iter()
        .zip(means)
        .map(|(plan, mean)| {
            let m = plan.m as f64;
            let scale = ((1.0 - alpha1) * m / 2.0).exp2() * m * LN_2;
            SmallBlockRow {
                m: plan.m,
                normalized_max: mean / scale,
            }
        })
        .collect();
    let xs: Vec<f64> = rows[2..].iter().map(|r| r.m as f64).collect();
    let ys: Vec<f64> = rows[2..].iter().map(|r| r.normalized_max).collect();
    let (slope, _) = fit_line(&xs, &ys);
    Ok(SmallBlockTable {
        rows,
        slope,
        pass: slope <= margin,
    })
}
