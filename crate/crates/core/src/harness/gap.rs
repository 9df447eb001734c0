//! Dependence diagnostics: correlation between neighbouring big blocks and
//! Monte Carlo domination of inner-product covariances by the quantile bound.

use serde::Serialize;

use crate::blocking::BlockPlan;
use crate::error::{ensure, Result};
use crate::hilbert::{inner, HilbertVec};
use crate::markov::{self, FiniteChain};
use crate::mixing::{empirical_quantile, merl_bound};
use crate::reduce::{mean_se, pairwise_sum, pairwise_sum_vecs};

use super::batch::{partial_sums, PathBatch, Runner};

#[derive(Debug, Clone, Serialize)]
pub struct GapResult {
    pub m: u32,
    pub m2: u64,
    pub m2_clamped: bool,
    pub pairs: usize,
    pub corr: f64,
    pub corr_abs: f64,
    pub se: f64,
    /// `e^{−β m2}` when the source has a geometric mixing rate.
    pub envelope: Option<f64>,
}

/// Pearson correlation of paired samples, with sums reduced pairwise.
fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = pairwise_sum(a) / n;
    let mb = pairwise_sum(b) / n;
    let da: Vec<f64> = a.iter().map(|x| x - ma).collect();
    let db: Vec<f64> = b.iter().map(|x| x - mb).collect();
    let sab: Vec<f64> = da.iter().zip(&db).map(|(x, y)| x * y).collect();
    let saa: Vec<f64> = da.iter().map(|x| x * x).collect();
    let sbb: Vec<f64> = db.iter().map(|x| x * x).collect();
    let denom = (pairwise_sum(&saa) * pairwise_sum(&sbb)).sqrt();
    if denom > 0.0 {
        pairwise_sum(&sab) / denom
    } else {
        0.0
    }
}

/// Pooled correlation of `(||Y_{m,j}||, ||Y_{m,j+1}||)` over all full big
/// blocks and replicas.
///
/// With `surrogate` set, the second member of each pair is taken from the
/// next replica, which makes the pair independent by construction.
pub fn independence_gap(
    batch: &PathBatch,
    runner: &Runner,
    plan: &BlockPlan,
    surrogate: bool,
) -> Result<GapResult> {
    let (observed, shuffled) = independence_gaps(batch, runner, std::slice::from_ref(plan))?
        .pop()
        .expect("one plan");
    Ok(if surrogate { shuffled } else { observed })
}

/// Observed and surrogate gaps for several levels from a single pass over
/// the batch.
pub fn independence_gaps(
    batch: &PathBatch,
    runner: &Runner,
    plans: &[BlockPlan],
) -> Result<Vec<(GapResult, GapResult)>> {
    for plan in plans {
        ensure(
            plan.kappa_full >= 3,
            format!(
                "independence gap needs at least 3 full big blocks (m = {} has {})",
                plan.m, plan.kappa_full
            ),
        )?;
        ensure(
            plan.last() as usize <= batch.n(),
            format!(
                "plan for m = {} exceeds the batch horizon {}",
                plan.m,
                batch.n()
            ),
        )?;
    }
    // norms[r][level][j] = ||Y_{m,j+1}|| of replica r
    let norms = batch.map_paths(runner, |_, path| {
        let s = partial_sums(path);
        Ok(plans
            .iter()
            .map(|plan| {
                plan.big[..plan.kappa_full as usize]
                    .iter()
                    .map(|b| (&s[b.end as usize] - &s[b.start as usize - 1]).norm())
                    .collect::<Vec<f64>>()
            })
            .collect::<Vec<_>>())
    })?;
    let rate = batch.source().mixing_rate();
    Ok(plans
        .iter()
        .enumerate()
        .map(|(level, plan)| {
            let rows: Vec<&[f64]> = norms.iter().map(|r| r[level].as_slice()).collect();
            let gap = |surrogate| gap_from_norms(&rows, plan, surrogate, rate);
            (gap(false), gap(true))
        })
        .collect())
}

fn gap_from_norms(
    norms: &[&[f64]],
    plan: &BlockPlan,
    surrogate: bool,
    rate: Option<f64>,
) -> GapResult {
    let r = norms.len();
    let kappa = plan.kappa_full as usize;
    let mut left = Vec::with_capacity(r * (kappa - 1));
    let mut right = Vec::with_capacity(r * (kappa - 1));
    for (i, row) in norms.iter().enumerate() {
        let partner = if surrogate { norms[(i + 1) % r] } else { row };
        for j in 0..kappa - 1 {
            left.push(row[j]);
            right.push(partner[j + 1]);
        }
    }
    let corr = pearson(&left, &right);
    let pairs = left.len();
    GapResult {
        m: plan.m,
        m2: plan.m2,
        m2_clamped: plan.m2_clamped,
        pairs,
        corr,
        corr_abs: corr.abs(),
        se: (1.0 - corr * corr) / ((pairs as f64) - 1.0).max(1.0).sqrt(),
        envelope: rate.map(|beta| (-beta * plan.m2 as f64).exp()),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DominationRow {
    pub k: u64,
    pub beta: f64,
    /// `mean <X, Y> − <mean X, mean Y>` with `X = φ(X_0)`, `Y = φ(X_k)`.
    pub empirical: f64,
    pub se: f64,
    /// `18 ∫₀^{β(k)} Q_{||X||} Q_{||Y||}`.
    pub bound: f64,
    pub dominated: bool,
}

/// For each lag `k = 1..=max_lag`, draws `samples` independent stationary
/// chain segments of length `k + 1` and compares the empirical covariance of
/// the embedded endpoints with the quantile bound at `ᾱ = β(k)`.
pub fn merl_domination(
    chain: &FiniteChain,
    runner: &Runner,
    max_lag: u64,
    samples: usize,
    seed: u64,
    se_band: f64,
) -> Result<Vec<DominationRow>> {
    ensure(max_lag >= 1, "max_lag must be at least 1")?;
    ensure(samples >= 2, "need at least 2 samples")?;
    let pi = markov::stationary(chain)?;
    let embed = chain.embedding();
    (1..=max_lag)
        .map(|k| {
            let ends = runner.map(samples, |i| {
                let stream = (k << 40) | i as u64;
                let states = markov::simulate_states_with(chain, &pi, k as usize + 1, seed, stream);
                Ok((states[0], states[k as usize]))
            })?;
            let xs: Vec<&HilbertVec> = ends.iter().map(|&(a, _)| &embed[a]).collect();
            let ys: Vec<&HilbertVec> = ends.iter().map(|&(_, b)| &embed[b]).collect();
            let n = samples as f64;
            let mean_of = |v: &[&HilbertVec]| -> Result<HilbertVec> {
                let rows: Vec<Vec<f64>> = v.iter().map(|x| x.coeffs().to_vec()).collect();
                HilbertVec::new(
                    pairwise_sum_vecs(&rows)
                        .into_iter()
                        .map(|s| s / n)
                        .collect(),
                )
            };
            let (mx, my) = (mean_of(&xs)?, mean_of(&ys)?);
            let centered: Vec<f64> = xs
                .iter()
                .zip(&ys)
                .map(|(x, y)| inner(&(*x - &mx), &(*y - &my)))
                .collect::<Result<_>>()?;
            let (empirical, se) = mean_se(&centered);
            let beta = markov::beta_exact(chain, k)?;
            let qx = empirical_quantile(&xs.iter().map(|x| x.norm()).collect::<Vec<_>>())?;
            let qy = empirical_quantile(&ys.iter().map(|y| y.norm()).collect::<Vec<_>>())?;
            let bound = merl_bound(&qx, &qy, beta.clamp(0.0, 1.0))?;
            Ok(DominationRow {
                k,
                beta,
                empirical,
                se,
                bound,
                dominated: bound >= empirical.abs() - se_band * se,
            })
        })
        .collect()
}
