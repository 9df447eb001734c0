//! Kolmogorov–Smirnov checks of coordinate partial sums against `N(0, Γ_kk)`.

use libm::erfc;
use serde::Serialize;

use crate::error::{ensure, Error, Result};

use super::batch::{PathBatch, Runner};

/// Fewest replicas for which the KS p-value is trusted.
pub const MIN_CLT_REPLICAS: usize = 500;

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// One-sample KS distance between `sample` and the standard normal law.
pub fn ks_statistic(sample: &[f64]) -> f64 {
    let mut z = sample.to_vec();
    z.sort_by(f64::total_cmp);
    let n = z.len() as f64;
    z.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal_cdf(x);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

/// Kolmogorov tail `P(K > λ) = 2 Σ_{j≥1} (−1)^{j−1} e^{−2j²λ²}`.
pub fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=100 {
        let term = (-2.0 * (j * j) as f64 * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-18 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Asymptotic p-value with Stephens' finite-sample correction.
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let rn = (n as f64).sqrt();
    kolmogorov_tail((rn + 0.12 + 0.11 / rn) * d)
}

#[derive(Debug, Clone, Serialize)]
pub struct CltResult {
    /// One-based coordinate.
    pub coord: usize,
    pub n: usize,
    pub variance: f64,
    pub ks_stat: f64,
    pub p_value: f64,
    pub pass: bool,
}

/// KS test of `S_{n,k} / sqrt(n · g(λ_k))` against `N(0, 1)`, with the
/// target variance taken from the source's long-run covariance.
pub fn clt_check(
    batch: &PathBatch,
    runner: &Runner,
    coord: usize,
    alpha: f64,
) -> Result<CltResult> {
    check_coord(batch, coord)?;
    let g = batch.source().longrun()?.get(coord - 1, coord - 1);
    clt_check_against(batch, runner, coord, g, alpha)
}

fn check_coord(batch: &PathBatch, coord: usize) -> Result<()> {
    ensure(
        coord >= 1 && coord <= batch.dim(),
        format!("coordinate {coord} outside 1..={}", batch.dim()),
    )
}

/// As [`clt_check`], against an explicit per-step variance.
pub fn clt_check_against(
    batch: &PathBatch,
    runner: &Runner,
    coord: usize,
    variance: f64,
    alpha: f64,
) -> Result<CltResult> {
    check_coord(batch, coord)?;
    ensure(
        batch.replicas() >= MIN_CLT_REPLICAS,
        format!(
            "CLT check needs at least {MIN_CLT_REPLICAS} replicas (got {})",
            batch.replicas()
        ),
    )?;
    if !(variance > 0.0 && variance.is_finite()) {
        return Err(Error::domain(format!(
            "target variance of coordinate {coord} must be positive (got {variance})"
        )));
    }
    let n = batch.n();
    let scale = 1.0 / (n as f64 * variance).sqrt();
    let z = batch.map_paths(runner, |_, path| {
        Ok(path.iter().map(|x| x[coord - 1]).sum::<f64>() * scale)
    })?;
    let ks_stat = ks_statistic(&z);
    let p_value = ks_p_value(ks_stat, z.len());
    Ok(CltResult {
        coord,
        n,
        variance,
        ks_stat,
        p_value,
        pass: p_value > alpha,
    })
}
