//! Exact and empirical covariance analytics for partial sums.
//!
//! For the diagonal FAR model everything is coordinate-wise:
//!
//! ```text
//! Var(S_n)_k = n γ₀(k) + 2 Σ_{j=1}^{n−1} (n − j) γ_j(k)
//! r_k(n)     = Var(S_n)_k − n g(λ_k)
//! defect(n)  = ||cov(S_n) − nΓ||_F = sqrt(Σ_k r_k(n)²)
//! ```

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::far::{self, FarModel};
use crate::hilbert::{HilbertVec, SymOperator};
use crate::reduce::pairwise_sum_vecs;

/// `cov(Σ_{i≤n} X_i)`, diagonal for the FAR model.
pub fn cov_sn_exact(model: &FarModel, n: u64) -> Result<SymOperator> {
    ensure(n >= 1, "horizon n must be at least 1")?;
    let gamma0 = far::stationary_var(model);
    let diag: Vec<f64> = model
        .lambda()
        .iter()
        .zip(&gamma0)
        .map(|(&l, &g0)| {
            let mut lagged = 0.0;
            let mut gj = g0;
            for j in 1..n {
                gj *= l;
                if gj == 0.0 {
                    break;
                }
                lagged += (n - j) as f64 * gj;
            }
            n as f64 * g0 + 2.0 * lagged
        })
        .collect();
    Ok(SymOperator::diagonal(&diag))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovReport {
    pub n: u64,
    /// `||cov(S_n) − nΓ||_F`.
    pub defect: f64,
    /// `Var(S_{n,ℓ}) − n λ_ℓ^Γ` per coordinate.
    pub residuals: Vec<f64>,
}

pub fn gamma_defect(model: &FarModel, n: u64) -> Result<CovReport> {
    let cov = cov_sn_exact(model, n)?;
    let target = far::longrun_gamma(model).scale(n as f64);
    let diff = cov.sub(&target)?;
    Ok(CovReport {
        n,
        defect: diff.frobenius(),
        residuals: diff.diag(),
    })
}

/// Writes `n,defect,r_1,...,r_D` rows.
pub fn write_defect_csv<W: Write>(reports: &[CovReport], mut w: W) -> Result<()> {
    let d = reports.first().map_or(0, |r| r.residuals.len());
    let mut header = String::from("n,defect");
    for k in 1..=d {
        header.push_str(&format!(",r_{k}"));
    }
    writeln!(w, "{header}")?;
    for r in reports {
        let mut line = format!("{},{}", r.n, r.defect);
        for x in &r.residuals {
            line.push_str(&format!(",{x}"));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockEigs {
    pub lambda_max: f64,
    pub lambda_min: f64,
    /// `λ_min ≥ m1·λ_d` and `λ_max ≤ m1·g(λ_1)`.
    pub bound_ok: bool,
}

/// Extreme eigenvalues of `cov(Σ_{i≤m1} X_i^{(d)})` against the clean bounds
/// `m1·λ_d ≤ λ_min ≤ λ_max ≤ m1·g(λ_1)`.
pub fn block_cov_eigs(model: &FarModel, m1: u64, d: usize) -> Result<BlockEigs> {
    ensure(
        d >= 1 && d <= model.dim(),
        format!("projection level d = {d} outside 1..={}", model.dim()),
    )?;
    let cov = cov_sn_exact(model, m1)?.project(d)?;
    let eig = cov.eigh()?;
    let lambda_max = eig.values[0];
    let lambda_min = eig.values[d - 1];
    let lam = model.lambda();
    let m1f = m1 as f64;
    let bound_ok =
        lambda_min >= m1f * lam[d - 1] && lambda_max <= m1f * far::longrun_eigenvalue(lam[0]);
    Ok(BlockEigs {
        lambda_max,
        lambda_min,
        bound_ok,
    })
}

/// `||cov(X_0, X_k)||_F = sqrt(Σ_i γ_k(i)²)`.
pub fn cross_cov_frobenius(model: &FarModel, k: u64) -> Result<f64> {
    ensure(k >= 1, "lag k must be at least 1")?;
    Ok(far::autocov(model, k as usize)
        .iter()
        .map(|g| g * g)
        .sum::<f64>()
        .sqrt())
}

/// Centered outer-product average `(1/N) Σ (x_r − x̄)(x_r − x̄)ᵀ` over
/// independent replicas, reduced pairwise in replica order.
pub fn empirical_covariance(samples: &[HilbertVec]) -> Result<SymOperator> {
    ensure(!samples.is_empty(), "empirical covariance needs samples")?;
    let d = samples[0].dim();
    if let Some(bad) = samples.iter().find(|s| s.dim() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: bad.dim(),
        });
    }
    let n = samples.len() as f64;
    let sum = pairwise_sum_vecs(
        &samples
            .iter()
            .map(|s| s.coeffs().to_vec())
            .collect::<Vec<_>>(),
    );
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let outers: Vec<Vec<f64>> = samples
        .iter()
        .map(|s| {
            let c: Vec<f64> = s.coeffs().iter().zip(&mean).map(|(a, b)| a - b).collect();
            let mut o = vec![0.0; d * d];
            for i in 0..d {
                for j in 0..d {
                    o[i * d + j] = c[i] * c[j];
                }
            }
            o
        })
        .collect();
    let entries = pairwise_sum_vecs(&outers)
        .into_iter()
        .map(|x| x / n)
        .collect();
    Ok(SymOperator::from_entries_unchecked(d, entries))
}

/// Empirical block-covariance spectrum checked with slack factors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalBlockEigs {
    pub lambda_max: f64,
    pub lambda_min: f64,
    /// `λ_max ≤ 2·m1·g(λ_1)`.
    pub upper_ok: bool,
    /// `λ_min ≥ ½·m1·λ_d`.
    pub lower_ok: bool,
}

pub const EMPIRICAL_UPPER_SLACK: f64 = 2.0;
pub const EMPIRICAL_LOWER_SLACK: f64 = 0.5;

/// Spectrum of the empirical covariance of block sums `Σ_{i≤m1} X_i^{(d)}`.
pub fn block_cov_eigs_empirical(
    model: &FarModel,
    block_sums: &[HilbertVec],
    m1: u64,
    d: usize,
) -> Result<EmpiricalBlockEigs> {
    let cov = empirical_covariance(block_sums)?.project(d)?;
    let eig = cov.eigh()?;
    let lam = model.lambda();
    let m1f = m1 as f64;
    let lambda_max = eig.values[0];
    let lambda_min = eig.values[d - 1];
    Ok(EmpiricalBlockEigs {
        lambda_max,
        lambda_min,
        upper_ok: lambda_max <= EMPIRICAL_UPPER_SLACK * m1f * far::longrun_eigenvalue(lam[0]),
        lower_ok: lambda_min >= EMPIRICAL_LOWER_SLACK * m1f * lam[d - 1],
    })
}
