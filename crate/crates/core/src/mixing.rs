//! Quantile-coupling covariance bound and mixing decay envelopes.
//!
//! For H-valued `X`, `Y` measurable with respect to σ-fields that are
//! α-mixing at level `ᾱ`,
//!
//! ```text
//! |E<X,Y> − <EX, EY>| ≤ 18 ∫₀^ᾱ Q_{||X||}(u) Q_{||Y||}(u) du,
//! Q_{||X||}(u) = inf{t : P(||X|| > t) ≤ u}.
//! ```
//!
//! Quantile functions here are empirical step functions, and the integral is
//! evaluated exactly over the merged breakpoint partition.

use std::io::Write;

use serde::Serialize;

use crate::error::{ensure, Result};

/// Right-continuous, non-increasing empirical tail-quantile function.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantileFn {
    sorted: Vec<f64>,
    /// Pieces `[u_lo, u_hi) ↦ value`, increasing in `u`, covering `[0, 1]`.
    pieces: Vec<Piece>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
struct Piece {
    lo: f64,
    hi: f64,
    value: f64,
}

pub fn empirical_quantile(sample: &[f64]) -> Result<QuantileFn> {
    ensure(!sample.is_empty(), "quantile sample must be non-empty")?;
    ensure(
        sample.iter().all(|x| x.is_finite() && *x >= 0.0),
        "quantile sample must be finite and non-negative",
    )?;
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();

    // distinct values with their tail fractions #{x > v}/N, largest value first
    let mut pieces = Vec::new();
    let mut lo = 0.0;
    let mut i = n;
    while i > 0 {
        let v = sorted[i - 1];
        let first = sorted.partition_point(|&x| x < v);
        // tail fraction of the next smaller distinct value
        let hi = if first == 0 {
            1.0
        } else {
            (n - first) as f64 / n as f64
        };
        pieces.push(Piece { lo, hi, value: v });
        lo = hi;
        i = first;
    }
    Ok(QuantileFn { sorted, pieces })
}

impl QuantileFn {
    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// `Q(u)`; for `u ≥ 1` this is the sample minimum.
    pub fn eval(&self, u: f64) -> f64 {
        self.pieces
            .iter()
            .find(|p| u < p.hi)
            .unwrap_or_else(|| self.pieces.last().expect("non-empty"))
            .value
    }

    /// Breakpoints `0 = u_0 < u_1 < … < u_K = 1`.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.pieces.iter().map(|p| p.lo).collect();
        b.push(1.0);
        b
    }

    /// Writes `u,Q` at every breakpoint (left edge of each step).
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "u,Q")?;
        for p in &self.pieces {
            writeln!(w, "{},{}", p.lo, p.value)?;
        }
        Ok(())
    }

    /// `∫₀^upper Q(u) R(u) du` for another step function `R`.
    pub fn integrate_product(&self, other: &QuantileFn, upper: f64) -> f64 {
        let mut cuts: Vec<f64> = self
            .breakpoints()
            .into_iter()
            .chain(other.breakpoints())
            .filter(|&u| u < upper)
            .collect();
        cuts.push(upper);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        cuts.windows(2)
            .map(|w| (w[1] - w[0]) * self.eval(w[0]) * other.eval(w[0]))
            .sum()
    }
}

pub const MERLEVEDE_CONSTANT: f64 = 18.0;

/// `18 ∫₀^ᾱ Q_X(u) Q_Y(u) du`.
pub fn merl_bound(qx: &QuantileFn, qy: &QuantileFn, alpha_bar: f64) -> Result<f64> {
    ensure(
        (0.0..=1.0).contains(&alpha_bar),
        format!("alpha_bar must lie in [0, 1] (got {alpha_bar})"),
    )?;
    if alpha_bar == 0.0 {
        return Ok(0.0);
    }
    Ok(MERLEVEDE_CONSTANT * qx.integrate_product(qy, alpha_bar))
}

/// `e^{−kβ(1 − 2/p)} · (E||X||^p)^{2/p}` with the unquantified constant set to 1.
pub fn cov_decay_envelope(k: f64, beta: f64, p: f64, pmoment: f64) -> Result<f64> {
    ensure(p > 2.0, format!("moment order p must exceed 2 (got {p})"))?;
    ensure(beta > 0.0, "mixing rate beta must be positive")?;
    ensure(pmoment > 0.0, "p-th moment must be positive")?;
    Ok((-k * beta * (1.0 - 2.0 / p)).exp() * pmoment.powf(2.0 / p))
}
