//! Closed-form rate exponents for the Gaussian strong approximation.
//!
//! Every rational formula is evaluated in exact arithmetic: inputs are
//! converted to `BigRational` (every finite `f64` is a dyadic rational), the
//! branch comparisons (`max`/`min`) are decided exactly, and only the final
//! value is rounded back to `f64`. The only transcendental quantity is
//! `A_d^{1/p′}`, which involves `log d`.
//!
//! ```text
//! θ̄     = max{ ((2p−2)δ₁ + 2δ₂ + 23p − 4) / (44p − 4 + (4p−4)δ₁ + 2pδ₂),
//!               ((2p−2)δ₁ + 2δ₂ + p(p+4)/2 − 4) / (p(p+2) − 4 + (4p−4)δ₁ + 2pδ₂) }
//! θ_p′  = min{ (p′−2) / (22p′ − 2 + (2p′−2)δ₁ + p′δ₂),
//!               (p′−2) / (p′(p′+2)/2 − 2 + (2p′−2)δ₁ + p′δ₂) }
//! α₁    = (1 + δ₁) θ_p′
//! δ̄_p,ε = (25p² − 54p + 8 − (44p−4)(3p−2)ε) / (2(3p−2)²ε)                 p ≤ 42
//!         (p³/2 + 3p² − 12p + 8 − (p²+2p−4)(3p−2)ε) / (2(3p−2)²ε)        p > 42
//! ```

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};

type Q = BigRational;

fn q(x: f64) -> Result<Q> {
    Q::from_float(x).ok_or_else(|| Error::domain(format!("{x} is not a finite number")))
}

fn int(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

fn check_p(p: f64) -> Result<()> {
    ensure(p > 2.0 && p.is_finite(), "p must exceed 2")
}

fn check_deltas(delta1: f64, delta2: f64) -> Result<()> {
    ensure(delta2 > 1.0, format!("delta2 must exceed 1 (got {delta2})"))?;
    ensure(
        delta1 >= delta2 && delta1.is_finite(),
        format!("delta1 must be at least delta2 (got {delta1} < {delta2})"),
    )
}

/// The two candidate exponents whose maximum is `θ̄`.
pub fn theta_bar_branches(p: f64, delta1: f64, delta2: f64) -> Result<(f64, f64)> {
    let (a, b) = theta_bar_exact(p, delta1, delta2)?;
    Ok((to_f64(&a), to_f64(&b)))
}

fn theta_bar_exact(p: f64, delta1: f64, delta2: f64) -> Result<(Q, Q)> {
    check_p(p)?;
    check_deltas(delta1, delta2)?;
    let (p, d1, d2) = (q(p)?, q(delta1)?, q(delta2)?);
    let common_num = (int(2) * &p - int(2)) * &d1 + int(2) * &d2;
    let common_den = (int(4) * &p - int(4)) * &d1 + int(2) * &p * &d2;
    let first = (&common_num + int(23) * &p - int(4)) / (int(44) * &p - int(4) + &common_den);
    let second = (&common_num + &p * (&p + int(4)) / int(2) - int(4))
        / (&p * (&p + int(2)) - int(4) + &common_den);
    Ok((first, second))
}

/// Infimum of admissible ASIP exponents `θ̄`.
pub fn theta_bar(p: f64, delta1: f64, delta2: f64) -> Result<f64> {
    let (a, b) = theta_bar_exact(p, delta1, delta2)?;
    Ok(to_f64(if a >= b { &a } else { &b }))
}

fn theta_pprime_exact(pprime: f64, delta1: f64, delta2: f64) -> Result<(Q, Q)> {
    ensure(pprime > 2.0 && pprime.is_finite(), "pprime must exceed 2")?;
    check_deltas(delta1, delta2)?;
    let (pp, d1, d2) = (q(pprime)?, q(delta1)?, q(delta2)?);
    let num = &pp - int(2);
    let common = (int(2) * &pp - int(2)) * &d1 + &pp * &d2;
    let first = &num / (int(22) * &pp - int(2) + &common);
    let second = &num / (&pp * (&pp + int(2)) / int(2) - int(2) + &common);
    Ok((first, second))
}

/// The two candidates whose minimum is `θ_p′`.
pub fn theta_pprime_branches(pprime: f64, delta1: f64, delta2: f64) -> Result<(f64, f64)> {
    let (a, b) = theta_pprime_exact(pprime, delta1, delta2)?;
    Ok((to_f64(&a), to_f64(&b)))
}

/// Calibration exponent `θ_p′` used to choose `d = 2^{mθ_p′}`.
pub fn theta_pprime(pprime: f64, delta1: f64, delta2: f64) -> Result<f64> {
    let (a, b) = theta_pprime_exact(pprime, delta1, delta2)?;
    Ok(to_f64(if a <= b { &a } else { &b }))
}

/// Big-block exponent `α₁ = (1 + δ₁) θ_p′`; must land in `(0, 1)`.
pub fn alpha1_of(pprime: f64, delta1: f64, delta2: f64) -> Result<f64> {
    let (a, b) = theta_pprime_exact(pprime, delta1, delta2)?;
    let theta = if a <= b { a } else { b };
    let alpha = (Q::one() + q(delta1)?) * theta;
    ensure(
        alpha > Q::zero() && alpha < Q::one(),
        format!("alpha1 = {} is outside (0, 1)", to_f64(&alpha)),
    )?;
    Ok(to_f64(&alpha))
}

/// The crossover point `p = 42` where `23p − 4 = p(p+4)/2 − 4`.
pub const BRANCH_CROSSOVER: f64 = 42.0;

fn delta_bar_branch(p: &Q, eps: &Q, low: bool) -> Q {
    let three_p_minus_2 = int(3) * p - int(2);
    let den = int(2) * &three_p_minus_2 * &three_p_minus_2 * eps;
    let num = if low {
        int(25) * p * p - int(54) * p + int(8) - (int(44) * p - int(4)) * &three_p_minus_2 * eps
    } else {
        p * p * p / int(2) + int(3) * p * p - int(12) * p + int(8)
            - (p * p + int(2) * p - int(4)) * &three_p_minus_2 * eps
    };
    num / den
}

/// Decay threshold `δ̄_{p,ε}` above which the polynomial-decay corollary
/// yields the exponent `1/3 + 2/(3(3p−2)) + ε`.
pub fn delta_bar(p: f64, epsilon: f64) -> Result<f64> {
    check_p(p)?;
    ensure(
        epsilon > 0.0 && epsilon.is_finite(),
        "epsilon must be positive",
    )?;
    let (pq, eq) = (q(p)?, q(epsilon)?);
    Ok(to_f64(&delta_bar_branch(&pq, &eq, p <= BRANCH_CROSSOVER)))
}

/// Both branches of `δ̄_{p,ε}` evaluated at the same point.
pub fn delta_bar_branches(p: f64, epsilon: f64) -> Result<(f64, f64)> {
    check_p(p)?;
    ensure(epsilon > 0.0, "epsilon must be positive")?;
    let (pq, eq) = (q(p)?, q(epsilon)?);
    Ok((
        to_f64(&delta_bar_branch(&pq, &eq, true)),
        to_f64(&delta_bar_branch(&pq, &eq, false)),
    ))
}

/// `1/3 + 2/(3(3p−2)) + ε`.
pub fn corollary_exponent(p: f64, epsilon: f64) -> Result<f64> {
    check_p(p)?;
    ensure(
        epsilon >= 0.0 && epsilon.is_finite(),
        "epsilon must be non-negative",
    )?;
    let pq = q(p)?;
    let v = Q::new(BigInt::from(1), BigInt::from(3))
        + int(2) / (int(3) * (int(3) * pq - int(2)))
        + q(epsilon)?;
    Ok(to_f64(&v))
}

/// Finite-dimensional exponent `1/4 + 1/(4(p−1))`.
pub fn finite_dim_exponent(p: f64) -> Result<f64> {
    check_p(p)?;
    let pq = q(p)?;
    let v = Q::new(BigInt::from(1), BigInt::from(4)) + Q::one() / (int(4) * (pq - int(1)));
    Ok(to_f64(&v))
}

/// `A_d^{1/p′} = max{d^{11}, d^{(p′+2)/4} (ln d)^{(p′+1)/2}}` with unit constant.
pub fn a_d_root(pprime: f64, d: f64) -> Result<f64> {
    ensure(pprime > 2.0 && pprime.is_finite(), "pprime must exceed 2")?;
    ensure(
        d >= 2.0 && d.is_finite(),
        format!("d must be at least 2 (got {d})"),
    )?;
    let first = d.powi(11);
    let second = d.powf((pprime + 2.0) / 4.0) * d.ln().powf((pprime + 1.0) / 2.0);
    Ok(first.max(second))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateInputs {
    pub p: f64,
    pub pprime: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub epsilon: Option<f64>,
    pub d: f64,
}

impl RateInputs {
    /// Inputs with `δ₁ = δ₂ = delta`, `p′ = (p + 2)/2` and `d = 16` unless given.
    pub fn new(p: f64, delta: f64) -> Self {
        RateInputs {
            p,
            pprime: (p + 2.0) / 2.0,
            delta1: delta,
            delta2: delta,
            epsilon: None,
            d: 16.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_p(self.p)?;
        ensure(
            self.pprime > 2.0 && self.pprime < self.p,
            format!("pprime must lie in (2, p) (got {})", self.pprime),
        )?;
        check_deltas(self.delta1, self.delta2)?;
        if let Some(e) = self.epsilon {
            ensure(e > 0.0, "epsilon must be positive")?;
        }
        ensure(
            self.d >= 2.0,
            format!("d must be at least 2 (got {})", self.d),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub inputs: RateInputs,
    pub theta_bar: f64,
    pub theta_pprime: f64,
    /// `None` when `(1 + δ₁)θ_p′ ∉ (0, 1)`.
    pub alpha1: Option<f64>,
    pub a_d_root: f64,
    /// Present when `ε` was supplied.
    pub delta_bar: Option<f64>,
    pub corollary_exp: f64,
    pub finite_dim_exp: f64,
}

pub fn report(inputs: &RateInputs) -> Result<RateReport> {
    inputs.validate()?;
    let eps = inputs.epsilon.unwrap_or(0.0);
    Ok(RateReport {
        inputs: *inputs,
        theta_bar: theta_bar(inputs.p, inputs.delta1, inputs.delta2)?,
        theta_pprime: theta_pprime(inputs.pprime, inputs.delta1, inputs.delta2)?,
        alpha1: alpha1_of(inputs.pprime, inputs.delta1, inputs.delta2).ok(),
        a_d_root: a_d_root(inputs.pprime, inputs.d)?,
        delta_bar: inputs.epsilon.map(|e| delta_bar(inputs.p, e)).transpose()?,
        corollary_exp: corollary_exponent(inputs.p, eps)?,
        finite_dim_exp: finite_dim_exponent(inputs.p)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn theta_bar_examples() {
        assert_relative_eq!(
            theta_bar(4.0, 2.0, 2.0).unwrap(),
            26.0 / 53.0,
            max_relative = 1e-15
        );
        let (a, b) = theta_bar_branches(4.0, 2.0, 2.0).unwrap();
        assert_relative_eq!(a, 104.0 / 212.0, max_relative = 1e-15);
        assert_relative_eq!(b, 28.0 / 60.0, max_relative = 1e-15);
        assert!((theta_bar(4.0, 1e6, 1e6).unwrap() - 0.4).abs() < 1e-4);
        assert!(theta_bar(2.0, 2.0, 2.0).is_err());
        assert!(theta_bar(4.0, 2.0, 1.0).is_err());
        assert!(theta_bar(4.0, 1.5, 2.0).is_err());
    }

    #[test]
    fn theta_bar_below_half() {
        for p in [2.5, 3.0, 4.0, 10.0, 42.0, 100.0] {
            for d in [1.01, 1.5, 2.0, 5.0, 100.0] {
                assert!(theta_bar(p, d, d).unwrap() < 0.5 + 1e-12, "p={p} d={d}");
            }
        }
    }

    #[test]
    fn theta_pprime_examples() {
        assert_relative_eq!(
            theta_pprime(4.0, 2.0, 2.0).unwrap(),
            1.0 / 53.0,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            alpha1_of(4.0, 2.0, 2.0).unwrap(),
            3.0 / 53.0,
            max_relative = 1e-15
        );
        assert!(theta_pprime(2.0 + 1e-12, 2.0, 2.0).unwrap() < 1e-12);
        // first branch is the minimum exactly when p′ < 42
        for pp in [3.0, 10.0, 41.9] {
            let (a, b) = theta_pprime_branches(pp, 2.0, 2.0).unwrap();
            assert!(a < b, "p′={pp}");
        }
        for pp in [42.1, 60.0] {
            let (a, b) = theta_pprime_branches(pp, 2.0, 2.0).unwrap();
            assert!(a > b, "p′={pp}");
        }
    }

    #[test]
    fn alpha1_error_path() {
        // tiny δ₁ keeps θ small; the error needs (1+δ₁)θ ≥ 1, impossible for δ₂ > 1,
        // so check the invariant instead
        for pp in [2.5, 3.0, 10.0, 100.0] {
            for d in [1.01, 2.0, 50.0] {
                let theta = theta_pprime(pp, d, d).unwrap();
                let a = alpha1_of(pp, d, d);
                if theta < 1.0 / (1.0 + d) {
                    let a = a.unwrap();
                    assert!(a > 0.0 && a < 1.0);
                } else {
                    assert!(a.is_err());
                }
            }
        }
        assert!(alpha1_of(2.0, 2.0, 2.0).is_err());
    }

    #[test]
    fn delta_bar_examples() {
        assert_relative_eq!(delta_bar(4.0, 0.05).unwrap(), 10.6, max_relative = 1e-15);
        assert!(delta_bar(4.0, 10.0).unwrap() < 0.0);
        let (lo, hi) = delta_bar_branches(42.0, 0.05).unwrap();
        assert_relative_eq!(lo, hi, max_relative = 1e-15);
        assert!(delta_bar(4.0, 0.0).is_err());
    }

    #[test]
    fn corollary_examples() {
        assert_relative_eq!(
            corollary_exponent(4.0, 0.0).unwrap(),
            0.4,
            max_relative = 1e-15
        );
        assert!((corollary_exponent(1e12, 0.1).unwrap() - (1.0 / 3.0 + 0.1)).abs() < 1e-12);
        for p in [3.0, 4.0, 8.0, 50.0] {
            let lim = theta_bar(p, 1e8, 1e8).unwrap();
            assert!((corollary_exponent(p, 0.0).unwrap() - lim).abs() < 1e-6);
        }
    }

    #[test]
    fn finite_dim_examples() {
        assert_relative_eq!(
            finite_dim_exponent(3.0).unwrap(),
            0.375,
            max_relative = 1e-15
        );
        assert!((finite_dim_exponent(1e15).unwrap() - 0.25).abs() < 1e-14);
        assert_relative_eq!(a_d_root(4.0, 2.0).unwrap(), 2048.0, max_relative = 1e-15);
        assert!(a_d_root(4.0, 1.0).is_err());
    }

    #[test]
    fn crossovers_coincide() {
        // 23x − 4 = x(x+4)/2 − 4 at x = 42 (the other root is 0)
        let x = BRANCH_CROSSOVER;
        assert_eq!(23.0 * x - 4.0, x * (x + 4.0) / 2.0 - 4.0);
        // θ̄: both branch numerators and denominators meet at p = 42
        let (a, b) = theta_bar_branches(42.0, 2.0, 2.0).unwrap();
        assert_eq!(a, b);
        let (a, b) = theta_bar_branches(41.0, 2.0, 2.0).unwrap();
        assert!(a > b);
        let (a, b) = theta_bar_branches(43.0, 2.0, 2.0).unwrap();
        assert!(a < b);
        // θ_p′: 22p′ − 2 = p′(p′+2)/2 − 2 at p′ = 42
        let (a, b) = theta_pprime_branches(42.0, 3.0, 2.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn report_fields() {
        let mut inputs = RateInputs::new(4.0, 2.0);
        inputs.epsilon = Some(0.05);
        let r = report(&inputs).unwrap();
        assert_relative_eq!(r.theta_bar, 26.0 / 53.0, max_relative = 1e-15);
        assert_eq!(r.delta_bar, Some(delta_bar(4.0, 0.05).unwrap()));
        assert!(r.alpha1.is_some());
        assert!(report(&RateInputs::new(2.0, 2.0)).is_err());
    }

    proptest! {
        #[test]
        fn theta_bar_non_increasing_in_delta(p in 2.1f64..60.0, a in 1.1f64..1e6, b in 1.1f64..1e6) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(theta_bar(p, hi, hi).unwrap() <= theta_bar(p, lo, lo).unwrap());
        }

        #[test]
        fn corollary_decreasing_in_p(p in 2.1f64..1e4, dp in 1e-3f64..10.0) {
            prop_assert!(corollary_exponent(p + dp, 0.0).unwrap() < corollary_exponent(p, 0.0).unwrap());
        }

        #[test]
        fn delta_bar_decreasing_in_eps(p in 2.1f64..80.0, e in 1e-3f64..1.0, de in 1e-3f64..1.0) {
            prop_assert!(delta_bar(p, e + de).unwrap() < delta_bar(p, e).unwrap());
        }
    }
}
