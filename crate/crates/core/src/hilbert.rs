//! Truncated Hilbert-space arithmetic.
//!
//! Every element of the separable Hilbert space is represented by its first
//! `D` coefficients with respect to a fixed orthonormal basis `{e_k}`; all
//! coefficients beyond `D` are taken to be exactly zero. Under that truncation
//! the inner product is the Euclidean one on coefficient vectors and operators
//! are `D × D` matrices.
//!
//! ```text
//! <x, y> = Σ_k x_k y_k        ||A||_F = sqrt(Σ_ij a_ij²)
//! H = H_{≤d} ⊕ H_{>d}          x = x^(d) + x^[d]
//! ```

use std::ops::{Add, AddAssign, Index, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default truncation dimension.
pub const DEFAULT_DIM: usize = 32;

/// Coefficient vector of an element of `H` in the fixed orthonormal basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HilbertVec(Vec<f64>);

impl HilbertVec {
    /// Builds a vector from coefficients; rejects empty or non-finite input.
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::domain("vector dimension must be at least 1"));
        }
        if let Some(k) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::domain(format!("coefficient {k} is not finite")));
        }
        Ok(HilbertVec(coeffs))
    }

    /// Builds a vector without validation. Callers guarantee finiteness.
    pub(crate) fn from_vec(coeffs: Vec<f64>) -> Self {
        HilbertVec(coeffs)
    }

    pub fn zeros(dim: usize) -> Self {
        HilbertVec(vec![0.0; dim])
    }

    /// The basis vector `e_k` (zero-based `k`).
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut v = vec![0.0; dim];
        v[k] = 1.0;
        HilbertVec(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.0
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scale(&self, a: f64) -> Self {
        HilbertVec(self.0.iter().map(|c| a * c).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0.0)
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(())
    }

    /// In-place `self += other`, checking dimensions.
    pub fn try_add_assign(&mut self, other: &Self) -> Result<()> {
        self.check_dim(other)?;
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += b;
        }
        Ok(())
    }
}

impl Index<usize> for HilbertVec {
    type Output = f64;
    fn index(&self, k: usize) -> &f64 {
        &self.0[k]
    }
}

// The operator impls panic on dimension mismatch, mirroring slice indexing;
// the fallible forms are `inner` and `try_add_assign`.
impl Add for &HilbertVec {
    type Output = HilbertVec;
    fn add(self, rhs: &HilbertVec) -> HilbertVec {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch");
        HilbertVec(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &HilbertVec {
    type Output = HilbertVec;
    fn sub(self, rhs: &HilbertVec) -> HilbertVec {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch");
        HilbertVec(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl AddAssign<&HilbertVec> for HilbertVec {
    fn add_assign(&mut self, rhs: &HilbertVec) {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch");
        for (a, b) in self.0.iter_mut().zip(&rhs.0) {
            *a += b;
        }
    }
}

/// `<x, y>`.
pub fn inner(x: &HilbertVec, y: &HilbertVec) -> Result<f64> {
    x.check_dim(y)?;
    Ok(x.0.iter().zip(&y.0).map(|(a, b)| a * b).sum())
}

/// Splits `x` into its projection on `H_{≤d}` (first `d` coefficients) and the
/// remainder in `H_{>d}`, kept at full length with zeros in the first `d` slots.
pub fn split(x: &HilbertVec, d: usize) -> Result<(HilbertVec, HilbertVec)> {
    if d < 1 || d > x.dim() {
        return Err(Error::domain(format!(
            "split level d = {d} outside 1..={}",
            x.dim()
        )));
    }
    let head = HilbertVec(x.0[..d].to_vec());
    let mut tail = vec![0.0; x.dim()];
    tail[d..].copy_from_slice(&x.0[d..]);
    Ok((head, HilbertVec(tail)))
}

/// Dense symmetric `D × D` operator, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymOperator {
    dim: usize,
    entries: Vec<f64>,
}

/// Spectral decomposition `A = V Λ Vᵀ` with eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors; `vectors[k]` pairs with `values[k]`.
    pub vectors: Vec<HilbertVec>,
}

impl Eigen {
    /// Rebuilds `V Λ Vᵀ`.
    pub fn reconstruct(&self) -> SymOperator {
        let n = self.values.len();
        let mut out = vec![0.0; n * n];
        for (lam, v) in self.values.iter().zip(&self.vectors) {
            for i in 0..n {
                let vi = lam * v[i];
                for j in 0..n {
                    out[i * n + j] += vi * v[j];
                }
            }
        }
        SymOperator {
            dim: n,
            entries: out,
        }
    }
}

const SYMMETRY_TOL: f64 = 1e-12;
const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

impl SymOperator {
    /// Builds an operator from rows, validating shape, finiteness and symmetry.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::domain("operator dimension must be at least 1"));
        }
        let mut entries = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::domain("operator entries must be finite"));
            }
            entries.extend_from_slice(row);
        }
        let op = SymOperator { dim: n, entries };
        op.check_symmetric()?;
        Ok(op)
    }

    pub fn zeros(dim: usize) -> Self {
        SymOperator {
            dim,
            entries: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![1.0; dim])
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut op = Self::zeros(n);
        for (k, d) in diag.iter().enumerate() {
            op.entries[k * n + k] = *d;
        }
        op
    }

    /// Builds from row-major entries that the caller has made symmetric.
    pub(crate) fn from_entries_unchecked(dim: usize, entries: Vec<f64>) -> Self {
        debug_assert_eq!(entries.len(), dim * dim);
        SymOperator { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.dim).map(|k| self.get(k, k)).collect()
    }

    pub fn check_symmetric(&self) -> Result<()> {
        let n = self.dim;
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (self.get(i, j), self.get(j, i));
                let gap = (a - b).abs();
                if gap > SYMMETRY_TOL * a.abs().max(1.0) {
                    return Err(Error::NotSymmetric { i, j, gap });
                }
            }
        }
        Ok(())
    }

    pub fn frobenius(&self) -> f64 {
        frobenius(self)
    }

    /// `A x`.
    pub fn apply(&self, x: &HilbertVec) -> Result<HilbertVec> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.dim(),
            });
        }
        let out = self
            .entries
            .chunks(self.dim)
            .map(|row| row.iter().zip(x.coeffs()).map(|(a, b)| a * b).sum())
            .collect();
        Ok(HilbertVec(out))
    }

    /// Compression onto `H_{≤d}`: the leading `d × d` block.
    pub fn project(&self, d: usize) -> Result<SymOperator> {
        if d < 1 || d > self.dim {
            return Err(Error::domain(format!(
                "projection level d = {d} outside 1..={}",
                self.dim
            )));
        }
        let mut entries = Vec::with_capacity(d * d);
        for i in 0..d {
            entries.extend_from_slice(&self.entries[i * self.dim..i * self.dim + d]);
        }
        Ok(SymOperator { dim: d, entries })
    }

    /// Entry-wise `self - other`.
    pub fn sub(&self, other: &SymOperator) -> Result<SymOperator> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a - b)
            .collect();
        Ok(SymOperator {
            dim: self.dim,
            entries,
        })
    }

    pub fn scale(&self, a: f64) -> SymOperator {
        SymOperator {
            dim: self.dim,
            entries: self.entries.iter().map(|e| a * e).collect(),
        }
    }

    pub fn eigh(&self) -> Result<Eigen> {
        eigh(self)
    }
}

/// `||A||_F`.
pub fn frobenius(a: &SymOperator) -> f64 {
    a.entries.iter().map(|e| e * e).sum::<f64>().sqrt()
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Sweeps until the off-diagonal Frobenius mass drops below
/// `1e-12 · ||A||_F`. Eigenvalues are returned in descending order.
pub fn eigh(a: &SymOperator) -> Result<Eigen> {
    a.check_symmetric()?;
    let n = a.dim;
    // symmetrize exactly so rotations act on a truly symmetric matrix
    let mut m = a.entries.clone();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[i * n + j] + m[j * n + i]);
            m[i * n + j] = avg;
            m[j * n + i] = avg;
        }
    }
    let mut v = vec![0.0; n * n];
    for k in 0..n {
        v[k * n + k] = 1.0;
    }

    let scale = frobenius(a);
    let threshold = JACOBI_TOL * scale;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j] * m[i * n + j])
            .sum::<f64>()
            .sqrt();
        if off <= threshold {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k * n + p], m[k * n + q]);
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p * n + k], m[q * n + k]);
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k * n + p], v[k * n + q]);
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j * n + j].total_cmp(&m[i * n + i]));
    let values = order.iter().map(|&k| m[k * n + k]).collect();
    let vectors = order
        .iter()
        .map(|&k| HilbertVec((0..n).map(|i| v[i * n + k]).collect()))
        .collect();
    Ok(Eigen { values, vectors })
}
