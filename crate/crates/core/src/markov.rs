//! Finite-state ergodic Markov chains under a Lyapunov drift condition.
//!
//! For a finite state space the β-mixing coefficient of the stationary chain
//! reduces to a π-average of total-variation distances,
//!
//! ```text
//! β(n) = Σ_s π(s) · ½ Σ_t |Pⁿ(s,t) − π(t)|,
//! ```
//!
//! because `sup_{0≤f≤1} |Σ_t (Pⁿ(s,t) − π(t)) f(t)|` is attained at the
//! indicator of the positive part. The drift condition is
//! `PV ≤ γV + K·1_C`, and the geometric rate `C_γ` solves `γe^c + c = 1`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::hilbert::{HilbertVec, SymOperator};
use crate::linalg::{self, Matrix};
use crate::rng::Stream;

const STOCHASTIC_TOL: f64 = 1e-12;

/// JSON document describing a chain. State indices in `C` are zero-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    #[serde(rename = "P")]
    pub p: Vec<Vec<f64>>,
    #[serde(rename = "V")]
    pub v: Vec<f64>,
    pub gamma: f64,
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "C")]
    pub c: Vec<usize>,
    pub embed: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteChain {
    p: Matrix,
    embed: Vec<HilbertVec>,
    v: Vec<f64>,
    small_set: Vec<bool>,
    gamma: f64,
    k: f64,
}

impl FiniteChain {
    /// Validates stochasticity, Lyapunov values and the embedding.
    ///
    /// Irreducibility and aperiodicity are checked lazily by [`stationary`],
    /// so periodic chains can still be built and inspected.
    pub fn new(spec: ChainSpec) -> Result<Self> {
        let s = spec.p.len();
        ensure(s >= 1, "chain needs at least one state")?;
        for (i, row) in spec.p.iter().enumerate() {
            if row.len() != s {
                return Err(Error::DimensionMismatch {
                    expected: s,
                    got: row.len(),
                });
            }
            ensure(
                row.iter().all(|&x| x >= 0.0 && x.is_finite()),
                format!("row {i} of P has a negative or non-finite entry"),
            )?;
            let sum: f64 = row.iter().sum();
            ensure(
                (sum - 1.0).abs() <= STOCHASTIC_TOL,
                format!("row {i} of P sums to {sum}, not 1"),
            )?;
        }
        ensure(spec.v.len() == s, "V needs one value per state")?;
        ensure(
            spec.v.iter().all(|&v| v >= 1.0),
            "V must be at least 1 everywhere",
        )?;
        ensure(
            spec.gamma > 0.0 && spec.gamma < 1.0,
            format!("gamma must lie in (0, 1) (got {})", spec.gamma),
        )?;
        ensure(spec.k > 0.0, "K must be positive")?;
        let mut small_set = vec![false; s];
        for &c in &spec.c {
            ensure(c < s, format!("state {c} in C is out of range"))?;
            small_set[c] = true;
        }
        ensure(spec.embed.len() == s, "embed needs one vector per state")?;
        let dim = spec.embed[0].len();
        let embed = spec
            .embed
            .into_iter()
            .map(|e| {
                if e.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: e.len(),
                    });
                }
                HilbertVec::new(e)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FiniteChain {
            p: spec.p,
            embed,
            v: spec.v,
            small_set,
            gamma: spec.gamma,
            k: spec.k,
        })
    }

    /// Chain with trivial drift data (`V ≡ 1`, `γ = ½`, `K = 1`, `C` = all
    /// states) and the canonical embedding `s ↦ e_s`.
    pub fn from_transition(p: Vec<Vec<f64>>) -> Result<Self> {
        let s = p.len();
        Self::new(ChainSpec {
            embed: (0..s)
                .map(|i| HilbertVec::basis(s, i).into_inner())
                .collect(),
            p,
            v: vec![1.0; s],
            gamma: 0.5,
            k: 1.0,
            c: (0..s).collect(),
        })
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Self::new(serde_json::from_str(s)?)
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    /// The symmetric two-state chain `P = [[¾, ¼], [¼, ¾]]` with
    /// `V = (1, 2)`, `γ = 0.9`, `K = 2`, `C` = both states, and embedding
    /// `φ(0) = (1, 0)`, `φ(1) = (0, 2)`.
    pub fn two_state_symmetric() -> Self {
        Self::new(ChainSpec {
            p: vec![vec![0.75, 0.25], vec![0.25, 0.75]],
            v: vec![1.0, 2.0],
            gamma: 0.9,
            k: 2.0,
            c: vec![0, 1],
            embed: vec![vec![1.0, 0.0], vec![0.0, 2.0]],
        })
        .expect("shipped chain is valid")
    }

    pub fn to_spec(&self) -> ChainSpec {
        ChainSpec {
            p: self.p.clone(),
            v: self.v.clone(),
            gamma: self.gamma,
            k: self.k,
            c: (0..self.states()).filter(|&s| self.small_set[s]).collect(),
            embed: self.embed.iter().map(|e| e.coeffs().to_vec()).collect(),
        }
    }

    pub fn states(&self) -> usize {
        self.p.len()
    }

    pub fn embed_dim(&self) -> usize {
        self.embed[0].dim()
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.p
    }

    pub fn embedding(&self) -> &[HilbertVec] {
        &self.embed
    }

    pub fn lyapunov(&self) -> &[f64] {
        &self.v
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// True when some power `P^m`, `m ≤ (S−1)² + 1`, is entry-wise positive
    /// (Wielandt's bound), i.e. the chain is irreducible and aperiodic.
    pub fn is_primitive(&self) -> bool {
        let s = self.states();
        let wielandt = (s - 1) * (s - 1) + 1;
        let pattern: Vec<Vec<bool>> = self
            .p
            .iter()
            .map(|r| r.iter().map(|&x| x > 0.0).collect())
            .collect();
        // positivity is monotone in m for primitive matrices, so squaring past
        // the bound suffices
        let mut acc = pattern;
        let mut reached = 1usize;
        while reached < wielandt {
            acc = bool_square(&acc);
            reached *= 2;
        }
        acc.iter().all(|r| r.iter().all(|&b| b))
    }
}

fn bool_square(a: &[Vec<bool>]) -> Vec<Vec<bool>> {
    let n = a.len();
    (0..n)
        .map(|i| (0..n).map(|j| (0..n).any(|k| a[i][k] && a[k][j])).collect())
        .collect()
}

/// Stationary distribution by a dense linear solve with one balance equation
/// replaced by the normalization `Σπ = 1`.
pub fn stationary(chain: &FiniteChain) -> Result<Vec<f64>> {
    if !chain.is_primitive() {
        return Err(Error::NotErgodic);
    }
    let s = chain.states();
    // (Pᵀ − I) π = 0, last row replaced by 1ᵀπ = 1
    let mut a: Matrix = (0..s)
        .map(|i| {
            (0..s)
                .map(|j| chain.p[j][i] - if i == j { 1.0 } else { 0.0 })
                .collect()
        })
        .collect();
    a[s - 1] = vec![1.0; s];
    let mut b = vec![vec![0.0]; s];
    b[s - 1][0] = 1.0;
    let x = linalg::solve(&a, &b)?;
    let mut pi: Vec<f64> = x.into_iter().map(|r| r[0].max(0.0)).collect();
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|p| *p /= total);
    Ok(pi)
}

/// `‖πP − π‖₁`.
pub fn stationarity_residual(chain: &FiniteChain, pi: &[f64]) -> f64 {
    let s = chain.states();
    (0..s)
        .map(|t| ((0..s).map(|u| pi[u] * chain.p[u][t]).sum::<f64>() - pi[t]).abs())
        .sum()
}

/// `(P − Π)^n = Pⁿ − Π` for `n ≥ 1`, where `Π = 1πᵀ`.
///
/// Powering the deviation directly keeps relative accuracy in entries that
/// decay geometrically, where `Pⁿ − Π` would lose them to cancellation.
fn deviation_power(chain: &FiniteChain, pi: &[f64], n: u64) -> Matrix {
    let s = chain.states();
    let dev: Matrix = (0..s)
        .map(|i| (0..s).map(|j| chain.p[i][j] - pi[j]).collect())
        .collect();
    let mut result: Option<Matrix> = None;
    let mut base = dev;
    let mut e = n;
    while e > 0 {
        if e & 1 == 1 {
            result = Some(match result {
                None => base.clone(),
                Some(r) => linalg::matmul(&r, &base),
            });
        }
        e >>= 1;
        if e > 0 {
            base = linalg::matmul(&base, &base);
        }
    }
    result.expect("n >= 1")
}

/// Exact β-mixing coefficient at lag `n ≥ 1`.
pub fn beta_exact(chain: &FiniteChain, n: u64) -> Result<f64> {
    ensure(n >= 1, "beta lag n must be at least 1")?;
    let pi = stationary(chain)?;
    Ok(beta_with(chain, &pi, n))
}

pub(crate) fn beta_with(chain: &FiniteChain, pi: &[f64], n: u64) -> f64 {
    let dev = deviation_power(chain, pi, n);
    dev.iter()
        .zip(pi)
        .map(|(row, w)| w * 0.5 * row.iter().map(|x| x.abs()).sum::<f64>())
        .sum::<f64>()
        .clamp(0.0, 1.0)
}

/// `max_s [(PV)(s) − γV(s) − K·1_C(s)]`; the drift condition holds iff this is `≤ 0`.
pub fn drift_check(chain: &FiniteChain) -> f64 {
    (0..chain.states())
        .map(|s| {
            let pv: f64 = chain.p[s].iter().zip(&chain.v).map(|(p, v)| p * v).sum();
            let k = if chain.small_set[s] { chain.k } else { 0.0 };
            pv - chain.gamma * chain.v[s] - k
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

const CGAMMA_MARGIN: f64 = 1e-9;

/// Rate `C_γ` with `γe^{C_γ} + C_γ < 1`: the root of `γe^c + c = 1` on
/// `(0, −ln γ)` by bisection, less a margin of `1e-9` (or half the root when
/// the root itself is smaller than twice that).
pub fn solve_cgamma(gamma: f64) -> Result<f64> {
    ensure(
        gamma > 0.0 && gamma < 1.0,
        format!("gamma must lie in (0, 1) (got {gamma})"),
    )?;
    let f = |c: f64| gamma * c.exp() + c - 1.0;
    let (mut lo, mut hi) = (0.0f64, -gamma.ln());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let root = lo;
    Ok(root - CGAMMA_MARGIN.min(0.5 * root))
}

/// `π(V) e^{−C_γ n}`; requires the drift condition.
pub fn beta_bound(chain: &FiniteChain, n: f64) -> Result<f64> {
    let violation = drift_check(chain);
    ensure(
        violation <= 0.0,
        format!("drift condition violated by {violation}"),
    )?;
    let pi = stationary(chain)?;
    let pv: f64 = pi.iter().zip(&chain.v).map(|(p, v)| p * v).sum();
    Ok(pv * (-solve_cgamma(chain.gamma)? * n).exp())
}

/// One row of the β table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetaRow {
    pub n: u64,
    pub beta_exact: f64,
    pub beta_bound: f64,
}

impl BetaRow {
    /// False marks the constant regime, where the drift bound's implicit
    /// constant is not absorbed by `π(V)` at this lag.
    pub fn dominated(&self) -> bool {
        self.beta_exact <= self.beta_bound
    }
}

pub fn beta_table(chain: &FiniteChain, max_n: u64) -> Result<Vec<BetaRow>> {
    let pi = stationary(chain)?;
    (1..=max_n)
        .map(|n| {
            Ok(BetaRow {
                n,
                beta_exact: beta_with(chain, &pi, n),
                beta_bound: beta_bound(chain, n as f64)?,
            })
        })
        .collect()
}

/// Second-largest eigenvalue modulus of a reversible chain, from the
/// symmetrization `D^{½} P D^{−½}`.
pub fn slem(chain: &FiniteChain) -> Result<f64> {
    let pi = stationary(chain)?;
    let s = chain.states();
    for i in 0..s {
        for j in (i + 1)..s {
            let gap = (pi[i] * chain.p[i][j] - pi[j] * chain.p[j][i]).abs();
            ensure(gap <= 1e-12, "slem requires a reversible chain")?;
        }
    }
    let mut e = vec![0.0; s * s];
    for i in 0..s {
        for j in 0..s {
            e[i * s + j] = (pi[i] / pi[j]).sqrt() * chain.p[i][j];
        }
    }
    // exact symmetrization of rounding noise
    for i in 0..s {
        for j in (i + 1)..s {
            let avg = 0.5 * (e[i * s + j] + e[j * s + i]);
            e[i * s + j] = avg;
            e[j * s + i] = avg;
        }
    }
    let eig = SymOperator::from_entries_unchecked(s, e).eigh()?;
    Ok(eig.values[1..].iter().map(|l| l.abs()).fold(0.0, f64::max))
}

/// `Σ_s π(s) φ(s)`.
pub fn embedded_mean(chain: &FiniteChain, pi: &[f64]) -> HilbertVec {
    let mut mean = HilbertVec::zeros(chain.embed_dim());
    for (w, phi) in pi.iter().zip(&chain.embed) {
        mean += &phi.scale(*w);
    }
    mean
}

/// Exact `E<φ(X_0), φ(X_k)> − <Eφ(X_0), Eφ(X_k)>` under stationarity.
pub fn lag_inner_covariance(chain: &FiniteChain, k: u64) -> Result<f64> {
    let pi = stationary(chain)?;
    let mean = embedded_mean(chain, &pi);
    let centered: Vec<HilbertVec> = chain.embed.iter().map(|e| e - &mean).collect();
    if k == 0 {
        return Ok(pi.iter().zip(&centered).map(|(w, c)| w * c.norm_sq()).sum());
    }
    let dev = deviation_power(chain, &pi, k);
    let mut acc = 0.0;
    for s in 0..chain.states() {
        for t in 0..chain.states() {
            let ip: f64 = centered[s]
                .coeffs()
                .iter()
                .zip(centered[t].coeffs())
                .map(|(a, b)| a * b)
                .sum();
            acc += pi[s] * dev[s][t] * ip;
        }
    }
    Ok(acc)
}

/// Long-run covariance of the centered embedding,
/// `Γ = C₀ + M + Mᵀ` with `M = Φ̃ᵀ D_π [(I − P + Π)^{−1} − I] Φ̃`.
pub fn longrun_covariance(chain: &FiniteChain) -> Result<SymOperator> {
    let pi = stationary(chain)?;
    let s = chain.states();
    let dim = chain.embed_dim();
    let mean = embedded_mean(chain, &pi);
    let phi: Matrix = chain
        .embed
        .iter()
        .map(|e| (e - &mean).into_inner())
        .collect();

    let mut fund: Matrix = (0..s)
        .map(|i| {
            (0..s)
                .map(|j| if i == j { 1.0 } else { 0.0 } - chain.p[i][j] + pi[j])
                .collect()
        })
        .collect();
    fund = linalg::inverse(&fund)?;
    for (i, row) in fund.iter_mut().enumerate() {
        row[i] -= 1.0;
    }
    let z_phi = linalg::matmul(&fund, &phi);

    let mut gamma = vec![0.0; dim * dim];
    for a in 0..dim {
        for b in 0..dim {
            let mut c0 = 0.0;
            let mut m_ab = 0.0;
            let mut m_ba = 0.0;
            for st in 0..s {
                c0 += pi[st] * phi[st][a] * phi[st][b];
                m_ab += pi[st] * phi[st][a] * z_phi[st][b];
                m_ba += pi[st] * phi[st][b] * z_phi[st][a];
            }
            gamma[a * dim + b] = c0 + m_ab + m_ba;
        }
    }
    for a in 0..dim {
        for b in (a + 1)..dim {
            let avg = 0.5 * (gamma[a * dim + b] + gamma[b * dim + a]);
            gamma[a * dim + b] = avg;
            gamma[b * dim + a] = avg;
        }
    }
    Ok(SymOperator::from_entries_unchecked(dim, gamma))
}

fn sample_index(cdf_row: &[f64], u: f64) -> usize {
    cdf_row
        .iter()
        .position(|&c| u < c)
        .unwrap_or(cdf_row.len() - 1)
}

fn cumulative(xs: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    xs.iter()
        .map(|x| {
            acc += x;
            acc
        })
        .collect()
}

/// Stationary state path `X_0, …, X_{n−1}`; slot `t` of the stream drives step `t`.
pub fn simulate_states(
    chain: &FiniteChain,
    n: usize,
    seed: u64,
    stream: u64,
) -> Result<Vec<usize>> {
    let pi = stationary(chain)?;
    Ok(simulate_states_with(chain, &pi, n, seed, stream))
}

pub(crate) fn simulate_states_with(
    chain: &FiniteChain,
    pi: &[f64],
    n: usize,
    seed: u64,
    stream: u64,
) -> Vec<usize> {
    let pi_cdf = cumulative(pi);
    let row_cdf: Vec<Vec<f64>> = chain.p.iter().map(|r| cumulative(r)).collect();
    let mut rng = Stream::new(seed, stream);
    let mut out = Vec::with_capacity(n);
    if n == 0 {
        return out;
    }
    let mut state = sample_index(&pi_cdf, rng.slot().0);
    out.push(state);
    for _ in 1..n {
        state = sample_index(&row_cdf[state], rng.slot().0);
        out.push(state);
    }
    out
}

/// Centered embedded path `φ(X_t) − Σ_s π(s)φ(s)`.
pub fn simulate_embedded(
    chain: &FiniteChain,
    n: usize,
    seed: u64,
    stream: u64,
) -> Result<Vec<HilbertVec>> {
    let pi = stationary(chain)?;
    let mean = embedded_mean(chain, &pi);
    let centered: Vec<HilbertVec> = chain.embed.iter().map(|e| e - &mean).collect();
    Ok(simulate_states_with(chain, &pi, n, seed, stream)
        .into_iter()
        .map(|s| centered[s].clone())
        .collect())
}
