//! Counter-addressed random streams.
//!
//! Each `(seed, stream)` pair selects an independent ChaCha8 keystream. Within
//! a stream every draw lives at a fixed *slot* of two 64-bit words, so the
//! value used for `(time, coordinate)` depends only on its slot index and not
//! on how many draws other workers made. Sequential generation and random
//! access via [`Stream::seek`] therefore agree.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

/// 32-bit words per slot (two u64).
const WORDS_PER_SLOT: u128 = 4;

pub struct Stream {
    inner: ChaCha8Rng,
}

impl Stream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Stream { inner }
    }

    /// Positions the stream at the start of `slot`.
    pub fn seek(&mut self, slot: u64) {
        self.inner.set_word_pos(slot as u128 * WORDS_PER_SLOT);
    }

    /// Consumes exactly one slot and returns its two uniforms in `(0, 1)`.
    pub fn slot(&mut self) -> (f64, f64) {
        let a = self.inner.next_u64();
        let b = self.inner.next_u64();
        (open_unit(a), open_unit(b))
    }

    /// Draws one value of `law` from the next slot.
    pub fn draw(&mut self, law: NoiseLaw) -> f64 {
        let (u1, u2) = self.slot();
        law.transform(u1, u2)
    }
}

/// Maps the top 53 bits to the open interval `(0, 1)`.
fn open_unit(x: u64) -> f64 {
    ((x >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Centered unit-variance innovation laws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseLaw {
    Gaussian,
    Uniform,
    Laplace,
}

impl NoiseLaw {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "gaussian" | "normal" => Some(NoiseLaw::Gaussian),
            "uniform" => Some(NoiseLaw::Uniform),
            "laplace" => Some(NoiseLaw::Laplace),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            NoiseLaw::Gaussian => "gaussian",
            NoiseLaw::Uniform => "uniform",
            NoiseLaw::Laplace => "laplace",
        }
    }

    /// Supremum of the finite absolute moment orders.
    ///
    /// All three laws have moments of every order; the uniform law is bounded
    /// by `sqrt(3)`, the Laplace law has exponential tails.
    pub fn moment_order(self) -> f64 {
        f64::INFINITY
    }

    /// `E|ε|^q` for the unit-variance law.
    pub fn abs_moment(self, q: f64) -> f64 {
        use statrs::function::gamma::gamma;
        match self {
            // 2^{q/2} Γ((q+1)/2) / sqrt(π)
            NoiseLaw::Gaussian => {
                2f64.powf(q / 2.0) * gamma((q + 1.0) / 2.0) / std::f64::consts::PI.sqrt()
            }
            // uniform on [-√3, √3]
            NoiseLaw::Uniform => 3f64.powf(q / 2.0) / (q + 1.0),
            // scale b = 1/√2: b^q Γ(q+1)
            NoiseLaw::Laplace => std::f64::consts::FRAC_1_SQRT_2.powf(q) * gamma(q + 1.0),
        }
    }

    pub(crate) fn transform(self, u1: f64, u2: f64) -> f64 {
        match self {
            NoiseLaw::Gaussian => (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos(),
            NoiseLaw::Uniform => 3f64.sqrt() * (2.0 * u1 - 1.0),
            NoiseLaw::Laplace => {
                let v = u1 - 0.5;
                -std::f64::consts::FRAC_1_SQRT_2 * v.signum() * (1.0 - 2.0 * v.abs()).ln()
            }
        }
    }
}
