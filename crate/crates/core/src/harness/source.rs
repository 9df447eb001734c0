//! Interchangeable path generators, registered by name.

use std::collections::BTreeMap;
use std::path::Path;

use serde_json::{json, Value};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::far::{self, make_far, FarModel, PathOptions};
use crate::hilbert::{HilbertVec, SymOperator};
use crate::markov::{self, FiniteChain};
use crate::rng::{NoiseLaw, Stream};

/// A stationary H-valued sequence that can be sampled replica by replica.
///
/// `path(n, seed, replica)` must be a pure function of its arguments: the
/// harness relies on this to regenerate paths on demand in any order.
pub trait PathSource: Send + Sync {
    fn name(&self) -> &'static str;

    fn dim(&self) -> usize;

    /// `X_1, …, X_n` for one replica.
    fn path(&self, n: usize, seed: u64, replica: u64) -> Result<Vec<HilbertVec>>;

    /// Highest finite absolute moment of `||X||` (`∞` for bounded or Gaussian laws).
    fn moment_order(&self) -> f64 {
        f64::INFINITY
    }

    /// Marginal variance of each coordinate.
    fn marginal_variance(&self) -> Vec<f64>;

    /// Long-run covariance `Γ`.
    fn longrun(&self) -> Result<SymOperator>;

    /// Geometric β-mixing rate `β` with `β(n) ≲ e^{−βn}`, if any.
    fn mixing_rate(&self) -> Option<f64>;

    fn params(&self) -> Value;

    fn far_model(&self) -> Option<&FarModel> {
        None
    }

    fn chain(&self) -> Option<&FiniteChain> {
        None
    }
}

/// Diagonal FAR(1) process.
pub struct FarSource {
    model: FarModel,
}

impl FarSource {
    pub fn new(model: FarModel) -> Self {
        FarSource { model }
    }
}

impl PathSource for FarSource {
    fn name(&self) -> &'static str {
        "far"
    }

    fn dim(&self) -> usize {
        self.model.dim()
    }

    fn path(&self, n: usize, seed: u64, replica: u64) -> Result<Vec<HilbertVec>> {
        Ok(far::simulate_path_with(
            &self.model,
            n,
            seed,
            replica,
            &PathOptions::default(),
        ))
    }

    fn marginal_variance(&self) -> Vec<f64> {
        far::stationary_var(&self.model)
    }

    fn longrun(&self) -> Result<SymOperator> {
        Ok(far::longrun_gamma(&self.model))
    }

    fn mixing_rate(&self) -> Option<f64> {
        Some(-self.model.lambda()[0].ln())
    }

    fn params(&self) -> Value {
        json!({
            "lambda": self.model.lambda(),
            "c": self.model.scale(),
            "delta": self.model.decay(),
            "noise": self.model.noise().name(),
        })
    }

    fn far_model(&self) -> Option<&FarModel> {
        Some(&self.model)
    }
}

/// Centered embedding `φ(X_t) − π(φ)` of a finite chain started from `π`.
pub struct MarkovSource {
    chain: FiniteChain,
    pi: Vec<f64>,
}

impl MarkovSource {
    pub fn new(chain: FiniteChain) -> Result<Self> {
        let pi = markov::stationary(&chain)?;
        Ok(MarkovSource { chain, pi })
    }
}

impl PathSource for MarkovSource {
    fn name(&self) -> &'static str {
        "markov"
    }

    fn dim(&self) -> usize {
        self.chain.embed_dim()
    }

    fn path(&self, n: usize, seed: u64, replica: u64) -> Result<Vec<HilbertVec>> {
        markov::simulate_embedded(&self.chain, n, seed, replica)
    }

    fn marginal_variance(&self) -> Vec<f64> {
        let mean = markov::embedded_mean(&self.chain, &self.pi);
        (0..self.dim())
            .map(|k| {
                self.chain
                    .embedding()
                    .iter()
                    .zip(&self.pi)
                    .map(|(e, w)| w * (e[k] - mean[k]).powi(2))
                    .sum()
            })
            .collect()
    }

    fn longrun(&self) -> Result<SymOperator> {
        markov::longrun_covariance(&self.chain)
    }

    fn mixing_rate(&self) -> Option<f64> {
        let s = markov::slem(&self.chain).ok()?;
        (s > 0.0 && s < 1.0).then(|| -s.ln())
    }

    fn params(&self) -> Value {
        serde_json::to_value(self.chain.to_spec()).unwrap_or(Value::Null)
    }

    fn chain(&self) -> Option<&FiniteChain> {
        Some(&self.chain)
    }
}

/// Independent increments `X_{t,k} = sqrt(v_k) ε_{t,k}`.
///
/// With Gaussian noise and `v = g(λ)` this is the comparator sequence
/// `η_t ~ N(0, Γ)` for the FAR model with the same eigenvalues.
pub struct IidSource {
    name: &'static str,
    variance: Vec<f64>,
    noise: NoiseLaw,
}

impl IidSource {
    pub fn new(variance: Vec<f64>, noise: NoiseLaw) -> Result<Self> {
        if variance.is_empty() || variance.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::domain(
                "coordinate variances must be finite and non-negative",
            ));
        }
        Ok(IidSource {
            name: "iid",
            variance,
            noise,
        })
    }

    /// `N(0, Γ)` increments for a FAR model.
    pub fn gaussian_comparator(model: &FarModel) -> Self {
        IidSource {
            name: "gaussian",
            variance: model
                .lambda()
                .iter()
                .map(|&l| far::longrun_eigenvalue(l))
                .collect(),
            noise: NoiseLaw::Gaussian,
        }
    }
}

impl PathSource for IidSource {
    fn name(&self) -> &'static str {
        self.name
    }

    fn dim(&self) -> usize {
        self.variance.len()
    }

    fn path(&self, n: usize, seed: u64, replica: u64) -> Result<Vec<HilbertVec>> {
        let sd: Vec<f64> = self.variance.iter().map(|v| v.sqrt()).collect();
        let mut rng = Stream::new(seed, replica);
        Ok((0..n)
            .map(|_| HilbertVec::from_vec(sd.iter().map(|s| s * rng.draw(self.noise)).collect()))
            .collect())
    }

    fn marginal_variance(&self) -> Vec<f64> {
        self.variance.clone()
    }

    fn longrun(&self) -> Result<SymOperator> {
        Ok(SymOperator::diagonal(&self.variance))
    }

    fn mixing_rate(&self) -> Option<f64> {
        None
    }

    fn params(&self) -> Value {
        json!({"variance": self.variance, "noise": self.noise.name()})
    }
}

/// Deterministic path `X_t = v` for every `t`; a degenerate non-mixing input.
pub struct ConstantSource {
    value: HilbertVec,
}

impl ConstantSource {
    pub fn new(value: HilbertVec) -> Self {
        ConstantSource { value }
    }
}

impl PathSource for ConstantSource {
    fn name(&self) -> &'static str {
        "constant"
    }

    fn dim(&self) -> usize {
        self.value.dim()
    }

    fn path(&self, n: usize, _seed: u64, _replica: u64) -> Result<Vec<HilbertVec>> {
        Ok(vec![self.value.clone(); n])
    }

    fn marginal_variance(&self) -> Vec<f64> {
        vec![0.0; self.dim()]
    }

    fn longrun(&self) -> Result<SymOperator> {
        Ok(SymOperator::zeros(self.dim()))
    }

    fn mixing_rate(&self) -> Option<f64> {
        None
    }

    fn params(&self) -> Value {
        json!({"value": self.value})
    }
}

pub type SourceCtor = fn(&ExperimentConfig) -> Result<Box<dyn PathSource>>;

/// Name → constructor table for path sources.
pub struct SourceRegistry {
    ctors: BTreeMap<&'static str, SourceCtor>,
}

fn far_from(cfg: &ExperimentConfig) -> Result<FarModel> {
    make_far(cfg.dim, cfg.c, cfg.delta, cfg.noise)
}

/// The configured chain file, or the shipped two-state chain.
pub fn chain_from(cfg: &ExperimentConfig) -> Result<FiniteChain> {
    match &cfg.chain {
        Some(path) => FiniteChain::from_json_file(Path::new(path)),
        None => Ok(FiniteChain::two_state_symmetric()),
    }
}

impl SourceRegistry {
    pub fn empty() -> Self {
        SourceRegistry {
            ctors: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, name: &'static str, ctor: SourceCtor) {
        self.ctors.insert(name, ctor);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.ctors.keys().copied().collect()
    }

    pub fn build(&self, name: &str, cfg: &ExperimentConfig) -> Result<Box<dyn PathSource>> {
        let ctor = self.ctors.get(name).ok_or_else(|| Error::UnknownName {
            kind: "model",
            name: name.to_string(),
            known: self.names().join(", "),
        })?;
        ctor(cfg)
    }
}

impl Default for SourceRegistry {
    fn default() -> Self {
        let mut r = SourceRegistry::empty();
        r.register("far", |cfg| Ok(Box::new(FarSource::new(far_from(cfg)?))));
        r.register("markov", |cfg| {
            Ok(Box::new(MarkovSource::new(chain_from(cfg)?)?))
        });
        r.register("gaussian", |cfg| {
            Ok(Box::new(IidSource::gaussian_comparator(&far_from(cfg)?)))
        });
        r.register("iid", |cfg| {
            let model = far_from(cfg)?;
            let var = model
                .lambda()
                .iter()
                .map(|&l| far::longrun_eigenvalue(l))
                .collect();
            Ok(Box::new(IidSource::new(var, cfg.noise)?))
        });
        r
    }
}
