//! Flat key-value experiment configuration.
//!
//! A config is assembled from three layers, later layers winning: built-in
//! defaults, an optional JSON file, and explicit overrides (command-line
//! flags). Unknown keys are rejected so typos surface as errors instead of
//! silently falling back to defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::blocking::{build_plan, default_cstar, BlockPlan};
use crate::error::{ensure, Error, Result};
use crate::rng::NoiseLaw;

/// Small-block constant: a fixed value or derived from the mixing rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CStar {
    Auto,
    Value(f64),
}

impl Serialize for CStar {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            CStar::Auto => s.serialize_str("auto"),
            CStar::Value(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for CStar {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match Value::deserialize(d)? {
            Value::String(s) if s == "auto" => Ok(CStar::Auto),
            Value::Number(n) => n
                .as_f64()
                .map(CStar::Value)
                .ok_or_else(|| serde::de::Error::custom("cstar must be a number or \"auto\"")),
            other => Err(serde::de::Error::custom(format!(
                "cstar must be a number or \"auto\" (got {other})"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Registered path source: `far`, `markov`, `gaussian` or `iid`.
    pub model: String,
    /// Chain JSON for the `markov` source and the covariance-domination suite.
    pub chain: Option<String>,
    pub dim: usize,
    pub c: f64,
    pub delta: f64,
    pub noise: NoiseLaw,
    pub n: usize,
    pub replicas: usize,
    pub seed: u64,
    pub alpha1: f64,
    pub cstar: CStar,
    pub pprime: f64,
    pub p: f64,
    pub epsilon: f64,
    /// Worker threads; `None` uses every available core.
    pub workers: Option<usize>,
    pub output: String,
    pub suites: Vec<String>,
    /// Upper bound on `n · R · D` values generated by one batch.
    pub max_values: u64,

    pub m_lo: u32,
    pub m_hi: u32,
    pub clt_n: usize,
    pub clt_coord: usize,
    pub merl_samples: usize,
    pub merl_max_lag: u64,

    pub ks_alpha: f64,
    pub slope_margin: f64,
    pub trend_margin: f64,
    pub block_moment_factor: f64,
    pub se_band: f64,
}

pub const DEFAULT_SUITES: &[&str] = &[
    "rates",
    "gamma-defect",
    "block-eigs",
    "merl-domination",
    "moment-slope",
    "block-moments",
    "small-block",
    "clt",
    "independence-gap",
];

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            model: "far".into(),
            chain: None,
            dim: 32,
            c: 0.5,
            delta: 2.0,
            noise: NoiseLaw::Gaussian,
            n: 8192,
            replicas: 2000,
            seed: 20240601,
            alpha1: 0.5,
            cstar: CStar::Auto,
            pprime: 3.0,
            p: 4.0,
            epsilon: 0.05,
            workers: None,
            output: "out".into(),
            suites: DEFAULT_SUITES.iter().map(|s| s.to_string()).collect(),
            max_values: 10_000_000_000,
            m_lo: 6,
            m_hi: 12,
            clt_n: 1024,
            clt_coord: 1,
            merl_samples: 100_000,
            merl_max_lag: 20,
            ks_alpha: 0.01,
            slope_margin: 0.1,
            trend_margin: 0.05,
            block_moment_factor: 2.0,
            se_band: 3.0,
        }
    }
}

impl ExperimentConfig {
    /// Defaults, then `file` keys, then `overrides`; validated.
    pub fn from_layers(
        file: Option<Map<String, Value>>,
        overrides: Map<String, Value>,
    ) -> Result<Self> {
        let mut merged = match serde_json::to_value(ExperimentConfig::default())? {
            Value::Object(m) => m,
            _ => unreachable!("config serializes to an object"),
        };
        for layer in file.into_iter().chain(std::iter::once(overrides)) {
            merged.extend(layer);
        }
        let cfg: ExperimentConfig = serde_json::from_value(Value::Object(merged))
            .map_err(|e| Error::domain(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a flat JSON object from disk.
    pub fn read_file(path: &Path) -> Result<Map<String, Value>> {
        let text = std::fs::read_to_string(path)?;
        match serde_json::from_str(&text)
            .map_err(|e| Error::domain(format!("invalid config file: {e}")))?
        {
            Value::Object(m) => Ok(m),
            _ => Err(Error::domain("config file must hold a JSON object")),
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.dim >= 1, "dim must be at least 1")?;
        ensure(self.n >= 1, "n must be at least 1")?;
        ensure(self.replicas >= 1, "replicas must be at least 1")?;
        ensure(
            self.alpha1 > 0.0 && self.alpha1 < 1.0,
            format!("alpha1 must lie in (0, 1) (got {})", self.alpha1),
        )?;
        if let CStar::Value(v) = self.cstar {
            ensure(
                v > 0.0 && v.is_finite(),
                format!("cstar must be positive (got {v})"),
            )?;
        }
        ensure(self.p > 2.0, "p must exceed 2")?;
        ensure(
            self.pprime > 2.0 && self.pprime < self.p,
            format!("pprime must lie in (2, p) (got {})", self.pprime),
        )?;
        ensure(self.epsilon > 0.0, "epsilon must be positive")?;
        if let Some(w) = self.workers {
            ensure(w >= 1, "workers must be at least 1")?;
        }
        ensure(
            self.m_lo >= 1 && self.m_lo <= self.m_hi && self.m_hi <= 62,
            format!(
                "need 1 <= m_lo <= m_hi <= 62 (got {}..{})",
                self.m_lo, self.m_hi
            ),
        )?;
        ensure(self.clt_n >= 1, "clt_n must be at least 1")?;
        ensure(
            self.clt_coord >= 1 && self.clt_coord <= self.dim,
            format!(
                "clt_coord must lie in 1..={} (got {})",
                self.dim, self.clt_coord
            ),
        )?;
        ensure(
            self.ks_alpha > 0.0 && self.ks_alpha < 1.0,
            "ks_alpha must lie in (0, 1)",
        )?;
        ensure(self.merl_samples >= 2, "merl_samples must be at least 2")?;
        Ok(())
    }

    /// `C*`, resolving `auto` from the source's mixing rate.
    pub fn resolve_cstar(&self, mixing_rate: Option<f64>) -> Result<f64> {
        match self.cstar {
            CStar::Value(v) => Ok(v),
            CStar::Auto => {
                let beta = mixing_rate.ok_or_else(|| {
                    Error::domain(format!(
                        "cstar \"auto\" needs a model with a geometric mixing rate; \
                         set cstar explicitly for `{}`",
                        self.model
                    ))
                })?;
                default_cstar(self.alpha1, self.pprime, beta)
            }
        }
    }

    /// Blocking plans for `m_lo..=m_hi`.
    pub fn plans(&self, cstar: f64) -> Result<Vec<BlockPlan>> {
        (self.m_lo..=self.m_hi)
            .map(|m| build_plan(m, self.alpha1, cstar))
            .collect()
    }
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub command: String,
    pub config: ExperimentConfig,
    pub workers: usize,
    pub cstar: Option<f64>,
    pub plans: Vec<BlockPlan>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn obj(v: Value) -> Map<String, Value> {
        match v {
            Value::Object(m) => m,
            _ => panic!("not an object"),
        }
    }

    #[test]
    fn layers_override_in_order() {
        let file = obj(json!({"n": 100, "seed": 7}));
        let flags = obj(json!({"seed": 9}));
        let cfg = ExperimentConfig::from_layers(Some(file), flags).unwrap();
        assert_eq!(cfg.n, 100);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.replicas, ExperimentConfig::default().replicas);
    }

    #[test]
    fn cstar_parses_both_forms() {
        let a = ExperimentConfig::from_layers(None, obj(json!({"cstar": "auto"}))).unwrap();
        assert_eq!(a.cstar, CStar::Auto);
        let b = ExperimentConfig::from_layers(None, obj(json!({"cstar": 2.5}))).unwrap();
        assert_eq!(b.cstar, CStar::Value(2.5));
        assert!(ExperimentConfig::from_layers(None, obj(json!({"cstar": "big"}))).is_err());
        let text = serde_json::to_string(&a).unwrap();
        assert!(text.contains("\"cstar\":\"auto\""));
    }

    #[test]
    fn rejects_bad_values() {
        for bad in [
            json!({"typo_key": 1}),
            json!({"alpha1": 1.0}),
            json!({"p": 2.0}),
            json!({"pprime": 5.0}),
            json!({"m_lo": 9, "m_hi": 8}),
            json!({"clt_coord": 33}),
        ] {
            assert!(
                ExperimentConfig::from_layers(None, obj(bad.clone())).is_err(),
                "{bad}"
            );
        }
    }

    #[test]
    fn auto_cstar() {
        let cfg = ExperimentConfig::default();
        let c = cfg.resolve_cstar(Some(std::f64::consts::LN_2)).unwrap();
        assert!((c - 2.5 / std::f64::consts::LN_2).abs() < 1e-12);
        assert!(cfg.resolve_cstar(None).is_err());
        assert_eq!(cfg.plans(c).unwrap().len(), 7);
    }
}
