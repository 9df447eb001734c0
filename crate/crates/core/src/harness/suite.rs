//! Verification suites, registered by name, each producing a JSON verdict
//! and a CSV table.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::blocking::BlockPlan;
use crate::config::ExperimentConfig;
use crate::covariance::{block_cov_eigs, gamma_defect};
use crate::error::{Error, Result};
use crate::far::{self, FarModel};
use crate::rates::{self, RateInputs};

use super::batch::{simulate_batch, PathBatch, Runner};
use super::clt::{clt_check, clt_check_against};
use super::gap::{independence_gaps, merl_domination};
use super::moments::{block_moment_check, moment_slope, small_block_growth};
use super::source::{chain_from, PathSource};

/// Outcome document of one suite run.
///
/// `pass` is `None` for diagnostic suites and for suites that do not apply
/// to the configured model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub suite: String,
    pub params: Value,
    pub statistics: Value,
    pub pass: Option<bool>,
    pub hard: bool,
}

impl Verdict {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn failed(&self) -> bool {
        self.hard && self.pass == Some(false)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", self.header.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(f64::to_string).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

pub struct SuiteOutput {
    pub verdict: Verdict,
    pub table: Table,
}

/// Shared inputs for one `verify` run.
pub struct SuiteContext<'a> {
    pub config: &'a ExperimentConfig,
    pub source: &'a dyn PathSource,
    pub runner: &'a Runner,
    pub cstar: f64,
    pub plans: Vec<BlockPlan>,
}

impl<'a> SuiteContext<'a> {
    /// Resolves `C*` and builds the blocking plans for `m_lo..=m_hi`.
    pub fn new(
        config: &'a ExperimentConfig,
        source: &'a dyn PathSource,
        runner: &'a Runner,
    ) -> Result<Self> {
        let cstar = config.resolve_cstar(source.mixing_rate())?;
        let plans = config.plans(cstar)?;
        Ok(SuiteContext {
            config,
            source,
            runner,
            cstar,
            plans,
        })
    }

    pub fn batch(&self, n: usize) -> Result<PathBatch<'a>> {
        simulate_batch(
            self.source,
            n,
            self.config.replicas,
            self.config.seed,
            self.config.max_values,
        )
    }

    /// Plans whose last index fits in the horizon `n`.
    pub fn plans_within(&self, n: usize) -> Vec<BlockPlan> {
        self.plans
            .iter()
            .filter(|p| p.last() as usize <= n)
            .cloned()
            .collect()
    }

    fn base_params(&self) -> Value {
        json!({
            "model": self.source.name(),
            "model_params": self.source.params(),
            "seed": self.config.seed,
        })
    }

    fn far(&self) -> Option<&FarModel> {
        self.source.far_model()
    }
}

pub trait Suite: Send + Sync {
    fn name(&self) -> &'static str;

    /// Whether a failing verdict should fail the run.
    fn hard(&self) -> bool;

    fn run(&self, ctx: &SuiteContext) -> Result<SuiteOutput>;
}

fn merge(mut base: Value, extra: Value) -> Value {
    if let (Value::Object(b), Value::Object(e)) = (&mut base, extra) {
        b.extend(e);
    }
    base
}

fn output(
    suite: &dyn Suite,
    ctx: &SuiteContext,
    params: Value,
    statistics: Value,
    pass: Option<bool>,
    table: Table,
) -> SuiteOutput {
    SuiteOutput {
        verdict: Verdict {
            suite: suite.name().to_string(),
            params: merge(ctx.base_params(), params),
            statistics,
            pass: if suite.hard() { pass } else { None },
            hard: suite.hard(),
        },
        table,
    }
}

fn skipped(suite: &dyn Suite, ctx: &SuiteContext, reason: &str) -> SuiteOutput {
    SuiteOutput {
        verdict: Verdict {
            suite: suite.name().to_string(),
            params: ctx.base_params(),
            statistics: json!({ "skipped": reason }),
            pass: None,
            hard: false,
        },
        table: Table::default(),
    }
}

const FAR_ONLY: &str = "requires the far model";

pub struct RatesSuite;

impl Suite for RatesSuite {
    fn name(&self) -> &'static str {
        "rates"
    }

    fn hard(&self) -> bool {
        true
    }

    fn run(&self, ctx: &SuiteContext) -> Result<SuiteOutput> {
        let cfg = ctx.config;
        let mut inputs = RateInputs::new(cfg.p, cfg.delta);
        inputs.pprime = cfg.pprime;
        inputs.epsilon = Some(cfg.epsilon);
        inputs.d = cfg.dim.max(2) as f64;
        let report = rates::report(&inputs)?;
        let limit = cfg.p / (3.0 * cfg.p - 2.0);
        let mut table = Table::new(&["delta", "theta_bar", "limit"]);
        for delta in [1.5, 2.0, 3.0, 5.0, 10.0, 100.0, 1000.0] {
            table.push(vec![delta, rates::theta_bar(cfg.p, delta, delta)?, limit]);
        }
        let pass = report.theta_bar < 0.5 && report.theta_bar >= limit && report.alpha1.is_some();
        Ok(output(
            self,
            ctx,
            json!({ "inputs": inputs }),
            serde_json::to_value(&report)?,
            Some(pass),
            table,
        ))
    }
}

pub struct GammaDefectSuite;

/// Dyadic horizons `2^4..=2^14` for the covariance defect.
const DEFECT_LEVELS: std::ops::RangeInclusive<u32> = 4..=14;
const DEFECT_CAUCHY_FROM: u64 = 1 << 12;
const DEFECT_CAUCHY_TOL: f64 = 1e-6;

impl Suite for GammaDefectSuite {
    fn name(&self) -> &'static str {
        "gamma-defect"
    }

    fn hard(&self) -> bool {
        true
    }

    fn run(&self, ctx: &SuiteContext) -> Result<SuiteOutput> {
        let Some(model) = ctx.far() else {
            return Ok(skipped(self, ctx, FAR_ONLY));
        };
        let reports = DEFECT_LEVELS
            .map(|e| gamma_defect(model, 1u64 << e))
            .collect::<Result<Vec<_>>>()?;
        let mut header = vec!["n".to_string(), "defect".to_string()];
        header.extend((1..=model.dim()).map(|k| format!("r_{k}")));
        let mut table = Table {
            header,
            rows: Vec::new(),
        };
        for r in &reports {
            let mut row = vec![r.n as f64, r.defect];
            row.extend(&r.residuals);
            table.push(row);
        }
        let max_defect = reports.iter().map(|r| r.defect).fold(0.0, f64::max);
        let late_step = reports
            .windows(2)
            .filter(|w| w[0].n >= DEFECT_CAUCHY_FROM)
            .map(|w| (w[1].defect - w[0].defect).abs())
            .fold(0.0, f64::max);
        let pass = max_defect.is_finite() && late_step < DEFECT_CAUCHY_TOL;
        Ok(output(
            self,
            ctx,
            json!({ "levels": [*DEFECT_LEVELS.start(), *DEFECT_LEVELS.end()], "cauchy_tol": DEFECT_CAUCHY_TOL }),
            json!({ "max_defect": max_defect, "late_step": late_step }),
            Some(pass),
            table,
        ))
    }
}

pub struct BlockEigsSuite;

const BLOCK_EIGS_M1: std::ops::RangeInclusive<u64> = 2..=64;
const BLOCK_EIGS_MAX_D: usize = 8;

impl Suite for BlockEigsSuite {
    fn name(&self) -> &'static str {
        "block-eigs"
    }

    fn hard(&self) -> bool {
        true
    }

    fn run(&self, ctx: &SuiteContext) -> Result<SuiteOutput> {
        let Some(model) = ctx.far() else {
            return Ok(skipped(self, ctx, FAR_ONLY));
        };
        let g1 = far::longrun_eigenvalue(model.lambda()[0]);
        let max_d = model.dim().min(BLOCK_EIGS_MAX_D);
        let mut table = Table::new(&[
            "m1",
            "d",
            "lambda_min",
            "lower",
            "lambda_max",
            "upper",
            "ok",
        ]);
        let mut violations = 0u64;
        for m1 in BLOCK_EIGS_M1 {
            for d in 1..=max_d {
                let e = block_cov_eigs(model, m1, d)?;
                violations += u64::from(!e.bound_ok);
                table.push(vec![
                    m1 as f64,
                    d as f64,
                    e.lambda_min,
                    m1 as f64 * model.lambda()[d - 1],
                    e.lambda_max,
                    m1 as f64 * g1,
                    f64::from(u8::from(e.bound_ok)),
                ]);
            }
        }
        Ok(output(
            self,
            ctx,
            json!({ "m1": [*BLOCK_EIGS_M1.start(), *BLOCK_EIGS_M1.end()], "max_d": max_d }),
            json!({ "cells": table.rows.len(), "violations": violations }),
            Some(violations == 0),
            table,
        ))
    }
}

pub struct MerlDominationSuite;

impl Suite for MerlDominationSuite {
    fn name(&self) -> &'static str {
        "merl-domination"
    }

    fn hard(&self) -> bool {
        true
    }

    fn run(&self, ctx: &SuiteContext) -> Result<SuiteOutput> {
        let cfg = ctx.config;
        let chain = match ctx.source.chain() {
            Some(c) => c.clone(),
            None => chain_from(cfg)?,
        };
        let rows = merl_domination(
            &chain,
            ctx.runner,
            cfg.merl_max_lag,
            cfg.merl_samples,
            cfg.seed,
            cfg.se_band,
        )?;
        let mut table = Table::new(&["k", "beta", "empirical", "se", "bound", "dominated"]);
        for r in &rows {
            table.push(vec![
                r.k as f64,
                r.beta,
                r.empirical,
                r.se,
                r.bound,
                f64::from(u8::from(r.dominated)),
            ]);
        }
        let failures: Vec<u64> = rows.iter().filter(|r| !r.dominated).map(|r| r.k).collect();
        Ok(output(
            self,
            ctx,
            json!({
                "chain": chain.to_spec(),
                "max_lag": cfg.merl_max_lag,
                "samples": cfg.merl_samples,
                "se_band": cfg.se_band,
            }),
            json!({ "undominated_lags": failures }),
            Some(failures.is_empty()),
            table,
        ))
    }
}

pub struct MomentSlopeSuite;

impl Suite for MomentSlopeSuite {
    fn name(&self) -> &'static str {
        "moment-slope"
    }

    fn hard(&self) -> bool {
        true
    }

    fn run(&self, ctx: &SuiteContext) -> Result<SuiteOutput> {
        let cfg = ctx.config;
        let batch = ctx.batch(cfg.n)?;
        let res = moment_slope(&batch, ctx.runner, cfg.pprime)?;
        let upper = cfg.pprime / 2.0 + cfg.slope_margin;
        // a slope far below the Gaussian scale signals a degenerate path generator
        let lower = cfg.pprime / 2.0 - 3.0 * cfg.slope_margin;
        let mut table = Table::new(&["n", "mean_norm_pow"]);
        for r in &res.rows {
            table.push(vec![r.n as f64, r.mean_norm_pow]);
        }
        Ok(output(
            self,
            ctx,
            json!({ "n": cfg.n, "replicas": cfg.replicas, "pprime": cfg.pprime, "lower": lower, "upper": upper }),
            json!({ "slope": res.slope, "intercept": res.intercept }),
            Some(res.slope <= upper && res.slope >= lower),
            table,
        ))
    }
}

pub struct BlockMomentsSuite;

impl Suite for BlockMomentsSuite {
    fn name(&self) -> &'static str {
        "block-moments"
    }

    fn hard(&self) -> bool {
        true
    }

    fn run(&self, ctx: &SuiteContext) -> Result<SuiteOutput> {
        let cfg = ctx.config;
        let plans = ctx.plans_within(cfg.n);
        if plans.is_empty() {
            return Err(Error::domain(format!(
                "no blocking level in {}..={} fits n = {}",
                cfg.m_lo, cfg.m_hi, cfg.n
            )));
        }
        let batch = ctx.batch(cfg.n)?;
        let res = block_moment_check(
            &batch,
            ctx.runner,
            &plans,
            cfg.pprime,
            cfg.block_moment_factor,
        )?;
        let mut table = Table::new(&["m", "m1", "m2", "big", "small"]);
        for r in &res.rows {
            table.push(vec![r.m as f64, r.m1 as f64, r.m2 as f64, r.big, r.small]);
        }
        Ok(output(
            self,
            ctx,
            json!({
                "n": cfg.n, "replicas": cfg.replicas, "pprime": cfg.pprime,
                "cstar": ctx.cstar, "alpha1": cfg.alpha1, "factor": cfg.block_moment_factor,
            }),
            json!({ "levels": res.rows.len() }),
            Some(res.pass),
            table,
        ))
    }
}

pub struct SmallBlockSuite;

impl Suite for SmallBlockSuite {
    fn name(&self) -> &'static str {
        "small-block"
    }

    fn hard(&self) -> bool {
        true
    }

    fn run(&self, ctx: &SuiteContext) -> Result<SuiteOutput> {
        let cfg = ctx.config;
        let plans = ctx.plans_within(cfg.n);
        let batch = ctx.batch(cfg.n)?;
        let res = small_block_growth(&batch, ctx.runner, &plans, cfg.alpha1, cfg.trend_margin)?;
        let mut table = Table::new(&["m", "normalized_max"]);
        for r in &res.rows {
            table.push(vec![r.m as f64, r.normalized_max]);
        }
        Ok(output(
            self,
            ctx,
            json!({
                "n": cfg.n, "replicas": cfg.replicas, "cstar": ctx.cstar,
                "alpha1": cfg.alpha1, "margin": cfg.trend_margin,
            }),
            json!({ "slope": res.slope }),
            Some(res.pass),
            table,
        ))
    }
}

pub struct CltSuite;

impl Suite for CltSuite {
    fn name(&self) -> &'static str {
        "clt"
    }

    fn hard(&self) -> bool {
        true
    }

    fn run(&self, ctx: &SuiteContext) -> Result<SuiteOutput> {
        let cfg = ctx.config;
        let k = cfg.clt_coord;
        let main = clt_check(&ctx.batch(cfg.clt_n)?, ctx.runner, k, cfg.ks_alpha)?;
        // one-step controls: S_1 = X_1 has the marginal variance, not the long-run one
        let one = ctx.batch(1)?;
        let vs_longrun = clt_check(&one, ctx.runner, k, cfg.ks_alpha)?;
        let marginal = ctx.source.marginal_variance()[k - 1];
        let vs_marginal = clt_check_against(&one, ctx.runner, k, marginal, cfg.ks_alpha)?;
        let mut table = Table::new(&["n", "variance", "ks_stat", "p_value"]);
        for r in [&main, &vs_longrun, &vs_marginal] {
            table.push(vec![r.n as f64, r.variance, r.ks_stat, r.p_value]);
        }
        Ok(output(
            self,
            ctx,
            json!({ "n": cfg.clt_n, "replicas": cfg.replicas, "coord": k, "alpha": cfg.ks_alpha }),
            json!({
                "ks_stat": main.ks_stat,
                "p_value": main.p_value,
                "control_n1_longrun_p": vs_longrun.p_value,
                "control_n1_marginal_p": vs_marginal.p_value,
            }),
            Some(main.pass),
            table,
        ))
    }
}

pub struct IndependenceGapSuite;

impl Suite for IndependenceGapSuite {
    fn name(&self) -> &'static str {
        "independence-gap"
    }

    fn hard(&self) -> bool {
        false
    }

    fn run(&self, ctx: &SuiteContext) -> Result<SuiteOutput> {
        let cfg = ctx.config;
        let batch = ctx.batch(cfg.n)?;
        let mut table = Table::new(&[
            "m",
            "m2",
            "corr_abs",
            "se",
            "envelope",
            "surrogate_corr_abs",
        ]);
        let plans: Vec<BlockPlan> = ctx
            .plans_within(cfg.n)
            .into_iter()
            .filter(|p| p.kappa_full >= 3)
            .collect();
        for (gap, sur) in independence_gaps(&batch, ctx.runner, &plans)? {
            table.push(vec![
                gap.m as f64,
                gap.m2 as f64,
                gap.corr_abs,
                gap.se,
                gap.envelope.unwrap_or(f64::NAN),
                sur.corr_abs,
            ]);
        }
        let levels = table.rows.len();
        Ok(output(
            self,
            ctx,
            json!({ "n": cfg.n, "replicas": cfg.replicas, "cstar": ctx.cstar }),
            json!({ "levels": levels }),
            None,
            table,
        ))
    }
}

/// Name → suite table.
pub struct SuiteRegistry {
    suites: BTreeMap<&'static str, Box<dyn Suite>>,
}

impl SuiteRegistry {
    pub fn empty() -> Self {
        SuiteRegistry {
            suites: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, suite: Box<dyn Suite>) {
        self.suites.insert(suite.name(), suite);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.suites.keys().copied().collect()
    }

    pub fn get(&self, name: &str) -> Result<&dyn Suite> {
        self.suites
            .get(name)
            .map(|s| s.as_ref())
            .ok_or_else(|| Error::UnknownName {
                kind: "suite",
                name: name.to_string(),
                known: self.names().join(", "),
            })
    }
}

impl Default for SuiteRegistry {
    fn default() -> Self {
        let mut r = SuiteRegistry::empty();
        r.register(Box::new(RatesSuite));
        r.register(Box::new(GammaDefectSuite));
        r.register(Box::new(BlockEigsSuite));
        r.register(Box::new(MerlDominationSuite));
        r.register(Box::new(MomentSlopeSuite));
        r.register(Box::new(BlockMomentsSuite));
        r.register(Box::new(SmallBlockSuite));
        r.register(Box::new(CltSuite));
        r.register(Box::new(IndependenceGapSuite));
        r
    }
}
