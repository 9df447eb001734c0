//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any failure.
//!
//! Runs without the libtest harness so the lines always reach stdout.

use std::f64::consts::LN_2;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use asip_core::blocking::{build_plan, default_cstar, kappa, BlockKind};
use asip_core::config::ExperimentConfig;
use asip_core::covariance::{block_cov_eigs, cov_sn_exact, gamma_defect};
use asip_core::far::{self, make_far, FarModel};
use asip_core::harness::{
    clt_check, clt_check_against, merl_domination, moment_slope, simulate_batch,
    small_block_growth, FarSource, IidSource, MomentSlopeSuite, PathSource, Runner, Suite,
    SuiteContext,
};
use asip_core::markov::{beta_bound, beta_exact, FiniteChain};
use asip_core::rates::{
    corollary_exponent, delta_bar, delta_bar_branches, finite_dim_exponent, theta_bar, theta_pprime,
};
use asip_core::rng::NoiseLaw;

const SEED: u64 = 20240601;
const CAP: u64 = 10_000_000_000;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn shipped_far(noise: NoiseLaw) -> FarModel {
    make_far(8, 0.5, 2.0, noise).expect("shipped model")
}

fn rate_formulas() -> Outcome {
    let checks = [
        (
            "theta_bar(4,2,2)",
            theta_bar(4.0, 2.0, 2.0).unwrap(),
            26.0 / 53.0,
        ),
        (
            "theta_pprime(4,2,2)",
            theta_pprime(4.0, 2.0, 2.0).unwrap(),
            1.0 / 53.0,
        ),
        ("delta_bar(4,0.05)", delta_bar(4.0, 0.05).unwrap(), 10.6),
        (
            "corollary_exponent(4,0)",
            corollary_exponent(4.0, 0.0).unwrap(),
            0.4,
        ),
        (
            "finite_dim_exponent(3)",
            finite_dim_exponent(3.0).unwrap(),
            0.375,
        ),
    ];
    let worst = checks
        .iter()
        .map(|(_, got, want)| rel(*got, *want))
        .fold(0.0, f64::max);
    let (lo, hi) = delta_bar_branches(42.0, 0.05).unwrap();
    let cont = rel(lo, hi);
    outcome(
        worst <= 1e-12 && cont <= 1e-9,
        format!("max rel err {worst:.1e}, branch gap at p=42 {cont:.1e}"),
    )
}

fn limit_identity() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for p in [3.0, 4.0, 8.0, 50.0] {
        for delta in [1e3, 1e4, 1e6] {
            let gap = (theta_bar(p, delta, delta).unwrap() - p / (3.0 * p - 2.0)).abs();
            ok &= gap <= 10.0 / delta;
            worst = worst.max(gap * delta);
        }
    }
    outcome(ok, format!("max delta·gap = {worst:.3} (limit 10)"))
}

fn far_closed_forms() -> Outcome {
    let half = far::longrun_eigenvalue(0.5);
    let third = far::longrun_eigenvalue(1.0 / 3.0);
    let mut worst: f64 = 0.0;
    for i in 0..1000 {
        let l = (i as f64 + 0.5) / 1000.0;
        worst = worst.max(rel(far::longrun_eigenvalue(l), l / ((1.0 - l) * (1.0 - l))));
    }
    outcome(
        half == 2.0 && rel(third, 0.75) <= 1e-15 && worst <= 1e-12,
        format!("g(1/2) = {half}, g(1/3) = {third}, grid max rel err {worst:.1e}"),
    )
}

fn gamma_defect_bounded() -> Outcome {
    let model = shipped_far(NoiseLaw::Gaussian);
    // n·(g − Var(S_n)/n) increases to 2 Σ_j j γ_j = 2λ²/((1−λ²)(1−λ)²) per coordinate
    let ceiling = model
        .lambda()
        .iter()
        .map(|&l| (2.0 * l * l / ((1.0 - l * l) * (1.0 - l).powi(2))).powi(2))
        .sum::<f64>()
        .sqrt();
    let defects: Vec<(u64, f64)> = (4..=14)
        .map(|e| {
            let n = 1u64 << e;
            (n, gamma_defect(&model, n).unwrap().defect)
        })
        .collect();
    // cov(S_n) and nΓ are O(n), so their difference carries O(n·ε) rounding
    let bounded = defects
        .iter()
        .all(|&(_, d)| d.is_finite() && d <= ceiling + 1e-9);
    let late = defects
        .windows(2)
        .filter(|w| w[0].0 >= 1 << 12)
        .map(|w| (w[1].1 - w[0].1).abs())
        .fold(0.0, f64::max);
    outcome(
        bounded && late < 1e-6,
        format!(
            "defect(2^14) = {:.6}, ceiling {ceiling:.6}, late step {late:.1e}",
            defects.last().unwrap().1
        ),
    )
}

fn block_eigs_bounds() -> Outcome {
    let model = shipped_far(NoiseLaw::Gaussian);
    let lam = model.lambda();
    let g1 = lam[0] / ((1.0 - lam[0]) * (1.0 - lam[0]));
    let mut bad = 0;
    let mut oracle_bad = 0;
    for m1 in 2..=64u64 {
        // independent oracle: Var(Σ_{i≤m1} X_{i,k}) as a double sum of autocovariances
        let var: Vec<f64> = lam
            .iter()
            .map(|&l| {
                let mut s = 0.0;
                for i in 0..m1 {
                    for j in 0..m1 {
                        s += l.powi((i as i32 - j as i32).abs() + 1) / (1.0 - l * l);
                    }
                }
                s
            })
            .collect();
        for d in 1..=8 {
            let e = block_cov_eigs(&model, m1, d).unwrap();
            bad += usize::from(!e.bound_ok);
            let lo = var[..d].iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = var[..d].iter().cloned().fold(0.0, f64::max);
            oracle_bad += usize::from(
                rel(e.lambda_min, lo) > 1e-12
                    || rel(e.lambda_max, hi) > 1e-12
                    || e.lambda_min < m1 as f64 * lam[d - 1]
                    || e.lambda_max > m1 as f64 * g1,
            );
        }
    }
    outcome(
        bad == 0 && oracle_bad == 0,
        format!("{bad} flagged cells, {oracle_bad} oracle mismatches over 63×8"),
    )
}

fn blocking_exact() -> Outcome {
    let mut errors = Vec::new();
    for m in 1..=10u32 {
        for alpha1 in [0.3, 0.5, 0.7] {
            for cstar in [1.0, 2.5] {
                let plan = build_plan(m, alpha1, cstar).unwrap();
                let m1 = 1u64 << (alpha1 * m as f64).floor() as u32;
                let m2 = ((cstar * m as f64 * LN_2).floor() as u64).max(1);
                let mut next = (1u64 << m) + 1;
                for (kind, j, r) in plan.ordered_blocks() {
                    if r.is_empty() {
                        continue;
                    }
                    let full = match kind {
                        BlockKind::Big => m1,
                        BlockKind::Small => m2,
                    };
                    if r.start != next
                        || r.len() > full
                        || (j < plan.kappa_full as usize && r.len() != full)
                    {
                        errors.push(format!("m={m} a={alpha1} c={cstar} {kind:?} {j}"));
                    }
                    for i in r.indices() {
                        if plan.locate(i) != Some((kind, j)) {
                            errors.push(format!("index {i} misplaced at m={m}"));
                        }
                    }
                    next = r.end + 1;
                }
                if next != (1u64 << (m + 1)) + 1 {
                    errors.push(format!(
                        "m={m} a={alpha1} c={cstar} covers up to {}",
                        next - 1
                    ));
                }
            }
        }
    }
    let plan = build_plan(4, 0.5, 1.0).unwrap();
    let k32 = kappa(&plan, 32).unwrap();
    let k25 = kappa(&plan, 25).unwrap();
    outcome(
        errors.is_empty() && k32 == 2 && k25 == 1,
        format!(
            "{} tiling errors; kappa(32) = {k32}, kappa(25) = {k25}",
            errors.len()
        ),
    )
}

fn exact_mixing() -> Outcome {
    let chain = FiniteChain::two_state_symmetric();
    let worst = (1..=30u64)
        .map(|n| rel(beta_exact(&chain, n).unwrap(), 0.5f64.powi(n as i32 + 1)))
        .fold(0.0, f64::max);
    let dominated = (1..=50u64)
        .all(|n| beta_bound(&chain, n as f64).unwrap() >= beta_exact(&chain, n).unwrap());
    outcome(
        worst <= 1e-12 && dominated,
        format!("max rel err {worst:.1e}; bound dominates for n ≤ 50: {dominated}"),
    )
}

fn merl_dominates(runner: &Runner) -> Outcome {
    let chain = FiniteChain::two_state_symmetric();
    let rows = merl_domination(&chain, runner, 20, 100_000, SEED, 3.0).unwrap();
    let failed: Vec<u64> = rows.iter().filter(|r| !r.dominated).map(|r| r.k).collect();
    let excess = rows
        .iter()
        .map(|r| r.empirical.abs() - 3.0 * r.se - r.bound)
        .fold(f64::NEG_INFINITY, f64::max);
    outcome(
        failed.is_empty(),
        format!("undominated lags {failed:?}; max of |cov| − 3SE − bound = {excess:.2e}"),
    )
}

fn moment_growth(runner: &Runner) -> Outcome {
    let source = FarSource::new(shipped_far(NoiseLaw::Gaussian));
    let batch = simulate_batch(&source, 1 << 12, 2000, SEED, CAP).unwrap();
    let res = moment_slope(&batch, runner, 3.0).unwrap();
    outcome(
        (1.2..=1.6).contains(&res.slope),
        format!("slope {:.4} (target [1.2, 1.6])", res.slope),
    )
}

fn clt_target(runner: &Runner) -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for noise in [NoiseLaw::Gaussian, NoiseLaw::Uniform] {
        let source = FarSource::new(shipped_far(noise));
        let batch = simulate_batch(&source, 1024, 2000, SEED, CAP).unwrap();
        let r = clt_check(&batch, runner, 1, 0.01).unwrap();
        ok &= r.pass;
        parts.push(format!("{} p = {:.3}", noise.name(), r.p_value));
    }
    let model = shipped_far(NoiseLaw::Gaussian);
    let source = FarSource::new(model.clone());
    let one = simulate_batch(&source, 1, 2000, SEED, CAP).unwrap();
    let vs_g = clt_check(&one, runner, 1, 0.01).unwrap();
    let gamma0 = cov_sn_exact(&model, 1).unwrap().get(0, 0);
    let vs_gamma0 = clt_check_against(&one, runner, 1, gamma0, 0.01).unwrap();
    ok &= !vs_g.pass && vs_gamma0.pass;
    parts.push(format!(
        "n=1 vs g p = {:.1e}, vs gamma0 p = {:.3}",
        vs_g.p_value, vs_gamma0.p_value
    ));
    outcome(ok, parts.join("; "))
}

fn small_block_trend(runner: &Runner) -> Outcome {
    let model = shipped_far(NoiseLaw::Gaussian);
    let cstar = default_cstar(0.5, 3.0, -model.lambda()[0].ln()).unwrap();
    let plans: Vec<_> = (6..=12)
        .map(|m| build_plan(m, 0.5, cstar).unwrap())
        .collect();
    let far_source = FarSource::new(model.clone());
    let gauss = IidSource::gaussian_comparator(&model);
    let mut ok = true;
    let mut parts = Vec::new();
    for source in [&far_source as &dyn PathSource, &gauss] {
        let batch = simulate_batch(source, 1 << 13, 500, SEED, CAP).unwrap();
        let t = small_block_growth(&batch, runner, &plans, 0.5, 0.05).unwrap();
        ok &= t.pass;
        parts.push(format!("{} slope {:+.4}", source.name(), t.slope));
    }
    outcome(ok, parts.join(", "))
}

fn reproducible() -> Outcome {
    let cfg = ExperimentConfig::default();
    let source = FarSource::new(shipped_far(NoiseLaw::Gaussian));
    let run = |workers: usize| {
        let runner = Runner::new(Some(workers)).unwrap();
        let ctx = SuiteContext::new(&cfg, &source, &runner).unwrap();
        let out = MomentSlopeSuite.run(&ctx).unwrap();
        let mut csv = Vec::new();
        out.table.write_csv(&mut csv).unwrap();
        (out.verdict.to_json().unwrap(), csv)
    };
    let one = run(1);
    let four = run(4);
    let seven = run(7);
    outcome(
        one == four && one == seven,
        format!(
            "verdict bytes identical across 1/4/7 workers: {}",
            one == four && one == seven
        ),
    )
}

fn main() -> ExitCode {
    let runner = Runner::new(None).expect("worker pool");
    type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;
    let criteria: Vec<(&str, u64, Check)> = vec![
        ("rate formulas exact", 1, Box::new(rate_formulas)),
        ("limit identity", 1, Box::new(limit_identity)),
        ("FAR closed forms", 1, Box::new(far_closed_forms)),
        (
            "covariance defect bounded and Cauchy",
            5,
            Box::new(gamma_defect_bounded),
        ),
        (
            "block covariance eigenvalue bounds",
            5,
            Box::new(block_eigs_bounds),
        ),
        ("blocking exactness", 1, Box::new(blocking_exact)),
        ("exact mixing", 1, Box::new(exact_mixing)),
        (
            "quantile covariance domination",
            60,
            Box::new(|| merl_dominates(&runner)),
        ),
        (
            "moment growth slope",
            300,
            Box::new(|| moment_growth(&runner)),
        ),
        ("CLT target", 180, Box::new(|| clt_target(&runner))),
        (
            "small-block trend",
            300,
            Box::new(|| small_block_trend(&runner)),
        ),
        (
            "reproducibility across worker counts",
            300,
            Box::new(reproducible),
        ),
    ];
    let mut failures = 0;
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = check();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(*budget);
        let pass = out.pass && in_time;
        failures += usize::from(!pass);
        println!(
            "criterion {:>2} {}: {} ({}; {:.2}s of {}s)",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            name,
            out.detail,
            elapsed.as_secs_f64(),
            budget
        );
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
