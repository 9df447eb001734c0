//! `asip`: closed-form rates, path simulation and Monte Carlo verification.
//!
//! Exit codes: 0 success, 1 a hard suite failed, 2 domain or config error,
//! 3 I/O error.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use asip_core::config::{ExperimentConfig, Manifest};
use asip_core::harness::{
    simulate_batch, PathSource, Runner, SourceRegistry, SuiteContext, SuiteRegistry, Verdict,
};
use asip_core::markov::{beta_table, FiniteChain};
use asip_core::rates::{self, RateInputs};
use asip_core::Error;
use clap::{Args, Parser, Subcommand};
use serde_json::{Map, Value};

#[derive(Parser)]
#[command(
    name = "asip",
    version,
    about = "Gaussian approximation diagnostics for mixing Hilbert-space sequences"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the rate exponents for given moment and decay parameters as JSON.
    Rates(RatesArgs),
    /// Write one CSV path per replica.
    Simulate(ConfigArgs),
    /// Run verification suites and write JSON verdicts plus CSV tables.
    Verify(ConfigArgs),
    /// Tabulate exact and drift-bound beta-mixing coefficients of a finite chain.
    Mixing(MixingArgs),
    /// Render a directory of verdicts as Markdown.
    Report(ReportArgs),
}

#[derive(Args)]
struct RatesArgs {
    #[arg(long)]
    p: f64,
    /// Eigenvalue decay exponent; used for both decay parameters unless --delta2 is given.
    #[arg(long, default_value_t = 2.0)]
    delta: f64,
    #[arg(long)]
    delta2: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Defaults to (2 + p)/2.
    #[arg(long)]
    pprime: Option<f64>,
    /// Projection dimension for the A_d term.
    #[arg(long, default_value_t = 16.0)]
    d: f64,
}

#[derive(Args)]
struct ConfigArgs {
    /// Flat JSON config file; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    chain: Option<String>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    noise: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    replicas: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    alpha1: Option<f64>,
    /// A positive number or "auto".
    #[arg(long)]
    cstar: Option<String>,
    #[arg(long)]
    pprime: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Parallel replica workers; defaults to the number of cores.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    output: Option<String>,
    /// Suite to run (repeatable); defaults to the configured list.
    #[arg(long = "suite")]
    suites: Vec<String>,
    #[arg(long)]
    max_values: Option<u64>,
}

#[derive(Args)]
struct MixingArgs {
    /// Chain JSON; defaults to the built-in symmetric two-state chain.
    #[arg(long)]
    chain: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    max_n: u64,
    /// CSV destination; standard output when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory written by `verify`.
    dir: PathBuf,
    #[arg(long)]
    output: Option<PathBuf>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Rates(a) => cmd_rates(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Verify(a) => cmd_verify(&a),
        Command::Mixing(a) => cmd_mixing(&a),
        Command::Report(a) => cmd_report(&a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

type Result<T> = asip_core::Result<T>;

fn cmd_rates(a: &RatesArgs) -> Result<u8> {
    let mut inputs = RateInputs::new(a.p, a.delta);
    if let Some(d2) = a.delta2 {
        inputs.delta2 = d2;
    }
    if let Some(pp) = a.pprime {
        inputs.pprime = pp;
    }
    inputs.epsilon = a.epsilon;
    inputs.d = a.d;
    let report = rates::report(&inputs)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(0)
}

impl ConfigArgs {
    fn overrides(&self) -> Map<String, Value> {
        let mut m = Map::new();
        let mut put = |k: &str, v: Option<Value>| {
            if let Some(v) = v {
                m.insert(k.to_string(), v);
            }
        };
        put("model", self.model.clone().map(Value::from));
        put("chain", self.chain.clone().map(Value::from));
        put("dim", self.dim.map(Value::from));
        put("c", self.c.map(Value::from));
        put("delta", self.delta.map(Value::from));
        put("noise", self.noise.clone().map(Value::from));
        put("n", self.n.map(Value::from));
        put("replicas", self.replicas.map(Value::from));
        put("seed", self.seed.map(Value::from));
        put("alpha1", self.alpha1.map(Value::from));
        put(
            "cstar",
            self.cstar.as_ref().map(|s| match s.parse::<f64>() {
                Ok(x) => Value::from(x),
                Err(_) => Value::from(s.as_str()),
            }),
        );
        put("pprime", self.pprime.map(Value::from));
        put("p", self.p.map(Value::from));
        put("epsilon", self.epsilon.map(Value::from));
        put("workers", self.workers.map(Value::from));
        put("output", self.output.clone().map(Value::from));
        put(
            "suites",
            (!self.suites.is_empty()).then(|| Value::from(self.suites.clone())),
        );
        put("max_values", self.max_values.map(Value::from));
        m
    }

    fn resolve(&self) -> Result<ExperimentConfig> {
        let file = self.config.as_deref().map(read_config).transpose()?;
        ExperimentConfig::from_layers(file, self.overrides())
    }
}

/// A missing or malformed config file is a configuration error, not an I/O one.
/// A relative `chain` path in the file is taken relative to the file itself.
fn read_config(path: &Path) -> Result<Map<String, Value>> {
    let mut map = ExperimentConfig::read_file(path).map_err(|e| match e {
        Error::Io(io) => Error::Domain(format!("cannot read config {}: {io}", path.display())),
        other => other,
    })?;
    if let (Some(Value::String(chain)), Some(base)) = (map.get("chain"), path.parent()) {
        if Path::new(chain).is_relative() {
            let joined = base.join(chain).to_string_lossy().into_owned();
            map.insert("chain".into(), Value::from(joined));
        }
    }
    Ok(map)
}

fn write_manifest(
    dir: &Path,
    command: &str,
    cfg: &ExperimentConfig,
    source: &dyn PathSource,
    runner: &Runner,
) -> Result<()> {
    let cstar = cfg.resolve_cstar(source.mixing_rate()).ok();
    let manifest = Manifest {
        version: asip_core::VERSION.to_string(),
        command: command.to_string(),
        config: cfg.clone(),
        workers: runner.workers(),
        cstar,
        plans: match cstar {
            Some(c) => cfg.plans(c)?,
            None => Vec::new(),
        },
    };
    let mut f = BufWriter::new(File::create(dir.join("manifest.json"))?);
    serde_json::to_writer_pretty(&mut f, &manifest)?;
    writeln!(f)?;
    f.flush()?;
    Ok(())
}

fn cmd_simulate(a: &ConfigArgs) -> Result<u8> {
    let cfg = a.resolve()?;
    let source = SourceRegistry::default().build(&cfg.model, &cfg)?;
    let runner = Runner::new(cfg.workers)?;
    let batch = simulate_batch(
        source.as_ref(),
        cfg.n,
        cfg.replicas,
        cfg.seed,
        cfg.max_values,
    )?;
    let dir = Path::new(&cfg.output);
    fs::create_dir_all(dir)?;
    let files = batch.write_csv_dir(dir, &runner)?;
    write_manifest(dir, "simulate", &cfg, source.as_ref(), &runner)?;
    println!("wrote {} path files to {}", files.len(), dir.display());
    Ok(0)
}

/// `key=value` pairs for the scalar entries of a statistics object.
fn summarize(stats: &Value) -> String {
    let Value::Object(m) = stats else {
        return String::new();
    };
    m.iter()
        .filter_map(|(k, v)| match v {
            Value::Number(x) => Some(match x.as_f64() {
                Some(f) if x.is_f64() => format!("{k}={f:.6}"),
                _ => format!("{k}={x}"),
            }),
            Value::String(s) => Some(format!("{k}={s}")),
            Value::Bool(b) => Some(format!("{k}={b}")),
            Value::Array(xs) if xs.is_empty() => Some(format!("{k}=[]")),
            _ => None,
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn status(v: &Verdict) -> &'static str {
    match (v.pass, v.hard) {
        (Some(true), _) => "PASS",
        (Some(false), true) => "FAIL",
        (Some(false), false) => "WARN",
        (None, _) if v.statistics.get("skipped").is_some() => "SKIPPED",
        (None, _) => "DIAGNOSTIC",
    }
}

fn cmd_verify(a: &ConfigArgs) -> Result<u8> {
    let cfg = a.resolve()?;
    let source = SourceRegistry::default().build(&cfg.model, &cfg)?;
    let runner = Runner::new(cfg.workers)?;
    let suites = SuiteRegistry::default();
    let selected = cfg
        .suites
        .iter()
        .map(|name| suites.get(name))
        .collect::<Result<Vec<_>>>()?;
    let ctx = SuiteContext::new(&cfg, source.as_ref(), &runner)?;
    let dir = Path::new(&cfg.output);
    fs::create_dir_all(dir)?;
    let mut failed = false;
    for suite in selected {
        let out = suite.run(&ctx)?;
        fs::write(
            dir.join(format!("{}.json", suite.name())),
            out.verdict.to_json()?,
        )?;
        let mut csv = BufWriter::new(File::create(dir.join(format!("{}.csv", suite.name())))?);
        out.table.write_csv(&mut csv)?;
        csv.flush()?;
        failed |= out.verdict.failed();
        println!(
            "{:<18} {:<10} {}",
            suite.name(),
            status(&out.verdict),
            summarize(&out.verdict.statistics)
        );
    }
    write_manifest(dir, "verify", &cfg, source.as_ref(), &runner)?;
    Ok(if failed { 1 } else { 0 })
}

fn cmd_mixing(a: &MixingArgs) -> Result<u8> {
    let chain = match &a.chain {
        Some(p) => FiniteChain::from_json_file(p).map_err(|e| match e {
            Error::Io(io) => Error::Domain(format!("cannot read chain {}: {io}", p.display())),
            other => other,
        })?,
        None => FiniteChain::two_state_symmetric(),
    };
    let rows = beta_table(&chain, a.max_n)?;
    let mut out: Box<dyn Write> = match &a.output {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    writeln!(out, "n,beta_exact,beta_bound")?;
    for r in &rows {
        writeln!(out, "{},{},{}", r.n, r.beta_exact, r.beta_bound)?;
    }
    out.flush()?;
    let undominated: Vec<u64> = rows
        .iter()
        .filter(|r| !r.dominated())
        .map(|r| r.n)
        .collect();
    if undominated.is_empty() {
        eprintln!("beta_bound dominates beta_exact for every n <= {}", a.max_n);
    } else {
        eprintln!(
            "beta_bound is below beta_exact at n = {:?} (constant regime of the drift bound)",
            undominated
        );
    }
    Ok(0)
}

fn read_verdicts(dir: &Path) -> Result<Vec<Verdict>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<io::Result<_>>()?;
    paths.sort();
    let mut verdicts = Vec::new();
    for p in paths {
        if p.extension().is_some_and(|e| e == "json")
            && p.file_name().is_some_and(|n| n != "manifest.json")
        {
            let text = fs::read_to_string(&p)?;
            let v: Verdict = serde_json::from_str(&text)
                .map_err(|e| Error::Domain(format!("{} is not a verdict: {e}", p.display())))?;
            verdicts.push(v);
        }
    }
    Ok(verdicts)
}

fn render_markdown(verdicts: &[Verdict], manifest: Option<&Manifest>) -> String {
    let mut s = String::from("# Verification report\n\n");
    if let Some(m) = manifest {
        s.push_str(&format!(
            "Model `{}`, seed {}, n = {}, R = {}, version {}.\n\n",
            m.config.model, m.config.seed, m.config.n, m.config.replicas, m.version
        ));
    }
    s.push_str("| suite | kind | result | statistics |\n|---|---|---|---|\n");
    for v in verdicts {
        s.push_str(&format!(
            "| {} | {} | {} | {} |\n",
            v.suite,
            if v.hard { "hard" } else { "diagnostic" },
            status(v),
            summarize(&v.statistics).replace('|', "\\|")
        ));
    }
    let hard = verdicts.iter().filter(|v| v.hard).count();
    let failed = verdicts.iter().filter(|v| v.failed()).count();
    s.push_str(&format!(
        "\n{} of {} hard suites passed.\n",
        hard - failed,
        hard
    ));
    s
}

fn cmd_report(a: &ReportArgs) -> Result<u8> {
    let verdicts = read_verdicts(&a.dir)?;
    let manifest: Option<Manifest> = match fs::read_to_string(a.dir.join("manifest.json")) {
        Ok(text) => serde_json::from_str(&text).ok(),
        Err(_) => None,
    };
    let md = render_markdown(&verdicts, manifest.as_ref());
    match &a.output {
        Some(p) => fs::write(p, md)?,
        None => print!("{md}"),
    }
    Ok(if verdicts.iter().any(Verdict::failed) {
        1
    } else {
        0
    })
}
