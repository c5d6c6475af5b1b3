//! The `ustat-bee` command line.
//!
//! Every run produces one payload (JSON for scalar reports, CSV for tables)
//! written to `--out` or stdout, and a [`RunManifest`] written next to it as
//! `<out>.manifest.json` (or to stderr without `--out`). `replay` re-executes
//! a manifest and checks the payload hash.
//!
//! Exit codes: 0 success, 1 domain or usage error, 2 I/O error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bounds::{
    nonuniform_bound_tn, nonuniform_bound_tstat, standardized_nonuniform_bound, uniform_bound_tn,
    BoundForm, BoundParams, MomentSummary,
};
use crate::decomposition::{decompose_statistic, DecompositionTerms};
use crate::distributions::{fill_row, replicate_rng, LawSpec};
use crate::error::{Error, Result};
use crate::kernels::{center, decompose, kendall_kernel, BuiltinKernel, KernelConfig};
use crate::mc::{
    estimate_cdf, novak_experiment_with_workers, verify_inequality, InequalityKind, MCConfig,
    VerifyOptions,
};
use crate::sigma_hat::{
    a_factor, a_factor_closed, a_lower_bound, build_sigma_hat_kernel, check_representation,
    tail_constants, TailConstants, RepresentationCheck,
};
use crate::stein::{check_properties, SteinGrid};
use crate::ustat::studentize_auto;

#[derive(Debug, Parser)]
#[command(
    name = "ustat-bee",
    version,
    about = "Studentized U-statistics, Berry-Esseen bounds and Monte Carlo checks"
)]
pub struct Cli {
    /// JSON configuration for the subcommand.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Base seed; overrides the seed in a config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for Monte Carlo runs.
    #[arg(long, global = true, env = "USTAT_BEE_WORKERS")]
    pub workers: Option<usize>,
    /// Output path; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// U_n, the jackknife variance and T_n for one dataset.
    Stat(StatArgs),
    /// Hoeffding projections under a finite law and, given data, the terms of T_n.
    Decompose(DecomposeArgs),
    /// Constants of the variance-kernel representation, optionally checked on random data.
    SigmaKernel(SigmaKernelArgs),
    /// Evaluates a bound on an x grid.
    Bounds(BoundsArgs),
    /// Checks the Stein solution properties on their grids.
    SteinCheck(SteinArgs),
    /// Monte Carlo CDF of a statistic against Phi.
    Simulate,
    /// The two-atom counterexample to the classical nonuniform bound.
    Novak(NovakArgs),
    /// Empirical check of one inequality.
    Verify(VerifyArgs),
    /// Re-runs a manifest and compares output hashes.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
pub struct StatArgs {
    /// sum, sum:<m>, kendall, wilcoxon, variance or gini.
    #[arg(long, default_value = "sum")]
    pub kernel: String,
    /// Degree of the sum kernel.
    #[arg(long)]
    pub m: Option<usize>,
    /// Comma separated values; `x:y` pairs for kendall.
    #[arg(long)]
    pub data: Option<String>,
    /// File of values separated by commas or whitespace.
    #[arg(long)]
    pub data_file: Option<PathBuf>,
    /// Sampled subsets when exact enumeration is too large.
    #[arg(long, default_value_t = crate::mc::DEFAULT_INCOMPLETE_BUDGET)]
    pub budget: usize,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    #[arg(long, default_value = "sum")]
    pub kernel: String,
    #[arg(long)]
    pub m: Option<usize>,
    /// Law as JSON, e.g. `{"atoms": [[-1, 0.5], [1, 0.5]]}`.
    #[arg(long)]
    pub law: Option<String>,
    /// Data on the support of the law.
    #[arg(long)]
    pub data: Option<String>,
    /// Draw a dataset of this size from the law instead.
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SigmaKernelArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value = "variance")]
    pub kernel: String,
    #[arg(long)]
    pub m: Option<usize>,
    /// Check the representation and the sign of the kernel on random data.
    #[arg(long)]
    pub check: bool,
    #[arg(long)]
    pub law: Option<String>,
    #[arg(long, default_value_t = 200)]
    pub datasets: usize,
    #[arg(long, default_value_t = 10_000)]
    pub tuples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Theorem {
    /// Nonuniform bound for T_n (columns x, bound_full, bound_simple).
    Main,
    /// Nonuniform bound for Student's t.
    Tstat,
    /// Uniform bound for T_n.
    Uniform,
    /// Nonuniform bound for the standardized statistic.
    Standardized,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long, value_enum, default_value = "main")]
    pub theorem: Theorem,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    /// Kernel; `sum` uses degree `--m`.
    #[arg(long, default_value = "sum")]
    pub kernel: String,
    /// Law as JSON; Rademacher by default.
    #[arg(long)]
    pub law: Option<String>,
    /// Constants as inline JSON or a path to a JSON file.
    #[arg(long)]
    pub params: Option<String>,
    /// Moment summary as inline JSON, bypassing `--kernel` and `--law`.
    #[arg(long)]
    pub moments: Option<String>,
    /// `lo:hi:step` or a comma separated list.
    #[arg(long, default_value = "0:4:0.5")]
    pub grid: String,
}

#[derive(Debug, Args)]
pub struct SteinArgs {
    #[arg(long, default_value_t = 0.05)]
    pub step: f64,
    #[arg(long, default_value_t = 0.005)]
    pub fine_step: f64,
}

#[derive(Debug, Args)]
pub struct NovakArgs {
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    #[arg(long, default_value_t = 100_000)]
    pub reps: usize,
    /// Comma separated sample sizes; replaces `--n`.
    #[arg(long)]
    pub series: Option<String>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// lower_tail, bennett, subgaussian_sn, nonuniform_tn or tstat_bound.
    #[arg(long)]
    pub kind: Option<String>,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
}

/// Configuration file of `verify`: a Monte Carlo config plus the bound
/// constants and kind-specific options.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyConfig {
    #[serde(default)]
    pub kind: Option<InequalityKind>,
    #[serde(flatten)]
    pub mc: MCConfig,
    #[serde(default)]
    pub params: BoundParams,
    #[serde(default)]
    pub options: VerifyOptions,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputRecord {
    /// `None` for stdout.
    pub path: Option<String>,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub argv: Vec<String>,
    pub command: String,
    /// What the command reproduces.
    pub purpose: String,
    pub config_path: Option<String>,
    pub config_sha256: Option<String>,
    pub seed: Option<u64>,
    pub workers: usize,
    pub version: String,
    pub timestamp: String,
    pub outputs: Vec<OutputRecord>,
}

/// Path of the manifest written next to `out`.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

struct Execution {
    payload: Vec<u8>,
    seed: Option<u64>,
    purpose: &'static str,
}

/// Parses `argv` (program name first), runs the command and returns the
/// exit code. Errors are printed to stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let argv: Vec<String> = argv
        .iter()
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    match run_cli(&cli, &argv) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("ustat-bee: {e}");
            if e.is_io() {
                2
            } else {
                1
            }
        }
    }
}

fn run_cli(cli: &Cli, argv: &[String]) -> Result<()> {
    let config_bytes = match &cli.config {
        Some(p) => Some(fs::read(p)?),
        None => None,
    };
    let exec = execute(cli, config_bytes.as_deref())?;
    let sha = hex::encode(Sha256::digest(&exec.payload));
    match &cli.out {
        Some(path) => fs::write(path, &exec.payload)?,
        None => print!("{}", String::from_utf8_lossy(&exec.payload)),
    }
    let manifest = RunManifest {
        argv: argv.to_vec(),
        command: command_name(&cli.command).to_string(),
        purpose: exec.purpose.to_string(),
        config_path: cli.config.as_ref().map(|p| p.display().to_string()),
        config_sha256: config_bytes.map(|b| hex::encode(Sha256::digest(b))),
        seed: exec.seed,
        workers: workers(cli),
        version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp: chrono::Utc::now().to_rfc3339(),
        outputs: vec![OutputRecord {
            path: cli.out.as_ref().map(|p| p.display().to_string()),
            sha256: sha,
        }],
    };
    let json = serde_json::to_string_pretty(&manifest)?;
    match &cli.out {
        Some(path) => fs::write(manifest_path(path), json + "\n")?,
        None => eprintln!("{json}"),
    }
    Ok(())
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Stat(_) => "stat",
        Command::Decompose(_) => "decompose",
        Command::SigmaKernel(_) => "sigma-kernel",
        Command::Bounds(_) => "bounds",
        Command::SteinCheck(_) => "stein-check",
        Command::Simulate => "simulate",
        Command::Novak(_) => "novak",
        Command::Verify(_) => "verify",
        Command::Replay(_) => "replay",
    }
}

fn workers(cli: &Cli) -> usize {
    cli.workers.unwrap_or(1)
}

fn execute(cli: &Cli, config: Option<&[u8]>) -> Result<Execution> {
    if workers(cli) == 0 {
        return Err(Error::domain("--workers must be at least 1"));
    }
    match &cli.command {
        Command::Stat(a) => cmd_stat(cli, a, config),
        Command::Decompose(a) => cmd_decompose(cli, a),
        Command::SigmaKernel(a) => cmd_sigma_kernel(cli, a),
        Command::Bounds(a) => cmd_bounds(a),
        Command::SteinCheck(a) => cmd_stein(a),
        Command::Simulate => cmd_simulate(cli, config),
        Command::Novak(a) => cmd_novak(cli, a),
        Command::Verify(a) => cmd_verify(cli, a, config),
        Command::Replay(a) => cmd_replay(a),
    }
}

fn json_payload<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s.into_bytes())
}

fn require_config(config: Option<&[u8]>, what: &str) -> Result<String> {
    let bytes = config.ok_or_else(|| Error::domain(format!("{what} needs --config")))?;
    String::from_utf8(bytes.to_vec()).map_err(|_| Error::domain("config file is not UTF-8"))
}

fn kernel_config(name: &str, m: Option<usize>) -> KernelConfig {
    KernelConfig::Named {
        name: name.to_string(),
        m,
    }
}

/// Inline JSON from a flag; a parse failure is a usage error, not an I/O one.
fn inline_json<T: for<'de> Deserialize<'de>>(flag: &str, s: &str) -> Result<T> {
    serde_json::from_str(s).map_err(|e| Error::domain(format!("{flag}: invalid JSON: {e}")))
}

fn parse_law(law: Option<&str>) -> Result<LawSpec> {
    match law {
        Some(s) => inline_json("--law", s),
        None => Ok(LawSpec::Atoms(vec![(-1.0, 0.5), (1.0, 0.5)])),
    }
}

fn parse_numbers(s: &str) -> Result<Vec<f64>> {
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::domain(format!("cannot parse {t:?} as a number")))
        })
        .collect()
}

fn parse_pairs(s: &str) -> Result<Vec<[f64; 2]>> {
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            let (a, b) = t
                .split_once(':')
                .ok_or_else(|| Error::domain(format!("expected x:y, got {t:?}")))?;
            let parse = |v: &str| {
                v.parse::<f64>()
                    .map_err(|_| Error::domain(format!("cannot parse {v:?} as a number")))
            };
            Ok([parse(a)?, parse(b)?])
        })
        .collect()
}

/// Grid from `lo:hi:step` or a comma separated list.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let grid = if parts.len() == 3 {
        let v = parse_numbers(&parts.join(","))?;
        let (lo, hi, step) = (v[0], v[1], v[2]);
        if !(step > 0.0) || hi < lo {
            return Err(Error::domain(format!(
                "bad grid {s:?}: need lo <= hi and step > 0"
            )));
        }
        let count = ((hi - lo) / step + 1e-9).floor() as usize;
        (0..=count).map(|i| lo + i as f64 * step).collect()
    } else {
        parse_numbers(s)?
    };
    if grid.is_empty() {
        return Err(Error::domain("empty grid"));
    }
    Ok(grid)
}

/// Configuration file of `stat`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StatConfig {
    pub kernel: KernelConfig,
    #[serde(default)]
    pub data: Option<Vec<f64>>,
    #[serde(default)]
    pub pairs: Option<Vec<[f64; 2]>>,
    #[serde(default = "default_budget")]
    pub budget: usize,
}

fn default_budget() -> usize {
    crate::mc::DEFAULT_INCOMPLETE_BUDGET
}

fn is_kendall(k: &KernelConfig) -> bool {
    matches!(k, KernelConfig::Named { name, .. } if name.parse::<BuiltinKernel>().ok() == Some(BuiltinKernel::Kendall))
}

fn cmd_stat(cli: &Cli, a: &StatArgs, config: Option<&[u8]>) -> Result<Execution> {
    let cfg = match config {
        Some(_) => serde_json::from_str::<StatConfig>(&require_config(config, "stat")?)?,
        None => {
            let raw = match (&a.data, &a.data_file) {
                (Some(d), None) => d.clone(),
                (None, Some(p)) => fs::read_to_string(p)?,
                _ => {
                    return Err(Error::domain(
                        "stat needs exactly one of --data or --data-file",
                    ))
                }
            };
            let kernel = kernel_config(&a.kernel, a.m);
            let (data, pairs) = if is_kendall(&kernel) {
                (None, Some(parse_pairs(&raw)?))
            } else {
                (Some(parse_numbers(&raw)?), None)
            };
            StatConfig {
                kernel,
                data,
                pairs,
                budget: a.budget,
            }
        }
    };
    let seed = cli.seed.unwrap_or(0);
    let result = if is_kendall(&cfg.kernel) {
        let pairs = cfg
            .pairs
            .ok_or_else(|| Error::domain("kendall needs paired data"))?;
        studentize_auto(&kendall_kernel(), &pairs, cfg.budget, seed)?
    } else {
        let data = cfg.data.ok_or_else(|| Error::domain("stat needs data"))?;
        studentize_auto(&cfg.kernel.build()?, &data, cfg.budget, seed)?
    };
    Ok(Execution {
        payload: json_payload(&result)?,
        seed: result.incomplete.map(|i| i.seed),
        purpose: "Studentized U-statistic of one dataset",
    })
}

#[derive(Debug, Serialize)]
struct DecomposeReport {
    kernel: String,
    law: String,
    support: Vec<f64>,
    g: Vec<f64>,
    sigma_sq: f64,
    degeneracy_order: Option<usize>,
    /// `[||g_k||_2, ||g_k||_3]` for `k = 1..=m`.
    canonical_norms: Vec<[f64; 2]>,
    moments: MomentSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    terms: Option<DecompositionTerms>,
}

fn cmd_decompose(cli: &Cli, a: &DecomposeArgs) -> Result<Execution> {
    let kernel = kernel_config(&a.kernel, a.m).build()?;
    let law = parse_law(a.law.as_deref())?.build()?;
    let dist = law.as_discrete()?;
    let centered = center(&kernel, dist)?;
    let dec = decompose(&centered, dist)?;
    let mut seed = None;
    let data = match (&a.data, a.n) {
        (Some(d), None) => Some(parse_numbers(d)?),
        (None, Some(n)) => {
            let s = cli.seed.unwrap_or(0);
            seed = Some(s);
            let mut v = vec![0.0; n];
            fill_row(&law, &mut replicate_rng(s, 0), &mut v);
            Some(v)
        }
        (None, None) => None,
        _ => return Err(Error::domain("give at most one of --data and --n")),
    };
    let terms = match data {
        Some(d) => Some(decompose_statistic(&kernel, dist, &d)?),
        None => None,
    };
    let report = DecomposeReport {
        kernel: kernel.name().to_string(),
        law: law.label(),
        support: dec.support().to_vec(),
        g: dec.g_table().to_vec(),
        sigma_sq: dec.sigma_sq(),
        degeneracy_order: dec.degeneracy_order(),
        canonical_norms: dec.norm_table(),
        moments: MomentSummary::from_decomposition(&dec),
        terms,
    };
    Ok(Execution {
        payload: json_payload(&report)?,
        seed,
        purpose: "Hoeffding projections and the numerator/denominator terms of T_n",
    })
}

#[derive(Debug, Serialize)]
struct SigmaKernelReport {
    n: usize,
    m: usize,
    kernel: String,
    a: f64,
    a_closed: f64,
    a_lower_bound: f64,
    constants: TailConstants,
    #[serde(skip_serializing_if = "Option::is_none")]
    check: Option<RepresentationCheck>,
}

fn cmd_sigma_kernel(cli: &Cli, a: &SigmaKernelArgs) -> Result<Execution> {
    let kernel = kernel_config(&a.kernel, a.m).build()?;
    let m = kernel.degree();
    build_sigma_hat_kernel(&kernel, a.n)?;
    let seed = cli.seed.unwrap_or(0);
    let check = if a.check {
        let law = match &a.law {
            Some(s) => inline_json::<LawSpec>("--law", s)?,
            None => LawSpec::Normal { mean: 0.0, sd: 1.0 },
        }
        .build()?;
        Some(check_representation(
            &kernel, a.n, &law, a.datasets, a.tuples, seed,
        )?)
    } else {
        None
    };
    let report = SigmaKernelReport {
        n: a.n,
        m,
        kernel: kernel.name().to_string(),
        a: a_factor(a.n, m)?,
        a_closed: a_factor_closed(a.n, m)?,
        a_lower_bound: a_lower_bound(m)?,
        constants: tail_constants(m)?,
        check,
    };
    Ok(Execution {
        payload: json_payload(&report)?,
        seed: a.check.then_some(seed),
        purpose: "variance estimate as a U-statistic of degree 2m",
    })
}

fn parse_json_or_file<T: for<'de> Deserialize<'de>>(flag: &str, s: &str) -> Result<T> {
    if s.trim_start().starts_with('{') {
        inline_json(flag, s)
    } else {
        Ok(serde_json::from_str(&fs::read_to_string(s)?)?)
    }
}

fn csv_payload(header: &[&str], rows: &[Vec<f64>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r.iter().map(|v| v.to_string()))?;
    }
    w.into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
}

fn cmd_bounds(a: &BoundsArgs) -> Result<Execution> {
    let params: BoundParams = match &a.params {
        Some(p) => parse_json_or_file("--params", p)?,
        None => BoundParams::default(),
    };
    let grid = parse_grid(&a.grid)?;
    let mom = match &a.moments {
        Some(s) => parse_json_or_file::<MomentSummary>("--moments", s)?,
        None => {
            let law = parse_law(a.law.as_deref())?.build()?;
            let dist = law.as_discrete()?;
            if a.theorem == Theorem::Tstat {
                MomentSummary::from_distribution(dist)
            } else {
                let m = (a.kernel == "sum").then_some(a.m);
                let kernel = kernel_config(&a.kernel, m).build()?;
                if kernel.degree() != a.m {
                    return Err(Error::domain(format!(
                        "kernel {} has degree {}, but --m is {}",
                        kernel.name(),
                        kernel.degree(),
                        a.m
                    )));
                }
                MomentSummary::from_decomposition(&decompose(&center(&kernel, dist)?, dist)?)
            }
        }
    };
    let (n, m) = (a.n, a.m);
    let (header, rows): (Vec<&str>, Vec<Vec<f64>>) = match a.theorem {
        Theorem::Main => {
            let rows = grid
                .iter()
                .map(|&x| {
                    Ok(vec![
                        x,
                        nonuniform_bound_tn(x, n, m, &mom, &params, BoundForm::Full)?,
                        nonuniform_bound_tn(x, n, m, &mom, &params, BoundForm::Simple)?,
                    ])
                })
                .collect::<Result<_>>()?;
            (vec!["x", "bound_full", "bound_simple"], rows)
        }
        Theorem::Tstat => {
            let rows = grid
                .iter()
                .map(|&x| Ok(vec![x, nonuniform_bound_tstat(x, n, &mom, &params)?]))
                .collect::<Result<_>>()?;
            (vec!["x", "bound"], rows)
        }
        Theorem::Uniform => (
            vec!["bound"],
            vec![vec![uniform_bound_tn(n, m, &mom, &params)?]],
        ),
        Theorem::Standardized => {
            let rows = grid
                .iter()
                .map(|&x| {
                    Ok(vec![
                        x,
                        standardized_nonuniform_bound(x, n, m, &mom, &params)?,
                    ])
                })
                .collect::<Result<_>>()?;
            (vec!["x", "bound"], rows)
        }
    };
    Ok(Execution {
        payload: csv_payload(&header, &rows)?,
        seed: None,
        purpose: "bound evaluation on an x grid",
    })
}

fn cmd_stein(a: &SteinArgs) -> Result<Execution> {
    if !(a.step > 0.0 && a.fine_step > 0.0) {
        return Err(Error::domain("grid steps must be positive"));
    }
    let checks = check_properties(SteinGrid {
        step: a.step,
        fine_step: a.fine_step,
    });
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["property", "points", "violations", "worst_margin"])?;
    for c in &checks {
        w.write_record([
            c.property.clone(),
            c.points.to_string(),
            c.violations.to_string(),
            format!("{:e}", c.worst_margin),
        ])?;
    }
    let payload = w
        .into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    let failed: Vec<&str> = checks
        .iter()
        .filter(|c| !c.passed())
        .map(|c| c.property.as_str())
        .collect();
    if !failed.is_empty() {
        eprint!("{}", String::from_utf8_lossy(&payload));
        return Err(Error::domain(format!(
            "Stein properties violated: {}",
            failed.join("; ")
        )));
    }
    Ok(Execution {
        payload,
        seed: None,
        purpose: "properties of the Stein solution",
    })
}

fn cmd_simulate(cli: &Cli, config: Option<&[u8]>) -> Result<Execution> {
    let mut cfg: MCConfig = serde_json::from_str(&require_config(config, "simulate")?)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    let res = estimate_cdf(&cfg)?;
    let mut payload = Vec::new();
    res.write_csv(&mut payload)?;
    if res.metadata.incomplete {
        eprintln!(
            "ustat-bee: incomplete U-statistics used ({} subsets per replicate)",
            res.metadata.incomplete_budget
        );
    }
    Ok(Execution {
        payload,
        seed: Some(cfg.seed),
        purpose: "Monte Carlo CDF against Phi",
    })
}

fn cmd_novak(cli: &Cli, a: &NovakArgs) -> Result<Execution> {
    let seed = cli.seed.unwrap_or(0);
    let w = workers(cli);
    let payload = match &a.series {
        Some(s) => {
            let ns = parse_numbers(s)?;
            let reports = ns
                .iter()
                .map(|&n| {
                    if n < 0.0 || n.fract() != 0.0 {
                        return Err(Error::domain(format!(
                            "series entry {n} is not a sample size"
                        )));
                    }
                    novak_experiment_with_workers(n as usize, a.eps, a.reps, seed, w)
                })
                .collect::<Result<Vec<_>>>()?;
            json_payload(&reports)?
        }
        None => json_payload(&novak_experiment_with_workers(a.n, a.eps, a.reps, seed, w)?)?,
    };
    Ok(Execution {
        payload,
        seed: Some(seed),
        purpose: "counterexample gap of Student's t against the classical nonuniform form",
    })
}

fn cmd_verify(cli: &Cli, a: &VerifyArgs, config: Option<&[u8]>) -> Result<Execution> {
    let mut cfg: VerifyConfig = serde_json::from_str(&require_config(config, "verify")?)?;
    if let Some(s) = cli.seed {
        cfg.mc.seed = s;
    }
    if let Some(w) = cli.workers {
        cfg.mc.workers = w;
    }
    let kind = match (&a.kind, cfg.kind) {
        (Some(k), _) => k.parse()?,
        (None, Some(k)) => k,
        (None, None) => return Err(Error::domain("verify needs --kind or a kind in the config")),
    };
    let report = verify_inequality(kind, &cfg.mc, &cfg.params, &cfg.options)?;
    Ok(Execution {
        payload: json_payload(&report)?,
        seed: Some(cfg.mc.seed),
        purpose: "empirical check of an inequality",
    })
}

#[derive(Debug, Serialize)]
struct ReplayReport {
    manifest: String,
    identical: bool,
    expected_sha256: String,
    actual_sha256: String,
    config_unchanged: Option<bool>,
}

fn cmd_replay(a: &ReplayArgs) -> Result<Execution> {
    let manifest: RunManifest = serde_json::from_str(&fs::read_to_string(&a.manifest)?)?;
    let cli = Cli::try_parse_from(&manifest.argv)
        .map_err(|e| Error::domain(format!("manifest argv does not parse: {e}")))?;
    if matches!(cli.command, Command::Replay(_)) {
        return Err(Error::domain("cannot replay a replay"));
    }
    let config_bytes = match &cli.config {
        Some(p) => Some(fs::read(p)?),
        None => None,
    };
    let config_unchanged = match (&config_bytes, &manifest.config_sha256) {
        (Some(b), Some(h)) => Some(&hex::encode(Sha256::digest(b)) == h),
        _ => None,
    };
    let exec = execute(&cli, config_bytes.as_deref())?;
    let actual = hex::encode(Sha256::digest(&exec.payload));
    if let Some(path) = &cli.out {
        fs::write(path, &exec.payload)?;
    }
    let expected = manifest
        .outputs
        .first()
        .map(|o| o.sha256.clone())
        .ok_or_else(|| Error::domain("manifest lists no outputs"))?;
    let report = ReplayReport {
        manifest: a.manifest.display().to_string(),
        identical: expected == actual,
        expected_sha256: expected,
        actual_sha256: actual,
        config_unchanged,
    };
    let payload = json_payload(&report)?;
    if !report.identical {
        print!("{}", String::from_utf8_lossy(&payload));
        return Err(Error::domain("replayed output differs from the manifest"));
    }
    Ok(Execution {
        payload,
        seed: exec.seed,
        purpose: "reproduction of a previous run",
    })
}
