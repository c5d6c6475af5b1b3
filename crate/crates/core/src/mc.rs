//! Seeded, replicate-parallel Monte Carlo: CDF estimates of the Studentized
//! statistics against `Phi`, the two-atom counterexample to the classical
//! nonuniform bound, and empirical checks of every inequality evaluator.
//!
//! Replicate `r` always draws from `replicate_rng(seed, r)`. Replicates are
//! cut into fixed blocks, blocks run on a pool of `workers` threads and the
//! block results are merged in block order, so output does not depend on the
//! number of workers.

use std::io::Write;
use std::ops::Range;

use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{
    bennett_mgf_bound, exact_mean_cdf, exact_mean_law, lower_tail_bound, nonuniform_bound_tn,
    nonuniform_bound_tstat, subgaussian_sn_bound, BoundForm, BoundParams, KappaConvention,
    MomentSummary,
};
use crate::combinatorics::{binomial, check_guard, for_each_tuple, ENUMERATION_GUARD};
use crate::decomposition::{censor, CensorSpec};
use crate::distributions::{
    fill_row, novak_distribution, replicate_rng, DiscreteDistribution, Law, LawSpec, NovakParams,
};
use crate::error::{Error, Result};
use crate::kernels::{center, decompose, is_nondegenerate, KernelConfig, KernelSpec};
use crate::special::{normal_cdf, normal_sf};
use crate::ustat::{leave_one_out_incomplete, studentize_auto, t_statistic, u_statistic};

/// Replicates per block; the unit of work handed to a thread.
pub const BLOCK: usize = 1024;

/// Default number of sampled subsets when `C(n, m)` exceeds the enumeration guard.
pub const DEFAULT_INCOMPLETE_BUDGET: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Statistic {
    /// Studentized U-statistic `T_n`.
    #[serde(alias = "tn", alias = "T_n")]
    Tn,
    /// Self-normalized variant `T_n*`.
    #[serde(alias = "tn_star", alias = "T_n_star")]
    TnStar,
    /// Student's t statistic of the raw data.
    #[serde(alias = "t_student", alias = "tstudent")]
    TStudent,
    /// `S_n / V_n` of the raw data.
    #[serde(alias = "sn_vn", alias = "snvn")]
    SnVn,
    /// Standardized `sqrt(n) U_n / (m sigma)` with the exact `sigma`.
    #[serde(alias = "un", alias = "U_n")]
    Un,
}

impl Statistic {
    fn uses_kernel(self) -> bool {
        matches!(self, Statistic::Tn | Statistic::TnStar | Statistic::Un)
    }
}

fn default_kernel() -> KernelConfig {
    KernelConfig::Named {
        name: "sum".to_string(),
        m: Some(1),
    }
}

fn default_workers() -> usize {
    1
}

fn default_budget() -> usize {
    DEFAULT_INCOMPLETE_BUDGET
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MCConfig {
    pub statistic: Statistic,
    #[serde(default = "default_kernel")]
    pub kernel: KernelConfig,
    pub law: LawSpec,
    pub n: usize,
    pub replicates: usize,
    pub x_grid: Vec<f64>,
    pub seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    /// Subsets sampled per replicate when exact enumeration is too large.
    #[serde(default = "default_budget")]
    pub incomplete_budget: usize,
    /// Center the kernel under the law before Studentizing; needs a discrete law.
    #[serde(default = "default_true")]
    pub center: bool,
}

impl MCConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::domain("replicates must be at least 1"));
        }
        if self.workers == 0 {
            return Err(Error::domain("workers must be at least 1"));
        }
        if self.n < 2 {
            return Err(Error::domain(format!("need n >= 2, got {}", self.n)));
        }
        if self.x_grid.is_empty() {
            return Err(Error::domain("x_grid is empty"));
        }
        if self.x_grid.iter().any(|x| !x.is_finite()) {
            return Err(Error::domain("x_grid entries must be finite"));
        }
        if self.x_grid.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::domain("x_grid must be sorted"));
        }
        if self.incomplete_budget == 0 {
            return Err(Error::domain("incomplete_budget must be positive"));
        }
        Ok(())
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let cfg: MCConfig = serde_json::from_str(json)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfRow {
    pub x: f64,
    pub p_hat: f64,
    pub se: f64,
    pub phi: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MCMetadata {
    pub statistic: Statistic,
    pub kernel: String,
    pub law: String,
    pub n: usize,
    pub replicates: usize,
    pub seed: u64,
    pub workers: usize,
    pub centered: bool,
    /// True when at least one replicate used sampled subsets.
    pub incomplete: bool,
    pub incomplete_budget: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MCResult {
    pub rows: Vec<CdfRow>,
    pub n_inf_pos: u64,
    pub n_inf_neg: u64,
    /// Replicates whose Studentizer vanished.
    pub n_sigma_zero: u64,
    /// Of those, the ones with a zero numerator (statistic set to 0).
    pub n_zero_by_convention: u64,
    pub metadata: MCMetadata,
}

impl MCResult {
    /// CSV with columns `x, p_hat, se, phi, delta, n_inf_pos, n_inf_neg`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "p_hat", "se", "phi", "delta", "n_inf_pos", "n_inf_neg"])?;
        for r in &self.rows {
            w.write_record([
                r.x.to_string(),
                r.p_hat.to_string(),
                r.se.to_string(),
                r.phi.to_string(),
                r.delta.to_string(),
                self.n_inf_pos.to_string(),
                self.n_inf_neg.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn max_abs_delta(&self) -> f64 {
        self.rows.iter().map(|r| r.delta.abs()).fold(0.0, f64::max)
    }
}

/// Runs `f` on each block of replicate indices on a pool of `workers`
/// threads and returns the block results in block order.
pub fn run_blocks<T, F>(replicates: usize, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(Range<usize>) -> Result<T> + Sync + Send,
{
    let blocks: Vec<Range<usize>> = (0..replicates)
        .step_by(BLOCK)
        .map(|s| s..(s + BLOCK).min(replicates))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::domain(format!("cannot start worker pool: {e}")))?;
    pool.install(|| blocks.into_par_iter().map(&f).collect())
}

struct Outcome {
    value: f64,
    sigma_zero: bool,
    incomplete: bool,
}

enum Evaluator {
    Studentized {
        kernel: KernelSpec,
        budget: usize,
        star: bool,
    },
    TStudent,
    SnVn,
    Standardized {
        kernel: KernelSpec,
        sigma: f64,
        budget: usize,
    },
}

impl Evaluator {
    fn eval(&self, data: &[f64], rng: &mut impl RngCore) -> Result<Outcome> {
        match self {
            Evaluator::Studentized {
                kernel,
                budget,
                star,
            } => {
                let r = studentize_auto(kernel, data, *budget, rng.next_u64())?;
                let (value, zero) = if *star {
                    (r.t_n_star, r.sigma_star_sq() == 0.0)
                } else {
                    (r.t_n, r.sigma_is_zero())
                };
                Ok(Outcome {
                    value,
                    sigma_zero: zero,
                    incomplete: r.incomplete.is_some(),
                })
            }
            Evaluator::TStudent => Ok(Outcome {
                value: t_statistic(data)?,
                sigma_zero: data.iter().all(|&v| v == data[0]),
                incomplete: false,
            }),
            Evaluator::SnVn => {
                let s: f64 = data.iter().sum();
                let v = data.iter().map(|x| x * x).sum::<f64>().sqrt();
                Ok(Outcome {
                    value: crate::ustat::ratio_with_convention(s, v, v == 0.0),
                    sigma_zero: v == 0.0,
                    incomplete: false,
                })
            }
            Evaluator::Standardized {
                kernel,
                sigma,
                budget,
            } => {
                let (n, m) = (data.len(), kernel.degree());
                let exact = binomial(n as u64, m as u64) <= ENUMERATION_GUARD;
                let u = if exact {
                    u_statistic(kernel, data)?
                } else {
                    leave_one_out_incomplete(kernel, data, *budget, rng.next_u64())?.0
                };
                Ok(Outcome {
                    value: (n as f64).sqrt() * u / (m as f64 * sigma),
                    sigma_zero: false,
                    incomplete: !exact,
                })
            }
        }
    }
}

struct Prepared {
    law: Law,
    evaluator: Evaluator,
    kernel_name: String,
    centered: bool,
}

fn prepare(cfg: &MCConfig) -> Result<Prepared> {
    cfg.validate()?;
    let law = cfg.law.build()?;
    let raw = cfg.kernel.build()?;
    let kernel_name = raw.name().to_string();
    let m = raw.degree();
    if cfg.statistic.uses_kernel() && cfg.n <= m {
        return Err(Error::domain(format!(
            "need n > m, got n = {}, m = {m}",
            cfg.n
        )));
    }
    let (kernel, centered) = match (&law, cfg.statistic.uses_kernel() && cfg.center) {
        (Law::Discrete(d), true) => (center(&raw, d)?, true),
        _ => (raw, false),
    };
    let evaluator = match cfg.statistic {
        Statistic::Tn | Statistic::TnStar => {
            if let (Law::Discrete(d), true) = (&law, centered) {
                let dec = decompose(&kernel, d)?;
                if !is_nondegenerate(&dec) {
                    return Err(Error::domain(format!(
                        "kernel {kernel_name} is degenerate under {} (sigma^2 = {:e})",
                        d.label(),
                        dec.sigma_sq()
                    )));
                }
            }
            Evaluator::Studentized {
                kernel,
                budget: cfg.incomplete_budget,
                star: cfg.statistic == Statistic::TnStar,
            }
        }
        Statistic::TStudent => Evaluator::TStudent,
        Statistic::SnVn => Evaluator::SnVn,
        Statistic::Un => {
            let d = law.as_discrete()?;
            let dec = decompose(&kernel, d)?;
            if !is_nondegenerate(&dec) {
                return Err(Error::domain(format!(
                    "kernel {kernel_name} is degenerate under {}",
                    d.label()
                )));
            }
            Evaluator::Standardized {
                kernel,
                sigma: dec.sigma_sq().sqrt(),
                budget: cfg.incomplete_budget,
            }
        }
    };
    Ok(Prepared {
        law,
        evaluator,
        kernel_name,
        centered,
    })
}

#[derive(Default)]
struct Tally {
    /// `buckets[j]` counts finite values in `(x_{j-1}, x_j]`; the last bucket
    /// holds values above the grid.
    buckets: Vec<u64>,
    inf_pos: u64,
    inf_neg: u64,
    sigma_zero: u64,
    zero_by_convention: u64,
    incomplete: bool,
}

impl Tally {
    fn merge(&mut self, other: Tally) {
        if self.buckets.is_empty() {
            self.buckets = vec![0; other.buckets.len()];
        }
        for (a, b) in self.buckets.iter_mut().zip(other.buckets) {
            *a += b;
        }
        self.inf_pos += other.inf_pos;
        self.inf_neg += other.inf_neg;
        self.sigma_zero += other.sigma_zero;
        self.zero_by_convention += other.zero_by_convention;
        self.incomplete |= other.incomplete;
    }
}

/// Estimates `P(stat <= x)` on `cfg.x_grid`.
///
/// `+inf` values exceed every grid point and `-inf` values lie below all of
/// them. Errors when the kernel is degenerate under a discrete law.
pub fn estimate_cdf(cfg: &MCConfig) -> Result<MCResult> {
    let prep = prepare(cfg)?;
    let grid = &cfg.x_grid;
    let n = cfg.n;
    let blocks = run_blocks(cfg.replicates, cfg.workers, |range| {
        let mut t = Tally {
            buckets: vec![0; grid.len() + 1],
            ..Tally::default()
        };
        let mut data = vec![0.0; n];
        for r in range {
            let mut rng = replicate_rng(cfg.seed, r as u64);
            fill_row(&prep.law, &mut rng, &mut data);
            let o = prep.evaluator.eval(&data, &mut rng)?;
            t.incomplete |= o.incomplete;
            if o.sigma_zero {
                t.sigma_zero += 1;
            }
            if o.value.is_nan() {
                return Err(Error::domain(format!("replicate {r} produced NaN")));
            }
            if o.value == f64::INFINITY {
                t.inf_pos += 1;
            } else if o.value == f64::NEG_INFINITY {
                t.inf_neg += 1;
            } else {
                if o.sigma_zero {
                    t.zero_by_convention += 1;
                }
                t.buckets[grid.partition_point(|&x| x < o.value)] += 1;
            }
        }
        Ok(t)
    })?;
    let mut total = Tally::default();
    for b in blocks {
        total.merge(b);
    }
    let reps = cfg.replicates as f64;
    let mut below = total.inf_neg;
    let rows = grid
        .iter()
        .zip(&total.buckets)
        .map(|(&x, &c)| {
            below += c;
            let p = below as f64 / reps;
            let phi = normal_cdf(x);
            CdfRow {
                x,
                p_hat: p,
                se: binomial_se(p, cfg.replicates),
                phi,
                delta: p - phi,
            }
        })
        .collect();
    Ok(MCResult {
        rows,
        n_inf_pos: total.inf_pos,
        n_inf_neg: total.inf_neg,
        n_sigma_zero: total.sigma_zero,
        n_zero_by_convention: total.zero_by_convention,
        metadata: MCMetadata {
            statistic: cfg.statistic,
            kernel: prep.kernel_name,
            law: prep.law.label(),
            n,
            replicates: cfg.replicates,
            seed: cfg.seed,
            workers: cfg.workers,
            centered: prep.centered,
            incomplete: total.incomplete,
            incomplete_budget: cfg.incomplete_budget,
        },
    })
}

/// `sqrt(p (1-p) / replicates)`.
pub fn binomial_se(p: f64, replicates: usize) -> f64 {
    (p * (1.0 - p) / replicates as f64).sqrt()
}

/// `sup_x |Delta(x)| (1+|x|^3) sqrt(n) sigma^3 / E|h|^3` over the grid: the
/// smallest `C` for which the simple nonuniform form (without the
/// exponential term) covers the point estimates.
pub fn empirical_rate_constant(res: &MCResult, mom: &MomentSummary) -> f64 {
    let scale = (res.metadata.n as f64).sqrt() * mom.sigma.powi(3) / mom.E_abs_h3;
    res.rows
        .iter()
        .map(|r| r.delta.abs() * (1.0 + r.x.abs().powi(3)) * scale)
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NovakReport {
    pub n: usize,
    pub p: f64,
    pub epsilon: f64,
    pub x_n: f64,
    pub replicates: usize,
    pub seed: u64,
    /// `P(T_student > x_n)`, estimated.
    pub p_hat_exceed: f64,
    pub phi_bar: f64,
    pub gap_estimate: f64,
    pub se: f64,
    /// `(1 - 1/n)^n`, the probability that every draw hits the large atom.
    pub closed_form_event_prob: f64,
    /// Replicates with `T_student = +inf`.
    pub n_inf_pos: u64,
    pub e_abs_x3: f64,
    /// `E|X|^3 / (sqrt(n) sigma^3) * d(x_n)` with `d(x) = 1/(1+x^3)` and `C = 1`.
    pub usual_form_bound: f64,
}

/// Two-atom law with `p = 1/n` and `x_n = sqrt(n) - epsilon`; single-threaded.
pub fn novak_experiment(
    n: usize,
    epsilon: f64,
    replicates: usize,
    seed: u64,
) -> Result<NovakReport> {
    novak_experiment_with_workers(n, epsilon, replicates, seed, 1)
}

pub fn novak_experiment_with_workers(
    n: usize,
    epsilon: f64,
    replicates: usize,
    seed: u64,
    workers: usize,
) -> Result<NovakReport> {
    if n < 3 {
        return Err(Error::domain(format!(
            "the counterexample needs n >= 3, got {n}"
        )));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::domain(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let p = 1.0 / n as f64;
    let x_n = (n as f64).sqrt() - epsilon;
    let cfg = MCConfig {
        statistic: Statistic::TStudent,
        kernel: default_kernel(),
        law: LawSpec::Novak(NovakParams { p }),
        n,
        replicates,
        x_grid: vec![x_n],
        seed,
        workers,
        incomplete_budget: DEFAULT_INCOMPLETE_BUDGET,
        center: false,
    };
    let res = estimate_cdf(&cfg)?;
    let exceed = 1.0 - res.rows[0].p_hat;
    let phi_bar = normal_sf(x_n);
    let dist = novak_distribution(NovakParams { p })?;
    let e3 = dist.moment(|x| x.abs().powi(3));
    let sigma = dist.variance().sqrt();
    Ok(NovakReport {
        n,
        p,
        epsilon,
        x_n,
        replicates,
        seed,
        p_hat_exceed: exceed,
        phi_bar,
        gap_estimate: exceed - phi_bar,
        se: res.rows[0].se,
        closed_form_event_prob: (1.0 - p).powi(n as i32),
        n_inf_pos: res.n_inf_pos,
        e_abs_x3: e3,
        usual_form_bound: e3 / ((n as f64).sqrt() * sigma.powi(3)) / (1.0 + x_n.powi(3)),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InequalityKind {
    LowerTail,
    Bennett,
    SubgaussianSn,
    #[serde(alias = "nonuniform_Tn")]
    NonuniformTn,
    TstatBound,
}

impl std::str::FromStr for InequalityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::domain(format!("unknown inequality kind {s:?}")))
    }
}

/// Kind-specific knobs of [`verify_inequality`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    /// Moment order of the lower-tail bound, in `(1, 2]`.
    #[serde(default = "two")]
    pub p: f64,
    #[serde(default)]
    pub convention: KappaConvention,
    #[serde(default = "simple")]
    pub form: BoundForm,
}

fn two() -> f64 {
    2.0
}

fn simple() -> BoundForm {
    BoundForm::Simple
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            p: 2.0,
            convention: KappaConvention::Strict,
            form: BoundForm::Simple,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyRow {
    /// `x` for tail probabilities, `t` for the Bennett bound.
    pub point: f64,
    pub empirical: f64,
    pub se: f64,
    /// Exact value when an oracle exists.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<f64>,
    pub bound: f64,
    pub violated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedConstant {
    pub value: f64,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub kind: InequalityKind,
    pub n: usize,
    pub replicates: usize,
    pub seed: u64,
    pub law: String,
    pub rows: Vec<VerifyRow>,
    pub violations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fitted_c: Option<FittedConstant>,
    pub params_label: String,
}

fn row(point: f64, empirical: f64, se: f64, exact: Option<f64>, bound: f64) -> VerifyRow {
    VerifyRow {
        point,
        empirical,
        se,
        exact,
        bound,
        violated: empirical - 3.0 * se > bound,
    }
}

/// Checks one inequality on `cfg.x_grid` (the `t` grid for Bennett).
///
/// A point is a violation only when `empirical - 3 SE > bound`. For
/// `nonuniform_tn` the report also carries the smallest `C` making the simple
/// form hold at the point estimates with `c1` fixed.
pub fn verify_inequality(
    kind: InequalityKind,
    cfg: &MCConfig,
    params: &BoundParams,
    opts: &VerifyOptions,
) -> Result<VerifyReport> {
    cfg.validate()?;
    params.validate()?;
    let law = cfg.law.build()?;
    let mut fitted_c = None;
    let rows = match kind {
        InequalityKind::LowerTail => verify_lower_tail(cfg, &law, opts)?,
        InequalityKind::Bennett => verify_bennett(cfg, &law)?,
        InequalityKind::SubgaussianSn => verify_subgaussian(cfg, &law)?,
        InequalityKind::NonuniformTn => {
            if cfg.statistic != Statistic::Tn {
                return Err(Error::domain("nonuniform_tn needs statistic Tn"));
            }
            let d = law.as_discrete()?;
            let dec = decompose(&center(&cfg.kernel.build()?, d)?, d)?;
            let mom = MomentSummary::from_decomposition(&dec);
            let m = dec.degree();
            let res = estimate_cdf(cfg)?;
            let mut rows = Vec::with_capacity(res.rows.len());
            for r in &res.rows {
                let bound = nonuniform_bound_tn(r.x, cfg.n, m, &mom, params, opts.form)?;
                rows.push(row(r.x, r.delta.abs(), r.se, None, bound));
            }
            let nf = cfg.n as f64;
            let head = nonuniform_bound_tn(0.0, cfg.n, m, &mom, params, BoundForm::Simple)?
                - params.C * mom.E_abs_h3 / (nf.sqrt() * mom.sigma.powi(3));
            let scale = nf.sqrt() * mom.sigma.powi(3) / mom.E_abs_h3;
            let c = res
                .rows
                .iter()
                .map(|r| (r.delta.abs() - head).max(0.0) * (1.0 + r.x.abs().powi(3)) * scale)
                .fold(0.0, f64::max);
            fitted_c = Some(FittedConstant {
                value: c,
                label: "fitted, empirical".to_string(),
            });
            rows
        }
        InequalityKind::TstatBound => {
            if cfg.statistic != Statistic::TStudent {
                return Err(Error::domain("tstat_bound needs statistic TStudent"));
            }
            let d = law.as_discrete()?;
            if d.mean().abs() > 1e-9 {
                return Err(Error::domain("tstat_bound needs a mean-zero law"));
            }
            let mom = MomentSummary::from_distribution(d);
            let res = estimate_cdf(cfg)?;
            let mut rows = Vec::with_capacity(res.rows.len());
            for r in &res.rows {
                let bound = nonuniform_bound_tstat(r.x, cfg.n, &mom, params)?;
                rows.push(row(r.x, r.delta.abs(), r.se, None, bound));
            }
            rows
        }
    };
    Ok(VerifyReport {
        kind,
        n: cfg.n,
        replicates: cfg.replicates,
        seed: cfg.seed,
        law: law.label(),
        violations: rows.iter().filter(|r| r.violated).count(),
        rows,
        fitted_c,
        params_label: params.label.clone(),
    })
}

fn verify_lower_tail(cfg: &MCConfig, law: &Law, opts: &VerifyOptions) -> Result<Vec<VerifyRow>> {
    let d = law.as_discrete()?;
    let kernel = cfg.kernel.build()?;
    let (n, m) = (cfg.n, kernel.degree());
    if n < m {
        return Err(Error::domain(format!("need n >= m, got n = {n}, m = {m}")));
    }
    let (eh, ehp, min_h) = kernel_power_means(&kernel, d, opts.p)?;
    if min_h < 0.0 {
        return Err(Error::domain(
            "lower_tail needs a kernel that is non-negative on the support",
        ));
    }
    let exact_law = if m == 1 {
        let mapped: Vec<(f64, f64)> = d
            .atoms()
            .iter()
            .map(|&(v, p)| (kernel.evaluate(&[v]), p))
            .collect();
        let image = DiscreteDistribution::new(mapped, "image")?;
        exact_mean_law(&image, n).ok()
    } else {
        None
    };
    let grid = &cfg.x_grid;
    let counts = run_blocks(cfg.replicates, cfg.workers, |range| {
        let mut c = vec![0u64; grid.len()];
        let mut data = vec![0.0; n];
        for r in range {
            let mut rng = replicate_rng(cfg.seed, r as u64);
            fill_row(law, &mut rng, &mut data);
            let u = if binomial(n as u64, m as u64) <= ENUMERATION_GUARD {
                u_statistic(&kernel, &data)?
            } else {
                leave_one_out_incomplete(&kernel, &data, cfg.incomplete_budget, rng.gen())?.0
            };
            for (j, &x) in grid.iter().enumerate() {
                if u <= x {
                    c[j] += 1;
                }
            }
        }
        Ok(c)
    })?;
    let mut total = vec![0u64; grid.len()];
    for c in counts {
        for (t, v) in total.iter_mut().zip(c) {
            *t += v;
        }
    }
    let mut rows = Vec::with_capacity(grid.len());
    for (&x, &c) in grid.iter().zip(&total) {
        let bound = lower_tail_bound(eh, ehp, opts.p, n, m, x, opts.convention)?.value;
        let p = c as f64 / cfg.replicates as f64;
        let exact = exact_law.as_ref().map(|l| exact_mean_cdf(l, x));
        rows.push(row(x, p, binomial_se(p, cfg.replicates), exact, bound));
    }
    Ok(rows)
}

/// `(E h, E h^p, min h)` over the product support.
fn kernel_power_means(
    kernel: &KernelSpec,
    d: &DiscreteDistribution,
    p: f64,
) -> Result<(f64, f64, f64)> {
    let m = kernel.degree();
    check_guard("kernel moments", (d.len() as u128).saturating_pow(m as u32))?;
    let atoms = d.atoms();
    let (mut eh, mut ehp, mut min_h) = (0.0, 0.0, f64::INFINITY);
    let mut args = vec![0.0; m];
    for_each_tuple(d.len(), m, |t| {
        let mut w = 1.0;
        for (a, &i) in args.iter_mut().zip(t) {
            *a = atoms[i].0;
            w *= atoms[i].1;
        }
        let h = kernel.evaluate(&args);
        eh += w * h;
        ehp += w * h.max(0.0).powf(p);
        min_h = min_h.min(h);
    });
    Ok((eh, ehp, min_h))
}

fn require_identity_kernel(cfg: &MCConfig, kind: &str) -> Result<()> {
    let k = cfg.kernel.build()?;
    if k.degree() != 1 || k.evaluate(&[2.5]) != 2.5 {
        return Err(Error::domain(format!(
            "{kind} works on the raw data; use the sum kernel with m = 1"
        )));
    }
    Ok(())
}

fn verify_bennett(cfg: &MCConfig, law: &Law) -> Result<Vec<VerifyRow>> {
    require_identity_kernel(cfg, "bennett")?;
    let d = law.as_discrete()?;
    if d.mean().abs() > 1e-9 || (d.variance() - 1.0).abs() > 1e-9 {
        return Err(Error::domain(
            "bennett needs a law with mean 0 and variance 1",
        ));
    }
    let ts = &cfg.x_grid;
    let bounds = ts
        .iter()
        .map(|&t| bennett_mgf_bound(t))
        .collect::<Result<Vec<_>>>()?;
    let n = cfg.n;
    let spec = CensorSpec::symmetric(1.0)?;
    let root_n = (n as f64).sqrt();
    let sums = run_blocks(cfg.replicates, cfg.workers, |range| {
        let mut s = vec![(0.0f64, 0.0f64); ts.len()];
        let mut data = vec![0.0; n];
        for r in range {
            let mut rng = replicate_rng(cfg.seed, r as u64);
            fill_row(law, &mut rng, &mut data);
            let wb: f64 = data.iter().map(|&x| censor(x / root_n, spec)).sum();
            for (acc, &t) in s.iter_mut().zip(ts) {
                let e = (t * wb).exp();
                acc.0 += e;
                acc.1 += e * e;
            }
        }
        Ok(s)
    })?;
    let mut total = vec![(0.0f64, 0.0f64); ts.len()];
    for s in sums {
        for (t, v) in total.iter_mut().zip(s) {
            t.0 += v.0;
            t.1 += v.1;
        }
    }
    let reps = cfg.replicates as f64;
    Ok(ts
        .iter()
        .zip(total)
        .zip(bounds)
        .map(|((&t, (s1, s2)), b)| {
            let mean = s1 / reps;
            let var = (s2 / reps - mean * mean).max(0.0) * reps / (reps - 1.0).max(1.0);
            row(t, mean, (var / reps).sqrt(), None, b)
        })
        .collect())
}

/// `E X^2` of any supported law.
pub fn second_moment(law: &Law) -> f64 {
    match *law {
        Law::Discrete(ref d) => d.moment(|x| x * x),
        Law::Uniform { low, high } => (low * low + low * high + high * high) / 3.0,
        Law::Normal { mean, sd } => mean * mean + sd * sd,
    }
}

fn verify_subgaussian(cfg: &MCConfig, law: &Law) -> Result<Vec<VerifyRow>> {
    require_identity_kernel(cfg, "subgaussian_sn")?;
    let xs = &cfg.x_grid;
    let bounds = xs
        .iter()
        .map(|&x| subgaussian_sn_bound(x))
        .collect::<Result<Vec<_>>>()?;
    let n = cfg.n;
    let lead = 4.0 * (n as f64).sqrt() * second_moment(law).sqrt();
    let counts = run_blocks(cfg.replicates, cfg.workers, |range| {
        let mut c = vec![0u64; xs.len()];
        let mut data = vec![0.0; n];
        for r in range {
            let mut rng = replicate_rng(cfg.seed, r as u64);
            fill_row(law, &mut rng, &mut data);
            let s: f64 = data.iter().sum();
            let v = data.iter().map(|x| x * x).sum::<f64>().sqrt();
            for (cj, &x) in c.iter_mut().zip(xs) {
                if s > x * (lead + v) {
                    *cj += 1;
                }
            }
        }
        Ok(c)
    })?;
    let mut total = vec![0u64; xs.len()];
    for c in counts {
        for (t, v) in total.iter_mut().zip(c) {
            *t += v;
        }
    }
    Ok(xs
        .iter()
        .zip(total)
        .zip(bounds)
        .map(|((&x, c), b)| {
            let p = c as f64 / cfg.replicates as f64;
            row(x, p, binomial_se(p, cfg.replicates), None, b)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub value: f64,
    pub se: f64,
}

/// Estimates `sigma^2 = E[(h(Z1,Z2) - mu)(h(Z1,Z3) - mu)]` for a degree-two
/// kernel on i.i.d. points from `draw`, where `mu = E h` is known.
pub fn projection_variance_mc<P, D>(
    kernel: &KernelSpec<P>,
    draw: D,
    mu: f64,
    replicates: usize,
    seed: u64,
    workers: usize,
) -> Result<MeanEstimate>
where
    P: Clone,
    D: Fn(&mut rand_chacha::ChaCha8Rng) -> P + Sync + Send,
{
    if kernel.degree() != 2 {
        return Err(Error::domain(
            "projection variance needs a degree-two kernel",
        ));
    }
    if replicates < 2 {
        return Err(Error::domain("need at least two replicates"));
    }
    let sums = run_blocks(replicates, workers, |range| {
        let (mut s1, mut s2) = (0.0, 0.0);
        for r in range {
            let mut rng = replicate_rng(seed, r as u64);
            let (z1, z2, z3) = (draw(&mut rng), draw(&mut rng), draw(&mut rng));
            let a = kernel.evaluate(&[z1.clone(), z2]) - mu;
            let b = kernel.evaluate(&[z1, z3]) - mu;
            s1 += a * b;
            s2 += (a * b).powi(2);
        }
        Ok((s1, s2))
    })?;
    let reps = replicates as f64;
    let (s1, s2) = sums
        .into_iter()
        .fold((0.0, 0.0), |acc, v| (acc.0 + v.0, acc.1 + v.1));
    let mean = s1 / reps;
    let var = (s2 / reps - mean * mean).max(0.0) * reps / (reps - 1.0);
    Ok(MeanEstimate {
        value: mean,
        se: (var / reps).sqrt(),
    })
}

/// Kendall's kernel on independent uniform coordinates; the target is `1/9`.
pub fn kendall_sigma_sq_mc(replicates: usize, seed: u64, workers: usize) -> Result<MeanEstimate> {
    projection_variance_mc(
        &crate::kernels::kendall_kernel(),
        |rng| [rng.gen::<f64>(), rng.gen::<f64>()],
        0.0,
        replicates,
        seed,
        workers,
    )
}
