//! Symmetric kernels, centering, and the Hoeffding projections of a kernel
//! against a finite-support law.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::combinatorics::{
    check_guard, for_each_permutation, for_each_subset, for_each_tuple, ENUMERATION_GUARD,
};
use crate::distributions::DiscreteDistribution;
use crate::error::{Error, Result};

/// A tabulated function is treated as identically zero below this magnitude.
pub const ZERO_FUNCTION_TOLERANCE: f64 = 1e-10;

/// `sigma^2` at or below this value counts as degenerate.
pub const DEGENERACY_TOLERANCE: f64 = 1e-12;

type KernelFn<P> = Arc<dyn Fn(&[P]) -> f64 + Send + Sync>;

/// A symmetric kernel of degree `m` on points of type `P`.
///
/// The stored function is affinely adjusted on evaluation:
/// `evaluate(x) = scale * (raw(x) - offset)`. Centering sets `offset`;
/// normalizing by `sigma` sets `scale`.
pub struct KernelSpec<P = f64> {
    degree: usize,
    name: String,
    raw: KernelFn<P>,
    offset: f64,
    scale: f64,
    centered: bool,
}

impl<P> Clone for KernelSpec<P> {
    fn clone(&self) -> Self {
        KernelSpec {
            degree: self.degree,
            name: self.name.clone(),
            raw: Arc::clone(&self.raw),
            offset: self.offset,
            scale: self.scale,
            centered: self.centered,
        }
    }
}

impl<P> fmt::Debug for KernelSpec<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KernelSpec")
            .field("name", &self.name)
            .field("degree", &self.degree)
            .field("offset", &self.offset)
            .field("scale", &self.scale)
            .field("centered", &self.centered)
            .finish()
    }
}

impl<P> KernelSpec<P> {
    /// Wraps a function of exactly `degree` arguments. The caller promises
    /// symmetry; [`KernelSpec::check_symmetry`] spot-checks it.
    pub fn new(
        name: impl Into<String>,
        degree: usize,
        f: impl Fn(&[P]) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if degree == 0 {
            return Err(Error::domain("kernel degree must be at least 1"));
        }
        Ok(KernelSpec {
            degree,
            name: name.into(),
            raw: Arc::new(f),
            offset: 0.0,
            scale: 1.0,
            centered: false,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    #[inline]
    pub fn evaluate(&self, args: &[P]) -> f64 {
        debug_assert_eq!(args.len(), self.degree);
        self.scale * ((self.raw)(args) - self.offset)
    }

    /// `h - c`, with the centered flag set as given.
    pub fn shifted(&self, c: f64, centered: bool) -> Self {
        let mut k = self.clone();
        k.offset += c / self.scale;
        k.centered = centered;
        k
    }

    /// `lambda * h`.
    pub fn scaled(&self, lambda: f64) -> Self {
        let mut k = self.clone();
        k.scale *= lambda;
        k
    }

    /// Largest `|h(x) - h(pi x)|` over the supplied permutations of `args`.
    pub fn check_symmetry(&self, args: &[P], perms: &[Vec<usize>]) -> f64
    where
        P: Clone,
    {
        let base = self.evaluate(args);
        perms
            .iter()
            .map(|perm| {
                let permuted: Vec<P> = perm.iter().map(|&i| args[i].clone()).collect();
                (self.evaluate(&permuted) - base).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Named kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BuiltinKernel {
    /// `x_1 + ... + x_m`.
    Sum { m: usize },
    /// `sign((x_1 - x_2)(y_1 - y_2))` on pairs; see [`kendall_kernel`].
    Kendall,
    /// `I(x_1 + x_2 > 0)`, the signed-rank kernel.
    Wilcoxon,
    /// `(x_1 - x_2)^2 / 2`.
    Variance,
    /// `|x_1 - x_2|`.
    Gini,
}

impl FromStr for BuiltinKernel {
    type Err = Error;

    /// Accepts `sum`, `sum_m`, `sum:<m>`, `kendall`, `wilcoxon`, `variance`, `gini`.
    /// Plain `sum` means degree 1.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        if let Some(rest) = lower.strip_prefix("sum:") {
            let m = rest
                .parse()
                .map_err(|_| Error::domain(format!("bad sum kernel degree in {s:?}")))?;
            return Ok(BuiltinKernel::Sum { m });
        }
        match lower.as_str() {
            "sum" | "sum_m" | "mean" | "identity" => Ok(BuiltinKernel::Sum { m: 1 }),
            "kendall" => Ok(BuiltinKernel::Kendall),
            "wilcoxon" => Ok(BuiltinKernel::Wilcoxon),
            "variance" => Ok(BuiltinKernel::Variance),
            "gini" => Ok(BuiltinKernel::Gini),
            _ => Err(Error::domain(format!("unknown kernel name {s:?}"))),
        }
    }
}

/// Builds a scalar-point built-in kernel.
///
/// Kendall's kernel takes pair-valued points and is built by
/// [`kendall_kernel`] instead; asking for it here is an error.
pub fn builtin_kernel(which: BuiltinKernel) -> Result<KernelSpec> {
    match which {
        BuiltinKernel::Sum { m } => {
            if m == 0 {
                return Err(Error::domain("sum kernel degree must be at least 1"));
            }
            KernelSpec::new(format!("sum_{m}"), m, |x: &[f64]| x.iter().sum())
        }
        BuiltinKernel::Variance => {
            KernelSpec::new("variance", 2, |x: &[f64]| 0.5 * (x[0] - x[1]).powi(2))
        }
        BuiltinKernel::Gini => KernelSpec::new("gini", 2, |x: &[f64]| (x[0] - x[1]).abs()),
        BuiltinKernel::Wilcoxon => {
            KernelSpec::new(
                "wilcoxon",
                2,
                |x: &[f64]| {
                    if x[0] + x[1] > 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                },
            )
        }
        BuiltinKernel::Kendall => Err(Error::domain(
            "kendall kernel takes pair-valued points; build it with kendall_kernel()",
        )),
    }
}

/// Kendall's tau kernel on bivariate points.
pub fn kendall_kernel() -> KernelSpec<[f64; 2]> {
    KernelSpec::new("kendall", 2, |z: &[[f64; 2]]| {
        let s = (z[0][0] - z[1][0]) * (z[0][1] - z[1][1]);
        if s > 0.0 {
            1.0
        } else if s < 0.0 {
            -1.0
        } else {
            0.0
        }
    })
    .expect("degree 2")
}

/// A polynomial kernel given as a multi-index table, e.g.
/// `{"m": 2, "coefficients": {"1,1": 1.0, "2,0": 0.5}}` for
/// `x_1 x_2 + 0.5 x_1^2`. The table is symmetrized by averaging over all
/// argument permutations, so the resulting kernel is symmetric whatever the
/// input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialKernel {
    pub m: usize,
    pub coefficients: BTreeMap<String, f64>,
}

/// Largest kernel degree accepted for polynomial tables.
pub const MAX_POLYNOMIAL_DEGREE: usize = 3;

impl PolynomialKernel {
    pub fn build(&self) -> Result<KernelSpec> {
        let m = self.m;
        if m == 0 || m > MAX_POLYNOMIAL_DEGREE {
            return Err(Error::domain(format!(
                "polynomial kernel degree {m} outside 1..={MAX_POLYNOMIAL_DEGREE}"
            )));
        }
        let mut sym: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        let mut n_perm = 0.0;
        for_each_permutation(&vec![(); m], |_| n_perm += 1.0);
        for (key, &coef) in &self.coefficients {
            let powers: Vec<u32> = key
                .split(',')
                .map(|t| t.trim().parse::<u32>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::domain(format!("bad multi-index {key:?}")))?;
            if powers.len() != m {
                return Err(Error::domain(format!(
                    "multi-index {key:?} has {} entries, kernel degree is {m}",
                    powers.len()
                )));
            }
            if !coef.is_finite() {
                return Err(Error::domain(format!("coefficient for {key:?} not finite")));
            }
            for_each_permutation(&powers, |p| {
                *sym.entry(p.to_vec()).or_insert(0.0) += coef / n_perm;
            });
        }
        let terms: Vec<(Vec<i32>, f64)> = sym
            .into_iter()
            .filter(|(_, c)| *c != 0.0)
            .map(|(p, c)| (p.into_iter().map(|e| e as i32).collect(), c))
            .collect();
        KernelSpec::new(format!("polynomial_{m}"), m, move |x: &[f64]| {
            terms
                .iter()
                .map(|(pw, c)| c * pw.iter().zip(x).map(|(&e, &v)| v.powi(e)).product::<f64>())
                .sum()
        })
    }
}

/// Kernel selection as it appears in JSON configs:
/// `{"name": "sum", "m": 2}` or `{"polynomial": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KernelConfig {
    Named {
        name: String,
        #[serde(default)]
        m: Option<usize>,
    },
    Polynomial {
        polynomial: PolynomialKernel,
    },
}

impl KernelConfig {
    pub fn build(&self) -> Result<KernelSpec> {
        match self {
            KernelConfig::Named { name, m } => {
                let mut which: BuiltinKernel = name.parse()?;
                if let (BuiltinKernel::Sum { .. }, Some(m)) = (which, m) {
                    which = BuiltinKernel::Sum { m: *m };
                }
                builtin_kernel(which)
            }
            KernelConfig::Polynomial { polynomial } => polynomial.build(),
        }
    }
}

fn product_size(support: usize, m: usize) -> u128 {
    (support as u128).saturating_pow(m as u32)
}

/// Exact `E[h(X_1..X_m)]` by enumeration over the product support.
pub fn kernel_mean(kernel: &KernelSpec, dist: &DiscreteDistribution) -> Result<f64> {
    let m = kernel.degree();
    check_guard("kernel mean", product_size(dist.len(), m))?;
    let atoms = dist.atoms();
    let mut args = vec![0.0; m];
    let mut total = 0.0;
    for_each_tuple(atoms.len(), m, |t| {
        let mut w = 1.0;
        for (slot, &i) in args.iter_mut().zip(t) {
            *slot = atoms[i].0;
            w *= atoms[i].1;
        }
        total += w * kernel.evaluate(&args);
    });
    Ok(total)
}

/// Returns `h - E[h]` under `dist^m`, flagged as centered.
pub fn center(kernel: &KernelSpec, dist: &DiscreteDistribution) -> Result<KernelSpec> {
    let mu = kernel_mean(kernel, dist)?;
    Ok(kernel.shifted(mu, true))
}

/// The Hoeffding projections of a centered kernel, tabulated on the product
/// support of a finite law.
///
/// Table `k` (for `k = 1..=m`) holds `h_k` at every `k`-tuple of atom
/// indices, first argument most significant.
#[derive(Debug, Clone)]
pub struct HoeffdingDecomposition {
    m: usize,
    values: Vec<f64>,
    probs: Vec<f64>,
    h_tables: Vec<Vec<f64>>,
    canonical: Vec<Vec<f64>>,
    sigma_sq: f64,
    degeneracy_order: Option<usize>,
}

impl HoeffdingDecomposition {
    pub fn degree(&self) -> usize {
        self.m
    }

    pub fn support(&self) -> &[f64] {
        &self.values
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    /// `h_k` table, `1 <= k <= m`.
    pub fn h_table(&self, k: usize) -> &[f64] {
        &self.h_tables[k - 1]
    }

    /// Canonical function `g_k` table.
    pub fn canonical_table(&self, k: usize) -> &[f64] {
        &self.canonical[k - 1]
    }

    /// `g = h_1` indexed by atom.
    pub fn g_table(&self) -> &[f64] {
        &self.h_tables[0]
    }

    /// `g` at a support value; `None` off the support.
    pub fn g_at(&self, value: f64) -> Option<f64> {
        self.values
            .iter()
            .position(|&v| v == value)
            .map(|i| self.h_tables[0][i])
    }

    pub fn sigma_sq(&self) -> f64 {
        self.sigma_sq
    }

    /// First `k` whose canonical function is not identically zero, or
    /// `None` when the kernel itself vanishes.
    pub fn degeneracy_order(&self) -> Option<usize> {
        self.degeneracy_order
    }

    /// Tuple probability and the flat index of a tuple of atom indices.
    fn weight(&self, t: &[usize]) -> f64 {
        t.iter().map(|&i| self.probs[i]).product()
    }

    fn flat(&self, t: &[usize]) -> usize {
        t.iter().fold(0, |acc, &i| acc * self.values.len() + i)
    }

    /// `E|h_k|^p`.
    pub fn abs_moment(&self, k: usize, p: f64) -> f64 {
        self.table_abs_moment(&self.h_tables[k - 1], k, p)
    }

    /// `E|g_k|^p` for the canonical function of order `k`.
    pub fn canonical_abs_moment(&self, k: usize, p: f64) -> f64 {
        self.table_abs_moment(&self.canonical[k - 1], k, p)
    }

    /// `||h_k||_p`.
    pub fn norm(&self, k: usize, p: f64) -> f64 {
        self.abs_moment(k, p).powf(1.0 / p)
    }

    fn table_abs_moment(&self, table: &[f64], k: usize, p: f64) -> f64 {
        let mut acc = 0.0;
        for_each_tuple(self.values.len(), k, |t| {
            acc += self.weight(t) * table[self.flat(t)].abs().powf(p);
        });
        acc
    }

    /// `hbar_k(t) = h_k(t) - sum_i g(t_i)` at a tuple of atom indices.
    pub fn hbar(&self, k: usize, t: &[usize]) -> f64 {
        let g = &self.h_tables[0];
        self.h_tables[k - 1][self.flat(t)] - t.iter().map(|&i| g[i]).sum::<f64>()
    }

    /// `E[hbar_k(X_1..X_k) | X_i = support[v]]` by enumeration.
    pub fn hbar_conditional_mean(&self, k: usize, i: usize, v: usize) -> f64 {
        let mut acc = 0.0;
        for_each_tuple(self.values.len(), k, |t| {
            if t[i] == v {
                acc += self.weight(t) / self.probs[v] * self.hbar(k, t);
            }
        });
        acc
    }

    /// Moment table `||h_k||_p` for `p` in {2, 3}, `k = 1..=m`.
    pub fn norm_table(&self) -> Vec<[f64; 2]> {
        (1..=self.m)
            .map(|k| [self.norm(k, 2.0), self.norm(k, 3.0)])
            .collect()
    }
}

/// Tabulates `h_1, ..., h_m`, the canonical functions and `sigma^2`.
///
/// The kernel must be centered under `dist`: either flagged by [`center`] or
/// with an exact mean already within `1e-12`.
pub fn decompose(
    kernel: &KernelSpec,
    dist: &DiscreteDistribution,
) -> Result<HoeffdingDecomposition> {
    let m = kernel.degree();
    let s = dist.len();
    let size = product_size(s, m);
    if size > ENUMERATION_GUARD {
        check_guard("hoeffding decomposition", size)?;
    }
    let values: Vec<f64> = dist.values().collect();
    let probs: Vec<f64> = dist.atoms().iter().map(|a| a.1).collect();

    // h_m on the full product support
    let mut top = Vec::with_capacity(size as usize);
    let mut args = vec![0.0; m];
    for_each_tuple(s, m, |t| {
        for (slot, &i) in args.iter_mut().zip(t) {
            *slot = values[i];
        }
        top.push(kernel.evaluate(&args));
    });
    let mean: f64 = {
        let mut acc = 0.0;
        let mut idx = 0;
        for_each_tuple(s, m, |t| {
            acc += t.iter().map(|&i| probs[i]).product::<f64>() * top[idx];
            idx += 1;
        });
        acc
    };
    if !kernel.is_centered() && mean.abs() > 1e-12 {
        return Err(Error::domain(format!(
            "kernel {} is not centered (mean {mean:e}); call center() first",
            kernel.name()
        )));
    }

    // h_k from h_{k+1} by integrating out the last argument
    let mut h_tables = vec![top];
    for _ in (1..m).rev() {
        let next = h_tables.last().unwrap();
        let reduced: Vec<f64> = next
            .chunks(s)
            .map(|row| row.iter().zip(&probs).map(|(v, p)| v * p).sum())
            .collect();
        h_tables.push(reduced);
    }
    h_tables.reverse();

    // canonical g_k = h_k - sum over proper nonempty sub-tuples of g_j
    let mut canonical: Vec<Vec<f64>> = Vec::with_capacity(m);
    for k in 1..=m {
        let mut table = h_tables[k - 1].clone();
        let mut idx = 0;
        for_each_tuple(s, k, |t| {
            let mut sub = 0.0;
            for j in 1..k {
                for_each_subset(k, j, |pos| {
                    let flat = pos.iter().fold(0, |acc, &p| acc * s + t[p]);
                    sub += canonical[j - 1][flat];
                });
            }
            table[idx] -= sub;
            idx += 1;
        });
        canonical.push(table);
    }

    let g = &h_tables[0];
    let g_mean: f64 = g.iter().zip(&probs).map(|(v, p)| v * p).sum();
    let sigma_sq = g
        .iter()
        .zip(&probs)
        .map(|(v, p)| p * (v - g_mean).powi(2))
        .sum::<f64>();

    let degeneracy_order = canonical
        .iter()
        .position(|t| t.iter().any(|v| v.abs() >= ZERO_FUNCTION_TOLERANCE))
        .map(|i| i + 1);

    Ok(HoeffdingDecomposition {
        m,
        values,
        probs,
        h_tables,
        canonical,
        sigma_sq,
        degeneracy_order,
    })
}

pub fn sigma_of_kernel(decomp: &HoeffdingDecomposition) -> f64 {
    decomp.sigma_sq().max(0.0).sqrt()
}

pub fn is_nondegenerate(decomp: &HoeffdingDecomposition) -> bool {
    decomp.sigma_sq() > DEGENERACY_TOLERANCE
}
