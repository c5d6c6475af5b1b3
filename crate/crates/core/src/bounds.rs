//! Evaluators for the Berry-Esseen type bounds and the auxiliary
//! inequalities (lower tail of non-negative kernels, moment bound, Bennett,
//! sub-Gaussian self-normalized sums). Every unspecified constant is a
//! parameter; defaults are 1 and carry no claim of validity.

use serde::{Deserialize, Serialize};

use crate::combinatorics::binomial_f64;
use crate::distributions::DiscreteDistribution;
use crate::error::{Error, Result};
use crate::kernels::HoeffdingDecomposition;

/// Moment inputs of the bounds. For a degree-one kernel `E_X2`, `E_X3` and
/// `E_abs_X3` describe the data law itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct MomentSummary {
    pub sigma: f64,
    pub E_abs_h3: f64,
    pub E_abs_g3: f64,
    pub h3_norm: f64,
    pub g3_norm: f64,
    pub h2_norm: f64,
    #[serde(default)]
    pub E_X2: f64,
    #[serde(default)]
    pub E_X3: f64,
    #[serde(default)]
    pub E_abs_X3: f64,
}

impl MomentSummary {
    /// From the tabulated projections of a centered kernel.
    pub fn from_decomposition(dec: &HoeffdingDecomposition) -> Self {
        let m = dec.degree();
        let g3 = dec.abs_moment(1, 3.0);
        let h3 = dec.abs_moment(m, 3.0);
        let p = dec.probabilities();
        let g = dec.g_table();
        MomentSummary {
            sigma: dec.sigma_sq().sqrt(),
            E_abs_h3: h3,
            E_abs_g3: g3,
            h3_norm: h3.cbrt(),
            g3_norm: g3.cbrt(),
            h2_norm: dec.abs_moment(m, 2.0).sqrt(),
            E_X2: g.iter().zip(p).map(|(v, w)| w * v * v).sum(),
            E_X3: g.iter().zip(p).map(|(v, w)| w * v * v * v).sum(),
            E_abs_X3: g3,
        }
    }

    /// For the identity kernel on a mean-zero law.
    pub fn from_distribution(dist: &DiscreteDistribution) -> Self {
        let e2 = dist.moment(|x| x * x);
        let e3 = dist.moment(|x| x * x * x);
        let a3 = dist.moment(|x| x.abs().powi(3));
        MomentSummary {
            sigma: e2.sqrt(),
            E_abs_h3: a3,
            E_abs_g3: a3,
            h3_norm: a3.cbrt(),
            g3_norm: a3.cbrt(),
            h2_norm: e2.sqrt(),
            E_X2: e2,
            E_X3: e3,
            E_abs_X3: a3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.sigma,
            self.E_abs_h3,
            self.E_abs_g3,
            self.h3_norm,
            self.g3_norm,
            self.h2_norm,
        ];
        if all.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::domain(
                "moment summary has a negative or non-finite entry",
            ));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::domain("moment summary needs sigma > 0"));
        }
        let tol = 1e-9;
        if self.g3_norm > self.h3_norm * (1.0 + tol) + tol {
            return Err(Error::domain("moment summary violates ||g||_3 <= ||h||_3"));
        }
        if self.sigma > self.h2_norm * (1.0 + tol) + tol {
            return Err(Error::domain("moment summary violates sigma <= ||h||_2"));
        }
        Ok(())
    }
}

/// The unspecified constants of the main results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct BoundParams {
    #[serde(default = "one")]
    pub C: f64,
    /// Multiplier of the exponential term; only the t-statistic bound has one.
    #[serde(default = "one")]
    pub C1: f64,
    #[serde(default = "one")]
    pub c1: f64,
    #[serde(default = "one")]
    pub c2: f64,
    #[serde(default = "default_label")]
    pub label: String,
}

fn one() -> f64 {
    1.0
}

fn default_label() -> String {
    "unit constants (illustrative)".to_string()
}

impl Default for BoundParams {
    fn default() -> Self {
        BoundParams {
            C: 1.0,
            C1: 1.0,
            c1: 1.0,
            c2: 1.0,
            label: default_label(),
        }
    }
}

impl BoundParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("C", self.C),
            ("C1", self.C1),
            ("c1", self.c1),
            ("c2", self.c2),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::domain(format!(
                    "constant {name} = {v} must be positive"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundForm {
    Full,
    Simple,
}

/// `exp(-c a / b)` with the convention that `b = 0` sends the exponent to
/// `-inf`.
fn exp_ratio(c: f64, a: f64, b: f64) -> f64 {
    if b == 0.0 {
        0.0
    } else {
        (-c * a / b).exp()
    }
}

fn check_main_shape(n: usize, m: usize) -> Result<()> {
    if m == 0 || n <= 2.max(m * m) {
        return Err(Error::domain(format!(
            "the nonuniform bound needs n > max(2, m^2), got n = {n}, m = {m}"
        )));
    }
    Ok(())
}

/// Nonuniform bound on `|P(T_n <= x) - Phi(x)|`.
///
/// Full form:
/// `exp(-c1 n sigma^6 / E|h|^3^2) + C { (E|h|^3/(n^{3/2} sigma^3) + E|g|^3/(sqrt(n) sigma^3)) / (1+|x|^3)
///  + (||g||_3^2 ||h||_3 / sigma^3 + ||h||_3^2 / sigma^2) / (e^{c2 |x|} sqrt(n)) }`.
///
/// Simple form: `exp(-c1 n sigma^6 / E|h|^3^2) + C E|h|^3 / ((1+|x|^3) sqrt(n) sigma^3)`.
pub fn nonuniform_bound_tn(
    x: f64,
    n: usize,
    m: usize,
    mom: &MomentSummary,
    par: &BoundParams,
    form: BoundForm,
) -> Result<f64> {
    check_main_shape(n, m)?;
    mom.validate()?;
    par.validate()?;
    let nf = n as f64;
    let s = mom.sigma;
    let ax = x.abs();
    let head = exp_ratio(par.c1, nf * s.powi(6), mom.E_abs_h3.powi(2));
    let poly = 1.0 / (1.0 + ax.powi(3));
    let tail = match form {
        BoundForm::Simple => par.C * mom.E_abs_h3 * poly / (nf.sqrt() * s.powi(3)),
        BoundForm::Full => {
            let a = poly
                * (mom.E_abs_h3 / (nf.powf(1.5) * s.powi(3))
                    + mom.E_abs_g3 / (nf.sqrt() * s.powi(3)));
            let b = (-par.c2 * ax).exp() / nf.sqrt()
                * (mom.g3_norm.powi(2) * mom.h3_norm / s.powi(3) + mom.h3_norm.powi(2) / (s * s));
            par.C * (a + b)
        }
    };
    Ok(head + tail)
}

/// Nonuniform bound for Student's t statistic:
/// `C1 exp(-c1 n (E X^2)^3 / (E X^3)^2) + C e^{-c2 x^2} E|X|^3 / (sqrt(n) (E X^2)^{3/2})`.
/// The first term uses the signed third moment; it vanishes when `E X^3 = 0`.
pub fn nonuniform_bound_tstat(
    x: f64,
    n: usize,
    mom: &MomentSummary,
    par: &BoundParams,
) -> Result<f64> {
    if n < 2 {
        return Err(Error::domain(format!(
            "t statistic bound needs n >= 2, got {n}"
        )));
    }
    if !(mom.E_X2 > 0.0) {
        return Err(Error::domain("t statistic bound needs E X^2 > 0"));
    }
    par.validate()?;
    let nf = n as f64;
    let head = par.C1 * exp_ratio(par.c1, nf * mom.E_X2.powi(3), mom.E_X3.powi(2));
    let tail = par.C * (-par.c2 * x * x).exp() * mom.E_abs_X3 / (nf.sqrt() * mom.E_X2.powf(1.5));
    Ok(head + tail)
}

/// Uniform bound for the Studentized statistic, `C E|h|^3 / (sqrt(n) sigma^3)`.
pub fn uniform_bound_tn(n: usize, m: usize, mom: &MomentSummary, par: &BoundParams) -> Result<f64> {
    if n <= 2 * m {
        return Err(Error::domain(format!(
            "uniform bound needs n > 2m, got n = {n}, m = {m}"
        )));
    }
    par.validate()?;
    Ok(par.C * mom.E_abs_h3 / ((n as f64).sqrt() * mom.sigma.powi(3)))
}

/// Nonuniform bound for the standardized statistic `sqrt(n) U_n / (m sigma)`:
/// `C E|h|^3 / ((1+|x|)^3 sqrt(n) sigma^3)`.
pub fn standardized_nonuniform_bound(
    x: f64,
    n: usize,
    m: usize,
    mom: &MomentSummary,
    par: &BoundParams,
) -> Result<f64> {
    if n <= 2 * m {
        return Err(Error::domain(format!(
            "standardized bound needs n > 2m, got n = {n}, m = {m}"
        )));
    }
    par.validate()?;
    Ok(par.C * mom.E_abs_h3 / ((1.0 + x.abs()).powi(3) * (n as f64).sqrt() * mom.sigma.powi(3)))
}

/// Which integer part of `n/m` multiplies the exponent of the lower-tail
/// bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum KappaConvention {
    /// Greatest integer strictly below `n/m`.
    #[default]
    Strict,
    /// `floor(n/m)`.
    Floor,
}

impl KappaConvention {
    pub fn kappa(self, n: usize, m: usize) -> usize {
        match self {
            KappaConvention::Floor => n / m,
            KappaConvention::Strict => {
                if n.is_multiple_of(m) {
                    n / m - 1
                } else {
                    n / m
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerTailBound {
    pub value: f64,
    pub kappa: usize,
    pub convention: KappaConvention,
}

/// Lower tail of a U-statistic with a non-negative kernel: for `0 < x <= E h`
/// and `p` in `(1, 2]`,
/// `P(U_n <= x) <= exp(-kappa (p-1) (E h - x)^{p/(p-1)} / (p (E h^p)^{1/(p-1)}))`.
pub fn lower_tail_bound(
    eh: f64,
    ehp: f64,
    p: f64,
    n: usize,
    m: usize,
    x: f64,
    convention: KappaConvention,
) -> Result<LowerTailBound> {
    if !(eh > 0.0 && ehp > 0.0) {
        return Err(Error::domain(
            "lower tail bound needs E h > 0 and E h^p > 0",
        ));
    }
    if !(p > 1.0 && p <= 2.0) {
        return Err(Error::domain(format!("p = {p} outside (1, 2]")));
    }
    if !(x > 0.0 && x <= eh) {
        return Err(Error::domain(format!("x = {x} outside (0, E h = {eh}]")));
    }
    if ehp < eh.powf(p) * (1.0 - 1e-12) {
        return Err(Error::domain("E h^p < (E h)^p is impossible"));
    }
    if m == 0 || n < m {
        return Err(Error::domain(format!(
            "need n >= m >= 1, got n = {n}, m = {m}"
        )));
    }
    let kappa = convention.kappa(n, m);
    let q = p / (p - 1.0);
    let expo = kappa as f64 * (p - 1.0) * (eh - x).powf(q) / (p * ehp.powf(1.0 / (p - 1.0)));
    Ok(LowerTailBound {
        value: (-expo).exp(),
        kappa,
        convention,
    })
}

/// `alpha_p = 2^{2-p}` (an upper bound on `sup_x |x|^{-p}(|1+x|^p - 1 - p x)`).
pub fn alpha_p(p: f64) -> f64 {
    2f64.powf(2.0 - p)
}

/// `gamma_p = {8 (p-1) max(1, 2^{p-3})}^p`.
pub fn gamma_p(p: f64) -> f64 {
    (8.0 * (p - 1.0) * 1f64.max(2f64.powf(p - 3.0))).powf(p)
}

/// Moment bound on `E|U_n|^p` for a centered kernel with degeneracy order
/// `r`, given `E|g_k|^p` for `k = r..=m`:
///
/// ```text
/// p <= 2: (m-r+1)^{p-1} sum_k C(m,k)^p C(n,k)^{1-p} alpha_p^{k+1} E|g_k|^p
/// p >  2: (m-r+1)^{p-1} sum_k C(m,k)^p C(n,k)^{1-p} n^{(p-2)k/2} gamma_p^{k+1} E|g_k|^p
/// ```
pub fn moment_bound_un(
    p: f64,
    n: usize,
    m: usize,
    r: usize,
    canonical_moments: &[f64],
) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::domain(format!("moment bound needs p >= 1, got {p}")));
    }
    if canonical_moments.is_empty() {
        return Err(Error::domain("no canonical moments given"));
    }
    if r == 0 || r > m || canonical_moments.len() != m - r + 1 {
        return Err(Error::domain(format!(
            "need 1 <= r <= m and m - r + 1 moments, got r = {r}, m = {m}, {} moments",
            canonical_moments.len()
        )));
    }
    if n < m {
        return Err(Error::domain(format!("need n >= m, got n = {n}, m = {m}")));
    }
    let nf = n as f64;
    let lead = ((m - r + 1) as f64).powf(p - 1.0);
    let sum: f64 = (r..=m)
        .zip(canonical_moments)
        .map(|(k, &e)| {
            let kf = k as f64;
            let base = binomial_f64(m, k).powf(p) * binomial_f64(n, k).powf(1.0 - p) * e;
            if p <= 2.0 {
                base * alpha_p(p).powf(kf + 1.0)
            } else {
                base * nf.powf((p - 2.0) * kf / 2.0) * gamma_p(p).powf(kf + 1.0)
            }
        })
        .sum();
    Ok(lead * sum)
}

/// `exp(e^{2t}/4 - 1/4 + t/2)`, the Bennett bound on `E[e^{t W_b}]`.
pub fn bennett_mgf_bound(t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::domain(format!("Bennett bound needs t > 0, got {t}")));
    }
    Ok(((2.0 * t).exp() / 4.0 - 0.25 + t / 2.0).exp())
}

/// `2 e^{-x^2/2}`, the bound on `P(S_n > x (4 sqrt(n) ||X||_2 + V_n))`.
pub fn subgaussian_sn_bound(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::domain(format!(
            "sub-Gaussian bound needs x >= 0, got {x}"
        )));
    }
    Ok(2.0 * (-x * x / 2.0).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BridgeQuantities {
    pub a_n_x: f64,
    pub b_m_n_x: f64,
}

/// `a_n(x) = sqrt(n / (n + x^2 - 1))` and `b_{m,n}(x) = (1 + m^2 (n-1) x^2 / (n-m)^2)^{-1/2}`.
pub fn bridge_quantities(x: f64, n: usize, m: usize) -> Result<BridgeQuantities> {
    if n < 2 || m == 0 || n <= m {
        return Err(Error::domain(format!(
            "bridge quantities need n >= 2 and n > m, got n = {n}, m = {m}"
        )));
    }
    if !(x >= 0.0) {
        return Err(Error::domain(format!(
            "bridge quantities need x >= 0, got {x}"
        )));
    }
    let nf = n as f64;
    Ok(BridgeQuantities {
        a_n_x: (nf / (nf + x * x - 1.0)).sqrt(),
        b_m_n_x: crate::ustat::b_mn(x, n, m),
    })
}

/// Exact law of the sample mean of `n` draws from `dist`, as sorted
/// `(value, probability)` pairs. Sums are merged on exact equality, so this
/// is meant for lattice supports.
pub fn exact_mean_law(dist: &DiscreteDistribution, n: usize) -> Result<Vec<(f64, f64)>> {
    if n == 0 {
        return Err(Error::domain("need n >= 1"));
    }
    let mut law: Vec<(f64, f64)> = vec![(0.0, 1.0)];
    for _ in 0..n {
        let mut next: Vec<(f64, f64)> = Vec::with_capacity(law.len() * dist.len());
        for &(s, ps) in &law {
            for &(v, pv) in dist.atoms() {
                next.push((s + v, ps * pv));
            }
        }
        next.sort_by(|a, b| a.0.total_cmp(&b.0));
        law.clear();
        for (s, p) in next {
            match law.last_mut() {
                Some(last) if last.0 == s => last.1 += p,
                _ => law.push((s, p)),
            }
        }
        if law.len() > 1_000_000 {
            return Err(Error::domain(
                "support of the sum is too large to enumerate",
            ));
        }
    }
    Ok(law.into_iter().map(|(s, p)| (s / n as f64, p)).collect())
}

/// `P(mean <= x)` from [`exact_mean_law`].
pub fn exact_mean_cdf(law: &[(f64, f64)], x: f64) -> f64 {
    law.iter()
        .take_while(|(v, _)| *v <= x + 1e-12)
        .map(|(_, p)| p)
        .sum()
}
