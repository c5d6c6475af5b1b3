//! The numerator/denominator split of the Studentized statistic,
//! `T_n = (W + D_1) / sqrt(1 + D_2)`, with every sub-term, and the
//! censoring operators applied to them.

use serde::{Deserialize, Serialize};

use crate::combinatorics::{binomial, binomial_f64, check_guard, Subsets};
use crate::distributions::DiscreteDistribution;
use crate::error::{Error, Result};
use crate::kernels::{center, decompose, is_nondegenerate, KernelSpec};
use crate::sigma_hat::tail_constants;
use crate::ustat::{studentize, StudentizedResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionTerms {
    pub n: usize,
    pub m: usize,
    /// `sigma` of the centered kernel; every term below uses `h / sigma`.
    pub sigma: f64,
    /// Mean removed from the raw kernel before normalizing.
    pub centering_offset: f64,
    pub xi: Vec<f64>,
    #[serde(rename = "W")]
    pub w: f64,
    #[serde(rename = "V_n_sq")]
    pub v_n_sq: f64,
    #[serde(rename = "Psi")]
    pub psi: Vec<f64>,
    #[serde(rename = "Lambda_sq")]
    pub lambda_sq: f64,
    pub delta1_star: f64,
    pub delta1: f64,
    pub delta2: f64,
    #[serde(rename = "D1")]
    pub d1: f64,
    #[serde(rename = "D2")]
    pub d2: f64,
    pub d_n: f64,
    /// `U_n`, `sigma_hat^2`, `T_n` of the normalized kernel.
    #[serde(rename = "U_n")]
    pub u_n: f64,
    pub sigma_hat_sq: f64,
    pub sigma_star_sq: f64,
    #[serde(rename = "T_n", with = "crate::extended")]
    pub t_n: f64,
}

impl DecompositionTerms {
    /// `(W + D_1) / sqrt(1 + D_2)`, with the zero-denominator convention.
    pub fn t_from_terms(&self) -> f64 {
        let num = self.w + self.d1;
        let den = 1.0 + self.d2;
        crate::ustat::ratio_with_convention(
            num,
            den.max(0.0).sqrt(),
            crate::ustat::sigma_is_zero(den, self.u_n),
        )
    }

    /// `d_n^2 (V_n^2 + delta_1 + delta_2) - 1`.
    pub fn d2_from_terms(&self) -> f64 {
        self.d_n * self.d_n * (self.v_n_sq + self.delta1 + self.delta2) - 1.0
    }

    /// `delta_1^*` read off `sigma_hat_*^2 = d_n^2 (V_n^2 + delta_1^* + delta_2)`.
    pub fn delta1_star_direct(&self) -> f64 {
        self.sigma_star_sq / (self.d_n * self.d_n) - self.v_n_sq - self.delta2
    }

    /// Both sides of the Cauchy bound on the cross term of `delta_1^*`:
    /// `2(n-1)(m-1)/((n-m)^2 C(n-1,m-1)) |sum W Psi_i|` and
    /// `n(m-1)^2/(n-m)^2 W^2 + (n-1)^2/(C(n-1,m-1)^2 (n-m)^2) Lambda^2`.
    pub fn cross_term_bound(&self) -> (f64, f64) {
        let (n, m) = (self.n as f64, self.m as f64);
        let c = binomial_f64(self.n - 1, self.m - 1);
        let nm2 = (n - m).powi(2);
        let sum_psi: f64 = self.psi.iter().sum();
        let lhs = 2.0 * (n - 1.0) * (m - 1.0) / (nm2 * c) * (self.w * sum_psi).abs();
        let rhs = n * (m - 1.0).powi(2) / nm2 * self.w * self.w
            + (n - 1.0).powi(2) / (c * c * nm2) * self.lambda_sq;
        (lhs, rhs)
    }
}

/// Computes all terms for `data` drawn from the finite law `dist`.
///
/// The kernel is centered under `dist` and divided by `sigma` internally;
/// every data point must lie on the support of `dist`.
pub fn decompose_statistic(
    kernel: &KernelSpec,
    dist: &DiscreteDistribution,
    data: &[f64],
) -> Result<DecompositionTerms> {
    let (n, m) = (data.len(), kernel.degree());
    if n <= m {
        return Err(Error::domain(format!("need n > m, got n = {n}, m = {m}")));
    }
    check_guard("decomposition", binomial(n as u64, m as u64))?;
    let centered = center(kernel, dist)?;
    let dec = decompose(&centered, dist)?;
    if !is_nondegenerate(&dec) {
        return Err(Error::domain("degenerate kernel: sigma = 0"));
    }
    let sigma = dec.sigma_sq().sqrt();
    let h = centered.scaled(1.0 / sigma);
    let g: Vec<f64> = data
        .iter()
        .map(|&x| {
            dec.g_at(x)
                .map(|v| v / sigma)
                .ok_or_else(|| Error::domain(format!("data value {x} is not on the support")))
        })
        .collect::<Result<_>>()?;

    let root_n = (n as f64).sqrt();
    let xi: Vec<f64> = g.iter().map(|v| v / root_n).collect();
    let w: f64 = xi.iter().sum();
    let v_n_sq: f64 = xi.iter().map(|v| v * v).sum();

    // one pass over m-subsets: hbar_m feeds both D_1 and every Psi_i
    let mut psi = vec![0.0; n];
    let mut hbar_total = 0.0;
    let mut subsets = Subsets::new(n, m);
    let mut args = Vec::with_capacity(m);
    while let Some(s) = subsets.next_subset() {
        args.clear();
        args.extend(s.iter().map(|&i| data[i]));
        let hbar = h.evaluate(&args) - s.iter().map(|&i| g[i]).sum::<f64>();
        hbar_total += hbar;
        for &i in s {
            psi[i] += hbar;
        }
    }
    psi.iter_mut().for_each(|p| *p /= root_n);
    let c = binomial_f64(n - 1, m - 1);
    let d1 = hbar_total / (c * root_n);
    let lambda_sq: f64 = psi.iter().map(|p| p * p).sum();

    let (nf, mf) = (n as f64, m as f64);
    let nm = nf - mf;
    let sum_psi: f64 = psi.iter().sum();
    let delta1_star = (nf * (mf - 1.0).powi(2) / (nm * nm) + 2.0 * (mf - 1.0) / nm) * w * w
        + (nf - 1.0).powi(2) / (c * c * nm * nm) * lambda_sq
        + 2.0 * (nf - 1.0) * (mf - 1.0) / (nm * nm * c) * w * sum_psi;
    let st: StudentizedResult = studentize(&h, data)?;
    let delta1 = delta1_star - ((nf - 1.0) / nm).powi(2) * st.u_n * st.u_n;
    let cross: f64 = xi.iter().zip(&psi).map(|(a, b)| a * b).sum();
    let delta2 = 2.0 * (nf - 1.0) / nm / c * cross;

    Ok(DecompositionTerms {
        n,
        m,
        sigma,
        centering_offset: centered.offset(),
        xi,
        w,
        v_n_sq,
        psi,
        lambda_sq,
        delta1_star,
        delta1,
        delta2,
        d1,
        d2: st.sigma_hat_sq - 1.0,
        d_n: (nf / (nf - 1.0)).sqrt(),
        u_n: st.u_n,
        sigma_hat_sq: st.sigma_hat_sq,
        sigma_star_sq: st.sigma_star_sq(),
        t_n: st.t_n,
    })
}

/// A closed interval `[lower, upper]`; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CensorSpec {
    #[serde(with = "crate::extended")]
    pub lower: f64,
    #[serde(with = "crate::extended")]
    pub upper: f64,
}

impl CensorSpec {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if lower.is_nan() || upper.is_nan() || lower > upper {
            return Err(Error::domain(format!(
                "censoring window [{lower}, {upper}] is empty"
            )));
        }
        Ok(CensorSpec { lower, upper })
    }

    /// `[-t, t]`.
    pub fn symmetric(t: f64) -> Result<Self> {
        Self::new(-t, t)
    }

    pub fn unbounded() -> Self {
        CensorSpec {
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
        }
    }
}

/// `a I(y < a) + y I(a <= y <= b) + b I(y > b)`.
pub fn censor(y: f64, spec: CensorSpec) -> f64 {
    y.clamp(spec.lower, spec.upper)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensoredTerms {
    pub xi_b: Vec<f64>,
    #[serde(rename = "W_b")]
    pub w_b: f64,
    #[serde(rename = "D1_bar_x")]
    pub d1_bar_x: f64,
    pub delta1_bar: f64,
    pub delta2_b: f64,
    pub delta2_b_bar: f64,
}

/// Censored versions of the terms at level `x >= 1`: `xi_i` to `[-1, 1]`,
/// `D_1` to `+-c_m x / 4`, `delta_1` to `+-n^{-1/2}`, and `delta_{2,b}`
/// (built from the censored `xi_{b,i}`) to `[-1, 1]`.
pub fn censored_terms(terms: &DecompositionTerms, x: f64) -> Result<CensoredTerms> {
    if !(x >= 1.0) {
        return Err(Error::domain(format!(
            "censored terms need x >= 1, got {x}"
        )));
    }
    let unit = CensorSpec::symmetric(1.0)?;
    let xi_b: Vec<f64> = terms.xi.iter().map(|&v| censor(v, unit)).collect();
    let w_b = xi_b.iter().sum();
    let c_m = tail_constants(terms.m)?.c_m;
    let d1_bar_x = censor(terms.d1, CensorSpec::symmetric(c_m * x / 4.0)?);
    let (nf, mf) = (terms.n as f64, terms.m as f64);
    let delta1_bar = censor(terms.delta1, CensorSpec::symmetric(nf.powf(-0.5))?);
    let c = binomial_f64(terms.n - 1, terms.m - 1);
    let cross: f64 = xi_b.iter().zip(&terms.psi).map(|(a, b)| a * b).sum();
    let delta2_b = 2.0 * (nf - 1.0) / (nf - mf) / c * cross;
    Ok(CensoredTerms {
        xi_b,
        w_b,
        d1_bar_x,
        delta1_bar,
        delta2_b,
        delta2_b_bar: censor(delta2_b, unit),
    })
}
