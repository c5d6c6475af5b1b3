//! U-statistics, leave-one-out averages, the jackknife variance estimate and
//! the Studentized statistics built from them.

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{binomial, binomial_f64, Subsets, ENUMERATION_GUARD};
use crate::distributions::replicate_rng;
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;

/// Relative threshold below which `sigma_hat^2` counts as zero.
pub const SIGMA_ZERO_TOLERANCE: f64 = 1e-12;

/// How an incomplete U-statistic was formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IncompleteInfo {
    pub subsets_sampled: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudentizedResult {
    #[serde(rename = "U_n")]
    pub u_n: f64,
    pub q: Vec<f64>,
    pub sigma_hat_sq: f64,
    #[serde(rename = "T_n", with = "crate::extended")]
    pub t_n: f64,
    #[serde(rename = "T_n_star", with = "crate::extended")]
    pub t_n_star: f64,
    pub n: usize,
    pub m: usize,
    /// Present when `U_n` and `q` come from sampled subsets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub incomplete: Option<IncompleteInfo>,
}

impl StudentizedResult {
    pub fn sigma_hat(&self) -> f64 {
        self.sigma_hat_sq.sqrt()
    }

    /// `sigma_hat_*^2 = (n-1)/(n-m)^2 * sum q_i^2`.
    pub fn sigma_star_sq(&self) -> f64 {
        jackknife_factor(self.n, self.m) * self.q.iter().map(|q| q * q).sum::<f64>()
    }

    pub fn sigma_is_zero(&self) -> bool {
        sigma_is_zero(self.sigma_hat_sq, self.u_n)
    }
}

fn jackknife_factor(n: usize, m: usize) -> f64 {
    (n as f64 - 1.0) / ((n - m) as f64).powi(2)
}

pub fn sigma_is_zero(sigma_hat_sq: f64, u_n: f64) -> bool {
    sigma_hat_sq <= SIGMA_ZERO_TOLERANCE * (u_n * u_n).max(1.0)
}

/// `num / den` with the Studentization convention: when `den` is zero the
/// result is `+inf`, `-inf` or `0` following the sign of `num`.
pub fn ratio_with_convention(num: f64, den: f64, den_is_zero: bool) -> f64 {
    if den_is_zero {
        if num > 0.0 {
            f64::INFINITY
        } else if num < 0.0 {
            f64::NEG_INFINITY
        } else {
            0.0
        }
    } else {
        num / den
    }
}

fn check_shape(n: usize, m: usize, strict: bool) -> Result<()> {
    if n < m || (strict && n == m) {
        let need = if strict { "n > m" } else { "n >= m" };
        return Err(Error::domain(format!("need {need}, got n = {n}, m = {m}")));
    }
    Ok(())
}

fn guard(n: usize, m: usize) -> Result<()> {
    let count = binomial(n as u64, m as u64);
    if count > ENUMERATION_GUARD {
        return Err(Error::Guard {
            what: "complete U-statistic",
            needed: count,
            limit: ENUMERATION_GUARD,
        });
    }
    Ok(())
}

/// `U_n = C(n,m)^{-1} sum over m-subsets of h`.
pub fn u_statistic<P: Clone>(kernel: &KernelSpec<P>, data: &[P]) -> Result<f64> {
    let (n, m) = (data.len(), kernel.degree());
    check_shape(n, m, false)?;
    guard(n, m)?;
    let mut subsets = Subsets::new(n, m);
    let mut args: Vec<P> = Vec::with_capacity(m);
    let mut total = 0.0;
    while let Some(s) = subsets.next_subset() {
        args.clear();
        args.extend(s.iter().map(|&i| data[i].clone()));
        total += kernel.evaluate(&args);
    }
    Ok(total / binomial_f64(n, m))
}

/// `U_n` and the leave-one-out averages `q_i`, with one kernel evaluation
/// per subset shared among its `m` members.
pub fn leave_one_out<P: Clone>(kernel: &KernelSpec<P>, data: &[P]) -> Result<(f64, Vec<f64>)> {
    let (n, m) = (data.len(), kernel.degree());
    check_shape(n, m, false)?;
    guard(n, m)?;
    let mut q = vec![0.0; n];
    let mut total = 0.0;
    let mut subsets = Subsets::new(n, m);
    let mut args: Vec<P> = Vec::with_capacity(m);
    while let Some(s) = subsets.next_subset() {
        args.clear();
        args.extend(s.iter().map(|&i| data[i].clone()));
        let h = kernel.evaluate(&args);
        total += h;
        for &i in s {
            q[i] += h;
        }
    }
    let per_point = binomial_f64(n - 1, m - 1);
    q.iter_mut().for_each(|v| *v /= per_point);
    Ok((total / binomial_f64(n, m), q))
}

/// Incomplete version of [`leave_one_out`]: `budget` subsets drawn uniformly
/// with replacement. A point that never appears gets `q_i = U_n`.
pub fn leave_one_out_incomplete<P: Clone>(
    kernel: &KernelSpec<P>,
    data: &[P],
    budget: usize,
    seed: u64,
) -> Result<(f64, Vec<f64>)> {
    let (n, m) = (data.len(), kernel.degree());
    check_shape(n, m, false)?;
    if budget == 0 {
        return Err(Error::domain(
            "incomplete U-statistic needs a positive budget",
        ));
    }
    let mut rng = replicate_rng(seed, 0);
    let mut sums = vec![0.0; n];
    let mut counts = vec![0usize; n];
    let mut total = 0.0;
    let mut args: Vec<P> = Vec::with_capacity(m);
    for _ in 0..budget {
        let s = index::sample(&mut rng, n, m);
        args.clear();
        args.extend(s.iter().map(|i| data[i].clone()));
        let h = kernel.evaluate(&args);
        total += h;
        for i in s.iter() {
            sums[i] += h;
            counts[i] += 1;
        }
    }
    let u = total / budget as f64;
    let q = sums
        .iter()
        .zip(&counts)
        .map(|(&s, &c)| if c == 0 { u } else { s / c as f64 })
        .collect();
    Ok((u, q))
}

/// The two printed forms of the jackknife estimate:
/// `(n-1)/(n-m)^2 * sum (q_i - U)^2` and `(n-1)/(n-m)^2 * (sum q_i^2 - n U^2)`.
pub fn sigma_hat_sq_forms(u: f64, q: &[f64], m: usize) -> (f64, f64) {
    let n = q.len();
    let f = jackknife_factor(n, m);
    let centered = q.iter().map(|v| (v - u).powi(2)).sum::<f64>();
    let raw = q.iter().map(|v| v * v).sum::<f64>() - n as f64 * u * u;
    (f * centered, f * raw)
}

/// Assembles the Studentized result from `U_n` and `q`.
pub fn studentize_from_parts(u: f64, q: Vec<f64>, m: usize) -> Result<StudentizedResult> {
    let n = q.len();
    check_shape(n, m, true)?;
    let (sigma_sq, _) = sigma_hat_sq_forms(u, &q, m);
    let sigma_sq = sigma_sq.max(0.0);
    let root_n = (n as f64).sqrt();
    let mf = m as f64;
    let t_n = ratio_with_convention(root_n * u, mf * sigma_sq.sqrt(), sigma_is_zero(sigma_sq, u));
    let star_sq = jackknife_factor(n, m) * q.iter().map(|v| v * v).sum::<f64>();
    let t_star = ratio_with_convention(root_n * u, mf * star_sq.sqrt(), star_sq == 0.0);
    Ok(StudentizedResult {
        u_n: u,
        q,
        sigma_hat_sq: sigma_sq,
        t_n,
        t_n_star: t_star,
        n,
        m,
        incomplete: None,
    })
}

/// Exact `U_n`, `q_i`, `sigma_hat^2`, `T_n` and `T_n*`.
///
/// `T_n = sqrt(n) U_n / (m sigma_hat)`; when `sigma_hat` vanishes `T_n` is
/// `+inf`/`-inf` by the sign of `U_n`, or `0` when `U_n = 0`.
pub fn studentize<P: Clone>(kernel: &KernelSpec<P>, data: &[P]) -> Result<StudentizedResult> {
    check_shape(data.len(), kernel.degree(), true)?;
    let (u, q) = leave_one_out(kernel, data)?;
    studentize_from_parts(u, q, kernel.degree())
}

/// Exact when `C(n,m)` is within the enumeration guard, otherwise an
/// incomplete statistic from `budget` sampled subsets (flagged in the result).
pub fn studentize_auto<P: Clone>(
    kernel: &KernelSpec<P>,
    data: &[P],
    budget: usize,
    seed: u64,
) -> Result<StudentizedResult> {
    let (n, m) = (data.len(), kernel.degree());
    check_shape(n, m, true)?;
    if binomial(n as u64, m as u64) <= ENUMERATION_GUARD {
        return studentize(kernel, data);
    }
    let (u, q) = leave_one_out_incomplete(kernel, data, budget, seed)?;
    let mut r = studentize_from_parts(u, q, m)?;
    r.incomplete = Some(IncompleteInfo {
        subsets_sampled: budget,
        seed,
    });
    Ok(r)
}

/// `T_student = sqrt(n) mean / s` with `s^2` the unbiased sample variance.
/// All-equal data give `+inf`, `-inf` or `0` by the sign of the mean.
pub fn t_statistic(data: &[f64]) -> Result<f64> {
    let n = data.len();
    if n < 2 {
        return Err(Error::domain(format!("t statistic needs n >= 2, got {n}")));
    }
    let mean = data.iter().sum::<f64>() / n as f64;
    let all_equal = data.iter().all(|&v| v == data[0]);
    let s = (data.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt();
    Ok(ratio_with_convention(
        (n as f64).sqrt() * mean,
        s,
        all_equal,
    ))
}

/// `S_n / V_n` with `S_n = sum X_i`, `V_n^2 = sum X_i^2`; zero when `V_n = 0`.
pub fn self_normalized_sum(data: &[f64]) -> f64 {
    let s: f64 = data.iter().sum();
    let v = data.iter().map(|x| x * x).sum::<f64>().sqrt();
    ratio_with_convention(s, v, v == 0.0)
}

/// `T_student = (S/V) sqrt((n-1)/(n - (S/V)^2))`, infinite when `(S/V)^2 = n`.
pub fn t_from_self_normalized(sv: f64, n: usize) -> f64 {
    let nf = n as f64;
    let gap = nf - sv * sv;
    let tol = 1e-12 * nf;
    if gap <= tol {
        return ratio_with_convention(sv, 0.0, true);
    }
    sv * ((nf - 1.0) / gap).sqrt()
}

/// `k = m^2 (n-1)/(n-m)^2`, the coefficient linking `T_n` and `T_n*`.
pub fn star_coefficient(n: usize, m: usize) -> f64 {
    (m * m) as f64 * jackknife_factor(n, m)
}

/// `T_n = T_n* / sqrt(1 - k T_n*^2)`, infinite by sign once `k T_n*^2 >= 1`.
pub fn tn_from_tn_star(t_star: f64, n: usize, m: usize) -> f64 {
    if t_star == 0.0 {
        return 0.0;
    }
    let gap = 1.0 - star_coefficient(n, m) * t_star * t_star;
    if gap <= SIGMA_ZERO_TOLERANCE {
        return ratio_with_convention(t_star, 0.0, true);
    }
    t_star / gap.sqrt()
}

/// `b_{m,n}(x) = (1 + k x^2)^{-1/2}`; for `x >= 0`, `T_n > x` exactly when
/// `T_n* > x b_{m,n}(x)`.
pub fn b_mn(x: f64, n: usize, m: usize) -> f64 {
    (1.0 + star_coefficient(n, m) * x * x).powf(-0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{builtin_kernel, BuiltinKernel};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn k(which: BuiltinKernel) -> KernelSpec {
        builtin_kernel(which).unwrap()
    }

    #[test]
    fn u_statistic_examples() {
        let data = [1.0, 2.0, 3.0];
        assert_abs_diff_eq!(
            u_statistic(&k(BuiltinKernel::Sum { m: 2 }), &data).unwrap(),
            4.0
        );
        assert_abs_diff_eq!(
            u_statistic(&k(BuiltinKernel::Variance), &data).unwrap(),
            1.0
        );
        let g = k(BuiltinKernel::Gini);
        assert_eq!(u_statistic(&g, &[2.0, 7.0]).unwrap(), 5.0);
        assert!(u_statistic(&k(BuiltinKernel::Sum { m: 3 }), &[1.0, 2.0]).is_err());
    }

    #[test]
    fn guard_is_enforced() {
        let data: Vec<f64> = (0..200).map(|i| i as f64).collect();
        let r = u_statistic(&k(BuiltinKernel::Sum { m: 4 }), &data);
        assert!(matches!(r, Err(Error::Guard { .. })));
    }

    #[test]
    fn variance_kernel_studentized() {
        let r = studentize(&k(BuiltinKernel::Variance), &[1.0, 2.0, 3.0]).unwrap();
        for (a, b) in r.q.iter().zip([1.25, 0.5, 1.25]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(r.u_n, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.sigma_hat_sq, 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(r.t_n, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(tn_from_tn_star(r.t_n_star, 3, 2), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn studentize_rejects_n_equal_m() {
        assert!(studentize(&k(BuiltinKernel::Variance), &[1.0, 2.0]).is_err());
    }

    #[test]
    fn constant_data_conventions() {
        let s1 = k(BuiltinKernel::Sum { m: 1 });
        let r = studentize(&s1, &[2.5; 4]).unwrap();
        assert!(r.sigma_is_zero());
        assert_eq!(r.t_n, f64::INFINITY);
        let r = studentize(&s1, &[-2.5; 4]).unwrap();
        assert_eq!(r.t_n, f64::NEG_INFINITY);
        let r = studentize(&s1, &[0.0; 4]).unwrap();
        assert_eq!(r.t_n, 0.0);
        assert_eq!(r.t_n_star, 0.0);
        assert_eq!(tn_from_tn_star(0.0, 4, 1), 0.0);
        let r = studentize(&s1, &[2.5; 4]).unwrap();
        assert_eq!(tn_from_tn_star(r.t_n_star, 4, 1), f64::INFINITY);
    }

    #[test]
    fn n_equals_m_is_single_subset() {
        let g = k(BuiltinKernel::Gini);
        assert_eq!(u_statistic(&g, &[1.0, -3.0]).unwrap(), 4.0);
    }

    #[test]
    fn t_statistic_examples() {
        assert_eq!(t_statistic(&[1.0, -1.0]).unwrap(), 0.0);
        assert_eq!(self_normalized_sum(&[1.0, -1.0]), 0.0);
        assert_eq!(t_statistic(&[3.0; 5]).unwrap(), f64::INFINITY);
        assert_eq!(t_statistic(&[-3.0; 5]).unwrap(), f64::NEG_INFINITY);
        assert!(t_statistic(&[1.0]).is_err());
        assert_eq!(self_normalized_sum(&[0.0, 0.0]), 0.0);
        let p: f64 = 0.01;
        let c = (p / (1.0 - p)).sqrt();
        assert_abs_diff_eq!(self_normalized_sum(&[c; 100]), 10.0, epsilon = 1e-12);
        assert_eq!(t_from_self_normalized(10.0, 100), f64::INFINITY);
    }

    #[test]
    fn identity_kernel_matches_sample_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s1 = k(BuiltinKernel::Sum { m: 1 });
        for _ in 0..50 {
            let n = rng.gen_range(2..15);
            let data: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..3.0)).collect();
            let r = studentize(&s1, &data).unwrap();
            let mean = data.iter().sum::<f64>() / n as f64;
            let s2 = data.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
            assert_abs_diff_eq!(r.sigma_hat_sq, s2, epsilon = 1e-12);
            assert_abs_diff_eq!(r.t_n, t_statistic(&data).unwrap(), epsilon = 1e-10);
        }
    }

    #[test]
    fn random_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let kernels = [
            k(BuiltinKernel::Sum { m: 2 }),
            k(BuiltinKernel::Sum { m: 3 }),
            k(BuiltinKernel::Variance),
            k(BuiltinKernel::Gini),
            k(BuiltinKernel::Wilcoxon),
        ];
        for trial in 0..1000 {
            let kern = &kernels[trial % kernels.len()];
            let m = kern.degree();
            let n = rng.gen_range(m + 1..=12);
            let data: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..2.0)).collect();
            let r = studentize(kern, &data).unwrap();
            let (a, b) = sigma_hat_sq_forms(r.u_n, &r.q, m);
            assert!((a - b).abs() <= 1e-9, "{a} {b}");
            // U is the mean of the q_i
            assert_abs_diff_eq!(r.q.iter().sum::<f64>() / n as f64, r.u_n, epsilon = 1e-12);
            let back = tn_from_tn_star(r.t_n_star, n, m);
            if r.t_n.is_finite() {
                assert!((back - r.t_n).abs() <= 1e-9 * (1.0 + r.t_n.abs()));
            }
            if kern.name().starts_with("sum") {
                let t = t_statistic(&data).unwrap();
                assert!((r.t_n - t).abs() <= 1e-9 * (1.0 + t.abs()), "{} {t}", r.t_n);
                // scale invariance
                let scaled: Vec<f64> = data.iter().map(|v| 3.7 * v).collect();
                let r2 = studentize(kern, &scaled).unwrap();
                assert!((r2.t_n - r.t_n).abs() <= 1e-9 * (1.0 + r.t_n.abs()));
            }
            for x in [0.0, 0.3, 1.0, 2.5] {
                let lhs = r.t_n > x;
                let rhs = r.t_n_star > x * b_mn(x, n, m);
                let boundary = (r.t_n - x).abs() < 1e-9;
                assert!(boundary || lhs == rhs);
            }
            let sv = self_normalized_sum(&data);
            let t = t_statistic(&data).unwrap();
            assert!((t_from_self_normalized(sv, n) - t).abs() <= 1e-9 * (1.0 + t.abs()));
        }
    }

    #[test]
    fn incomplete_path_is_flagged_and_close() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let data: Vec<f64> = (0..60).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let s3 = k(BuiltinKernel::Sum { m: 3 });
        let exact = studentize(&s3, &data).unwrap();
        let (u, q) = leave_one_out_incomplete(&s3, &data, 200_000, 11).unwrap();
        assert!((u - exact.u_n).abs() < 0.01);
        assert!(q.iter().zip(&exact.q).all(|(a, b)| (a - b).abs() < 0.05));
        let big: Vec<f64> = (0..400).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = studentize_auto(&s3, &big, 50_000, 5).unwrap();
        assert_eq!(
            r.incomplete,
            Some(IncompleteInfo {
                subsets_sampled: 50_000,
                seed: 5
            })
        );
        assert_eq!(studentize_auto(&s3, &data, 10, 5).unwrap().incomplete, None);
        let again = studentize_auto(&s3, &big, 50_000, 5).unwrap();
        assert_eq!(again, r);
    }

    #[test]
    fn json_uses_extended_reals() {
        let s1 = k(BuiltinKernel::Sum { m: 1 });
        let r = studentize(&s1, &[2.0; 3]).unwrap();
        let j = serde_json::to_value(&r).unwrap();
        assert_eq!(j["T_n"], "+inf");
        let back: StudentizedResult = serde_json::from_value(j).unwrap();
        assert_eq!(back.t_n, f64::INFINITY);
    }
}
