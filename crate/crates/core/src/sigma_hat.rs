//! The jackknife variance estimate as a degree-`2m` U-statistic, and the
//! constants that control its lower tail.
//!
//! `frak_h` is non-negative for `m = 1` and at `n = 2m`. For `m >= 2` and
//! `n > 2m` it can take negative values (see the frozen counterexample in
//! the tests), so [`check_representation`] reports its minimum.
//!
//! ```text
//! sigma_hat^2 = A(n,m) * C(n,2m)^{-1} * sum over 2m-subsets of frak_h
//! frak_h      = (n-2m+1) * { tilde_h - (m^2/n) * breve_h }
//! ```

use serde::{Deserialize, Serialize};

use crate::combinatorics::{binomial, binomial_f64, check_guard, for_each_subset, for_each_tuple};
use crate::distributions::{fill_row, replicate_rng, DiscreteDistribution, Law};
use crate::error::{Error, Result};
use crate::kernels::{center, decompose, is_nondegenerate, KernelSpec};
use crate::ustat::studentize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailConstants {
    pub m: usize,
    /// `b_m` as a reduced fraction.
    pub b_numerator: u128,
    pub b_denominator: u128,
    pub b_m: f64,
    pub c_m: f64,
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn factorial_f64(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// `b_m` and `c_m = sqrt(b_m / (m^2 + 1))`.
///
/// `b_m = 1/2` for `m <= 2`; otherwise the product of `j/(m+j-2)` over
/// `j = 3..=m`.
pub fn tail_constants(m: usize) -> Result<TailConstants> {
    if m == 0 {
        return Err(Error::domain("m must be at least 1"));
    }
    let (mut num, mut den) = (1u128, 2u128);
    if m >= 3 {
        (num, den) = (1, 1);
        for j in 3..=m {
            num *= j as u128;
            den *= (m + j - 2) as u128;
            let g = gcd(num, den);
            num /= g;
            den /= g;
        }
    }
    let b_m = num as f64 / den as f64;
    Ok(TailConstants {
        m,
        b_numerator: num,
        b_denominator: den,
        b_m,
        c_m: (b_m / ((m * m + 1) as f64)).sqrt(),
    })
}

/// `(m!)^2 / (2 (2m-2)!)`; equals `b_m` for `m >= 3` but not for `m = 2`.
pub fn b_closed_form(m: usize) -> f64 {
    factorial_f64(m).powi(2) / (2.0 * factorial_f64(2 * m - 2))
}

/// `A(n,m) = (n-1) / ((n-m)^2 (n-2m+1)) * C(n,2m) / C(n-1,m-1)^2`.
pub fn a_factor(n: usize, m: usize) -> Result<f64> {
    if m == 0 || n <= 2 * m {
        return Err(Error::domain(format!(
            "A(n,m) needs n > 2m, got n = {n}, m = {m}"
        )));
    }
    a_factor_raw(n, m)
}

fn a_factor_raw(n: usize, m: usize) -> Result<f64> {
    let c2m = binomial(n as u64, 2 * m as u64);
    let c1 = binomial((n - 1) as u64, (m - 1) as u64);
    if c2m == u128::MAX || c1 == u128::MAX {
        return Err(Error::domain("binomial overflow in A(n,m)"));
    }
    // C(n,2m) / C(n-1,m-1)^2 reduced in integers before converting
    let g = gcd(c2m, c1);
    let (top, c1r) = (c2m / g, c1 / g);
    let g2 = gcd(top, c1);
    let ratio = (top / g2) as f64 / (c1r as f64 * (c1 / g2) as f64);
    let (nf, mf) = (n as f64, m as f64);
    Ok((nf - 1.0) / ((nf - mf).powi(2) * (nf - 2.0 * mf + 1.0)) * ratio)
}

/// Factorial form `((m-1)!)^2/(2m)! * n ((n-m-1)!)^2 / ((n-2)! (n-2m+1)!)`.
pub fn a_factor_closed(n: usize, m: usize) -> Result<f64> {
    if m == 0 || n <= 2 * m {
        return Err(Error::domain(format!(
            "A(n,m) needs n > 2m, got n = {n}, m = {m}"
        )));
    }
    let lead = factorial_f64(m - 1).powi(2) / factorial_f64(2 * m);
    // n ((n-m-1)!)^2 / ((n-2)! (n-2m+1)!) as a telescoped product
    let mut r = n as f64;
    let mut top: Vec<f64> = (1..=n - m - 1).map(|i| i as f64).collect();
    top.extend((1..=n - m - 1).map(|i| i as f64));
    let mut bottom: Vec<f64> = (1..=n - 2).map(|i| i as f64).collect();
    bottom.extend((1..=n - 2 * m + 1).map(|i| i as f64));
    top.sort_by(f64::total_cmp);
    bottom.sort_by(f64::total_cmp);
    for i in 0..top.len().max(bottom.len()) {
        r *= top.get(i).unwrap_or(&1.0) / bottom.get(i).unwrap_or(&1.0);
    }
    Ok(lead * r)
}

/// `((m-1)!)^2 b_m / (2m)!`, a lower bound on `A(n,m)` once `n > max(2, m^2)`.
pub fn a_lower_bound(m: usize) -> Result<f64> {
    let c = tail_constants(m)?;
    Ok(factorial_f64(m - 1).powi(2) * c.b_m / factorial_f64(2 * m))
}

/// `frak_h` for a base kernel of degree `m` and a sample size `n`.
#[derive(Debug, Clone)]
pub struct SigmaHatKernel {
    kernel: KernelSpec,
    n: usize,
    m: usize,
    a: f64,
}

impl SigmaHatKernel {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn base(&self) -> &KernelSpec {
        &self.kernel
    }

    /// Sum over disjoint `(S1, S2, S3)` of `{0..k}` with `|S1| = 2m-k`,
    /// `|S2| = |S3| = k-m`, `S2` and `S3` ordered, of
    /// `h(x_S1, x_S2) h(x_S1, x_S3)`.
    fn triple_sum(&self, x: &[f64]) -> f64 {
        let (k, m) = (x.len(), self.m);
        let mut total = 0.0;
        let mut left = Vec::with_capacity(m);
        let mut right = Vec::with_capacity(m);
        for_each_subset(k, 2 * m - k, |s1| {
            let rest: Vec<usize> = (0..k).filter(|i| !s1.contains(i)).collect();
            for_each_subset(rest.len(), k - m, |s2| {
                left.clear();
                right.clear();
                left.extend(s1.iter().map(|&i| x[i]));
                right.extend(s1.iter().map(|&i| x[i]));
                for (pos, &i) in rest.iter().enumerate() {
                    if s2.contains(&pos) {
                        left.push(x[i]);
                    } else {
                        right.push(x[i]);
                    }
                }
                total += self.kernel.evaluate(&left) * self.kernel.evaluate(&right);
            });
        });
        total
    }

    /// `tilde H_k` on `k` points, `m <= k <= 2m-1`.
    pub fn h_tilde_k(&self, x: &[f64]) -> f64 {
        (2 * self.m - x.len()) as f64 * self.triple_sum(x)
    }

    /// `breve H_k` on `k` points, `m <= k <= 2m`.
    pub fn h_breve_k(&self, x: &[f64]) -> f64 {
        self.triple_sum(x)
    }

    fn lift(&self, x: &[f64], top: usize, f: impl Fn(&[f64]) -> f64) -> f64 {
        let m = self.m;
        let mut total = 0.0;
        let mut pts = Vec::with_capacity(2 * m);
        for k in m..=top {
            let weight = 1.0 / binomial_f64(self.n - k, 2 * m - k);
            let mut inner = 0.0;
            for_each_subset(2 * m, k, |s| {
                pts.clear();
                pts.extend(s.iter().map(|&i| x[i]));
                inner += f(&pts);
            });
            total += weight * inner;
        }
        total
    }

    /// `tilde frak_h` on `2m` points.
    pub fn frak_h_tilde(&self, x: &[f64]) -> f64 {
        self.lift(x, 2 * self.m - 1, |p| self.h_tilde_k(p))
    }

    /// `breve frak_h` on `2m` points.
    pub fn frak_h_breve(&self, x: &[f64]) -> f64 {
        self.lift(x, 2 * self.m, |p| self.h_breve_k(p))
    }

    /// `frak_h(x_1..x_2m) = (n-2m+1) { tilde - (m^2/n) breve }`.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), 2 * self.m, "frak_h takes 2m arguments");
        let (n, m) = (self.n as f64, self.m as f64);
        (n - 2.0 * m + 1.0) * (self.frak_h_tilde(x) - m * m / n * self.frak_h_breve(x))
    }

    /// `A(n,m) * C(n,2m)^{-1} * sum over 2m-subsets of frak_h` for data of
    /// length `n`.
    pub fn sigma_hat_sq(&self, data: &[f64]) -> Result<f64> {
        if data.len() != self.n {
            return Err(Error::domain(format!(
                "kernel built for n = {}, data has {} points",
                self.n,
                data.len()
            )));
        }
        let m2 = 2 * self.m;
        check_guard(
            "sigma-hat kernel U-statistic",
            binomial(self.n as u64, m2 as u64),
        )?;
        let mut total = 0.0;
        let mut pts = Vec::with_capacity(m2);
        for_each_subset(self.n, m2, |s| {
            pts.clear();
            pts.extend(s.iter().map(|&i| data[i]));
            total += self.evaluate(&pts);
        });
        Ok(self.a * total / binomial_f64(self.n, m2))
    }
}

/// Builds `frak_h` for sample size `n`. Needs `n > max(2, m^2)`.
///
/// The representation of `sigma_hat^2` is an algebraic identity and holds
/// for any kernel; the mean formula in [`mean_of_frak_h`] needs centering.
pub fn build_sigma_hat_kernel(kernel: &KernelSpec, n: usize) -> Result<SigmaHatKernel> {
    let m = kernel.degree();
    if n <= 2.max(m * m) {
        return Err(Error::domain(format!(
            "sigma-hat kernel needs n > max(2, m^2), got n = {n}, m = {m}"
        )));
    }
    Ok(SigmaHatKernel {
        kernel: kernel.clone(),
        n,
        m,
        a: a_factor(n, m)?,
    })
}

/// Builds `frak_h` for any `n >= 2m`, including the boundary `n = 2m`
/// where `A(n,m) frak_h` is the jackknife estimate of the `2m` arguments
/// themselves. No moment or tail statement is attached to this range.
pub fn build_sigma_hat_kernel_unchecked(kernel: &KernelSpec, n: usize) -> Result<SigmaHatKernel> {
    let m = kernel.degree();
    if n < 2 * m {
        return Err(Error::domain(format!(
            "frak_h needs n >= 2m, got n = {n}, m = {m}"
        )));
    }
    Ok(SigmaHatKernel {
        kernel: kernel.clone(),
        n,
        m,
        a: a_factor_raw(n, m)?,
    })
}

/// The summands of the closed-form `E[frak_h]`, one per `k = m..2m-1`:
/// `(n-2m+1) (2m)! / ((2m-k)! (k-m)!)^2 / C(n-k, 2m-k) * (2m-k-m^2/n) * E[h_{2m-k}^2]`,
/// for the kernel centered under `dist` and scaled to `sigma = 1`.
pub fn mean_of_frak_h_terms(
    kernel: &KernelSpec,
    dist: &DiscreteDistribution,
    n: usize,
) -> Result<Vec<f64>> {
    let m = kernel.degree();
    if n <= 2.max(m * m) {
        return Err(Error::domain(format!(
            "E[frak_h] needs n > max(2, m^2), got n = {n}, m = {m}"
        )));
    }
    let centered = center(kernel, dist)?;
    let dec = decompose(&centered, dist)?;
    if !is_nondegenerate(&dec) {
        return Err(Error::domain("degenerate kernel: sigma = 0"));
    }
    let s2 = dec.sigma_sq();
    let (nf, mf) = (n as f64, m as f64);
    Ok((m..2 * m)
        .map(|k| {
            let j = 2 * m - k;
            let comb = factorial_f64(2 * m) / (factorial_f64(j) * factorial_f64(k - m)).powi(2);
            (nf - 2.0 * mf + 1.0) * comb / binomial_f64(n - k, j)
                * (j as f64 - mf * mf / nf)
                * dec.abs_moment(j, 2.0)
                / s2
        })
        .collect())
}

/// Closed-form `E[frak_h]` for the centered, `sigma`-normalized kernel.
pub fn mean_of_frak_h(kernel: &KernelSpec, dist: &DiscreteDistribution, n: usize) -> Result<f64> {
    Ok(mean_of_frak_h_terms(kernel, dist, n)?.iter().sum())
}

/// `(2m)!/((m-1)!)^2 * (1 - m^2/n)`, the lower bound on `E[frak_h]`.
pub fn mean_of_frak_h_lower_bound(m: usize, n: usize) -> f64 {
    let mf = m as f64;
    factorial_f64(2 * m) / factorial_f64(m - 1).powi(2) * (1.0 - mf * mf / n as f64)
}

/// `E[frak_h]` by enumerating the `2m`-fold product support; the
/// brute-force counterpart of [`mean_of_frak_h`].
pub fn mean_of_frak_h_enumerated(
    kernel: &KernelSpec,
    dist: &DiscreteDistribution,
    n: usize,
) -> Result<f64> {
    let m = kernel.degree();
    check_guard(
        "frak_h enumeration",
        (dist.len() as u128)
            .saturating_pow(2 * m as u32)
            .saturating_mul(64),
    )?;
    let centered = center(kernel, dist)?;
    let dec = decompose(&centered, dist)?;
    if !is_nondegenerate(&dec) {
        return Err(Error::domain("degenerate kernel: sigma = 0"));
    }
    let normalized = centered.scaled(1.0 / dec.sigma_sq().sqrt());
    let fh = build_sigma_hat_kernel(&normalized, n)?;
    let atoms = dist.atoms();
    let mut pts = vec![0.0; 2 * m];
    let mut total = 0.0;
    for_each_tuple(atoms.len(), 2 * m, |t| {
        let mut w = 1.0;
        for (slot, &i) in pts.iter_mut().zip(t) {
            *slot = atoms[i].0;
            w *= atoms[i].1;
        }
        total += w * fh.evaluate(&pts);
    });
    Ok(total)
}

/// Empirical check of the representation on random data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepresentationCheck {
    pub n: usize,
    pub m: usize,
    pub datasets: usize,
    /// `max |A U(frak_h) - sigma_hat^2| / max(1, sigma_hat^2)`.
    pub max_error: f64,
    pub tuples: usize,
    pub min_value: f64,
    /// Tuples with `frak_h < -NEGATIVITY_TOLERANCE`.
    pub negatives: usize,
    pub worst_tuple: Vec<f64>,
}

pub const NEGATIVITY_TOLERANCE: f64 = 1e-10;

/// Compares `A(n,m) U(frak_h)` with the jackknife estimate on `datasets`
/// samples of size `n` and evaluates `frak_h` on `tuples` random `2m`-tuples.
/// Dataset `i` uses stream `i`, tuple `j` stream `datasets + j`.
pub fn check_representation(
    kernel: &KernelSpec,
    n: usize,
    law: &Law,
    datasets: usize,
    tuples: usize,
    seed: u64,
) -> Result<RepresentationCheck> {
    let sk = build_sigma_hat_kernel(kernel, n)?;
    let m = kernel.degree();
    let mut max_error: f64 = 0.0;
    let mut data = vec![0.0; n];
    for i in 0..datasets {
        fill_row(law, &mut replicate_rng(seed, i as u64), &mut data);
        let jack = studentize(kernel, &data)?.sigma_hat_sq;
        let rep = sk.sigma_hat_sq(&data)?;
        max_error = max_error.max((rep - jack).abs() / jack.abs().max(1.0));
    }
    let mut min_value = f64::INFINITY;
    let mut negatives = 0;
    let mut worst_tuple = Vec::new();
    let mut pts = vec![0.0; 2 * m];
    for j in 0..tuples {
        fill_row(
            law,
            &mut replicate_rng(seed, (datasets + j) as u64),
            &mut pts,
        );
        let v = sk.evaluate(&pts);
        if v < -NEGATIVITY_TOLERANCE {
            negatives += 1;
        }
        if v < min_value {
            min_value = v;
            worst_tuple = pts.clone();
        }
    }
    Ok(RepresentationCheck {
        n,
        m,
        datasets,
        max_error,
        tuples,
        min_value,
        negatives,
        worst_tuple,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{builtin_kernel, BuiltinKernel, PolynomialKernel};
    use crate::ustat::studentize;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constants() {
        let c1 = tail_constants(1).unwrap();
        assert_eq!((c1.b_numerator, c1.b_denominator), (1, 2));
        assert_abs_diff_eq!(c1.c_m, 0.5, epsilon = 1e-15);
        assert_eq!(tail_constants(2).unwrap().b_m, 0.5);
        let c3 = tail_constants(3).unwrap();
        assert_eq!((c3.b_numerator, c3.b_denominator), (3, 4));
        let c4 = tail_constants(4).unwrap();
        assert_eq!((c4.b_numerator, c4.b_denominator), (2, 5));
        for m in 3..=6 {
            assert_abs_diff_eq!(
                tail_constants(m).unwrap().b_m,
                b_closed_form(m),
                epsilon = 1e-14
            );
        }
        // the closed form does not reproduce b_2
        assert_eq!(b_closed_form(2), 1.0);
        for m in 1..=8 {
            let c = tail_constants(m).unwrap().c_m;
            assert!(c > 0.0 && c < 1.0);
        }
        assert!(tail_constants(0).is_err());
    }

    #[test]
    fn a_factor_values() {
        assert_abs_diff_eq!(a_factor(4, 1).unwrap(), 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(a_factor(5, 2).unwrap(), 5.0 / 72.0, epsilon = 1e-15);
        for n in 3..30 {
            assert_abs_diff_eq!(
                a_factor(n, 1).unwrap(),
                n as f64 / (2.0 * (n as f64 - 1.0)),
                epsilon = 1e-14
            );
        }
        for m in 1..=3 {
            for n in 2 * m + 1..=20 {
                let a = a_factor(n, m).unwrap();
                let b = a_factor_closed(n, m).unwrap();
                assert!((a - b).abs() <= 1e-12 * a.max(1.0), "n={n} m={m}");
                if n > 2.max(m * m) {
                    assert!(a >= a_lower_bound(m).unwrap() - 1e-15);
                }
            }
        }
        assert!(a_factor(4, 2).is_err());
        assert!(a_factor_closed(2, 1).is_err());
    }

    #[test]
    fn m_one_kernel_is_scaled_square_difference() {
        let s = builtin_kernel(BuiltinKernel::Sum { m: 1 }).unwrap();
        let fh = build_sigma_hat_kernel(&s, 7).unwrap();
        for (a, b) in [(1.0, 2.5), (-3.0, 0.2), (4.0, 4.0)] {
            let expect = 6.0 / 7.0 * (a - b) * (a - b);
            assert_abs_diff_eq!(fh.evaluate(&[a, b]), expect, epsilon = 1e-12);
        }
        let fh3 = build_sigma_hat_kernel(&s, 3).unwrap();
        assert_abs_diff_eq!(fh3.evaluate(&[1.7, 1.7]), 0.0, epsilon = 1e-14);
        assert!(build_sigma_hat_kernel(&s, 2).is_err());
        let v = builtin_kernel(BuiltinKernel::Variance).unwrap();
        assert!(build_sigma_hat_kernel(&v, 4).is_err());
    }

    #[test]
    fn representation_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let kernels = [
            builtin_kernel(BuiltinKernel::Sum { m: 1 }).unwrap(),
            builtin_kernel(BuiltinKernel::Variance).unwrap(),
            builtin_kernel(BuiltinKernel::Gini).unwrap(),
            PolynomialKernel {
                m: 2,
                coefficients: [("1,1".to_string(), 1.0), ("2,0".to_string(), 0.3)]
                    .into_iter()
                    .collect(),
            }
            .build()
            .unwrap(),
        ];
        for trial in 0..40 {
            let k = &kernels[trial % kernels.len()];
            let m = k.degree();
            let n = rng.gen_range(3.max(m * m + 1)..=9);
            let data: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let direct = studentize(k, &data).unwrap().sigma_hat_sq;
            let via = build_sigma_hat_kernel(k, n)
                .unwrap()
                .sigma_hat_sq(&data)
                .unwrap();
            assert!(
                (direct - via).abs() <= 1e-9 * direct.max(1.0),
                "{direct} {via}"
            );
        }
    }

    #[test]
    fn symmetric_in_arguments() {
        let k = builtin_kernel(BuiltinKernel::Gini).unwrap();
        let fh = build_sigma_hat_kernel(&k, 8).unwrap();
        let x = [0.3, -1.2, 2.0, 0.9];
        let base = fh.evaluate(&x);
        for p in [[1, 0, 2, 3], [3, 2, 1, 0], [2, 3, 0, 1]] {
            let y: Vec<f64> = p.iter().map(|&i| x[i]).collect();
            assert_abs_diff_eq!(fh.evaluate(&y), base, epsilon = 1e-12);
        }
    }

    #[test]
    fn mean_closed_form_matches_enumeration() {
        let d = DiscreteDistribution::new(vec![(-1.0, 0.3), (0.5, 0.5), (2.0, 0.2)], "t").unwrap();
        let kernels = [
            builtin_kernel(BuiltinKernel::Sum { m: 1 }).unwrap(),
            builtin_kernel(BuiltinKernel::Gini).unwrap(),
            builtin_kernel(BuiltinKernel::Variance).unwrap(),
        ];
        for k in &kernels {
            let m = k.degree();
            for n in [m * m + 1, m * m + 3, 12].into_iter().filter(|&n| n > 2) {
                let closed = mean_of_frak_h(k, &d, n).unwrap();
                let brute = mean_of_frak_h_enumerated(k, &d, n).unwrap();
                assert!(
                    (closed - brute).abs() <= 1e-9 * closed.abs().max(1.0),
                    "{closed} {brute}"
                );
                assert!(closed >= mean_of_frak_h_lower_bound(m, n) - 1e-12);
                assert!(mean_of_frak_h_terms(k, &d, n)
                    .unwrap()
                    .iter()
                    .all(|&t| t > 0.0));
            }
        }
        // m = 1 reduces to 2 (1 - 1/n)
        let s = builtin_kernel(BuiltinKernel::Sum { m: 1 }).unwrap();
        assert_abs_diff_eq!(mean_of_frak_h(&s, &d, 10).unwrap(), 1.8, epsilon = 1e-12);
    }

    #[test]
    fn nonnegative_at_boundary_and_for_degree_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let kernels = [
            builtin_kernel(BuiltinKernel::Variance).unwrap(),
            builtin_kernel(BuiltinKernel::Gini).unwrap(),
            builtin_kernel(BuiltinKernel::Sum { m: 2 }).unwrap(),
            builtin_kernel(BuiltinKernel::Wilcoxon).unwrap(),
        ];
        for k in &kernels {
            let fh = build_sigma_hat_kernel_unchecked(k, 4).unwrap();
            for _ in 0..500 {
                let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-3.0..3.0)).collect();
                let v = fh.evaluate(&x);
                assert!(v >= -1e-10);
                // at n = 2m, A frak_h is the jackknife estimate of the four points
                let direct = studentize(k, &x).unwrap().sigma_hat_sq;
                assert!((fh.a() * v - direct).abs() <= 1e-9 * direct.max(1.0));
            }
        }
        let s = builtin_kernel(BuiltinKernel::Sum { m: 1 }).unwrap();
        for n in 3..40 {
            let fh = build_sigma_hat_kernel(&s, n).unwrap();
            let x = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
            assert!(fh.evaluate(&x) >= 0.0);
        }
    }

    #[test]
    fn can_be_negative_beyond_boundary() {
        // frozen from an independent evaluation of the same definition
        let k = builtin_kernel(BuiltinKernel::Variance).unwrap();
        let x = [
            2.7800218437300304,
            -2.433253825475498,
            -2.7463674513069165,
            2.467152297654456,
        ];
        let fh = build_sigma_hat_kernel(&k, 10).unwrap();
        assert_abs_diff_eq!(fh.evaluate(&x), -866.2469880716864, epsilon = 1e-9);
        let fh4 = build_sigma_hat_kernel_unchecked(&k, 4).unwrap();
        assert_abs_diff_eq!(fh4.evaluate(&x), 10.650428877622744, epsilon = 1e-9);
    }
}
