//! Standard normal functions and the scaled complementary error function.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;

pub fn normal_pdf(w: f64) -> f64 {
    (-0.5 * w * w).exp() / (2.0 * PI).sqrt()
}

/// `Phi(w)`.
pub fn normal_cdf(w: f64) -> f64 {
    0.5 * libm::erfc(-w * FRAC_1_SQRT_2)
}

/// `1 - Phi(w)`, accurate in the far right tail.
pub fn normal_sf(w: f64) -> f64 {
    0.5 * libm::erfc(w * FRAC_1_SQRT_2)
}

/// `erfcx(x) = exp(x^2) erfc(x)`, finite for all `x` where the result is
/// representable.
pub fn erfcx(x: f64) -> f64 {
    if x < 0.0 {
        // erfc(-y) = 2 - erfc(y)
        return 2.0 * (x * x).exp() - erfcx(-x);
    }
    if x < 5.0 {
        return (x * x).exp() * libm::erfc(x);
    }
    // Laplace continued fraction, evaluated bottom-up:
    // erfcx(x) = (1/sqrt(pi)) / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
    let mut tail = x;
    for k in (1..=60).rev() {
        tail = x + (k as f64 / 2.0) / tail;
    }
    FRAC_1_SQRT_PI / tail
}

/// `e^{t^2/2} (1 - Phi(t))` without overflow for large `t`.
pub fn mills_scaled_sf(t: f64) -> f64 {
    0.5 * erfcx(t * FRAC_1_SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn basic_values() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert_abs_diff_eq!(normal_pdf(0.0), 0.398_942_280_401_432_7, epsilon = 1e-16);
        // reference values (mpmath, 30 digits)
        assert_abs_diff_eq!(normal_cdf(1.0), 0.841_344_746_068_542_9, epsilon = 1e-15);
        assert_abs_diff_eq!(normal_sf(3.0), 1.349_898_031_630_094_6e-3, epsilon = 1e-17);
        assert!((normal_sf(10.0) / 7.619_853_024_160_526e-24 - 1.0).abs() < 1e-13);
        for i in -400..=400 {
            let w = i as f64 * 0.05;
            assert!((normal_cdf(w) + normal_sf(w) - 1.0).abs() <= 1.2e-16);
        }
    }

    #[test]
    fn gaussian_tail_bound() {
        for i in 0..=2000 {
            let x = 1.0 + i as f64 * 0.01;
            assert!(normal_sf(x) <= 0.5 * (-x * x / 2.0).exp());
        }
    }

    #[test]
    fn erfcx_agrees_across_branches() {
        // reference values (mpmath)
        assert_abs_diff_eq!(erfcx(0.0), 1.0, epsilon = 1e-16);
        assert!((erfcx(5.0) / 0.110_704_637_733_068_6 - 1.0).abs() < 1e-14);
        assert!((erfcx(30.0) / 0.018_795_888_861_416_75 - 1.0).abs() < 1e-14);
        assert!((erfcx(1e4) / 5.641_895_807_268_084e-5 - 1.0).abs() < 1e-14);
        assert!((erfcx(-1.0) / 5.008_980_080_762_283 - 1.0).abs() < 1e-14);
        let below = (4.999_999_f64 * 4.999_999).exp() * libm::erfc(4.999_999);
        let mut tail = 4.999_999;
        for k in (1..=60).rev() {
            tail = 4.999_999 + (k as f64 / 2.0) / tail;
        }
        assert!((below / (FRAC_1_SQRT_PI / tail) - 1.0).abs() < 1e-13);
        assert!(mills_scaled_sf(50.0).is_finite());
        assert!((mills_scaled_sf(50.0) * 50.0 * (2.0 * PI).sqrt() - 1.0).abs() < 1e-3);
    }
}
