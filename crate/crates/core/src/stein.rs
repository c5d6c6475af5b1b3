//! The bounded solution of the Stein equation
//! `f'(w) - w f(w) = I(w <= x) - Phi(x)`, its derivative and
//! `g_x(w) = (w f_x(w))'`, with property checks for the standard bounds.
//!
//! All products `e^{w^2/2} Phi(.)` are routed through the scaled tail
//! `M(t) = e^{t^2/2} (1 - Phi(t))` so nothing overflows for large `|w|`.

use serde::Serialize;

use crate::special::{mills_scaled_sf as m_tail, normal_cdf, normal_sf};

const SQRT_2PI: f64 = 2.506_628_274_631_000_7;

/// Slack allowed on every property check for floating-point rounding.
pub const FLOAT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteinSolution {
    pub x: f64,
}

impl SteinSolution {
    pub fn new(x: f64) -> Self {
        SteinSolution { x }
    }

    /// `sqrt(2 pi) e^{w^2/2} Phi(w)` for `w <= x`, scaled by nothing.
    fn lower_core(&self, w: f64) -> f64 {
        let x = self.x;
        if w < 0.0 {
            SQRT_2PI * m_tail(-w) * normal_sf(x)
        } else {
            SQRT_2PI * normal_cdf(w) * m_tail(x) * ((w * w - x * x) / 2.0).exp()
        }
    }

    fn upper_core(&self, w: f64) -> f64 {
        let x = self.x;
        if w >= 0.0 {
            SQRT_2PI * normal_cdf(x) * m_tail(w)
        } else {
            SQRT_2PI * normal_sf(w) * m_tail(-x) * ((w * w - x * x) / 2.0).exp()
        }
    }

    /// `f_x(w)`.
    pub fn f(&self, w: f64) -> f64 {
        if w <= self.x {
            self.lower_core(w)
        } else {
            self.upper_core(w)
        }
    }

    /// `f_x'(w)` from its closed form; at `w = x` the left branch, which is
    /// the customary value `x f_x(x) + 1 - Phi(x)`.
    pub fn f_prime(&self, w: f64) -> f64 {
        let x = self.x;
        if w <= x {
            // (sqrt(2 pi) w e^{w^2/2} Phi(w) + 1) (1 - Phi(x))
            let scaled = if w < 0.0 {
                SQRT_2PI * w * m_tail(-w) + 1.0
            } else {
                return SQRT_2PI * w * normal_cdf(w) * m_tail(x) * ((w * w - x * x) / 2.0).exp()
                    + normal_sf(x);
            };
            scaled * normal_sf(x)
        } else if w >= 0.0 {
            (SQRT_2PI * w * m_tail(w) - 1.0) * normal_cdf(x)
        } else {
            SQRT_2PI * w * normal_sf(w) * m_tail(-x) * ((w * w - x * x) / 2.0).exp() - normal_cdf(x)
        }
    }

    /// `g_x(w)` from its closed form: `(1 + w^2) f + w (1 - Phi(x))` for
    /// `w <= x` and `(1 + w^2) f - w Phi(x)` for `w > x`.
    pub fn g(&self, w: f64) -> f64 {
        if w <= self.x {
            (1.0 + w * w) * self.f(w) + w * normal_sf(self.x)
        } else {
            (1.0 + w * w) * self.f(w) - w * normal_cdf(self.x)
        }
    }

    /// `f'(w) - w f(w) - (I(w <= x) - Phi(x))`.
    pub fn residual(&self, w: f64) -> f64 {
        let ind = if w <= self.x { 1.0 } else { 0.0 };
        self.f_prime(w) - w * self.f(w) - (ind - normal_cdf(self.x))
    }
}

pub fn f_x(x: f64, w: f64) -> f64 {
    SteinSolution::new(x).f(w)
}

pub fn f_x_prime(x: f64, w: f64) -> f64 {
    SteinSolution::new(x).f_prime(w)
}

pub fn g_x(x: f64, w: f64) -> f64 {
    SteinSolution::new(x).g(w)
}

pub fn stein_residual(x: f64, w: f64) -> f64 {
    SteinSolution::new(x).residual(w)
}

/// Outcome of one property over a grid. `worst_margin` is the smallest
/// `bound - value` seen; negative beyond the slack means a violation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyCheck {
    pub property: String,
    pub points: usize,
    pub violations: usize,
    pub worst_margin: f64,
}

impl PropertyCheck {
    fn new(property: impl Into<String>) -> Self {
        PropertyCheck {
            property: property.into(),
            points: 0,
            violations: 0,
            worst_margin: f64::INFINITY,
        }
    }

    /// Records `value <= bound` (up to [`FLOAT_SLACK`]).
    fn le(&mut self, value: f64, bound: f64) {
        self.record(bound - value, FLOAT_SLACK);
    }

    fn record(&mut self, margin: f64, slack: f64) {
        self.points += 1;
        if !(margin >= -slack) {
            self.violations += 1;
        }
        if margin < self.worst_margin || margin.is_nan() {
            self.worst_margin = margin;
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0 && self.points > 0
    }
}

fn grid(lo: f64, hi: f64, step: f64) -> impl Iterator<Item = f64> {
    let count = ((hi - lo) / step).round() as usize;
    (0..=count).map(move |i| lo + i as f64 * step)
}

/// Grid resolution of [`check_properties`].
#[derive(Debug, Clone, Copy)]
pub struct SteinGrid {
    pub step: f64,
    pub fine_step: f64,
}

impl Default for SteinGrid {
    fn default() -> Self {
        SteinGrid {
            step: 0.05,
            fine_step: 0.005,
        }
    }
}

/// Thresholds `x` of the nonuniform properties.
pub const NONUNIFORM_XS: [f64; 5] = [1.0, 1.5, 2.0, 4.0, 8.0];

/// Runs every uniform and nonuniform property on its grid, plus the
/// equation residual and finite-difference consistency.
pub fn check_properties(spec: SteinGrid) -> Vec<PropertyCheck> {
    let mut fp_abs = PropertyCheck::new("|f'| <= 1");
    let mut f_pos = PropertyCheck::new("0 < f <= 0.63");
    let mut g_pos = PropertyCheck::new("g >= 0");
    let mut g_unit = PropertyCheck::new("g <= 2.3 for x in [0,1]");
    let mut resid = PropertyCheck::new("|Stein residual| <= 1e-10");
    let mut fd = PropertyCheck::new("central difference of f and w f match f', g (1e-6)");

    let ws: Vec<f64> = grid(-10.0, 10.0, spec.step)
        .chain(grid(30.0, 50.0, 0.25))
        .collect();
    for x in grid(-10.0, 10.0, spec.step) {
        let s = SteinSolution::new(x);
        for &w in &ws {
            let (f, fp, g) = (s.f(w), s.f_prime(w), s.g(w));
            fp_abs.le(fp.abs(), 1.0);
            f_pos.le(f, 0.63);
            f_pos.record(f, 0.0);
            g_pos.record(g, FLOAT_SLACK);
            if (0.0..=1.0).contains(&x) {
                g_unit.le(g, 2.3);
            }
            resid.record(1e-10 - s.residual(w).abs(), 0.0);
            let h = 1e-5;
            if (w - x).abs() > 10.0 * h && w.abs() < 20.0 {
                let d = (s.f(w + h) - s.f(w - h)) / (2.0 * h);
                let dg = ((w + h) * s.f(w + h) - (w - h) * s.f(w - h)) / (2.0 * h);
                fd.record(1e-6 - (d - fp).abs().max((dg - g).abs()), 0.0);
            }
        }
        // the jump point itself
        resid.record(1e-10 - s.residual(x).abs(), 0.0);
    }

    let mut f_far = PropertyCheck::new("f <= 1.7 e^{-x} for w <= x-1");
    let mut f_near = PropertyCheck::new("f <= 1/x for x-1 < w <= x");
    let mut f_up = PropertyCheck::new("f <= 1/w for w > x");
    let mut fp_far = PropertyCheck::new("|f'| <= e^{1/2-x} for w <= x-1");
    let mut fp_near = PropertyCheck::new("|f'| <= 1 for x-1 < w <= x");
    let mut fp_up = PropertyCheck::new("|f'| <= 1/(1+x^2) for w > x");
    let mut g_nonneg = PropertyCheck::new("g >= 0 (x >= 1)");
    let mut g_neg = PropertyCheck::new("g <= 1.6 (1-Phi(x)) for w <= 0");
    let mut g_up = PropertyCheck::new("g <= 1/w for w > x");
    let mut g_mono = PropertyCheck::new("g increasing on [0, x]");
    let mut g_xm1 = PropertyCheck::new("g(x-1) <= x e^{1/2-x}");
    let mut g_x = PropertyCheck::new("g(x) <= x + 2");

    for &x in &NONUNIFORM_XS {
        let s = SteinSolution::new(x);
        let ws = grid(-10.0, 50.0, spec.fine_step)
            .chain(std::iter::once(x))
            .chain(std::iter::once(x - 1.0));
        for w in ws {
            let (f, fp, g) = (s.f(w), s.f_prime(w), s.g(w));
            g_nonneg.record(g, FLOAT_SLACK);
            if w <= x - 1.0 {
                f_far.le(f, 1.7 * (-x).exp());
                fp_far.le(fp.abs(), (0.5 - x).exp());
            } else if w <= x {
                f_near.le(f, 1.0 / x);
                fp_near.le(fp.abs(), 1.0);
            } else {
                f_up.le(f, 1.0 / w);
                fp_up.le(fp.abs(), 1.0 / (1.0 + x * x));
                g_up.le(g, 1.0 / w);
            }
            if w <= 0.0 {
                g_neg.le(g, 1.6 * normal_sf(x));
            }
        }
        let mut prev = s.g(0.0);
        for w in grid(0.0, x, spec.fine_step).skip(1) {
            let v = s.g(w);
            g_mono.record(v - prev, FLOAT_SLACK);
            prev = v;
        }
        g_xm1.le(s.g(x - 1.0), x * (0.5 - x).exp());
        g_x.le(s.g(x), x + 2.0);
    }

    vec![
        fp_abs, f_pos, g_pos, g_unit, resid, fd, f_far, f_near, f_up, fp_far, fp_near, fp_up,
        g_nonneg, g_neg, g_up, g_mono, g_xm1, g_x,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn values_at_zero() {
        let s = SteinSolution::new(0.0);
        assert_abs_diff_eq!(s.f(0.0), SQRT_2PI / 4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.f(0.0), 0.626_657, epsilon = 1e-6);
        assert_abs_diff_eq!(s.f_prime(0.0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(s.g(0.0), SQRT_2PI / 4.0, epsilon = 1e-15);
    }

    #[test]
    fn residual_examples() {
        let s = SteinSolution::new(1.5);
        assert!(s.residual(-3.0).abs() <= 1e-12);
        assert!(s.residual(40.0).abs() <= 1e-10);
        assert!(s.residual(1.5).abs() <= 1e-12);
        assert!(s.f(40.0).is_finite() && s.f(50.0) > 0.0);
        assert!(SteinSolution::new(-45.0).f(-40.0) > 0.0);
    }

    #[test]
    fn f_is_continuous_at_jump() {
        for x in [-3.0, 0.0, 0.7, 2.0, 8.0] {
            let s = SteinSolution::new(x);
            assert!((s.f(x) - s.f(x + 1e-12)).abs() < 1e-10);
        }
    }

    #[test]
    fn g_matches_product_rule() {
        for x in [-2.0, 0.5, 3.0] {
            let s = SteinSolution::new(x);
            for i in -40..40 {
                let w = i as f64 * 0.13;
                assert!((s.g(w) - (s.f(w) + w * s.f_prime(w))).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn property_grid_passes() {
        let coarse = SteinGrid {
            step: 0.25,
            fine_step: 0.02,
        };
        for c in check_properties(coarse) {
            assert!(c.passed(), "{c:?}");
        }
    }
}
