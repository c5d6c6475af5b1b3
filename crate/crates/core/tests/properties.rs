use proptest::prelude::*;

use ustat_bee::bounds::{
    lower_tail_bound, nonuniform_bound_tn, BoundForm, BoundParams, KappaConvention, MomentSummary,
};
use ustat_bee::combinatorics::{binomial, for_each_subset};
use ustat_bee::decomposition::{censor, CensorSpec};
use ustat_bee::distributions::{DiscreteDistribution, LawSpec};
use ustat_bee::kernels::{builtin_kernel, center, decompose, BuiltinKernel, KernelConfig};
use ustat_bee::mc::{estimate_cdf, MCConfig, Statistic};
use ustat_bee::special::{erfcx, normal_cdf, normal_sf};
use ustat_bee::stein::SteinSolution;
use ustat_bee::ustat::{sigma_hat_sq_forms, studentize, tn_from_tn_star, u_statistic};

fn data(min: usize, max: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, min..=max)
}

fn kernel_choice() -> impl Strategy<Value = BuiltinKernel> {
    prop_oneof![
        (1usize..=3).prop_map(|m| BuiltinKernel::Sum { m }),
        Just(BuiltinKernel::Variance),
        Just(BuiltinKernel::Gini),
        Just(BuiltinKernel::Wilcoxon),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn shift_moves_u_by_the_constant(x in data(4, 9), c in -3.0f64..3.0, which in kernel_choice()) {
        let k = builtin_kernel(which).unwrap();
        let u = u_statistic(&k, &x).unwrap();
        let us = u_statistic(&k.shifted(c, false), &x).unwrap();
        prop_assert!((us - (u - c)).abs() < 1e-9);
    }

    #[test]
    fn studentized_statistic_is_scale_free(x in data(5, 9), lambda in 0.1f64..10.0, which in kernel_choice()) {
        let k = builtin_kernel(which).unwrap();
        let a = studentize(&k, &x).unwrap();
        let b = studentize(&k.scaled(lambda), &x).unwrap();
        if a.t_n.is_finite() && !a.sigma_is_zero() {
            prop_assert!((a.t_n - b.t_n).abs() <= 1e-8 * a.t_n.abs().max(1.0));
        }
    }

    #[test]
    fn studentized_statistic_ignores_order(x in data(5, 9), which in kernel_choice(), rot in 0usize..9) {
        let k = builtin_kernel(which).unwrap();
        let mut y = x.clone();
        y.rotate_left(rot % x.len());
        y.reverse();
        let a = studentize(&k, &x).unwrap();
        let b = studentize(&k, &y).unwrap();
        prop_assert!((a.u_n - b.u_n).abs() < 1e-9);
        prop_assert!((a.sigma_hat_sq - b.sigma_hat_sq).abs() <= 1e-9 * a.sigma_hat_sq.max(1.0));
    }

    #[test]
    fn jackknife_forms_agree(x in data(5, 9), which in kernel_choice()) {
        let k = builtin_kernel(which).unwrap();
        let r = studentize(&k, &x).unwrap();
        let (a, b) = sigma_hat_sq_forms(r.u_n, &r.q, r.m);
        prop_assert!((a - b).abs() <= 1e-8 * a.abs().max(r.u_n * r.u_n).max(1.0));
    }

    #[test]
    fn star_bridge_recovers_t(x in data(7, 10), which in kernel_choice()) {
        let k = builtin_kernel(which).unwrap();
        let r = studentize(&k, &x).unwrap();
        if r.t_n.is_finite() && !r.sigma_is_zero() {
            let t = tn_from_tn_star(r.t_n_star, r.n, r.m);
            prop_assert!((t - r.t_n).abs() <= 1e-7 * r.t_n.abs().max(1.0));
        }
    }

    #[test]
    fn pascal_rule(n in 1u64..60, k in 1u64..60) {
        prop_assume!(k <= n);
        prop_assert_eq!(binomial(n, k), binomial(n - 1, k - 1) + binomial(n - 1, k));
        prop_assert_eq!(binomial(n, k), binomial(n, n - k));
    }

    #[test]
    fn subset_count_matches_binomial(n in 0usize..12, k in 0usize..6) {
        let mut count = 0u128;
        for_each_subset(n, k, |_| count += 1);
        let expected = if k <= n { binomial(n as u64, k as u64) } else { 0 };
        prop_assert_eq!(count, expected);
    }

    #[test]
    fn normal_tails_sum_to_one(w in -40.0f64..40.0) {
        prop_assert!((normal_cdf(w) + normal_sf(w) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn erfcx_positive_and_decreasing(x in -5.0f64..1e4, dx in 1e-3f64..1.0) {
        let (a, b) = (erfcx(x), erfcx(x + dx));
        prop_assert!(a > 0.0 && b > 0.0 && b < a);
    }

    #[test]
    fn stein_solution_stays_in_uniform_bounds(x in -10.0f64..10.0, w in -50.0f64..50.0) {
        let s = SteinSolution::new(x);
        let f = s.f(w);
        prop_assert!(f > 0.0 && f <= 0.63 + 1e-12);
        prop_assert!(s.f_prime(w).abs() <= 1.0 + 1e-12);
        prop_assert!(s.residual(w).abs() <= 1e-10);
    }

    #[test]
    fn censoring_contracts(a in -10.0f64..10.0, b in -10.0f64..10.0, t in 0.1f64..5.0) {
        let spec = CensorSpec::symmetric(t).unwrap();
        let (ca, cb) = (censor(a, spec), censor(b, spec));
        prop_assert!((ca - cb).abs() <= (a - b).abs());
        prop_assert!(ca.abs() <= t);
    }

    #[test]
    fn lower_tail_bound_is_a_probability(eh in 0.1f64..5.0, extra in 0.0f64..5.0, frac in 0.01f64..1.0, n in 1usize..50, p in 1.1f64..2.0) {
        let ehp = eh.powf(p) + extra;
        let b = lower_tail_bound(eh, ehp, p, n, 1, eh * frac, KappaConvention::Strict).unwrap();
        prop_assert!(b.value > 0.0 && b.value <= 1.0);
    }

    #[test]
    fn simple_bound_decreases_in_abs_x(x in 0.0f64..10.0, dx in 0.01f64..5.0, n in 3usize..500) {
        let d = DiscreteDistribution::rademacher();
        let k = center(&builtin_kernel(BuiltinKernel::Sum { m: 1 }).unwrap(), &d).unwrap();
        let mom = MomentSummary::from_decomposition(&decompose(&k, &d).unwrap());
        let par = BoundParams::default();
        let a = nonuniform_bound_tn(x, n, 1, &mom, &par, BoundForm::Simple).unwrap();
        let b = nonuniform_bound_tn(-(x + dx), n, 1, &mom, &par, BoundForm::Simple).unwrap();
        prop_assert!(b <= a);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn mc_cdf_is_monotone_and_in_unit_interval(seed in any::<u64>(), n in 3usize..12) {
        let cfg = MCConfig {
            statistic: Statistic::Tn,
            kernel: KernelConfig::Named { name: "gini".into(), m: None },
            law: LawSpec::Atoms(vec![(0.0, 0.3), (1.0, 0.3), (3.0, 0.4)]),
            n,
            replicates: 300,
            x_grid: vec![-2.0, -1.0, 0.0, 1.0, 2.0],
            seed,
            workers: 2,
            incomplete_budget: 1000,
            center: true,
        };
        let res = estimate_cdf(&cfg).unwrap();
        prop_assert!(res.rows.iter().all(|r| (0.0..=1.0).contains(&r.p_hat)));
        prop_assert!(res.rows.windows(2).all(|w| w[0].p_hat <= w[1].p_hat));
        for r in &res.rows {
            prop_assert!((r.se - (r.p_hat * (1.0 - r.p_hat) / 300.0).sqrt()).abs() < 1e-15);
        }
        prop_assert_eq!(res.n_inf_pos + res.n_inf_neg + res.n_zero_by_convention, res.n_sigma_zero);
    }
}
