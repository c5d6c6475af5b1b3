//! Evaluates the nonuniform bound for T_n and the auxiliary inequalities
//! with unit constants (illustrative only).

use ustat_bee::bounds::{
    bennett_mgf_bound, lower_tail_bound, nonuniform_bound_tn, BoundForm, BoundParams,
    KappaConvention, MomentSummary,
};
use ustat_bee::distributions::DiscreteDistribution;
use ustat_bee::kernels::{builtin_kernel, center, decompose, BuiltinKernel};

fn main() -> ustat_bee::Result<()> {
    let dist = DiscreteDistribution::rademacher();
    let kernel = center(&builtin_kernel(BuiltinKernel::Sum { m: 2 })?, &dist)?;
    let mom = MomentSummary::from_decomposition(&decompose(&kernel, &dist)?);
    let par = BoundParams::default();
    println!("x, full, simple (n = 50, m = 2)");
    for x in [0.0, 1.0, 2.0, 3.0] {
        let full = nonuniform_bound_tn(x, 50, 2, &mom, &par, BoundForm::Full)?;
        let simple = nonuniform_bound_tn(x, 50, 2, &mom, &par, BoundForm::Simple)?;
        println!("{x:.1}, {full:.5}, {simple:.5}");
    }
    let lt = lower_tail_bound(0.5, 0.5, 2.0, 10, 1, 0.25, KappaConvention::Floor)?;
    println!(
        "lower tail, Bernoulli(1/2), n = 10, x = 0.25: {:.4}",
        lt.value
    );
    println!("Bennett bound at t = 1/2: {:.7}", bennett_mgf_bound(0.5)?);
    Ok(())
}
