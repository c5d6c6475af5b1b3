//! Splits T_n into W + D_1 over sqrt(1 + D_2) and checks the identities.

use rand::Rng;
use ustat_bee::decomposition::{censored_terms, decompose_statistic};
use ustat_bee::distributions::{replicate_rng, DiscreteDistribution};
use ustat_bee::kernels::{builtin_kernel, BuiltinKernel};

fn main() -> ustat_bee::Result<()> {
    let dist = DiscreteDistribution::uniform_on(&[0.0, 1.0, 2.0, 5.0])?;
    let kernel = builtin_kernel(BuiltinKernel::Variance)?;
    let mut rng = replicate_rng(42, 0);
    let data: Vec<f64> = (0..10)
        .map(|_| dist.atoms()[rng.gen_range(0..4)].0)
        .collect();
    let t = decompose_statistic(&kernel, &dist, &data)?;
    println!("W = {:.6}  D1 = {:.6}  D2 = {:.6}", t.w, t.d1, t.d2);
    println!("T_n            = {:.12}", t.t_n);
    println!("(W+D1)/sqrt(1+D2) = {:.12}", t.t_from_terms());
    println!(
        "D2 rebuilt     = {:.12} (direct {:.12})",
        t.d2_from_terms(),
        t.d2
    );
    let (lhs, rhs) = t.cross_term_bound();
    println!("cross term {lhs:.6} <= {rhs:.6}");
    let c = censored_terms(&t, 2.0)?;
    println!("censored W_b = {:.6}, delta2_b = {:.6}", c.w_b, c.delta2_b);
    Ok(())
}
