//! The variance estimate as a U-statistic of degree 2m, its constants, and
//! the sign of its kernel on and beyond the boundary n = 2m.

use ustat_bee::distributions::Law;
use ustat_bee::kernels::{builtin_kernel, BuiltinKernel};
use ustat_bee::sigma_hat::{a_factor, a_factor_closed, check_representation, tail_constants};

fn main() -> ustat_bee::Result<()> {
    for m in 1..=3 {
        let c = tail_constants(m)?;
        println!(
            "m = {m}: b_m = {}/{} = {:.4}, c_m = {:.4}",
            c.b_numerator, c.b_denominator, c.b_m, c.c_m
        );
    }
    println!(
        "A(10, 2) = {:.12} = {:.12}",
        a_factor(10, 2)?,
        a_factor_closed(10, 2)?
    );

    let law = Law::Normal { mean: 0.0, sd: 1.0 };
    for (kernel, n) in [
        (BuiltinKernel::Sum { m: 1 }, 6),
        (BuiltinKernel::Variance, 10),
    ] {
        let k = builtin_kernel(kernel)?;
        let c = check_representation(&k, n, &law, 50, 5000, 1)?;
        println!(
            "{} n = {n}: representation error {:.1e}, min kernel value {:.4}, {} negative of {}",
            k.name(),
            c.max_error,
            c.min_value,
            c.negatives,
            c.tuples
        );
    }
    Ok(())
}
