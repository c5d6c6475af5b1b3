//! Monte Carlo of the first projection variance of Kendall's kernel for
//! independent coordinates (exact value 1/9) and of the signed-rank kernel
//! for a symmetric law (exact value 1/12).

use ustat_bee::distributions::Law;
use ustat_bee::kernels::{builtin_kernel, BuiltinKernel};
use ustat_bee::mc::{kendall_sigma_sq_mc, projection_variance_mc};

fn main() -> ustat_bee::Result<()> {
    let k = kendall_sigma_sq_mc(400_000, 9, 4)?;
    println!(
        "Kendall   sigma^2 = {:.5} +- {:.5} (1/9 = {:.5})",
        k.value,
        k.se,
        1.0 / 9.0
    );
    let normal = Law::Normal { mean: 0.0, sd: 1.0 };
    let w = projection_variance_mc(
        &builtin_kernel(BuiltinKernel::Wilcoxon)?,
        |rng| normal.draw(rng),
        0.5,
        400_000,
        9,
        4,
    )?;
    println!(
        "Wilcoxon  sigma^2 = {:.5} +- {:.5} (1/12 = {:.5})",
        w.value,
        w.se,
        1.0 / 12.0
    );
    Ok(())
}
