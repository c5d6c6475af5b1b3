//! Hoeffding projections of the Gini kernel under a three-point law.

use ustat_bee::distributions::DiscreteDistribution;
use ustat_bee::kernels::{builtin_kernel, center, decompose, BuiltinKernel};

fn main() -> ustat_bee::Result<()> {
    let dist = DiscreteDistribution::new(vec![(0.0, 0.3), (1.0, 0.3), (3.0, 0.4)], "three-point")?;
    let kernel = center(&builtin_kernel(BuiltinKernel::Gini)?, &dist)?;
    let dec = decompose(&kernel, &dist)?;
    println!("support  {:?}", dec.support());
    println!("g        {:?}", dec.g_table());
    println!("sigma^2  {:.6}", dec.sigma_sq());
    println!("order r  {:?}", dec.degeneracy_order());
    for (k, [l2, l3]) in dec.norm_table().iter().enumerate() {
        println!("||g_{}||_2 = {l2:.6}  ||g_{}||_3 = {l3:.6}", k + 1, k + 1);
    }
    Ok(())
}
