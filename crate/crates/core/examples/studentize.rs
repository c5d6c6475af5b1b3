//! Exact U-statistic, leave-one-out averages and the Studentized statistics
//! for a small dataset, plus the bridges between them.

use ustat_bee::kernels::{builtin_kernel, BuiltinKernel};
use ustat_bee::ustat::{
    self_normalized_sum, studentize, t_from_self_normalized, t_statistic, tn_from_tn_star,
};

fn main() -> ustat_bee::Result<()> {
    let data = [0.3, -1.2, 2.4, 0.8, -0.1, 1.7, -0.6, 0.9];
    let kernel = builtin_kernel(BuiltinKernel::Gini)?;
    let r = studentize(&kernel, &data)?;
    println!("U_n           = {:.6}", r.u_n);
    println!("sigma_hat^2   = {:.6}", r.sigma_hat_sq);
    println!("T_n           = {:.6}", r.t_n);
    println!("T_n*          = {:.6}", r.t_n_star);
    println!(
        "T_n from T_n* = {:.6}",
        tn_from_tn_star(r.t_n_star, r.n, r.m)
    );

    let sv = self_normalized_sum(&data);
    println!("t statistic   = {:.6}", t_statistic(&data)?);
    println!(
        "from S_n/V_n  = {:.6}",
        t_from_self_normalized(sv, data.len())
    );
    Ok(())
}
