//! Seeded Monte Carlo CDF of T_n, identical for any number of workers.

use ustat_bee::distributions::LawSpec;
use ustat_bee::kernels::KernelConfig;
use ustat_bee::mc::{estimate_cdf, MCConfig, Statistic};

fn main() -> ustat_bee::Result<()> {
    let mut cfg = MCConfig {
        statistic: Statistic::Tn,
        kernel: KernelConfig::Named {
            name: "gini".into(),
            m: None,
        },
        law: LawSpec::Atoms(vec![(0.0, 0.3), (1.0, 0.3), (3.0, 0.4)]),
        n: 20,
        replicates: 20_000,
        x_grid: vec![-2.0, -1.0, 0.0, 1.0, 2.0],
        seed: 2024,
        workers: 1,
        incomplete_budget: 100_000,
        center: true,
    };
    let one = estimate_cdf(&cfg)?;
    cfg.workers = 8;
    let eight = estimate_cdf(&cfg)?;
    println!("x, p_hat, se, phi, delta");
    for r in &one.rows {
        println!(
            "{:5.1}, {:.5}, {:.5}, {:.5}, {:+.5}",
            r.x, r.p_hat, r.se, r.phi, r.delta
        );
    }
    println!("identical across workers: {}", one.rows == eight.rows);
    Ok(())
}
