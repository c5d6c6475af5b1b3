//! The Stein solution f_x and its property grid.

use ustat_bee::stein::{check_properties, SteinGrid, SteinSolution};

fn main() {
    let s = SteinSolution::new(1.5);
    for w in [-3.0, 0.0, 1.5, 4.0, 40.0] {
        println!(
            "w = {w:5.1}: f = {:.6e}  f' = {:.6e}  residual = {:.1e}",
            s.f(w),
            s.f_prime(w),
            s.residual(w)
        );
    }
    let coarse = SteinGrid {
        step: 0.25,
        fine_step: 0.05,
    };
    for c in check_properties(coarse) {
        println!(
            "{:<55} {:>7} points, {} violations",
            c.property, c.points, c.violations
        );
    }
}
