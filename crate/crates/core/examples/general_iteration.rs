//! Iterating `K0` for countries with a comparative advantage, and how the
//! iterates compare with the root of the boundary equation.
//!
//!     cargo run --example general_iteration -- 1.2 1.0 0.3 1e-3

use apc::general::{c_constants, iterate_k0, IterationMode};
use apc::solve_k0_root;

fn main() -> apc::Result<()> {
    let v: Vec<f64> = std::env::args().skip(1).map(|a| a.parse().expect("numeric argument")).collect();
    let lambda = v.first().copied().unwrap_or(1.2);
    let beta = v.get(1).copied().unwrap_or(1.0);
    let alpha = v.get(2).copied().unwrap_or(0.3);
    let epsilon = v.get(3).copied().unwrap_or(1e-3);
    let ratios = apc::ConflictRatios::new(lambda, beta, alpha, epsilon)?;
    let (l, b) = (ratios.lambda, ratios.beta);
    if ratios.swapped {
        println!("relabeled countries: lambda={l} beta={b}");
    }

    let c = c_constants(l, b, alpha, epsilon)?;
    println!("C1={:.15} C2={:.15} C3={:.15}", c.c1, c.c2, c.c3);
    println!("map slope at K0=1: {:.6}", c.map_slope(1.0, l / b));

    let modes = [
        ("order0", IterationMode::Order0),
        ("order1", IterationMode::Order1),
        ("order2", IterationMode::Order2),
        ("converge", IterationMode::converge()),
    ];
    for (name, mode) in modes {
        let (sol, diag) = iterate_k0(l, b, alpha, epsilon, mode)?;
        println!(
            "{name:>9}: K0={:.15} K1={:+.6e} K2={:+.6e} |f1(1)-f2(1)/lambda|={:.3e} steps={}",
            sol.k0,
            sol.k1,
            sol.k2,
            diag.residual_bc_right,
            diag.k0_trace.len() - 1
        );
    }
    if let Ok(root) = solve_k0_root(l, b, alpha) {
        println!("zero-cutoff root: K0={root:.15}");
    }
    Ok(())
}
