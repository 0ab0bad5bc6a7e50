//! Checks a solved strategy pair against an independent best-response
//! search and the first-order conditions.
//!
//!     cargo run --release --example verify_oracle -- 1.0 1.0 0.5

use apc::oracle::{self, Stencil, StrategyTable};
use apc::{ConflictRatios, Method, StrategyPair};

fn main() -> apc::Result<()> {
    let v: Vec<f64> = std::env::args().skip(1).map(|a| a.parse().expect("numeric argument")).collect();
    let lambda = v.first().copied().unwrap_or(1.0);
    let beta = v.get(1).copied().unwrap_or(1.0);
    let alpha = v.get(2).copied().unwrap_or(0.5);
    let epsilon = if lambda == beta { 0.0 } else { 1e-3 };

    let ratios = ConflictRatios::new(lambda, beta, alpha, epsilon)?;
    let (pair, _) = StrategyPair::solve(ratios, Method::default_for(&ratios))?;
    let report = oracle::verify(&pair, oracle::DEFAULT_GRID, &[0.25, 0.5, 0.75])?;
    for c in &report.best_response {
        println!("r1={:.2} f1={:.6} best={:.6} gap={:.2e}", c.r1, c.strategy, c.best_response, c.gap);
    }
    println!("ODE residuals: {:.2e} {:.2e}", report.ode_residual_1, report.ode_residual_2);

    let table = StrategyTable::sample(&pair, oracle::DEFAULT_GRID)?;
    let (s1, s2) = oracle::ode_residual_with(&table, Stencil::Second)?;
    println!("second-order stencil:  {s1:.2e} {s2:.2e}");
    println!("K0={} root={} passed={}", report.k0_check.k0, report.k0_check.k0_root, report.passed);
    Ok(())
}
