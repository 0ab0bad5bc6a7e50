//! Closed-form strategies when both countries share the same aggression
//! and production ratio.
//!
//!     cargo run --example solve_equal -- 1.0 0.5

use apc::{eval_equal_strategy, solve_equal};

fn main() -> apc::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<f64>().expect("numeric argument"));
    let beta = args.next().unwrap_or(1.0);
    let alpha = args.next().unwrap_or(0.5);

    let sol = solve_equal(beta, alpha)?;
    println!("beta={beta} alpha={alpha}");
    println!("K0={} K1={:.12} K2={:.12}", sol.k0, sol.k1, sol.k2);
    println!("{:>6} {:>14} {:>14} {:>14}", "r", "f1", "f2", "f2/f1");
    for i in 0..=10 {
        let r = i as f64 / 10.0;
        let (f1, f2) = eval_equal_strategy(r, beta, alpha)?;
        let ratio = if f1 > 0.0 { f2 / f1 } else { f64::NAN };
        println!("{r:>6.2} {f1:>14.10} {f2:>14.10} {ratio:>14.10}");
    }
    Ok(())
}
