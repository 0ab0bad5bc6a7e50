//! A single conflict: who wins, what each country keeps, and what moves.

use apc::{payoff, Contestant};

fn main() -> apc::Result<()> {
    let c1 = Contestant { r: 0.8, b: 0.3, production: 1.5, aggression: 1.0 };
    let c2 = Contestant { r: 0.6, b: 0.2, production: 1.0, aggression: 1.0 };
    for alpha in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let out = payoff(c1, c2, alpha)?;
        let total = c1.kept() + c2.kept();
        println!(
            "alpha={alpha:.2} winner={:?} w1={:.4} w2={:.4} w1+w2={:.4} produced={:.4}",
            out.winner,
            out.w1,
            out.w2,
            out.w1 + out.w2,
            total
        );
    }
    Ok(())
}
