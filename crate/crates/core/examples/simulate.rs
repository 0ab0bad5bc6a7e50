//! Monte-Carlo conflicts under the equilibrium strategies.
//!
//!     cargo run --release --example simulate -- 1000000 42

use apc::simulate::{simulate_with_threads, SolutionSource};
use apc::ConflictRatios;

fn main() -> apc::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: u64 = args.next().map(|a| a.parse().expect("draw count")).unwrap_or(200_000);
    let seed: u64 = args.next().map(|a| a.parse().expect("seed")).unwrap_or(42);

    let symmetric = ConflictRatios::new(1.0, 1.0, 0.5, 0.0)?;
    let s = simulate_with_threads(symmetric, SolutionSource::EqualClosedForm, n, seed, 0)?;
    println!("{}", serde_json::to_string_pretty(&s).expect("summary serializes"));

    let stronger = ConflictRatios::new(1.2, 1.0, 0.3, 1e-3)?;
    let one = simulate_with_threads(stronger, SolutionSource::GeneralIterated, n, seed, 1)?;
    let many = simulate_with_threads(stronger, SolutionSource::GeneralIterated, n, seed, 4)?;
    println!("lambda=1.2 beta=1 alpha=0.3: P(country 1 wins)={:.4}", one.win_prob_1);
    println!("identical on 1 and 4 threads: {}", one == many);
    Ok(())
}
