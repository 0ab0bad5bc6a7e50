//! A parameter sweep through the command-line front end, written as CSV
//! to stdout.
//!
//!     cargo run --release --example sweep

fn main() {
    let args = [
        "apc", "sweep", "--lambda", "1.2", "--beta", "1.0", "--alpha", "0.3", "--epsilon", "1e-3",
        "--sweep", "alpha:0.1:0.6:6", "--n", "20000", "--seed", "1",
    ];
    std::process::exit(apc::cli::main_with_args(args));
}
