//! Quasi-equilibrium bidding strategies for two-country all-pay-auction
//! conflicts in which the loser forfeits a fraction of its production.
//!
//! * [`model`]: parameters, ratio coordinates and the payoff of one conflict.
//! * [`equal`]: exact strategies when `lambda == beta`.
//! * [`general`]: epsilon-regularized strategies and the `K0` iteration.
//! * [`oracle`]: best-response, ODE and root-finding checks.
//! * [`simulate`]: reproducible Monte-Carlo conflicts.
//! * [`cli`]: the `apc` command-line front end.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod equal;
pub mod error;
pub mod general;
pub mod model;
pub mod numerics;
pub mod oracle;
pub mod simulate;
pub mod strategy;

pub use equal::{boundary_coefficients, eval_equal_strategy, solve_equal, BoundaryCoefficients, EquilibriumSolution, SolutionMethod};
pub use error::{Error, Result};
pub use general::{c_constants, eval_general_strategy, iterate_k0, k1_from_k0, k2_from_k0, CConstants, IterationMode, SolverDiagnostics};
pub use model::{normalize_ratios, payoff, Bid, ConflictRatios, Contestant, CountryParams, PayoffOutcome, Winner};
pub use oracle::{best_response, ode_residual, solve_k0_root, u1_payoff, StrategyTable};
pub use simulate::{simulate, SimulationSummary, SolutionSource};
pub use strategy::{Method, StrategyPair};
