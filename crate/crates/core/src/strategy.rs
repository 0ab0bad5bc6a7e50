//! A solved strategy pair, independent of which solver produced it.

use serde::{Deserialize, Serialize};

use crate::equal::{boundary_coefficients, eval_equal_strategy, solve_equal, EquilibriumSolution, SolutionMethod};
use crate::error::{domain, Result};
use crate::general::{self, IterationMode, SolverDiagnostics};
use crate::model::ConflictRatios;
use crate::oracle::solve_k0_root;

/// Solver selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Method {
    /// Closed form; requires `lambda == beta`.
    Equal,
    Iterate(IterationMode),
    /// Root of the zero-cutoff boundary equation, with `K1`, `K2` from the
    /// regularized left-endpoint conditions.
    Root,
}

impl Method {
    /// Closed form on the diagonal, second-order iterate elsewhere.
    pub fn default_for(ratios: &ConflictRatios) -> Self {
        if ratios.is_equal_case() {
            Method::Equal
        } else {
            Method::Iterate(IterationMode::Order2)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrategyPair {
    pub ratios: ConflictRatios,
    pub solution: EquilibriumSolution,
}

impl StrategyPair {
    pub fn solve(ratios: ConflictRatios, method: Method) -> Result<(Self, SolverDiagnostics)> {
        ratios.validate()?;
        let ConflictRatios {
            lambda,
            beta,
            alpha,
            epsilon,
            ..
        } = ratios;
        let (solution, diagnostics) = match method {
            Method::Equal => {
                if !ratios.is_equal_case() {
                    return Err(domain(format!(
                        "closed form needs lambda == beta, got {lambda} and {beta}"
                    )));
                }
                let sol = solve_equal(beta, alpha)?;
                (sol, equal_diagnostics(&sol, beta, alpha)?)
            }
            Method::Iterate(mode) => general::iterate_k0(lambda, beta, alpha, epsilon, mode)?,
            Method::Root => {
                let k0 = solve_k0_root(lambda, beta, alpha)?;
                let sol = general::complete_solution(k0, lambda, beta, alpha, epsilon, SolutionMethod::RootFound)?;
                let diag = general::diagnose(&sol, lambda, beta, alpha, epsilon, vec![1.0, k0], true)?;
                (sol, diag)
            }
        };
        Ok((Self { ratios, solution }, diagnostics))
    }

    /// Lower end of the strategy domain: 0 for the closed form, epsilon otherwise.
    pub fn r_min(&self) -> f64 {
        match self.solution.method {
            SolutionMethod::ClosedFormEqual => 0.0,
            _ => self.ratios.epsilon,
        }
    }

    /// Bids `(f1(r), f2(r))`.
    pub fn eval(&self, r: f64) -> Result<(f64, f64)> {
        let ConflictRatios {
            lambda,
            beta,
            alpha,
            epsilon,
            ..
        } = self.ratios;
        match self.solution.method {
            SolutionMethod::ClosedFormEqual => eval_equal_strategy(r, beta, alpha),
            _ => general::eval_general_strategy(r, &self.solution, lambda, beta, alpha, epsilon),
        }
    }
}

fn equal_diagnostics(sol: &EquilibriumSolution, beta: f64, alpha: f64) -> Result<SolverDiagnostics> {
    let (l1, l2) = eval_equal_strategy(0.0, beta, alpha)?;
    let (r1, r2) = eval_equal_strategy(1.0, beta, alpha)?;
    let coeffs = boundary_coefficients(beta, beta, alpha)?;
    Ok(SolverDiagnostics {
        k0_trace: vec![sol.k0],
        residual_bc_left1: l1.abs(),
        residual_bc_left2: l2.abs(),
        residual_bc_right: (r1 - r2 / beta).abs(),
        fixed_point_residual: coeffs.residual(sol.k0, beta, beta).abs(),
        converged: true,
    })
}
