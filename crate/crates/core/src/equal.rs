//! Exact quasi-equilibria when neither country has a comparative advantage
//! (`lambda == beta`), and the boundary coefficients of the zero-cutoff
//! right-endpoint condition `a K0 + b K0^(-lambda/beta) = c`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::model::check_alpha_solver;

/// How the constants of a solution were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolutionMethod {
    ClosedFormEqual,
    IteratedGeneral,
    RootFound,
}

/// Integration constants `K0, K1, K2` that pin one member of the
/// mutual-best-response strategy family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumSolution {
    pub k0: f64,
    pub k1: f64,
    pub k2: f64,
    pub method: SolutionMethod,
    /// Iteration order for `IteratedGeneral` (`None` once run to convergence).
    pub order: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl BoundaryCoefficients {
    /// `a K0 + b K0^(-lambda/beta) - c`.
    pub fn residual(&self, k0: f64, lambda: f64, beta: f64) -> f64 {
        self.a * k0 + self.b * k0.powf(-lambda / beta) - self.c
    }
}

fn check_rates(lambda: f64, beta: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda > 0.0 && beta.is_finite() && beta > 0.0) {
        return Err(domain(format!(
            "lambda and beta must be positive and finite, got {lambda}, {beta}"
        )));
    }
    Ok(())
}

/// Coefficients of the right-endpoint condition after the `r = 0`
/// conditions have eliminated `K1` and `K2`.
pub fn boundary_coefficients(lambda: f64, beta: f64, alpha: f64) -> Result<BoundaryCoefficients> {
    check_rates(lambda, beta)?;
    check_alpha_solver(alpha)?;
    let (l, b) = (lambda, beta);
    let one_m = 1.0 - alpha;
    let pw = |e: f64| alpha.powf(e);

    let a = l * (1.0 - pw(1.0 + 2.0 * b / l)) / ((l + 2.0 * b) * one_m);
    let bb = l * b * (1.0 - pw(1.0 + 2.0 * l / b)) / ((2.0 * l + b) * (alpha - 1.0));
    let c = -b * l / (b + 2.0 * l)
        + alpha * l * (b * l + b + 2.0 * l) * (1.0 - pw(1.0 + b / l))
            / ((b + l) * (b + 2.0 * l) * one_m)
        + l / (2.0 * b + l)
        - alpha * b * l * (1.0 + 2.0 * b + l) * (1.0 - pw(1.0 + l / b))
            / ((b + l) * (2.0 * b + l) * one_m);
    Ok(BoundaryCoefficients { a, b: bb, c })
}

/// Closed-form constants for `lambda == beta`.
///
/// The right-endpoint condition collapses to a quadratic with roots
/// `{1, -beta}`; only `K0 = 1` keeps both sides of the strategy coupling
/// positive.
pub fn solve_equal(beta: f64, alpha: f64) -> Result<EquilibriumSolution> {
    check_rates(beta, beta)?;
    check_alpha_solver(alpha)?;
    let cube = alpha * alpha * alpha;
    Ok(EquilibriumSolution {
        k0: 1.0,
        k1: cube * (beta + 1.0) / (6.0 * beta * (1.0 - alpha)),
        k2: cube * (beta + 1.0) / (6.0 * (1.0 - alpha)),
        method: SolutionMethod::ClosedFormEqual,
        order: None,
    })
}

/// Evaluates both closed-form strategies at resource level `r`.
pub fn eval_equal_strategy(r: f64, beta: f64, alpha: f64) -> Result<(f64, f64)> {
    check_rates(beta, beta)?;
    check_alpha_solver(alpha)?;
    if !(0.0..=1.0).contains(&r) {
        return Err(domain(format!("r must lie in [0, 1], got {r}")));
    }
    let one_m = 1.0 - alpha;
    // alpha^3 / ((1-alpha)^3 (r + alpha/(1-alpha))^2) written over (1-alpha) r + alpha,
    // so alpha = 0 needs no 0/0 limit at r = 0.
    let shape = if alpha == 0.0 {
        0.0
    } else {
        let d = one_m * r + alpha;
        alpha * alpha * alpha / (one_m * d * d)
    };
    let s = beta + 1.0;
    let f1 = s / (3.0 * beta) * r - alpha * s / (6.0 * beta * one_m) + s * shape / (6.0 * beta);
    let f2 = s / 3.0 * r - alpha * s / (6.0 * one_m) + s * shape / 6.0;
    Ok((f1, f2))
}
