//! Quasi-equilibria for countries with a comparative advantage
//! (`lambda != beta`).
//!
//! Private resources are restricted to `[epsilon, 1]`. The two left-endpoint
//! conditions `f1(epsilon) = f2(epsilon) = 0` are solved for `K1` and `K2` at
//! first order in `epsilon`; substituting them into the right-endpoint
//! condition `f1(1) = f2(1) / lambda` leaves a scalar equation for `K0`:
//!
//! ```text
//! C2 K0 - C1 K0^(-lambda/beta) + C3 = 0
//! ```
//!
//! which is solved by fixed-point iteration of
//! `K0 <- (C1 K0^(-lambda/beta) - C3) / C2` starting from `K0 = 1`.

use serde::{Deserialize, Serialize};

use crate::equal::{EquilibriumSolution, SolutionMethod};
use crate::error::{domain, Error, Result};
use crate::model::MAX_EPSILON;

/// Smallest forfeiture fraction this module accepts; `alpha` enters through
/// `alpha^(-(1 + p))` and `1 / alpha`.
pub const ALPHA_MIN: f64 = 1e-6;
pub const ALPHA_MAX: f64 = 1.0 - 1e-6;

pub const DEFAULT_EPSILON: f64 = 1e-3;
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl CConstants {
    /// Right-endpoint mismatch `C2 K0 - C1 K0^(-q) + C3`; zero at the fixed point.
    pub fn residual(&self, k0: f64, q: f64) -> f64 {
        self.c2 * k0 - self.c1 * k0.powf(-q) + self.c3
    }

    /// One step of the fixed-point map.
    pub fn map(&self, k0: f64, q: f64) -> f64 {
        (self.c1 * k0.powf(-q) - self.c3) / self.c2
    }

    /// Derivative of [`CConstants::map`] with respect to `K0`.
    pub fn map_slope(&self, k0: f64, q: f64) -> f64 {
        -q * self.c1 * k0.powf(-q - 1.0) / self.c2
    }

    /// First-order iterate from `K0 = 1`.
    pub fn order1(&self) -> f64 {
        (self.c1 - self.c3) / self.c2
    }

    /// Second-order iterate: the map applied to the first-order iterate.
    pub fn order2(&self, q: f64) -> f64 {
        -self.c3 / self.c2 + self.c1 / self.c2 * self.order1().powf(-q)
    }
}

/// Iteration scheme for `K0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum IterationMode {
    Order0,
    Order1,
    Order2,
    /// Plain fixed-point iteration of the map.
    Picard { tol: f64, max_iter: usize },
    /// Fixed-point iteration relaxed by `1 / (1 - T'(K0))`, safeguarded to
    /// stay inside a sign-change bracket of the residual.
    Converge { tol: f64, max_iter: usize },
}

impl IterationMode {
    pub fn converge() -> Self {
        IterationMode::Converge {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverDiagnostics {
    /// Iterates `K0^(0), K0^(1), ...`; always starts at 1.
    pub k0_trace: Vec<f64>,
    /// `|f1(epsilon)|`
    pub residual_bc_left1: f64,
    /// `|f2(epsilon)|`
    pub residual_bc_left2: f64,
    /// `|f1(1) - f2(1) / lambda|`
    pub residual_bc_right: f64,
    /// Residual of the scalar `K0` equation.
    pub fixed_point_residual: f64,
    pub converged: bool,
}

/// Parameters of the regularized problem, validated once.
#[derive(Debug, Clone, Copy)]
struct Regularized {
    lambda: f64,
    beta: f64,
    alpha: f64,
    epsilon: f64,
}

impl Regularized {
    fn new(lambda: f64, beta: f64, alpha: f64, epsilon: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0 && beta.is_finite() && beta > 0.0) {
            return Err(domain(format!(
                "lambda and beta must be positive and finite, got {lambda}, {beta}"
            )));
        }
        if beta > lambda {
            return Err(domain(format!("beta ({beta}) must not exceed lambda ({lambda})")));
        }
        if !(ALPHA_MIN..=ALPHA_MAX).contains(&alpha) {
            return Err(domain(format!(
                "alpha must lie in [{ALPHA_MIN}, {ALPHA_MAX}] for the regularized solver, got {alpha}"
            )));
        }
        if !(epsilon.is_finite() && (0.0..MAX_EPSILON).contains(&epsilon)) {
            return Err(domain(format!("epsilon must lie in [0, {MAX_EPSILON}), got {epsilon}")));
        }
        if epsilon == 0.0 && lambda != beta {
            return Err(domain("epsilon must be positive when lambda != beta"));
        }
        Ok(Self {
            lambda,
            beta,
            alpha,
            epsilon,
        })
    }

    fn p(&self) -> f64 {
        self.beta / self.lambda
    }

    fn q(&self) -> f64 {
        self.lambda / self.beta
    }

    fn apow(&self, e: f64) -> f64 {
        (e * self.alpha.ln()).exp()
    }

    /// First-order expansion of `-((1-alpha) epsilon + alpha)^(-(1+e))`.
    fn den(&self, e: f64) -> f64 {
        let a = self.alpha;
        self.apow(-(1.0 + e)) * ((1.0 + e) * (1.0 - a) / a * self.epsilon - 1.0)
    }

    /// `1 + e (1-alpha) epsilon / alpha`, the expansion of `(1 + (1-alpha) epsilon / alpha)^e`.
    fn grow(&self, e: f64) -> f64 {
        1.0 + e * (1.0 - self.alpha) * self.epsilon / self.alpha
    }

    fn lead1(&self) -> f64 {
        1.0 / ((self.lambda + 2.0 * self.beta) * (1.0 - self.alpha))
    }

    fn lead2(&self) -> f64 {
        self.lambda * self.beta / ((2.0 * self.lambda + self.beta) * (1.0 - self.alpha))
    }

    fn slope1(&self) -> f64 {
        self.beta / (self.beta + 2.0 * self.lambda)
    }

    fn slope2(&self) -> f64 {
        self.lambda / (2.0 * self.beta + self.lambda)
    }

    fn offset1(&self) -> f64 {
        let (l, b, a) = (self.lambda, self.beta, self.alpha);
        a * (b * l + b + 2.0 * l) / ((b + l) * (b + 2.0 * l) * (1.0 - a))
    }

    fn offset2(&self) -> f64 {
        let (l, b, a) = (self.lambda, self.beta, self.alpha);
        a * b * l * (1.0 + 2.0 * b + l) / ((b + l) * (2.0 * b + l) * (1.0 - a))
    }

    fn k1(&self, k0: f64) -> f64 {
        let p = self.p();
        let num = k0 * self.lead1() * self.apow(p) * self.grow(p) + self.slope1() * self.epsilon
            - self.offset1();
        num / self.den(p)
    }

    fn k2(&self, k0: f64) -> f64 {
        let q = self.q();
        let num = k0.powf(-q) * self.lead2() * self.apow(q) * self.grow(q)
            + self.slope2() * self.epsilon
            - self.offset2();
        num / self.den(q)
    }

    fn constants(&self) -> CConstants {
        let (l, b, a, eps) = (self.lambda, self.beta, self.alpha, self.epsilon);
        let (p, q) = (self.p(), self.q());
        let den_p = self.den(p);
        let den_q = self.den(q);
        let c1 = b / ((1.0 - a) * (2.0 * l + b)) * (1.0 + self.apow(q) * self.grow(q) / den_q);
        let c2 = self.lead1() * (1.0 + self.apow(p) * self.grow(p) / den_p);
        let c3 = a / ((b + l) * (1.0 - a))
            * (b * (1.0 + 2.0 * b + l) / (2.0 * b + l) - (b * l + b + 2.0 * l) / (b + 2.0 * l))
            + self.slope1()
            + (self.slope1() * eps - self.offset1()) / den_p
            - 1.0 / (2.0 * b + l)
            - (eps / (2.0 * b + l) - self.offset2() / l) / den_q;
        CConstants { c1, c2, c3 }
    }

    fn family(&self, r: f64, sol: &EquilibriumSolution) -> (f64, f64) {
        let (p, q) = (self.p(), self.q());
        let d = (1.0 - self.alpha) * r + self.alpha;
        let f1 = sol.k0 * self.lead1() * d.powf(p) + self.slope1() * r - self.offset1()
            + sol.k1 * d.powf(-(1.0 + p));
        let f2 = sol.k0.powf(-q) * self.lead2() * d.powf(q) + self.slope2() * r - self.offset2()
            + sol.k2 * d.powf(-(1.0 + q));
        (f1, f2)
    }

    fn diagnostics(&self, sol: &EquilibriumSolution, k0_trace: Vec<f64>, converged: bool) -> SolverDiagnostics {
        let (l1, l2) = self.family(self.epsilon, sol);
        let (r1, r2) = self.family(1.0, sol);
        SolverDiagnostics {
            k0_trace,
            residual_bc_left1: l1.abs(),
            residual_bc_left2: l2.abs(),
            residual_bc_right: (r1 - r2 / self.lambda).abs(),
            fixed_point_residual: self.constants().residual(sol.k0, self.q()).abs(),
            converged,
        }
    }

    fn solution(&self, k0: f64, method: SolutionMethod, order: Option<u32>) -> EquilibriumSolution {
        EquilibriumSolution {
            k0,
            k1: self.k1(k0),
            k2: self.k2(k0),
            method,
            order,
        }
    }
}

pub fn c_constants(lambda: f64, beta: f64, alpha: f64, epsilon: f64) -> Result<CConstants> {
    Ok(Regularized::new(lambda, beta, alpha, epsilon)?.constants())
}

/// `K1` from `f1(epsilon) = 0`, solved at first order in `epsilon`.
pub fn k1_from_k0(k0: f64, lambda: f64, beta: f64, alpha: f64, epsilon: f64) -> Result<f64> {
    check_k0(k0)?;
    Ok(Regularized::new(lambda, beta, alpha, epsilon)?.k1(k0))
}

/// `K2` from `f2(epsilon) = 0`, solved at first order in `epsilon`.
pub fn k2_from_k0(k0: f64, lambda: f64, beta: f64, alpha: f64, epsilon: f64) -> Result<f64> {
    check_k0(k0)?;
    Ok(Regularized::new(lambda, beta, alpha, epsilon)?.k2(k0))
}

fn check_k0(k0: f64) -> Result<()> {
    if k0.is_finite() && k0 > 0.0 {
        Ok(())
    } else {
        Err(domain(format!("K0 must be positive and finite, got {k0}")))
    }
}

fn diverged(trace: Vec<f64>) -> Error {
    let step = trace.len() - 1;
    let value = *trace.last().expect("trace starts at 1");
    Error::Divergence { step, value, trace }
}

/// Computes `K0` with the requested scheme, then `K1` and `K2`, and reports
/// every boundary residual.
pub fn iterate_k0(
    lambda: f64,
    beta: f64,
    alpha: f64,
    epsilon: f64,
    mode: IterationMode,
) -> Result<(EquilibriumSolution, SolverDiagnostics)> {
    let reg = Regularized::new(lambda, beta, alpha, epsilon)?;
    let c = reg.constants();
    let q = reg.q();
    let mut trace = vec![1.0];

    let (k0, order, converged) = match mode {
        IterationMode::Order0 => (1.0, Some(0), false),
        IterationMode::Order1 | IterationMode::Order2 => {
            let k1 = c.order1();
            trace.push(k1);
            if !(k1 > 0.0) {
                return Err(diverged(trace));
            }
            if mode == IterationMode::Order1 {
                (k1, Some(1), (k1 - 1.0).abs() <= DEFAULT_TOL)
            } else {
                let k2 = c.map(k1, q);
                trace.push(k2);
                if !(k2 > 0.0) {
                    return Err(diverged(trace));
                }
                (k2, Some(2), (k2 - k1).abs() <= DEFAULT_TOL)
            }
        }
        IterationMode::Picard { tol, max_iter } => {
            let mut k = 1.0;
            let mut done = false;
            for _ in 0..max_iter {
                let next = c.map(k, q);
                trace.push(next);
                if !(next > 0.0 && next.is_finite()) {
                    return Err(diverged(trace));
                }
                let step = (next - k).abs();
                k = next;
                if step <= tol {
                    done = true;
                    break;
                }
            }
            if !done {
                k = best_iterate(&trace, &c, q);
            }
            (k, None, done)
        }
        IterationMode::Converge { tol, max_iter } => {
            let (k, done) = relaxed(&c, q, tol, max_iter, &mut trace);
            (k, None, done)
        }
    };

    let sol = reg.solution(k0, SolutionMethod::IteratedGeneral, order);
    let diag = reg.diagnostics(&sol, trace, converged);
    Ok((sol, diag))
}

/// Iterate with the smallest residual, for runs that never settle.
fn best_iterate(trace: &[f64], c: &CConstants, q: f64) -> f64 {
    trace
        .iter()
        .copied()
        .filter(|k| *k > 0.0 && k.is_finite())
        .min_by(|a, b| c.residual(*a, q).abs().total_cmp(&c.residual(*b, q).abs()))
        .unwrap_or(1.0)
}

fn relaxed(c: &CConstants, q: f64, tol: f64, max_iter: usize, trace: &mut Vec<f64>) -> (f64, bool) {
    // The residual is strictly increasing in K0, so a sign change brackets
    // the unique positive fixed point.
    let mut lo = 0.0_f64;
    let mut hi = f64::INFINITY;
    let mut k = 1.0_f64;
    for _ in 0..max_iter {
        let h = c.residual(k, q);
        if h == 0.0 {
            return (k, true);
        }
        if h < 0.0 {
            lo = lo.max(k);
        } else {
            hi = hi.min(k);
        }
        let omega = 1.0 / (1.0 - c.map_slope(k, q));
        let mut next = k + omega * (c.map(k, q) - k);
        if next.is_finite() && (next - k).abs() <= tol {
            trace.push(next);
            return (next, true);
        }
        if !(next.is_finite() && next > lo && next < hi) {
            next = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * k };
        }
        trace.push(next);
        let step = (next - k).abs();
        k = next;
        if step <= tol {
            return (k, true);
        }
    }
    (best_iterate(trace, c, q), false)
}

/// Evaluates both strategies of the general family with the given constants.
pub fn eval_general_strategy(
    r: f64,
    sol: &EquilibriumSolution,
    lambda: f64,
    beta: f64,
    alpha: f64,
    epsilon: f64,
) -> Result<(f64, f64)> {
    let reg = Regularized::new(lambda, beta, alpha, epsilon)?;
    if !(epsilon..=1.0).contains(&r) {
        return Err(domain(format!("r must lie in [{epsilon}, 1], got {r}")));
    }
    check_k0(sol.k0)?;
    Ok(reg.family(r, sol))
}

/// Boundary residuals of an arbitrary solution on `[epsilon, 1]`.
pub fn diagnose(
    sol: &EquilibriumSolution,
    lambda: f64,
    beta: f64,
    alpha: f64,
    epsilon: f64,
    k0_trace: Vec<f64>,
    converged: bool,
) -> Result<SolverDiagnostics> {
    let reg = Regularized::new(lambda, beta, alpha, epsilon)?;
    check_k0(sol.k0)?;
    Ok(reg.diagnostics(sol, k0_trace, converged))
}

/// `K1`, `K2` for a given `K0`, packaged as a solution.
pub fn complete_solution(
    k0: f64,
    lambda: f64,
    beta: f64,
    alpha: f64,
    epsilon: f64,
    method: SolutionMethod,
) -> Result<EquilibriumSolution> {
    check_k0(k0)?;
    Ok(Regularized::new(lambda, beta, alpha, epsilon)?.solution(k0, method, None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equal::{eval_equal_strategy, solve_equal};
    use approx::assert_relative_eq;

    #[test]
    fn c_constants_equal_case_first_iterate_is_one() {
        let c = c_constants(1.0, 1.0, 0.5, 1e-3).unwrap();
        assert!((c.order1() - 1.0).abs() < 5e-3);
        assert_relative_eq!(c.c1, c.c2, max_relative = 1e-14);
    }

    #[test]
    fn c_constants_regression_fixture() {
        // Pinned from a 50-digit evaluation of the same expressions.
        let c = c_constants(1.2, 1.0, 0.3, 1e-3).unwrap();
        assert_relative_eq!(c.c1, 0.413_103_513_142_131_1, max_relative = 1e-13);
        assert_relative_eq!(c.c2, 0.428_310_410_918_596_56, max_relative = 1e-13);
        assert_relative_eq!(c.c3, -0.015_335_204_184_863_046, max_relative = 1e-11);
    }

    #[test]
    fn c_constants_small_alpha_limit() {
        // Bracketed corrections vanish like alpha^(1 + 2 e) as alpha -> 0.
        let (l, b, a, eps) = (1.5, 1.0, 1e-6, 1e-3);
        let c = c_constants(l, b, a, eps).unwrap();
        let c1_lim = b / ((1.0 - a) * (2.0 * l + b));
        let c2_lim = 1.0 / ((1.0 - a) * (l + 2.0 * b));
        assert!((c.c1 / c1_lim - 1.0).abs() < 1e-9);
        assert!((c.c2 / c2_lim - 1.0).abs() < 1e-9);
        assert!(c.c1.is_finite() && c.c2.is_finite() && c.c3.is_finite());
    }

    #[test]
    fn domain_checks() {
        assert!(c_constants(1.2, 1.0, 0.0, 1e-3).is_err());
        assert!(c_constants(1.2, 1.0, 1.0, 1e-3).is_err());
        assert!(c_constants(1.2, 1.0, 0.3, 0.0).is_err());
        assert!(c_constants(1.2, 1.0, 0.3, 0.2).is_err());
        assert!(c_constants(1.0, 1.2, 0.3, 1e-3).is_err());
        assert!(k1_from_k0(-1.0, 1.2, 1.0, 0.3, 1e-3).is_err());
        // epsilon = 0 is allowed on the diagonal.
        assert!(k1_from_k0(1.0, 1.0, 1.0, 0.5, 0.0).is_ok());
    }

    #[test]
    fn k1_k2_reduce_to_closed_form() {
        for &(beta, alpha) in &[(1.0, 0.5), (2.0, 0.3), (0.5, 0.8)] {
            let exact = solve_equal(beta, alpha).unwrap();
            let k1 = k1_from_k0(1.0, beta, beta, alpha, 1e-8).unwrap();
            let k2 = k2_from_k0(1.0, beta, beta, alpha, 1e-8).unwrap();
            assert_relative_eq!(k1, exact.k1, max_relative = 1e-5);
            assert_relative_eq!(k2, exact.k2, max_relative = 1e-5);
            assert_relative_eq!(k2, beta * k1, max_relative = 1e-12);
            let k1_zero = k1_from_k0(1.0, beta, beta, alpha, 0.0).unwrap();
            assert_relative_eq!(k1_zero, exact.k1, max_relative = 1e-12);
        }
        let k1 = k1_from_k0(1.0, 1.0, 1.0, 0.5, 1e-8).unwrap();
        assert!((k1 - 1.0 / 12.0).abs() < 1e-6);
    }

    #[test]
    fn order0_is_one() {
        for &(l, a) in &[(1.0, 0.5), (1.7, 0.2), (3.0, 0.9)] {
            let (sol, diag) = iterate_k0(l, 1.0, a, 1e-3, IterationMode::Order0).unwrap();
            assert_eq!(sol.k0, 1.0);
            assert_eq!(diag.k0_trace, vec![1.0]);
            assert_eq!(sol.order, Some(0));
        }
    }

    #[test]
    fn converge_equal_case() {
        let (sol, diag) = iterate_k0(1.0, 1.0, 0.5, 1e-3, IterationMode::converge()).unwrap();
        assert!((sol.k0 - 1.0).abs() <= 5e-3);
        assert!(diag.converged);
        assert_eq!(diag.k0_trace[0], 1.0);
        assert!(diag.fixed_point_residual <= 10.0 * DEFAULT_TOL);
    }

    #[test]
    fn converge_matches_high_precision_root() {
        // 50-digit root of C2 K - C1 K^-1.2 + C3 at (1.2, 1, 0.3, 1e-3).
        let (sol, diag) = iterate_k0(1.2, 1.0, 0.3, 1e-3, IterationMode::converge()).unwrap();
        assert!(diag.converged);
        assert!((sol.k0 - 1.000_138_865_923_955).abs() < 1e-12, "{:?}", diag);
        assert!(diag.fixed_point_residual <= 10.0 * DEFAULT_TOL);
    }

    #[test]
    fn picard_on_an_expansive_map_is_flagged() {
        // |T'| > 1 at the fixed point once lambda > beta = 1.
        let c = c_constants(1.5, 1.0, 0.4, 1e-3).unwrap();
        let (k_star, _) = iterate_k0(1.5, 1.0, 0.4, 1e-3, IterationMode::converge()).unwrap();
        assert!(c.map_slope(k_star.k0, 1.5).abs() > 1.0);
        match iterate_k0(1.5, 1.0, 0.4, 1e-3, IterationMode::Picard { tol: 1e-10, max_iter: 50 }) {
            Ok((_, diag)) => assert!(!diag.converged),
            Err(Error::Divergence { trace, .. }) => assert_eq!(trace[0], 1.0),
            Err(e) => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn picard_converges_when_contractive() {
        // On the diagonal T'(1) = -beta, so beta < 1 contracts.
        let (sol, diag) =
            iterate_k0(0.5, 0.5, 0.4, 1e-3, IterationMode::Picard { tol: 1e-12, max_iter: 200 }).unwrap();
        assert!(diag.converged);
        assert!((sol.k0 - 1.0).abs() < 5e-3);
    }

    #[test]
    fn left_residuals_are_second_order() {
        let (_, d1) = iterate_k0(1.2, 1.0, 0.3, 1e-2, IterationMode::Order2).unwrap();
        let (_, d2) = iterate_k0(1.2, 1.0, 0.3, 5e-3, IterationMode::Order2).unwrap();
        let ratio = d1.residual_bc_left1 / d2.residual_bc_left1;
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn equal_case_strategies_reduce() {
        let (sol, _) = iterate_k0(1.0, 1.0, 0.5, 1e-4, IterationMode::Order2).unwrap();
        let (g1, g2) = eval_general_strategy(0.5, &sol, 1.0, 1.0, 0.5, 1e-4).unwrap();
        let (e1, e2) = eval_equal_strategy(0.5, 1.0, 0.5).unwrap();
        assert!((g1 - e1).abs() < 1e-3 && (g2 - e2).abs() < 1e-3);
    }

    #[test]
    fn eval_domain() {
        let (sol, _) = iterate_k0(1.2, 1.0, 0.3, 1e-3, IterationMode::Order2).unwrap();
        assert!(eval_general_strategy(5e-4, &sol, 1.2, 1.0, 0.3, 1e-3).is_err());
        assert!(eval_general_strategy(1.5, &sol, 1.2, 1.0, 0.3, 1e-3).is_err());
        assert!(eval_general_strategy(1e-3, &sol, 1.2, 1.0, 0.3, 1e-3).is_ok());
    }

    #[test]
    fn right_link_bounded_by_fixed_point_residual() {
        let (_, diag) = iterate_k0(1.2, 1.0, 0.3, 1e-3, IterationMode::Order2).unwrap();
        assert!(diag.residual_bc_right <= diag.fixed_point_residual + 1e-5);
    }
}
