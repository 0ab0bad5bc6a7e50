//! Independent numerical checks of the solvers.
//!
//! * Best responses are found by maximizing the expected-payoff integral
//!   directly, without going through the first-order conditions.
//! * The sampled strategies are substituted into the pair of first-order
//!   ODEs with finite-difference derivatives.
//! * `K0` is recomputed by bisection on the zero-cutoff boundary equation.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::equal::{boundary_coefficients, EquilibriumSolution, SolutionMethod};
use crate::error::{domain, Error, Result};
use crate::general::{self, IterationMode};
use crate::model::ConflictRatios;
use crate::numerics::{adaptive_simpson, bisect, golden_section_max};
use crate::strategy::StrategyPair;

pub const DEFAULT_GRID: usize = 1024;
pub const QUAD_TOL: f64 = 1e-9;
pub const QUAD_DEPTH: u32 = 30;
pub const GOLDEN_TOL: f64 = 1e-6;
pub const K_MAX: f64 = 1e6;

/// Tolerances a verification run is judged against.
pub const BEST_RESPONSE_TOL_EQUAL: f64 = 1e-3;
pub const BEST_RESPONSE_TOL_GENERAL: f64 = 5e-3;
pub const ODE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub r: f64,
    pub f1: f64,
    pub f2: f64,
    pub feasible1: bool,
    pub feasible2: bool,
}

impl TableRow {
    pub fn new(r: f64, f1: f64, f2: f64) -> Self {
        Self {
            r,
            f1,
            f2,
            feasible1: (0.0..=r).contains(&f1),
            feasible2: (0.0..=r).contains(&f2),
        }
    }
}

/// Strategies sampled on an increasing grid of resource levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyTable {
    pub grid: Vec<TableRow>,
    pub params: ConflictRatios,
    pub solution: EquilibriumSolution,
}

impl StrategyTable {
    /// Samples `pair` at `n` uniformly spaced points of its domain.
    pub fn sample(pair: &StrategyPair, n: usize) -> Result<Self> {
        let lo = pair.r_min();
        let grid = uniform(lo, n)?
            .into_iter()
            .map(|r| pair.eval(r).map(|(f1, f2)| TableRow::new(r, f1, f2)))
            .collect::<Result<Vec<_>>>()?;
        let table = Self {
            grid,
            params: pair.ratios,
            solution: pair.solution,
        };
        table.validate()?;
        Ok(table)
    }

    /// Table of arbitrary bid functions, e.g. for negative controls.
    pub fn from_fn<F>(
        params: ConflictRatios,
        solution: EquilibriumSolution,
        lo: f64,
        n: usize,
        f: F,
    ) -> Result<Self>
    where
        F: Fn(f64) -> (f64, f64),
    {
        let grid = uniform(lo, n)?
            .into_iter()
            .map(|r| {
                let (f1, f2) = f(r);
                TableRow::new(r, f1, f2)
            })
            .collect();
        let table = Self {
            grid,
            params,
            solution,
        };
        table.validate()?;
        Ok(table)
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.len() < 2 {
            return Err(Error::Table("need at least two rows".into()));
        }
        let lo = self.strategy().r_min();
        for w in self.grid.windows(2) {
            if !(w[1].r > w[0].r) {
                return Err(Error::Table(format!(
                    "grid not strictly increasing at r = {}",
                    w[1].r
                )));
            }
        }
        let first = self.grid[0].r;
        let last = self.grid[self.grid.len() - 1].r;
        if first < lo || last > 1.0 {
            return Err(Error::Table(format!(
                "grid [{first}, {last}] leaves the strategy domain [{lo}, 1]"
            )));
        }
        Ok(())
    }

    pub fn strategy(&self) -> StrategyPair {
        StrategyPair {
            ratios: self.params,
            solution: self.solution,
        }
    }

    /// Writes `r,f1,f2,feasible1,feasible2` rows with a header.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        for row in &self.grid {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R, params: ConflictRatios, solution: EquilibriumSolution) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let grid = rdr.deserialize().collect::<std::result::Result<Vec<TableRow>, _>>()?;
        let table = Self {
            grid,
            params,
            solution,
        };
        table.validate()?;
        Ok(table)
    }
}

fn uniform(lo: f64, n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(domain(format!("grid needs at least 2 points, got {n}")));
    }
    let h = (1.0 - lo) / (n - 1) as f64;
    Ok((0..n)
        .map(|i| if i == n - 1 { 1.0 } else { lo + i as f64 * h })
        .collect())
}

/// Expected payoff of country 1 as a function of its bid, against country
/// 2 playing the tabulated strategy.
pub struct PayoffOracle<'a> {
    table: &'a StrategyTable,
    pair: StrategyPair,
}

impl<'a> PayoffOracle<'a> {
    pub fn new(table: &'a StrategyTable) -> Result<Self> {
        table.validate()?;
        Ok(Self {
            table,
            pair: table.strategy(),
        })
    }

    fn f2(&self, r: f64) -> f64 {
        self.pair.eval(r).map(|(_, f2)| f2).unwrap_or(f64::NAN)
    }

    /// Resource intervals of country 2 on which its bid falls below
    /// `target`. `f2` need not be monotone: every table segment whose ends
    /// straddle the target contributes one crossing, located by bisection
    /// on the exact strategy.
    pub fn below(&self, target: f64) -> Vec<(f64, f64)> {
        let g = &self.table.grid;
        let mut out = Vec::new();
        let mut open = (g[0].f2 < target).then_some(g[0].r);
        for w in g.windows(2) {
            let (a, b) = (w[0], w[1]);
            if (a.f2 < target) == (b.f2 < target) {
                continue;
            }
            let f = |r: f64| self.f2(r) - target;
            let x = bisect(f, a.r, b.r, 1e-15)
                .unwrap_or_else(|_| a.r + (target - a.f2) / (b.f2 - a.f2) * (b.r - a.r));
            match open.take() {
                Some(start) => out.push((start, x)),
                None => open = Some(x),
            }
        }
        if let Some(start) = open {
            out.push((start, g[g.len() - 1].r));
        }
        out
    }

    pub fn u1(&self, y: f64, r1: f64) -> Result<f64> {
        let lo = self.table.grid[0].r;
        let hi = self.table.grid[self.table.grid.len() - 1].r;
        if !(y.is_finite() && y >= 0.0) {
            return Err(domain(format!("bid must be finite and nonnegative, got {y}")));
        }
        if !(lo..=hi).contains(&r1) {
            return Err(domain(format!("r1 must lie in [{lo}, {hi}], got {r1}")));
        }
        let ConflictRatios { lambda, beta, alpha, .. } = self.table.params;
        let mut win = 0.0;
        let mut win_len = 0.0;
        for (a, b) in self.below(lambda * y) {
            win += adaptive_simpson(
                |r2| beta * (r1 - y) + (1.0 - alpha) * (r2 - self.f2(r2)),
                a,
                b,
                QUAD_TOL,
                QUAD_DEPTH,
            );
            win_len += b - a;
        }
        let lose = alpha * beta * (r1 - y) * (hi - lo - win_len);
        // Uniform density on [lo, hi].
        Ok((win + lose) / (hi - lo))
    }

    /// Maximizer of [`PayoffOracle::u1`] over bids in `[0, 1]`.
    pub fn best_response(&self, r1: f64) -> Result<f64> {
        let n = DEFAULT_GRID;
        let ys: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let mut best = (0, f64::NEG_INFINITY);
        for (i, &y) in ys.iter().enumerate() {
            let u = self.u1(y, r1)?;
            if u > best.1 {
                best = (i, u);
            }
        }
        let a = ys[best.0.saturating_sub(1)];
        let b = ys[(best.0 + 1).min(n - 1)];
        let y = golden_section_max(|y| self.u1(y, r1).unwrap_or(f64::NEG_INFINITY), a, b, GOLDEN_TOL);
        // Keep the grid point if refinement landed on something worse.
        if self.u1(y, r1)? >= best.1 {
            Ok(y)
        } else {
            Ok(ys[best.0])
        }
    }
}

/// Expected payoff to country 1 bidding `y` with resource `r1`.
pub fn u1_payoff(y: f64, r1: f64, table: &StrategyTable) -> Result<f64> {
    PayoffOracle::new(table)?.u1(y, r1)
}

pub fn best_response(r1: f64, table: &StrategyTable) -> Result<f64> {
    PayoffOracle::new(table)?.best_response(r1)
}

/// Central-difference stencil used for ODE residuals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stencil {
    /// Three-point, second order.
    Second,
    /// Five-point, fourth order.
    Fourth,
}

impl Stencil {
    fn reach(self) -> usize {
        match self {
            Stencil::Second => 1,
            Stencil::Fourth => 2,
        }
    }

    fn derivative(self, v: &[f64], i: usize, h: f64) -> f64 {
        match self {
            Stencil::Second => (v[i + 1] - v[i - 1]) / (2.0 * h),
            Stencil::Fourth => (-v[i + 2] + 8.0 * v[i + 1] - 8.0 * v[i - 1] + v[i - 2]) / (12.0 * h),
        }
    }
}

/// Max residual of the two first-order ODEs over the table's interior,
/// using the fourth-order stencil.
pub fn ode_residual(table: &StrategyTable) -> Result<(f64, f64)> {
    ode_residual_with(table, Stencil::Fourth)
}

pub fn ode_residual_with(table: &StrategyTable, stencil: Stencil) -> Result<(f64, f64)> {
    table.validate()?;
    let g = &table.grid;
    let n = g.len();
    let reach = stencil.reach();
    if n < 2 * reach + 1 {
        return Err(Error::Table(format!("{n} rows are too few for the stencil")));
    }
    let h = (g[n - 1].r - g[0].r) / (n - 1) as f64;
    for (i, row) in g.iter().enumerate() {
        let expect = g[0].r + i as f64 * h;
        if (row.r - expect).abs() > 1e-9 * h.max(1.0) + 1e-6 * h {
            return Err(Error::Table("finite differences need a uniform grid".into()));
        }
    }
    let ConflictRatios { lambda, beta, alpha, .. } = table.params;
    let k0 = table.solution.k0;
    let (p, q) = (beta / lambda, lambda / beta);
    let f1: Vec<f64> = g.iter().map(|row| row.f1).collect();
    let f2: Vec<f64> = g.iter().map(|row| row.f2).collect();
    let mut res = (0.0_f64, 0.0_f64);
    for i in reach..n - reach {
        let r = g[i].r;
        let d = (1.0 - alpha) * r + alpha;
        let rhs1 = k0 * d.powf(p - 1.0) - alpha / d - (1.0 - alpha) * (beta + lambda) * f1[i] / d
            + (1.0 - alpha) * beta * r / d;
        let rhs2 = lambda * beta * k0.powf(-q) * d.powf(q - 1.0) - lambda * beta * alpha / d
            - (1.0 - alpha) * (beta + lambda) * f2[i] / d
            + (1.0 - alpha) * lambda * r / d;
        let lhs1 = lambda * stencil.derivative(&f1, i, h);
        let lhs2 = beta * stencil.derivative(&f2, i, h);
        res.0 = res.0.max((lhs1 - rhs1).abs());
        res.1 = res.1.max((lhs2 - rhs2).abs());
    }
    Ok(res)
}

/// Unique positive root of `a K0 + b K0^(-lambda/beta) = c`.
///
/// With `a > 0` and `b < 0` the left side is strictly increasing in `K0`,
/// running from minus infinity at `0+` to plus infinity.
pub fn solve_k0_root(lambda: f64, beta: f64, alpha: f64) -> Result<f64> {
    let coeffs = boundary_coefficients(lambda, beta, alpha)?;
    let g = |k: f64| coeffs.residual(k, lambda, beta);
    let mut hi = 1.0;
    while g(hi) <= 0.0 {
        hi *= 2.0;
        if hi > K_MAX {
            return Err(Error::NoBracket(format!("no sign change of the K0 equation below {K_MAX}")));
        }
    }
    let mut lo = hi.min(1.0);
    while g(lo) >= 0.0 {
        lo *= 0.5;
        if lo < 1e-300 {
            return Err(Error::NoBracket("no sign change of the K0 equation above 0".into()));
        }
    }
    bisect(g, lo, hi, 1e-15)
}

/// Summary produced by `verify`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub params: ConflictRatios,
    pub solution: EquilibriumSolution,
    pub grid_size: usize,
    pub best_response: Vec<BestResponseCheck>,
    pub best_response_max_gap: f64,
    pub best_response_tol: f64,
    pub ode_residual_1: f64,
    pub ode_residual_2: f64,
    pub ode_tol: f64,
    pub k0_check: K0CrossCheck,
    pub infeasible_rows: usize,
    pub passed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BestResponseCheck {
    pub r1: f64,
    pub strategy: f64,
    pub best_response: f64,
    pub gap: f64,
}

/// `K0` from each route; gaps are reported, not judged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct K0CrossCheck {
    pub k0: f64,
    pub k0_root: f64,
    pub k0_converged: Option<f64>,
    pub gap_root: f64,
    pub gap_converged: Option<f64>,
}

/// Runs every oracle against `pair`.
pub fn verify(pair: &StrategyPair, grid_size: usize, r1_points: &[f64]) -> Result<VerificationReport> {
    let table = StrategyTable::sample(pair, grid_size)?;
    let oracle = PayoffOracle::new(&table)?;
    let mut checks = Vec::with_capacity(r1_points.len());
    for &r1 in r1_points {
        let (f1, _) = pair.eval(r1)?;
        let br = oracle.best_response(r1)?;
        checks.push(BestResponseCheck {
            r1,
            strategy: f1,
            best_response: br,
            gap: (br - f1).abs(),
        });
    }
    let max_gap = checks.iter().map(|c| c.gap).fold(0.0, f64::max);
    let (ode1, ode2) = ode_residual(&table)?;

    let ConflictRatios { lambda, beta, alpha, epsilon, .. } = pair.ratios;
    let k0 = pair.solution.k0;
    let k0_root = solve_k0_root(lambda, beta, alpha)?;
    let k0_converged = if alpha >= general::ALPHA_MIN && (epsilon > 0.0 || lambda == beta) {
        general::iterate_k0(lambda, beta, alpha, epsilon, IterationMode::converge())
            .ok()
            .map(|(s, _)| s.k0)
    } else {
        None
    };
    let br_tol = match pair.solution.method {
        SolutionMethod::ClosedFormEqual => BEST_RESPONSE_TOL_EQUAL,
        _ => BEST_RESPONSE_TOL_GENERAL,
    };
    let infeasible_rows = table
        .grid
        .iter()
        .filter(|row| !(row.feasible1 && row.feasible2))
        .count();
    Ok(VerificationReport {
        params: pair.ratios,
        solution: pair.solution,
        grid_size,
        best_response: checks,
        best_response_max_gap: max_gap,
        best_response_tol: br_tol,
        ode_residual_1: ode1,
        ode_residual_2: ode2,
        ode_tol: ODE_TOL,
        k0_check: K0CrossCheck {
            k0,
            k0_root,
            k0_converged,
            gap_root: (k0 - k0_root).abs(),
            gap_converged: k0_converged.map(|k| (k0 - k).abs()),
        },
        infeasible_rows,
        passed: max_gap <= br_tol && ode1 <= ODE_TOL && ode2 <= ODE_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equal::eval_equal_strategy;
    use crate::strategy::Method;

    fn equal_table(beta: f64, alpha: f64, n: usize) -> StrategyTable {
        let r = ConflictRatios::new(beta, beta, alpha, 0.0).unwrap();
        let (pair, _) = StrategyPair::solve(r, Method::Equal).unwrap();
        StrategyTable::sample(&pair, n).unwrap()
    }

    #[test]
    fn u1_with_certain_loss() {
        let t = equal_table(1.0, 0.5, 257);
        let u = u1_payoff(0.0, 0.5, &t).unwrap();
        assert!((u - 0.5 * 1.0 * 0.5).abs() < 1e-9);
    }

    #[test]
    fn u1_with_certain_win() {
        let t = equal_table(1.0, 0.5, 257);
        let (_, f2_top) = eval_equal_strategy(1.0, 1.0, 0.5).unwrap();
        let y = f2_top + 0.05;
        let u = u1_payoff(y, 0.5, &t).unwrap();
        // Independent closed form: integral over [0, 1] of r2 - f2(r2).
        let mut acc = 0.0;
        let m = 200_000;
        for i in 0..m {
            let r = (i as f64 + 0.5) / m as f64;
            acc += r - eval_equal_strategy(r, 1.0, 0.5).unwrap().1;
        }
        let expect = (0.5 - y) + 0.5 * acc / m as f64;
        assert!((u - expect).abs() < 1e-8, "{u} vs {expect}");
    }

    #[test]
    fn best_response_at_zero_resource_is_zero() {
        let t = equal_table(1.0, 0.5, 257);
        assert!(best_response(0.0, &t).unwrap() < 1e-5);
    }

    #[test]
    fn best_response_matches_closed_form_mid_grid() {
        let t = equal_table(1.0, 0.5, 257);
        let br = best_response(0.5, &t).unwrap();
        assert!((br - 4.0 / 27.0).abs() < 1e-3, "{br}");
    }

    #[test]
    fn win_set_of_a_dipping_strategy_has_two_pieces() {
        let r = ConflictRatios::new(1.2, 1.0, 0.3, 1e-3).unwrap();
        let (pair, _) = StrategyPair::solve(r, Method::Iterate(IterationMode::Order2)).unwrap();
        let t = StrategyTable::sample(&pair, 1024).unwrap();
        let oracle = PayoffOracle::new(&t).unwrap();
        // f2 starts just above zero, dips below and recovers.
        let pieces = oracle.below(0.0);
        assert_eq!(pieces.len(), 1);
        let (a, b) = pieces[0];
        assert!(a > 1e-3 && a < 2e-3 && b > 0.08 && b < 0.1, "{a} {b}");
        assert!(pair.eval(a).unwrap().1.abs() < 1e-12);
        assert!(pair.eval(b).unwrap().1.abs() < 1e-12);
        let mid = oracle.below(0.2);
        assert_eq!(mid.len(), 1);
        assert_eq!(mid[0].0, 1e-3);
    }

    #[test]
    fn ode_residual_of_closed_form_and_control() {
        let t = equal_table(1.0, 0.5, 1024);
        let (a, b) = ode_residual(&t).unwrap();
        assert!(a <= 1e-6 && b <= 1e-6, "{a} {b}");
        let sol = t.solution;
        let bad = StrategyTable::from_fn(t.params, sol, 0.0, 1024, |x| (x, x)).unwrap();
        let (a, _) = ode_residual(&bad).unwrap();
        assert!(a >= 0.1);
    }

    #[test]
    fn second_order_stencil_refines_fourfold() {
        let coarse = ode_residual_with(&equal_table(1.0, 0.5, 513), Stencil::Second).unwrap();
        let fine = ode_residual_with(&equal_table(1.0, 0.5, 1025), Stencil::Second).unwrap();
        let ratio = coarse.0 / fine.0;
        assert!((3.6..4.4).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn root_on_the_diagonal_is_one() {
        for &beta in &[0.25, 1.0, 3.0] {
            for &alpha in &[0.0, 0.5, 0.9] {
                let k = solve_k0_root(beta, beta, alpha).unwrap();
                assert!((k - 1.0).abs() < 1e-12, "beta={beta} alpha={alpha} k={k}");
            }
        }
    }

    #[test]
    fn root_regression_fixture() {
        // 50-digit root of a K + b K^-2 = c at lambda = 2, beta = 1, alpha = 0.3.
        let k = solve_k0_root(2.0, 1.0, 0.3).unwrap();
        assert!((k - 1.003_820_008_865_908_4).abs() < 1e-12);
    }

    #[test]
    fn boundary_equation_is_increasing() {
        for &(l, b) in &[(1.0, 1.0), (2.0, 1.0), (1.5, 0.5), (4.0, 0.25)] {
            for i in 0..10 {
                let alpha = f64::from(i) / 10.0;
                let c = boundary_coefficients(l, b, alpha).unwrap();
                let mut prev = c.residual(1e-3, l, b);
                for k in 1..=400 {
                    let cur = c.residual(1e-3 + f64::from(k) * 0.01, l, b);
                    assert!(cur > prev);
                    prev = cur;
                }
            }
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let t = equal_table(2.0, 0.35, 33);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("r,f1,f2,feasible1,feasible2\n"));
        assert!(!text.contains('\r'));
        let back = StrategyTable::read_csv(&buf[..], t.params, t.solution).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn table_rejects_bad_grids() {
        let r = ConflictRatios::new(1.2, 1.0, 0.3, 1e-3).unwrap();
        let sol = crate::general::complete_solution(1.0, 1.2, 1.0, 0.3, 1e-3, SolutionMethod::IteratedGeneral).unwrap();
        assert!(StrategyTable::from_fn(r, sol, 0.0, 16, |x| (x, x)).is_err());
        assert!(StrategyTable::from_fn(r, sol, 1e-3, 1, |x| (x, x)).is_err());
    }
}
