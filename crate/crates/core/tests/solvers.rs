use apc::general::{iterate_k0, IterationMode};
use apc::oracle::{self, StrategyTable};
use apc::{eval_equal_strategy, solve_equal, ConflictRatios, Method, StrategyPair};

#[test]
fn equal_case_reference_values() {
    let sol = solve_equal(1.0, 0.5).unwrap();
    assert_eq!(sol.k0, 1.0);
    assert!((sol.k1 - 1.0 / 12.0).abs() < 1e-15);
    assert!((sol.k2 - 1.0 / 12.0).abs() < 1e-15);
    let (f1, f2) = eval_equal_strategy(0.5, 1.0, 0.5).unwrap();
    assert!((f1 - 4.0 / 27.0).abs() < 1e-12);
    assert!((f2 - 4.0 / 27.0).abs() < 1e-12);
    assert_eq!(eval_equal_strategy(0.0, 1.0, 0.5).unwrap(), (0.0, 0.0));
}

#[test]
fn iterates_approach_converged_value_at_small_epsilon() {
    let (conv, diag) = iterate_k0(1.2, 1.0, 0.3, 1e-3, IterationMode::converge()).unwrap();
    assert!(diag.converged);
    assert!(diag.fixed_point_residual < 1e-12);
    for mode in [IterationMode::Order0, IterationMode::Order1, IterationMode::Order2] {
        let (sol, d) = iterate_k0(1.2, 1.0, 0.3, 1e-3, mode).unwrap();
        assert!((sol.k0 - conv.k0).abs() < 1e-3);
        assert!(!d.converged);
    }
}

#[test]
fn table_round_trips_through_csv() {
    let ratios = ConflictRatios::new(1.2, 1.0, 0.3, 1e-3).unwrap();
    let (pair, _) = StrategyPair::solve(ratios, Method::Iterate(IterationMode::Order2)).unwrap();
    let table = StrategyTable::sample(&pair, 64).unwrap();
    let mut buf = Vec::new();
    table.write_csv(&mut buf).unwrap();
    let back = StrategyTable::read_csv(&buf[..], table.params, table.solution).unwrap();
    assert_eq!(back.grid.len(), 64);
    for (a, b) in table.grid.iter().zip(&back.grid) {
        assert_eq!(a.r, b.r);
        assert_eq!(a.f1, b.f1);
        assert_eq!(a.f2, b.f2);
    }
}

#[test]
fn general_best_response_close_to_strategy() {
    let ratios = ConflictRatios::new(1.2, 1.0, 0.3, 1e-3).unwrap();
    let (pair, _) = StrategyPair::solve(ratios, Method::Iterate(IterationMode::converge())).unwrap();
    let table = StrategyTable::sample(&pair, 1024).unwrap();
    let (f1, _) = pair.eval(0.5).unwrap();
    let br = oracle::best_response(0.5, &table).unwrap();
    assert!((br - f1).abs() < oracle::BEST_RESPONSE_TOL_GENERAL, "{br} vs {f1}");
}

#[test]
fn root_method_matches_converged_iteration_as_epsilon_shrinks() {
    let root = apc::solve_k0_root(1.2, 1.0, 0.3).unwrap();
    let mut last = f64::INFINITY;
    for eps in [1e-2, 1e-3, 1e-4] {
        let (sol, _) = iterate_k0(1.2, 1.0, 0.3, eps, IterationMode::converge()).unwrap();
        let gap = (sol.k0 - root).abs();
        assert!(gap < last);
        last = gap;
    }
}

#[test]
fn swapped_labels_give_mirror_strategies() {
    let a = ConflictRatios::new(1.25, 1.0, 0.4, 1e-3).unwrap();
    let b = ConflictRatios::new(0.8, 1.0, 0.4, 1e-3).unwrap();
    assert!(!a.swapped);
    assert!(b.swapped);
    assert!((b.lambda / b.beta - a.lambda / a.beta).abs() < 1e-12);
}
