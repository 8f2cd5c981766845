use fluxlab::classical::{self, FluxParams};
use fluxlab::reduced::*;
use proptest::prelude::*;

fn bessel_basis(s: f64) -> [f64; 4] {
    [libm::j0(s), libm::j1(s), libm::y0(s), libm::y1(s)]
}

#[test]
fn zero_forcing_gives_homogeneous_solution() {
    let cfg = IntegralEqConfig { c1: 0.7, c2: -1.3, forcing: Forcing::Zero, ..Default::default() };
    let sol = picard_solve(&cfg, 0.5, 5.0).unwrap();
    for (i, &s) in sol.nodes.iter().enumerate() {
        let b = bessel_basis(s);
        assert_eq!(sol.x1[i], s * (0.7 * b[0] - 1.3 * b[2]));
        assert_eq!(sol.x2[i], s * (0.7 * b[1] - 1.3 * b[3]));
    }
    let pts: Vec<f64> = sol.nodes.iter().step_by(5).copied().collect();
    let res = residual(&sol, &pts).unwrap();
    // only the interpolation error of the grid remains
    assert!(res.iter().all(|(a, b)| a.abs() < 1e-10 && b.abs() < 1e-10));
}

#[test]
fn zero_data_gives_zero_solution() {
    let cfg = IntegralEqConfig { c1: 0.0, c2: 0.0, forcing: Forcing::Zero, ..Default::default() };
    let sol = picard_solve(&cfg, 0.5, 10.0).unwrap();
    assert!(sol.x1.iter().chain(&sol.x2).all(|&v| v == 0.0));
}

#[test]
fn converged_solution_satisfies_the_integral_equation() {
    let cfg = IntegralEqConfig::default();
    let sol = picard_solve(&cfg, 0.5, 10.0).unwrap();
    assert!(*sol.history.last().unwrap() <= cfg.picard_tol);
    let pts: Vec<f64> = sol.nodes.iter().step_by(3).copied().collect();
    let worst = residual(&sol, &pts).unwrap().iter().map(|(a, b)| a.abs().max(b.abs())).fold(0.0, f64::max);
    assert!(worst <= 10.0 * cfg.picard_tol, "residual {worst:e}");
    assert!(sol.tail_estimate > 0.0 && sol.tail_estimate < 1e-2);
}

#[test]
fn interpolation_reproduces_grid_values() {
    let sol = picard_solve(&IntegralEqConfig::default(), 0.5, 10.0).unwrap();
    for i in (0..sol.nodes.len()).step_by(97) {
        let x = sol.eval(sol.nodes[i]).unwrap();
        assert!((x.x1 - sol.x1[i]).abs() < 1e-10);
        assert!((x.x2 - sol.x2[i]).abs() < 1e-10);
    }
    assert!(sol.eval(9.0).is_none());
}

#[test]
fn iteration_limit_is_reported() {
    let cfg = IntegralEqConfig { max_iters: 2, ..Default::default() };
    match picard_solve(&cfg, 0.5, 10.0) {
        Err(ReducedError::NoConvergence { iters, history, .. }) => {
            assert_eq!(iters, 2);
            assert_eq!(history.len(), 2);
        }
        other => panic!("expected NoConvergence, got {other:?}"),
    }
}

#[test]
fn invalid_configs_are_rejected() {
    let base = IntegralEqConfig::default();
    let cases = [
        (IntegralEqConfig { s_max: 50.0, ..base }, 10.0),
        (IntegralEqConfig { picard_tol: 1e-14, ..base }, 10.0),
        (IntegralEqConfig { picard_tol: 1e-3, ..base }, 10.0),
        (IntegralEqConfig { quad_nodes: 4, ..base }, 10.0),
        (base, 0.0),
    ];
    for (cfg, s0) in cases {
        assert!(matches!(picard_solve(&cfg, 0.5, s0), Err(ReducedError::InvalidConfig(_))));
    }
    assert!(matches!(picard_solve(&base, 0.0, 10.0), Err(ReducedError::InvalidConfig(_))));
}

#[test]
fn agrees_with_direct_integration() {
    let sol = picard_solve(&IntegralEqConfig::default(), 0.5, 10.0).unwrap();
    let params = FluxParams::new(0.5).unwrap();
    let tr = classical_counterpart(&sol, 10.0, 100.0, 1e-12, 901).unwrap();
    let cc = crosscheck_ode(&sol, &tr, &params).unwrap();
    assert_eq!(cc.points, 901);
    assert!(cc.max_deviation <= 1e-6, "{cc:?}");
    assert!(cc.max_time_offset < 1e-8);
}

#[test]
fn self_crosscheck_is_exact() {
    // a trajectory built from the solution's own states through the map
    let sol = picard_solve(&IntegralEqConfig::default(), 0.5, 10.0).unwrap();
    let params = FluxParams::new(0.5).unwrap();
    let states: Vec<_> = sol.states().iter().step_by(11).map(|r| to_classical(r, &params).unwrap()).collect();
    let tr = classical::Trajectory { params, unwrapped_arg: vec![0.0; states.len()], states, steps: 0 };
    let cc = crosscheck_ode(&sol, &tr, &params).unwrap();
    assert!(cc.max_deviation < 1e-10, "{cc:?}");
}

#[test]
fn deviation_grows_linearly_with_perturbed_data() {
    let params = FluxParams::new(0.5).unwrap();
    let base = IntegralEqConfig::default();
    let reference = picard_solve(&base, 0.5, 10.0).unwrap();
    let tr = classical_counterpart(&reference, 10.0, 100.0, 1e-12, 451).unwrap();
    let dev = |delta: f64| {
        let cfg = IntegralEqConfig { c1: base.c1 + delta, ..base };
        let sol = picard_solve(&cfg, 0.5, 10.0).unwrap();
        crosscheck_ode(&sol, &tr, &params).unwrap().max_deviation
    };
    let (d1, d2, d4) = (dev(1e-4), dev(2e-4), dev(4e-4));
    assert!(d1 > 1e-5);
    assert!((d2 / d1 - 2.0).abs() < 0.05, "{d1} {d2}");
    assert!((d4 / d2 - 2.0).abs() < 0.05, "{d2} {d4}");
}

#[test]
fn crosscheck_needs_overlap() {
    let sol = picard_solve(&IntegralEqConfig::default(), 0.5, 10.0).unwrap();
    let params = FluxParams::new(0.5).unwrap();
    let far = to_classical(&ReducedState { s: 2000.0, x1: 1.0, x2: 1.0 }, &params).unwrap();
    let tr = classical::integrate(&far, 2010.0, &params, 1e-10, 11).unwrap();
    assert!(matches!(crosscheck_ode(&sol, &tr, &params), Err(ReducedError::NoOverlap)));
}

#[test]
fn planted_constants_are_recovered() {
    let cfg = IntegralEqConfig { c1: 1.0, c2: -2.0, forcing: Forcing::Zero, ..Default::default() };
    let sol = picard_solve(&cfg, 0.5, 10.0).unwrap();
    let ex = extract_constants(&sol, &ExtractConfig::default()).unwrap();
    assert!((ex.c1 - 1.0).abs() < 1e-8 && (ex.c2 + 2.0).abs() < 1e-8, "{ex:?}");
    assert!(!ex.degenerate);
}

#[test]
fn zero_amplitude_is_flagged() {
    let cfg = IntegralEqConfig { c1: 0.0, c2: 0.0, forcing: Forcing::Zero, ..Default::default() };
    let sol = picard_solve(&cfg, 0.5, 10.0).unwrap();
    let ex = extract_constants(&sol, &ExtractConfig::default()).unwrap();
    assert!(ex.degenerate);
    assert!(ex.a0 < 0.05);
}

#[test]
fn extraction_needs_a_long_solution() {
    let cfg = IntegralEqConfig { s_max: 500.0, ..Default::default() };
    let sol = picard_solve(&cfg, 0.5, 10.0).unwrap();
    assert!(matches!(extract_constants(&sol, &ExtractConfig::default()), Err(ReducedError::InsufficientSpan { .. })));
}

#[test]
fn amplitude_agrees_with_classical_asymptotics() {
    let params = FluxParams::new(0.5).unwrap();
    let sol = picard_solve(&IntegralEqConfig::default(), 0.5, 10.0).unwrap();
    let ex = extract_constants(&sol, &ExtractConfig::default()).unwrap();
    let tr = classical_counterpart(&sol, 10.0, 1e4, 1e-10, 100_001).unwrap();
    let fa = classical::asymptotics_forward(&tr, &params, &classical::AsymptoticsConfig::default()).unwrap();
    assert!((ex.a0 - fa.a0).abs() <= 0.01 * fa.a0, "{} vs {}", ex.a0, fa.a0);
    // the fitted tail carries the planted data up to the nonlinear correction
    assert!((ex.c1 - 1.0).abs() < 1e-3 && (ex.c2 - 0.5).abs() < 1e-3, "{ex:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn picard_distances_contract(phi in 0.25f64..1.0, c1 in -1.0f64..1.0, c2 in -1.0f64..1.0) {
        let cfg = IntegralEqConfig { c1, c2, ..Default::default() };
        let sol = picard_solve(&cfg, phi, 10.0).unwrap();
        for w in sol.history.windows(2).skip(1) {
            prop_assert!(w[1] < w[0], "{:?}", sol.history);
        }
    }

    #[test]
    fn map_round_trip(s in 0.5f64..200.0, x1 in -5.0f64..5.0, x2 in -5.0f64..5.0, phi in 0.1f64..2.0) {
        let params = FluxParams::new(phi).unwrap();
        let r = ReducedState { s, x1, x2 };
        let back = from_classical(&to_classical(&r, &params).unwrap(), &params).unwrap();
        let scale = 1.0 + x1.abs() + x2.abs() + phi * s;
        prop_assert!((back.x1 - x1).abs() < 1e-11 * scale);
        prop_assert!((back.x2 - x2).abs() < 1e-11 * scale);
        prop_assert!((back.s - s).abs() < 1e-11 * scale / phi);
    }
}
