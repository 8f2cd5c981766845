//! Solve the reduced integral equations by Picard iteration, check the
//! residual, compare against a direct integration of the classical flow and
//! read off the asymptotic constants.

use fluxlab::classical::FluxParams;
use fluxlab::reduced::{
    classical_counterpart, crosscheck_ode, extract_constants, picard_solve, residual, ExtractConfig, Forcing,
    IntegralEqConfig,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let phi = 0.5;
    let s_start = 10.0;
    let config = IntegralEqConfig { c1: 1.0, c2: 0.5, ..IntegralEqConfig::default() };

    let sol = picard_solve(&config, phi, s_start)?;
    println!("converged in {} sweeps; update history:", sol.iterations);
    for (k, h) in sol.history.iter().enumerate() {
        println!("  {k:>2}: {h:.3e}");
    }

    let points: Vec<f64> = (0..=90).map(|k| s_start + k as f64).collect();
    let res = residual(&sol, &points)?;
    let worst = res.iter().map(|(a, b)| a.abs().max(b.abs())).fold(0.0, f64::max);
    println!(
        "max residual {worst:.2e} (picard_tol {:.0e}), tail estimate {:.2e}",
        config.picard_tol, sol.tail_estimate
    );

    let traj = classical_counterpart(&sol, s_start, config.s_max, 1e-12, 901)?;
    let cc = crosscheck_ode(&sol, &traj, &FluxParams::new(phi)?)?;
    println!("deviation from the classical flow: {:.2e} over {} points", cc.max_deviation, cc.points);

    let c = extract_constants(&sol, &ExtractConfig::default())?;
    println!("fitted c = ({:.6}, {:.6}), a0 = {:.5}, degenerate: {}", c.c1, c.c2, c.a0, c.degenerate);

    let homogeneous = IntegralEqConfig { forcing: Forcing::Zero, ..config };
    let free = picard_solve(&homogeneous, phi, s_start)?;
    let r = residual(&free, &points)?;
    println!(
        "without forcing: {} sweeps, residual {:.1e}",
        free.iterations,
        r.iter().map(|(a, b)| a.abs().max(b.abs())).fold(0.0, f64::max)
    );
    Ok(())
}
