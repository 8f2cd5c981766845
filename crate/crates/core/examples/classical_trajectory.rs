//! Integrate a trajectory forward to large `s` and backward to negative `s`,
//! then read off the integral of motion, the center–energy law and the
//! asymptotic drift.

use fluxlab::classical::{
    asymptotics_backward, asymptotics_forward, center_energy_fit, integrate, AsymptoticsConfig, FluxParams, PhaseState,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = FluxParams::new(0.5)?;
    let cfg = AsymptoticsConfig::default();
    let starts = [([1.0, 0.5], [0.3, -0.2]), ([-0.7, 1.2], [0.5, 0.4]), ([2.0, -1.0], [-0.6, 0.1])];
    for (q, p) in starts {
        let initial = PhaseState::new(0.0, q, p);
        for tol in [1e-8, 1e-10, 1e-12] {
            let short = integrate(&initial, 100.0, &params, tol, 2001)?;
            let k0 = short.motion_constants()[0];
            let fit = center_energy_fit(&short, &params)?;
            println!(
                "q0 = {q:?}  tol {tol:.0e}: K drift / (tol (1+|K0|)) = {:.3e}, slope - phi = {:.2e}, fit residual {:.2e}",
                short.k_drift() / (tol * (1.0 + k0.abs())),
                fit.slope - params.phi(),
                fit.max_residual
            );
        }
        let t = std::time::Instant::now();
        let fwd = integrate(&initial, 1e4, &params, 1e-10, 20001)?;
        let f = asymptotics_forward(&fwd, &params, &cfg)?;
        println!(
            "  forward to 1e4 ({:.1?}): a0 {:.5}, |q|/sqrt(2 phi s) {:.4}, H deviation {:.2e}, angle residual {:.3}",
            t.elapsed(),
            f.a0,
            f.radius_ratio,
            f.energy_deviation,
            f.angle_residual
        );
        let bwd = integrate(&initial, -1e3, &params, 1e-10, 2001)?;
        let b = asymptotics_backward(&bwd, &params, &cfg)?;
        println!("  backward to -1e3: H/(phi|s|) {:.4}, |q|/sqrt(2 phi |s|) {:.4}", b.energy_ratio, b.radius_ratio);
    }
    Ok(())
}
