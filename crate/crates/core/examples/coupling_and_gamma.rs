//! Coupling matrix between neighbouring levels, its norm under truncation,
//! and the potential Γ solving i[H, Γ] = Π.

use fluxlab::cli::norm_truncations;
use fluxlab::spectral::{
    analytic_spectrum, commutator_residual, coupling_at, coupling_closed_form, coupling_matrix, coupling_norm,
    envelope_range, gamma_bounds, gamma_potential, SectorParams,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let levels = 64;
    for s in [0.0, 0.5, 1.0, 2.0, 4.0] {
        let c = coupling_at(s, levels)?;
        let est = coupling_norm(&c, &norm_truncations(levels));
        let (lo, hi) = envelope_range(&c);
        let q = (c.p[(1, 3)] - coupling_closed_form(s, 1, 3)).norm();
        println!(
            "s = {s}: truncated norms {:.4?} -> {:.4}; envelope [{lo:.3}, {hi:.3}]; P_13 vs closed form {q:.1e}",
            est.norms, est.extrapolated
        );
    }
    println!("(the untruncated norm is pi/2 = {:.4} at every s)", std::f64::consts::FRAC_PI_2);

    for s in [0.0, 1.0, 5.0] {
        let params = SectorParams::new(s, levels)?;
        let family = analytic_spectrum(&params)?;
        let c = coupling_matrix(&family, params.quad_nodes)?;
        let g = gamma_potential(&c, &family)?;
        let b = gamma_bounds(s, levels, 1e-4)?;
        println!(
            "s = {s}: |i[H,G] - P| = {:.1e}, |G| = {:.4}, |dG/ds| = {:.4}",
            commutator_residual(&g, &c, &family.energies),
            b.norm,
            b.derivative_norm
        );
    }
    Ok(())
}
