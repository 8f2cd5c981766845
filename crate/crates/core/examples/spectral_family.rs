//! Eigenvalues of the flux sector: closed form against a finite-volume
//! discretization of the radial operator.

use fluxlab::spectral::{analytic_spectrum, oracle_check, SectorParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for s in [0.0, 0.5, 1.0, 2.0] {
        let params = SectorParams::new(s, 16)?;
        let family = analytic_spectrum(&params)?;
        let shown: Vec<String> = family.energies.iter().take(6).map(|e| format!("{e:.1}")).collect();
        let c = oracle_check(&params)?;
        println!(
            "s = {s:<4} E = {} ...  grid error {:.1e}, overlap 1 - {:.1e}, refinement {:.1e}",
            shown.join(", "),
            c.max_eigenvalue_error,
            1.0 - c.min_overlap,
            c.refinement_change
        );
    }
    Ok(())
}
