//! Bessel functions of the first and second kind, their Wronskian, and
//! generalized Laguerre polynomials.

use fluxlab::specfun::{bessel_j, bessel_y, laguerre};
use std::f64::consts::PI;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("{:>8} {:>22} {:>22} {:>22} {:>22} {:>10}", "x", "J0", "J1", "Y0", "Y1", "wronskian");
    for x in [0.1, 1.0, 2.404825557695773, 8.0, 8.5, 30.0, 1000.0] {
        let (j0, j1) = (bessel_j(0, x)?, bessel_j(1, x)?);
        let (y0, y1) = (bessel_y(0, x)?, bessel_y(1, x)?);
        // J1 Y0 - J0 Y1 = 2/(pi x)
        let w = (j1 * y0 - j0 * y1) * PI * x / 2.0 - 1.0;
        println!("{x:>8} {j0:>22.15e} {j1:>22.15e} {y0:>22.15e} {y1:>22.15e} {w:>10.1e}");
    }

    println!("\nL_n^(alpha)(x) at x = 1.5");
    for alpha in [-0.5, 0.0, 1.25] {
        let row: Vec<String> =
            (0..6).map(|n| laguerre(n, alpha, 1.5).map(|v| format!("{v:>10.6}"))).collect::<Result<_, _>>()?;
        println!("  alpha {alpha:>5}: {}", row.join(" "));
    }

    match bessel_y(0, 0.0) {
        Ok(v) => println!("\nY0(0) = {v}"),
        Err(e) => println!("\nY0(0): {e}"),
    }
    Ok(())
}
