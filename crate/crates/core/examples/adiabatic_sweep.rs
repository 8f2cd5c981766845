//! Sweep ε and report how `‖I‖`, `‖C − id‖` and `‖U_w − U_ad‖` scale at the
//! end of the ramp.

use fluxlab::adiabatic::{sweep, CouplingTable};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (s_end, levels) = (2.0, 64);
    let epsilons = [0.2, 0.1, 0.05, 0.025];
    let start = std::time::Instant::now();
    let table = CouplingTable::closed_form(s_end, levels)?;
    let report = sweep(&epsilons, s_end, 41, levels, &table)?;
    println!("{:>8} {:>12} {:>12} {:>12} {:>12} {:>12}", "eps", "|I|", "|C-id|", "|Uw-Uad|", "unitarity", "dyson");
    for r in &report.runs {
        let last = r.s.len() - 1;
        println!(
            "{:>8} {:>12.5e} {:>12.5e} {:>12.5e} {:>12.3e} {:>12.3e}",
            r.epsilon,
            r.norm_i[last],
            r.norm_c_minus_id[last],
            r.norm_uw_minus_uad[last],
            r.unitarity_defect.iter().cloned().fold(0.0, f64::max),
            r.dyson_remainder[last]
        );
    }
    if let Some([a, b, c]) = report.exponents {
        println!("exponents: I {a:.4}  C {b:.4}  Uw {c:.4}");
    }
    for r in &report.ratios {
        println!("ratios: {:.4} {:.4} {:.4}", r[0], r[1], r[2]);
    }
    println!("elapsed {:.1?}", start.elapsed());
    Ok(())
}
