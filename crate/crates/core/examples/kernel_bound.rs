//! Operator norm of the integral kernel against the bound 1/(s + 1/2).

use fluxlab::spectral::{kernel_bound_check, KernelGrid};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("{:>5} {:>10} {:>12} {:>12} {:>12}", "s", "bound", "norm", "refined", "half range");
    for s in [0.0, 0.25, 0.5, 1.0, 2.0, 5.0] {
        let c = kernel_bound_check(s, &KernelGrid::for_s(s))?;
        println!(
            "{s:>5} {:>10.6} {:>12.8} {:>12.8} {:>12.8}  {}",
            c.bound,
            c.norm,
            c.refined_norm,
            c.half_range_norm,
            if c.passed { "ok" } else { "FAILED" }
        );
    }
    Ok(())
}
