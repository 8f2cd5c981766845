//! Drive the command-line front end in-process and read its outputs back.
//! Equivalent to `fluxlab spectral --s 0:2:3 --levels 8 --check kernel --out <dir>`.

use fluxlab::cli;
use fluxlab::io::{load_json, Table};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("fluxlab-cli-{}", std::process::id()));
    let out = dir.to_str().ok_or("non-UTF-8 temp dir")?;

    let code = cli::run(["fluxlab", "spectral", "--s", "0:2:3", "--levels", "8", "--check", "kernel", "--out", out]);
    println!("spectral exited with {code}");
    let table = Table::load(&dir.join("spectral.csv"))?;
    println!("{} rows, header {:?}", table.rows.len(), table.header);
    let report = load_json(&dir.join("spectral.json"))?;
    for p in report["checks"]["kernel"]["points"].as_array().into_iter().flatten() {
        println!("  s = {}: norm {} <= bound {}", p["s"], p["norm"], p["bound"]);
    }

    let code = cli::run(["fluxlab", "classical", "--q0", "1.5e-8,0", "--p0=-1,0", "--s-end", "1", "--out", out]);
    let summary = load_json(&dir.join("classical.json"))?;
    println!("classical exited with {code}; event {}", summary["event"]);

    let code = cli::run(["fluxlab", "classical", "--phi", "0", "--out", out]);
    println!("classical --phi 0 exited with {code}");

    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
