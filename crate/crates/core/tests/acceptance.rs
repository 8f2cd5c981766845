//! Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero when
//! any numbered criterion fails. Lines under "module checks" report claims
//! that are measured but do not gate (see the README).

use fluxlab::adiabatic::{self, CouplingTable, SweepReport, UNITARITY_LIMIT};
use fluxlab::classical::{self, AsymptoticsConfig, FluxParams, PhaseState};
use fluxlab::cli::{norm_truncations, EXPONENT_WINDOW, GAMMA_CONSTANT, RATIO_WINDOW};
use fluxlab::reduced::{self, IntegralEqConfig};
use fluxlab::spectral::{self, KernelGrid, SectorParams};
use std::process::Command;
use std::time::Instant;

const PHI: f64 = 0.5;
const STARTS: [([f64; 2], [f64; 2]); 3] =
    [([1.0, 0.5], [0.3, -0.2]), ([-0.7, 1.2], [0.5, 0.4]), ([2.0, -1.0], [-0.6, 0.1])];

type Verdict = (bool, String);

fn params() -> FluxParams {
    FluxParams::new(PHI).unwrap()
}

fn start(k: usize) -> PhaseState {
    PhaseState::new(0.0, STARTS[k].0, STARTS[k].1)
}

fn classical_invariant() -> Verdict {
    let p = params();
    let mut worst = 0.0f64;
    let mut slowest = 0.0f64;
    for k in 0..3 {
        let t0 = Instant::now();
        let traj = classical::integrate(&start(k), 100.0, &p, 1e-12, 2001).unwrap();
        slowest = slowest.max(t0.elapsed().as_secs_f64());
        let k0 = traj.motion_constants()[0];
        worst = worst.max(traj.k_drift() / (1.0 + k0.abs()));
    }
    (worst <= 1e-8 && slowest <= 5.0, format!("max drift/(1+|K0|) = {worst:.2e}, slowest {slowest:.2}s"))
}

fn center_energy_law() -> Verdict {
    let p = params();
    let (mut slope_err, mut resid) = (0.0f64, 0.0f64);
    for k in 0..3 {
        let traj = classical::integrate(&start(k), 100.0, &p, 1e-12, 2001).unwrap();
        let fit = classical::center_energy_fit(&traj, &p).unwrap();
        slope_err = slope_err.max((fit.slope - PHI).abs() / PHI);
        resid = resid.max(fit.max_residual);
    }
    (slope_err <= 1e-8 && resid <= 1e-8, format!("slope rel err {slope_err:.2e}, residual {resid:.2e}"))
}

fn forward_asymptotics() -> Verdict {
    let p = params();
    let cfg = AsymptoticsConfig::default();
    let (mut radius, mut energy, mut angle, mut slowest) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for k in 0..3 {
        let t0 = Instant::now();
        let traj = classical::integrate(&start(k), 1e4, &p, 1e-10, 20001).unwrap();
        slowest = slowest.max(t0.elapsed().as_secs_f64());
        let f = classical::asymptotics_forward(&traj, &p, &cfg).unwrap();
        radius = radius.max((f.radius_ratio - 1.0).abs());
        energy = energy.max(f.energy_deviation);
        angle = angle.max(f.angle_residual);
    }
    let ok = radius <= 0.02 && energy <= 0.02 && angle <= 0.05 && slowest <= 60.0;
    (ok, format!("radius dev {radius:.4}, H dev {energy:.4}, angle residual {angle:.4} rad, slowest {slowest:.2}s"))
}

fn backward_asymptotics() -> Verdict {
    let p = params();
    let cfg = AsymptoticsConfig::default();
    let (mut energy, mut radius) = (0.0f64, 0.0f64);
    for k in 0..3 {
        let traj = classical::integrate(&start(k), -1e3, &p, 1e-10, 2001).unwrap();
        let b = classical::asymptotics_backward(&traj, &p, &cfg).unwrap();
        energy = energy.max((b.energy_ratio - 1.0).abs());
        radius = radius.max((b.radius_ratio - 1.0).abs());
    }
    (energy <= 0.02 && radius <= 0.05, format!("H/(phi|s|) dev {energy:.4}, radius dev {radius:.4}"))
}

fn integral_equation() -> Verdict {
    let cfg = IntegralEqConfig::default();
    let sol = reduced::picard_solve(&cfg, PHI, 10.0).unwrap();
    let points: Vec<f64> = (0..=900).map(|k| 10.0 + 0.1 * k as f64).collect();
    let res = reduced::residual(&sol, &points).unwrap();
    let max_res = res.iter().map(|(a, b)| a.abs().max(b.abs())).fold(0.0, f64::max);
    let traj = reduced::classical_counterpart(&sol, 10.0, 100.0, 1e-12, 901).unwrap();
    let cc = reduced::crosscheck_ode(&sol, &traj, &params()).unwrap();
    let ok = max_res <= 10.0 * cfg.picard_tol && cc.max_deviation <= 1e-6 && cc.points > 800;
    (
        ok,
        format!(
            "residual {max_res:.2e} (tol {:.0e}), ODE deviation {:.2e} over {} points",
            cfg.picard_tol, cc.max_deviation, cc.points
        ),
    )
}

fn spectral_oracle() -> Verdict {
    let t0 = Instant::now();
    let (mut err, mut overlap) = (0.0f64, 1.0f64);
    for s in [0.0, 0.5, 1.0, 2.0] {
        let c = spectral::oracle_check(&SectorParams::new(s, 16).unwrap()).unwrap();
        err = err.max(c.max_eigenvalue_error);
        overlap = overlap.min(c.min_overlap);
    }
    let secs = t0.elapsed().as_secs_f64();
    let ok = err <= 1e-6 && overlap >= 1.0 - 1e-6 && secs <= 30.0;
    (ok, format!("max eigenvalue error {err:.2e}, min overlap 1 - {:.2e}, {secs:.2}s", 1.0 - overlap))
}

fn kernel_bound() -> Verdict {
    let (mut excess, mut drift) = (f64::NEG_INFINITY, 0.0f64);
    let mut ok = true;
    for s in [0.0, 0.5, 1.0, 2.0, 5.0] {
        let c = spectral::kernel_bound_check(s, &KernelGrid::for_s(s)).unwrap();
        excess = excess.max(c.norm.max(c.refined_norm) - c.bound);
        drift = drift.max((c.refined_norm - c.norm).abs() / c.bound);
        ok &= c.passed;
    }
    (ok && excess <= 1e-6, format!("max(norm - bound) = {excess:.2e}, refinement change {drift:.2e} of bound"))
}

fn coupling_structure() -> Verdict {
    let (mut structure, mut env_lo, mut env_hi) = (0.0f64, f64::INFINITY, 0.0f64);
    let mut extrapolated = Vec::new();
    for s in [0.5, 1.0, 2.0] {
        let c = spectral::coupling_at(s, 64).unwrap();
        let n = c.p.nrows();
        let herm = (&c.p - c.p.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        let diag = (0..n).map(|k| c.p[(k, k)].norm()).fold(0.0, f64::max);
        structure = structure.max(herm).max(diag);
        let (lo, hi) = spectral::envelope_range(&c);
        env_lo = env_lo.min(lo);
        env_hi = env_hi.max(hi);
        extrapolated.push(spectral::coupling_norm(&c, &norm_truncations(n)).extrapolated);
    }
    let nondecreasing = extrapolated.windows(2).all(|w| w[1] >= w[0]);
    let ok = structure <= 1e-10 && env_lo >= 0.1 && env_hi <= 10.0 && nondecreasing;
    (
        ok,
        format!(
            "structure defect {structure:.1e}, envelope [{env_lo:.3}, {env_hi:.3}], extrapolated norms {:.4?}",
            extrapolated
        ),
    )
}

fn gamma_construction() -> Verdict {
    let (mut residual, mut sup) = (0.0f64, 0.0f64);
    for k in 0..=50 {
        let s = 0.1 * k as f64;
        let params = SectorParams::new(s, 64).unwrap();
        let family = spectral::analytic_spectrum(&params).unwrap();
        let c = spectral::coupling_matrix(&family, params.quad_nodes).unwrap();
        let g = spectral::gamma_potential(&c, &family).unwrap();
        residual = residual.max(spectral::commutator_residual(&g, &c, &family.energies));
        let b = spectral::gamma_bounds(s, 64, 1e-4).unwrap();
        sup = sup.max(b.norm + b.derivative_norm);
    }
    (
        residual <= 1e-10 && sup <= GAMMA_CONSTANT,
        format!("commutator residual {residual:.1e}, sup |G|+|G'| = {sup:.4} <= {GAMMA_CONSTANT}"),
    )
}

fn default_sweep() -> (SweepReport, f64) {
    let t0 = Instant::now();
    let table = CouplingTable::closed_form(2.0, 64).unwrap();
    let report = adiabatic::sweep(&[0.2, 0.1, 0.05, 0.025], 2.0, 41, 64, &table).unwrap();
    (report, t0.elapsed().as_secs_f64())
}

fn adiabatic_scaling(report: &SweepReport, secs: f64) -> Verdict {
    let defect = report.runs.iter().flat_map(|r| r.unitarity_defect.iter().copied()).fold(0.0, f64::max);
    let Some(e) = report.exponents else {
        return (false, "no exponents fitted".into());
    };
    let in_window = e.iter().all(|x| (EXPONENT_WINDOW.0..=EXPONENT_WINDOW.1).contains(x));
    let ok = in_window && defect <= UNITARITY_LIMIT && secs <= 600.0;
    (ok, format!("exponents I {:.4}, C {:.4}, Uw {:.4}; unitarity defect {defect:.1e}; {secs:.1}s", e[0], e[1], e[2]))
}

fn exact_identity(report: &SweepReport) -> Verdict {
    let mut worst = 0.0f64;
    for r in &report.runs {
        for (a, b) in r.norm_c_minus_id.iter().zip(&r.norm_uw_minus_uad) {
            worst = worst.max((a - b).abs());
        }
    }
    (worst <= 1e-12, format!("max | |Uw-Uad| - |C-id| | = {worst:.1e}"))
}

fn determinism() -> Verdict {
    let runs: [&[&str]; 4] = [
        &["classical", "--s-end", "200", "--samples", "201"],
        &["reduced", "--samples", "101"],
        &["spectral", "--s", "0,1", "--levels", "16", "--check", "all"],
        &["adiabatic", "--levels", "16", "--epsilons", "0.2,0.1", "--samples", "11"],
    ];
    let mut identical = 0;
    for args in runs {
        let dirs = [tempfile::TempDir::new().unwrap(), tempfile::TempDir::new().unwrap()];
        let codes: Vec<Option<i32>> = dirs
            .iter()
            .map(|d| {
                let out = Command::new(env!("CARGO_BIN_EXE_fluxlab")).args(args).arg("--out").arg(d.path()).output();
                out.unwrap().status.code()
            })
            .collect();
        if codes[0] != codes[1] {
            return (false, format!("{} exit codes differ: {codes:?}", args[0]));
        }
        for ext in ["csv", "json"] {
            let name = format!("{}.{ext}", args[0]);
            let a = std::fs::read(dirs[0].path().join(&name)).unwrap();
            let b = std::fs::read(dirs[1].path().join(&name)).unwrap();
            identical += usize::from(!a.is_empty() && a == b);
        }
    }
    (identical == 8, format!("{identical}/8 output files byte-identical across repeated runs"))
}

fn ratio_windows(report: &SweepReport) -> Verdict {
    let inside = |x: &f64| (RATIO_WINDOW.0..=RATIO_WINDOW.1).contains(x);
    let ok = report.ratios.iter().all(|r| r.iter().all(inside));
    let shown: Vec<String> = report.ratios.iter().map(|r| format!("{:.2}/{:.2}/{:.2}", r[0], r[1], r[2])).collect();
    (ok, format!("halving ratios (I/C/Uw) {}", shown.join(", ")))
}

fn wide_grid_norms() -> Verdict {
    let ext: Vec<f64> = [0.0, 0.5, 1.0, 2.0, 4.0]
        .iter()
        .map(|&s| {
            let c = spectral::coupling_at(s, 64).unwrap();
            spectral::coupling_norm(&c, &norm_truncations(64)).extrapolated
        })
        .collect();
    (ext.windows(2).all(|w| w[1] >= w[0]), format!("extrapolated norms on s = 0, 0.5, 1, 2, 4: {ext:.4?}"))
}

fn line(label: &str, name: &str, (ok, detail): &Verdict) {
    println!("{} {label:>3} {name}: {detail}", if *ok { "PASS" } else { "FAIL" });
}

fn main() {
    let (sweep, secs) = default_sweep();
    let criteria: Vec<(&str, Verdict)> = vec![
        ("classical invariant", classical_invariant()),
        ("center-energy law", center_energy_law()),
        ("forward asymptotics", forward_asymptotics()),
        ("backward asymptotics", backward_asymptotics()),
        ("integral-equation equivalence", integral_equation()),
        ("spectral oracle agreement", spectral_oracle()),
        ("kernel bound", kernel_bound()),
        ("coupling structure", coupling_structure()),
        ("gamma construction", gamma_construction()),
        ("adiabatic scaling", adiabatic_scaling(&sweep, secs)),
        ("exact identity", exact_identity(&sweep)),
        ("determinism", determinism()),
    ];
    println!("acceptance criteria");
    for (k, (name, v)) in criteria.iter().enumerate() {
        line(&(k + 1).to_string(), name, v);
    }
    println!("module checks (reported, not gating)");
    line("-", "epsilon-halving ratio windows", &ratio_windows(&sweep));
    line("-", "coupling norm monotone on wide grid", &wide_grid_norms());
    let failed = criteria.iter().filter(|(_, v)| !v.0).count();
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
