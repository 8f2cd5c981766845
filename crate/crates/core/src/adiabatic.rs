//! Adiabatic propagator, Dyson corrector and the weakly associated candidate
//! `U_w = U_ad C` on the truncated moving eigenbasis.
//!
//! Matrices are taken as `M_mn(s) = ⟨ψ_m(s), U(s) ψ_n(0)⟩`. Then
//!
//! ```text
//! U_ad = D = diag(e^{−iθ_n(s)/ε}),    θ_n(s) = ∫₀^s E_n = (2n+1)s + s²,
//! (U_ad⁻¹ Π U_ad)_mn = T_mn = Π_mn e^{i(θ_m−θ_n)/ε} = Π_mn e^{2i(m−n)s/ε},
//! C' = i T C,   C(0) = id,    U_w = D C.
//! ```
//!
//! Because `‖D (C − id)‖ = ‖C − id‖`, the distance between `U_w` and `U_ad`
//! equals that of `C` from the identity.
//!
//! In the moving frame the evolution equation `iε∂_s U = G U` reads
//! `iε M' + εΠM = G M`; `U_ad` solves it for `G = H + εΠ` and `U_w` for
//! `G = H`, both exactly on the truncation.
//!
//! `C` is stepped with the fourth-order Magnus integrator at the two Gauss
//! points of each step; the exponential of the anti-Hermitian Magnus
//! generator is summed as a Taylor series, which stays unitary to rounding
//! for the small step norms used. Steps are sized so that the fastest twisted
//! phase advances at most `π/2` per step.

use crate::spectral::{coupling_at, operator_norm, SpectralError};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;
use thiserror::Error;

type CMat = DMatrix<Complex64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AdiabaticError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("twisted coupling integral moved by {change:.3e} under step halving")]
    GridTooCoarse { change: f64 },
    #[error("unitarity defect {defect:.3e} at s = {s} exceeds {limit:.1e}")]
    UnitarityDrift { s: f64, defect: f64, limit: f64 },
    #[error("exponential series did not converge at s = {s}")]
    StepFailure { s: f64 },
    #[error("propagator sequences do not match: {0}")]
    GridMismatch(String),
}

/// Largest unitarity defect tolerated before a run aborts.
pub const UNITARITY_LIMIT: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct AdiabaticConfig {
    pub epsilon: f64,
    /// Ascending output samples starting at 0.
    pub s_grid: Vec<f64>,
    pub levels: usize,
    /// Truncation threshold of the exponential series.
    pub ode_tol: f64,
    /// Largest advance of the fastest twisted phase per step.
    pub phase_step: f64,
}

impl AdiabaticConfig {
    /// Uniform grid of `samples` points on `[0, s_end]`.
    pub fn new(epsilon: f64, s_end: f64, samples: usize, levels: usize) -> Self {
        let samples = samples.max(2);
        let s_grid = (0..samples).map(|k| s_end * k as f64 / (samples - 1) as f64).collect();
        Self { epsilon, s_grid, levels, ode_tol: 1e-16, phase_step: 0.5 * PI }
    }

    pub fn s_end(&self) -> f64 {
        *self.s_grid.last().unwrap_or(&0.0)
    }

    pub fn validate(&self) -> Result<(), AdiabaticError> {
        let bad = |m: String| Err(AdiabaticError::InvalidConfig(m));
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return bad(format!("epsilon = {} outside (0, 1]", self.epsilon));
        }
        if self.s_grid.first() != Some(&0.0) {
            return bad("s_grid must start at 0".into());
        }
        if self.s_grid.windows(2).any(|w| !(w[1] > w[0])) || self.s_grid.iter().any(|s| !s.is_finite()) {
            return bad("s_grid must be strictly ascending and finite".into());
        }
        if self.levels < 2 {
            return bad(format!("levels = {} below 2", self.levels));
        }
        if !(self.ode_tol > 0.0 && self.ode_tol < 1e-6) {
            return bad(format!("ode_tol = {} outside (0, 1e-6)", self.ode_tol));
        }
        if !(self.phase_step > 0.0 && self.phase_step.is_finite()) {
            return bad(format!("phase_step = {} must be positive", self.phase_step));
        }
        Ok(())
    }

    /// Largest step: the fastest twisted phase `2(N−1)s/ε` advances by at most
    /// `phase_step`, and never more than 0.02 so that `Π` is resolved.
    fn max_step(&self) -> f64 {
        let omega = 2.0 * (self.levels - 1) as f64 / self.epsilon;
        (self.phase_step / omega).min(0.02)
    }
}

/// Source of `Π(s)` on `[0, s_end]`. The coupling is purely imaginary; the
/// table yields `Im Π`.
#[derive(Debug, Clone)]
pub struct CouplingTable {
    pub s_end: f64,
    pub levels: usize,
    source: Source,
}

#[derive(Debug, Clone)]
enum Source {
    ClosedForm,
    Sampled { nodes: Vec<f64>, weights: Vec<f64>, values: Vec<DMatrix<f64>> },
    Zero,
}

impl CouplingTable {
    /// Closed-form entries, `|Π_mn| = √(g_m/g_n)/(2|n−m|)` with
    /// `g_k = Γ(k+s+1)/k!` built by recurrence.
    pub fn closed_form(s_end: f64, levels: usize) -> Result<Self, AdiabaticError> {
        if !(s_end > 0.0) || levels < 2 {
            return Err(AdiabaticError::InvalidConfig(format!("s_end = {s_end}, levels = {levels}")));
        }
        Ok(Self { s_end, levels, source: Source::ClosedForm })
    }

    /// Chebyshev interpolant of quadrature-built couplings at `nodes` points
    /// of the second kind.
    pub fn sampled(s_end: f64, levels: usize, nodes: usize) -> Result<Self, AdiabaticError> {
        if !(s_end > 0.0) || nodes < 2 {
            return Err(AdiabaticError::InvalidConfig(format!("s_end = {s_end}, nodes = {nodes}")));
        }
        let k = nodes - 1;
        let xs: Vec<f64> = (0..nodes).map(|j| 0.5 * s_end * (1.0 - (PI * j as f64 / k as f64).cos())).collect();
        let values =
            xs.par_iter().map(|&s| coupling_at(s, levels).map(|c| c.p.map(|z| z.im))).collect::<Result<Vec<_>, _>>()?;
        let weights = (0..nodes)
            .map(|j| {
                let w = if j % 2 == 0 { 1.0 } else { -1.0 };
                if j == 0 || j == k {
                    0.5 * w
                } else {
                    w
                }
            })
            .collect();
        Ok(Self { s_end, levels, source: Source::Sampled { nodes: xs, weights, values } })
    }

    /// `Π ≡ 0`.
    pub fn zero(s_end: f64, levels: usize) -> Self {
        Self { s_end, levels, source: Source::Zero }
    }

    /// `Im Π(s)`.
    pub fn eval(&self, s: f64) -> DMatrix<f64> {
        let n = self.levels;
        match &self.source {
            Source::Zero => DMatrix::zeros(n, n),
            Source::ClosedForm => {
                // √(g_k/g_0), accumulated in logarithms
                let mut root = vec![1.0; n];
                let mut acc = 0.0;
                for (k, r) in root.iter_mut().enumerate().skip(1) {
                    acc += 0.5 * ((k as f64 + s) / k as f64).ln();
                    *r = acc.exp();
                }
                DMatrix::from_fn(n, n, |m, k| {
                    if m == k {
                        return 0.0;
                    }
                    let (lo, hi) = (m.min(k), m.max(k));
                    let sign = if (m + k) % 2 == 0 { 1.0 } else { -1.0 };
                    sign * root[lo] / root[hi] / (2.0 * (k as f64 - m as f64))
                })
            }
            Source::Sampled { nodes, weights, values } => {
                if let Some(j) = nodes.iter().position(|&x| x == s) {
                    return values[j].clone();
                }
                let c: Vec<f64> = nodes.iter().zip(weights).map(|(x, w)| w / (s - x)).collect();
                let total: f64 = c.iter().sum();
                let mut out = DMatrix::zeros(n, n);
                for (cj, v) in c.iter().zip(values) {
                    out += v * (cj / total);
                }
                out
            }
        }
    }

    /// `Π(s)` as a complex matrix.
    pub fn coupling(&self, s: f64) -> CMat {
        self.eval(s).map(|v| Complex64::new(0.0, v))
    }

    /// Twisted coupling `T(s) = D(s)⁻¹ Π(s) D(s)`.
    pub fn twisted(&self, s: f64, epsilon: f64) -> CMat {
        let v = self.eval(s);
        let n = self.levels;
        let z: Vec<Complex64> = (0..n).map(|m| Complex64::from_polar(1.0, 2.0 * m as f64 * s / epsilon)).collect();
        CMat::from_fn(n, n, |a, b| z[a] * z[b].conj() * Complex64::new(0.0, v[(a, b)]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropagatorKind {
    Adiabatic,
    Corrector,
    Weak,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagatorMatrix {
    pub s: f64,
    pub kind: PropagatorKind,
    pub m: CMat,
}

impl PropagatorMatrix {
    /// `‖M†M − id‖`.
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.m.nrows();
        operator_norm(&(cmul(&self.m.adjoint(), &self.m) - CMat::identity(n, n)))
    }
}

/// Complex product through four real products.
fn cmul(a: &CMat, b: &CMat) -> CMat {
    let (ar, ai) = (a.map(|z| z.re), a.map(|z| z.im));
    let (br, bi) = (b.map(|z| z.re), b.map(|z| z.im));
    let re = &ar * &br - &ai * &bi;
    let im = &ar * &bi + &ai * &br;
    re.zip_map(&im, Complex64::new)
}

/// `θ_n(s) = (2n+1)s + s²`.
pub fn phase_integral(n: usize, s: f64) -> f64 {
    (2 * n + 1) as f64 * s + s * s
}

fn phases(levels: usize, s1: f64, s2: f64, epsilon: f64) -> CMat {
    CMat::from_diagonal(&nalgebra::DVector::from_fn(levels, |n, _| {
        Complex64::from_polar(1.0, -(phase_integral(n, s2) - phase_integral(n, s1)) / epsilon)
    }))
}

/// `U_ad(s₂ ← s₁)`, diagonal in the moving basis.
pub fn u_ad_between(levels: usize, s1: f64, s2: f64, epsilon: f64) -> PropagatorMatrix {
    PropagatorMatrix { s: s2, kind: PropagatorKind::Adiabatic, m: phases(levels, s1, s2, epsilon) }
}

/// `U_ad(s ← 0)` on the configured grid.
pub fn u_ad(config: &AdiabaticConfig) -> Result<Vec<PropagatorMatrix>, AdiabaticError> {
    config.validate()?;
    Ok(config.s_grid.iter().map(|&s| u_ad_between(config.levels, 0.0, s, config.epsilon)).collect())
}

fn check_table(config: &AdiabaticConfig, table: &CouplingTable) -> Result<(), AdiabaticError> {
    config.validate()?;
    if table.levels != config.levels {
        return Err(AdiabaticError::InvalidConfig(format!(
            "table has {} levels, config {}",
            table.levels, config.levels
        )));
    }
    if config.s_end() > table.s_end * (1.0 + 1e-12) {
        return Err(AdiabaticError::InvalidConfig(format!(
            "grid reaches {} beyond the coupling table's {}",
            config.s_end(),
            table.s_end
        )));
    }
    Ok(())
}

/// Step boundaries between consecutive samples.
fn substeps(a: f64, b: f64, h_max: f64) -> (usize, f64) {
    let n = ((b - a) / h_max).ceil().max(1.0) as usize;
    (n, (b - a) / n as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwistedIntegral {
    /// `I(s) = ∫₀^s T` at the grid samples.
    pub values: Vec<CMat>,
    pub norms: Vec<f64>,
    /// `|‖I(s_end)‖ − ‖I_{h/2}(s_end)‖|`.
    pub refinement_change: f64,
}

fn integrate_twisted(config: &AdiabaticConfig, table: &CouplingTable, refine: usize) -> Vec<CMat> {
    let rule = crate::quadrature::gauss_legendre(8);
    let n = config.levels;
    let h_max = config.max_step() / refine as f64;
    let mut acc = CMat::zeros(n, n);
    let mut out = vec![acc.clone()];
    for w in config.s_grid.windows(2) {
        let (steps, h) = substeps(w[0], w[1], h_max);
        for k in 0..steps {
            let a = w[0] + k as f64 * h;
            for (&t, &wt) in rule.nodes.iter().zip(&rule.weights) {
                let t_mat = table.twisted(a + 0.5 * h * (t + 1.0), config.epsilon);
                acc += t_mat * Complex64::new(0.5 * h * wt, 0.0);
            }
        }
        out.push(acc.clone());
    }
    out
}

/// `I(s) = ∫₀^s U_ad⁻¹ Π U_ad` by composite 8-point Gauss rules on the
/// integrator steps, checked against a run with halved steps.
pub fn twisted_coupling_integral(
    config: &AdiabaticConfig,
    table: &CouplingTable,
) -> Result<TwistedIntegral, AdiabaticError> {
    check_table(config, table)?;
    let values = integrate_twisted(config, table, 1);
    let fine = integrate_twisted(config, table, 2);
    let norms: Vec<f64> = values.iter().map(operator_norm).collect();
    let refinement_change = (norms.last().unwrap() - operator_norm(fine.last().unwrap())).abs();
    if refinement_change > 1e-6 {
        return Err(AdiabaticError::GridTooCoarse { change: refinement_change });
    }
    Ok(TwistedIntegral { values, norms, refinement_change })
}

/// `exp(Ω) X` for anti-Hermitian `Ω` by the Taylor series.
fn exp_apply(omega: &CMat, x: &CMat, tol: f64) -> Option<CMat> {
    let mut term = x.clone();
    let mut out = x.clone();
    let scale = x.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    for k in 1..60 {
        term = cmul(omega, &term) / Complex64::new(k as f64, 0.0);
        out += &term;
        if term.iter().map(|z| z.norm()).fold(0.0, f64::max) <= tol * scale {
            return Some(out);
        }
    }
    None
}

/// One fourth-order Magnus step of `C' = iTC` from `a` to `a + h` (`h` may be
/// negative). Returns the generator pieces for the Dyson recursion as well.
struct MagnusStep {
    /// `i (h/2)(T₁ + T₂)`
    omega1: CMat,
    /// `(√3/12) h² [T₁, T₂]`
    comm: CMat,
}

fn magnus_pieces(table: &CouplingTable, epsilon: f64, a: f64, h: f64) -> MagnusStep {
    let g = 0.5 / 3f64.sqrt();
    let t1 = table.twisted(a + (0.5 - g) * h, epsilon);
    let t2 = table.twisted(a + (0.5 + g) * h, epsilon);
    let x = cmul(&t1, &t2);
    // T Hermitian, so T₂T₁ = (T₁T₂)†
    let comm = (&x - x.adjoint()) * Complex64::new(3f64.sqrt() / 12.0 * h * h, 0.0);
    let omega1 = (t1 + t2) * Complex64::new(0.0, 0.5 * h);
    MagnusStep { omega1, comm }
}

fn magnus_advance(
    table: &CouplingTable,
    config: &AdiabaticConfig,
    c: &CMat,
    a: f64,
    h: f64,
) -> Result<CMat, AdiabaticError> {
    let p = magnus_pieces(table, config.epsilon, a, h);
    // Ω = h/2 (A₁ + A₂) − (√3/12) h² [A₁, A₂] with A = iT
    let omega = p.omega1 + p.comm;
    exp_apply(&omega, c, config.ode_tol).ok_or(AdiabaticError::StepFailure { s: a })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrectorRun {
    pub corrector: Vec<PropagatorMatrix>,
    /// Dyson partial sum `id + iI − ∫ T I` carried along the same steps.
    pub dyson: Vec<CMat>,
    /// `‖C − (id + iI − ∫TI)‖` at the grid samples.
    pub dyson_remainder: Vec<f64>,
    pub steps: usize,
}

/// Solve `i∂_s C = −(U_ad⁻¹ Π U_ad) C`, `C(0) = id` on the grid.
///
/// The first two Dyson terms `Y₁ = iI`, `Y₂ = −∫TI` obey the nilpotent block
/// system driven by `iT`, whose Magnus-4 exponential truncates exactly:
/// `Y₁ += ω`, `Y₂ += ω Y₁ + ω²/2 + c`, with `ω` and `c` the first and
/// commutator parts of the step generator.
pub fn dyson_corrector(config: &AdiabaticConfig, table: &CouplingTable) -> Result<CorrectorRun, AdiabaticError> {
    check_table(config, table)?;
    let n = config.levels;
    let id = CMat::identity(n, n);
    let mut c = id.clone();
    let mut y1 = CMat::zeros(n, n);
    let mut y2 = CMat::zeros(n, n);
    let mut corrector = vec![PropagatorMatrix { s: 0.0, kind: PropagatorKind::Corrector, m: c.clone() }];
    let mut dyson = vec![id.clone()];
    let mut dyson_remainder = vec![0.0];
    let mut total = 0;
    let h_max = config.max_step();
    for w in config.s_grid.windows(2) {
        let (steps, h) = substeps(w[0], w[1], h_max);
        for k in 0..steps {
            let a = w[0] + k as f64 * h;
            let p = magnus_pieces(table, config.epsilon, a, h);
            let omega = &p.omega1 + &p.comm;
            c = exp_apply(&omega, &c, config.ode_tol).ok_or(AdiabaticError::StepFailure { s: a })?;
            y2 += cmul(&p.omega1, &y1) + cmul(&p.omega1, &p.omega1) * Complex64::new(0.5, 0.0) + &p.comm;
            y1 += &p.omega1;
        }
        total += steps;
        let pm = PropagatorMatrix { s: w[1], kind: PropagatorKind::Corrector, m: c.clone() };
        let defect = pm.unitarity_defect();
        if defect > UNITARITY_LIMIT {
            return Err(AdiabaticError::UnitarityDrift { s: w[1], defect, limit: UNITARITY_LIMIT });
        }
        let partial = &id + &y1 + &y2;
        dyson_remainder.push(operator_norm(&(&c - &partial)));
        dyson.push(partial);
        corrector.push(pm);
    }
    Ok(CorrectorRun { corrector, dyson, dyson_remainder, steps: total })
}

/// `U_w = U_ad C` sample by sample.
pub fn u_weak(
    u_ad: &[PropagatorMatrix],
    corrector: &[PropagatorMatrix],
) -> Result<Vec<PropagatorMatrix>, AdiabaticError> {
    if u_ad.len() != corrector.len() {
        return Err(AdiabaticError::GridMismatch(format!("{} vs {} samples", u_ad.len(), corrector.len())));
    }
    u_ad.iter()
        .zip(corrector)
        .map(|(a, c)| {
            if a.s != c.s || a.kind != PropagatorKind::Adiabatic || c.kind != PropagatorKind::Corrector {
                return Err(AdiabaticError::GridMismatch(format!("sample at s = {} vs {}", a.s, c.s)));
            }
            Ok(PropagatorMatrix { s: a.s, kind: PropagatorKind::Weak, m: cmul(&a.m, &c.m) })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorResidual {
    pub s: f64,
    /// `‖iε∂_sU_ad − (H + εΠ)U_ad‖`
    pub adiabatic: f64,
    /// `‖iε∂_sU_w − H U_w‖`
    pub weak: f64,
}

/// Finite-difference step of the residual check.
pub const RESIDUAL_STEP: f64 = 1e-6;

/// Residuals of the evolution equations at the interior grid samples, with
/// central differences of step [`RESIDUAL_STEP`]. Neighbouring values of `C`
/// come from single Magnus steps off the stored samples.
pub fn residual_generator_check(
    config: &AdiabaticConfig,
    table: &CouplingTable,
    corrector: &[PropagatorMatrix],
) -> Result<Vec<GeneratorResidual>, AdiabaticError> {
    check_table(config, table)?;
    if corrector.len() != config.s_grid.len() {
        return Err(AdiabaticError::GridMismatch(format!(
            "{} corrector samples for {} grid points",
            corrector.len(),
            config.s_grid.len()
        )));
    }
    let n = config.levels;
    let eps = config.epsilon;
    let h = RESIDUAL_STEP;
    let energies = |s: f64| {
        CMat::from_diagonal(&nalgebra::DVector::from_fn(n, |k, _| Complex64::new((2 * k + 1) as f64 + 2.0 * s, 0.0)))
    };
    let interior = &config.s_grid[1..config.s_grid.len() - 1];
    interior
        .iter()
        .zip(&corrector[1..])
        .map(|(&s, c)| {
            if s - h < 0.0 || s + h > table.s_end {
                return Ok(None);
            }
            let d = phases(n, 0.0, s, eps);
            let (dp, dm) = (phases(n, 0.0, s + h, eps), phases(n, 0.0, s - h, eps));
            let pi = table.coupling(s);
            let e = energies(s);
            let i_eps = Complex64::new(0.0, eps / (2.0 * h));
            let eps_c = Complex64::new(eps, 0.0);
            // U_ad: iεD' + εΠD − (E + εΠ)D = iεD' − ED
            let r_ad = (&dp - &dm) * i_eps - &e * &d;
            let cp = magnus_advance(table, config, &c.m, s, h)?;
            let cm = magnus_advance(table, config, &c.m, s, -h)?;
            let (mp, mm, m0) = (cmul(&dp, &cp), cmul(&dm, &cm), cmul(&d, &c.m));
            let r_w = (mp - mm) * i_eps + cmul(&pi, &m0) * eps_c - &e * &m0;
            Ok(Some(GeneratorResidual { s, adiabatic: operator_norm(&r_ad), weak: operator_norm(&r_w) }))
        })
        .filter_map(|r| r.transpose())
        .collect()
}

/// Norm curves of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunCurves {
    pub epsilon: f64,
    pub s: Vec<f64>,
    pub norm_i: Vec<f64>,
    pub norm_c_minus_id: Vec<f64>,
    pub norm_uw_minus_uad: Vec<f64>,
    pub unitarity_defect: Vec<f64>,
    pub dyson_remainder: Vec<f64>,
    pub steps: usize,
}

/// Full run at one `ε`: `I`, `C`, `U_ad`, `U_w` and their norm curves.
pub fn run(config: &AdiabaticConfig, table: &CouplingTable) -> Result<RunCurves, AdiabaticError> {
    let integral = twisted_coupling_integral(config, table)?;
    let corr = dyson_corrector(config, table)?;
    let ad = u_ad(config)?;
    let weak = u_weak(&ad, &corr.corrector)?;
    let n = config.levels;
    let id = CMat::identity(n, n);
    let mut out = RunCurves {
        epsilon: config.epsilon,
        s: config.s_grid.clone(),
        norm_i: integral.norms,
        norm_c_minus_id: Vec::new(),
        norm_uw_minus_uad: Vec::new(),
        unitarity_defect: Vec::new(),
        dyson_remainder: corr.dyson_remainder,
        steps: corr.steps,
    };
    for ((c, a), w) in corr.corrector.iter().zip(&ad).zip(&weak) {
        out.norm_c_minus_id.push(operator_norm(&(&c.m - &id)));
        out.norm_uw_minus_uad.push(operator_norm(&(&w.m - &a.m)));
        let defect = [c, a, w].iter().map(|p| p.unitarity_defect()).fold(0.0, f64::max);
        out.unitarity_defect.push(defect);
    }
    Ok(out)
}

/// Least-squares slope of `ln y` against `ln ε`, or `None` for fewer than two
/// usable points.
pub fn scaling_exponent(epsilons: &[f64], values: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        epsilons.iter().zip(values).filter(|(e, v)| **e > 0.0 && **v > 0.0).map(|(e, v)| (e.ln(), v.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub runs: Vec<RunCurves>,
    /// Fitted exponents of the end values of `‖I‖`, `‖C − id‖`, `‖U_w − U_ad‖`.
    pub exponents: Option<[f64; 3]>,
    /// Ratios of end values between consecutive `ε` (larger over smaller).
    pub ratios: Vec<[f64; 3]>,
}

/// Independent runs over `epsilons`, executed concurrently.
pub fn sweep(
    epsilons: &[f64],
    s_end: f64,
    samples: usize,
    levels: usize,
    table: &CouplingTable,
) -> Result<SweepReport, AdiabaticError> {
    let runs = epsilons
        .par_iter()
        .map(|&eps| run(&AdiabaticConfig::new(eps, s_end, samples, levels), table))
        .collect::<Result<Vec<_>, _>>()?;
    let ends = |f: fn(&RunCurves) -> &Vec<f64>| -> Vec<f64> { runs.iter().map(|r| *f(r).last().unwrap()).collect() };
    let cols = [ends(|r| &r.norm_i), ends(|r| &r.norm_c_minus_id), ends(|r| &r.norm_uw_minus_uad)];
    let exponents = match (
        scaling_exponent(epsilons, &cols[0]),
        scaling_exponent(epsilons, &cols[1]),
        scaling_exponent(epsilons, &cols[2]),
    ) {
        (Some(a), Some(b), Some(c)) => Some([a, b, c]),
        _ => None,
    };
    let ratios = (1..runs.len()).map(|k| [0, 1, 2].map(|j| cols[j][k - 1] / cols[j][k])).collect();
    Ok(SweepReport { runs, exponents, ratios })
}
