//! The reduced two-dimensional system behind the classical asymptotics and its
//! Bessel-kernel integral equations.
//!
//! # Change of variables
//!
//! Write planar vectors as complex numbers, `w = v⊥ = i v` for the rotated
//! velocity and `c = q − w` for the guiding center. In the Lorentz form of the
//! flow,
//!
//! ```text
//! c' = φ q / |q|²,      w' = −i w − φ q / |q|²,
//! ```
//!
//! the combination `ζ = c · conj(w)` only depends on the relative angle
//! `ψ = φ₁ + φ₂` and the actions `I₁ = |c|²/2`, `I₂ = |w|²/2`:
//! `ζ = 2 √(I₁ I₂) e^{iψ}`. With `σ = s − s₀` the center–energy law gives
//! `I₁ − I₂ = φ σ`, so
//!
//! ```text
//! J = I₁ + I₂ = R := √(|ζ|² + φ² σ²),     |q|²/2 = R + Re ζ,
//! ζ' = i ζ − φ² σ / (R + Re ζ).
//! ```
//!
//! Setting `x₁ = Re ζ = c·w` and `x₂ = φ + Im ζ`, this is
//!
//! ```text
//! x₁' = x₁/σ − x₂ + F(σ, x₁, x₂),     x₂' = x₁,
//! F(σ, x₁, x₂) = φ − x₁/σ − φ²σ / (√(x₁² + (x₂−φ)² + φ²σ²) + x₁).
//! ```
//!
//! The homogeneous part is solved by `(σ J₀(σ), σ J₁(σ))` and
//! `(σ Y₀(σ), σ Y₁(σ))` with Wronskian `−2σ/π`; variation of constants with
//! data fixed at `σ = ∞` gives
//!
//! ```text
//! x_j(σ) = c₁ σ J_{j−1}(σ) + c₂ σ Y_{j−1}(σ)
//!          − (πσ/2) ∫_σ^∞ (Y_{j−1}(σ) J₁(τ) − J_{j−1}(σ) Y₁(τ)) F(τ, x(τ)) dτ.
//! ```
//!
//! The inverse map picks the gauge `arg c = 0`, `s₀ = 0`:
//! `|c| = √(R + φσ)`, `w = conj(ζ)/|c|`, `q = c + w`, `v = −i w`,
//! `p = v + a(q)`. Since `(q, v)` obey an autonomous system, the classical
//! time of the reconstructed state is `σ` itself.
//!
//! The integral over `[σ, ∞)` is cut at `s_max`. A solution of the truncated
//! equation is still an exact solution of the differential system; the cut
//! only moves the effective `(c₁, c₂)`.

use crate::classical::{
    self, perp, vector_potential, velocity, ClassicalError, FluxParams, PhaseState, Trajectory, Vec2,
};
use crate::quadrature::{gauss_legendre, Panel, Rule};
use crate::specfun::bessel_all;
use std::f64::consts::PI;
use thiserror::Error;

/// Gauss nodes per panel of the Picard grid.
pub const PANEL_NODES: usize = 16;

#[derive(Debug, Error, Clone)]
pub enum ReducedError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("F needs s > 0, got {s}")]
    Domain { s: f64 },
    #[error("F denominator vanishes at s = {s} (x1 = {x1}, x2 = {x2})")]
    DenominatorVanishes { s: f64, x1: f64, x2: f64 },
    #[error("Picard iteration did not converge in {iters} iterations (last distance {distance:.3e})")]
    NoConvergence { iters: usize, distance: f64, history: Vec<f64> },
    #[error("solution and trajectory share no s-interval")]
    NoOverlap,
    #[error("constant extraction needs s_max >= {need}, got {got}")]
    InsufficientSpan { need: f64, got: f64 },
    #[error("homogeneous fit residual {residual:.3e} exceeds {threshold:.3e}")]
    NotConverged { residual: f64, threshold: f64 },
    #[error(transparent)]
    Classical(#[from] ClassicalError),
}

/// Point of the reduced system at time `s` (measured from `s₀`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedState {
    pub s: f64,
    pub x1: f64,
    pub x2: f64,
}

impl ReducedState {
    /// `√(x₁² + (x₂−φ)² + φ²s²)`, equal to `J = I₁ + I₂`.
    pub fn j(&self, phi: f64) -> f64 {
        let y = self.x2 - phi;
        (self.x1 * self.x1 + y * y + phi * phi * self.s * self.s).sqrt()
    }

    /// Relative angle `ψ = φ₁ + φ₂`.
    pub fn psi(&self, phi: f64) -> f64 {
        (self.x2 - phi).atan2(self.x1)
    }

    /// `H = I₂ = (J − φs)/2`, evaluated without cancellation.
    pub fn energy(&self, phi: f64) -> f64 {
        let y = self.x2 - phi;
        let z2 = self.x1 * self.x1 + y * y;
        let ps = phi * self.s;
        if ps >= 0.0 {
            0.5 * z2 / (self.j(phi) + ps)
        } else {
            0.5 * (self.j(phi) - ps)
        }
    }
}

/// What drives the integral equation. `Zero` drops the nonlinearity, leaving
/// the homogeneous Bessel solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Forcing {
    #[default]
    Physical,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralEqConfig {
    pub s_max: f64,
    /// Quadrature nodes per `2π` of `τ`.
    pub quad_nodes: usize,
    pub picard_tol: f64,
    pub max_iters: usize,
    pub c1: f64,
    pub c2: f64,
    pub forcing: Forcing,
}

impl Default for IntegralEqConfig {
    fn default() -> Self {
        Self {
            s_max: 1000.0,
            quad_nodes: 64,
            picard_tol: 1e-10,
            max_iters: 200,
            c1: 1.0,
            c2: 0.5,
            forcing: Forcing::Physical,
        }
    }
}

impl IntegralEqConfig {
    pub fn validate(&self, s_start: f64) -> Result<(), ReducedError> {
        let bad = |m: String| Err(ReducedError::InvalidConfig(m));
        if !(s_start > 0.0) || !s_start.is_finite() {
            return bad(format!("s_start must be positive, got {s_start}"));
        }
        if !(self.s_max >= 10.0 * s_start) || !self.s_max.is_finite() {
            return bad(format!("s_max = {} must be at least 10 * s_start = {}", self.s_max, 10.0 * s_start));
        }
        if self.quad_nodes < 8 {
            return bad(format!("quad_nodes = {} below 8 per period", self.quad_nodes));
        }
        if !(1e-12..=1e-6).contains(&self.picard_tol) {
            return bad(format!("picard_tol = {} outside [1e-12, 1e-6]", self.picard_tol));
        }
        if self.max_iters == 0 {
            return bad("max_iters must be positive".into());
        }
        if !self.c1.is_finite() || !self.c2.is_finite() {
            return bad("c1, c2 must be finite".into());
        }
        Ok(())
    }
}

fn check_phi(phi: f64) -> Result<(), ReducedError> {
    if phi > 0.0 && phi.is_finite() {
        Ok(())
    } else {
        Err(ReducedError::InvalidConfig(format!("phi must be positive, got {phi}")))
    }
}

/// `F(s, x₁, x₂) = φ − x₁/s − φ²s / (√(x₁² + (x₂−φ)² + φ²s²) + x₁)`.
///
/// Evaluated in a rearranged form that avoids the cancellation between `φ`
/// and `φ²s/(…)` at large `s`; with `y = x₂ − φ`, `d = R + x₁` and
/// `Q = (x₁² + y²)/(R + φs)`, `F = (φQ − x₁(x₁ + Q)/s) / d`.
pub fn f_nonlinearity(s: f64, x1: f64, x2: f64, phi: f64) -> Result<f64, ReducedError> {
    if !(s > 0.0) {
        return Err(ReducedError::Domain { s });
    }
    let y = x2 - phi;
    let ps = phi * s;
    let rest = y * y + ps * ps;
    let r = (x1 * x1 + rest).sqrt();
    let d = if x1 >= 0.0 { r + x1 } else { rest / (r - x1) };
    if !(d > 1e-14 * r) {
        return Err(ReducedError::DenominatorVanishes { s, x1, x2 });
    }
    let q = (x1 * x1 + y * y) / (r + ps);
    Ok((phi * q - x1 * (x1 + q) / s) / d)
}

/// Kernel factor `Y_{j−1}(s) J₁(τ) − J_{j−1}(s) Y₁(τ)` for `j ∈ {1, 2}`.
pub fn kernel(j: usize, s: f64, tau: f64) -> f64 {
    let bs = bessel_all(s);
    let bt = bessel_all(tau);
    match j {
        1 => bs[2] * bt[1] - bs[0] * bt[3],
        2 => bs[3] * bt[1] - bs[1] * bt[3],
        _ => panic!("kernel index must be 1 or 2"),
    }
}

fn homogeneous(c1: f64, c2: f64, s: f64, b: &[f64; 4]) -> (f64, f64) {
    (s * (c1 * b[0] + c2 * b[2]), s * (c1 * b[1] + c2 * b[3]))
}

/// Converged solution of the truncated integral equation on its grid.
#[derive(Debug, Clone)]
pub struct PicardSolution {
    pub phi: f64,
    pub config: IntegralEqConfig,
    pub s_start: f64,
    /// Panel width; panel `p` covers `[s_start + p h, s_start + (p+1) h]`.
    pub panel_width: f64,
    pub nodes: Vec<f64>,
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub iterations: usize,
    /// Sup-norm distance between successive iterates.
    pub history: Vec<f64>,
    /// Estimated size of the dropped `∫_{s_max}^∞` contribution.
    pub tail_estimate: f64,
    panel: Panel,
}

impl PicardSolution {
    pub fn s_end(&self) -> f64 {
        self.config.s_max
    }

    pub fn states(&self) -> Vec<ReducedState> {
        (0..self.nodes.len()).map(|i| ReducedState { s: self.nodes[i], x1: self.x1[i], x2: self.x2[i] }).collect()
    }

    /// Interpolated solution at `s` in `[s_start, s_max]`.
    pub fn eval(&self, s: f64) -> Option<ReducedState> {
        let m = self.panel.len();
        let npanels = self.nodes.len() / m;
        if !(s >= self.s_start && s <= self.config.s_max) {
            return None;
        }
        let p = (((s - self.s_start) / self.panel_width) as usize).min(npanels - 1);
        let a = self.s_start + p as f64 * self.panel_width;
        let t = 2.0 * (s - a) / self.panel_width - 1.0;
        let x1 = self.panel.interpolate(&self.x1[p * m..(p + 1) * m], t);
        let x2 = self.panel.interpolate(&self.x2[p * m..(p + 1) * m], t);
        Some(ReducedState { s, x1, x2 })
    }
}

/// Solve the truncated integral equation on `[s_start, s_max]` by Picard
/// iteration from the homogeneous solution.
///
/// The kernel separates, so each sweep needs only the cumulative tail
/// integrals `A(s) = ∫_s^{s_max} J₁F` and `B(s) = ∫_s^{s_max} Y₁F`, computed
/// panel by panel with exact-for-polynomials partial-panel weights.
pub fn picard_solve(config: &IntegralEqConfig, phi: f64, s_start: f64) -> Result<PicardSolution, ReducedError> {
    check_phi(phi)?;
    config.validate(s_start)?;
    let panel = Panel::new(PANEL_NODES);
    let m = PANEL_NODES;
    let target = 2.0 * PI * m as f64 / config.quad_nodes as f64;
    let npanels = ((config.s_max - s_start) / target).ceil().max(1.0) as usize;
    let h = (config.s_max - s_start) / npanels as f64;
    let n = npanels * m;

    let mut nodes = Vec::with_capacity(n);
    for p in 0..npanels {
        let a = s_start + p as f64 * h;
        for &t in &panel.rule.nodes {
            nodes.push(a + 0.5 * h * (t + 1.0));
        }
    }
    let bessel: Vec<[f64; 4]> = nodes.iter().map(|&s| bessel_all(s)).collect();
    let (h1, h2): (Vec<f64>, Vec<f64>) =
        nodes.iter().zip(&bessel).map(|(&s, b)| homogeneous(config.c1, config.c2, s, b)).unzip();

    let mut x1 = h1.clone();
    let mut x2 = h2.clone();
    let mut history = Vec::new();
    let mut f = vec![0.0; n];
    if config.forcing == Forcing::Zero {
        let sol = PicardSolution {
            phi,
            config: *config,
            s_start,
            panel_width: h,
            nodes,
            x1,
            x2,
            iterations: 0,
            history,
            tail_estimate: 0.0,
            panel,
        };
        return Ok(sol);
    }

    let mut ga = vec![0.0; m];
    let mut gb = vec![0.0; m];
    let mut iterations = 0;
    loop {
        for i in 0..n {
            f[i] = f_nonlinearity(nodes[i], x1[i], x2[i], phi)?;
        }
        let mut acc_a = 0.0;
        let mut acc_b = 0.0;
        let mut dist: f64 = 0.0;
        let mut new1 = vec![0.0; n];
        let mut new2 = vec![0.0; n];
        for p in (0..npanels).rev() {
            let off = p * m;
            for k in 0..m {
                ga[k] = bessel[off + k][1] * f[off + k];
                gb[k] = bessel[off + k][3] * f[off + k];
            }
            for i in 0..m {
                let w = &panel.tail[i];
                let pa: f64 = w.iter().zip(&ga).map(|(a, b)| a * b).sum();
                let pb: f64 = w.iter().zip(&gb).map(|(a, b)| a * b).sum();
                let a_int = acc_a + 0.5 * h * pa;
                let b_int = acc_b + 0.5 * h * pb;
                let idx = off + i;
                let b = &bessel[idx];
                let pre = 0.5 * PI * nodes[idx];
                new1[idx] = h1[idx] - pre * (b[2] * a_int - b[0] * b_int);
                new2[idx] = h2[idx] - pre * (b[3] * a_int - b[1] * b_int);
                dist = dist.max((new1[idx] - x1[idx]).abs()).max((new2[idx] - x2[idx]).abs());
            }
            let wts = &panel.rule.weights;
            acc_a += 0.5 * h * wts.iter().zip(&ga).map(|(a, b)| a * b).sum::<f64>();
            acc_b += 0.5 * h * wts.iter().zip(&gb).map(|(a, b)| a * b).sum::<f64>();
        }
        x1 = new1;
        x2 = new2;
        iterations += 1;
        history.push(dist);
        if !dist.is_finite() {
            return Err(ReducedError::NoConvergence { iters: iterations, distance: dist, history });
        }
        if dist <= config.picard_tol {
            break;
        }
        if iterations >= config.max_iters {
            return Err(ReducedError::NoConvergence { iters: iterations, distance: dist, history });
        }
    }

    // |∫_{s_max}^∞ J₁F| is bounded by the local amplitude of J₁F over the
    // slowest oscillation (unit frequency).
    let f_tail = (n - m..n)
        .map(|i| f_nonlinearity(nodes[i], x1[i], x2[i], phi).map(f64::abs))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let amp = (2.0 / (PI * config.s_max)).sqrt() * f_tail;
    let tail_estimate = nodes
        .iter()
        .zip(&bessel)
        .map(|(&s, b)| 0.5 * PI * s * (b[0].abs() + b[2].abs()).max(b[1].abs() + b[3].abs()) * 2.0 * amp)
        .fold(0.0, f64::max);

    Ok(PicardSolution {
        phi,
        config: *config,
        s_start,
        panel_width: h,
        nodes,
        x1,
        x2,
        iterations,
        history,
        tail_estimate,
        panel,
    })
}

/// Residual of the interpolated solution under the truncated integral
/// operator, evaluated with an independent quadrature: 24-point Gauss rules on
/// panels of width at most `π/4`, plus a fresh rule on each partial interval.
pub fn residual(sol: &PicardSolution, points: &[f64]) -> Result<Vec<(f64, f64)>, ReducedError> {
    const NODES: usize = 24;
    let rule = gauss_legendre(NODES);
    let s_max = sol.config.s_max;
    let npanels = ((s_max - sol.s_start) / (PI / 4.0)).ceil() as usize;
    let h = (s_max - sol.s_start) / npanels as f64;
    let forced = sol.config.forcing == Forcing::Physical;

    let integrand = |tau: f64| -> Result<(f64, f64), ReducedError> {
        if !forced {
            return Ok((0.0, 0.0));
        }
        let x = sol.eval(tau).expect("node inside the solution interval");
        let f = f_nonlinearity(tau, x.x1, x.x2, sol.phi)?;
        let b = bessel_all(tau);
        Ok((b[1] * f, b[3] * f))
    };
    let integrate = |a: f64, b: f64, rule: &Rule| -> Result<(f64, f64), ReducedError> {
        let (mut sa, mut sb) = (0.0, 0.0);
        for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
            let (ga, gb) = integrand(a + 0.5 * (b - a) * (t + 1.0))?;
            sa += w * ga;
            sb += w * gb;
        }
        Ok((0.5 * (b - a) * sa, 0.5 * (b - a) * sb))
    };

    // cumulative tails at panel boundaries
    let mut tail_a = vec![0.0; npanels + 1];
    let mut tail_b = vec![0.0; npanels + 1];
    for p in (0..npanels).rev() {
        let a = sol.s_start + p as f64 * h;
        let (ia, ib) = integrate(a, a + h, &rule)?;
        tail_a[p] = tail_a[p + 1] + ia;
        tail_b[p] = tail_b[p + 1] + ib;
    }

    points
        .iter()
        .map(|&s| {
            let x = sol.eval(s).ok_or(ReducedError::NoOverlap)?;
            let p = (((s - sol.s_start) / h) as usize).min(npanels - 1);
            let right = sol.s_start + (p + 1) as f64 * h;
            let (ia, ib) = if right > s { integrate(s, right, &rule)? } else { (0.0, 0.0) };
            let a_int = tail_a[p + 1] + ia;
            let b_int = tail_b[p + 1] + ib;
            let b = bessel_all(s);
            let (h1, h2) = homogeneous(sol.config.c1, sol.config.c2, s, &b);
            let pre = 0.5 * PI * s;
            let t1 = h1 - pre * (b[2] * a_int - b[0] * b_int);
            let t2 = h2 - pre * (b[3] * a_int - b[1] * b_int);
            Ok((x.x1 - t1, x.x2 - t2))
        })
        .collect()
}

/// Classical state with the same reduced coordinates, in the gauge
/// `arg c = 0`, `s₀ = 0`.
pub fn to_classical(state: &ReducedState, params: &FluxParams) -> Result<PhaseState, ReducedError> {
    let phi = params.phi();
    check_phi(phi)?;
    let sigma = state.s;
    let r = state.j(phi);
    let c_abs = (r + phi * sigma).max(0.0).sqrt();
    if c_abs == 0.0 {
        return Err(ReducedError::DenominatorVanishes { s: sigma, x1: state.x1, x2: state.x2 });
    }
    // w = conj(ζ)/|c| with ζ = x₁ + i(x₂ − φ)
    let w = Vec2::new(state.x1 / c_abs, -(state.x2 - phi) / c_abs);
    let q = Vec2::new(c_abs, 0.0) + w;
    // w = v⊥ = i v, so v = −i w
    let v = Vec2::new(w.y, -w.x);
    let a = vector_potential(sigma, &q, params)?;
    let p = v + a;
    Ok(PhaseState { s: sigma, q, p })
}

/// Reduced coordinates of a classical state. The reduced time is read off the
/// center–energy law, `σ = (I₁ − I₂)/φ`.
pub fn from_classical(state: &PhaseState, params: &FluxParams) -> Result<ReducedState, ReducedError> {
    let phi = params.phi();
    check_phi(phi)?;
    let v = velocity(state, params)?;
    let w = perp(&v);
    let c = state.q - w;
    let sigma = 0.5 * (c.norm_squared() - w.norm_squared()) / phi;
    // ζ = c · conj(w)
    let x1 = c.dot(&w);
    let im = c.y * w.x - c.x * w.y;
    Ok(ReducedState { s: sigma, x1, x2: phi + im })
}

/// Classical trajectory started from the solution at `s_from`, sampled at
/// `samples` uniform times up to `s_to`.
pub fn classical_counterpart(
    sol: &PicardSolution,
    s_from: f64,
    s_to: f64,
    tol: f64,
    samples: usize,
) -> Result<Trajectory, ReducedError> {
    let params = FluxParams::new(sol.phi)?;
    let start = sol.eval(s_from).ok_or(ReducedError::NoOverlap)?;
    let initial = to_classical(&start, &params)?;
    Ok(classical::integrate(&initial, s_to, &params, tol, samples)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossCheck {
    pub max_deviation: f64,
    pub points: usize,
    /// Largest `|s − σ|`, i.e. the drift of the recovered `s₀`.
    pub max_time_offset: f64,
}

/// Compare a Picard solution with a classical trajectory through the
/// reduced coordinates. The deviation is the largest componentwise
/// difference in `(x₁, x₂)` over trajectory samples inside the solution's
/// interval.
pub fn crosscheck_ode(
    sol: &PicardSolution,
    trajectory: &Trajectory,
    params: &FluxParams,
) -> Result<CrossCheck, ReducedError> {
    let mut out = CrossCheck { max_deviation: 0.0, points: 0, max_time_offset: 0.0 };
    for st in &trajectory.states {
        let r = from_classical(st, params)?;
        let Some(x) = sol.eval(r.s) else { continue };
        out.points += 1;
        out.max_deviation = out.max_deviation.max((x.x1 - r.x1).abs()).max((x.x2 - r.x2).abs());
        out.max_time_offset = out.max_time_offset.max((st.s - r.s).abs());
    }
    if out.points == 0 {
        return Err(ReducedError::NoOverlap);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractConfig {
    /// Fraction of `[s_start, s_max]` at the top used for the fit.
    pub tail_fraction: f64,
    /// Threshold on the relative RMS fit residual.
    pub max_fit_residual: f64,
    pub min_span: f64,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        Self { tail_fraction: 0.1, max_fit_residual: 0.05, min_span: 1e3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractedConstants {
    pub c1: f64,
    pub c2: f64,
    pub a0: f64,
    pub h_limit: f64,
    /// Relative RMS residual of the homogeneous fit.
    pub fit_residual: f64,
    /// Set when the tail energy is within a factor two of the decaying
    /// zero-amplitude value, so no positive `a₀` can be resolved.
    pub degenerate: bool,
}

/// Fit the top of the solution against `{s J_{j−1}, s Y_{j−1}}` (both
/// components jointly) and read `a₀ = √(4φ H_limit)` off the tail mean of the
/// energy.
pub fn extract_constants(sol: &PicardSolution, cfg: &ExtractConfig) -> Result<ExtractedConstants, ReducedError> {
    let s_max = sol.config.s_max;
    if s_max < cfg.min_span {
        return Err(ReducedError::InsufficientSpan { need: cfg.min_span, got: s_max });
    }
    let cut = s_max - cfg.tail_fraction * (s_max - sol.s_start);
    let (mut m11, mut m12, mut m22, mut r1, mut r2, mut yy) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    let mut h_sum = 0.0;
    // energy of the zero-amplitude state, which decays like φ/(4s)
    let mut floor_sum = 0.0;
    let mut count = 0usize;
    let idx: Vec<usize> = (0..sol.nodes.len()).filter(|&i| sol.nodes[i] >= cut).collect();
    for &i in &idx {
        let s = sol.nodes[i];
        let b = bessel_all(s);
        for (u, v, y) in [(s * b[0], s * b[2], sol.x1[i]), (s * b[1], s * b[3], sol.x2[i])] {
            m11 += u * u;
            m12 += u * v;
            m22 += v * v;
            r1 += u * y;
            r2 += v * y;
            yy += y * y;
        }
        let st = ReducedState { s, x1: sol.x1[i], x2: sol.x2[i] };
        h_sum += st.energy(sol.phi);
        floor_sum += ReducedState { s, x1: 0.0, x2: 0.0 }.energy(sol.phi);
        count += 1;
    }
    let det = m11 * m22 - m12 * m12;
    let (c1, c2) = if det > 0.0 { ((m22 * r1 - m12 * r2) / det, (m11 * r2 - m12 * r1) / det) } else { (0.0, 0.0) };
    let mut res = 0.0;
    for &i in &idx {
        let s = sol.nodes[i];
        let b = bessel_all(s);
        let (h1, h2) = homogeneous(c1, c2, s, &b);
        res += (sol.x1[i] - h1).powi(2) + (sol.x2[i] - h2).powi(2);
    }
    let fit_residual = if yy > 0.0 { (res / yy).sqrt() } else { 0.0 };
    if fit_residual > cfg.max_fit_residual {
        return Err(ReducedError::NotConverged { residual: fit_residual, threshold: cfg.max_fit_residual });
    }
    let h_limit = if count > 0 { h_sum / count as f64 } else { 0.0 };
    let a0 = (4.0 * sol.phi * h_limit).max(0.0).sqrt();
    let degenerate = !(h_sum > 2.0 * floor_sum);
    Ok(ExtractedConstants { c1, c2, a0, h_limit, fit_residual, degenerate })
}
