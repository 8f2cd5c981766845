//! Classical flow of `H(s) = ½ (p − a(s, q))²` with
//! `a(s, q) = (½ − φ s / |q|²) q⊥`, in rescaled units, together with the
//! guiding-center / action–angle picture and the two integrals attached to it.

use crate::ode::{DormandPrince, OdeError};
use nalgebra::Vector2;
use std::f64::consts::PI;
use thiserror::Error;

pub type Vec2 = Vector2<f64>;

/// Radius below which the trajectory is considered to have hit the flux line.
pub const R_GUARD: f64 = 1e-8;
/// Local error tolerance handed to the stepper, as a fraction of the
/// requested tolerance, so that accumulated drift stays within it.
const LOCAL_TOL_FACTOR: f64 = 0.05;

/// Largest angle increment accepted between consecutive samples when
/// unwrapping `arg q`.
pub const MAX_UNWRAP_STEP: f64 = 0.9 * PI;

#[derive(Debug, Error, Clone)]
pub enum ClassicalError {
    #[error("flux ramp rate must be positive and finite, got {0}")]
    InvalidFlux(f64),
    #[error("position {0:?} is at the puncture")]
    Singularity([f64; 2]),
    #[error("integrator tolerance {0} outside [1e-13, 1e-6]")]
    InvalidTolerance(f64),
    #[error("trajectory reached the puncture (|q| < {R_GUARD}) at s = {s}")]
    PunctureHit { s: f64, partial: Box<Trajectory> },
    #[error("step size underflow at s = {s}")]
    StepFailure { s: f64 },
    #[error("arg q jumped by {delta} rad between samples; refine the sampling")]
    Branch { delta: f64 },
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("trajectory must reach |s| >= {need}, ends at {got}")]
    InsufficientSpan { need: f64, got: f64 },
    #[error("tail of H(s) not settled: relative spread {spread:.3e} > {threshold:.3e}")]
    NotConverged { spread: f64, threshold: f64 },
}

/// Rescaled flux ramp rate `φ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxParams {
    phi: f64,
}

impl FluxParams {
    pub fn new(phi: f64) -> Result<Self, ClassicalError> {
        if phi.is_finite() && phi > 0.0 {
            Ok(Self { phi })
        } else {
            Err(ClassicalError::InvalidFlux(phi))
        }
    }

    /// `φ = 0`: homogeneous field without flux ramp. Used as the autonomous
    /// reference case (closed cyclotron orbits); not a valid driven run.
    pub fn homogeneous() -> Self {
        Self { phi: 0.0 }
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseState {
    pub s: f64,
    pub q: Vec2,
    pub p: Vec2,
}

impl PhaseState {
    pub fn new(s: f64, q: [f64; 2], p: [f64; 2]) -> Self {
        Self { s, q: Vec2::from(q), p: Vec2::from(p) }
    }

    fn to_vec(self) -> [f64; 4] {
        [self.q.x, self.q.y, self.p.x, self.p.y]
    }

    fn from_slice(s: f64, y: &[f64]) -> Self {
        Self { s, q: Vec2::new(y[0], y[1]), p: Vec2::new(y[2], y[3]) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuidingDecomposition {
    pub s: f64,
    pub c: Vec2,
    pub v: Vec2,
    pub i1: f64,
    pub i2: f64,
    pub phi1: f64,
    pub phi2: f64,
}

impl GuidingDecomposition {
    /// `√(2 I₁) e(φ₁) + √(2 I₂) e(−φ₂)`, which equals `q`.
    pub fn reconstruct(&self) -> Vec2 {
        let r1 = (2.0 * self.i1).sqrt();
        let r2 = (2.0 * self.i2).sqrt();
        e(self.phi1) * r1 + e(-self.phi2) * r2
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionConstant {
    pub k: f64,
    pub s0: f64,
}

/// `q⊥ = (−q₂, q₁)`.
#[inline]
pub fn perp(q: &Vec2) -> Vec2 {
    Vec2::new(-q.y, q.x)
}

/// `e(φ) = (cos φ, sin φ)`.
#[inline]
pub fn e(angle: f64) -> Vec2 {
    Vec2::new(angle.cos(), angle.sin())
}

fn check_position(q: &Vec2) -> Result<f64, ClassicalError> {
    let r2 = q.norm_squared();
    if r2 > 0.0 && r2.is_finite() {
        Ok(r2)
    } else {
        Err(ClassicalError::Singularity([q.x, q.y]))
    }
}

pub fn vector_potential(s: f64, q: &Vec2, params: &FluxParams) -> Result<Vec2, ClassicalError> {
    let r2 = check_position(q)?;
    Ok(perp(q) * (0.5 - params.phi * s / r2))
}

/// Kinetic velocity `v = p − a(s, q)`.
pub fn velocity(state: &PhaseState, params: &FluxParams) -> Result<Vec2, ClassicalError> {
    Ok(state.p - vector_potential(state.s, &state.q, params)?)
}

pub fn hamiltonian(state: &PhaseState, params: &FluxParams) -> Result<f64, ClassicalError> {
    Ok(0.5 * velocity(state, params)?.norm_squared())
}

/// Canonical equations. With `g = ½ − φ s/|q|²` and `a = g q⊥`:
///
/// ```text
/// dq/ds = ∂H/∂p = v
/// dp/ds = −∂H/∂q = (∂a/∂q)ᵀ v
///       = (v · q⊥) ∇g + g (∂q⊥/∂q)ᵀ v
///       = (2 φ s (v · q⊥) / |q|⁴) q − g v⊥
/// ```
///
/// using `∇g = 2 φ s q / |q|⁴` and `(∂q⊥/∂q)ᵀ v = (v₂, −v₁) = −v⊥`.
pub fn flow_rhs(state: &PhaseState, params: &FluxParams) -> Result<(Vec2, Vec2), ClassicalError> {
    let r2 = check_position(&state.q)?;
    let g = 0.5 - params.phi * state.s / r2;
    let qp = perp(&state.q);
    let v = state.p - qp * g;
    let dp = state.q * (2.0 * params.phi * state.s * v.dot(&qp) / (r2 * r2)) - perp(&v) * g;
    Ok((v, dp))
}

pub fn to_guiding_center(state: &PhaseState, params: &FluxParams) -> Result<GuidingDecomposition, ClassicalError> {
    let v = velocity(state, params)?;
    let vp = perp(&v);
    let c = state.q - vp;
    let phi1 = if c.norm_squared() > 0.0 { c.y.atan2(c.x) } else { 0.0 };
    // v⊥ = |v| e(−φ₂)
    let phi2 = if vp.norm_squared() > 0.0 { -vp.y.atan2(vp.x) } else { 0.0 };
    Ok(GuidingDecomposition { s: state.s, c, v, i1: 0.5 * c.norm_squared(), i2: 0.5 * v.norm_squared(), phi1, phi2 })
}

/// Continuous branch of `arg q` along one trajectory.
#[derive(Debug, Clone, Copy, Default)]
pub struct ArgBranch {
    last: Option<f64>,
}

impl ArgBranch {
    pub fn new() -> Self {
        Self::default()
    }

    /// Start from a known unwrapped angle.
    pub fn starting_at(angle: f64) -> Self {
        Self { last: Some(angle) }
    }

    pub fn current(&self) -> Option<f64> {
        self.last
    }

    /// Unwrap `principal` (any representative) against the running value.
    pub fn advance(&mut self, principal: f64) -> Result<f64, ClassicalError> {
        let next = match self.last {
            None => wrap_angle(principal),
            Some(prev) => {
                let delta = wrap_angle(principal - prev);
                if delta.abs() >= MAX_UNWRAP_STEP {
                    return Err(ClassicalError::Branch { delta });
                }
                prev + delta
            }
        };
        self.last = Some(next);
        Ok(next)
    }
}

/// Wrap to `(−π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

/// `K = I₂ − φ arg(√(2I₁) e(φ₁) + √(2I₂) e(−φ₂))` on the branch carried by
/// `branch`, and the center–energy offset `s₀ = s − (I₁ − I₂)/φ`.
pub fn motion_constant(
    decomp: &GuidingDecomposition,
    params: &FluxParams,
    branch: &mut ArgBranch,
) -> Result<MotionConstant, ClassicalError> {
    let q = decomp.reconstruct();
    check_position(&q)?;
    let arg = branch.advance(q.y.atan2(q.x))?;
    let s0 = if params.phi > 0.0 { decomp.s - (decomp.i1 - decomp.i2) / params.phi } else { f64::NAN };
    Ok(MotionConstant { k: decomp.i2 - params.phi * arg, s0 })
}

/// Sampled trajectory with the continuous `arg q` branch at every sample.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub params: FluxParams,
    pub states: Vec<PhaseState>,
    pub unwrapped_arg: Vec<f64>,
    pub steps: usize,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> Option<&PhaseState> {
        self.states.last()
    }

    pub fn hamiltonians(&self) -> Vec<f64> {
        self.states.iter().map(|st| 0.5 * (st.p - raw_potential(st, &self.params)).norm_squared()).collect()
    }

    pub fn decompositions(&self) -> Result<Vec<GuidingDecomposition>, ClassicalError> {
        self.states.iter().map(|st| to_guiding_center(st, &self.params)).collect()
    }

    /// `K` at every sample, using the trajectory's own branch of `arg q`.
    pub fn motion_constants(&self) -> Vec<f64> {
        self.hamiltonians().iter().zip(&self.unwrapped_arg).map(|(h, a)| h - self.params.phi * a).collect()
    }

    /// `max |K(s) − K(s_first)|`.
    pub fn k_drift(&self) -> f64 {
        let k = self.motion_constants();
        k.iter().map(|v| (v - k[0]).abs()).fold(0.0, f64::max)
    }
}

fn raw_potential(st: &PhaseState, params: &FluxParams) -> Vec2 {
    perp(&st.q) * (0.5 - params.phi * st.s / st.q.norm_squared())
}

/// Integrate from `initial` to `s_end`, sampling `samples` evenly spaced
/// points including both ends (a single sample when `s_end == initial.s`).
pub fn integrate(
    initial: &PhaseState,
    s_end: f64,
    params: &FluxParams,
    tol: f64,
    samples: usize,
) -> Result<Trajectory, ClassicalError> {
    let n = samples.max(2);
    let times: Vec<f64> = if s_end == initial.s {
        vec![initial.s]
    } else {
        (0..n).map(|i| initial.s + (s_end - initial.s) * i as f64 / (n - 1) as f64).collect()
    };
    integrate_at(initial, &times, params, tol)
}

/// Integrate from `initial` through the monotone sample times `times`.
pub fn integrate_at(
    initial: &PhaseState,
    times: &[f64],
    params: &FluxParams,
    tol: f64,
) -> Result<Trajectory, ClassicalError> {
    if !(1e-13..=1e-6).contains(&tol) {
        return Err(ClassicalError::InvalidTolerance(tol));
    }
    let r0 = check_position(&initial.q)?;
    if r0.sqrt() < R_GUARD {
        return Err(ClassicalError::PunctureHit { s: initial.s, partial: Box::new(empty(params)) });
    }
    let p = *params;
    let rhs = |s: f64, y: &[f64], d: &mut [f64]| -> Result<(), f64> {
        let st = PhaseState::from_slice(s, y);
        if st.q.norm() < R_GUARD {
            return Err(s);
        }
        let (dq, dp) = flow_rhs(&st, &p).map_err(|_| s)?;
        d[0] = dq.x;
        d[1] = dq.y;
        d[2] = dp.x;
        d[3] = dp.y;
        Ok(())
    };

    // branch of arg q at every accepted step
    let mut step_args: Vec<(f64, f64)> = Vec::new();
    let mut branch = ArgBranch::new();
    let a0 = branch.advance(initial.q.y.atan2(initial.q.x))?;
    step_args.push((initial.s, a0));
    let mut branch_err: Option<ClassicalError> = None;
    let observe = |s: f64, y: &[f64]| -> Result<(), f64> {
        if y[0].hypot(y[1]) < R_GUARD {
            return Err(s);
        }
        match branch.advance(y[1].atan2(y[0])) {
            Ok(a) => {
                step_args.push((s, a));
                Ok(())
            }
            Err(e) => {
                branch_err = Some(e);
                Err(s)
            }
        }
    };

    let y0 = initial.to_vec();
    let result = DormandPrince::new(tol * LOCAL_TOL_FACTOR).solve(rhs, initial.s, &y0, times, observe);
    if let Some(e) = branch_err {
        return Err(e);
    }
    match result {
        Ok(dense) => {
            let states: Vec<PhaseState> =
                dense.times.iter().zip(&dense.states).map(|(&s, y)| PhaseState::from_slice(s, y)).collect();
            let unwrapped_arg = unwrap_samples(&states, &step_args)?;
            Ok(Trajectory { params: *params, states, unwrapped_arg, steps: dense.steps })
        }
        Err(OdeError::Rhs { t, .. }) | Err(OdeError::Stopped { t, .. }) => {
            // rerun up to the last sample before the hit to hand back partial data
            let before: Vec<f64> = times
                .iter()
                .copied()
                .filter(|&ts| {
                    (ts - initial.s) * (t - initial.s) >= 0.0 && (ts - initial.s).abs() < (t - initial.s).abs()
                })
                .collect();
            let partial = if before.is_empty() {
                empty(params)
            } else {
                integrate_at(initial, &before, params, tol).unwrap_or_else(|_| empty(params))
            };
            Err(ClassicalError::PunctureHit { s: t, partial: Box::new(partial) })
        }
        Err(OdeError::StepUnderflow { t, .. }) => Err(ClassicalError::StepFailure { s: t }),
        Err(OdeError::TooManySteps(_)) => Err(ClassicalError::StepFailure { s: f64::NAN }),
    }
}

fn empty(params: &FluxParams) -> Trajectory {
    Trajectory { params: *params, states: Vec::new(), unwrapped_arg: Vec::new(), steps: 0 }
}

fn unwrap_samples(states: &[PhaseState], step_args: &[(f64, f64)]) -> Result<Vec<f64>, ClassicalError> {
    let mut out = Vec::with_capacity(states.len());
    let forward = step_args.len() < 2 || step_args[1].0 >= step_args[0].0;
    let mut j = 0;
    for st in states {
        // latest step at or before the sample (in integration direction)
        while j + 1 < step_args.len() && if forward { step_args[j + 1].0 <= st.s } else { step_args[j + 1].0 >= st.s } {
            j += 1;
        }
        let mut br = ArgBranch::starting_at(step_args[j].1);
        out.push(br.advance(st.q.y.atan2(st.q.x))?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CenterEnergyFit {
    /// Least-squares slope of `|c|²/2 − H` against `s`; should equal `φ`.
    pub slope: f64,
    pub s0: f64,
    /// `max |(|c|²/2 − H) − φ (s − s₀)|`.
    pub max_residual: f64,
}

/// Fit `y = |c|²/2 − H` sampled at `s` against the law `y = φ (s − s₀)`.
pub fn fit_center_energy(s: &[f64], y: &[f64], phi: f64) -> Result<CenterEnergyFit, ClassicalError> {
    let n = s.len();
    if n < 10 || y.len() != n {
        return Err(ClassicalError::TooFewSamples { need: 10, got: n.min(y.len()) });
    }
    let nf = n as f64;
    let sm = s.iter().sum::<f64>() / nf;
    let ym = y.iter().sum::<f64>() / nf;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (si, yi) in s.iter().zip(y) {
        sxy += (si - sm) * (yi - ym);
        sxx += (si - sm) * (si - sm);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { f64::NAN };
    let s0 = s.iter().zip(y).map(|(si, yi)| si - yi / phi).sum::<f64>() / nf;
    let max_residual = s.iter().zip(y).map(|(si, yi)| (yi - phi * (si - s0)).abs()).fold(0.0, f64::max);
    Ok(CenterEnergyFit { slope, s0, max_residual })
}

pub fn center_energy_fit(trajectory: &Trajectory, params: &FluxParams) -> Result<CenterEnergyFit, ClassicalError> {
    let decs = trajectory.decompositions()?;
    let s: Vec<f64> = decs.iter().map(|d| d.s).collect();
    let y: Vec<f64> = decs.iter().map(|d| d.i1 - d.i2).collect();
    fit_center_energy(&s, &y, params.phi)
}

#[derive(Debug, Clone, Copy)]
pub struct AsymptoticsConfig {
    /// Trailing fraction of samples used for the tail averages.
    pub tail_fraction: f64,
    /// Upper bound on the relative spread (std / mean) of H over the tail.
    pub max_tail_spread: f64,
    /// Minimal |s| the trajectory must reach.
    pub min_span: f64,
}

impl Default for AsymptoticsConfig {
    fn default() -> Self {
        Self { tail_fraction: 0.1, max_tail_spread: 0.05, min_span: 1e3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForwardAsymptotics {
    pub a0: f64,
    pub drift_angle: f64,
    pub h_limit: f64,
    pub k: f64,
    /// `|drift_angle − (a₀²/(4φ²) − K/φ)|` reduced mod 2π.
    pub angle_residual: f64,
    /// `|q(s)| / √(2 φ s)` at the last sample.
    pub radius_ratio: f64,
    /// `|H(s_end) / H_limit − 1|`.
    pub energy_deviation: f64,
}

fn tail_stats(values: &[f64], fraction: f64) -> (f64, f64) {
    let n = values.len();
    let start = n - ((n as f64 * fraction).ceil() as usize).clamp(1, n);
    let tail = &values[start..];
    let m = tail.iter().sum::<f64>() / tail.len() as f64;
    let var = tail.iter().map(|v| (v - m).powi(2)).sum::<f64>() / tail.len() as f64;
    (m, var.sqrt())
}

pub fn asymptotics_forward(
    trajectory: &Trajectory,
    params: &FluxParams,
    config: &AsymptoticsConfig,
) -> Result<ForwardAsymptotics, ClassicalError> {
    let last = *trajectory.last().ok_or(ClassicalError::TooFewSamples { need: 10, got: 0 })?;
    if trajectory.len() < 10 {
        return Err(ClassicalError::TooFewSamples { need: 10, got: trajectory.len() });
    }
    if last.s < config.min_span {
        return Err(ClassicalError::InsufficientSpan { need: config.min_span, got: last.s });
    }
    let phi = params.phi;
    let h = trajectory.hamiltonians();
    let (h_limit, spread) = tail_stats(&h, config.tail_fraction);
    if spread > config.max_tail_spread * h_limit.abs() {
        return Err(ClassicalError::NotConverged { spread: spread / h_limit.abs(), threshold: config.max_tail_spread });
    }
    let k = trajectory.motion_constants()[0];
    let a0 = (4.0 * phi * h_limit).sqrt();
    let drift_angle = last.q.y.atan2(last.q.x);
    let predicted = a0 * a0 / (4.0 * phi * phi) - k / phi;
    Ok(ForwardAsymptotics {
        a0,
        drift_angle,
        h_limit,
        k,
        angle_residual: wrap_angle(drift_angle - predicted).abs(),
        radius_ratio: last.q.norm() / (2.0 * phi * last.s).sqrt(),
        energy_deviation: (h[h.len() - 1] / h_limit - 1.0).abs(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackwardAsymptotics {
    /// `H(s) / (φ |s|)` at the last sample.
    pub energy_ratio: f64,
    /// `|q(s)| / √(2 φ |s|)` at the last sample.
    pub radius_ratio: f64,
    /// `arg q(s) + s` reduced mod 2π (the phase offset against `e(−s)`).
    pub phase_offset: f64,
}

pub fn asymptotics_backward(
    trajectory: &Trajectory,
    params: &FluxParams,
    config: &AsymptoticsConfig,
) -> Result<BackwardAsymptotics, ClassicalError> {
    let last = *trajectory.last().ok_or(ClassicalError::TooFewSamples { need: 1, got: 0 })?;
    if last.s > -config.min_span {
        return Err(ClassicalError::InsufficientSpan { need: -config.min_span, got: last.s });
    }
    let phi = params.phi;
    let h = hamiltonian(&last, params)?;
    Ok(BackwardAsymptotics {
        energy_ratio: h / (phi * last.s.abs()),
        radius_ratio: last.q.norm() / (2.0 * phi * last.s.abs()).sqrt(),
        phase_offset: wrap_angle(last.q.y.atan2(last.q.x) + last.s),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: Vec2, b: [f64; 2], tol: f64) -> bool {
        (a.x - b[0]).abs() < tol && (a.y - b[1]).abs() < tol
    }

    #[test]
    fn vector_potential_examples() {
        let p = FluxParams::new(0.7).unwrap();
        assert!(close(vector_potential(0.0, &Vec2::new(1.0, 0.0), &p).unwrap(), [0.0, 0.5], 1e-15));
        let h = FluxParams::homogeneous();
        assert!(close(vector_potential(3.0, &Vec2::new(1.0, 0.0), &h).unwrap(), [0.0, 0.5], 1e-15));
        let p = FluxParams::new(0.5).unwrap();
        assert!(close(vector_potential(2.0, &Vec2::new(0.0, 1.0), &p).unwrap(), [0.5, 0.0], 1e-15));
        assert!(matches!(vector_potential(1.0, &Vec2::zeros(), &p), Err(ClassicalError::Singularity(_))));
    }

    #[test]
    fn flux_must_be_positive() {
        assert!(FluxParams::new(0.0).is_err());
        assert!(FluxParams::new(-1.0).is_err());
        assert!(FluxParams::new(f64::NAN).is_err());
    }

    #[test]
    fn hamiltonian_examples() {
        let p = FluxParams::new(0.5).unwrap();
        let st = PhaseState::new(1.3, [0.4, -0.9], [0.0, 0.0]);
        let a = vector_potential(st.s, &st.q, &p).unwrap();
        let at_rest = PhaseState { p: a, ..st };
        assert_eq!(hamiltonian(&at_rest, &p).unwrap(), 0.0);
        let st = PhaseState::new(0.0, [1.0, 0.0], [0.0, 1.5]);
        assert!((hamiltonian(&st, &p).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn guiding_center_examples() {
        let p = FluxParams::new(0.5).unwrap();
        let st = PhaseState::new(0.0, [1.0, 0.0], [0.0, 1.5]);
        let d = to_guiding_center(&st, &p).unwrap();
        assert!(close(d.c, [2.0, 0.0], 1e-15));
        assert!((d.i1 - 2.0).abs() < 1e-15 && (d.i2 - 0.5).abs() < 1e-15);
        let a = vector_potential(2.0, &Vec2::new(0.3, 0.8), &p).unwrap();
        let rest = PhaseState { s: 2.0, q: Vec2::new(0.3, 0.8), p: a };
        let d = to_guiding_center(&rest, &p).unwrap();
        assert!(close(d.c, [0.3, 0.8], 1e-15));
        assert_eq!(d.i2, 0.0);
        assert_eq!(d.phi2, 0.0);
    }

    #[test]
    fn motion_constant_uses_polar_angle_of_q() {
        let p = FluxParams::new(0.5).unwrap();
        let st = PhaseState::new(0.4, [-0.3, 0.7], [0.2, -0.1]);
        let d = to_guiding_center(&st, &p).unwrap();
        let mut br = ArgBranch::new();
        let k = motion_constant(&d, &p, &mut br).unwrap();
        let h = hamiltonian(&st, &p).unwrap();
        assert!((k.k - (h - 0.5 * 0.7f64.atan2(-0.3))).abs() < 1e-14);
        let h0 = FluxParams::homogeneous();
        let d = to_guiding_center(&st, &h0).unwrap();
        let k = motion_constant(&d, &h0, &mut ArgBranch::new()).unwrap();
        assert_eq!(k.k, d.i2);
    }

    #[test]
    fn branch_unwraps_and_rejects_large_jumps() {
        let mut br = ArgBranch::new();
        let mut a = 0.0;
        for i in 0..100 {
            a = br.advance(wrap_angle(0.3 * i as f64)).unwrap();
        }
        assert!((a - 0.3 * 99.0).abs() < 1e-12);
        assert!(matches!(br.advance(a + 3.0), Err(ClassicalError::Branch { .. })));
    }

    #[test]
    fn zero_span_returns_initial_state() {
        let p = FluxParams::new(0.5).unwrap();
        let st = PhaseState::new(1.0, [1.0, 0.2], [0.1, 0.4]);
        let tr = integrate(&st, 1.0, &p, 1e-10, 50).unwrap();
        assert_eq!(tr.states, vec![st]);
    }

    #[test]
    fn homogeneous_field_gives_circles() {
        // v = (0, 1) at q = (1, 0): center (2, 0), radius 1
        let p = FluxParams::homogeneous();
        let st = PhaseState::new(0.0, [1.0, 0.0], [0.0, 1.5]);
        let tol = 1e-10;
        // three revolutions
        let tr = integrate(&st, 6.0 * PI, &p, tol, 301).unwrap();
        for (i, s) in tr.states.iter().enumerate() {
            // closed form: clockwise rotation of v at unit rate
            let t = s.s;
            let q_exact = Vec2::new(2.0 - t.cos(), t.sin());
            assert!((s.q - q_exact).norm() < 1e3 * tol, "sample {i}");
            let re = ((s.q - Vec2::new(2.0, 0.0)).norm() - 1.0).abs();
            assert!(re < 10.0 * tol, "{re}");
        }
        let h = tr.hamiltonians();
        assert!(h.iter().all(|v| (v - 0.5).abs() < 10.0 * tol));
    }

    #[test]
    fn homogeneous_momentum_derivative_rotates_velocity() {
        let p = FluxParams::homogeneous();
        let st = PhaseState::new(0.0, [1.0, 0.0], [0.0, 1.5]);
        let (dq, dp) = flow_rhs(&st, &p).unwrap();
        // dv/ds = dp/ds − (∂a/∂q) dq/ds = −v⊥ for a = q⊥/2
        let dv = dp - perp(&dq) * 0.5;
        assert!(close(dv, [1.0, 0.0], 1e-15));
    }

    fn arb_state() -> impl Strategy<Value = PhaseState> {
        (-5.0f64..5.0, 0.2f64..3.0, -PI..PI, -2.0f64..2.0, -2.0f64..2.0)
            .prop_map(|(s, r, th, px, py)| PhaseState::new(s, [r * th.cos(), r * th.sin()], [px, py]))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn gradient_matches_finite_differences(st in arb_state(), phi in 0.05f64..2.0) {
            let p = FluxParams::new(phi).unwrap();
            let (dq, dp) = flow_rhs(&st, &p).unwrap();
            let h = 1e-5;
            let hq = |dx: f64, dy: f64| hamiltonian(&PhaseState { q: st.q + Vec2::new(dx, dy), ..st }, &p).unwrap();
            let hp = |dx: f64, dy: f64| hamiltonian(&PhaseState { p: st.p + Vec2::new(dx, dy), ..st }, &p).unwrap();
            let grad_q = Vec2::new((hq(h, 0.0) - hq(-h, 0.0)) / (2.0 * h), (hq(0.0, h) - hq(0.0, -h)) / (2.0 * h));
            let grad_p = Vec2::new((hp(h, 0.0) - hp(-h, 0.0)) / (2.0 * h), (hp(0.0, h) - hp(0.0, -h)) / (2.0 * h));
            prop_assert!((dp + grad_q).norm() <= 1e-6 * (1.0 + grad_q.norm()));
            prop_assert!((dq - grad_p).norm() <= 1e-6 * (1.0 + grad_p.norm()));
            let v = velocity(&st, &p).unwrap();
            prop_assert!((dq - v).norm() < 1e-14 * (1.0 + v.norm()));
        }

        #[test]
        fn reconstruction_identity(st in arb_state(), phi in 0.05f64..2.0) {
            let p = FluxParams::new(phi).unwrap();
            let d = to_guiding_center(&st, &p).unwrap();
            let q1 = d.c + perp(&d.v);
            let q2 = d.reconstruct();
            prop_assert!((q1 - st.q).norm() <= 1e-12 * (1.0 + st.q.norm()));
            prop_assert!((q2 - st.q).norm() <= 1e-12 * (1.0 + st.q.norm() + d.c.norm() + d.v.norm()));
            prop_assert_eq!(d.i1, 0.5 * d.c.norm_squared());
            prop_assert_eq!(d.i2, 0.5 * d.v.norm_squared());
            prop_assert!((d.i2 - hamiltonian(&st, &p).unwrap()).abs() <= 1e-15 * (1.0 + d.i2));
        }
    }

    #[test]
    fn center_energy_fit_recovers_planted_offset() {
        let phi = 0.37;
        let s: Vec<f64> = (0..50).map(|i| -3.0 + 0.7 * i as f64).collect();
        let y: Vec<f64> = s.iter().map(|si| phi * (si - 3.0)).collect();
        let fit = fit_center_energy(&s, &y, phi).unwrap();
        assert!((fit.s0 - 3.0).abs() < 1e-10);
        assert!((fit.slope - phi).abs() < 1e-12);
        assert!(fit.max_residual < 1e-12);
        assert!(fit_center_energy(&s[..5], &y[..5], phi).is_err());
    }
}
