//! Spectral family of the flux-sector operator
//! `H(s) = −(1/r)∂_r r ∂_r + (s + r²/2)²/r²` on `L²((0, ∞), r dr)`.
//!
//! In `x = r²/2` (so that `r dr = dx`) the eigenpairs are
//!
//! ```text
//! E_n(s) = 2n + 2s + 1,     ψ_n(x) = p_n(x) x^{s/2} e^{−x/2},
//! ```
//!
//! with `p_n` the orthonormal Laguerre polynomial for `x^s e^{−x}` carrying a
//! positive leading coefficient. `∂_s H = 1 + s/x`, so off the diagonal
//!
//! ```text
//! ⟨ψ_m, ∂_sH ψ_n⟩ = s ∫ p_m p_n x^{s−1} e^{−x} dx,
//! ```
//!
//! a Gauss–Laguerre integral with `α = s − 1`. As `s → 0⁺` the measure
//! `s x^{s−1} e^{−x} dx` tends to the point mass at `x = 0`.
//!
//! A finite-volume discretization on the radial line provides the
//! independent check of the closed forms.

use crate::quadrature::{gauss_laguerre, orthonormal_laguerre, Rule};
use crate::specfun::ln_gamma;
use crate::tridiag::SymTridiag;
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("s = {0} outside s >= 0")]
    Domain(f64),
    #[error("need at least 2 levels, got {0}")]
    TooFewLevels(usize),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid too coarse: eigenvalue {level} moved by {change:.3e} under refinement")]
    GridTooCoarse { level: usize, change: f64 },
    #[error("kernel norm moved by {change:.3e} under refinement")]
    KernelGridTooCoarse { change: f64 },
    #[error("levels {m} and {n} are degenerate (gap {gap:e})")]
    DegenerateGap { m: usize, n: usize, gap: f64 },
    #[error("families do not match: {0}")]
    Mismatch(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectorParams {
    pub s: f64,
    pub levels: usize,
    /// Gauss–Laguerre nodes used for matrix elements in `x = r²/2`.
    pub quad_nodes: usize,
}

impl SectorParams {
    pub fn new(s: f64, levels: usize) -> Result<Self, SpectralError> {
        let p = Self { s, levels, quad_nodes: levels + 16 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), SpectralError> {
        if !(self.s >= 0.0) || !self.s.is_finite() {
            return Err(SpectralError::Domain(self.s));
        }
        if self.levels < 2 {
            return Err(SpectralError::TooFewLevels(self.levels));
        }
        if self.quad_nodes < self.levels {
            return Err(SpectralError::InvalidGrid(format!(
                "quad_nodes = {} below levels = {}",
                self.quad_nodes, self.levels
            )));
        }
        Ok(())
    }
}

/// How the eigenfunctions of a family are represented.
#[derive(Debug, Clone, PartialEq)]
pub enum Basis {
    /// Closed-form Laguerre functions.
    Laguerre,
    /// Cell-centered radial grid; `g[n][i] = ψ_n(r_i)/r_i^s`, orthonormal
    /// under `Σ_i volume[i] g_m[i] g_n[i]`.
    Grid { r: Vec<f64>, volume: Vec<f64>, g: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFamily {
    pub s: f64,
    pub energies: Vec<f64>,
    /// Per-level sign (±1) multiplying the stored eigenfunction; fixed by
    /// parallel transport along `s`.
    pub signs: Vec<f64>,
    pub basis: Basis,
}

impl SpectralFamily {
    pub fn levels(&self) -> usize {
        self.energies.len()
    }

    /// `ψ_n(r)` for all levels at once (Laguerre basis only).
    pub fn eval_laguerre(&self, r: f64, out: &mut [f64]) {
        assert!(matches!(self.basis, Basis::Laguerre));
        let x = 0.5 * r * r;
        let e = orthonormal_laguerre(self.s, x, out);
        let env = if x > 0.0 {
            (0.5 * self.s * x.ln() - 0.5 * x + e as f64 * std::f64::consts::LN_2).exp()
        } else if self.s == 0.0 {
            1.0
        } else {
            0.0
        };
        for (v, sg) in out.iter_mut().zip(&self.signs) {
            *v *= env * sg;
        }
    }
}

/// Closed-form family: `E_n = 2n + 2s + 1` and Laguerre eigenfunctions.
pub fn analytic_spectrum(params: &SectorParams) -> Result<SpectralFamily, SpectralError> {
    params.validate()?;
    let s = params.s;
    Ok(SpectralFamily {
        s,
        energies: (0..params.levels).map(|n| 2.0 * n as f64 + 2.0 * s + 1.0).collect(),
        signs: vec![1.0; params.levels],
        basis: Basis::Laguerre,
    })
}

/// `⟨ψ_m(a), ψ_n(b)⟩` for all `m, n` of two Laguerre families, by the
/// Gauss–Laguerre rule with `α = (s_a + s_b)/2`, which is exact.
pub fn laguerre_overlaps(a: &SpectralFamily, b: &SpectralFamily) -> Result<DMatrix<f64>, SpectralError> {
    if !matches!(a.basis, Basis::Laguerre) || !matches!(b.basis, Basis::Laguerre) {
        return Err(SpectralError::Mismatch("overlaps need two Laguerre families".into()));
    }
    let (na, nb) = (a.levels(), b.levels());
    let alpha = 0.5 * (a.s + b.s);
    let rule = gauss_laguerre(na.max(nb) + 8, alpha);
    // ψ_n^a ψ_m^b = p^a p^b x^{α} e^{−x}, and the rule carries x^α e^{−x}
    let mut pa = vec![0.0; na];
    let mut pb = vec![0.0; nb];
    let mut out = DMatrix::zeros(na, nb);
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        let ea = orthonormal_laguerre(a.s, x, &mut pa);
        let eb = orthonormal_laguerre(b.s, x, &mut pb);
        let scale = w * 2f64.powi(ea + eb);
        for m in 0..na {
            for n in 0..nb {
                out[(m, n)] += scale * pa[m] * pb[n] * a.signs[m] * b.signs[n];
            }
        }
    }
    Ok(out)
}

/// Fix the signs of `next` so that `⟨ψ_n(prev), ψ_n(next)⟩ > 0` for every
/// level. Returns the diagonal overlaps after alignment.
pub fn align_signs(prev: &SpectralFamily, next: &mut SpectralFamily) -> Result<Vec<f64>, SpectralError> {
    let ov = laguerre_overlaps(prev, next)?;
    let n = prev.levels().min(next.levels());
    let mut diag = Vec::with_capacity(n);
    for k in 0..n {
        if ov[(k, k)] < 0.0 {
            next.signs[k] = -next.signs[k];
        }
        diag.push(ov[(k, k)].abs());
    }
    Ok(diag)
}

/// Finite-volume grid for [`fd_spectrum`]: cells of width `h` on `(0, r_max)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdGrid {
    pub r_max: f64,
    pub h: f64,
}

impl FdGrid {
    /// Grid reaching well past the classical turning point of the top level.
    pub fn for_params(params: &SectorParams) -> Self {
        let e_max = 2.0 * (params.levels - 1) as f64 + 2.0 * params.s + 1.0;
        let r_max = (2.0 * (2.0 * e_max).sqrt()).max(12.0) + 6.0;
        Self { r_max, h: 2e-3 }
    }
}

struct FvOperator {
    r: Vec<f64>,
    volume: Vec<f64>,
    matrix: SymTridiag,
}

/// Weighted finite volumes for `g = u/r^s`. The quadratic form of `H(s)`
/// becomes `∫ r^{2s+1} (g'² + (s + r²/4) g²) dr` with norm
/// `∫ r^{2s+1} g² dr`; cell volumes and the potential are integrated
/// exactly over each cell, fluxes use the face weight `r_f^{2s+1}/h`.
fn fv_operator(s: f64, r_max: f64, h: f64) -> FvOperator {
    let n = (r_max / h).round() as usize;
    let k = 2.0 * s + 2.0;
    let r: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) * h).collect();
    let mut volume = Vec::with_capacity(n);
    let mut pot = Vec::with_capacity(n);
    for i in 0..n {
        let (lo, hi) = (i as f64 * h, (i + 1) as f64 * h);
        let v = (hi.powf(k) - lo.powf(k)) / k;
        let quartic = (hi.powf(k + 2.0) - lo.powf(k + 2.0)) / (4.0 * (k + 2.0));
        volume.push(v);
        pot.push(s * v + quartic);
    }
    let face = |i: usize| ((i + 1) as f64 * h).powf(2.0 * s + 1.0) / h;
    let mut diag = Vec::with_capacity(n);
    let mut off = Vec::with_capacity(n.saturating_sub(1));
    for i in 0..n {
        let left = if i > 0 { face(i - 1) } else { 0.0 };
        let right = if i + 1 < n { face(i) } else { 0.0 };
        diag.push((left + right + pot[i]) / volume[i]);
        if i + 1 < n {
            off.push(-face(i) / (volume[i] * volume[i + 1]).sqrt());
        }
    }
    FvOperator { r, volume, matrix: SymTridiag::new(diag, off) }
}

/// Raw and extrapolated finite-volume eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct FdReport {
    pub family: SpectralFamily,
    /// Largest change of the extrapolated eigenvalues between the grid pairs
    /// `(2h, h)` and `(h, h/2)`.
    pub refinement_change: f64,
}

/// Eigenpairs of the finite-volume discretization.
///
/// Eigenvalues are Richardson-extrapolated from cell widths `h` and `h/2`
/// (the scheme is second order); eigenvectors come from the `h/2` grid.
pub fn fd_spectrum(params: &SectorParams, grid: &FdGrid) -> Result<FdReport, SpectralError> {
    params.validate()?;
    let e_max = 2.0 * (params.levels - 1) as f64 + 2.0 * params.s + 1.0;
    if !(grid.h > 0.0) || !(grid.r_max >= 2.0 * (2.0 * e_max).sqrt()) || grid.r_max / grid.h > 1e7 {
        return Err(SpectralError::InvalidGrid(format!(
            "need h > 0 and r_max >= {:.3}, got h = {}, r_max = {}",
            2.0 * (2.0 * e_max).sqrt(),
            grid.h,
            grid.r_max
        )));
    }
    let n = params.levels;
    let ops: Vec<FvOperator> =
        [2.0 * grid.h, grid.h, 0.5 * grid.h].iter().map(|&h| fv_operator(params.s, grid.r_max, h)).collect();
    let raw: Vec<Vec<f64>> = ops.iter().map(|op| op.matrix.lowest_eigenvalues(n)).collect();
    let extrapolate =
        |c: &[f64], f: &[f64]| -> Vec<f64> { c.iter().zip(f).map(|(c, f)| (4.0 * f - c) / 3.0).collect() };
    let coarse = extrapolate(&raw[0], &raw[1]);
    let fine = extrapolate(&raw[1], &raw[2]);
    let (mut level, mut change) = (0, 0.0);
    for k in 0..n {
        let d = (fine[k] - coarse[k]).abs();
        if d > change {
            change = d;
            level = k;
        }
    }
    if change > 1e-6 {
        return Err(SpectralError::GridTooCoarse { level, change });
    }
    let op = &ops[2];
    let g = raw[2]
        .iter()
        .map(|&lam| op.matrix.eigenvector(lam).iter().zip(&op.volume).map(|(y, v)| y / v.sqrt()).collect::<Vec<f64>>())
        .collect();
    let family = SpectralFamily {
        s: params.s,
        energies: fine,
        signs: vec![1.0; n],
        basis: Basis::Grid { r: op.r.clone(), volume: op.volume.clone(), g },
    };
    Ok(FdReport { family, refinement_change: change })
}

/// Overlaps `⟨ψ_n^grid, ψ_n^analytic⟩` level by level, with the analytic
/// functions sampled at the cell centers and normalized in the discrete
/// inner product. Signs of the grid family are flipped so that every overlap
/// is positive; the returned values are the aligned overlaps.
pub fn align_grid_to_analytic(grid: &mut SpectralFamily, analytic: &SpectralFamily) -> Result<Vec<f64>, SpectralError> {
    if (grid.s - analytic.s).abs() > 1e-14 {
        return Err(SpectralError::Mismatch(format!("s = {} vs {}", grid.s, analytic.s)));
    }
    let s = grid.s;
    let levels = grid.levels().min(analytic.levels());
    let Basis::Grid { r, volume, g } = &grid.basis else {
        return Err(SpectralError::Mismatch("first family must be on a grid".into()));
    };
    let mut dot = vec![0.0; levels];
    let mut norm = vec![0.0; levels];
    let mut p = vec![0.0; levels];
    for i in 0..r.len() {
        let x = 0.5 * r[i] * r[i];
        let e = orthonormal_laguerre(s, x, &mut p);
        // ψ_n / r^s = p_n(x) 2^{−s/2} e^{−x/2}
        let env = (-0.5 * s * std::f64::consts::LN_2 - 0.5 * x + e as f64 * std::f64::consts::LN_2).exp();
        for n in 0..levels {
            let a = p[n] * env * analytic.signs[n];
            dot[n] += volume[i] * a * g[n][i];
            norm[n] += volume[i] * a * a;
        }
    }
    let mut out = Vec::with_capacity(levels);
    for n in 0..levels {
        let ov = dot[n] / norm[n].sqrt();
        grid.signs[n] = if ov < 0.0 { -1.0 } else { 1.0 };
        out.push(ov.abs());
    }
    Ok(out)
}

/// Finite-volume confirmation of the closed-form family on its lower half.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleCheck {
    pub s: f64,
    /// `max |E_n^grid − E_n|` for `n < N/2`.
    pub max_eigenvalue_error: f64,
    /// `min ⟨ψ_n^grid, ψ_n⟩` for `n < N/2`.
    pub min_overlap: f64,
    pub refinement_change: f64,
}

pub fn oracle_check(params: &SectorParams) -> Result<OracleCheck, SpectralError> {
    let analytic = analytic_spectrum(params)?;
    let mut report = fd_spectrum(params, &FdGrid::for_params(params))?;
    let overlaps = align_grid_to_analytic(&mut report.family, &analytic)?;
    let half = (params.levels / 2).max(1);
    let max_eigenvalue_error =
        (0..half).map(|n| (report.family.energies[n] - analytic.energies[n]).abs()).fold(0.0, f64::max);
    let min_overlap = overlaps[..half].iter().copied().fold(f64::INFINITY, f64::min);
    Ok(OracleCheck { s: params.s, max_eigenvalue_error, min_overlap, refinement_change: report.refinement_change })
}

/// Truncated coupling operator `Π(s)` in the moving eigenbasis.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    pub s: f64,
    pub p: DMatrix<Complex64>,
}

/// Matrix of `∂_sH` between distinct levels, `s ∫ p_m p_n x^{s−1} e^{−x}`,
/// with signs applied. The diagonal is left at zero.
fn dh_matrix(family: &SpectralFamily, quad_nodes: usize) -> DMatrix<f64> {
    let n = family.levels();
    let s = family.s;
    let mut v = DMatrix::zeros(n, n);
    let mut p = vec![0.0; n];
    if s == 0.0 {
        orthonormal_laguerre(0.0, 0.0, &mut p);
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    v[(a, b)] = p[a] * p[b] * family.signs[a] * family.signs[b];
                }
            }
        }
        return v;
    }
    let rule: Rule = gauss_laguerre(quad_nodes, s - 1.0);
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        let e = orthonormal_laguerre(s, x, &mut p);
        let scale = s * w * 2f64.powi(2 * e);
        for a in 0..n {
            let pa = scale * p[a] * family.signs[a];
            for b in (a + 1)..n {
                v[(a, b)] += pa * p[b] * family.signs[b];
            }
        }
    }
    for a in 0..n {
        for b in (a + 1)..n {
            v[(b, a)] = v[(a, b)];
        }
    }
    v
}

fn check_gaps(energies: &[f64]) -> Result<(), SpectralError> {
    for m in 0..energies.len() {
        for n in (m + 1)..energies.len() {
            let gap = (energies[n] - energies[m]).abs();
            if gap < 1e-12 {
                return Err(SpectralError::DegenerateGap { m, n, gap });
            }
        }
    }
    Ok(())
}

/// `P_mn = i ⟨ψ_m, ∂_sH ψ_n⟩/(E_n − E_m)` for `m ≠ n`, `P_nn = 0`, from a
/// Laguerre family using `quad_nodes` Gauss–Laguerre points.
pub fn coupling_matrix(family: &SpectralFamily, quad_nodes: usize) -> Result<CouplingMatrix, SpectralError> {
    if !matches!(family.basis, Basis::Laguerre) {
        return Err(SpectralError::Mismatch("coupling needs the Laguerre representation".into()));
    }
    if quad_nodes < family.levels() {
        return Err(SpectralError::InvalidGrid(format!("quad_nodes = {quad_nodes} below levels")));
    }
    check_gaps(&family.energies)?;
    let v = dh_matrix(family, quad_nodes);
    let n = family.levels();
    let e = &family.energies;
    let p = DMatrix::from_fn(n, n, |a, b| {
        if a == b {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, v[(a, b)] / (e[b] - e[a]))
        }
    });
    Ok(CouplingMatrix { s: family.s, p })
}

/// Coupling matrix of the closed-form family at `s` with `levels` levels.
pub fn coupling_at(s: f64, levels: usize) -> Result<CouplingMatrix, SpectralError> {
    let params = SectorParams::new(s, levels)?;
    coupling_matrix(&analytic_spectrum(&params)?, params.quad_nodes)
}

/// Closed form of the coupling entries for the positive-leading-coefficient
/// convention, `m < n`:
/// `P_mn = i (−1)^{m+n} √(Γ(m+s+1) n! / (m! Γ(n+s+1))) / (2(n−m))`.
pub fn coupling_closed_form(s: f64, m: usize, n: usize) -> Complex64 {
    if m == n {
        return Complex64::new(0.0, 0.0);
    }
    let (lo, hi) = (m.min(n), m.max(n));
    let mag = (0.5
        * (ln_gamma(lo as f64 + s + 1.0) + ln_gamma(hi as f64 + 1.0)
            - ln_gamma(lo as f64 + 1.0)
            - ln_gamma(hi as f64 + s + 1.0)))
    .exp();
    let sign = if (m + n).is_multiple_of(2) { 1.0 } else { -1.0 };
    // E_n − E_m = 2(n − m)
    Complex64::new(0.0, sign * mag / (2.0 * (n as f64 - m as f64)))
}

/// Spectral norm of a Hermitian matrix.
pub fn hermitian_norm(m: &DMatrix<Complex64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    SymmetricEigen::new(m.clone()).eigenvalues.iter().fold(0.0, |a: f64, v| a.max(v.abs()))
}

/// Spectral norm of a general square complex matrix.
pub fn operator_norm(m: &DMatrix<Complex64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.singular_values().iter().fold(0.0, |a: f64, v| a.max(*v))
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormEstimate {
    pub truncations: Vec<usize>,
    pub norms: Vec<f64>,
    /// Aitken extrapolation of the last three norms when they converge
    /// geometrically, the last norm otherwise.
    pub extrapolated: f64,
    /// `|norm(N) − norm(N/2)|` for consecutive truncations.
    pub increments: Vec<f64>,
}

/// Norms of leading principal submatrices and their extrapolation.
pub fn coupling_norm(matrix: &CouplingMatrix, truncations: &[usize]) -> NormEstimate {
    let n = matrix.p.nrows();
    let truncations: Vec<usize> = truncations.iter().copied().filter(|&k| k <= n).collect();
    let norms: Vec<f64> =
        truncations.iter().map(|&k| hermitian_norm(&matrix.p.view((0, 0), (k, k)).into_owned())).collect();
    let increments = norms.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let extrapolated = match norms.len() {
        0 => 0.0,
        1 | 2 => *norms.last().unwrap(),
        k => {
            let (a, b, c) = (norms[k - 3], norms[k - 2], norms[k - 1]);
            let (d1, d2) = (b - a, c - b);
            let ratio = d2 / d1;
            if d1 != 0.0 && ratio > 0.0 && ratio < 0.9 {
                c + d2 * ratio / (1.0 - ratio)
            } else {
                c
            }
        }
    };
    NormEstimate { truncations, norms, extrapolated, increments }
}

/// `Γ_mn = −i P_mn/(E_m − E_n)` for `m ≠ n`, zero diagonal, so that
/// `i[H, Γ] = P` on the truncation.
pub fn gamma_potential(matrix: &CouplingMatrix, family: &SpectralFamily) -> Result<DMatrix<Complex64>, SpectralError> {
    check_gaps(&family.energies)?;
    let n = matrix.p.nrows();
    if n != family.levels() {
        return Err(SpectralError::Mismatch(format!("{n} coupling levels vs {} energies", family.levels())));
    }
    let e = &family.energies;
    Ok(DMatrix::from_fn(n, n, |a, b| {
        if a == b {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, -1.0) * matrix.p[(a, b)] / (e[a] - e[b])
        }
    }))
}

/// `‖i[diag(E), Γ] − P‖`.
pub fn commutator_residual(gamma: &DMatrix<Complex64>, matrix: &CouplingMatrix, energies: &[f64]) -> f64 {
    let n = gamma.nrows();
    let r = DMatrix::from_fn(n, n, |a, b| {
        Complex64::new(0.0, energies[a] - energies[b]) * gamma[(a, b)] - matrix.p[(a, b)]
    });
    operator_norm(&r)
}

/// Smallest and largest `|P_mn| |n−m| ((n+1)/(m+1))^{s/2}` over
/// `1 ≤ n−m ≤ N/2`.
pub fn envelope_range(matrix: &CouplingMatrix) -> (f64, f64) {
    let n_levels = matrix.p.nrows();
    let mut range = (f64::INFINITY, 0.0f64);
    for m in 0..n_levels {
        for n in (m + 1)..n_levels.min(m + n_levels / 2 + 1) {
            let scale = ((n as f64 + 1.0) / (m as f64 + 1.0)).powf(matrix.s / 2.0);
            let r = matrix.p[(m, n)].norm() * (n - m) as f64 * scale;
            range = (range.0.min(r), range.1.max(r));
        }
    }
    range
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaBounds {
    pub s: f64,
    pub norm: f64,
    pub derivative_norm: f64,
}

/// `‖Γ(s)‖` and `‖∂_sΓ(s)‖`, the derivative by second-order differences of
/// step `h` (one-sided near `s = 0`).
pub fn gamma_bounds(s: f64, levels: usize, h: f64) -> Result<GammaBounds, SpectralError> {
    let gamma = |t: f64| -> Result<DMatrix<Complex64>, SpectralError> {
        let params = SectorParams::new(t, levels)?;
        let family = analytic_spectrum(&params)?;
        gamma_potential(&coupling_matrix(&family, params.quad_nodes)?, &family)
    };
    let g0 = gamma(s)?;
    let dg = if s >= h {
        (gamma(s + h)? - gamma(s - h)?) / Complex64::new(2.0 * h, 0.0)
    } else {
        (gamma(s + h)? * Complex64::new(4.0, 0.0) - gamma(s + 2.0 * h)? - &g0 * Complex64::new(3.0, 0.0))
            / Complex64::new(2.0 * h, 0.0)
    };
    Ok(GammaBounds { s, norm: operator_norm(&g0), derivative_norm: operator_norm(&dg) })
}

/// Uniform grid in `u = ln x` for the kernel check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelGrid {
    pub log_min: f64,
    pub log_max: f64,
    pub h: f64,
    pub lanczos_steps: usize,
}

impl Default for KernelGrid {
    fn default() -> Self {
        Self { log_min: -40.0, log_max: 40.0, h: 0.02, lanczos_steps: 300 }
    }
}

impl KernelGrid {
    /// Default range with spacing small against the decay length `1/(s+½)`.
    pub fn for_s(s: f64) -> Self {
        Self { h: (0.05 / (s + 0.5)).min(0.02), ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelCheck {
    pub s: f64,
    pub norm: f64,
    pub bound: f64,
    /// Norm on the same range with half the spacing.
    pub refined_norm: f64,
    /// Norm on the central half of the range.
    pub half_range_norm: f64,
    pub passed: bool,
}

/// Relative change of the kernel norm under grid refinement above which the
/// grid counts as too coarse.
pub const KERNEL_REFINEMENT_TOL: f64 = 1e-3;

/// Operator norm of the integral operator with kernel
/// `K(x, y) = −(i/y)(x/y)^s` for `x < y`, `(i/x)(y/x)^s` for `x > y`, on
/// `L²((0, ∞), dx)`.
///
/// With `x = e^u` and `f(x) = e^{−u/2} g(u)` the operator becomes the
/// convolution `i sign(u − v) e^{−(s+½)|u−v|}` on `L²(du)`, discretized on a
/// uniform `u` grid. The matrix is `i S` with `S` real antisymmetric, and
/// `‖iS‖² = λ_max(−S²)`, found by Lanczos with an `O(n)` recursive matvec.
pub fn kernel_bound_check(s: f64, grid: &KernelGrid) -> Result<KernelCheck, SpectralError> {
    if !(s >= 0.0) || !s.is_finite() {
        return Err(SpectralError::Domain(s));
    }
    if !(grid.h > 0.0) || !(grid.log_max > grid.log_min) || grid.lanczos_steps < 2 {
        return Err(SpectralError::InvalidGrid(format!("{grid:?}")));
    }
    let a = s + 0.5;
    let n_of = |span: f64, h: f64| (span / h).round() as usize + 1;
    let span = grid.log_max - grid.log_min;
    let norm = kernel_norm(a, n_of(span, grid.h), grid.h, grid.lanczos_steps);
    let refined_norm = kernel_norm(a, n_of(span, 0.5 * grid.h), 0.5 * grid.h, grid.lanczos_steps);
    let half_range_norm = kernel_norm(a, n_of(0.5 * span, grid.h), grid.h, grid.lanczos_steps);
    let change = (refined_norm - norm).abs() / norm;
    if change > KERNEL_REFINEMENT_TOL {
        return Err(SpectralError::KernelGridTooCoarse { change });
    }
    let bound = 1.0 / a;
    let passed = norm <= bound + 1e-6 && refined_norm <= bound + 1e-6;
    Ok(KernelCheck { s, norm, bound, refined_norm, half_range_norm, passed })
}

/// `y = S x` with `S_ij = h sign(i − j) r^{|i−j|}`, `r = e^{−a h}`.
fn kernel_apply(a: f64, h: f64, x: &[f64], y: &mut [f64]) {
    let n = x.len();
    let r = (-a * h).exp();
    let mut left = 0.0;
    for i in 0..n {
        if i > 0 {
            left = r * (left + x[i - 1]);
        }
        y[i] = left;
    }
    let mut right = 0.0;
    for i in (0..n).rev() {
        if i + 1 < n {
            right = r * (right + x[i + 1]);
        }
        y[i] = h * (y[i] - right);
    }
}

fn kernel_norm(a: f64, n: usize, h: f64, steps: usize) -> f64 {
    let steps = steps.min(n);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(steps);
    let mut q: Vec<f64> = (0..n).map(|i| 1.0 + 0.3 * ((i * 2654435761usize) % 1000) as f64 / 1000.0).collect();
    let nq = q.iter().map(|v| v * v).sum::<f64>().sqrt();
    q.iter_mut().for_each(|v| *v /= nq);
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut tmp = vec![0.0; n];
    let mut w = vec![0.0; n];
    for k in 0..steps {
        // w = −S² q
        kernel_apply(a, h, &q, &mut tmp);
        kernel_apply(a, h, &tmp, &mut w);
        w.iter_mut().for_each(|v| *v = -*v);
        let ak: f64 = w.iter().zip(&q).map(|(a, b)| a * b).sum();
        alpha.push(ak);
        basis.push(q.clone());
        // full reorthogonalization
        for b in &basis {
            let c: f64 = w.iter().zip(b).map(|(a, b)| a * b).sum();
            w.iter_mut().zip(b).for_each(|(wi, bi)| *wi -= c * bi);
        }
        let bk = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        if k + 1 == steps || bk < 1e-14 * ak.abs().max(1e-300) {
            break;
        }
        beta.push(bk);
        q = w.iter().map(|v| v / bk).collect();
    }
    let t = SymTridiag::new(alpha, beta);
    t.largest_eigenvalue().max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_matvec_matches_dense() {
        let (a, h, n) = (0.7, 0.3, 9);
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 1.3).sin()).collect();
        let mut y = vec![0.0; n];
        kernel_apply(a, h, &x, &mut y);
        for (i, yi) in y.iter().enumerate() {
            let mut want = 0.0;
            for (j, xj) in x.iter().enumerate() {
                let d = i as f64 - j as f64;
                if d != 0.0 {
                    want += h * d.signum() * (-a * h * d.abs()).exp() * xj;
                }
            }
            assert!((yi - want).abs() < 1e-14);
        }
    }

    #[test]
    fn kernel_norm_below_discrete_symbol() {
        // finite sections of the Toeplitz matrix sit below its symbol's sup
        for &a in &[0.5f64, 1.5] {
            let h = 0.05f64;
            let sup = h / (a * h).sinh();
            let n = kernel_norm(a, 2001, h, 200);
            assert!(n <= sup + 1e-12 && n > 0.99 * sup, "{n} vs {sup}");
        }
    }

    #[test]
    fn dense_norm_agrees_for_small_grid() {
        let (a, h, n) = (0.5, 0.2, 60);
        let s = DMatrix::from_fn(n, n, |i, j| {
            let d = i as f64 - j as f64;
            if d == 0.0 {
                0.0
            } else {
                h * d.signum() * (-a * h * d.abs()).exp()
            }
        });
        let dense = s.singular_values().max();
        assert!((kernel_norm(a, n, h, 60) - dense).abs() < 1e-12);
    }

    #[test]
    fn fv_low_levels_at_s0() {
        let op = fv_operator(0.0, 16.0, 0.01);
        let ev = op.matrix.lowest_eigenvalues(3);
        for (n, e) in ev.iter().enumerate() {
            assert!((e - (2 * n + 1) as f64).abs() < 1e-3);
        }
    }
}
