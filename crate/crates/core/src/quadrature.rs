//! Gauss rules: Legendre on `[-1, 1]` and generalized Laguerre for the weight
//! `x^alpha e^{-x}` on `(0, inf)`.

use crate::specfun::ln_gamma;
use crate::tridiag::SymTridiag;
use std::f64::consts::PI;

#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Legendre polynomial `P_n(x)` and its derivative.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// `n`-point Gauss–Legendre rule on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> Rule {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Rule { nodes, weights }
}

/// Orthonormal Laguerre polynomials for the weight `x^alpha e^{-x}`:
/// `x p_j = b_{j+1} p_{j+1} + a_j p_j + b_j p_{j-1}` with `a_j = 2j + alpha + 1`,
/// `b_j = sqrt(j (j + alpha))`. These carry a positive leading coefficient,
/// i.e. `p_j = (-1)^j L_j^(alpha) / sqrt(Gamma(j + alpha + 1) / j!)`.
///
/// Values at `x` for degrees `0..n`, written into `out`. Large arguments are
/// handled with a running rescale; the returned exponent `e` means the true
/// values are `out * 2^(e)`. For the degrees and arguments used in this crate
/// `e` stays 0 except far outside the oscillatory region.
pub fn orthonormal_laguerre(alpha: f64, x: f64, out: &mut [f64]) -> i32 {
    let n = out.len();
    if n == 0 {
        return 0;
    }
    let mut exp2 = 0i32;
    out[0] = (-0.5 * ln_gamma(alpha + 1.0)).exp();
    if n > 1 {
        out[1] = (x - alpha - 1.0) * out[0] / (alpha + 1.0).sqrt();
    }
    for j in 1..n.saturating_sub(1) {
        let jf = j as f64;
        let a = 2.0 * jf + alpha + 1.0;
        let b = (jf * (jf + alpha)).sqrt();
        let b1 = ((jf + 1.0) * (jf + 1.0 + alpha)).sqrt();
        let mut next = ((x - a) * out[j] - b * out[j - 1]) / b1;
        if next.abs() > 1e150 {
            let s = 2f64.powi(-500);
            for v in out[..=j].iter_mut() {
                *v *= s;
            }
            next *= s;
            exp2 += 500;
        }
        out[j + 1] = next;
    }
    exp2
}

/// Value and derivative of the degree-`n` orthonormal Laguerre polynomial,
/// both scaled by the same (unknown) positive factor; only their ratio is
/// meaningful.
fn laguerre_ratio(alpha: f64, n: usize, x: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, (x - alpha - 1.0) / (alpha + 1.0).sqrt());
    let (mut d0, mut d1) = (0.0, 1.0 / (alpha + 1.0).sqrt());
    for j in 1..n {
        let jf = j as f64;
        let a = 2.0 * jf + alpha + 1.0;
        let b = (jf * (jf + alpha)).sqrt();
        let b1 = ((jf + 1.0) * (jf + 1.0 + alpha)).sqrt();
        let p2 = ((x - a) * p1 - b * p0) / b1;
        let d2 = (p1 + (x - a) * d1 - b * d0) / b1;
        p0 = p1;
        p1 = p2;
        d0 = d1;
        d1 = d2;
        let m = p1.abs().max(d1.abs());
        if m > 1e150 {
            p0 /= m;
            p1 /= m;
            d0 /= m;
            d1 /= m;
        }
    }
    p1 / d1
}

/// `n`-point generalized Gauss–Laguerre rule for `x^alpha e^{-x}`.
///
/// Nodes are the eigenvalues of the Jacobi matrix (bisection) polished by
/// Newton steps on the orthonormal recurrence; weights use the Christoffel
/// form `1 / sum_j p_j(x_k)^2`, which keeps full relative accuracy for the
/// tiny weights at large nodes.
pub fn gauss_laguerre(n: usize, alpha: f64) -> Rule {
    assert!(n >= 1 && alpha > -1.0);
    let diag: Vec<f64> = (0..n).map(|j| 2.0 * j as f64 + alpha + 1.0).collect();
    let off: Vec<f64> = (1..n).map(|j| (j as f64 * (j as f64 + alpha)).sqrt()).collect();
    let jac = SymTridiag::new(diag, off);
    let mut nodes = jac.lowest_eigenvalues(n);
    for x in nodes.iter_mut() {
        for _ in 0..3 {
            let dx = laguerre_ratio(alpha, n, *x);
            if !dx.is_finite() {
                break;
            }
            let cand = *x - dx;
            if cand > 0.0 {
                *x = cand;
            }
            if dx.abs() <= 1e-16 * x.abs() {
                break;
            }
        }
    }
    let mut buf = vec![0.0; n];
    let weights = nodes
        .iter()
        .map(|&x| {
            let e = orthonormal_laguerre(alpha, x, &mut buf);
            let sum: f64 = buf.iter().map(|v| v * v).sum();
            // true sum = sum * 2^(2e)
            (-(sum.ln()) - 2.0 * e as f64 * std::f64::consts::LN_2).exp()
        })
        .collect();
    Rule { nodes, weights }
}

/// Gauss–Legendre panel data on `[-1, 1]` for spectral (Nyström) work:
/// nodes, weights, and the matrix `W[i][k]` with
/// `int_{t_i}^{1} g(t) dt ≈ sum_k W[i][k] g(t_k)` (exact for polynomials of
/// degree < m).
#[derive(Debug, Clone)]
pub struct Panel {
    pub rule: Rule,
    pub tail: Vec<Vec<f64>>,
    pub bary: Vec<f64>,
}

impl Panel {
    pub fn new(m: usize) -> Self {
        let rule = gauss_legendre(m);
        let t = &rule.nodes;
        // Legendre values P_j(t_k)
        let mut pv = vec![vec![0.0; m + 1]; m];
        for (k, &x) in t.iter().enumerate() {
            pv[k][0] = 1.0;
            if m >= 1 {
                pv[k][1] = x;
            }
            for j in 1..m {
                let jf = j as f64;
                pv[k][j + 1] = ((2.0 * jf + 1.0) * x * pv[k][j] - jf * pv[k][j - 1]) / (jf + 1.0);
            }
        }
        // int_{t}^{1} P_j = 1 - t for j = 0, (P_{j-1}(t) - P_{j+1}(t)) / (2j + 1) otherwise
        let tail = (0..m)
            .map(|i| {
                (0..m)
                    .map(|k| {
                        (0..m)
                            .map(|j| {
                                let coef = (2.0 * j as f64 + 1.0) / 2.0 * rule.weights[k] * pv[k][j];
                                let integral = if j == 0 {
                                    1.0 - t[i]
                                } else {
                                    (pv[i][j - 1] - pv[i][j + 1]) / (2.0 * j as f64 + 1.0)
                                };
                                coef * integral
                            })
                            .sum()
                    })
                    .collect()
            })
            .collect();
        // barycentric weights for Gauss nodes: (-1)^k sqrt((1 - t_k^2) w_k)
        let bary = (0..m)
            .map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                sign * ((1.0 - t[k] * t[k]) * rule.weights[k]).sqrt()
            })
            .collect();
        Self { rule, tail, bary }
    }

    pub fn len(&self) -> usize {
        self.rule.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rule.nodes.is_empty()
    }

    /// Barycentric interpolation at `t` in `[-1, 1]` of values at the nodes.
    pub fn interpolate(&self, values: &[f64], t: f64) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (k, (&tk, &bk)) in self.rule.nodes.iter().zip(&self.bary).enumerate() {
            let d = t - tk;
            if d == 0.0 {
                return values[k];
            }
            let c = bk / d;
            num += c * values[k];
            den += c;
        }
        num / den
    }
}
