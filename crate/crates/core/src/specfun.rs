//! Bessel functions of orders 0 and 1 and generalized Laguerre polynomials.
//!
//! The Bessel routines delegate to `libm` (the musl/fdlibm algorithms:
//! rational approximations on `[0, 2]` and Hankel-type rational
//! asymptotics beyond). Their accuracy is checked against an
//! extended-precision power series in the tests.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecfunError {
    #[error("{func}: argument {x} outside the domain")]
    Domain { func: &'static str, x: f64 },
    #[error("{func}: unsupported order {order}")]
    Order { func: &'static str, order: i32 },
    #[error("laguerre: n={n}, alpha={alpha}, x={x} outside n <= 500, alpha > -1, x >= 0")]
    LaguerreDomain { n: usize, alpha: f64, x: f64 },
}

/// Relative accuracy target of a special-function family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Accuracy {
    rel_tol: f64,
}

impl Accuracy {
    pub const BESSEL: Accuracy = Accuracy { rel_tol: 1e-12 };
    pub const LAGUERRE: Accuracy = Accuracy { rel_tol: 1e-10 };

    pub fn new(rel_tol: f64) -> Option<Self> {
        (rel_tol.is_finite() && rel_tol > 0.0).then_some(Self { rel_tol })
    }

    pub fn rel_tol(&self) -> f64 {
        self.rel_tol
    }
}

pub const LAGUERRE_MAX_DEGREE: usize = 500;

/// Bessel function of the first kind, `J_0` or `J_1`, for `x >= 0`.
pub fn bessel_j(order: i32, x: f64) -> Result<f64, SpecfunError> {
    if !x.is_finite() || x < 0.0 {
        return Err(SpecfunError::Domain { func: "bessel_j", x });
    }
    match order {
        0 => Ok(libm::j0(x)),
        1 => Ok(libm::j1(x)),
        _ => Err(SpecfunError::Order { func: "bessel_j", order }),
    }
}

/// Bessel function of the second kind, `Y_0` or `Y_1`, for `x > 0`.
pub fn bessel_y(order: i32, x: f64) -> Result<f64, SpecfunError> {
    if !x.is_finite() || x <= 0.0 {
        return Err(SpecfunError::Domain { func: "bessel_y", x });
    }
    match order {
        0 => Ok(libm::y0(x)),
        1 => Ok(libm::y1(x)),
        _ => Err(SpecfunError::Order { func: "bessel_y", order }),
    }
}

/// `(J_0, J_1, Y_0, Y_1)` at `x > 0`. Unchecked; used on hot paths where the
/// caller guarantees a positive argument.
#[inline]
pub(crate) fn bessel_all(x: f64) -> [f64; 4] {
    debug_assert!(x > 0.0);
    [libm::j0(x), libm::j1(x), libm::y0(x), libm::y1(x)]
}

/// Generalized Laguerre polynomial `L_n^(alpha)(x)` by the ascending
/// three-term recurrence.
pub fn laguerre(n: usize, alpha: f64, x: f64) -> Result<f64, SpecfunError> {
    if n > LAGUERRE_MAX_DEGREE || !(alpha > -1.0) || !alpha.is_finite() || !(x >= 0.0) || !x.is_finite() {
        return Err(SpecfunError::LaguerreDomain { n, alpha, x });
    }
    let mut prev = 1.0;
    if n == 0 {
        return Ok(prev);
    }
    let mut cur = 1.0 + alpha - x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + alpha - x) * cur - (kf + alpha) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// `ln Γ(x)` for `x > 0`.
#[inline]
pub(crate) fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    /// Double-double arithmetic, enough to sum the Bessel power series at
    /// moderate arguments without cancellation loss.
    #[derive(Clone, Copy, Debug)]
    struct Dd(f64, f64);

    impl Dd {
        fn from(x: f64) -> Self {
            Dd(x, 0.0)
        }
        fn two_sum(a: f64, b: f64) -> (f64, f64) {
            let s = a + b;
            let bb = s - a;
            (s, (a - (s - bb)) + (b - bb))
        }
        fn add(self, o: Dd) -> Dd {
            let (s, e) = Self::two_sum(self.0, o.0);
            let e = e + self.1 + o.1;
            let (hi, lo) = Self::two_sum(s, e);
            Dd(hi, lo)
        }
        fn mul(self, o: Dd) -> Dd {
            let p = self.0 * o.0;
            let e = self.0.mul_add(o.0, -p);
            let e = e + self.0 * o.1 + self.1 * o.0;
            let (hi, lo) = Self::two_sum(p, e);
            Dd(hi, lo)
        }
        fn div_f(self, d: f64) -> Dd {
            let q = self.0 / d;
            // remainder self - q*d
            let p = q * d;
            let pe = q.mul_add(d, -p);
            let r = (self.0 - p - pe + self.1) / d;
            let (hi, lo) = Self::two_sum(q, r);
            Dd(hi, lo)
        }
        fn neg(self) -> Dd {
            Dd(-self.0, -self.1)
        }
        fn val(self) -> f64 {
            self.0 + self.1
        }
    }

    /// Power series `J_nu(x) = sum (-1)^k (x/2)^(2k+nu) / (k! (k+nu)!)`.
    fn series_j(nu: u32, x: f64) -> f64 {
        let half = Dd::from(x).div_f(2.0);
        let z = half.mul(half).neg();
        let mut term = if nu == 0 { Dd::from(1.0) } else { half };
        let mut sum = term;
        for k in 1..400u32 {
            term = term.mul(z).div_f(k as f64).div_f((k + nu) as f64);
            sum = sum.add(term);
            if term.0.abs() < 1e-40 * sum.0.abs().max(1e-300) && k > 5 {
                break;
            }
        }
        sum.val()
    }

    // 40-digit mpmath values at the exact binary arguments (tests/oracles/bessel_table.py).
    const TABLE: &[(f64, f64, f64, f64, f64)] = &[
        (0.1, 0.9975015620660400320041, 0.04993752603624200032149, -1.534238651350366808268, -6.458951094702026637675),
        (0.5, 0.9384698072408129042284, 0.242268457674873886384, -0.4445187335067065571484, -1.471472392670243069189),
        (1.0, 0.7651976865579665514497, 0.4400505857449335159597, 0.08825696421567695798293, -0.7812128213002887165471),
        (2.0, 0.2238907791412356680518, 0.5767248077568733872024, 0.5103756726497451195966, -0.1070324315409375468884),
        (3.7, -0.399230203371191115329, 0.05383398774546179051315, 0.1060743153203541102676, 0.4166743726838074932859),
        (
            5.0,
            -0.1775967713143383043474,
            -0.3275791375914652220377,
            -0.3085176252490337800736,
            0.1478631433912268448011,
        ),
        (7.5, 0.266339657880378396866, 0.1352484275797055051822, 0.117313286148208630839, -0.2591285104861162517983),
        (8.0, 0.1716508071375539060909, 0.2346363468539146243813, 0.2235214893875662205273, -0.1580604617312474942556),
        (8.5, 0.04193925184293450355176, 0.273121963674053744265, 0.2702051053657874760039, -0.0261686793985374700285),
        (
            10.0,
            -0.2459357644513483351978,
            0.04347274616886143666975,
            0.05567116728359939142446,
            0.2490154242069538839233,
        ),
        (12.3, 0.1107979503075854397927, -0.1942588480405913927, -0.1985930946350262083602, -0.1189484032992661564016),
        (
            20.0,
            0.1670246643405831547273,
            0.06683312417585004557899,
            0.06264059680938383116173,
            -0.165511614362521295864,
        ),
        (
            31.4,
            0.09865374409157311780323,
            -0.1011039929509417592421,
            -0.1026615205116387722023,
            -0.1003005561373020265614,
        ),
        (
            50.0,
            0.05581232766925181500475,
            -0.09751182812517513766146,
            -0.09806499547007707902921,
            -0.05679566856201476794182,
        ),
        (
            100.0,
            0.01998585030422312242423,
            -0.07714535201411215803269,
            -0.07724431336508315225423,
            -0.0203723120027597933047,
        ),
        (
            250.7,
            0.007903349768336474974084,
            -0.04975280911686862611143,
            -0.04976847263911944255795,
            -0.00800262411171875451764,
        ),
        (
            1000.0,
            0.02478668615242017456133,
            0.004728311907089523917576,
            0.004715917977622813399773,
            -0.02478433129235177891486,
        ),
    ];

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn trivial_values() {
        assert_eq!(bessel_j(0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_j(1, 0.0).unwrap(), 0.0);
        assert_eq!(laguerre(0, 0.3, 7.0).unwrap(), 1.0);
        assert!((laguerre(1, 0.5, 2.0).unwrap() + 0.5).abs() < 1e-15);
    }

    #[test]
    fn j_matches_extended_precision_series() {
        // J0(1) frozen from the double-double series.
        assert!(rel(bessel_j(0, 1.0).unwrap(), 0.76519768655796655) < 1e-15);
        for i in 1..=240 {
            let x = 0.1 * i as f64;
            for nu in 0..2u32 {
                let oracle = series_j(nu, x);
                let got = bessel_j(nu as i32, x).unwrap();
                // absolute near zeros, relative elsewhere
                let err = (got - oracle).abs() / oracle.abs().max(0.1);
                assert!(err < 1e-12, "J{nu}({x}): {got} vs {oracle}");
            }
        }
    }

    #[test]
    fn table_agreement() {
        for &(x, j0, j1, y0, y1) in TABLE {
            assert!(rel(bessel_j(0, x).unwrap(), j0) < 1e-12, "J0({x})");
            assert!(rel(bessel_j(1, x).unwrap(), j1) < 1e-12, "J1({x})");
            assert!(rel(bessel_y(0, x).unwrap(), y0) < 1e-12, "Y0({x})");
            assert!(rel(bessel_y(1, x).unwrap(), y1) < 1e-12, "Y1({x})");
        }
        assert!(rel(bessel_y(0, 1.0).unwrap(), 0.08825696421567696) < 1e-14);
        assert!(rel(bessel_y(1, 1.0).unwrap(), -0.78121282130028872) < 1e-14);
    }

    #[test]
    fn y0_diverges_logarithmically() {
        let a = bessel_y(0, 1e-10).unwrap();
        let b = bessel_y(0, 1e-20).unwrap();
        assert!(a.is_finite() && b.is_finite() && b < a && a < -14.0);
        // leading term (2/pi) ln x
        assert!(((b - a) - 2.0 / PI * (1e-10f64).ln()).abs() < 1e-8);
    }

    #[test]
    fn domain_errors() {
        assert!(bessel_j(0, -1.0).is_err());
        assert!(bessel_j(1, f64::NAN).is_err());
        assert!(bessel_j(2, 1.0).is_err());
        assert!(bessel_y(0, 0.0).is_err());
        assert!(bessel_y(1, -2.0).is_err());
        assert!(bessel_y(1, f64::INFINITY).is_err());
        assert!(laguerre(501, 0.0, 1.0).is_err());
        assert!(laguerre(3, -1.0, 1.0).is_err());
        assert!(laguerre(3, 0.0, -1e-3).is_err());
    }

    #[test]
    fn laguerre_degree_five_exact() {
        // L_5(3) = 17/20 by exact rational evaluation of the explicit polynomial.
        assert!((laguerre(5, 0.0, 3.0).unwrap() - 0.85).abs() < 1e-14);
    }

    #[test]
    fn wronskian_identity() {
        for i in 0..=1000 {
            let x = 0.1 * (1000.0f64).powf(i as f64 / 1000.0);
            let w =
                bessel_j(1, x).unwrap() * bessel_y(0, x).unwrap() - bessel_j(0, x).unwrap() * bessel_y(1, x).unwrap();
            let expect = 2.0 / (PI * x);
            assert!(rel(w, expect) < 1e-10, "x={x}");
        }
    }

    #[test]
    fn derivative_of_j0_is_minus_j1() {
        let h = 1e-4;
        for i in 1..200 {
            let x = 0.25 * i as f64;
            let d = (bessel_j(0, x + h).unwrap() - bessel_j(0, x - h).unwrap()) / (2.0 * h);
            assert!((d + bessel_j(1, x).unwrap()).abs() < 1e-8, "x={x}");
        }
    }

    proptest! {
        #[test]
        fn laguerre_recurrence_residual(n in 1usize..199, alpha in -0.99f64..10.0, x in 0.0f64..60.0) {
            let lm = laguerre(n - 1, alpha, x).unwrap();
            let l = laguerre(n, alpha, x).unwrap();
            let lp = laguerre(n + 1, alpha, x).unwrap();
            let nf = n as f64;
            let a = (nf + 1.0) * lp;
            let b = (2.0 * nf + 1.0 + alpha - x) * l;
            let c = (nf + alpha) * lm;
            let scale = a.abs().max(b.abs()).max(c.abs()).max(1e-300);
            prop_assert!(((a - b + c) / scale).abs() < 1e-10);
        }
    }
}
