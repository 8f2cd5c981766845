//! Adaptive Dormand–Prince 5(4) integrator with the classical fourth-order
//! continuous extension used for dense output.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError<E> {
    #[error("step size underflow at t = {t} (h = {h})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("maximum number of steps ({0}) exceeded")]
    TooManySteps(usize),
    #[error("right-hand side failed at t = {t}")]
    Rhs { t: f64, source: E },
    #[error("step observer stopped the integration at t = {t}")]
    Stopped { t: f64, source: E },
}

#[derive(Debug, Clone, Copy)]
pub struct DormandPrince {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: Option<f64>,
    pub h_max: f64,
    pub max_steps: usize,
}

impl DormandPrince {
    pub fn new(tol: f64) -> Self {
        Self { rtol: tol, atol: tol, h_init: None, h_max: f64::INFINITY, max_steps: 50_000_000 }
    }

    pub fn with_h_max(mut self, h_max: f64) -> Self {
        self.h_max = h_max;
        self
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Result of an integration: states at the requested sample times, in the
/// order requested, plus bookkeeping.
#[derive(Debug, Clone)]
pub struct Dense {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub steps: usize,
    pub rejected: usize,
}

impl DormandPrince {
    /// Integrate `y' = f(t, y)` from `t0` towards the last entry of `samples`
    /// (which must be monotone in the integration direction and start at or
    /// after `t0`). `observe` is called after every accepted step with the
    /// new `(t, y)`; returning an error stops the run.
    pub fn solve<E, F, O>(
        &self,
        mut f: F,
        t0: f64,
        y0: &[f64],
        samples: &[f64],
        mut observe: O,
    ) -> Result<Dense, OdeError<E>>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), E>,
        O: FnMut(f64, &[f64]) -> Result<(), E>,
    {
        let n = y0.len();
        let mut out = Dense { times: Vec::with_capacity(samples.len()), states: Vec::new(), steps: 0, rejected: 0 };
        let Some(&t_end) = samples.last() else {
            return Ok(out);
        };
        let dir = if t_end >= t0 { 1.0 } else { -1.0 };
        let mut next_sample = 0;
        while next_sample < samples.len() && (samples[next_sample] - t0) * dir <= 0.0 {
            out.times.push(samples[next_sample]);
            out.states.push(y0.to_vec());
            next_sample += 1;
        }
        if next_sample == samples.len() {
            return Ok(out);
        }

        let mut t = t0;
        let mut y = y0.to_vec();
        let mut k1 = vec![0.0; n];
        let mut k2 = vec![0.0; n];
        let mut k3 = vec![0.0; n];
        let mut k4 = vec![0.0; n];
        let mut k5 = vec![0.0; n];
        let mut k6 = vec![0.0; n];
        let mut k7 = vec![0.0; n];
        let mut tmp = vec![0.0; n];
        let mut y_new = vec![0.0; n];
        let mut err = vec![0.0; n];
        let mut rc = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];

        f(t, &y, &mut k1).map_err(|source| OdeError::Rhs { t, source })?;
        let mut h = match self.h_init {
            Some(h) => h.abs(),
            None => self.initial_step(&y, &k1),
        }
        .min(self.h_max)
        .min((t_end - t0).abs());
        let h_floor = 1e-14 * t0.abs().max(t_end.abs()).max(1.0);
        let mut last_fail = false;

        loop {
            if out.steps + out.rejected >= self.max_steps {
                return Err(OdeError::TooManySteps(self.max_steps));
            }
            if h < h_floor {
                return Err(OdeError::StepUnderflow { t, h });
            }
            let remaining = (t_end - t).abs();
            let last = h >= remaining * (1.0 - 1e-12);
            if last {
                h = remaining;
            }
            let hs = h * dir;

            for i in 0..n {
                tmp[i] = y[i] + hs * A21 * k1[i];
            }
            let rhs = |t: f64, r: Result<(), E>| r.map_err(|source| OdeError::Rhs { t, source });
            rhs(t + C2 * hs, f(t + C2 * hs, &tmp, &mut k2))?;
            for i in 0..n {
                tmp[i] = y[i] + hs * (A31 * k1[i] + A32 * k2[i]);
            }
            rhs(t + C3 * hs, f(t + C3 * hs, &tmp, &mut k3))?;
            for i in 0..n {
                tmp[i] = y[i] + hs * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
            }
            rhs(t + C4 * hs, f(t + C4 * hs, &tmp, &mut k4))?;
            for i in 0..n {
                tmp[i] = y[i] + hs * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
            }
            rhs(t + C5 * hs, f(t + C5 * hs, &tmp, &mut k5))?;
            for i in 0..n {
                tmp[i] = y[i] + hs * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
            }
            let t_new = if last { t_end } else { t + hs };
            rhs(t_new, f(t + hs, &tmp, &mut k6))?;
            for i in 0..n {
                y_new[i] = y[i] + hs * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
            }
            rhs(t_new, f(t_new, &y_new, &mut k7))?;

            let mut norm = 0.0;
            for i in 0..n {
                err[i] = hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sc = self.atol + self.rtol * y[i].abs().max(y_new[i].abs());
                norm += (err[i] / sc).powi(2);
            }
            let norm = (norm / n as f64).sqrt();

            if !norm.is_finite() || norm > 1.0 {
                out.rejected += 1;
                let fac = if norm.is_finite() { (0.9 * norm.powf(-0.2)).max(0.2) } else { 0.2 };
                h *= if last_fail { fac.min(0.5) } else { fac };
                last_fail = true;
                continue;
            }
            last_fail = false;
            out.steps += 1;

            // dense output coefficients for this step
            for i in 0..n {
                let ydiff = y_new[i] - y[i];
                let bspl = hs * k1[i] - ydiff;
                rc[0][i] = y[i];
                rc[1][i] = ydiff;
                rc[2][i] = bspl;
                rc[3][i] = ydiff - hs * k7[i] - bspl;
                rc[4][i] = hs * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            while next_sample < samples.len() && (samples[next_sample] - t_new) * dir <= 0.0 {
                let ts = samples[next_sample];
                let state = if ts == t_new {
                    y_new.clone()
                } else {
                    let th = (ts - t) / hs;
                    let th1 = 1.0 - th;
                    (0..n)
                        .map(|i| rc[0][i] + th * (rc[1][i] + th1 * (rc[2][i] + th * (rc[3][i] + th1 * rc[4][i]))))
                        .collect()
                };
                out.times.push(ts);
                out.states.push(state);
                next_sample += 1;
            }

            t = t_new;
            std::mem::swap(&mut y, &mut y_new);
            std::mem::swap(&mut k1, &mut k7);
            observe(t, &y).map_err(|source| OdeError::Stopped { t, source })?;
            if last || next_sample == samples.len() {
                return Ok(out);
            }
            let fac = (0.9 * norm.max(1e-10).powf(-0.2)).clamp(0.2, 5.0);
            h = (h * fac).min(self.h_max);
        }
    }

    fn initial_step(&self, y: &[f64], f0: &[f64]) -> f64 {
        let n = y.len() as f64;
        let (mut d0, mut d1) = (0.0, 0.0);
        for (yi, fi) in y.iter().zip(f0) {
            let sc = self.atol + self.rtol * yi.abs();
            d0 += (yi / sc).powi(2);
            d1 += (fi / sc).powi(2);
        }
        let (d0, d1) = ((d0 / n).sqrt(), (d1 / n).sqrt());
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        // fifth-order method: shrink so that the first error estimate is sane
        (h0 * self.rtol.powf(0.2) * 10.0).max(1e-10)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;

    fn harmonic(_: f64, y: &[f64], d: &mut [f64]) -> Result<(), Infallible> {
        d[0] = y[1];
        d[1] = -y[0];
        Ok(())
    }

    #[test]
    fn harmonic_oscillator_forward_and_backward() {
        let solver = DormandPrince::new(1e-12);
        let samples: Vec<f64> = (0..=100).map(|i| 0.5 * i as f64).collect();
        let sol = solver.solve(harmonic, 0.0, &[1.0, 0.0], &samples, |_, _| Ok(())).unwrap();
        for (t, y) in sol.times.iter().zip(&sol.states) {
            assert!((y[0] - t.cos()).abs() < 1e-9, "t={t}");
            assert!((y[1] + t.sin()).abs() < 1e-9);
        }
        let back: Vec<f64> = samples.iter().map(|t| -t).collect();
        let sol = solver.solve(harmonic, 0.0, &[1.0, 0.0], &back, |_, _| Ok(())).unwrap();
        let (t, y) = (sol.times[100], &sol.states[100]);
        assert!((y[0] - t.cos()).abs() < 1e-9 && (y[1] + t.sin()).abs() < 1e-9);
    }

    #[test]
    fn dense_output_between_steps() {
        let solver = DormandPrince::new(1e-10);
        let samples: Vec<f64> = (0..=1000).map(|i| 0.01 * i as f64).collect();
        let sol = solver.solve(harmonic, 0.0, &[0.0, 1.0], &samples, |_, _| Ok(())).unwrap();
        assert!(sol.steps < 1000);
        for (t, y) in sol.times.iter().zip(&sol.states) {
            assert!((y[0] - t.sin()).abs() < 1e-8);
        }
    }

    #[test]
    fn empty_span_returns_initial_state() {
        let sol = DormandPrince::new(1e-10).solve(harmonic, 2.0, &[0.3, 0.4], &[2.0], |_, _| Ok(())).unwrap();
        assert_eq!(sol.states, vec![vec![0.3, 0.4]]);
        assert_eq!(sol.steps, 0);
    }

    #[test]
    fn observer_can_stop() {
        let rhs = |_: f64, y: &[f64], d: &mut [f64]| -> Result<(), &str> {
            d[0] = y[1];
            d[1] = -y[0];
            Ok(())
        };
        let r =
            DormandPrince::new(1e-8).solve(
                rhs,
                0.0,
                &[1.0, 0.0],
                &[10.0],
                |t, _| {
                    if t > 1.0 {
                        Err("stop")
                    } else {
                        Ok(())
                    }
                },
            );
        assert!(matches!(r, Err(OdeError::Stopped { .. })));
    }
}
