//! Adaptive Dormand-Prince 5(4) integrator for complex linear systems.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quantum::C64;

/// Right-hand side `dy/dt = f(t, y)`.
pub trait Rhs {
    fn eval(&mut self, t: f64, y: &[C64], dy: &mut [C64]);
}

impl<F: FnMut(f64, &[C64], &mut [C64])> Rhs for F {
    fn eval(&mut self, t: f64, y: &[C64], dy: &mut [C64]) {
        self(t, y, dy)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rtol: 1e-8, atol: 1e-6 }
    }
}

impl Tolerances {
    /// Tight tolerances for reference trajectories compared against errors of order 1e-5.
    pub fn reference() -> Self {
        Self { rtol: 1e-10, atol: 1e-10 }
    }

    pub fn new(rtol: f64, atol: f64) -> Result<Self> {
        if !(rtol > 0.0 && atol >= 0.0) {
            return Err(invalid("tolerances must be positive"));
        }
        Ok(Self { rtol, atol })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            rtol: self.rtol * factor,
            atol: self.atol * factor,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
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
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Difference between the fifth- and fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const MAX_STEPS: usize = 50_000_000;

/// Dormand-Prince 5(4) with local extrapolation and RMS error norm.
pub struct Dopri5 {
    pub tol: Tolerances,
    pub stats: OdeStats,
    k: [Vec<C64>; 7],
    ytmp: Vec<C64>,
    h: Option<f64>,
}

impl Dopri5 {
    pub fn new(tol: Tolerances) -> Self {
        Self {
            tol,
            stats: OdeStats::default(),
            k: Default::default(),
            ytmp: vec![],
            h: None,
        }
    }

    fn norm(&self, y0: &[C64], y1: &[C64], err: &[C64]) -> f64 {
        let mut s = 0.0;
        for ((a, b), e) in y0.iter().zip(y1).zip(err) {
            let sc = self.tol.atol + self.tol.rtol * a.norm().max(b.norm());
            let r = e.norm() / sc;
            s += r * r;
        }
        (s / y0.len().max(1) as f64).sqrt()
    }

    fn initial_step<R: Rhs>(&mut self, f: &mut R, t: f64, y: &[C64], span: f64) -> f64 {
        // Hairer, Norsett and Wanner, starting step heuristic.
        let n = y.len();
        let f0 = &self.k[0];
        let zeros = vec![C64::new(0.0, 0.0); n];
        let d0 = self.norm(y, y, y);
        let d1 = self.norm(y, y, f0);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 * span } else { 0.01 * d0 / d1 };
        let h0 = h0.min(span);
        let y1: Vec<C64> = y.iter().zip(f0).map(|(a, b)| a + b * h0).collect();
        let mut f1 = vec![C64::new(0.0, 0.0); n];
        f.eval(t + h0, &y1, &mut f1);
        self.stats.evaluations += 1;
        let diff: Vec<C64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
        let d2 = self.norm(y, &zeros, &diff) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6 * span)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(span)
    }

    /// Integrates from `t0` through every time in `outputs` (non-decreasing, `>= t0`),
    /// calling `observe(index, t, y)` at each one. Steps land exactly on output times.
    pub fn integrate<R, O>(&mut self, f: &mut R, t0: f64, y: &mut [C64], outputs: &[f64], mut observe: O) -> Result<()>
    where
        R: Rhs,
        O: FnMut(usize, f64, &[C64]) -> Result<()>,
    {
        let n = y.len();
        if outputs.windows(2).any(|w| w[1] < w[0]) || outputs.first().is_some_and(|&t| t < t0) {
            return Err(invalid("output times must be sorted and not before t0"));
        }
        for k in &mut self.k {
            k.resize(n, C64::new(0.0, 0.0));
        }
        self.ytmp.resize(n, C64::new(0.0, 0.0));
        let mut ynew = vec![C64::new(0.0, 0.0); n];
        let mut err = vec![C64::new(0.0, 0.0); n];

        let mut t = t0;
        f.eval(t, y, &mut self.k[0]);
        self.stats.evaluations += 1;
        let t_end = outputs.last().copied().unwrap_or(t0);
        let mut h = match self.h {
            Some(h) => h,
            None if t_end > t0 => self.initial_step(f, t, y, t_end - t0),
            None => 0.0,
        };
        let mut steps = 0usize;

        for (idx, &target) in outputs.iter().enumerate() {
            while t < target {
                let remaining = target - t;
                let last = h >= remaining;
                let hs = if last { remaining } else { h };
                if hs <= 1e-14 * t.abs().max(t_end.abs()) {
                    return Err(Error::StepSizeUnderflow { time: t });
                }
                steps += 1;
                if steps > MAX_STEPS {
                    return Err(Error::StepSizeUnderflow { time: t });
                }
                self.stage(f, t, hs, y, &mut ynew, &mut err);
                let e = self.norm(y, &ynew, &err);
                let e = if e.is_finite() { e } else { f64::INFINITY };
                if e <= 1.0 {
                    self.stats.accepted += 1;
                    t = if last { target } else { t + hs };
                    y.copy_from_slice(&ynew);
                    self.k.swap(0, 6);
                    let fac = if e == 0.0 { 5.0 } else { (0.9 * e.powf(-0.2)).clamp(0.2, 5.0) };
                    // Keep the unclamped step when the last one was shortened to hit an output.
                    h = if last { h.max(hs * fac) } else { hs * fac };
                } else {
                    self.stats.rejected += 1;
                    h = hs * (0.9 * e.powf(-0.2)).clamp(0.1, 1.0);
                }
            }
            observe(idx, target, y)?;
        }
        self.h = Some(h);
        Ok(())
    }

    fn stage<R: Rhs>(&mut self, f: &mut R, t: f64, h: f64, y: &[C64], ynew: &mut [C64], err: &mut [C64]) {
        let n = y.len();
        let mut tmp = std::mem::take(&mut self.ytmp);
        let k = &mut self.k;
        combine(&mut tmp, y, h, &[(A21, &k[0])]);
        f.eval(t + C2 * h, &tmp, &mut k[1]);
        combine(&mut tmp, y, h, &[(A31, &k[0]), (A32, &k[1])]);
        f.eval(t + C3 * h, &tmp, &mut k[2]);
        combine(&mut tmp, y, h, &[(A41, &k[0]), (A42, &k[1]), (A43, &k[2])]);
        f.eval(t + C4 * h, &tmp, &mut k[3]);
        combine(&mut tmp, y, h, &[(A51, &k[0]), (A52, &k[1]), (A53, &k[2]), (A54, &k[3])]);
        f.eval(t + C5 * h, &tmp, &mut k[4]);
        combine(&mut tmp, y, h, &[(A61, &k[0]), (A62, &k[1]), (A63, &k[2]), (A64, &k[3]), (A65, &k[4])]);
        f.eval(t + h, &tmp, &mut k[5]);
        self.ytmp = tmp;
        for i in 0..n {
            ynew[i] = y[i]
                + (self.k[0][i] * B1 + self.k[2][i] * B3 + self.k[3][i] * B4 + self.k[4][i] * B5 + self.k[5][i] * B6) * h;
        }
        f.eval(t + h, ynew, &mut self.k[6]);
        for i in 0..n {
            err[i] = (self.k[0][i] * E1
                + self.k[2][i] * E3
                + self.k[3][i] * E4
                + self.k[4][i] * E5
                + self.k[5][i] * E6
                + self.k[6][i] * E7)
                * h;
        }
        self.stats.evaluations += 6;
    }
}

/// `out = y + h * sum_i c_i k_i`
fn combine(out: &mut [C64], y: &[C64], h: f64, terms: &[(f64, &Vec<C64>)]) {
    out.copy_from_slice(y);
    for &(c, k) in terms {
        let ch = c * h;
        for (o, v) in out.iter_mut().zip(k.iter()) {
            *o += v * ch;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let mut f = |_t: f64, y: &[C64], dy: &mut [C64]| dy[0] = -y[0];
        let mut y = vec![C64::new(1.0, 0.0)];
        let mut ode = Dopri5::new(Tolerances::new(1e-10, 1e-12).unwrap());
        let times: Vec<f64> = (0..=10).map(|i| i as f64 * 0.5).collect();
        let mut seen = vec![];
        ode.integrate(&mut f, 0.0, &mut y, &times, |_, t, y| {
            seen.push((t, y[0].re));
            Ok(())
        })
        .unwrap();
        for (t, v) in seen {
            assert!((v - (-t).exp()).abs() < 1e-9, "t = {t}");
        }
    }

    #[test]
    fn rotation_keeps_norm() {
        let w = 40.0;
        let mut f = |_t: f64, y: &[C64], dy: &mut [C64]| dy[0] = C64::new(0.0, -w) * y[0];
        let mut y = vec![C64::new(1.0, 0.0)];
        let mut ode = Dopri5::new(Tolerances::new(1e-10, 1e-10).unwrap());
        ode.integrate(&mut f, 0.0, &mut y, &[1.0], |_, _, _| Ok(())).unwrap();
        assert!((y[0] - C64::from_polar(1.0, -w)).norm() < 1e-7);
        assert!(ode.stats.rejected < ode.stats.accepted);
    }

    #[test]
    fn unsorted_outputs_rejected() {
        let mut f = |_t: f64, _y: &[C64], dy: &mut [C64]| dy[0] = C64::new(0.0, 0.0);
        let mut y = vec![C64::new(1.0, 0.0)];
        let mut ode = Dopri5::new(Tolerances::default());
        assert!(ode.integrate(&mut f, 0.0, &mut y, &[1.0, 0.5], |_, _, _| Ok(())).is_err());
    }

    #[test]
    fn blow_up_reports_time() {
        // y' = y^2 from y = 1 diverges at t = 1.
        let mut f = |_t: f64, y: &[C64], dy: &mut [C64]| dy[0] = y[0] * y[0];
        let mut y = vec![C64::new(1.0, 0.0)];
        let mut ode = Dopri5::new(Tolerances::default());
        match ode.integrate(&mut f, 0.0, &mut y, &[2.0], |_, _, _| Ok(())) {
            Err(Error::StepSizeUnderflow { time }) => assert!(time < 1.001 && time > 0.9, "{time}"),
            other => panic!("expected underflow, got {other:?}"),
        }
    }
}
