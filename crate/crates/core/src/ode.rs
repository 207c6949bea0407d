//! Explicit Runge-Kutta integrators on flat `f64` state vectors.
//!
//! Complex systems are integrated by interleaving real and imaginary parts.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
    #[error("step budget of {0} exhausted")]
    Budget(usize),
}

/// How the local error estimate is weighed against the state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ErrorNorm {
    /// Componentwise `atol + rtol |y_i|`.
    Mixed { atol: f64, rtol: f64 },
    /// `tol * max_i |y_i|`; scale-free, so rescaling the state by a power of
    /// two reproduces the same step sequence bit for bit.
    Relative { tol: f64 },
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
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Adaptive Dormand-Prince 5(4) stepper with first-same-as-last reuse.
///
/// The right-hand side is passed to every call so that the stepper does not
/// borrow it; callers must pass the same function each time.
#[derive(Debug, Clone)]
pub struct Dp45 {
    pub norm: ErrorNorm,
    pub h_min: f64,
    pub h_max: f64,
    t: f64,
    y: Vec<f64>,
    dy: Vec<f64>,
    h: f64,
    t_prev: f64,
    y_prev: Vec<f64>,
    dy_prev: Vec<f64>,
    k: [Vec<f64>; 6],
    tmp: Vec<f64>,
    accepted: usize,
    rejected: usize,
}

impl Dp45 {
    /// `h0` is signed and fixes the direction of integration.
    pub fn new<F>(f: &mut F, t0: f64, y0: &[f64], h0: f64, norm: ErrorNorm) -> Self
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let n = y0.len();
        let mut dy = vec![0.0; n];
        f(t0, y0, &mut dy);
        Dp45 {
            norm,
            h_min: 1e-14,
            h_max: f64::INFINITY,
            t: t0,
            y: y0.to_vec(),
            dy: dy.clone(),
            h: h0,
            t_prev: t0,
            y_prev: y0.to_vec(),
            dy_prev: dy,
            k: std::array::from_fn(|_| vec![0.0; n]),
            tmp: vec![0.0; n],
            accepted: 0,
            rejected: 0,
        }
    }

    pub fn t(&self) -> f64 {
        self.t
    }
    pub fn y(&self) -> &[f64] {
        &self.y
    }
    pub fn dy(&self) -> &[f64] {
        &self.dy
    }
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn t_prev(&self) -> f64 {
        self.t_prev
    }
    pub fn y_prev(&self) -> &[f64] {
        &self.y_prev
    }
    pub fn accepted(&self) -> usize {
        self.accepted
    }
    pub fn rejected(&self) -> usize {
        self.rejected
    }

    /// Multiplies the current state (and its derivative) by `c`. Only valid
    /// for linear systems.
    pub fn scale(&mut self, c: f64) {
        for v in self.y.iter_mut().chain(self.dy.iter_mut()) {
            *v *= c;
        }
    }

    /// Cubic Hermite interpolant on the last accepted step.
    pub fn dense(&self, t: f64, out: &mut [f64]) {
        let h = self.t - self.t_prev;
        if h == 0.0 {
            out.copy_from_slice(&self.y);
            return;
        }
        let s = (t - self.t_prev) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        for i in 0..out.len() {
            out[i] = h00 * self.y_prev[i]
                + h10 * h * self.dy_prev[i]
                + h01 * self.y[i]
                + h11 * h * self.dy[i];
        }
    }

    fn error_ratio(&self, y_new: &[f64], err: &[f64]) -> f64 {
        match self.norm {
            ErrorNorm::Mixed { atol, rtol } => err
                .iter()
                .zip(self.y.iter().zip(y_new))
                .map(|(e, (a, b))| e.abs() / (atol + rtol * a.abs().max(b.abs())))
                .fold(0.0, f64::max),
            ErrorNorm::Relative { tol } => {
                let scale = self
                    .y
                    .iter()
                    .chain(y_new)
                    .fold(0.0f64, |m, v| m.max(v.abs()));
                let e = err.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                if scale == 0.0 {
                    0.0
                } else {
                    e / (tol * scale)
                }
            }
        }
    }

    /// Takes one accepted step, never stepping past `t_end`.
    pub fn step<F>(&mut self, f: &mut F, t_end: f64) -> Result<(), OdeError>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let n = self.y.len();
        let dir = if t_end >= self.t { 1.0 } else { -1.0 };
        let mut h = self.h.abs().min(self.h_max) * dir;
        let mut y_new = vec![0.0; n];
        let mut err = vec![0.0; n];
        loop {
            let remaining = t_end - self.t;
            let last = h.abs() >= remaining.abs();
            if last {
                h = remaining;
            }
            if h.abs() < self.h_min && !last {
                return Err(OdeError::StepUnderflow { t: self.t, h });
            }
            let t = self.t;
            let [k2, k3, k4, k5, k6, k7] = &mut self.k;
            let y = &self.y;
            let k1 = &self.dy;
            let tmp = &mut self.tmp;
            for i in 0..n {
                tmp[i] = y[i] + h * A21 * k1[i];
            }
            f(t + C2 * h, tmp, k2);
            for i in 0..n {
                tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
            }
            f(t + C3 * h, tmp, k3);
            for i in 0..n {
                tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
            }
            f(t + C4 * h, tmp, k4);
            for i in 0..n {
                tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
            }
            f(t + C5 * h, tmp, k5);
            for i in 0..n {
                tmp[i] = y[i]
                    + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
            }
            f(t + h, tmp, k6);
            for i in 0..n {
                y_new[i] = y[i]
                    + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
            }
            let t_new = if last { t_end } else { t + h };
            f(t_new, &y_new, k7);
            for i in 0..n {
                err[i] = h
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            }
            if y_new.iter().any(|v| !v.is_finite()) {
                self.rejected += 1;
                h *= 0.25;
                if h.abs() < self.h_min {
                    return Err(OdeError::NonFinite { t });
                }
                continue;
            }
            let ratio = self.error_ratio(&y_new, &err);
            if ratio <= 1.0 {
                let factor = if ratio == 0.0 {
                    5.0
                } else {
                    (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0)
                };
                self.t_prev = self.t;
                std::mem::swap(&mut self.y_prev, &mut self.y);
                std::mem::swap(&mut self.dy_prev, &mut self.dy);
                self.y.copy_from_slice(&y_new);
                self.dy.copy_from_slice(&self.k[5]);
                self.t = t_new;
                if !last || factor < 1.0 {
                    self.h = h * factor;
                }
                self.accepted += 1;
                return Ok(());
            }
            self.rejected += 1;
            h *= (0.9 * ratio.powf(-0.2)).clamp(0.1, 0.9);
        }
    }

    /// Steps until `t_end` is reached exactly.
    pub fn integrate_to<F>(&mut self, f: &mut F, t_end: f64, max_steps: usize) -> Result<(), OdeError>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let mut steps = 0;
        while self.t != t_end {
            if steps == max_steps {
                return Err(OdeError::Budget(max_steps));
            }
            self.step(f, t_end)?;
            steps += 1;
        }
        Ok(())
    }
}

/// One classical fourth-order Runge-Kutta step, in place.
pub fn rk4_step<F>(f: &mut F, t: f64, y: &mut [f64], h: f64, work: &mut [Vec<f64>; 5])
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y.len();
    let [k1, k2, k3, k4, tmp] = work;
    f(t, y, k1);
    for i in 0..n {
        tmp[i] = y[i] + 0.5 * h * k1[i];
    }
    f(t + 0.5 * h, tmp, k2);
    for i in 0..n {
        tmp[i] = y[i] + 0.5 * h * k2[i];
    }
    f(t + 0.5 * h, tmp, k3);
    for i in 0..n {
        tmp[i] = y[i] + h * k3[i];
    }
    f(t + h, tmp, k4);
    for i in 0..n {
        y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

pub fn rk4_work(n: usize) -> [Vec<f64>; 5] {
    std::array::from_fn(|_| vec![0.0; n])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dp45_matches_exponential() {
        let mut f = |_t: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = -y[0];
            dy[1] = 2.0 * y[1];
        };
        let mut s = Dp45::new(&mut f, 0.0, &[1.0, 1.0], 0.1, ErrorNorm::Mixed { atol: 1e-12, rtol: 1e-12 });
        s.integrate_to(&mut f, 3.0, 100_000).unwrap();
        assert_eq!(s.t(), 3.0);
        assert!((s.y()[0] - (-3.0f64).exp()).abs() < 1e-11);
        assert!((s.y()[1] / 6.0f64.exp() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn backward_integration_and_dense_output() {
        let mut f = |t: f64, _y: &[f64], dy: &mut [f64]| dy[0] = t.cos();
        let mut s = Dp45::new(&mut f, 2.0, &[2.0f64.sin()], -0.1, ErrorNorm::Mixed { atol: 1e-12, rtol: 0.0 });
        s.step(&mut f, 0.0).unwrap();
        assert!(s.t() < 2.0);
        let mut out = [0.0];
        let tm = 0.5 * (s.t() + s.t_prev());
        s.dense(tm, &mut out);
        assert!((out[0] - tm.sin()).abs() < 1e-8);
        s.integrate_to(&mut f, 0.0, 10_000).unwrap();
        assert!(s.y()[0].abs() < 1e-11);
    }

    #[test]
    fn relative_norm_is_scale_exact() {
        let mut f = |t: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = -t * y[1];
            dy[1] = y[0] - 0.3 * y[1];
        };
        let run = |c: f64, f: &mut dyn FnMut(f64, &[f64], &mut [f64])| {
            let mut g = |t: f64, y: &[f64], dy: &mut [f64]| f(t, y, dy);
            let mut s = Dp45::new(&mut g, 0.0, &[0.7 * c, -1.1 * c], 0.1, ErrorNorm::Relative { tol: 1e-10 });
            s.integrate_to(&mut g, 5.0, 100_000).unwrap();
            s.y().to_vec()
        };
        let a = run(1.0, &mut f);
        let b = run(2.0, &mut f);
        assert_eq!(b[0], 2.0 * a[0]);
        assert_eq!(b[1], 2.0 * a[1]);
    }

    #[test]
    fn rk4_is_fourth_order() {
        let mut f = |_t: f64, y: &[f64], dy: &mut [f64]| dy[0] = y[0];
        let err = |h: f64, f: &mut dyn FnMut(f64, &[f64], &mut [f64])| {
            let mut g = |t: f64, y: &[f64], dy: &mut [f64]| f(t, y, dy);
            let mut y = [1.0];
            let mut w = rk4_work(1);
            let n = (1.0 / h).round() as usize;
            for i in 0..n {
                rk4_step(&mut g, i as f64 * h, &mut y, h, &mut w);
            }
            (y[0] - 1f64.exp()).abs()
        };
        let ratio = err(0.1, &mut f) / err(0.05, &mut f);
        assert!((ratio - 16.0).abs() < 1.0, "ratio {ratio}");
    }
}
