//! Local solutions of the eigenvalue system near the degenerate point `x = 0`.
//!
//! With `a(x) = Σ α_j x^j` (`α_0 = 0`), `b(x) = Σ b_j x^j` and
//! `ω(x) = λ + a'(x) + L b(x)`, the system
//!
//! ```text
//! a u' = -ω u + L p,   q' = b u - p,   p' = -q
//! ```
//!
//! has a regular singular point at the origin. Two solutions are power
//! series in `x` fixed by `(q(0), p(0))`; the third behaves like `|x|^ν`
//! with `ν = ω(0) / |α_1|`.

use num_complex::Complex64;

use super::EvansError;
use crate::linalg::{solve3, C3};

/// Power series of one local solution, component by component.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalSeries {
    pub u: Vec<Complex64>,
    pub q: Vec<Complex64>,
    pub p: Vec<Complex64>,
}

impl LocalSeries {
    fn with_len(n: usize) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); n];
        LocalSeries { u: z.clone(), q: z.clone(), p: z }
    }

    pub fn eval(&self, x: f64) -> C3 {
        [horner(&self.u, x), horner(&self.q, x), horner(&self.p, x)]
    }
}

fn horner(c: &[Complex64], x: f64) -> Complex64 {
    c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &v| acc * x + v)
}

/// Two slow solutions and the fast solution at one spectral parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalBasis {
    pub lambda: Complex64,
    /// `ω(0) = λ + a'(0) + L b(0)`.
    pub omega0: Complex64,
    pub nu: Complex64,
    /// `(q, p)(0) = (1, 0)` and `(0, 1)`.
    pub slow: [LocalSeries; 2],
    /// `(G, H, R)` with the fast solution equal to `|x|^ν (G, H, R)(x)` and
    /// `G(0) = 1`.
    pub fast: LocalSeries,
}

/// Result of re-expanding a solution in the local basis and continuing it
/// through the singular point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    /// Coefficients on `(slow1, slow2, fast)` at the near side, the fast one
    /// in the stored normalization of [`LocalBasis::fast_at`].
    pub coeffs: C3,
    /// Continued value at the mirrored abscissa.
    pub value: C3,
}

impl LocalBasis {
    /// Builds the local series from the Taylor coefficients of `a` and `b`.
    ///
    /// `alpha[0]` must be zero and `alpha[1]` negative (a Lax profile).
    pub fn new(
        alpha: &[f64],
        b: &[f64],
        l: f64,
        lambda: Complex64,
        terms: usize,
    ) -> Result<Self, EvansError> {
        let n = terms.min(alpha.len().saturating_sub(1)).min(b.len());
        if n < 2 || alpha[1] >= 0.0 {
            return Err(EvansError::Local(format!(
                "need a'(0) < 0 and at least two coefficients (a'(0) = {}, terms = {n})",
                alpha.get(1).copied().unwrap_or(f64::NAN)
            )));
        }
        let a1 = alpha[1];
        let omega: Vec<Complex64> = (0..n)
            .map(|j| {
                let base = (j + 1) as f64 * alpha[j + 1] + l * b[j];
                if j == 0 {
                    lambda + base
                } else {
                    Complex64::new(base, 0.0)
                }
            })
            .collect();
        let omega0 = omega[0];
        if omega0.norm() < 1e-10 {
            return Err(EvansError::Indicial { lambda });
        }
        let nu = omega0 / a1.abs();
        for k in 1..n {
            if (nu - k as f64).norm() < 1e-8 {
                return Err(EvansError::Local(format!("resonant exponent nu = {nu} at order {k}")));
            }
        }

        let mut slow = [LocalSeries::with_len(n), LocalSeries::with_len(n)];
        for (s, series) in slow.iter_mut().enumerate() {
            let mut q_next = Complex64::new(if s == 0 { 1.0 } else { 0.0 }, 0.0);
            let mut p_next = Complex64::new(if s == 1 { 1.0 } else { 0.0 }, 0.0);
            for k in 0..n {
                series.q[k] = q_next;
                series.p[k] = p_next;
                let mut rhs = l * series.p[k];
                for j in 2..=k + 1 {
                    rhs -= alpha[j] * (k + 1 - j) as f64 * series.u[k + 1 - j];
                }
                for j in 1..=k {
                    rhs -= omega[j] * series.u[k - j];
                }
                series.u[k] = rhs / (a1 * k as f64 + omega0);
                let bu: Complex64 = (0..=k).map(|j| b[j] * series.u[k - j]).sum();
                q_next = (bu - series.p[k]) / (k + 1) as f64;
                p_next = -series.q[k] / (k + 1) as f64;
            }
        }

        let mut fast = LocalSeries::with_len(n);
        fast.u[0] = Complex64::new(1.0, 0.0);
        for m in 1..n {
            let bg: Complex64 = (0..m).map(|j| b[j] * fast.u[m - 1 - j]).sum();
            fast.q[m] = (bg - fast.p[m - 1]) / (nu + m as f64);
            fast.p[m] = -fast.q[m - 1] / (nu + m as f64);
            let mut rhs = l * fast.p[m];
            for j in 2..=m + 1 {
                rhs -= alpha[j] * (nu + (m + 1 - j) as f64) * fast.u[m + 1 - j];
            }
            for j in 1..=m {
                rhs -= omega[j] * fast.u[m - j];
            }
            fast.u[m] = rhs / (a1 * m as f64);
        }

        Ok(LocalBasis { lambda, omega0, nu, slow, fast })
    }

    pub fn slow_at(&self, k: usize, x: f64) -> C3 {
        self.slow[k].eval(x)
    }

    /// Fast solution at `x` as `(stored value, log scale)`: the solution is
    /// `stored * exp(log_scale)` with `log_scale = ν ln|x|`.
    pub fn fast_at(&self, x: f64) -> (C3, Complex64) {
        (self.fast.eval(x), self.nu * x.abs().ln())
    }

    /// Decomposes `w` (a solution value at `x`) on the local basis and
    /// continues its slow part to `-x`, dropping the fast component.
    pub fn cross(&self, x: f64, w: &C3) -> Result<Crossing, EvansError> {
        let s1 = self.slow_at(0, x);
        let s2 = self.slow_at(1, x);
        let (f, _) = self.fast_at(x);
        let coeffs = solve3(&s1, &s2, &f, w)
            .ok_or_else(|| EvansError::Local(format!("singular local basis at x = {x}")))?;
        let t1 = self.slow_at(0, -x);
        let t2 = self.slow_at(1, -x);
        let value = [
            coeffs[0] * t1[0] + coeffs[1] * t2[0],
            coeffs[0] * t1[1] + coeffs[1] * t2[1],
            coeffs[0] * t1[2] + coeffs[1] * t2[2],
        ];
        Ok(Crossing { coeffs, value })
    }

    /// Residual of the series solution `k` (0, 1 slow, 2 fast) in the
    /// system at `x`, given `a, a', b` there.
    pub fn residual(&self, k: usize, x: f64, a: f64, da: f64, b: f64, l: f64) -> f64 {
        let (w, dw) = if k < 2 {
            let s = &self.slow[k];
            (s.eval(x), [dhorner(&s.u, x), dhorner(&s.q, x), dhorner(&s.p, x)])
        } else {
            // Derivative of |x|^ν G: |x|^ν (ν G / x + G'); drop the common
            // |x|^ν factor.
            let s = &self.fast;
            let g = s.eval(x);
            let d = [dhorner(&s.u, x), dhorner(&s.q, x), dhorner(&s.p, x)];
            (g, [0, 1, 2].map(|i| self.nu * g[i] / x + d[i]))
        };
        let omega = self.lambda + da + l * b;
        let r0 = a * dw[0] + omega * w[0] - l * w[2];
        let r1 = dw[1] - (b * w[0] - w[2]);
        let r2 = dw[2] + w[1];
        let scale = w.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
        r0.norm().max(r1.norm()).max(r2.norm()) / scale
    }
}

fn dhorner(c: &[Complex64], x: f64) -> Complex64 {
    c.iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, (k, &v)| acc * x + v * k as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    // a(x) = -0.1 x + 0.05 x^2, b = 1.03 + 0.2 x: a small synthetic case where
    // the exact solutions are not needed, only the residual.
    fn synthetic(lambda: Complex64) -> LocalBasis {
        let alpha = [0.0, -0.1, 0.05, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let b = [1.03, 0.2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        LocalBasis::new(&alpha, &b, 1.0, lambda, 12).unwrap()
    }

    #[test]
    fn series_solve_the_system() {
        for lam in [cx(0.0, 0.0), cx(0.3, -2.0)] {
            let basis = synthetic(lam);
            for x in [-0.01, 0.01] {
                let (a, da, b) = (-0.1 * x + 0.05 * x * x, -0.1 + 0.1 * x, 1.03 + 0.2 * x);
                for k in 0..3 {
                    let r = basis.residual(k, x, a, da, b, 1.0);
                    assert!(r < 1e-12, "k={k} x={x} r={r:e}");
                }
            }
        }
    }

    #[test]
    fn slow_u_is_fixed_by_p_at_origin() {
        let lam = cx(0.2, 1.0);
        let basis = synthetic(lam);
        assert_eq!(basis.slow[0].u[0], cx(0.0, 0.0));
        let expect = 1.0 / basis.omega0;
        assert!((basis.slow[1].u[0] - expect).norm() < 1e-15);
        assert!((basis.nu - basis.omega0 / 0.1).norm() < 1e-12);
    }

    #[test]
    fn fast_mode_has_vanishing_q_p_at_origin() {
        let basis = synthetic(cx(0.0, 0.5));
        assert_eq!(basis.fast.q[0], cx(0.0, 0.0));
        assert_eq!(basis.fast.p[0], cx(0.0, 0.0));
        assert_eq!(basis.fast.u[0], cx(1.0, 0.0));
    }

    #[test]
    fn indicial_point_is_rejected() {
        // ω(0) = λ + a'(0) + L b(0) = λ - 0.1 + 1.
        let alpha = [0.0, -0.1, 0.0, 0.0];
        let b = [1.0, 0.0, 0.0];
        let err = LocalBasis::new(&alpha, &b, 1.0, cx(-0.9, 0.0), 3).unwrap_err();
        assert!(matches!(err, EvansError::Indicial { .. }));
    }

    #[test]
    fn crossing_keeps_q_p_continuous_and_is_linear() {
        let basis = synthetic(cx(0.1, 0.7));
        let x = 0.01;
        let w = [cx(0.3, 0.1), cx(-1.0, 0.2), cx(0.5, 0.5)];
        let c = basis.cross(x, &w).unwrap();
        // At the origin only the slow solutions carry (q, p).
        let at0 = [c.coeffs[0], c.coeffs[1]];
        let s1 = basis.slow_at(0, 0.0);
        let s2 = basis.slow_at(1, 0.0);
        assert!((at0[0] * s1[1] + at0[1] * s2[1] - c.coeffs[0]).norm() < 1e-15);
        let w2 = w.map(|z| z * 2.0);
        let c2 = basis.cross(x, &w2).unwrap();
        for i in 0..3 {
            assert_eq!(c2.value[i], c.value[i] * 2.0);
        }
        let zero = basis.cross(x, &[cx(0.0, 0.0); 3]).unwrap();
        assert!(zero.value.iter().all(|z| z.norm() == 0.0));
    }
}
