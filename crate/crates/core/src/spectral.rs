//! Constant-coefficient spectral data of the limiting systems at `x = ±∞`.
//!
//! With `W = (u, q, p)` the limiting system is `W' = A±(λ) W` where
//!
//! ```text
//! A±(λ) = [ -(λ + L b±)/a±   0   L/a± ]
//!         [        b±        0    -1  ]
//!         [        0        -1     0  ]
//! ```
//!
//! and `a± = f'(u±)`, `b± = M'(u±)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::C3;
use crate::model::{ModelSpec, Side};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("roots collide (gap {gap:e}) while tracking from 0 to {lambda}; use smaller path steps")]
    Collision { lambda: Complex64, gap: f64 },
    #[error("consistent splitting violated at {lambda}: root {mu} has |Re| < 1e-12")]
    Splitting { lambda: Complex64, mu: Complex64 },
    #[error("degenerate end state: a = {a}, b = {b}")]
    Degenerate { a: f64, b: f64 },
}

/// Coefficients `(a±, b±, L)` of the limiting system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EndCoefficients {
    pub a: f64,
    pub b: f64,
    pub l: f64,
}

impl EndCoefficients {
    pub fn new(spec: &ModelSpec, side: Side) -> Self {
        let u = spec.end_state(side);
        EndCoefficients { a: spec.df(u), b: spec.dm(u), l: spec.l() }
    }

    pub fn lb(&self) -> f64 {
        self.l * self.b
    }
}

pub fn asymptotic_matrix(c: &EndCoefficients, lambda: Complex64) -> [[Complex64; 3]; 3] {
    let z = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    [
        [-(lambda + c.lb()) / c.a, z, one * (c.l / c.a)],
        [one * c.b, z, -one],
        [z, -one, z],
    ]
}

/// `π(μ) = μ³ + (λ + L b)/a μ² − μ − λ/a`.
pub fn char_poly(c: &EndCoefficients, lambda: Complex64, mu: Complex64) -> Complex64 {
    let p = (lambda + c.lb()) / c.a;
    ((mu + p) * mu - 1.0) * mu - lambda / c.a
}

/// Eigenvector `((1 − μ²)/b, −μ, 1)` of `A±(λ)` for the root `μ`.
pub fn eigenvector(c: &EndCoefficients, mu: Complex64) -> C3 {
    [(1.0 - mu * mu) / c.b, -mu, Complex64::new(1.0, 0.0)]
}

/// The three roots of the monic cubic `μ³ + p μ² + q μ + r` by Cardano's
/// formula, each polished by one Newton step.
pub fn cubic_roots(p: Complex64, q: Complex64, r: Complex64) -> [Complex64; 3] {
    let third = 1.0 / 3.0;
    // Depressed cubic t³ + s t + w with μ = t − p/3.
    let s = q - p * p * third;
    let w = 2.0 * p * p * p / 27.0 - p * q * third + r;
    let disc = (w * w * 0.25 + s * s * s / 27.0).sqrt();
    let c1 = -0.5 * w + disc;
    let c2 = -0.5 * w - disc;
    let c = if c1.norm() >= c2.norm() { c1 } else { c2 };
    let omega = Complex64::new(-0.5, 3f64.sqrt() * 0.5);
    let mut roots = [Complex64::new(0.0, 0.0); 3];
    if c.norm() == 0.0 {
        let t = (-w).powf(third);
        roots = [t, t * omega, t * omega * omega];
    } else {
        let u0 = c.powf(third);
        let mut uk = u0;
        for root in roots.iter_mut() {
            *root = uk - s / (3.0 * uk);
            uk *= omega;
        }
    }
    for root in roots.iter_mut() {
        *root -= p * third;
        let f = ((*root + p) * *root + q) * *root + r;
        let df = (3.0 * *root + 2.0 * p) * *root + q;
        if df.norm() > 0.0 {
            let step = f / df;
            if step.is_finite() {
                *root -= step;
            }
        }
    }
    roots
}

/// Roots of `π±` at `λ = 0` in label order.
pub fn roots_at_zero(c: &EndCoefficients, side: Side) -> ([f64; 3], f64, f64) {
    let k = c.lb() / c.a;
    let disc = (k * k + 4.0).sqrt();
    match side {
        Side::Plus => {
            let theta1 = 0.5 * (-k + disc);
            let theta3 = 0.5 * (k + disc);
            ([theta1, 0.0, -theta3], theta1, theta3)
        }
        Side::Minus => {
            let theta1 = 0.5 * (k + disc);
            let theta3 = 0.5 * (-k + disc);
            ([-theta1, 0.0, theta3], theta1, theta3)
        }
    }
}

/// Labeled roots and eigenvectors at one spectral parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSet {
    pub side: Side,
    pub lambda: Complex64,
    /// Index 0: fast mode 1, index 1: slow mode 2, index 2: fast mode 3.
    pub mu: [Complex64; 3],
    pub v: [C3; 3],
    pub theta1: f64,
    pub theta3: f64,
}

impl ModeSet {
    /// Max over the three pairs of `|A V − μ V|`.
    pub fn residual(&self, c: &EndCoefficients) -> f64 {
        let a = asymptotic_matrix(c, self.lambda);
        let mut worst = 0.0f64;
        for j in 0..3 {
            for (row, ar) in a.iter().enumerate() {
                let av: Complex64 = (0..3).map(|k| ar[k] * self.v[j][k]).sum();
                worst = worst.max((av - self.mu[j] * self.v[j][row]).norm());
            }
        }
        worst
    }
}

fn min_gap(r: &[Complex64; 3]) -> f64 {
    (r[0] - r[1]).norm().min((r[0] - r[2]).norm()).min((r[1] - r[2]).norm())
}

const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

/// Characteristic roots at `lambda`, labeled by continuation along the
/// straight path from `λ = 0`.
pub fn char_roots(spec: &ModelSpec, side: Side, lambda: Complex64) -> Result<ModeSet, SpectralError> {
    char_roots_from(&EndCoefficients::new(spec, side), side, lambda)
}

pub fn char_roots_from(
    c: &EndCoefficients,
    side: Side,
    lambda: Complex64,
) -> Result<ModeSet, SpectralError> {
    if c.a == 0.0 || c.b == 0.0 || !c.a.is_finite() || !c.b.is_finite() {
        return Err(SpectralError::Degenerate { a: c.a, b: c.b });
    }
    let (r0, theta1, theta3) = roots_at_zero(c, side);
    let mut cur = r0.map(|v| Complex64::new(v, 0.0));
    let roots_at = |lam: Complex64| {
        let p = (lam + c.lb()) / c.a;
        cubic_roots(p, Complex64::new(-1.0, 0.0), -lam / c.a)
    };
    let mut s = 0.0f64;
    let mut ds = 1.0f64;
    while s < 1.0 {
        let s_next = (s + ds).min(1.0);
        let cand = roots_at(lambda * s_next);
        let gap = min_gap(&cand);
        if gap < 1e-9 {
            return Err(SpectralError::Collision { lambda, gap });
        }
        let mut best = PERMS[0];
        let mut best_cost = f64::INFINITY;
        for perm in PERMS {
            let cost = (0..3).map(|j| (cand[perm[j]] - cur[j]).norm()).fold(0.0, f64::max);
            if cost < best_cost {
                best_cost = cost;
                best = perm;
            }
        }
        // Accept only moves that are small against the root separation.
        if best_cost > 0.3 * gap.min(min_gap(&cur)) && ds > 1e-9 {
            ds *= 0.5;
            continue;
        }
        cur = [cand[best[0]], cand[best[1]], cand[best[2]]];
        s = s_next;
        ds = (ds * 2.0).min(1.0);
    }
    if lambda == Complex64::new(0.0, 0.0) {
        cur = r0.map(|v| Complex64::new(v, 0.0));
    }
    Ok(ModeSet {
        side,
        lambda,
        mu: cur,
        v: cur.map(|m| eigenvector(c, m)),
        theta1,
        theta3,
    })
}

/// Numbers of roots with positive and negative real part.
pub fn splitting_dimensions(
    spec: &ModelSpec,
    side: Side,
    lambda: Complex64,
) -> Result<(usize, usize), SpectralError> {
    let c = EndCoefficients::new(spec, side);
    let p = (lambda + c.lb()) / c.a;
    let roots = cubic_roots(p, Complex64::new(-1.0, 0.0), -lambda / c.a);
    let mut n = (0, 0);
    for mu in roots {
        if mu.re.abs() < 1e-12 {
            return Err(SpectralError::Splitting { lambda, mu });
        }
        if mu.re > 0.0 {
            n.0 += 1;
        } else {
            n.1 += 1;
        }
    }
    Ok(n)
}

/// `λ±(ξ) = −i a ξ − L b ξ² / (1 + ξ²)`.
pub fn dispersion(c: &EndCoefficients, xi: f64) -> Complex64 {
    Complex64::new(-c.lb() * xi * xi / (1.0 + xi * xi), -c.a * xi)
}

/// Samples of both dispersion curves on a symmetric grid `|ξ| <= xi_max`.
pub fn dispersion_curves(spec: &ModelSpec, n: usize, xi_max: f64) -> Vec<(Side, f64, Complex64)> {
    let mut out = Vec::with_capacity(2 * n);
    for side in [Side::Minus, Side::Plus] {
        let c = EndCoefficients::new(spec, side);
        for i in 0..n {
            let xi = -xi_max + 2.0 * xi_max * i as f64 / (n.max(2) - 1) as f64;
            out.push((side, xi, dispersion(&c, xi)));
        }
    }
    out
}

/// Signed distance from `λ` to the curve `λ(ξ)` of one side: positive when
/// `λ` lies to the right of the curve.
pub fn curve_margin(c: &EndCoefficients, lambda: Complex64) -> f64 {
    // Minimize |λ − λ(ξ)| over ξ = tan θ by a coarse scan and golden refinement.
    let d = |theta: f64| (lambda - dispersion(c, theta.tan())).norm();
    let n = 4001;
    let lim = std::f64::consts::FRAC_PI_2 * (1.0 - 1e-9);
    let mut best = (0.0, d(0.0));
    for i in 0..n {
        let th = -lim + 2.0 * lim * i as f64 / (n - 1) as f64;
        let v = d(th);
        if v < best.1 {
            best = (th, v);
        }
    }
    let step = 2.0 * lim / (n - 1) as f64;
    let (mut lo, mut hi) = ((best.0 - step).max(-lim), (best.0 + step).min(lim));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let m1 = hi - g * (hi - lo);
        let m2 = lo + g * (hi - lo);
        if d(m1) < d(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let dist = d(0.5 * (lo + hi)).min(best.1);
    let xi = -lambda.im / c.a;
    let re_curve = dispersion(c, xi).re;
    if lambda.re >= re_curve {
        dist
    } else {
        -dist
    }
}

/// Minimum of the signed margins to both dispersion curves.
pub fn essential_spectrum_margin(spec: &ModelSpec, lambda: Complex64) -> f64 {
    [Side::Minus, Side::Plus]
        .iter()
        .map(|&s| curve_margin(&EndCoefficients::new(spec, s), lambda))
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn cubic_roots_reconstruct_polynomial() {
        let p = cx(0.3, -1.2);
        let q = cx(-1.0, 0.5);
        let r = cx(2.0, 0.1);
        for mu in cubic_roots(p, q, r) {
            let v = ((mu + p) * mu + q) * mu + r;
            assert!(v.norm() < 1e-13, "{v}");
        }
        // Triple root.
        let roots = cubic_roots(cx(-3.0, 0.0), cx(3.0, 0.0), cx(-1.0, 0.0));
        for mu in roots {
            assert!((mu - 1.0).norm() < 1e-4);
        }
    }

    #[test]
    fn theta_closed_forms_for_burgers() {
        let spec = ModelSpec::burgers_linear(0.2);
        let plus = char_roots(&spec, Side::Plus, cx(0.0, 0.0)).unwrap();
        let t1 = 0.5 * (5.0 + 29f64.sqrt());
        let t3 = 0.5 * (-5.0 + 29f64.sqrt());
        assert!((plus.theta1 - t1).abs() < 1e-14 && (plus.theta3 - t3).abs() < 1e-14);
        assert_eq!(plus.mu[1], cx(0.0, 0.0));
        assert!((plus.mu[0].re - t1).abs() < 1e-14);
        assert!((plus.mu[2].re + t3).abs() < 1e-14);
        let minus = char_roots(&spec, Side::Minus, cx(0.0, 0.0)).unwrap();
        assert!((minus.mu[0].re + t1).abs() < 1e-14);
        assert!((minus.mu[2].re - t3).abs() < 1e-14);
    }

    #[test]
    fn slow_root_first_order_expansion() {
        let spec = ModelSpec::burgers_linear(0.2);
        let ms = char_roots(&spec, Side::Minus, cx(1e-4, 0.0)).unwrap();
        // mu_2 = -lambda/a + (Lb/a)(lambda/a)^2 + O(lambda^3) with a_- = 0.2.
        let expect = -5e-4 + 5.0 * 2.5e-7;
        assert!((ms.mu[1].re - expect).abs() < 1e-8, "{}", ms.mu[1]);
        assert!(ms.mu[1].im.abs() < 1e-14);
    }

    #[test]
    fn splitting_dimensions_on_right_half_plane() {
        let spec = ModelSpec::burgers_cubic_m(0.2);
        for lam in [cx(1.0, 0.0), cx(0.1, 3.0), cx(1e-3, -0.5)] {
            assert_eq!(splitting_dimensions(&spec, Side::Plus, lam).unwrap(), (2, 1));
            assert_eq!(splitting_dimensions(&spec, Side::Minus, lam).unwrap(), (1, 2));
        }
    }

    #[test]
    fn splitting_fails_on_dispersion_curve() {
        let spec = ModelSpec::burgers_linear(0.2);
        let c = EndCoefficients::new(&spec, Side::Plus);
        let lam = dispersion(&c, 0.7);
        assert!(matches!(
            splitting_dimensions(&spec, Side::Plus, lam),
            Err(SpectralError::Splitting { .. })
        ));
    }

    #[test]
    fn margins() {
        let spec = ModelSpec::burgers_linear(0.2);
        assert!(essential_spectrum_margin(&spec, cx(1.0, 0.0)) > 0.0);
        assert_eq!(essential_spectrum_margin(&spec, cx(0.0, 0.0)), 0.0);
        assert!(essential_spectrum_margin(&spec, cx(-1.0, 0.0)) < 0.0);
    }
}
