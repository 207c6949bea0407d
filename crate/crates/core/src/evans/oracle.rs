//! Independent eigenvalue count from a finite-difference discretization of
//! the eigenvalue problem in integrated coordinates,
//!
//! ```text
//! λ u + a(x) u' + L q' = 0,   -q'' + q + b(x) u' = 0,
//! ```
//!
//! on a truncated uniform grid with `u = q = 0` outside it.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::EvansError;
use crate::linalg::solve_tridiagonal;
use crate::model::{ModelSpec, Side};
use crate::profile::Profile;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleOptions {
    pub n: usize,
    /// Domain half-width is where `|U - u±| < tail_tol |u- - u+|`.
    pub tail_tol: f64,
    /// Eigenvalues with `Re λ` above this count as unstable.
    pub re_threshold: f64,
    /// Eigenvalues closer than this to the origin are reported separately.
    pub origin_radius: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions { n: 2000, tail_tol: 1e-6, re_threshold: 1e-3, origin_radius: 5e-2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub n: usize,
    pub x_dom: f64,
    pub h: f64,
    pub eigenvalues: Vec<Complex64>,
    /// Eigenvalues with `Re λ > re_threshold` away from the origin.
    pub unstable: Vec<Complex64>,
    /// Eigenvalues within `origin_radius` of `0`.
    pub near_origin: Vec<Complex64>,
    pub max_re: f64,
}

impl OracleResult {
    /// Eigenvalues strictly inside the rectangle `[re0, re1] × [im0, im1]`.
    pub fn count_in(&self, re0: f64, re1: f64, im0: f64, im1: f64) -> usize {
        self.eigenvalues
            .iter()
            .filter(|z| z.re > re0 && z.re < re1 && z.im > im0 && z.im < im1)
            .count()
    }
}

/// Adds row `i` of `-a u'`, second-order upwind with zero ghost values.
fn upwind_row(m: &mut DMatrix<f64>, i: usize, a: f64, h: f64) {
    let n = m.nrows();
    let c = -a / (2.0 * h);
    let mut put = |j: isize, v: f64| {
        if j >= 0 && (j as usize) < n {
            m[(i, j as usize)] += v;
        }
    };
    let i = i as isize;
    if a >= 0.0 {
        put(i, 3.0 * c);
        put(i - 1, -4.0 * c);
        put(i - 2, c);
    } else {
        put(i, -3.0 * c);
        put(i + 1, 4.0 * c);
        put(i + 2, -c);
    }
}

/// Assembles `A` with `λ u = A u` for coefficient samples on a uniform grid.
pub fn integrated_operator(a: &[f64], b: &[f64], l: f64, h: f64) -> DMatrix<f64> {
    let n = a.len();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for (i, &ai) in a.iter().enumerate() {
        upwind_row(&mut m, i, ai, h);
    }
    // q = -(1 - D2)^{-1} (b Dc u); the u-equation gets -L Dc q.
    let off = vec![-1.0 / (h * h); n];
    let diag = vec![1.0 + 2.0 / (h * h); n];
    let mut kb = DMatrix::<f64>::zeros(n, n);
    let mut col = vec![0.0; n];
    for j in 0..n {
        col.iter_mut().for_each(|v| *v = 0.0);
        // Column j of b Dc: rows j-1 and j+1.
        if j >= 1 {
            col[j - 1] = b[j - 1] / (2.0 * h);
        }
        if j + 1 < n {
            col[j + 1] = -b[j + 1] / (2.0 * h);
        }
        let x = solve_tridiagonal(&off, &diag, &off, &col);
        for i in 0..n {
            // Dc of x at row i, times +L (two sign flips).
            let xp = if i + 1 < n { x[i + 1] } else { 0.0 };
            let xm = if i >= 1 { x[i - 1] } else { 0.0 };
            kb[(i, j)] = l * (xp - xm) / (2.0 * h);
        }
    }
    m + kb
}

/// Full spectrum of the discretized integrated-coordinate operator.
pub fn integrated_eigen_oracle(profile: &Profile, opts: &OracleOptions) -> Result<OracleResult, EvansError> {
    if opts.n < 16 {
        return Err(EvansError::Oracle(format!("grid of {} points is too small", opts.n)));
    }
    let spec = profile.spec();
    let scale = (spec.u_minus() - spec.u_plus()).abs();
    let x_dom = profile.x_infinity(opts.tail_tol * scale);
    let n = opts.n;
    let h = 2.0 * x_dom / (n + 1) as f64;
    let xs: Vec<f64> = (1..=n).map(|k| -x_dom + k as f64 * h).collect();
    let (a, b): (Vec<f64>, Vec<f64>) = xs
        .iter()
        .map(|&x| {
            let pt = profile.eval(x);
            (pt.a, pt.b)
        })
        .unzip();
    let m = integrated_operator(&a, &b, spec.l(), h);
    let eigenvalues: Vec<Complex64> = m.complex_eigenvalues().iter().copied().collect();
    if eigenvalues.iter().any(|z| !z.is_finite()) {
        return Err(EvansError::Oracle("non-finite eigenvalue".into()));
    }
    Ok(classify(eigenvalues, n, x_dom, h, opts))
}

fn classify(mut eigenvalues: Vec<Complex64>, n: usize, x_dom: f64, h: f64, opts: &OracleOptions) -> OracleResult {
    eigenvalues.sort_by(|p, q| q.re.total_cmp(&p.re).then(p.im.total_cmp(&q.im)));
    let near_origin: Vec<Complex64> =
        eigenvalues.iter().copied().filter(|z| z.norm() < opts.origin_radius).collect();
    let unstable = eigenvalues
        .iter()
        .copied()
        .filter(|z| z.re > opts.re_threshold && z.norm() >= opts.origin_radius)
        .collect();
    let max_re = eigenvalues.first().map(|z| z.re).unwrap_or(f64::NEG_INFINITY);
    OracleResult { n, x_dom, h, eigenvalues, unstable, near_origin, max_re }
}

/// Spectrum of the same discretization with coefficients frozen at `u±` on
/// a periodic grid of `n` points and length `period`, paired with the
/// continuous dispersion value at the same wavenumber.
pub fn frozen_periodic_spectrum(spec: &ModelSpec, side: Side, n: usize, period: f64) -> Vec<(f64, Complex64, Complex64)> {
    let u = spec.end_state(side);
    let (a, b, l) = (spec.df(u), spec.dm(u), spec.l());
    let h = period / n as f64;
    (0..n)
        .map(|k| {
            let k = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
            let xi = 2.0 * std::f64::consts::PI * k / period;
            let th = xi * h;
            let e = |m: f64| Complex64::from_polar(1.0, m * th);
            // Symbols of upwind D, centered D and D2 on e^{i xi x}.
            let up = if a >= 0.0 {
                (e(0.0) * 3.0 - e(-1.0) * 4.0 + e(-2.0)) / (2.0 * h)
            } else {
                (-e(0.0) * 3.0 + e(1.0) * 4.0 - e(2.0)) / (2.0 * h)
            };
            let dc = (e(1.0) - e(-1.0)) / (2.0 * h);
            let d2 = (e(1.0) - 2.0 + e(-1.0)) / (h * h);
            let discrete = -a * up + l * b * dc * dc / (1.0 - d2);
            let continuous = Complex64::new(-l * b * xi * xi / (1.0 + xi * xi), -a * xi);
            (xi, discrete, continuous)
        })
        .collect()
}
