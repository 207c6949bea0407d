//! Direct discrete solves of the resolvent system
//!
//! ```text
//! λ u + (a u)' + L q' = φ,   -q'' + q + (b u)' = ψ,
//! ```
//!
//! used to study how `|u|` scales with `|λ|` along the imaginary axis.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::EvansError;
use crate::linalg::{solve_tridiagonal, BandMatrix};
use crate::profile::Profile;

/// Uniform grid on `[-x_dom, x_dom]` with `n` interior nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolventGrid {
    pub x_dom: f64,
    pub n: usize,
}

impl ResolventGrid {
    pub fn h(&self) -> f64 {
        2.0 * self.x_dom / (self.n + 1) as f64
    }
    pub fn x(&self, i: usize) -> f64 {
        -self.x_dom + (i + 1) as f64 * self.h()
    }
    pub fn xs(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolventResult {
    pub lambda: Complex64,
    pub u: Vec<Complex64>,
    pub q: Vec<Complex64>,
    pub u_l2: f64,
    pub u_h1: f64,
    pub q_l2: f64,
    /// `|φ|_{H¹} + |ψ|_{L²}`.
    pub source_norm: f64,
    /// `|u|_{L²} |λ|^{1/2} / (|φ|_{H¹} + |ψ|_{L²})`.
    pub ratio: f64,
    /// Max-norm residual of the discrete system relative to the source.
    pub residual: f64,
}

fn l2(v: &[Complex64], h: f64) -> f64 {
    (v.iter().map(|z| z.norm_sqr()).sum::<f64>() * h).sqrt()
}

fn h1(v: &[Complex64], h: f64) -> f64 {
    let n = v.len();
    let mut d2 = 0.0;
    for i in 0..=n {
        let a = if i == 0 { Complex64::new(0.0, 0.0) } else { v[i - 1] };
        let b = if i == n { Complex64::new(0.0, 0.0) } else { v[i] };
        d2 += ((b - a) / h).norm_sqr();
    }
    (l2(v, h).powi(2) + d2 * h).sqrt()
}

fn assemble(a: &[f64], b: &[f64], l: f64, h: f64, lambda: Complex64) -> BandMatrix {
    let n = a.len();
    let mut m = BandMatrix::zeros(2 * n, 4, 4);
    let c = |v: f64| Complex64::new(v, 0.0);
    let ui = |i: usize| 2 * i;
    let qi = |i: usize| 2 * i + 1;
    for i in 0..n {
        let r = ui(i);
        m.add(r, ui(i), lambda);
        // (a u)' upwinded by the sign of a at the node.
        let k = 1.0 / (2.0 * h);
        if a[i] >= 0.0 {
            m.add(r, ui(i), c(3.0 * k * a[i]));
            if i >= 1 {
                m.add(r, ui(i - 1), c(-4.0 * k * a[i - 1]));
            }
            if i >= 2 {
                m.add(r, ui(i - 2), c(k * a[i - 2]));
            }
        } else {
            m.add(r, ui(i), c(-3.0 * k * a[i]));
            if i + 1 < n {
                m.add(r, ui(i + 1), c(4.0 * k * a[i + 1]));
            }
            if i + 2 < n {
                m.add(r, ui(i + 2), c(-k * a[i + 2]));
            }
        }
        if i + 1 < n {
            m.add(r, qi(i + 1), c(l * k));
        }
        if i >= 1 {
            m.add(r, qi(i - 1), c(-l * k));
        }

        let r = qi(i);
        m.add(r, qi(i), c(1.0 + 2.0 / (h * h)));
        if i + 1 < n {
            m.add(r, qi(i + 1), c(-1.0 / (h * h)));
            m.add(r, ui(i + 1), c(b[i + 1] * k));
        }
        if i >= 1 {
            m.add(r, qi(i - 1), c(-1.0 / (h * h)));
            m.add(r, ui(i - 1), c(-b[i - 1] * k));
        }
    }
    m
}

/// Solves the discrete resolvent system for sources sampled on `grid`.
pub fn resolvent_probe(
    profile: &Profile,
    lambda: Complex64,
    phi: &[Complex64],
    psi: &[Complex64],
    grid: &ResolventGrid,
) -> Result<ResolventResult, EvansError> {
    let n = grid.n;
    if phi.len() != n || psi.len() != n {
        return Err(EvansError::Oracle("source length does not match the grid".into()));
    }
    let h = grid.h();
    let (a, b): (Vec<f64>, Vec<f64>) = grid
        .xs()
        .iter()
        .map(|&x| {
            let pt = profile.eval(x);
            (pt.a, pt.b)
        })
        .unzip();
    let l = profile.spec().l();
    let m = assemble(&a, &b, l, h, lambda);
    let mut rhs = vec![Complex64::new(0.0, 0.0); 2 * n];
    for i in 0..n {
        rhs[2 * i] = phi[i];
        rhs[2 * i + 1] = psi[i];
    }
    let sol = m
        .clone()
        .solve(&rhs)
        .ok_or_else(|| EvansError::Oracle(format!("singular resolvent system at lambda = {lambda}")))?;
    let back = m.mul_vec(&sol);
    let rmax = rhs.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let residual = back
        .iter()
        .zip(&rhs)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
        / rmax.max(f64::MIN_POSITIVE);
    if !residual.is_finite() || residual > 1e-6 {
        return Err(EvansError::Oracle(format!(
            "ill-conditioned resolvent solve at lambda = {lambda}: residual {residual:e}"
        )));
    }
    let u: Vec<Complex64> = sol.iter().step_by(2).copied().collect();
    let q: Vec<Complex64> = sol.iter().skip(1).step_by(2).copied().collect();
    let u_l2 = l2(&u, h);
    let source_norm = h1(phi, h) + l2(psi, h);
    let ratio = if source_norm > 0.0 { u_l2 * lambda.norm().sqrt() / source_norm } else { 0.0 };
    Ok(ResolventResult {
        lambda,
        u_h1: h1(&u, h),
        q_l2: l2(&q, h),
        u_l2,
        source_norm,
        ratio,
        residual,
        u,
        q,
    })
}

/// Gaussian `amp · exp(-((x - center)/width)²)` sampled on the grid.
pub fn gaussian(grid: &ResolventGrid, center: f64, width: f64, amp: f64) -> Vec<Complex64> {
    grid.xs()
        .iter()
        .map(|&x| Complex64::new(amp * (-((x - center) / width).powi(2)).exp(), 0.0))
        .collect()
}

/// Ratios `|u| |λ|^{1/2} / (|φ|_{H¹} + |ψ|_{L²})` at `λ = i τ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HighFrequencyScan {
    pub taus: Vec<f64>,
    pub ratios: Vec<f64>,
    pub u_l2: Vec<f64>,
    /// `max / min` of the ratios.
    pub spread: f64,
}

pub fn high_frequency_scan(
    profile: &Profile,
    taus: &[f64],
    phi: &[Complex64],
    psi: &[Complex64],
    grid: &ResolventGrid,
) -> Result<HighFrequencyScan, EvansError> {
    let mut ratios = Vec::with_capacity(taus.len());
    let mut u_l2 = Vec::with_capacity(taus.len());
    for &t in taus {
        let r = resolvent_probe(profile, Complex64::new(0.0, t), phi, psi, grid)?;
        ratios.push(r.ratio);
        u_l2.push(r.u_l2);
    }
    let max = ratios.iter().copied().fold(0.0, f64::max);
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(HighFrequencyScan { taus: taus.to_vec(), ratios, u_l2, spread: max / min })
}

/// The assembled discrete system at one `λ`, reused across solves.
#[derive(Debug, Clone)]
pub struct ResolventSystem {
    pub lambda: Complex64,
    pub grid: ResolventGrid,
    m: BandMatrix,
    mh: BandMatrix,
}

/// Largest gains of the two source channels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorstCase {
    pub lambda: Complex64,
    /// `sup |u|_{L²} / |φ|_{H¹}` with `ψ = 0`.
    pub gain_phi: f64,
    /// `sup |u|_{L²} / |ψ|_{L²}` with `φ = 0`.
    pub gain_psi: f64,
    /// `|λ|^{1/2} max(gain_phi, gain_psi)`, the supremum of the ratio over
    /// all sources.
    pub ratio: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl ResolventSystem {
    pub fn new(profile: &Profile, lambda: Complex64, grid: &ResolventGrid) -> Self {
        let h = grid.h();
        let (a, b): (Vec<f64>, Vec<f64>) = grid
            .xs()
            .iter()
            .map(|&x| {
                let pt = profile.eval(x);
                (pt.a, pt.b)
            })
            .unzip();
        let m = assemble(&a, &b, profile.spec().l(), h, lambda);
        let mh = m.conj_transpose();
        ResolventSystem { lambda, grid: *grid, m, mh }
    }

    fn solve_with(m: &BandMatrix, rhs: &[Complex64]) -> Result<Vec<Complex64>, EvansError> {
        m.clone().solve(rhs).ok_or_else(|| EvansError::Oracle("singular resolvent system".into()))
    }

    /// `u` for sources `(φ, ψ)`.
    pub fn solve_u(&self, phi: &[Complex64], psi: &[Complex64]) -> Result<Vec<Complex64>, EvansError> {
        let rhs = interleave(phi, psi);
        Ok(Self::solve_with(&self.m, &rhs)?.into_iter().step_by(2).collect())
    }

    /// Adjoint map: `u`-weights back to the `(φ, ψ)` channels.
    fn adjoint(&self, v: &[Complex64]) -> Result<(Vec<Complex64>, Vec<Complex64>), EvansError> {
        let zero = vec![Complex64::new(0.0, 0.0); v.len()];
        let y = Self::solve_with(&self.mh, &interleave(v, &zero))?;
        Ok((y.iter().step_by(2).copied().collect(), y.iter().skip(1).step_by(2).copied().collect()))
    }

    /// Power iteration for the largest gain of each source channel.
    pub fn worst_case(&self, max_iter: usize, tol: f64) -> Result<WorstCase, EvansError> {
        let n = self.grid.n;
        let h = self.grid.h();
        let zero = vec![Complex64::new(0.0, 0.0); n];
        // H¹ Gram matrix h (I + T / h²), T = tridiag(-1, 2, -1).
        let off = vec![Complex64::new(-1.0 / h, 0.0); n];
        let diag = vec![Complex64::new(h + 2.0 / h, 0.0); n];
        let gram = |v: &[Complex64]| -> f64 {
            let mut s = 0.0;
            for i in 0..n {
                let mut gv = diag[i] * v[i];
                if i > 0 {
                    gv += off[i] * v[i - 1];
                }
                if i + 1 < n {
                    gv += off[i] * v[i + 1];
                }
                s += (v[i].conj() * gv).re;
            }
            s
        };
        let start: Vec<Complex64> = self
            .grid
            .xs()
            .iter()
            .enumerate()
            .map(|(i, &x)| Complex64::new((-x * x / 4.0).exp() + 0.1 * (0.37 * i as f64).sin(), 0.05 * (1.3 * x).cos()))
            .collect();

        let mut iterations = 0;
        let mut converged = true;

        let mut phi = start.clone();
        let mut rho_phi = 0.0;
        let mut done = false;
        for _ in 0..max_iter {
            iterations += 1;
            let g = gram(&phi).sqrt();
            phi.iter_mut().for_each(|z| *z /= g);
            let u = self.solve_u(&phi, &zero)?;
            let rho = l2(&u, h).powi(2);
            let hu: Vec<Complex64> = u.iter().map(|z| z * h).collect();
            let (w, _) = self.adjoint(&hu)?;
            phi = solve_tridiagonal(&off, &diag, &off, &w);
            if (rho - rho_phi).abs() <= tol * rho {
                rho_phi = rho;
                done = true;
                break;
            }
            rho_phi = rho;
        }
        converged &= done;

        let mut psi = start;
        let mut rho_psi = 0.0;
        done = false;
        for _ in 0..max_iter {
            iterations += 1;
            let g = l2(&psi, 1.0);
            psi.iter_mut().for_each(|z| *z /= g);
            let u = self.solve_u(&zero, &psi)?;
            let rho = l2(&u, 1.0).powi(2);
            let (_, w) = self.adjoint(&u)?;
            psi = w;
            if (rho - rho_psi).abs() <= tol * rho {
                rho_psi = rho;
                done = true;
                break;
            }
            rho_psi = rho;
        }
        converged &= done;

        let (gain_phi, gain_psi) = (rho_phi.sqrt(), rho_psi.sqrt());
        Ok(WorstCase {
            lambda: self.lambda,
            gain_phi,
            gain_psi,
            ratio: self.lambda.norm().sqrt() * gain_phi.max(gain_psi),
            iterations,
            converged,
        })
    }
}

fn interleave(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter().zip(b).flat_map(|(x, y)| [*x, *y]).collect()
}
