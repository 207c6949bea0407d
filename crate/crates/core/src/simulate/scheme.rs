//! Finite-volume discretization of
//!
//! ```text
//! u_t + f(u)_x + L q_x = 0,   -q_xx + q + M(u)_x = 0
//! ```
//!
//! MUSCL reconstruction with minmod slopes, local Lax-Friedrichs fluxes,
//! a centered `L q_x` source and SSP-RK2 in time. The elliptic equation is
//! solved with centered differences and `q = 0` beyond the domain.

use serde::{Deserialize, Serialize};

use super::SimError;
use crate::linalg::solve_tridiagonal;
use crate::model::ModelSpec;

/// Uniform cells of width `h` covering `[-x_dom, x_dom]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x_dom: f64,
    pub n: usize,
    pub h: f64,
}

impl Grid {
    /// Grid with spacing as close to `h` as divides the domain evenly.
    pub fn new(x_dom: f64, h: f64) -> Self {
        let n = ((2.0 * x_dom / h).round() as usize).max(4);
        Grid { x_dom, n, h: 2.0 * x_dom / n as f64 }
    }

    /// Cell centre `i`.
    pub fn x(&self, i: usize) -> f64 {
        -self.x_dom + (i as f64 + 0.5) * self.h
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }
}

/// Boundary treatment at one end of the domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Boundary {
    /// Ghost cells hold this state.
    Inflow(f64),
    /// Ghost cells copy the boundary cell.
    Outflow,
}

#[derive(Debug, Clone)]
pub struct Scheme {
    pub spec: ModelSpec,
    pub grid: Grid,
    pub left: Boundary,
    pub right: Boundary,
}

fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

impl Scheme {
    /// Inflow where the characteristic at the end state enters the domain,
    /// outflow otherwise.
    pub fn new(spec: &ModelSpec, grid: Grid) -> Self {
        let (um, up) = (spec.u_minus(), spec.u_plus());
        let left = if spec.df(um) > 0.0 { Boundary::Inflow(um) } else { Boundary::Outflow };
        let right = if spec.df(up) < 0.0 { Boundary::Inflow(up) } else { Boundary::Outflow };
        Scheme { spec: spec.clone(), grid, left, right }
    }

    /// `u` with two ghost cells on each side.
    fn padded(&self, u: &[f64]) -> Vec<f64> {
        let n = u.len();
        let gl = match self.left {
            Boundary::Inflow(v) => [v, v],
            Boundary::Outflow => [u[0], u[0]],
        };
        let gr = match self.right {
            Boundary::Inflow(v) => [v, v],
            Boundary::Outflow => [u[n - 1], u[n - 1]],
        };
        let mut p = Vec::with_capacity(n + 4);
        p.extend_from_slice(&gl);
        p.extend_from_slice(u);
        p.extend_from_slice(&gr);
        p
    }

    /// Solves `(-∂² + 1) q = -M(u)_x` with `q = 0` outside the domain.
    pub fn elliptic_solve(&self, u: &[f64]) -> Vec<f64> {
        let n = u.len();
        let h = self.grid.h;
        let p = self.padded(u);
        let m: Vec<f64> = p.iter().map(|&v| self.spec.m(v)).collect();
        let rhs: Vec<f64> = (0..n).map(|i| -(m[i + 3] - m[i + 1]) / (2.0 * h)).collect();
        let off = vec![-1.0 / (h * h); n];
        let diag = vec![1.0 + 2.0 / (h * h); n];
        solve_tridiagonal(&off, &diag, &off, &rhs)
    }

    /// Max-norm residual of the discrete elliptic equation.
    pub fn elliptic_residual(&self, u: &[f64], q: &[f64]) -> f64 {
        let n = u.len();
        let h = self.grid.h;
        let p = self.padded(u);
        let mut r = 0.0f64;
        for i in 0..n {
            let qm = if i > 0 { q[i - 1] } else { 0.0 };
            let qp = if i + 1 < n { q[i + 1] } else { 0.0 };
            let lhs = -(qp - 2.0 * q[i] + qm) / (h * h) + q[i];
            let src = -(self.spec.m(p[i + 3]) - self.spec.m(p[i + 1])) / (2.0 * h);
            r = r.max((lhs - src).abs());
        }
        r
    }

    /// Interface fluxes `F_{i-1/2}` for `i = 0..=n`.
    fn fluxes(&self, u: &[f64]) -> Vec<f64> {
        let n = u.len();
        let p = self.padded(u);
        // Slopes for padded cells 1..=n+2.
        let slope: Vec<f64> = (0..n + 4)
            .map(|j| if j == 0 || j == n + 3 { 0.0 } else { minmod(p[j] - p[j - 1], p[j + 1] - p[j]) })
            .collect();
        (0..=n)
            .map(|k| {
                // Interface between padded cells k+1 and k+2.
                let (jl, jr) = (k + 1, k + 2);
                let ul = p[jl] + 0.5 * slope[jl];
                let ur = p[jr] - 0.5 * slope[jr];
                let s = self.spec.df(ul).abs().max(self.spec.df(ur).abs());
                0.5 * (self.spec.f(ul) + self.spec.f(ur)) - 0.5 * s * (ur - ul)
            })
            .collect()
    }

    /// `du/dt`, the `q` used to form it, and the net boundary outflow
    /// `F_{n-1/2} - F_{-1/2} + L (q_{n-1} - q_0) / 2`, so that
    /// `d/dt Σ u h = -outflow`.
    pub fn rhs(&self, u: &[f64]) -> (Vec<f64>, Vec<f64>, f64) {
        let n = u.len();
        let h = self.grid.h;
        let q = self.elliptic_solve(u);
        let flux = self.fluxes(u);
        let l = self.spec.l();
        let du = (0..n)
            .map(|i| {
                let qm = if i > 0 { q[i - 1] } else { 0.0 };
                let qp = if i + 1 < n { q[i + 1] } else { 0.0 };
                -(flux[i + 1] - flux[i]) / h - l * (qp - qm) / (2.0 * h)
            })
            .collect();
        let outflow = flux[n] - flux[0] + 0.5 * l * (q[n - 1] - q[0]);
        (du, q, outflow)
    }

    /// Largest admissible step for Courant number `cfl`.
    pub fn max_dt(&self, u: &[f64], cfl: f64) -> f64 {
        let smax = u.iter().fold(0.0f64, |m, &v| m.max(self.spec.df(v).abs()));
        let smax = match (self.left, self.right) {
            (Boundary::Inflow(a), Boundary::Inflow(b)) => smax.max(self.spec.df(a).abs()).max(self.spec.df(b).abs()),
            _ => smax,
        };
        cfl * self.grid.h / smax.max(f64::MIN_POSITIVE)
    }

    /// One SSP-RK2 step. Rejects `dt` above the CFL limit for Courant number
    /// `cfl` (which must not exceed 0.45). A negative `dt` runs the same
    /// update backwards in time.
    pub fn step(&self, u: &[f64], dt: f64, cfl: f64) -> Result<Vec<f64>, SimError> {
        Ok(self.step_with_outflow(u, dt, cfl)?.0)
    }

    /// As [`step`](Self::step), also returning the time-integrated boundary
    /// outflow of the step.
    pub fn step_with_outflow(&self, u: &[f64], dt: f64, cfl: f64) -> Result<(Vec<f64>, f64), SimError> {
        if cfl > 0.45 || cfl <= 0.0 {
            return Err(SimError::Config(format!("Courant number {cfl} outside (0, 0.45]")));
        }
        let max = self.max_dt(u, cfl);
        if dt.abs() > max * (1.0 + 1e-12) {
            return Err(SimError::Cfl { dt, max });
        }
        let (k1, _, o1) = self.rhs(u);
        let u1: Vec<f64> = u.iter().zip(&k1).map(|(a, k)| a + dt * k).collect();
        let (k2, _, o2) = self.rhs(&u1);
        let next = u.iter().zip(u1.iter().zip(&k2)).map(|(a, (b, k))| 0.5 * a + 0.5 * (b + dt * k)).collect();
        Ok((next, 0.5 * dt * (o1 + o2)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minmod_limits_extrema() {
        assert_eq!(minmod(1.0, -2.0), 0.0);
        assert_eq!(minmod(1.0, 2.0), 1.0);
        assert_eq!(minmod(-3.0, -2.0), -2.0);
    }

    #[test]
    fn constant_state_gives_zero_q() {
        let spec = ModelSpec::burgers_linear(0.2);
        let mut s = Scheme::new(&spec, Grid::new(10.0, 0.1));
        s.left = Boundary::Inflow(0.3);
        s.right = Boundary::Inflow(0.3);
        let u = vec![0.3; s.grid.n];
        assert!(s.elliptic_solve(&u).iter().all(|&q| q == 0.0));
        assert!(s.rhs(&u).0.iter().all(|&d| d.abs() < 1e-15));
    }

    #[test]
    fn helmholtz_solution_of_sine() {
        // -q'' + q = -cos x has q = -cos(x)/2; the interior is insensitive to
        // the truncation.
        let spec = ModelSpec::burgers_linear(0.2);
        let err = |h: f64| {
            let mut s = Scheme::new(&spec, Grid::new(60.0, h));
            s.left = Boundary::Outflow;
            s.right = Boundary::Outflow;
            let xs = s.grid.xs();
            let u: Vec<f64> = xs.iter().map(|x| x.sin()).collect();
            let q = s.elliptic_solve(&u);
            assert!(s.elliptic_residual(&u, &q) < 1e-10);
            xs.iter()
                .zip(&q)
                .filter(|(x, _)| x.abs() < 20.0)
                .map(|(x, q)| (q + 0.5 * x.cos()).abs())
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(0.02), err(0.01));
        assert!(e1 < 1e-4, "e1 {e1}");
        let ratio = e1 / e2;
        assert!(ratio > 3.8 && ratio < 4.2, "ratio {ratio}");
    }

    #[test]
    fn cfl_violation_reports_admissible_step() {
        let spec = ModelSpec::burgers_linear(0.2);
        let s = Scheme::new(&spec, Grid::new(10.0, 0.1));
        let u = vec![0.2; s.grid.n];
        let err = s.step(&u, 1.0, 0.45).unwrap_err();
        match err {
            SimError::Cfl { max, .. } => assert!((max - 0.45 * s.grid.h / 0.2).abs() < 1e-14),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(s.step(&u, 0.01, 0.9), Err(SimError::Config(_))));
    }
}
