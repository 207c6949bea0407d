//! Model definition for the stationary radiating-gas system
//! `u_t + f(u)_x + L q_x = 0`, `-q_xx + q + M(u)_x = 0`, and the structural
//! checks performed before any profile or spectral work.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::series;

/// Number of uniformly spaced points used by the assumption checks.
pub const CHECK_GRID: usize = 256;
/// Rankine-Hugoniot tolerance, relative to `max |f|` on the check grid.
pub const TOL_RH: f64 = 1e-12;

/// Which end state a quantity refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        }
    }
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Side::Plus => "plus",
            Side::Minus => "minus",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("non-finite {what} at u = {u}")]
    NonFinite { what: &'static str, u: f64 },
    #[error("flux derivative has no sign change on [{lo}, {hi}]")]
    NoSonicPoint { lo: f64, hi: f64 },
    #[error("unknown model preset `{0}`")]
    UnknownPreset(String),
    #[error("invalid model: {0}")]
    Invalid(String),
}

/// Polynomial `c[0] + c[1] u + c[2] u^2 + ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Poly {
    coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(coeffs: Vec<f64>) -> Self {
        let mut coeffs = coeffs;
        while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Poly { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn eval(&self, u: f64) -> f64 {
        series::eval(&self.coeffs, u)
    }

    pub fn derivative(&self) -> Poly {
        let d = series::derivative(&self.coeffs);
        Poly::new(if d.is_empty() { vec![0.0] } else { d })
    }
}

/// A scalar radiating-gas model with polynomial fluxes, stationary (`s = 0`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "ModelDef", try_from = "ModelDef")]
pub struct ModelSpec {
    name: String,
    f: Poly,
    m: Poly,
    l: f64,
    u_minus: f64,
    u_plus: f64,
    df: Poly,
    d2f: Poly,
    d3f: Poly,
    dm: Poly,
    d2m: Poly,
}

/// Serialized form of a [`ModelSpec`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelDef {
    pub name: String,
    pub f: Vec<f64>,
    pub m: Vec<f64>,
    pub l: f64,
    pub u_minus: f64,
    pub u_plus: f64,
}

impl From<ModelSpec> for ModelDef {
    fn from(s: ModelSpec) -> Self {
        ModelDef {
            name: s.name,
            f: s.f.coeffs,
            m: s.m.coeffs,
            l: s.l,
            u_minus: s.u_minus,
            u_plus: s.u_plus,
        }
    }
}

impl TryFrom<ModelDef> for ModelSpec {
    type Error = ModelError;
    fn try_from(d: ModelDef) -> Result<Self, ModelError> {
        ModelSpec::new(d.name, d.f, d.m, d.l, d.u_minus, d.u_plus)
    }
}

impl ModelSpec {
    pub fn new(
        name: impl Into<String>,
        f: Vec<f64>,
        m: Vec<f64>,
        l: f64,
        u_minus: f64,
        u_plus: f64,
    ) -> Result<Self, ModelError> {
        for (what, v) in [("L", l), ("u_minus", u_minus), ("u_plus", u_plus)] {
            if !v.is_finite() {
                return Err(ModelError::Invalid(format!("{what} is not finite")));
            }
        }
        if f.iter().chain(m.iter()).any(|c| !c.is_finite()) {
            return Err(ModelError::Invalid("non-finite flux coefficient".into()));
        }
        let f = Poly::new(f);
        let m = Poly::new(m);
        let df = f.derivative();
        let d2f = df.derivative();
        let d3f = d2f.derivative();
        let dm = m.derivative();
        let d2m = dm.derivative();
        Ok(ModelSpec {
            name: name.into(),
            f,
            m,
            l,
            u_minus,
            u_plus,
            df,
            d2f,
            d3f,
            dm,
            d2m,
        })
    }

    /// `f(u) = u^2/2`, `M(u) = u`, `L = 1`, `u_minus = eps`, `u_plus = -eps`.
    pub fn burgers_linear(eps: f64) -> Self {
        Self::new("burgers-linear", vec![0.0, 0.0, 0.5], vec![0.0, 1.0], 1.0, eps, -eps)
            .expect("finite preset")
    }

    /// Burgers flux with `M(u) = u + u^3/10`.
    pub fn burgers_cubic_m(eps: f64) -> Self {
        Self::new(
            "burgers-cubicM",
            vec![0.0, 0.0, 0.5],
            vec![0.0, 1.0, 0.0, 0.1],
            1.0,
            eps,
            -eps,
        )
        .expect("finite preset")
    }

    pub fn preset(name: &str, eps: f64) -> Result<Self, ModelError> {
        match name {
            "burgers-linear" => Ok(Self::burgers_linear(eps)),
            "burgers-cubicM" | "burgers-cubic-m" => Ok(Self::burgers_cubic_m(eps)),
            other => Err(ModelError::UnknownPreset(other.to_string())),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn l(&self) -> f64 {
        self.l
    }
    pub fn u_minus(&self) -> f64 {
        self.u_minus
    }
    pub fn u_plus(&self) -> f64 {
        self.u_plus
    }
    /// Wave speed; profiles are always stationary.
    pub fn s(&self) -> f64 {
        0.0
    }
    /// `[u] = u_plus - u_minus`.
    pub fn jump(&self) -> f64 {
        self.u_plus - self.u_minus
    }
    pub fn f_poly(&self) -> &Poly {
        &self.f
    }
    pub fn m_poly(&self) -> &Poly {
        &self.m
    }
    pub fn df_poly(&self) -> &Poly {
        &self.df
    }
    pub fn d2f_poly(&self) -> &Poly {
        &self.d2f
    }
    pub fn dm_poly(&self) -> &Poly {
        &self.dm
    }

    pub fn f(&self, u: f64) -> f64 {
        self.f.eval(u)
    }
    pub fn df(&self, u: f64) -> f64 {
        self.df.eval(u)
    }
    pub fn d2f(&self, u: f64) -> f64 {
        self.d2f.eval(u)
    }
    pub fn d3f(&self, u: f64) -> f64 {
        self.d3f.eval(u)
    }
    pub fn m(&self, u: f64) -> f64 {
        self.m.eval(u)
    }
    pub fn dm(&self, u: f64) -> f64 {
        self.dm.eval(u)
    }
    pub fn d2m(&self, u: f64) -> f64 {
        self.d2m.eval(u)
    }

    pub fn end_state(&self, side: Side) -> f64 {
        match side {
            Side::Plus => self.u_plus,
            Side::Minus => self.u_minus,
        }
    }

    /// `L M(u)`, the quantity inverted by the profile construction.
    pub fn lm(&self, u: f64) -> f64 {
        self.l * self.m(u)
    }

    /// Unique zero of `df` between the end states, by bisection.
    pub fn sonic_point(&self) -> Result<f64, ModelError> {
        let (mut lo, mut hi) = (self.u_plus.min(self.u_minus), self.u_plus.max(self.u_minus));
        let (flo, fhi) = (self.df(lo), self.df(hi));
        if !(flo < 0.0 && fhi > 0.0) {
            return Err(ModelError::NoSonicPoint { lo, hi });
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.df(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        // Polish with Newton; d2f > 0 keeps this well conditioned.
        let mut u = 0.5 * (lo + hi);
        for _ in 0..3 {
            let d2 = self.d2f(u);
            if d2 == 0.0 {
                break;
            }
            let step = self.df(u) / d2;
            let next = u - step;
            if next < lo || next > hi {
                break;
            }
            u = next;
        }
        Ok(u)
    }

    /// Inverse of `u -> L M(u)` on the end-state interval, by safeguarded Newton.
    pub fn lm_inverse(&self, y: f64) -> f64 {
        let (mut lo, mut hi) = (self.u_plus.min(self.u_minus), self.u_plus.max(self.u_minus));
        // Widen slightly so values a rounding error outside the range still resolve.
        let pad = 1e-6 * (hi - lo);
        lo -= pad;
        hi += pad;
        let g = |u: f64| self.lm(u) - y;
        let mut u = lo + (hi - lo) * ((y - self.lm(lo)) / (self.lm(hi) - self.lm(lo))).clamp(0.0, 1.0);
        for _ in 0..100 {
            let gu = g(u);
            if gu == 0.0 {
                return u;
            }
            if gu > 0.0 {
                hi = hi.min(u);
            } else {
                lo = lo.max(u);
            }
            let d = self.l * self.dm(u);
            let mut next = u - gu / d;
            if !(next > lo && next < hi) || !next.is_finite() {
                next = 0.5 * (lo + hi);
            }
            if (next - u).abs() <= 4.0 * f64::EPSILON * u.abs().max(1e-300) {
                return next;
            }
            u = next;
        }
        u
    }
}

/// One line of an [`AssumptionReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub margin: f64,
}

impl Check {
    fn new(name: impl Into<String>, margin: f64) -> Self {
        Check { name: name.into(), pass: margin > 0.0, margin }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub grid_points: usize,
    /// A0..A4, then A4 at the three points `u_plus`, `u_minus`, `u_star`,
    /// A5_1..A5_4, `Lb(0) + 2a'(0)` and `a'(0) + Lb(0)`.
    pub checks: Vec<Check>,
    /// `|f(u_minus) - f(u_plus)|`.
    pub rh_residual: f64,
    pub aprime0: f64,
    pub b0: f64,
}

impl AssumptionReport {
    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Structural assumptions A0-A4 (global A4) and A5_1..A5_4.
    pub fn verdict(&self) -> bool {
        const REQUIRED: [&str; 9] = ["A0", "A1", "A2", "A3", "A4", "A5_1", "A5_2", "A5_3", "A5_4"];
        REQUIRED.iter().all(|n| self.get(n).is_some_and(|c| c.pass))
    }

    pub fn failures(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect()
    }
}

/// Checks A0-A4 on a uniform grid over the end-state interval and the
/// profile-dependent conditions A5_k from `a'(0)` and `b(0)`.
pub fn check_assumptions(
    spec: &ModelSpec,
    aprime0: f64,
    b0: f64,
) -> Result<AssumptionReport, ModelError> {
    let lo = spec.u_plus.min(spec.u_minus);
    let hi = spec.u_plus.max(spec.u_minus);
    let n = CHECK_GRID;
    let mut min_d2f = f64::INFINITY;
    let mut min_ldm = f64::INFINITY;
    let mut max_f = 0.0f64;
    for i in 0..n {
        let u = lo + (hi - lo) * i as f64 / (n - 1) as f64;
        let (fv, d2, ldm) = (spec.f(u), spec.d2f(u), spec.l * spec.dm(u));
        for (what, v) in [("f", fv), ("d2f", d2), ("L dM", ldm)] {
            if !v.is_finite() {
                return Err(ModelError::NonFinite { what, u });
            }
        }
        min_d2f = min_d2f.min(d2);
        min_ldm = min_ldm.min(ldm);
        max_f = max_f.max(fv.abs());
    }
    let rh_residual = (spec.f(spec.u_minus) - spec.f(spec.u_plus)).abs();
    let rh_tol = TOL_RH * max_f.max(f64::MIN_POSITIVE);
    let mut checks = vec![
        // Polynomial fluxes are smooth.
        Check::new("A0", 1.0),
        Check::new("A1", min_d2f),
        Check { name: "A2".into(), pass: rh_residual <= rh_tol, margin: rh_tol - rh_residual },
        Check::new("A3", spec.u_minus - spec.u_plus),
        Check::new("A4", min_ldm),
    ];
    let three_point = match spec.sonic_point() {
        Ok(us) => [spec.u_plus, spec.u_minus, us]
            .iter()
            .map(|&u| spec.l * spec.dm(u))
            .fold(f64::INFINITY, f64::min),
        Err(_) => [spec.u_plus, spec.u_minus]
            .iter()
            .map(|&u| spec.l * spec.dm(u))
            .fold(f64::INFINITY, f64::min),
    };
    checks.push(Check::new("A4_three_point", three_point));
    let lb0 = spec.l * b0;
    for k in 1..=4 {
        checks.push(Check::new(format!("A5_{k}"), lb0 + (k as f64 + 0.5) * aprime0));
    }
    checks.push(Check::new("Lb0_plus_2aprime0", lb0 + 2.0 * aprime0));
    checks.push(Check::new("aprime0_plus_Lb0", aprime0 + lb0));
    Ok(AssumptionReport { grid_points: n, checks, rh_residual, aprime0, b0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn burgers_rankine_hugoniot_is_exact() {
        let spec = ModelSpec::burgers_linear(0.2);
        let r = check_assumptions(&spec, -0.02, 1.0).unwrap();
        assert_eq!(r.rh_residual, 0.0);
        assert!(r.get("A2").unwrap().pass);
        assert!(r.verdict());
    }

    #[test]
    fn a5_margin_uses_half_integer_weights() {
        let spec = ModelSpec::burgers_linear(0.2);
        let r = check_assumptions(&spec, -0.02, 1.0).unwrap();
        assert!((r.get("A5_4").unwrap().margin - 0.91).abs() < 1e-15);
        assert!((r.get("Lb0_plus_2aprime0").unwrap().margin - 0.96).abs() < 1e-15);
    }

    #[test]
    fn inverted_end_states_fail_entropy_condition() {
        let spec = ModelSpec::new("inv", vec![0.0, 0.0, 0.5], vec![0.0, 1.0], 1.0, -0.2, 0.2).unwrap();
        let r = check_assumptions(&spec, -0.02, 1.0).unwrap();
        let a3 = r.get("A3").unwrap();
        assert!(!a3.pass);
        assert!(a3.margin < 0.0);
        assert!(!r.verdict());
        assert_eq!(r.failures(), vec!["A3"]);
    }

    #[test]
    fn nonconvex_flux_fails_a1() {
        let spec = ModelSpec::new("cubic", vec![0.0, 0.0, 0.0, 1.0], vec![0.0, 1.0], 1.0, 0.2, -0.2).unwrap();
        let r = check_assumptions(&spec, -0.02, 1.0).unwrap();
        assert!(!r.get("A1").unwrap().pass);
    }

    #[test]
    fn cubic_m_reports_global_and_three_point_a4() {
        let spec = ModelSpec::burgers_cubic_m(0.3);
        let r = check_assumptions(&spec, -0.04, 1.0).unwrap();
        let global = r.get("A4").unwrap().margin;
        let three = r.get("A4_three_point").unwrap().margin;
        assert!((global - 1.0).abs() < 1e-6);
        assert!((three - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sonic_point_and_lm_inverse() {
        let spec = ModelSpec::burgers_cubic_m(0.3);
        assert!(spec.sonic_point().unwrap().abs() < 1e-15);
        for u in [-0.3, -0.1, 0.0, 0.25, 0.3] {
            let y = spec.lm(u);
            assert!((spec.lm_inverse(y) - u).abs() < 1e-14);
        }
    }

    #[test]
    fn serde_round_trip_recomputes_derivatives() {
        let spec = ModelSpec::burgers_cubic_m(0.05);
        let s = serde_json::to_string(&spec).unwrap();
        let back: ModelSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, spec);
        assert!((back.d2m(1.0) - 0.6).abs() < 1e-15);
    }
}
