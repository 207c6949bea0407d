//! Evans functions `D±(λ)` of the degenerate eigenvalue problem.
//!
//! Linearizing about a profile with `a = f'(U)`, `b = M'(U)` gives, for
//! `W = (u, q, p)` with `p = b u - q'`,
//!
//! ```text
//! a(x) u' = -(λ + a'(x) + L b(x)) u + L p,   q' = b u - p,   p' = -q.
//! ```
//!
//! The single decaying mode at each infinity (`W1⁺` at `+∞`, `W3⁻` at `-∞`)
//! is integrated toward the singular point `x = 0`, stopping at `±δ₀`. Local
//! series at the origin continue each mode through `x = 0` and provide the
//! fast mode that vanishes like `|x|^ν` there. The determinant is taken at
//! `∓δ₀` and transported to `y = ∓1` in closed form through the trace of the
//! system.

pub mod condition;
pub mod contour;
pub mod local;
pub mod modes;
pub mod oracle;
pub mod resolvent;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{det3, norm3, C3};
use crate::model::Side;
use crate::profile::Profile;
use crate::spectral::SpectralError;

pub use condition::{band_convergence, check_condition, ConditionOptions, ConditionReport, Verdict};
pub use contour::{winding_number, ContourSpec, Segment, WindingResult, WindingSummary};
pub use local::{Crossing, LocalBasis};
pub use modes::{integrate_mode, seed_at_infinity, IntegrateOptions, ModeOrigin, ModeSolution};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvansError {
    #[error("spectral data: {0}")]
    Spectral(#[from] SpectralError),
    #[error("seeding: {0}")]
    Seed(String),
    #[error("integration: {0}")]
    Integration(String),
    #[error("local basis: {0}")]
    Local(String),
    #[error("indicial degeneracy lambda + a'(0) + L b(0) = 0 at lambda = {lambda}")]
    Indicial { lambda: Complex64 },
    #[error("profile unsuitable: {0}")]
    Profile(String),
    #[error("contour: {0}")]
    Contour(String),
    #[error("oracle: {0}")]
    Oracle(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvansOptions {
    /// Half-width of the band around `x = 0` handled by local series.
    pub delta0: f64,
    /// Seeding abscissa `X∞` is where `|U - u±| < tail_tol |u- - u+|`.
    pub tail_tol: f64,
    pub ode_tol: f64,
    pub max_steps: usize,
    pub series_terms: usize,
    /// Evaluation point `|y|` of `D±(λ) = D±(±y, λ)`.
    pub y_eval: f64,
}

impl Default for EvansOptions {
    fn default() -> Self {
        EvansOptions {
            delta0: 1e-2,
            tail_tol: 1e-10,
            ode_tol: 1e-10,
            max_steps: 400_000,
            series_terms: 24,
            y_eval: 1.0,
        }
    }
}

/// Values of both Evans functions at one spectral parameter.
///
/// `D∓ = d∓ · 2^pow2 · exp(scale_log + abel∓)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvansSample {
    pub lambda: Complex64,
    pub d_minus: Complex64,
    pub d_plus: Complex64,
    pub scale_log: Complex64,
    pub pow2: i32,
    /// Log of the transport factor from `∓δ₀` to `∓y`.
    pub abel_minus: Complex64,
    pub abel_plus: Complex64,
    /// `|d| / Π |column|` at the matching point.
    pub normalized_minus: f64,
    pub normalized_plus: f64,
}

impl EvansSample {
    pub fn stored(&self, side: Side) -> Complex64 {
        match side {
            Side::Minus => self.d_minus,
            Side::Plus => self.d_plus,
        }
    }

    pub fn normalized(&self, side: Side) -> f64 {
        match side {
            Side::Minus => self.normalized_minus,
            Side::Plus => self.normalized_plus,
        }
    }

    /// Complex logarithm of `D±(λ)` (principal argument of the stored part).
    pub fn log_value(&self, side: Side) -> Complex64 {
        let abel = match side {
            Side::Minus => self.abel_minus,
            Side::Plus => self.abel_plus,
        };
        self.stored(side).ln() + self.scale_log + abel + self.pow2 as f64 * std::f64::consts::LN_2
    }

    pub fn value(&self, side: Side) -> Complex64 {
        self.log_value(side).exp()
    }

    /// `D±(∓δ₀, λ)`, before transport to `∓y`.
    pub fn band_value(&self, side: Side) -> Complex64 {
        let log = self.scale_log + self.pow2 as f64 * std::f64::consts::LN_2;
        self.stored(side) * log.exp()
    }
}

/// Columns of both determinants at one spectral parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct EvansColumns {
    pub lambda: Complex64,
    /// `W1⁺` at `+δ₀`.
    pub w1: ModeSolution,
    /// `W3⁻` at `-δ₀`.
    pub w3: ModeSolution,
    pub basis: LocalBasis,
    /// `W1⁺` continued to `-δ₀`.
    pub cross1: Crossing,
    /// `W3⁻` continued to `+δ₀`.
    pub cross3: Crossing,
    /// Analytic normalization `μ3⁺ X∞ - μ3⁻ X∞` making each seed behave like
    /// `exp(μ x) V` at its infinity.
    pub seed_log: Complex64,
}

impl EvansColumns {
    /// The three columns `(W1⁺, fast, W3⁻)` stored at the matching point of
    /// `D±`, i.e. at `-δ₀` for `D-` and `+δ₀` for `D+`.
    pub fn at_band(&self, side: Side, delta0: f64) -> [C3; 3] {
        match side {
            Side::Minus => [self.cross1.value, self.basis.fast_at(-delta0).0, self.w3.last_w()],
            Side::Plus => [self.w1.last_w(), self.basis.fast_at(delta0).0, self.cross3.value],
        }
    }
}

/// Precomputed per-profile data for repeated Evans evaluations.
#[derive(Debug, Clone)]
pub struct EvansContext<'a> {
    pub profile: &'a Profile,
    pub opts: EvansOptions,
    pub x_inf: f64,
    pub alpha: Vec<f64>,
    pub b: Vec<f64>,
    /// `(∫ 1/a, ∫ L b / a + ln|a(band)| - ln|a(y)|)` over `[-y, -δ₀]` and
    /// `[δ₀, y]`.
    abel: [(f64, f64); 2],
    integrate: IntegrateOptions,
}

impl<'a> EvansContext<'a> {
    pub fn new(profile: &'a Profile, opts: EvansOptions) -> Result<Self, EvansError> {
        if profile.subshock() {
            return Err(EvansError::Profile("profile has a subshock".into()));
        }
        if !(opts.delta0 > 0.0 && opts.delta0 < opts.y_eval) {
            return Err(EvansError::Profile(format!(
                "need 0 < delta0 < y (delta0 = {}, y = {})",
                opts.delta0, opts.y_eval
            )));
        }
        let (alpha, b) = profile
            .coefficient_series(opts.series_terms + 2)
            .ok_or_else(|| EvansError::Profile("profile has no node series".into()))?;
        let spec = profile.spec();
        let scale = (spec.u_minus() - spec.u_plus()).abs();
        let x_inf = profile.x_infinity(opts.tail_tol * scale).max(2.0 * opts.y_eval);
        let abel = [
            abel_integrals(profile, Side::Minus, opts.delta0, opts.y_eval),
            abel_integrals(profile, Side::Plus, opts.delta0, opts.y_eval),
        ];
        let integrate = IntegrateOptions { tol: opts.ode_tol, max_steps: opts.max_steps, ..Default::default() };
        Ok(EvansContext { profile, opts, x_inf, alpha, b, abel, integrate })
    }

    pub fn integrate_options(&self) -> IntegrateOptions {
        self.integrate
    }

    pub fn local_basis(&self, lambda: Complex64) -> Result<LocalBasis, EvansError> {
        LocalBasis::new(&self.alpha, &self.b, self.profile.spec().l(), lambda, self.opts.series_terms)
    }

    /// `λ` at which `ω(0) = 0`; always in `Re λ < 0` for a Lax profile.
    pub fn indicial_point(&self) -> f64 {
        -(self.alpha[1] + self.profile.spec().l() * self.b[0])
    }

    /// Local exponent `ν` at `λ`.
    pub fn nu(&self, lambda: Complex64) -> Complex64 {
        (lambda - self.indicial_point()) / self.alpha[1].abs()
    }

    /// Log of the transport factor `D(∓y) / D(∓δ₀)` at `λ`.
    pub fn abel_log(&self, side: Side, lambda: Complex64) -> Complex64 {
        let (j1, j2) = match side {
            Side::Minus => self.abel[0],
            Side::Plus => self.abel[1],
        };
        lambda * j1 + j2
    }

    /// Integrates both decaying modes and crosses each through the origin.
    pub fn columns(&self, lambda: Complex64) -> Result<EvansColumns, EvansError> {
        self.columns_with_seeds(lambda, Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0))
    }

    /// As [`columns`](Self::columns), with the seeds multiplied by `c1` and
    /// `c3`.
    pub fn columns_with_seeds(
        &self,
        lambda: Complex64,
        c1: Complex64,
        c3: Complex64,
    ) -> Result<EvansColumns, EvansError> {
        let d0 = self.opts.delta0;
        let s1 = seed_at_infinity(self.profile, Side::Plus, lambda, 2, self.x_inf)?.scaled(c1);
        let s3 = seed_at_infinity(self.profile, Side::Minus, lambda, 2, self.x_inf)?.scaled(c3);
        let seed_log = s1.mu.unwrap_or_default() * self.x_inf - s3.mu.unwrap_or_default() * self.x_inf;
        let w1 = integrate_mode(s1, self.profile, d0, &self.integrate)?;
        let w3 = integrate_mode(s3, self.profile, -d0, &self.integrate)?;
        let basis = self.local_basis(lambda)?;
        let cross1 = basis.cross(d0, &w1.last_w())?;
        let cross3 = basis.cross(-d0, &w3.last_w())?;
        Ok(EvansColumns { lambda, w1, w3, basis, cross1, cross3, seed_log })
    }

    pub fn sample_from(&self, cols: &EvansColumns) -> EvansSample {
        let d0 = self.opts.delta0;
        let det_and_norm = |side| {
            let c = cols.at_band(side, d0);
            let d = det3(&c[0], &c[1], &c[2]);
            let n = norm3(&c[0]) * norm3(&c[1]) * norm3(&c[2]);
            (d, if n > 0.0 { d.norm() / n } else { 0.0 })
        };
        let (d_minus, normalized_minus) = det_and_norm(Side::Minus);
        let (d_plus, normalized_plus) = det_and_norm(Side::Plus);
        let scale_log = cols.w1.scale_log + cols.w3.scale_log + cols.seed_log + cols.basis.nu * d0.ln();
        EvansSample {
            lambda: cols.lambda,
            d_minus,
            d_plus,
            scale_log,
            pow2: cols.w1.last_pow2() + cols.w3.last_pow2(),
            abel_minus: self.abel_log(Side::Minus, cols.lambda),
            abel_plus: self.abel_log(Side::Plus, cols.lambda),
            normalized_minus,
            normalized_plus,
        }
    }

    /// `D-(λ)` and `D+(λ)`.
    pub fn evaluate(&self, lambda: Complex64) -> Result<EvansSample, EvansError> {
        Ok(self.sample_from(&self.columns(lambda)?))
    }

    /// Profile derivative `W̄' = (U', Q', b U' - Q'')` at `x`.
    pub fn profile_mode(&self, x: f64) -> C3 {
        let pt = self.profile.eval(x);
        let c = |v: f64| Complex64::new(v, 0.0);
        [c(pt.du), c(pt.dq), c(pt.b * pt.du - pt.d2q)]
    }

    /// Finite-difference `∂λ D±(∓δ₀, 0)` against the closed form
    /// `k [u] / L · det[(u1, u2), (p1, p2)]`, where `k` is the factor with
    /// `W3⁻(·, 0) = k W̄'`. Both are reported divided by `exp(log_scale)`.
    pub fn slope_check(&self, side: Side, h: f64) -> Result<SlopeCheck, EvansError> {
        let d0 = self.opts.delta0;
        let cols0 = self.columns(Complex64::new(0.0, 0.0))?;
        let s0 = self.sample_from(&cols0);
        let sh = self.evaluate(Complex64::new(h, 0.0))?;
        let ln2 = std::f64::consts::LN_2;
        let log_scale = s0.scale_log + s0.pow2 as f64 * ln2;
        let shift = sh.scale_log + sh.pow2 as f64 * ln2 - log_scale;
        let fd = (sh.stored(side) * shift.exp() - s0.stored(side)) / h;

        // Column scales relative to `exp(log_scale)`: the seeds carry
        // `exp(±μ X∞)`, the fast column `δ₀^ν`.
        let y = side.sign() * d0;
        let c = cols0.at_band(side, d0);
        let bar = self.profile_mode(y);
        let num: Complex64 = bar.iter().zip(&c[2]).map(|(b, w)| b.conj() * w).sum();
        let den: f64 = bar.iter().map(|b| b.norm_sqr()).sum();
        let k_scaled = num / den;
        let spec = self.profile.spec();
        let jump = spec.u_plus() - spec.u_minus();
        let formula = k_scaled * jump / spec.l() * (c[0][0] * c[1][2] - c[1][0] * c[0][2]);
        let rel_err = (fd - formula).norm() / formula.norm();
        let true3 = cols0.w3.scale_log - cols0.w3.mu.unwrap_or_default() * self.x_inf + cols0.w3.last_pow2() as f64 * ln2;
        let k = k_scaled * true3.exp();
        Ok(SlopeCheck { side, h, fd, formula, k, log_scale, rel_err })
    }
}

/// Outcome of [`EvansContext::slope_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeCheck {
    pub side: Side,
    pub h: f64,
    pub fd: Complex64,
    pub formula: Complex64,
    pub k: Complex64,
    pub log_scale: Complex64,
    pub rel_err: f64,
}

/// `(J1, J2)` such that `ln D(∓y) - ln D(∓δ₀) = λ J1 + J2`.
fn abel_integrals(profile: &Profile, side: Side, delta0: f64, y: f64) -> (f64, f64) {
    let l = profile.spec().l();
    let sg = side.sign();
    // Composite Simpson in s = ln|x|, where x / a(x) is smooth.
    let n = 4096;
    let (s0, s1) = (delta0.ln(), y.ln());
    let hs = (s1 - s0) / n as f64;
    let mut j1 = 0.0;
    let mut j2 = 0.0;
    for i in 0..=n {
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let r = (s0 + i as f64 * hs).exp();
        let pt = profile.eval(sg * r);
        j1 += w * r / pt.a;
        j2 += w * r * l * pt.b / pt.a;
    }
    j1 *= hs / 3.0;
    j2 *= hs / 3.0;
    let a_band = profile.eval(sg * delta0).a.abs().ln();
    let a_y = profile.eval(sg * y).a.abs().ln();
    match side {
        // d/dx ln D = -(λ + a' + L b)/a, integrated from -δ₀ to -y.
        Side::Minus => (j1, j2 + a_band - a_y),
        Side::Plus => (-j1, -j2 + a_band - a_y),
    }
}
