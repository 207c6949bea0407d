//! Decaying modes seeded at `±X∞` and integrated toward the singular point.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::EvansError;
use crate::linalg::C3;
use crate::model::Side;
use crate::ode::{Dp45, ErrorNorm};
use crate::profile::Profile;
use crate::spectral::char_roots;

/// Where a mode came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ModeOrigin {
    /// Eigenvector `mode` (0-based: 0, 1, 2 for modes 1, 2, 3) of the
    /// limiting system at `side` infinity.
    Infinity { side: Side, mode: usize },
    /// Continued through `x = 0` with the fast component dropped.
    Crossed,
}

/// A solution of the eigenvalue system sampled along `x`.
///
/// The true value at sample `i` is `w[i] * 2^pow2[i] * exp(scale_log)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSolution {
    pub lambda: Complex64,
    pub origin: ModeOrigin,
    pub x: Vec<f64>,
    pub w: Vec<C3>,
    pub pow2: Vec<i32>,
    pub scale_log: Complex64,
    /// Characteristic root of the seed, if seeded at infinity.
    pub mu: Option<Complex64>,
}

impl ModeSolution {
    pub fn last_x(&self) -> f64 {
        *self.x.last().expect("nonempty mode")
    }
    pub fn last_w(&self) -> C3 {
        *self.w.last().expect("nonempty mode")
    }
    pub fn last_pow2(&self) -> i32 {
        *self.pow2.last().expect("nonempty mode")
    }

    /// Drops all samples but the last.
    pub fn truncate_to_last(&mut self) {
        let n = self.x.len();
        self.x.drain(..n - 1);
        self.w.drain(..n - 1);
        self.pow2.drain(..n - 1);
    }

    /// Multiplies the stored solution by `c`.
    pub fn scaled(mut self, c: Complex64) -> Self {
        for w in &mut self.w {
            for z in w.iter_mut() {
                *z *= c;
            }
        }
        self
    }

    /// True value at the last sample; may overflow for extreme scales.
    pub fn last_value(&self) -> C3 {
        let f = (self.scale_log + self.last_pow2() as f64 * std::f64::consts::LN_2).exp();
        self.last_w().map(|z| z * f)
    }
}

/// Seeds mode `mode` (0-based) of the limiting system at `side` infinity,
/// at `x = ±x_inf`, with `scale_log = 0`.
pub fn seed_at_infinity(
    profile: &Profile,
    side: Side,
    lambda: Complex64,
    mode: usize,
    x_inf: f64,
) -> Result<ModeSolution, EvansError> {
    if mode > 2 {
        return Err(EvansError::Seed(format!("mode index {mode} out of range")));
    }
    let set = char_roots(profile.spec(), side, lambda)?;
    let mu = set.mu[mode];
    // Decaying at +∞ needs Re μ < 0, at -∞ Re μ > 0.
    let decays = match side {
        Side::Plus => mu.re < 0.0,
        Side::Minus => mu.re > 0.0,
    };
    if !decays {
        return Err(EvansError::Seed(format!(
            "mode {} at {side} infinity has mu = {mu}, not decaying",
            mode + 1
        )));
    }
    let x0 = side.sign() * x_inf.abs();
    Ok(ModeSolution {
        lambda,
        origin: ModeOrigin::Infinity { side, mode },
        x: vec![x0],
        w: vec![set.v[mode]],
        pow2: vec![0],
        scale_log: Complex64::new(0.0, 0.0),
        mu: Some(mu),
    })
}

/// Integration controls for [`integrate_mode`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrateOptions {
    pub tol: f64,
    pub max_steps: usize,
    pub h_max: f64,
    /// Keep every accepted step, not just the end point.
    pub keep_path: bool,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions { tol: 1e-10, max_steps: 400_000, h_max: 0.5, keep_path: false }
    }
}

/// Right-hand side `W' = A(x, λ) W` on interleaved real/imaginary parts.
pub(crate) fn rhs(profile: &Profile, lambda: Complex64) -> impl FnMut(f64, &[f64], &mut [f64]) + '_ {
    let l = profile.spec().l();
    move |x, y, dy| {
        let pt = profile.eval(x);
        let u = Complex64::new(y[0], y[1]);
        let q = Complex64::new(y[2], y[3]);
        let p = Complex64::new(y[4], y[5]);
        let du = (-(lambda + pt.da + l * pt.b) * u + l * p) / pt.a;
        let dq = pt.b * u - p;
        let dp = -q;
        dy[0] = du.re;
        dy[1] = du.im;
        dy[2] = dq.re;
        dy[3] = dq.im;
        dy[4] = dp.re;
        dy[5] = dp.im;
    }
}

fn pack(w: &C3) -> [f64; 6] {
    [w[0].re, w[0].im, w[1].re, w[1].im, w[2].re, w[2].im]
}

fn unpack(y: &[f64]) -> C3 {
    [Complex64::new(y[0], y[1]), Complex64::new(y[2], y[3]), Complex64::new(y[4], y[5])]
}

/// Advances the mode from its last sample to `to`, moving powers of two into
/// the exponent whenever `max |W|` leaves `[1e-3, 1e3]`.
pub fn integrate_mode(
    mut ms: ModeSolution,
    profile: &Profile,
    to: f64,
    opts: &IntegrateOptions,
) -> Result<ModeSolution, EvansError> {
    let from = ms.last_x();
    if from == to {
        return Ok(ms);
    }
    if from.signum() != to.signum() || from == 0.0 || to == 0.0 {
        return Err(EvansError::Integration(format!(
            "interval [{from}, {to}] touches the singular point"
        )));
    }
    let mut f = rhs(profile, ms.lambda);
    let y0 = pack(&ms.last_w());
    let mut pow2 = ms.last_pow2();
    if !opts.keep_path {
        ms.truncate_to_last();
    }
    let dir = (to - from).signum();
    let mut dp = Dp45::new(&mut f, from, &y0, dir * 1e-3, ErrorNorm::Relative { tol: opts.tol });
    dp.h_max = opts.h_max;
    dp.h_min = 1e-14 * from.abs().max(to.abs());
    let mut steps = 0usize;
    while dp.t() != to {
        if steps >= opts.max_steps {
            return Err(EvansError::Integration(format!(
                "step budget {} exhausted at x = {} (lambda = {})",
                opts.max_steps,
                dp.t(),
                ms.lambda
            )));
        }
        dp.step(&mut f, to).map_err(|e| {
            EvansError::Integration(format!("{e} (lambda = {}); consider a larger delta0", ms.lambda))
        })?;
        steps += 1;
        let big = dp.y().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !(1e-3..=1e3).contains(&big) {
            if big == 0.0 {
                break;
            }
            let k = big.log2().round() as i32;
            dp.scale((-k as f64).exp2());
            pow2 += k;
        }
        if opts.keep_path && dp.t() != to {
            ms.x.push(dp.t());
            ms.w.push(unpack(dp.y()));
            ms.pow2.push(pow2);
        }
    }
    if !opts.keep_path {
        ms.x.clear();
        ms.w.clear();
        ms.pow2.clear();
    }
    ms.x.push(to);
    ms.w.push(unpack(dp.y()));
    ms.pow2.push(pow2);
    Ok(ms)
}
