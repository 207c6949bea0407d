//! Shock location by least-squares matching against shifted profiles.

use serde::{Deserialize, Serialize};

use super::scheme::Grid;
use super::SimError;
use crate::profile::Profile;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tracking {
    /// Minimizer of `‖ũ - U(· - α)‖_{L²}`.
    pub alpha: f64,
    /// `-[u]⁻¹ ∫ (ũ - U)`.
    pub alpha_mass: f64,
    /// `‖ũ - U(· - α)‖_{L²}` at the minimizer.
    pub residual: f64,
    pub evaluations: usize,
}

/// `h Σ (ũ_i - U(x_i - s))²`.
pub fn shift_objective(u: &[f64], grid: &Grid, profile: &Profile, s: f64) -> f64 {
    u.iter()
        .enumerate()
        .map(|(i, &v)| {
            let d = v - profile.eval_u(grid.x(i) - s).0;
            d * d
        })
        .sum::<f64>()
        * grid.h
}

/// `-[u]⁻¹ ∫ (ũ - U) dx` over the grid.
pub fn mass_shift(u: &[f64], grid: &Grid, profile: &Profile) -> f64 {
    let spec = profile.spec();
    let jump = spec.u_plus() - spec.u_minus();
    let excess: f64 = u.iter().enumerate().map(|(i, &v)| v - profile.eval_u(grid.x(i)).0).sum::<f64>() * grid.h;
    -excess / jump
}

/// Golden-section search on `[guess - width, guess + width]` down to a
/// bracket of `1e-3 width`, then successive parabolic interpolation.
pub fn track_shock_location(
    u: &[f64],
    grid: &Grid,
    profile: &Profile,
    guess: f64,
    width: f64,
) -> Result<Tracking, SimError> {
    let mut evals = 0usize;
    let mut j = |s: f64| {
        evals += 1;
        shift_objective(u, grid, profile, s)
    };
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (lo0, hi0) = (guess - width, guess + width);
    let (mut a, mut b) = (lo0, hi0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (j(c), j(d));
    while b - a > 1e-3 * width {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = j(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = j(d);
        }
    }
    let edge = 2e-3 * width;
    let (mut x0, mut f0) = if fc < fd { (c, fc) } else { (d, fd) };
    if x0 - lo0 < edge || hi0 - x0 < edge {
        return Err(SimError::Tracking(format!(
            "shift minimizer {x0} at the edge of [{lo0}, {hi0}]"
        )));
    }

    // Three points around the minimum for parabolic steps.
    let mut pts = [(a, j(a)), (x0, f0), (b, j(b))];
    for _ in 0..40 {
        let [(x1, f1), (x2, f2), (x3, f3)] = pts;
        let num = (x2 - x1).powi(2) * (f2 - f3) - (x2 - x3).powi(2) * (f2 - f1);
        let den = (x2 - x1) * (f2 - f3) - (x2 - x3) * (f2 - f1);
        if den == 0.0 {
            break;
        }
        let xn = x2 - 0.5 * num / den;
        if !(xn > x1 && xn < x3) {
            break;
        }
        let step = (xn - x2).abs();
        let fnew = j(xn);
        // Keep the bracket around the best point.
        let mut all = [(x1, f1), (x2, f2), (x3, f3), (xn, fnew)];
        all.sort_by(|p, q| p.0.total_cmp(&q.0));
        let best = (0..4).min_by(|&p, &q| all[p].1.total_cmp(&all[q].1)).unwrap_or(1);
        let k = best.clamp(1, 2);
        pts = [all[k - 1], all[k], all[k + 1]];
        if fnew < f0 {
            x0 = xn;
            f0 = fnew;
        }
        if step < 1e-12 * (1.0 + x0.abs()) {
            break;
        }
    }
    let evaluations = evals;
    Ok(Tracking { alpha: x0, alpha_mass: mass_shift(u, grid, profile), residual: f0.max(0.0).sqrt(), evaluations })
}
