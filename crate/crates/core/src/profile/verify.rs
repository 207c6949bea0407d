use serde::{Deserialize, Serialize};

use super::build::log_slope;
use super::Profile;
use crate::model::{ModelSpec, Side};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileReport {
    /// Max over interior nodes of the centered-difference residual of
    /// `-Q'' + Q + M(U)' = 0`.
    pub max_residual: f64,
    /// Max of `|L Q_i - (f(u±) - f(U_i))|`.
    pub max_flux_defect: f64,
    pub monotonicity_violations: usize,
    pub positivity_violations: usize,
    /// `|U(0) - u*|`.
    pub u0_error: f64,
    pub eta_theory_minus: f64,
    pub eta_theory_plus: f64,
    pub eta_measured_minus: f64,
    pub eta_measured_plus: f64,
    /// Decay rates of `U^(k)` for `k = 0..=4`, minus then plus side.
    pub derivative_rates: Vec<[f64; 2]>,
    pub x_min: f64,
    pub x_max: f64,
    pub nodes: usize,
}

impl ProfileReport {
    /// Largest relative deviation of a measured tail rate from theory.
    pub fn eta_rel_error(&self) -> f64 {
        let e = |m: f64, t: f64| ((m - t) / t).abs();
        e(self.eta_measured_minus, self.eta_theory_minus).max(e(self.eta_measured_plus, self.eta_theory_plus))
    }
}

/// Diagnostics of a computed profile.
pub fn verify_profile(profile: &Profile, spec: &ModelSpec) -> ProfileReport {
    let h = profile.h();
    let u = profile.u();
    let q = profile.q();
    let n = u.len();
    let jump = profile.meta().u_right_limit.map(|_| profile.i0());
    let f_end = 0.5 * (spec.f(spec.u_plus()) + spec.f(spec.u_minus()));

    let mut max_residual = 0.0f64;
    for i in 1..n - 1 {
        if let Some(j) = jump {
            if i == j || i == j + 1 {
                continue;
            }
        }
        let qxx = (q[i + 1] - 2.0 * q[i] + q[i - 1]) / (h * h);
        let mx = (spec.m(u[i + 1]) - spec.m(u[i - 1])) / (2.0 * h);
        max_residual = max_residual.max((-qxx + q[i] + mx).abs());
    }
    let max_flux_defect = u
        .iter()
        .zip(q)
        .map(|(&ui, &qi)| (spec.l() * qi - (f_end - spec.f(ui))).abs())
        .fold(0.0, f64::max);
    let monotonicity_violations = u.windows(2).filter(|w| w[1] >= w[0]).count();
    let positivity_violations = q
        .iter()
        .skip(1)
        .take(n.saturating_sub(2))
        .filter(|&&qi| spec.l() * qi <= 0.0)
        .count();
    let u0_error = (u[profile.i0()] - profile.meta().u_star).abs();

    // Derivatives 3 and 4 by differences of the stored U'' over a stride
    // wide enough to keep rounding noise out of the tail window.
    let d2 = profile.d2u();
    let s = ((0.05 / h).round() as usize).max(1);
    let hs = s as f64 * h;
    let mut d3 = vec![f64::NAN; n];
    let mut d4 = vec![f64::NAN; n];
    for i in s..n.saturating_sub(s) {
        d3[i] = (d2[i + s] - d2[i - s]) / (2.0 * hs);
        d4[i] = (d2[i + s] - 2.0 * d2[i] + d2[i - s]) / (hs * hs);
    }
    let scale = spec.u_minus() - spec.u_plus();
    let window = |side: Side| -> Vec<usize> {
        let u_end = spec.end_state(side);
        (1..n - 1)
            .filter(|&i| {
                let on_side = match side {
                    Side::Plus => i > profile.i0(),
                    Side::Minus => i < profile.i0(),
                };
                let x = profile.x(i);
                let inside = x > profile.x_min() && x < profile.x_max();
                let d = (u[i] - u_end).abs();
                on_side && inside && d < 1e-4 * scale && d > 1e-7 * scale
            })
            .collect()
    };
    let wm = window(Side::Minus);
    let wp = window(Side::Plus);
    let u_dev_m: Vec<f64> = u.iter().map(|v| v - spec.u_minus()).collect();
    let u_dev_p: Vec<f64> = u.iter().map(|v| v - spec.u_plus()).collect();
    let rate = |idx: &[usize], col: &[f64]| {
        let xs: Vec<f64> = idx.iter().map(|&i| profile.x(i)).collect();
        let vs: Vec<f64> = idx.iter().map(|&i| col[i]).collect();
        log_slope(&xs, &vs).map(f64::abs).unwrap_or(f64::NAN)
    };
    let cols: [&[f64]; 4] = [profile.du(), d2, &d3, &d4];
    let mut derivative_rates = vec![[rate(&wm, &u_dev_m), rate(&wp, &u_dev_p)]];
    for col in cols {
        derivative_rates.push([rate(&wm, col), rate(&wp, col)]);
    }

    ProfileReport {
        max_residual,
        max_flux_defect,
        monotonicity_violations,
        positivity_violations,
        u0_error,
        eta_theory_minus: profile.eta(Side::Minus),
        eta_theory_plus: profile.eta(Side::Plus),
        eta_measured_minus: profile.eta_measured(Side::Minus),
        eta_measured_plus: profile.eta_measured(Side::Plus),
        derivative_rates,
        x_min: profile.x_min(),
        x_max: profile.x_max(),
        nodes: n,
    }
}
