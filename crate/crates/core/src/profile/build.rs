//! Reconstruction of `(U, Q)` on the uniform output grid.
//!
//! Each branch is integrated with fixed-step RK4 in `x` from its exponential
//! tail towards the node. Near `x = 0` the slow analytic solution through the
//! node is expanded in a Taylor series and blended with the integrated
//! branches. The tail amplitude of each branch is corrected until the branch
//! agrees with the series, which fixes the translation exactly.

use super::shoot::{FluxGeometry, Match, PhaseTrajectory};
use super::{Profile, ProfileError, ProfileMeta, ProfileOptions, Tail};
use crate::model::Side;
use crate::ode::{rk4_step, rk4_work};
use crate::series;

/// Taylor coefficients of the slow analytic solution through the node,
/// `U(x) = sum_k c_k x^k` with `c_0 = u*`.
///
/// The expansion is truncated below the resonance `n = nu_fast / nu_slow`,
/// where the fast node direction enters at order `|x|^n`.
pub fn node_series(geom: &FluxGeometry<'_>, max_terms: usize) -> Result<Vec<f64>, ProfileError> {
    let spec = geom.spec();
    let us = geom.u_star;
    let (slow, fast) = geom.node_rates()?;
    let f2 = spec.d2f(us);
    let lm1 = spec.l() * spec.dm(us);
    let mut fs = series::shift(spec.f_poly().coeffs(), us);
    fs[0] -= geom.f_end;
    let dfs = series::shift(spec.df_poly().coeffs(), us);
    let lms: Vec<f64> = series::shift(spec.m_poly().coeffs(), us)
        .iter()
        .map(|c| c * spec.l())
        .collect();
    let resonance = fast / slow;
    let n_cap = ((0.9 * resonance).floor() as usize).clamp(2, max_terms.max(2));
    let mut c = vec![0.0; n_cap + 1];
    c[1] = slow / f2;
    for n in 2..=n_cap {
        let z_n = series::compose(&fs, &c[..n], n)[n - 1] / n as f64;
        let a = series::compose(&dfs, &c[..=n], n + 1);
        let up = series::derivative(&c[..=n]);
        let rest = series::mul(&a, &up, n + 1)[n] + series::compose(&lms, &c[..=n], n + 1)[n];
        c[n] = (z_n - rest) / (slow * (n as f64 + 1.0) + lm1);
    }
    c[0] = us;
    Ok(c)
}

struct Branch {
    side: Side,
    mu: f64,
    /// Tail amplitude at the start node `k_start`.
    amp: f64,
    k_start: usize,
    /// `(Z, U)` at nodes `k_start, k_start - 1, ..., k_stop`.
    z: Vec<f64>,
    u: Vec<f64>,
    k_stop: usize,
}

impl Branch {
    fn at(&self, k: usize) -> (f64, f64) {
        let j = self.k_start - k;
        (self.z[j], self.u[j])
    }
}

fn integrate_branch(
    geom: &FluxGeometry<'_>,
    side: Side,
    mu: f64,
    amp: f64,
    k_start: usize,
    k_stop: usize,
    h: f64,
) -> Result<Branch, ProfileError> {
    let spec = geom.spec();
    let u_end = spec.end_state(side);
    let sgn = side.sign();
    let du = amp;
    let dz = spec.df(u_end) * du / mu;
    let mut y = [spec.lm(u_end) + dz, u_end + du];
    let mut rhs = |_x: f64, y: &[f64], dy: &mut [f64]| {
        dy[0] = geom.big_f(y[1]);
        dy[1] = (y[0] - spec.lm(y[1])) / spec.df(y[1]);
    };
    let mut work = rk4_work(2);
    let n = k_start - k_stop + 1;
    let mut z = Vec::with_capacity(n);
    let mut u = Vec::with_capacity(n);
    z.push(y[0]);
    u.push(y[1]);
    for k in (k_stop..k_start).rev() {
        let x = sgn * (k + 1) as f64 * h;
        rk4_step(&mut rhs, x, &mut y, -sgn * h, &mut work);
        if !y[0].is_finite() || !y[1].is_finite() {
            return Err(ProfileError::Reconstruction(format!(
                "{side} branch became non-finite at x = {}",
                sgn * k as f64 * h
            )));
        }
        z.push(y[0]);
        u.push(y[1]);
    }
    Ok(Branch { side, mu, amp, k_start, z, u, k_stop })
}

/// `(U', U'')` from the profile ODE in `x`.
fn derivatives(geom: &FluxGeometry<'_>, z: f64, u: f64) -> (f64, f64) {
    let spec = geom.spec();
    let a = spec.df(u);
    let d1 = (z - spec.lm(u)) / a;
    let d2 = (geom.big_f(u) - spec.l() * spec.dm(u) * d1 - spec.d2f(u) * d1 * d1) / a;
    (d1, d2)
}

/// Quintic smoothstep and its first two derivatives.
fn smoothstep(t: f64) -> (f64, f64, f64) {
    let t = t.clamp(0.0, 1.0);
    (
        t * t * t * (10.0 - 15.0 * t + 6.0 * t * t),
        30.0 * t * t * (1.0 - t) * (1.0 - t),
        60.0 * t * (1.0 - t) * (1.0 - 2.0 * t),
    )
}

/// Slope of `ln|v|` against `x` by least squares.
pub(super) fn log_slope(x: &[f64], v: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(v)
        .filter(|(_, v)| **v != 0.0 && v.is_finite())
        .map(|(x, v)| (*x, v.abs().ln()))
        .collect();
    if pts.len() < 5 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Some(sxy / sxx)
}

/// Grid nodes (as signed abscissae) and values of `U - u±` on the
/// integrated part of a branch within the linear decay regime.
fn tail_window(b: &Branch, h: f64, u_end: f64, scale: f64) -> (Vec<f64>, Vec<f64>) {
    let sgn = b.side.sign();
    let mut xs = Vec::new();
    let mut vs = Vec::new();
    for k in b.k_stop..=b.k_start {
        let d = b.at(k).1 - u_end;
        if d.abs() < 1e-4 * scale && d.abs() > 1e-7 * scale {
            xs.push(sgn * k as f64 * h);
            vs.push(d);
        }
    }
    (xs, vs)
}

/// Builds the sampled profile from matched trajectories.
pub fn reconstruct_profile(
    geom: &FluxGeometry<'_>,
    tp: &PhaseTrajectory,
    tm: &PhaseTrajectory,
    mt: &Match,
    opts: &ProfileOptions,
) -> Result<Profile, ProfileError> {
    let (tp, tm) = if tp.side == Side::Plus { (tp, tm) } else { (tm, tp) };
    if tp.side == tm.side {
        return Err(ProfileError::Reconstruction("need one trajectory per side".into()));
    }
    if mt.subshock {
        reconstruct_subshock(geom, tp, tm, mt, opts)
    } else {
        reconstruct_smooth(geom, tp, tm, opts)
    }
}

/// Node index where the launch point of a trajectory lands, moved outwards.
fn start_node(x_launch: f64, h: f64) -> Result<usize, ProfileError> {
    let k = (x_launch.abs() / h).ceil();
    if !k.is_finite() || !(1.0..=1e8).contains(&k) {
        return Err(ProfileError::Reconstruction(format!(
            "launch abscissa {x_launch} gives an unusable grid"
        )));
    }
    Ok(k as usize)
}

fn launch_amp(t: &PhaseTrajectory, mu: f64, x_launch: f64, k: usize, h: f64) -> f64 {
    let x_k = t.side.sign() * k as f64 * h;
    t.launch_du * (mu * (x_k - x_launch)).exp()
}

fn reconstruct_smooth(
    geom: &FluxGeometry<'_>,
    tp: &PhaseTrajectory,
    tm: &PhaseTrajectory,
    opts: &ProfileOptions,
) -> Result<Profile, ProfileError> {
    let spec = geom.spec();
    let h = opts.h;
    let scale = spec.u_minus() - spec.u_plus();
    let c = node_series(geom, opts.series_terms)?;
    let dc = series::derivative(&c);
    let d2c = series::derivative(&dc);
    let (slow, _) = geom.node_rates()?;
    let lm1 = spec.l() * spec.dm(geom.u_star);

    // Keep RK4 well inside its stability region near the node; shrink the
    // Taylor zone when the series converges slowly.
    let nb_min = ((2.0 * h * lm1 / slow.abs()).max(10.0 * h) / h).ceil() as usize;
    let series_tail = |xb: f64| {
        (c.len() - 3..c.len())
            .map(|k| (c[k] * xb.powi(k as i32)).abs())
            .fold(0.0, f64::max)
    };
    let mut nb1 = nb_min.max((0.05 / h).ceil() as usize);
    while nb1 > nb_min && series_tail(2.0 * nb1 as f64 * h) > 1e-13 * scale {
        nb1 = (nb1 / 2).max(nb_min);
    }
    let nb2 = 2 * nb1;
    let nm = (3 * nb1) / 2;
    let (xb1, xb2) = (nb1 as f64 * h, nb2 as f64 * h);

    let mut branches = Vec::with_capacity(2);
    for t in [tm, tp] {
        let side = t.side;
        let sgn = side.sign();
        let mu = geom.saddle_rate(side);
        let x_launch = -t.terminal_x;
        if x_launch * sgn <= 0.0 {
            return Err(ProfileError::Reconstruction(format!(
                "{side} branch launch at x = {x_launch} is on the wrong side of the node"
            )));
        }
        let k_start = start_node(x_launch, h)?;
        if k_start <= nb2 {
            return Err(ProfileError::Reconstruction(format!(
                "{side} branch is too short for the blending zone"
            )));
        }
        let mut amp = launch_amp(t, mu, x_launch, k_start, h);
        let mut branch = None;
        for _ in 0..12 {
            let b = integrate_branch(geom, side, mu, amp, k_start, nb1, h)?;
            let xm = sgn * nm as f64 * h;
            let (useries, dseries) = series::eval_with_derivative(&c, xm);
            let mismatch = b.at(nm).1 - useries;
            let shift = -mismatch / dseries;
            let done = mismatch.abs() <= 1e-15 * scale;
            branch = Some(b);
            if done {
                break;
            }
            amp *= (mu * shift).exp();
        }
        branches.push(branch.unwrap());
    }
    let (bm, bp) = (&branches[0], &branches[1]);

    // Extend each side with the tail until |U - u±| < tail_tol.
    let ext = |b: &Branch| -> usize {
        let a = b.amp.abs();
        if a <= opts.tail_tol {
            0
        } else {
            ((a / opts.tail_tol).ln() / (b.mu.abs() * h)).ceil() as usize
        }
    };
    let (km, kp) = (bm.k_start + ext(bm), bp.k_start + ext(bp));
    let n = km + kp + 1;
    let i0 = km;
    let mut u = vec![0.0; n];
    let mut du = vec![0.0; n];
    let mut d2u = vec![0.0; n];
    for (b, kmax) in [(bm, km), (bp, kp)] {
        let sgn = b.side.sign();
        let u_end = spec.end_state(b.side);
        for k in 0..=kmax {
            let i = (i0 as isize + sgn as isize * k as isize) as usize;
            let x = sgn * k as f64 * h;
            let (v, d1, d2) = if k > b.k_start {
                let d = b.amp * (b.mu * (x - sgn * b.k_start as f64 * h)).exp();
                (u_end + d, b.mu * d, b.mu * b.mu * d)
            } else if k >= nb2 {
                let (z, uu) = b.at(k);
                let (d1, d2) = derivatives(geom, z, uu);
                (uu, d1, d2)
            } else {
                let s = (series::eval(&c, x), series::eval(&dc, x), series::eval(&d2c, x));
                if k <= nb1 {
                    s
                } else {
                    let (z, uu) = b.at(k);
                    let (r1, r2) = derivatives(geom, z, uu);
                    let (w, w1, w2) = smoothstep((x.abs() - xb1) / (xb2 - xb1));
                    // w weighs the integrated branch; derivatives in x carry the side sign.
                    let (w1, w2) = (sgn * w1 / (xb2 - xb1), w2 / ((xb2 - xb1) * (xb2 - xb1)));
                    let diff0 = uu - s.0;
                    let diff1 = r1 - s.1;
                    (
                        s.0 + w * diff0,
                        s.1 + w * diff1 + w1 * diff0,
                        s.2 + w * (r2 - s.2) + 2.0 * w1 * diff1 + w2 * diff0,
                    )
                }
            };
            u[i] = v;
            du[i] = d1;
            d2u[i] = d2;
        }
    }
    let q: Vec<f64> = u.iter().map(|&v| -geom.big_f(v) / spec.l()).collect();

    let eta_of = |b: &Branch| {
        let (xs, vs) = tail_window(b, h, spec.end_state(b.side), scale);
        log_slope(&xs, &vs).map(f64::abs).unwrap_or(f64::NAN)
    };
    let tail = |b: &Branch, kmax: usize| {
        let sgn = b.side.sign();
        let x_edge = sgn * kmax as f64 * h;
        Tail {
            u_end: spec.end_state(b.side),
            mu: b.mu,
            amp: b.amp * (b.mu * (x_edge - sgn * b.k_start as f64 * h)).exp(),
            x_edge,
        }
    };
    let meta = ProfileMeta {
        h,
        i0,
        subshock: false,
        x_match: 0.0,
        u_star: geom.u_star,
        m: geom.m,
        eta_minus: eta_of(bm),
        eta_plus: eta_of(bp),
        tail_minus: tail(bm, km),
        tail_plus: tail(bp, kp),
        node_series: Some(c),
        u_right_limit: None,
        blend: (xb1, xb2),
    };
    Profile::from_parts(spec.clone(), meta, u, du, d2u, q)
}

fn reconstruct_subshock(
    geom: &FluxGeometry<'_>,
    tp: &PhaseTrajectory,
    tm: &PhaseTrajectory,
    mt: &Match,
    opts: &ProfileOptions,
) -> Result<Profile, ProfileError> {
    let spec = geom.spec();
    let h = opts.h;
    let scale = spec.u_minus() - spec.u_plus();
    let mut branches = Vec::with_capacity(2);
    let mut right_limit = f64::NAN;
    for t in [tm, tp] {
        let side = t.side;
        let mu = geom.saddle_rate(side);
        let x_hat = t.x_at(mt.z_hat).ok_or_else(|| {
            ProfileError::Reconstruction(format!("matching point outside the {side} trajectory"))
        })?;
        let x_launch = -x_hat;
        let k_start = start_node(x_launch, h)?;
        let mut amp = launch_amp(t, mu, x_launch, k_start, h);
        let mut out = None;
        for _ in 0..12 {
            let b = integrate_branch(geom, side, mu, amp, k_start, 0, h)?;
            let (z0, u0) = b.at(0);
            let mismatch = z0 - mt.z_hat;
            let shift = -mismatch / geom.big_f(u0);
            let done = mismatch.abs() <= 1e-15 * scale;
            out = Some(b);
            if done {
                break;
            }
            amp *= (mu * shift).exp();
        }
        let b = out.unwrap();
        if side == Side::Plus {
            right_limit = b.at(0).1;
        }
        branches.push(b);
    }
    let (bm, bp) = (&branches[0], &branches[1]);
    let ext = |b: &Branch| -> usize {
        let a = b.amp.abs();
        if a <= opts.tail_tol {
            0
        } else {
            ((a / opts.tail_tol).ln() / (b.mu.abs() * h)).ceil() as usize
        }
    };
    let (km, kp) = (bm.k_start + ext(bm), bp.k_start + ext(bp));
    let n = km + kp + 1;
    let i0 = km;
    let mut u = vec![0.0; n];
    let mut du = vec![0.0; n];
    let mut d2u = vec![0.0; n];
    for (b, kmax, kmin) in [(bm, km, 0usize), (bp, kp, 1usize)] {
        let sgn = b.side.sign();
        let u_end = spec.end_state(b.side);
        for k in kmin..=kmax {
            let i = (i0 as isize + sgn as isize * k as isize) as usize;
            let x = sgn * k as f64 * h;
            let (v, d1, d2) = if k > b.k_start {
                let d = b.amp * (b.mu * (x - sgn * b.k_start as f64 * h)).exp();
                (u_end + d, b.mu * d, b.mu * b.mu * d)
            } else {
                let (z, uu) = b.at(k);
                let (d1, d2) = derivatives(geom, z, uu);
                (uu, d1, d2)
            };
            u[i] = v;
            du[i] = d1;
            d2u[i] = d2;
        }
    }
    let q: Vec<f64> = u.iter().map(|&v| -geom.big_f(v) / spec.l()).collect();
    let eta_of = |b: &Branch| {
        let (xs, vs) = tail_window(b, h, spec.end_state(b.side), scale);
        log_slope(&xs, &vs).map(f64::abs).unwrap_or(f64::NAN)
    };
    let tail = |b: &Branch, kmax: usize| {
        let sgn = b.side.sign();
        let x_edge = sgn * kmax as f64 * h;
        Tail {
            u_end: spec.end_state(b.side),
            mu: b.mu,
            amp: b.amp * (b.mu * (x_edge - sgn * b.k_start as f64 * h)).exp(),
            x_edge,
        }
    };
    let meta = ProfileMeta {
        h,
        i0,
        subshock: true,
        x_match: 0.0,
        u_star: geom.u_star,
        m: geom.m,
        eta_minus: eta_of(bm),
        eta_plus: eta_of(bp),
        tail_minus: tail(bm, km),
        tail_plus: tail(bp, kp),
        node_series: None,
        u_right_limit: Some(right_limit),
        blend: (0.0, 0.0),
    };
    Profile::from_parts(spec.clone(), meta, u, du, d2u, q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelSpec;

    #[test]
    fn node_series_slope_matches_closed_form() {
        for eps in [0.05, 0.1, 0.2] {
            let spec = ModelSpec::burgers_linear(eps);
            let geom = FluxGeometry::new(&spec).unwrap();
            let c = node_series(&geom, 30).unwrap();
            let expected = (-1.0 + (1.0 - 2.0 * eps * eps).sqrt()) / 2.0;
            assert!((c[1] - expected).abs() < 1e-15, "eps {eps}");
            assert_eq!(c[0], 0.0);
        }
    }

    #[test]
    fn node_series_solves_profile_equation() {
        // (a U')' + L b U' = F(U), checked pointwise from the truncated series.
        let spec = ModelSpec::burgers_cubic_m(0.2);
        let geom = FluxGeometry::new(&spec).unwrap();
        let c = node_series(&geom, 30).unwrap();
        let dc = series::derivative(&c);
        let d2c = series::derivative(&dc);
        for x in [-0.3, -0.05, 0.1, 0.4] {
            let (u, u1, u2) = (series::eval(&c, x), series::eval(&dc, x), series::eval(&d2c, x));
            let lhs = spec.d2f(u) * u1 * u1 + spec.df(u) * u2 + spec.l() * spec.dm(u) * u1;
            assert!((lhs - geom.big_f(u)).abs() < 1e-15, "x = {x}: {}", lhs - geom.big_f(u));
        }
    }

    #[test]
    fn smoothstep_is_c2() {
        let (w0, d0, e0) = smoothstep(0.0);
        let (w1, d1, e1) = smoothstep(1.0);
        assert_eq!((w0, d0, e0), (0.0, 0.0, 0.0));
        assert_eq!((w1, d1, e1), (1.0, 0.0, 0.0));
        let t = 0.37;
        let eps = 1e-6;
        let fd = (smoothstep(t + eps).0 - smoothstep(t - eps).0) / (2.0 * eps);
        assert!((fd - smoothstep(t).1).abs() < 1e-8);
    }
}
