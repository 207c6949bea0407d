//! Phase-plane construction: branch inverses of the reduced flux, saddle
//! shooting in the desingularized time and matching of the two branches.

use serde::{Deserialize, Serialize};

use super::{ProfileError, ProfileOptions};
use crate::model::{ModelSpec, Side};
use crate::ode::{Dp45, ErrorNorm};

/// Geometry of `F(u) = f(u) - f(u±)` between the end states.
#[derive(Debug, Clone)]
pub struct FluxGeometry<'a> {
    spec: &'a ModelSpec,
    pub u_star: f64,
    pub m: f64,
    pub f_end: f64,
}

impl<'a> FluxGeometry<'a> {
    pub fn new(spec: &'a ModelSpec) -> Result<Self, ProfileError> {
        if spec.u_plus() >= spec.u_minus() {
            return Err(ProfileError::Geometry(format!(
                "end states violate u_plus < u_minus ({} >= {})",
                spec.u_plus(),
                spec.u_minus()
            )));
        }
        let u_star = spec.sonic_point().map_err(|e| ProfileError::Geometry(e.to_string()))?;
        let f_end = 0.5 * (spec.f(spec.u_plus()) + spec.f(spec.u_minus()));
        let m = f_end - spec.f(u_star);
        if !(m > 0.0) {
            return Err(ProfileError::Geometry(format!("flux drop m = {m} is not positive")));
        }
        Ok(FluxGeometry { spec, u_star, m, f_end })
    }

    pub fn spec(&self) -> &ModelSpec {
        self.spec
    }

    /// `F(u) = f(u) - f(u±)`.
    pub fn big_f(&self, u: f64) -> f64 {
        self.spec.f(u) - self.f_end
    }

    /// Inverse of `F` on the branch `[u_plus, u_star]`.
    pub fn h_plus(&self, y: f64) -> f64 {
        self.branch_inverse(y, self.spec.u_plus(), self.u_star)
    }

    /// Inverse of `F` on the branch `[u_star, u_minus]`.
    pub fn h_minus(&self, y: f64) -> f64 {
        self.branch_inverse(y, self.u_star, self.spec.u_minus())
    }

    /// Inverse of `u -> L M(u)`.
    pub fn big_h(&self, z: f64) -> f64 {
        self.spec.lm_inverse(z)
    }

    fn branch_inverse(&self, y: f64, lo: f64, hi: f64) -> f64 {
        let g = |u: f64| self.big_f(u) - y;
        let (mut a, mut b) = (lo, hi);
        let (ga, gb) = (g(a), g(b));
        if ga == 0.0 {
            return a;
        }
        if gb == 0.0 {
            return b;
        }
        if ga.signum() == gb.signum() {
            // Outside the branch range: clamp to the closer endpoint.
            return if ga.abs() < gb.abs() { a } else { b };
        }
        let increasing = gb > ga;
        let mut u = 0.5 * (a + b);
        for _ in 0..200 {
            let gu = g(u);
            if gu == 0.0 {
                return u;
            }
            if (gu > 0.0) == increasing {
                b = u;
            } else {
                a = u;
            }
            let d = self.spec.df(u);
            let mut next = if d != 0.0 { u - gu / d } else { f64::NAN };
            if !(next > a && next < b) {
                next = 0.5 * (a + b);
            }
            if (next - u).abs() <= 2.0 * f64::EPSILON * u.abs().max(f64::MIN_POSITIVE) || b - a <= f64::EPSILON * u.abs() {
                return next;
            }
            u = next;
        }
        u
    }

    /// Saddle eigenvalue at the end state that governs the profile tail:
    /// negative on the plus side, positive on the minus side.
    pub fn saddle_rate(&self, side: Side) -> f64 {
        let u = self.spec.end_state(side);
        let c = self.spec.l() * self.spec.dm(u) / self.spec.df(u);
        let disc = (c * c + 4.0).sqrt();
        match side {
            Side::Plus => 0.5 * (-c - disc),
            Side::Minus => 0.5 * (-c + disc),
        }
    }

    /// Node eigenvalues `(slow, fast)` of the desingularized system at
    /// `(L M(u*), u*)`; both negative.
    pub fn node_rates(&self) -> Result<(f64, f64), ProfileError> {
        let lm1 = self.spec.l() * self.spec.dm(self.u_star);
        let f2 = self.spec.d2f(self.u_star);
        let disc = lm1 * lm1 - 4.0 * self.m * f2;
        if disc <= 0.0 {
            return Err(ProfileError::Geometry(format!(
                "degenerate node at u* (discriminant {disc:e}); profile is not monotone"
            )));
        }
        let s = disc.sqrt();
        // Stable formulas for both roots of nu^2 + lm1 nu + m f2 = 0.
        let fast = -0.5 * (lm1 + s);
        let slow = self.m * f2 / fast;
        Ok((slow, fast))
    }
}

/// One sample of a phase-plane trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub tau: f64,
    pub z: f64,
    /// `Z' = F(U)`.
    pub zp: f64,
    pub u: f64,
    pub x: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Terminal {
    /// Converged to the node `(L M(u*), -m)`.
    Node,
    /// Reached `U = u*` away from the node.
    Crossing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseTrajectory {
    pub side: Side,
    pub samples: Vec<PhasePoint>,
    pub terminal: Terminal,
    /// Terminal point `(Z, Z')`, with `Z' = -m`.
    pub terminal_z: f64,
    pub terminal_zp: f64,
    /// Abscissa of the terminal point in the trajectory's own `x` frame.
    pub terminal_x: f64,
    /// Launch offset `U - u±` at `x = 0` of the trajectory frame.
    pub launch_du: f64,
}

impl PhaseTrajectory {
    /// `Z'` as a function of `Z` by linear interpolation.
    pub fn phi(&self, z: f64) -> Option<f64> {
        interp_by_z(&self.samples, z, |p| p.zp)
    }

    /// Trajectory abscissa at a given `Z`.
    pub fn x_at(&self, z: f64) -> Option<f64> {
        interp_by_z(&self.samples, z, |p| p.x)
    }
}

fn interp_by_z(s: &[PhasePoint], z: f64, g: impl Fn(&PhasePoint) -> f64) -> Option<f64> {
    for w in s.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let (lo, hi) = if a.z <= b.z { (a.z, b.z) } else { (b.z, a.z) };
        if z >= lo && z <= hi {
            if hi == lo {
                return Some(g(a));
            }
            let t = (z - a.z) / (b.z - a.z);
            return Some(g(a) + t * (g(b) - g(a)));
        }
    }
    None
}

/// Shoots from the saddle `(L M(u±), u±)` along its unstable manifold
/// towards `U = u*`.
pub fn shoot_saddle(
    geom: &FluxGeometry<'_>,
    side: Side,
    opts: &ProfileOptions,
) -> Result<PhaseTrajectory, ProfileError> {
    shoot_saddle_signed(geom, side, 1.0, opts)
}

/// As [`shoot_saddle`]; `sign = -1` launches along the opposite half of the
/// eigendirection.
pub fn shoot_saddle_signed(
    geom: &FluxGeometry<'_>,
    side: Side,
    sign: f64,
    opts: &ProfileOptions,
) -> Result<PhaseTrajectory, ProfileError> {
    let spec = geom.spec;
    let u_end = spec.end_state(side);
    let lm_end = spec.lm(u_end);
    let mu = geom.saddle_rate(side);
    let delta = opts.launch_offset * (spec.lm(spec.u_minus()) - spec.lm(spec.u_plus())).abs();
    // Along (1, mu) in (Z, Z'): Z' = mu dZ < 0.
    let dz = -mu.signum() * sign * delta;
    let du = mu * dz / spec.df(u_end);
    let u_star = geom.u_star;
    let amp = spec.u_minus() - spec.u_plus();
    let node_tol = opts.node_tol * amp;
    let strip_tol = 1e-14 * geom.m;

    let mut rhs = |_t: f64, y: &[f64], dy: &mut [f64]| {
        let (z, u) = (y[0], y[1]);
        let a = spec.df(u);
        dy[0] = a * geom.big_f(u);
        dy[1] = z - spec.lm(u);
        dy[2] = a;
    };
    let y0 = [lm_end + dz, u_end + du, 0.0];
    let tau_scale = 1.0 / (spec.df(u_end) * mu).abs();
    let mut st = Dp45::new(
        &mut rhs,
        0.0,
        &y0,
        0.05 * tau_scale,
        ErrorNorm::Mixed { atol: opts.atol, rtol: opts.atol },
    );
    st.h_min = 1e-12 * tau_scale;
    let point = |tau: f64, y: &[f64]| PhasePoint { tau, z: y[0], zp: geom.big_f(y[1]), u: y[1], x: y[2] };
    let mut samples = vec![point(0.0, &y0)];
    let shoot_err = |reason: String, p: &PhasePoint, steps: usize| ProfileError::Shooting {
        side,
        reason,
        tau: p.tau,
        z: p.z,
        zp: p.zp,
        steps,
    };
    if samples[0].zp > strip_tol {
        return Err(shoot_err("launch leaves the strip -m <= Z' <= 0 upwards".into(), &samples[0], 0));
    }
    // Sign of U - u* along the branch before termination.
    let branch = match side {
        Side::Plus => -1.0,
        Side::Minus => 1.0,
    };
    let node_scale = geom.node_rates().map(|(slow, _)| 1.0 / slow.abs()).unwrap_or(0.0);
    let tau_max = opts.max_tau_factor * tau_scale.max(node_scale);
    for steps in 1..=opts.max_steps {
        st.step(&mut rhs, tau_max).map_err(|e| {
            shoot_err(format!("integrator failure: {e}"), samples.last().unwrap(), steps)
        })?;
        let p = point(st.t(), st.y());
        if p.zp > strip_tol {
            return Err(shoot_err("trajectory leaves the strip -m <= Z' <= 0 upwards".into(), &p, steps));
        }
        if (p.u - u_star) * branch <= 0.0 {
            // Crossed U = u*; locate the crossing on the dense output.
            let (mut a, mut b) = (st.t_prev(), st.t());
            let mut buf = [0.0; 3];
            for _ in 0..100 {
                let mid = 0.5 * (a + b);
                st.dense(mid, &mut buf);
                if (buf[1] - u_star) * branch > 0.0 {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            st.dense(b, &mut buf);
            buf[1] = u_star;
            let pc = point(b, &buf);
            samples.push(pc);
            let near_node = (pc.z - spec.lm(u_star)).abs() <= opts.node_tol * delta.max(geom.m);
            return Ok(PhaseTrajectory {
                side,
                terminal: if near_node { Terminal::Node } else { Terminal::Crossing },
                terminal_z: if near_node { spec.lm(u_star) } else { pc.z },
                terminal_zp: -geom.m,
                terminal_x: pc.x,
                samples,
                launch_du: du,
            });
        }
        samples.push(p);
        if (p.u - u_star).abs() < node_tol {
            // Remaining displacement to the node along the slow direction.
            let (slow, _) = geom.node_rates()?;
            let c1 = slow / spec.d2f(u_star);
            return Ok(PhaseTrajectory {
                side,
                terminal: Terminal::Node,
                terminal_z: spec.lm(u_star),
                terminal_zp: -geom.m,
                terminal_x: p.x - (p.u - u_star) / c1,
                samples,
                launch_du: du,
            });
        }
        if st.t() >= tau_max {
            break;
        }
    }
    Err(shoot_err(
        "trajectory did not reach Z' = -m within budget".into(),
        samples.last().unwrap(),
        opts.max_steps,
    ))
}

/// Intersection of the two branch graphs in the `(Z, Z')` plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Match {
    pub z_hat: f64,
    pub y_hat: f64,
    pub subshock: bool,
}

/// Locates the intersection of `Z' = phi_+(Z)` and `Z' = phi_-(Z)`.
///
/// Two trajectories that both converge to the node meet there and yield a
/// smooth profile; an interior intersection above `Z' = -m` produces a jump.
pub fn match_trajectories(
    tp: &PhaseTrajectory,
    tm: &PhaseTrajectory,
    geom: &FluxGeometry<'_>,
) -> Result<Match, ProfileError> {
    if tp.side == tm.side {
        return Err(ProfileError::Matching(format!(
            "both trajectories are on the {} side; no transversal intersection",
            tp.side
        )));
    }
    let (tp, tm) = if tp.side == Side::Plus { (tp, tm) } else { (tm, tp) };
    let scale = (geom.spec.lm(geom.spec.u_minus()) - geom.spec.lm(geom.spec.u_plus())).abs();
    let tol = 1e-9 * scale;
    let (zl, zr) = (tm.terminal_z, tp.terminal_z);
    if zl > zr + tol {
        return Err(ProfileError::Matching(format!(
            "branch graphs do not overlap: Z_minus terminal {zl} > Z_plus terminal {zr}"
        )));
    }
    if zr - zl <= tol {
        return Ok(Match { z_hat: 0.5 * (zl + zr), y_hat: -geom.m, subshock: false });
    }
    let diff = |z: f64| -> Result<f64, ProfileError> {
        match (tp.phi(z), tm.phi(z)) {
            (Some(a), Some(b)) => Ok(a - b),
            _ => Err(ProfileError::Matching(format!("Z = {z} outside a branch graph"))),
        }
    };
    let (mut a, mut b) = (zl, zr);
    let (da, db) = (diff(a)?, diff(b)?);
    if da.signum() == db.signum() {
        return Err(ProfileError::Matching("graphs do not cross on the overlap".into()));
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if diff(mid)?.signum() == da.signum() {
            a = mid;
        } else {
            b = mid;
        }
    }
    let z_hat = 0.5 * (a + b);
    let y_hat = tp.phi(z_hat).unwrap();
    Ok(Match { z_hat, y_hat, subshock: y_hat > -geom.m + 1e-9 * geom.m })
}
