//! Stationary shock profiles `(U, Q)`.
//!
//! The profile is built in the phase plane of `Z`, where `Z' = -LQ = F(U)`
//! and `Z - Z'' = L M(U)`, sampled on the uniform grid `x_i = i h` and
//! normalized so that `a(0) = f'(U(0)) = 0`.

mod build;
mod shoot;
mod verify;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ModelError, ModelSpec, Side};
use crate::series;

pub use build::{node_series, reconstruct_profile};
pub use shoot::{
    match_trajectories, shoot_saddle, shoot_saddle_signed, FluxGeometry, Match, PhasePoint,
    PhaseTrajectory, Terminal,
};
pub use verify::{verify_profile, ProfileReport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("flux geometry: {0}")]
    Geometry(String),
    #[error("shooting ({side} side) failed after {steps} steps at tau = {tau}, Z = {z}, Z' = {zp}: {reason}")]
    Shooting { side: Side, reason: String, tau: f64, z: f64, zp: f64, steps: usize },
    #[error("matching: {0}")]
    Matching(String),
    #[error("reconstruction: {0}")]
    Reconstruction(String),
    #[error("profile normalization: {0}")]
    Normalization(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileOptions {
    /// Output grid spacing.
    pub h: f64,
    /// Absolute tolerance of the phase-plane integration.
    pub atol: f64,
    /// Saddle launch distance relative to `|L M(u-) - L M(u+)|`.
    pub launch_offset: f64,
    /// Node convergence threshold relative to `u- - u+`.
    pub node_tol: f64,
    /// Tails are attached until `|U - u±|` drops below this value.
    pub tail_tol: f64,
    pub max_steps: usize,
    pub max_tau_factor: f64,
    /// Upper bound on the number of Taylor terms at the node.
    pub series_terms: usize,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        ProfileOptions {
            h: 1e-3,
            atol: 1e-11,
            launch_offset: 1e-7,
            node_tol: 1e-9,
            tail_tol: 1e-10,
            max_steps: 2_000_000,
            max_tau_factor: 200.0,
            series_terms: 40,
        }
    }
}

/// Linear exponential tail `U = u± + amp e^{mu (x - x_edge)}` beyond the
/// last stored node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tail {
    pub u_end: f64,
    pub mu: f64,
    pub amp: f64,
    pub x_edge: f64,
}

impl Tail {
    fn eval(&self, x: f64) -> (f64, f64, f64) {
        let d = self.amp * (self.mu * (x - self.x_edge)).exp();
        (self.u_end + d, self.mu * d, self.mu * self.mu * d)
    }
}

/// Everything about a profile except the sampled columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileMeta {
    pub h: f64,
    /// Index of the node at `x = 0`.
    pub i0: usize,
    pub subshock: bool,
    /// Abscissa of the matching point.
    pub x_match: f64,
    pub u_star: f64,
    pub m: f64,
    /// Decay rate measured on the integrated part of each branch.
    pub eta_minus: f64,
    pub eta_plus: f64,
    pub tail_minus: Tail,
    pub tail_plus: Tail,
    /// Taylor coefficients of `U` at `x = 0` (smooth profiles only).
    pub node_series: Option<Vec<f64>>,
    /// Right limit of `U` at `x = 0` when the profile has a jump there.
    pub u_right_limit: Option<f64>,
    /// Half-widths of the Taylor and blending zones around the node.
    pub blend: (f64, f64),
}

/// Sampled profile with `U, U', U''` and `Q` at `x_i = (i - i0) h`.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    spec: ModelSpec,
    meta: ProfileMeta,
    u: Vec<f64>,
    du: Vec<f64>,
    d2u: Vec<f64>,
    q: Vec<f64>,
}

/// Profile quantities at one abscissa.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilePoint {
    pub u: f64,
    pub du: f64,
    pub d2u: f64,
    pub q: f64,
    pub dq: f64,
    pub d2q: f64,
    /// `a = f'(U)`, `da = a'`, `b = M'(U)`.
    pub a: f64,
    pub da: f64,
    pub b: f64,
}

impl Profile {
    /// Builds a profile with default options.
    pub fn build(spec: &ModelSpec) -> Result<Profile, ProfileError> {
        Self::build_with(spec, &ProfileOptions::default())
    }

    pub fn build_with(spec: &ModelSpec, opts: &ProfileOptions) -> Result<Profile, ProfileError> {
        let geom = FluxGeometry::new(spec)?;
        let tp = shoot_saddle(&geom, Side::Plus, opts)?;
        let tm = shoot_saddle(&geom, Side::Minus, opts)?;
        let mt = match_trajectories(&tp, &tm, &geom)?;
        reconstruct_profile(&geom, &tp, &tm, &mt, opts)
    }

    /// Reassembles a profile from exported parts; recomputes nothing.
    pub fn from_parts(
        spec: ModelSpec,
        meta: ProfileMeta,
        u: Vec<f64>,
        du: Vec<f64>,
        d2u: Vec<f64>,
        q: Vec<f64>,
    ) -> Result<Profile, ProfileError> {
        let n = u.len();
        if du.len() != n || d2u.len() != n || q.len() != n || meta.i0 >= n {
            return Err(ProfileError::Reconstruction("inconsistent column lengths".into()));
        }
        Ok(Profile { spec, meta, u, du, d2u, q })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }
    pub fn meta(&self) -> &ProfileMeta {
        &self.meta
    }
    pub fn h(&self) -> f64 {
        self.meta.h
    }
    pub fn len(&self) -> usize {
        self.u.len()
    }
    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }
    pub fn i0(&self) -> usize {
        self.meta.i0
    }
    pub fn subshock(&self) -> bool {
        self.meta.subshock
    }
    pub fn x(&self, i: usize) -> f64 {
        (i as f64 - self.meta.i0 as f64) * self.meta.h
    }
    pub fn x_min(&self) -> f64 {
        self.x(0)
    }
    pub fn x_max(&self) -> f64 {
        self.x(self.len() - 1)
    }
    pub fn xs(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.x(i)).collect()
    }
    pub fn u(&self) -> &[f64] {
        &self.u
    }
    pub fn du(&self) -> &[f64] {
        &self.du
    }
    pub fn d2u(&self) -> &[f64] {
        &self.d2u
    }
    pub fn q(&self) -> &[f64] {
        &self.q
    }
    pub fn node_series(&self) -> Option<&[f64]> {
        self.meta.node_series.as_deref()
    }
    pub fn tail(&self, side: Side) -> &Tail {
        match side {
            Side::Plus => &self.meta.tail_plus,
            Side::Minus => &self.meta.tail_minus,
        }
    }
    /// Theoretical tail rate `|mu|` of the saddle at `u±`.
    pub fn eta(&self, side: Side) -> f64 {
        self.tail(side).mu.abs()
    }
    pub fn eta_measured(&self, side: Side) -> f64 {
        match side {
            Side::Plus => self.meta.eta_plus,
            Side::Minus => self.meta.eta_minus,
        }
    }

    /// Smallest half-width with `|U - u±| < tol` on both sides, using the tails
    /// beyond the stored grid.
    pub fn x_infinity(&self, tol: f64) -> f64 {
        let reach = |t: &Tail| {
            if t.amp.abs() <= tol {
                t.x_edge.abs()
            } else {
                t.x_edge.abs() + (t.amp.abs() / tol).ln() / t.mu.abs()
            }
        };
        reach(&self.meta.tail_plus).max(reach(&self.meta.tail_minus))
    }

    /// `(U, U', U'')` at any abscissa: Hermite interpolation on the grid and
    /// the exponential tails outside it.
    pub fn eval_u(&self, x: f64) -> (f64, f64, f64) {
        let h = self.meta.h;
        let s = x / h + self.meta.i0 as f64;
        if s <= 0.0 {
            return self.meta.tail_minus.eval(x);
        }
        let last = self.len() - 1;
        if s >= last as f64 {
            return self.meta.tail_plus.eval(x);
        }
        let i = (s.floor() as usize).min(last - 1);
        let t = s - i as f64;
        if let Some(ur) = self.meta.u_right_limit {
            // Keep the two sides of a jump apart.
            if i == self.meta.i0 {
                return self.one_sided_right(i, t, ur);
            }
        }
        let (u0, u1, d0, d1, e0, e1) = (
            self.u[i],
            self.u[i + 1],
            self.du[i],
            self.du[i + 1],
            self.d2u[i],
            self.d2u[i + 1],
        );
        let (u, _) = hermite(t, h, u0, d0, u1, d1);
        let (du, d2u) = hermite(t, h, d0, e0, d1, e1);
        (u, du, d2u)
    }

    fn one_sided_right(&self, i: usize, t: f64, _ur: f64) -> (f64, f64, f64) {
        // Linear extrapolation from the right neighbour inside the jump cell.
        let h = self.meta.h;
        let dx = (t - 1.0) * h;
        let j = i + 1;
        (
            self.u[j] + self.du[j] * dx + 0.5 * self.d2u[j] * dx * dx,
            self.du[j] + self.d2u[j] * dx,
            self.d2u[j],
        )
    }

    pub fn eval(&self, x: f64) -> ProfilePoint {
        let (u, du, d2u) = self.eval_u(x);
        self.point(u, du, d2u)
    }

    /// Profile quantities at node `i`.
    pub fn at(&self, i: usize) -> ProfilePoint {
        self.point(self.u[i], self.du[i], self.d2u[i])
    }

    fn point(&self, u: f64, du: f64, d2u: f64) -> ProfilePoint {
        let s = &self.spec;
        let a = s.df(u);
        let da = s.d2f(u) * du;
        let l = s.l();
        let f_end = 0.5 * (s.f(s.u_plus()) + s.f(s.u_minus()));
        ProfilePoint {
            u,
            du,
            d2u,
            q: (f_end - s.f(u)) / l,
            dq: -a * du / l,
            d2q: -(da * du + a * d2u) / l,
            a,
            da,
            b: s.dm(u),
        }
    }

    /// Taylor coefficients of `a`, `b` about `x = 0`, truncated to `n` terms.
    pub fn coefficient_series(&self, n: usize) -> Option<(Vec<f64>, Vec<f64>)> {
        let c = self.node_series()?;
        let s = &self.spec;
        let u0 = c[0];
        let mut dev = c.to_vec();
        dev[0] = 0.0;
        let df = series::shift(s.df_poly().coeffs(), u0);
        let dm = series::shift(s.dm_poly().coeffs(), u0);
        Some((series::compose(&df, &dev, n), series::compose(&dm, &dev, n)))
    }
}

/// Cubic Hermite value and derivative at fraction `t` of a cell of width `h`.
fn hermite(t: f64, h: f64, y0: f64, d0: f64, y1: f64, d1: f64) -> (f64, f64) {
    let t2 = t * t;
    let t3 = t2 * t;
    let v = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
        + (t3 - 2.0 * t2 + t) * h * d0
        + (-2.0 * t3 + 3.0 * t2) * y1
        + (t3 - t2) * h * d1;
    let d = ((6.0 * t2 - 6.0 * t) * y0 + (-6.0 * t2 + 6.0 * t) * y1) / h
        + (3.0 * t2 - 4.0 * t + 1.0) * d0
        + (3.0 * t2 - 2.0 * t) * d1;
    (v, d)
}

/// Samples `a_i = f'(U_i)` and `b_i = M'(U_i)` and checks that `a` changes
/// sign exactly once, at `x = 0`.
pub fn coefficient_functions(
    spec: &ModelSpec,
    profile: &Profile,
) -> Result<(Vec<f64>, Vec<f64>), ProfileError> {
    let a: Vec<f64> = profile.u().iter().map(|&u| spec.df(u)).collect();
    let b: Vec<f64> = profile.u().iter().map(|&u| spec.dm(u)).collect();
    // Sign changes between consecutive nonzero values of a.
    let mut changes = Vec::new();
    let mut prev: Option<(usize, f64)> = None;
    for (i, &v) in a.iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        if let Some((j, s)) = prev {
            if s != v.signum() {
                changes.push((j, i));
            }
        }
        prev = Some((i, v.signum()));
    }
    if changes.len() != 1 {
        return Err(ProfileError::Normalization(format!(
            "a = f'(U) changes sign {} times",
            changes.len()
        )));
    }
    let i0 = profile.i0();
    let (j, k) = changes[0];
    if i0 < j || i0 > k {
        return Err(ProfileError::Normalization(format!(
            "a changes sign between nodes {j} and {k}, not at x = 0 (node {i0})"
        )));
    }
    Ok((a, b))
}
