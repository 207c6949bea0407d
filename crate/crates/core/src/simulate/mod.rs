//! Nonlinear time integration of the full system around a profile, with
//! shock tracking, decay-rate fits and energy diagnostics.

pub mod analysis;
pub mod scheme;
pub mod track;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use analysis::{fit_power_law, DampingCheck, EnergyOptions, PowerFit};
pub use scheme::{Boundary, Grid, Scheme};
pub use track::{track_shock_location, Tracking};

use crate::model::Side;
use crate::profile::Profile;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("time step {dt} exceeds the CFL limit {max}")]
    Cfl { dt: f64, max: f64 },
    #[error("shock tracking: {0}")]
    Tracking(String),
    #[error("perturbation guard tripped at t = {t}: sup |ũ - U| = {sup} > {limit}")]
    Guard { t: f64, sup: f64, limit: f64 },
    #[error("profile: {0}")]
    Profile(String),
}

/// Shape of the initial perturbation, scaled by the amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialData {
    Gaussian { center: f64, width: f64 },
    /// Gaussian centred `lead |a-| T` upstream of the shock, so that its
    /// diffusion wave is still approaching the shock at `t = T`.
    UpstreamGaussian { lead: f64, width: f64 },
    /// Smooth compactly supported bump `exp(1 - 1/(1 - r²))`.
    Bump { center: f64, width: f64 },
    /// Multiple of `U'`, normalized to unit maximum.
    Translation,
    /// Gaussians at `±center`, with opposite signs when `odd`.
    Pair { center: f64, width: f64, odd: bool },
    /// `count` Gaussians with centres in `[-spread, spread]` and random signs.
    Random { count: usize, spread: f64, width: f64 },
}

impl Default for InitialData {
    fn default() -> Self {
        InitialData::UpstreamGaussian { lead: 1.5, width: 2.0 }
    }
}

impl InitialData {
    /// Replaces placements relative to the run length by absolute ones.
    pub fn resolve(&self, profile: &Profile, t_final: f64) -> InitialData {
        match *self {
            InitialData::UpstreamGaussian { lead, width } => {
                let spec = profile.spec();
                let a = spec.df(spec.u_minus()).abs();
                InitialData::Gaussian { center: -lead * a * t_final, width }
            }
            other => other,
        }
    }

    /// Unit-amplitude shape sampled at `xs`. Placements relative to the run
    /// length are taken at `T = 0` unless [`resolve`](Self::resolve)d first.
    pub fn shape(&self, xs: &[f64], profile: &Profile, seed: u64) -> Vec<f64> {
        let gauss = |x: f64, c: f64, w: f64| (-((x - c) / w).powi(2)).exp();
        match *self {
            InitialData::Gaussian { center, width } => xs.iter().map(|&x| gauss(x, center, width)).collect(),
            InitialData::UpstreamGaussian { .. } => self.resolve(profile, 0.0).shape(xs, profile, seed),
            InitialData::Bump { center, width } => xs
                .iter()
                .map(|&x| {
                    let r = (x - center) / width;
                    if r.abs() < 1.0 {
                        (1.0 - 1.0 / (1.0 - r * r)).exp()
                    } else {
                        0.0
                    }
                })
                .collect(),
            InitialData::Translation => {
                let d: Vec<f64> = xs.iter().map(|&x| profile.eval_u(x).1).collect();
                let m = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                d.iter().map(|v| v / m).collect()
            }
            InitialData::Pair { center, width, odd } => {
                let s = if odd { -1.0 } else { 1.0 };
                xs.iter().map(|&x| gauss(x, -center, width) + s * gauss(x, center, width)).collect()
            }
            InitialData::Random { count, spread, width } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let bumps: Vec<(f64, f64)> = (0..count)
                    .map(|_| {
                        let c = rng.gen_range(-spread..=spread);
                        let s = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                        (c, s)
                    })
                    .collect();
                xs.iter().map(|&x| bumps.iter().map(|&(c, s)| s * gauss(x, c, width)).sum()).collect()
            }
        }
    }

    /// Largest distance from the origin at which the shape is non-negligible.
    fn reach(&self) -> f64 {
        match *self {
            InitialData::Gaussian { center, width } => center.abs() + 6.0 * width,
            InitialData::UpstreamGaussian { width, .. } => 6.0 * width,
            InitialData::Bump { center, width } => center.abs() + width,
            InitialData::Translation => 0.0,
            InitialData::Pair { center, width, .. } => center.abs() + 6.0 * width,
            InitialData::Random { spread, width, .. } => spread + 6.0 * width,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimOptions {
    pub h: f64,
    pub t_final: f64,
    pub cfl: f64,
    /// Logging and re-centering interval.
    pub dt_log: f64,
    /// Perturbation amplitude relative to `|u- - u+|`.
    pub amplitude: f64,
    pub initial: InitialData,
    /// Domain half-width; by default `max(4 max|a±| T, 10/η)` plus the
    /// reach of the initial data.
    pub x_dom: Option<f64>,
    pub energy: EnergyOptions,
    /// Abort once `sup |ũ - U|` exceeds this fraction of `|u- - u+|`.
    pub guard: f64,
    /// Fits use `t ∈ [fit_start T, T]`.
    pub fit_start: f64,
    pub seed: u64,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            h: 0.02,
            t_final: 400.0,
            cfl: 0.45,
            dt_log: 1.0,
            amplitude: 1e-2,
            initial: InitialData::default(),
            x_dom: None,
            energy: EnergyOptions::default(),
            guard: 0.25,
            fit_start: 0.25,
            seed: 0,
        }
    }
}

/// Diagnostics at one logging time, for the perturbation
/// `u(x) = ũ(x + α) - U(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeSample {
    pub t: f64,
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
    pub alpha: f64,
    pub alpha_mass: f64,
    pub alpha_dot: f64,
    pub energy: f64,
    pub energy_rate: f64,
    pub h1_sq: f64,
    pub q_l2: f64,
    pub ux_l2: f64,
    /// `Σ ũ h` over the domain.
    pub mass: f64,
    /// `sup |ũ - U|` without re-centering.
    pub linf_raw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub fit_window: (f64, f64),
    pub l1: Option<PowerFit>,
    pub l2: Option<PowerFit>,
    pub linf: Option<PowerFit>,
    pub alpha_dot: Option<PowerFit>,
    pub sup_alpha: f64,
    pub final_alpha: f64,
    pub final_alpha_mass: f64,
    /// `‖u(T)‖_∞ / ‖u(0)‖_∞`.
    pub linf_reduction: f64,
    /// `2 ‖u(0)‖_{L¹} / |u- - u+|`, the bound used for `sup |α|`.
    pub alpha_bound: f64,
}

/// Tolerance bands for fitted exponents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecayBands {
    pub linf: (f64, f64),
    pub l2: (f64, f64),
    pub alpha_dot: (f64, f64),
}

impl Default for DecayBands {
    fn default() -> Self {
        DecayBands { linf: (0.35, 0.65), l2: (0.13, 0.37), alpha_dot: (0.35, 0.65) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandCheck {
    pub exponent: Option<f64>,
    pub band: (f64, f64),
    pub pass: bool,
}

impl BandCheck {
    fn new(fit: Option<PowerFit>, band: (f64, f64)) -> Self {
        let exponent = fit.map(|f| f.exponent);
        let pass = exponent.is_some_and(|p| p >= band.0 && p <= band.1);
        BandCheck { exponent, band, pass }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandReport {
    pub linf: BandCheck,
    pub l2: BandCheck,
    pub alpha_dot: BandCheck,
    pub alpha_bounded: bool,
    pub pass: bool,
}

impl DecayReport {
    pub fn check(&self, bands: &DecayBands) -> BandReport {
        let linf = BandCheck::new(self.linf, bands.linf);
        let l2 = BandCheck::new(self.l2, bands.l2);
        let alpha_dot = BandCheck::new(self.alpha_dot, bands.alpha_dot);
        let alpha_bounded = self.sup_alpha.is_finite() && self.sup_alpha <= self.alpha_bound;
        let pass = linf.pass && l2.pass && alpha_dot.pass && alpha_bounded;
        BandReport { linf, l2, alpha_dot, alpha_bounded, pass }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub k: usize,
    pub options: EnergyOptions,
    pub damping: DampingCheck,
    /// Range of `E / |u|²_{H^k}` over the run.
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub warnings: Vec<String>,
}

/// `|q|_{L²} ≤ C |u_x|_{L²}` with `C` fixed at `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlavingReport {
    pub c0: f64,
    pub max_ratio: f64,
    /// `max_ratio / c0`.
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub grid: Grid,
    pub steps: usize,
    pub samples: Vec<TimeSample>,
    pub decay: DecayReport,
    pub energy: EnergyReport,
    pub slaving: SlavingReport,
    pub max_elliptic_residual: f64,
    /// Largest `|Δ mass + ∫ outflow dt|` over one step.
    pub max_conservation_defect: f64,
}

fn default_x_dom(profile: &Profile, opts: &SimOptions) -> f64 {
    let spec = profile.spec();
    let amax = spec.df(spec.u_minus()).abs().max(spec.df(spec.u_plus()).abs());
    let eta = profile.eta(Side::Minus).min(profile.eta(Side::Plus));
    let scale = (spec.u_minus() - spec.u_plus()).abs();
    let initial = opts.initial.resolve(profile, opts.t_final);
    (4.0 * amax * opts.t_final).max(10.0 / eta).max(profile.x_infinity(1e-12 * scale)) + initial.reach()
}

/// Energy options actually used: derivatives above first order need
/// `h <= 1 / (20 η)`.
fn resolved_energy(profile: &Profile, opts: &SimOptions, warnings: &mut Vec<String>) -> EnergyOptions {
    let eta = profile.eta(Side::Minus).max(profile.eta(Side::Plus));
    let tail = 1.0 / eta;
    let mut e = opts.energy;
    if e.k > 1 && opts.h > tail / 20.0 {
        warnings.push(format!(
            "h = {} does not resolve derivatives of order {} on the tail scale {tail:.3}; using k = 1",
            opts.h, e.k
        ));
        e.k = 1;
    }
    e
}

/// Simulation state: the grid field `ũ` and its time.
#[derive(Debug, Clone)]
pub struct SimState {
    pub t: f64,
    pub u: Vec<f64>,
    pub alpha: f64,
}

/// Runs the perturbed profile to `t_final`.
pub fn run(profile: &Profile, opts: &SimOptions) -> Result<RunReport, SimError> {
    if profile.subshock() {
        return Err(SimError::Profile("profile has a subshock".into()));
    }
    if !(opts.h > 0.0 && opts.t_final > 0.0 && opts.dt_log > 0.0) {
        return Err(SimError::Config("h, t_final and dt_log must be positive".into()));
    }
    if opts.t_final * (1.0 - opts.fit_start) < 4.0 * opts.dt_log {
        return Err(SimError::Config(format!(
            "t_final = {} leaves fewer than four logged samples in the fit window",
            opts.t_final
        )));
    }
    if !(1..=4).contains(&opts.energy.k) {
        return Err(SimError::Config(format!("energy order k = {} outside 1..=4", opts.energy.k)));
    }
    let mut warnings = Vec::new();
    let opts = &SimOptions { energy: resolved_energy(profile, opts, &mut warnings), ..*opts };
    let spec = profile.spec().clone();
    let scale = (spec.u_minus() - spec.u_plus()).abs();
    let x_dom = opts.x_dom.unwrap_or_else(|| default_x_dom(profile, opts));
    let grid = Grid::new(x_dom, opts.h);
    let scheme = Scheme::new(&spec, grid);
    let xs = grid.xs();
    let shape = opts.initial.resolve(profile, opts.t_final).shape(&xs, profile, opts.seed);
    let amp = opts.amplitude * scale;
    let mut state = SimState {
        t: 0.0,
        u: xs.iter().zip(&shape).map(|(&x, s)| profile.eval_u(x).0 + amp * s).collect(),
        alpha: 0.0,
    };

    let mut samples = Vec::new();
    let mut max_res = 0.0f64;
    let mut max_defect = 0.0f64;
    let mut steps = 0usize;
    let n_logs = (opts.t_final / opts.dt_log).round() as usize;
    let mut prev: Option<TimeSample> = None;
    for k in 0..=n_logs {
        let t_log = (k as f64 * opts.dt_log).min(opts.t_final);
        while state.t < t_log {
            let dt = scheme.max_dt(&state.u, opts.cfl).min(t_log - state.t);
            let (next, outflow) = scheme.step_with_outflow(&state.u, dt, opts.cfl)?;
            let change: f64 = next.iter().zip(&state.u).map(|(a, b)| a - b).sum::<f64>() * grid.h;
            max_defect = max_defect.max((change + outflow).abs());
            state.u = next;
            state.t = if t_log - state.t <= dt { t_log } else { state.t + dt };
            steps += 1;
        }
        let s = diagnose(profile, &scheme, &state, opts, prev.as_ref(), &mut max_res)?;
        state.alpha = s.alpha;
        prev = Some(s);
        samples.push(s);
    }
    let mut report = finish(grid, steps, samples, opts, max_res, max_defect, warnings)?;
    report.decay.alpha_bound = 2.0 * report.samples[0].l1 / scale;
    report.energy.k = opts.energy.k;
    Ok(report)
}

fn diagnose(
    profile: &Profile,
    scheme: &Scheme,
    state: &SimState,
    opts: &SimOptions,
    prev: Option<&TimeSample>,
    max_res: &mut f64,
) -> Result<TimeSample, SimError> {
    let grid = scheme.grid;
    let h = grid.h;
    let spec = profile.spec();
    let limit = opts.guard * (spec.u_minus() - spec.u_plus()).abs();
    let linf_raw = state
        .u
        .iter()
        .enumerate()
        .fold(0.0f64, |m, (i, &u)| m.max((u - profile.eval_u(grid.x(i)).0).abs()));
    if !(linf_raw <= limit) {
        return Err(SimError::Guard { t: state.t, sup: linf_raw, limit });
    }
    let tr = track_shock_location(&state.u, &grid, profile, state.alpha, 2.0 + 0.5 * opts.dt_log)?;
    let alpha = tr.alpha;
    let q = scheme.elliptic_solve(&state.u);
    *max_res = max_res.max(scheme.elliptic_residual(&state.u, &q));
    let mut v = Vec::with_capacity(grid.n);
    let mut qv = Vec::with_capacity(grid.n);
    for (i, (&u, &qq)) in state.u.iter().zip(&q).enumerate() {
        let pt = profile.eval(grid.x(i) - alpha);
        v.push(u - pt.u);
        qv.push(qq - pt.q);
    }
    let a_hat: Vec<f64> = state.u.iter().map(|&u| profile.spec().df(u)).collect();
    let l1 = v.iter().map(|x| x.abs()).sum::<f64>() * h;
    let l2 = (v.iter().map(|x| x * x).sum::<f64>() * h).sqrt();
    let linf = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let ux_l2 = (v.windows(2).map(|p| ((p[1] - p[0]) / h).powi(2)).sum::<f64>() * h).sqrt();
    let q_l2 = (qv.iter().map(|x| x * x).sum::<f64>() * h).sqrt();
    let energy = analysis::energy(&v, &a_hat, h, &opts.energy);
    let h1_sq = analysis::hk_norm_sq(&v, h, opts.energy.k);
    let alpha_dot = match prev {
        Some(p) if state.t > p.t => (alpha - p.alpha) / (state.t - p.t),
        _ => 0.0,
    };
    Ok(TimeSample {
        t: state.t,
        l1,
        l2,
        linf,
        alpha,
        alpha_mass: tr.alpha_mass,
        alpha_dot,
        energy,
        energy_rate: 0.0,
        h1_sq,
        q_l2,
        ux_l2,
        mass: state.u.iter().sum::<f64>() * h,
        linf_raw,
    })
}

fn finish(
    grid: Grid,
    steps: usize,
    mut samples: Vec<TimeSample>,
    opts: &SimOptions,
    max_res: f64,
    max_defect: f64,
    warnings: Vec<String>,
) -> Result<RunReport, SimError> {
    let ts: Vec<f64> = samples.iter().map(|s| s.t).collect();
    let alphas: Vec<f64> = samples.iter().map(|s| s.alpha).collect();
    let adot = analysis::derivative(&ts, &alphas);
    let es: Vec<f64> = samples.iter().map(|s| s.energy).collect();
    let de = analysis::derivative(&ts, &es);
    for (i, s) in samples.iter_mut().enumerate() {
        s.alpha_dot = adot[i];
        s.energy_rate = de[i];
    }
    let t0 = opts.fit_start * opts.t_final;
    let t1 = opts.t_final;
    let col = |f: fn(&TimeSample) -> f64| samples.iter().map(f).collect::<Vec<f64>>();
    let decay = DecayReport {
        fit_window: (t0, t1),
        l1: fit_power_law(&ts, &col(|s| s.l1), t0, t1),
        l2: fit_power_law(&ts, &col(|s| s.l2), t0, t1),
        linf: fit_power_law(&ts, &col(|s| s.linf), t0, t1),
        alpha_dot: fit_power_law(&ts, &col(|s| s.alpha_dot.abs()), t0, t1),
        sup_alpha: samples.iter().fold(0.0f64, |m, s| m.max(s.alpha.abs())),
        final_alpha: samples.last().map_or(0.0, |s| s.alpha),
        final_alpha_mass: samples.last().map_or(0.0, |s| s.alpha_mass),
        linf_reduction: match (samples.first(), samples.last()) {
            (Some(a), Some(b)) if a.linf > 0.0 => b.linf / a.linf,
            _ => 0.0,
        },
        alpha_bound: f64::INFINITY,
    };

    let u2 = col(|s| s.l2 * s.l2);
    let damping = analysis::damping_check(&ts, &es, &de, &u2, t0);
    let ratios: Vec<f64> = samples.iter().filter(|s| s.h1_sq > 0.0).map(|s| s.energy / s.h1_sq).collect();
    let energy = EnergyReport {
        k: opts.energy.k,
        options: opts.energy,
        damping,
        ratio_min: ratios.iter().copied().fold(f64::INFINITY, f64::min),
        ratio_max: ratios.iter().copied().fold(0.0, f64::max),
        warnings,
    };

    let c0 = samples.first().filter(|s| s.ux_l2 > 0.0).map_or(0.0, |s| s.q_l2 / s.ux_l2);
    let max_ratio = samples.iter().filter(|s| s.ux_l2 > 0.0).map(|s| s.q_l2 / s.ux_l2).fold(0.0, f64::max);
    let slaving = SlavingReport { c0, max_ratio, excess: if c0 > 0.0 { max_ratio / c0 } else { 0.0 } };

    Ok(RunReport {
        grid,
        steps,
        samples,
        decay,
        energy,
        slaving,
        max_elliptic_residual: max_res,
        max_conservation_defect: max_defect,
    })
}
