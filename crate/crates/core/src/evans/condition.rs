//! Verdict on the absence of unstable Evans zeros, combining contour
//! windings with the discretized-operator oracle.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::contour::{winding_number, ContourSpec, WindingResult, WindingSummary};
use super::oracle::{integrated_eigen_oracle, OracleOptions};
use super::{EvansContext, EvansError, EvansOptions};
use crate::model::Side;
use crate::profile::Profile;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConditionOptions {
    /// Inner radius; defaults to `1e-3 |u- - u+|`.
    pub r: Option<f64>,
    /// Outer radius; defaults to `10 max(a±², L b±)`.
    pub big_r: Option<f64>,
    pub per_segment: usize,
    pub max_step_arg: f64,
    pub max_samples: usize,
    pub max_rounds: usize,
    /// Repeat the contour with `2R`.
    pub doubling_check: bool,
    /// Wind around a full circle of radius `r` about the origin.
    pub origin_circle: bool,
    /// Run the discretized-operator oracle.
    pub oracle: bool,
    pub oracle_options: OracleOptions,
    /// Quadrisection depth for localizing detected zeros.
    pub localize_depth: usize,
}

impl Default for ConditionOptions {
    fn default() -> Self {
        let c = ContourSpec::circle(Complex64::new(0.0, 0.0), 1.0, true);
        ConditionOptions {
            r: None,
            big_r: None,
            per_segment: c.initial_per_segment,
            max_step_arg: c.max_step_arg,
            max_samples: c.max_samples,
            max_rounds: c.max_rounds,
            doubling_check: true,
            origin_circle: true,
            oracle: true,
            oracle_options: OracleOptions::default(),
            localize_depth: 4,
        }
    }
}

impl ConditionOptions {
    fn apply(&self, mut spec: ContourSpec) -> ContourSpec {
        spec.initial_per_segment = self.per_segment;
        spec.max_step_arg = self.max_step_arg;
        spec.max_samples = self.max_samples;
        spec.max_rounds = self.max_rounds;
        spec
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Verified,
    ZeroDetected,
    Inconclusive,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Verified => 0,
            Verdict::ZeroDetected => 2,
            Verdict::Inconclusive => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSummary {
    pub n: usize,
    pub x_dom: f64,
    pub max_re: f64,
    pub unstable: Vec<Complex64>,
    pub near_origin: usize,
    /// Oracle eigenvalues inside the punctured contour.
    pub count_inside: usize,
}

/// A rectangle of the right half plane with nonzero winding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalizedZero {
    pub side: Side,
    pub re: (f64, f64),
    pub im: (f64, f64),
    pub count: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub verdict: Verdict,
    pub r: f64,
    pub big_r: f64,
    pub main: WindingSummary,
    pub doubled: Option<WindingSummary>,
    pub origin: Option<WindingSummary>,
    pub oracle: Option<OracleSummary>,
    pub zeros: Vec<LocalizedZero>,
    pub notes: Vec<String>,
}

/// Full condition check. Returns the report and the samples of the main
/// contour.
pub fn check_condition(
    profile: &Profile,
    evans: EvansOptions,
    opts: &ConditionOptions,
) -> Result<(ConditionReport, WindingResult), EvansError> {
    let ctx = EvansContext::new(profile, evans)?;
    let (r0, big0) = ContourSpec::default_radii(&ctx);
    let r = opts.r.unwrap_or(r0);
    let big_r = opts.big_r.unwrap_or(big0);
    if !(r > 0.0 && big_r > r) {
        return Err(EvansError::Contour(format!("need 0 < r < R, got r = {r}, R = {big_r}")));
    }
    let mut notes = Vec::new();

    let main = winding_number(&ctx, &opts.apply(ContourSpec::punctured_half_plane(r, big_r, true)))?;
    let main_s = main.summary();
    let doubled = if opts.doubling_check {
        Some(winding_number(&ctx, &opts.apply(ContourSpec::punctured_half_plane(r, 2.0 * big_r, true)))?.summary())
    } else {
        None
    };
    let origin = if opts.origin_circle {
        Some(winding_number(&ctx, &opts.apply(ContourSpec::circle(Complex64::new(0.0, 0.0), r, true)))?.summary())
    } else {
        None
    };
    let oracle = if opts.oracle {
        let o = integrated_eigen_oracle(profile, &opts.oracle_options)?;
        let count_inside = o
            .eigenvalues
            .iter()
            .filter(|z| z.re > 0.0 && z.norm() > r && z.norm() < big_r)
            .count();
        Some(OracleSummary {
            n: o.n,
            x_dom: o.x_dom,
            max_re: o.max_re,
            unstable: o.unstable,
            near_origin: o.near_origin.len(),
            count_inside,
        })
    } else {
        None
    };

    let all: Vec<&WindingSummary> = [Some(&main_s), doubled.as_ref(), origin.as_ref()].into_iter().flatten().collect();
    let converged = all.iter().all(|w| w.converged);
    if !converged {
        notes.push("refinement budget exhausted before the windings were resolved and confirmed".into());
    }
    let nonzero = |w: &WindingSummary| w.minus.winding != 0 || w.plus.winding != 0;
    let zero_found = nonzero(&main_s) || doubled.as_ref().is_some_and(nonzero);

    let mut consistent = true;
    if let Some(d) = &doubled {
        if d.minus.winding != main_s.minus.winding || d.plus.winding != main_s.plus.winding {
            notes.push(format!(
                "winding changed under R -> 2R: ({}, {}) -> ({}, {})",
                main_s.minus.winding, main_s.plus.winding, d.minus.winding, d.plus.winding
            ));
        }
    }
    if let Some(o) = &origin {
        if o.minus.winding != 1 || o.plus.winding != 1 {
            consistent = false;
            notes.push(format!(
                "circle of radius r around the origin winds ({}, {}), expected 1",
                o.minus.winding, o.plus.winding
            ));
        }
    }
    if let Some(o) = &oracle {
        let w = main_s.minus.winding.max(main_s.plus.winding);
        if o.unstable.len() as i64 != w {
            consistent = false;
            notes.push(format!("oracle finds {} unstable eigenvalues, winding is {w}", o.unstable.len()));
        }
    }

    let mut zeros = Vec::new();
    let verdict = if !converged {
        Verdict::Inconclusive
    } else if zero_found {
        let reach = if nonzero(&main_s) { big_r } else { 2.0 * big_r };
        zeros = localize(&ctx, opts, r, reach)?;
        Verdict::ZeroDetected
    } else if consistent {
        Verdict::Verified
    } else {
        Verdict::Inconclusive
    };
    let report = ConditionReport { verdict, r, big_r, main: main_s, doubled, origin, oracle, zeros, notes };
    Ok((report, main))
}

/// Quadrisection of `[r, R] × [-R, R]`, keeping rectangles that wind.
fn localize(ctx: &EvansContext, opts: &ConditionOptions, r: f64, big_r: f64) -> Result<Vec<LocalizedZero>, EvansError> {
    let mut out = Vec::new();
    for side in [Side::Minus, Side::Plus] {
        let mut boxes = vec![((r, big_r), (-big_r, big_r))];
        for depth in 0..=opts.localize_depth {
            let mut next = Vec::new();
            for ((re0, re1), (im0, im1)) in boxes {
                let w = winding_number(ctx, &opts.apply(ContourSpec::rectangle(re0, re1, im0, im1)))?;
                let count = w.side(side).winding;
                if count == 0 {
                    continue;
                }
                if depth == opts.localize_depth {
                    out.push(LocalizedZero { side, re: (re0, re1), im: (im0, im1), count });
                    continue;
                }
                let (rm, im) = (0.5 * (re0 + re1), 0.5 * (im0 + im1));
                next.extend([
                    ((re0, rm), (im0, im)),
                    ((rm, re1), (im0, im)),
                    ((re0, rm), (im, im1)),
                    ((rm, re1), (im, im1)),
                ]);
            }
            boxes = next;
        }
    }
    Ok(out)
}

/// Relative change of `D±(λ)` when `δ₀` is halved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandConvergence {
    pub lambda: Complex64,
    pub rel_minus: f64,
    pub rel_plus: f64,
}

pub fn band_convergence(
    profile: &Profile,
    evans: EvansOptions,
    lambdas: &[Complex64],
) -> Result<Vec<BandConvergence>, EvansError> {
    let full = EvansContext::new(profile, evans)?;
    let half = EvansContext::new(profile, EvansOptions { delta0: 0.5 * evans.delta0, ..evans })?;
    lambdas
        .iter()
        .map(|&lambda| {
            let a = full.evaluate(lambda)?;
            let b = half.evaluate(lambda)?;
            let rel = |side| ((b.log_value(side) - a.log_value(side)).exp() - 1.0).norm();
            Ok(BandConvergence { lambda, rel_minus: rel(Side::Minus), rel_plus: rel(Side::Plus) })
        })
        .collect()
}
