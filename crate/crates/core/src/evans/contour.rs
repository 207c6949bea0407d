//! Winding numbers of `D±` along piecewise contours, with adaptive
//! refinement and concurrent sampling.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_8, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{EvansContext, EvansError, EvansSample};
use crate::model::Side;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Segment {
    Line { from: Complex64, to: Complex64 },
    /// Arc from angle `theta0` to `theta1` (either orientation).
    Arc { center: Complex64, radius: f64, theta0: f64, theta1: f64 },
}

impl Segment {
    pub fn point(&self, t: f64) -> Complex64 {
        match *self {
            Segment::Line { from, to } => from + (to - from) * t,
            Segment::Arc { center, radius, theta0, theta1 } => {
                center + Complex64::from_polar(radius, theta0 + (theta1 - theta0) * t)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourSpec {
    pub segments: Vec<Segment>,
    /// The segments trace only the upper half of a contour symmetric under
    /// conjugation; the winding is doubled.
    pub mirror: bool,
    pub initial_per_segment: usize,
    /// Refinement stops once every step turns by less than this.
    pub max_step_arg: f64,
    pub max_samples: usize,
    /// Evaluation passes, counting the initial one and the confirming
    /// bisections.
    pub max_rounds: usize,
}

impl ContourSpec {
    fn with_segments(segments: Vec<Segment>, mirror: bool) -> Self {
        ContourSpec {
            segments,
            mirror,
            initial_per_segment: 64,
            max_step_arg: FRAC_PI_8,
            max_samples: 200_000,
            max_rounds: 40,
        }
    }

    /// Boundary of `{Re λ > 0, r < |λ| < R}`: the arc of radius `R`, the
    /// imaginary axis down to `ir`, and the semicircle of radius `r` into the
    /// right half plane. With `mirror` only the upper half is sampled.
    pub fn punctured_half_plane(r: f64, big_r: f64, mirror: bool) -> Self {
        let z = Complex64::new(0.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        let segments = if mirror {
            vec![
                Segment::Arc { center: z, radius: big_r, theta0: 0.0, theta1: FRAC_PI_2 },
                Segment::Line { from: i * big_r, to: i * r },
                Segment::Arc { center: z, radius: r, theta0: FRAC_PI_2, theta1: 0.0 },
            ]
        } else {
            vec![
                Segment::Arc { center: z, radius: big_r, theta0: -FRAC_PI_2, theta1: FRAC_PI_2 },
                Segment::Line { from: i * big_r, to: i * r },
                Segment::Arc { center: z, radius: r, theta0: FRAC_PI_2, theta1: -FRAC_PI_2 },
                Segment::Line { from: -i * r, to: -i * big_r },
            ]
        };
        Self::with_segments(segments, mirror)
    }

    /// Counterclockwise circle.
    pub fn circle(center: Complex64, radius: f64, mirror: bool) -> Self {
        let theta1 = if mirror { PI } else { 2.0 * PI };
        Self::with_segments(vec![Segment::Arc { center, radius, theta0: 0.0, theta1 }], mirror)
    }

    /// Counterclockwise rectangle `[re0, re1] × [im0, im1]`.
    pub fn rectangle(re0: f64, re1: f64, im0: f64, im1: f64) -> Self {
        let c = Complex64::new;
        let corners = [c(re0, im0), c(re1, im0), c(re1, im1), c(re0, im1)];
        let segments = (0..4)
            .map(|k| Segment::Line { from: corners[k], to: corners[(k + 1) % 4] })
            .collect();
        Self::with_segments(segments, false)
    }

    /// Default radii: `r = 1e-3 |u- - u+|`, `R = 10 max(a±², L b±)`.
    pub fn default_radii(ctx: &EvansContext) -> (f64, f64) {
        let spec = ctx.profile.spec();
        let scale = (spec.u_minus() - spec.u_plus()).abs();
        let mut big = 0.0f64;
        for side in [Side::Minus, Side::Plus] {
            let u = spec.end_state(side);
            big = big.max(spec.df(u).powi(2)).max(spec.l() * spec.dm(u));
        }
        (1e-3 * scale, 10.0 * big)
    }

    fn point(&self, t: f64) -> Complex64 {
        let n = self.segments.len();
        let k = (t.floor() as usize).min(n - 1);
        self.segments[k].point(t - k as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SideWinding {
    pub side: Side,
    pub winding: i64,
    /// Accumulated argument change over `2π`.
    pub raw: f64,
    pub max_step_arg: f64,
    /// Smallest normalized `|D|` met along the contour.
    pub min_normalized: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindingResult {
    pub minus: SideWinding,
    pub plus: SideWinding,
    /// `false` unless every step turns by less than the target and a final
    /// uniform bisection leaves the windings unchanged.
    pub converged: bool,
    pub rounds: usize,
    /// Samples in contour order, with their parameter.
    pub samples: Vec<(f64, EvansSample)>,
}

impl WindingResult {
    pub fn side(&self, side: Side) -> &SideWinding {
        match side {
            Side::Minus => &self.minus,
            Side::Plus => &self.plus,
        }
    }

    pub fn summary(&self) -> WindingSummary {
        WindingSummary {
            minus: self.minus,
            plus: self.plus,
            converged: self.converged,
            rounds: self.rounds,
            samples: self.samples.len(),
        }
    }
}

/// [`WindingResult`] without the samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindingSummary {
    pub minus: SideWinding,
    pub plus: SideWinding,
    pub converged: bool,
    pub rounds: usize,
    pub samples: usize,
}

impl WindingSummary {
    /// The common winding of both sides, if they agree.
    pub fn common(&self) -> Option<i64> {
        (self.minus.winding == self.plus.winding).then_some(self.minus.winding)
    }
}

fn wrap(d: f64) -> f64 {
    let mut d = d % (2.0 * PI);
    if d > PI {
        d -= 2.0 * PI;
    } else if d <= -PI {
        d += 2.0 * PI;
    }
    d
}

/// Change of `arg D±(λ)` between two samples, lifting the exponential
/// factors exactly and wrapping only the stored determinant.
fn step_arg(a: &EvansSample, b: &EvansSample, side: Side) -> f64 {
    let exact = (b.log_value(side) - b.stored(side).ln() - a.log_value(side) + a.stored(side).ln()).im;
    wrap((b.stored(side) / a.stored(side)).arg() + exact)
}

fn evaluate_all(
    ctx: &EvansContext,
    spec: &ContourSpec,
    ts: &[f64],
) -> Result<Vec<(f64, EvansSample)>, EvansError> {
    ts.par_iter()
        .map(|&t| ctx.evaluate(spec.point(t)).map(|s| (t, s)))
        .collect()
}

/// Accumulates `arg D±` along the contour.
pub fn winding_number(ctx: &EvansContext, spec: &ContourSpec) -> Result<WindingResult, EvansError> {
    if spec.segments.is_empty() || spec.initial_per_segment == 0 {
        return Err(EvansError::Contour("empty contour".into()));
    }
    let indicial = Complex64::new(ctx.indicial_point(), 0.0);
    let nseg = spec.segments.len();
    let n0 = spec.initial_per_segment;
    let mut ts: Vec<f64> = (0..nseg * n0).map(|k| k as f64 / n0 as f64).collect();
    ts.push(nseg as f64);
    for &t in &ts {
        if (spec.point(t) - indicial).norm() < 1e-8 {
            return Err(EvansError::Contour(format!("contour passes through the indicial point {indicial}")));
        }
    }
    let mut samples = evaluate_all(ctx, spec, &ts)?;
    let mut rounds = 1;
    let mut converged = false;
    'outer: loop {
        loop {
            let mids: Vec<f64> = samples
                .windows(2)
                .filter(|w| max_step(&w[0].1, &w[1].1) >= spec.max_step_arg)
                .map(|w| 0.5 * (w[0].0 + w[1].0))
                .collect();
            if mids.is_empty() {
                break;
            }
            if rounds >= spec.max_rounds || samples.len() + mids.len() > spec.max_samples {
                break 'outer;
            }
            rounds += 1;
            samples.extend(evaluate_all(ctx, spec, &mids)?);
            samples.sort_by(|a, b| a.0.total_cmp(&b.0));
        }

        // Confirm with one uniform bisection, which must leave the windings
        // unchanged and every step below the target. A failed confirmation
        // resumes the adaptive refinement.
        if rounds >= spec.max_rounds || 2 * samples.len() - 1 > spec.max_samples {
            break;
        }
        let before = windings(&samples, spec.mirror);
        let mids: Vec<f64> = samples.windows(2).map(|w| 0.5 * (w[0].0 + w[1].0)).collect();
        rounds += 1;
        samples.extend(evaluate_all(ctx, spec, &mids)?);
        samples.sort_by(|a, b| a.0.total_cmp(&b.0));
        let after = windings(&samples, spec.mirror);
        let fine = samples.windows(2).all(|w| max_step(&w[0].1, &w[1].1) < spec.max_step_arg);
        if fine && before.0.winding == after.0.winding && before.1.winding == after.1.winding {
            converged = true;
            break;
        }
    }
    let (minus, plus) = windings(&samples, spec.mirror);
    Ok(WindingResult { minus, plus, converged, rounds, samples })
}

fn max_step(a: &EvansSample, b: &EvansSample) -> f64 {
    step_arg(a, b, Side::Minus).abs().max(step_arg(a, b, Side::Plus).abs())
}

fn windings(samples: &[(f64, EvansSample)], mirror: bool) -> (SideWinding, SideWinding) {
    let side_result = |side: Side| {
        let mut total = 0.0;
        let mut max_step = 0.0f64;
        for w in samples.windows(2) {
            let d = step_arg(&w[0].1, &w[1].1, side);
            total += d;
            max_step = max_step.max(d.abs());
        }
        if mirror {
            total *= 2.0;
        }
        let raw = total / (2.0 * PI);
        let min_normalized = samples.iter().map(|s| s.1.normalized(side)).fold(f64::INFINITY, f64::min);
        SideWinding { side, winding: raw.round() as i64, raw, max_step_arg: max_step, min_normalized }
    };
    (side_result(Side::Minus), side_result(Side::Plus))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_maps_into_half_open_interval() {
        assert!((wrap(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert!((wrap(-3.0 * PI / 2.0) - PI / 2.0).abs() < 1e-15);
        assert_eq!(wrap(PI), PI);
        assert_eq!(wrap(0.25), 0.25);
    }

    #[test]
    fn punctured_contour_is_closed_and_avoids_origin() {
        let spec = ContourSpec::punctured_half_plane(1e-3, 10.0, false);
        let start = spec.point(0.0);
        let end = spec.point(spec.segments.len() as f64);
        assert!((start - end).norm() < 1e-12);
        for k in 0..=400 {
            let z = spec.point(k as f64 / 100.0);
            assert!(z.norm() >= 1e-3 - 1e-15 && z.re >= -1e-12);
        }
        let half = ContourSpec::punctured_half_plane(1e-3, 10.0, true);
        assert!(half.point(0.0).im.abs() < 1e-15);
        assert!(half.point(3.0).im.abs() < 1e-15);
    }
}
