//! Power-law fits, the weighted energy functional and its damping check.

use serde::{Deserialize, Serialize};

/// Least-squares fit `ln y = c - p ln(1 + t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    /// Decay exponent `p`.
    pub exponent: f64,
    /// Half-width of the 95% confidence interval of `p`.
    pub ci95: f64,
    pub intercept: f64,
    pub points: usize,
}

/// Fits over samples with `t0 <= t <= t1` and `y > 0`.
pub fn fit_power_law(ts: &[f64], ys: &[f64], t0: f64, t1: f64) -> Option<PowerFit> {
    let pts: Vec<(f64, f64)> = ts
        .iter()
        .zip(ys)
        .filter(|(t, y)| **t >= t0 && **t <= t1 && **y > 0.0 && y.is_finite())
        .map(|(t, y)| ((1.0 + t).ln(), y.ln()))
        .collect();
    let n = pts.len();
    if n < 3 {
        return None;
    }
    let nf = n as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let se = (sse / (nf - 2.0) / sxx).sqrt();
    Some(PowerFit { exponent: -slope, ci95: 1.96 * se, intercept, points: n })
}

/// Centered differences of `ys` against `ts`, one-sided at the ends.
pub fn derivative(ts: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = ts.len();
    (0..n)
        .map(|i| {
            if n < 2 {
                0.0
            } else if i == 0 {
                (ys[1] - ys[0]) / (ts[1] - ts[0])
            } else if i == n - 1 {
                (ys[n - 1] - ys[n - 2]) / (ts[n - 1] - ts[n - 2])
            } else {
                (ys[i + 1] - ys[i - 1]) / (ts[i + 1] - ts[i - 1])
            }
        })
        .collect()
}

/// Weights of the energy functional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyOptions {
    /// Highest derivative order `k`.
    pub k: usize,
    /// Geometric weight `δ` of successive derivatives.
    pub delta: f64,
    /// Coefficient of `|â|^{2k+1}` in the weight.
    pub weight: f64,
}

impl Default for EnergyOptions {
    fn default() -> Self {
        EnergyOptions { k: 1, delta: 0.5, weight: 10.0 }
    }
}

/// `Σ_{i≤k} δ^i h Σ_j (1 + M_w |â|^{2k+1}) (D^i v)_j²` with forward
/// differences `D` and `â` averaged over each difference stencil.
pub fn energy(v: &[f64], a_hat: &[f64], h: f64, opts: &EnergyOptions) -> f64 {
    let p = (2 * opts.k + 1) as i32;
    let w: Vec<f64> = a_hat.iter().map(|a| 1.0 + opts.weight * a.abs().powi(p)).collect();
    let mut d = v.to_vec();
    let mut total = 0.0;
    let mut scale = 1.0;
    for i in 0..=opts.k {
        if d.is_empty() {
            break;
        }
        let sum: f64 = d
            .iter()
            .enumerate()
            .map(|(j, x)| {
                let wj = w[j..=j + i].iter().sum::<f64>() / (i + 1) as f64;
                wj * x * x
            })
            .sum();
        total += scale * h * sum;
        scale *= opts.delta;
        d = d.windows(2).map(|p| (p[1] - p[0]) / h).collect();
    }
    total
}

/// Discrete `H^k` norm squared, with forward differences.
pub fn hk_norm_sq(v: &[f64], h: f64, k: usize) -> f64 {
    let mut d = v.to_vec();
    let mut total = 0.0;
    for _ in 0..=k {
        total += h * d.iter().map(|x| x * x).sum::<f64>();
        d = d.windows(2).map(|p| (p[1] - p[0]) / h).collect();
    }
    total
}

/// Outcome of checking `dE/dt ≤ -η₃ E + C |u|²_{L²}` along a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DampingCheck {
    pub eta3: f64,
    pub c: f64,
    /// Samples used to calibrate `C` (the first quarter of the run).
    pub calibration_samples: usize,
    /// Allowance added to the right-hand side: 5% of `max |dE/dt|`.
    pub slack: f64,
    pub violations: usize,
    /// Largest `dE/dt + η₃ E - C |u|²` over the run.
    pub worst_excess: f64,
}

/// Regresses `dE/dt ≈ -η E + C |u|²` over all samples to fix `η₃`, sets `C`
/// to the smallest value satisfying the inequality on the calibration
/// window `t <= t_cal`, and counts violations over the whole run.
pub fn damping_check(ts: &[f64], e: &[f64], de: &[f64], u2: &[f64], t_cal: f64) -> DampingCheck {
    // Normal equations for de = -η e + c u2.
    let (mut see, mut seu, mut suu, mut sde, mut sdu) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..ts.len() {
        see += e[i] * e[i];
        seu += e[i] * u2[i];
        suu += u2[i] * u2[i];
        sde += de[i] * e[i];
        sdu += de[i] * u2[i];
    }
    let det = see * suu - seu * seu;
    let eta_ls = if det.abs() > 0.0 { -(sde * suu - sdu * seu) / det } else { 0.0 };
    // Fall back to the ratio of dissipation to energy if the regression is
    // not damping.
    let eta3 = if eta_ls > 0.0 {
        eta_ls
    } else {
        let r = ts.iter().zip(e).zip(de).filter(|((_, e), _)| **e > 0.0).map(|((_, e), d)| -d / e).fold(0.0, f64::max);
        r.max(1e-6)
    };
    let mut c = 0.0f64;
    let mut cal = 0;
    for i in 0..ts.len() {
        if ts[i] <= t_cal && u2[i] > 0.0 {
            c = c.max((de[i] + eta3 * e[i]) / u2[i]);
            cal += 1;
        }
    }
    let slack = 0.05 * de.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let mut violations = 0;
    let mut worst = f64::NEG_INFINITY;
    for i in 0..ts.len() {
        let excess = de[i] + eta3 * e[i] - c * u2[i];
        worst = worst.max(excess);
        if excess > slack {
            violations += 1;
        }
    }
    DampingCheck { eta3, c, calibration_samples: cal, slack, violations, worst_excess: worst }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_fit_recovers_exponent() {
        let ts: Vec<f64> = (0..=400).map(|k| k as f64).collect();
        let ys: Vec<f64> = ts.iter().map(|t| 3.0 * (1.0 + t).powf(-0.5)).collect();
        let fit = fit_power_law(&ts, &ys, 100.0, 400.0).unwrap();
        assert!((fit.exponent - 0.5).abs() < 1e-12);
        assert!(fit.ci95 < 1e-10);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn energy_of_zero_is_zero_and_k0_is_weighted_l2() {
        let opts = EnergyOptions::default();
        assert_eq!(energy(&[0.0; 10], &[0.3; 10], 0.1, &opts), 0.0);
        let v = [1.0, 2.0];
        let e = energy(&v, &[0.0, 0.0], 0.5, &EnergyOptions { k: 0, ..opts });
        assert!((e - 0.5 * 5.0).abs() < 1e-15);
    }

    #[test]
    fn derivative_is_exact_for_quadratics_inside() {
        let ts: Vec<f64> = (0..10).map(|k| k as f64 * 0.5).collect();
        let ys: Vec<f64> = ts.iter().map(|t| t * t).collect();
        let d = derivative(&ts, &ys);
        for i in 1..9 {
            assert!((d[i] - 2.0 * ts[i]).abs() < 1e-12);
        }
    }
}
