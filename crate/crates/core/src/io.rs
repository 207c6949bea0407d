//! Plot-ready CSV tables and JSON reports.
//!
//! Numbers are written with 17 significant digits in scientific notation,
//! rows end in `\n`, and the output depends only on the data.

use std::io::{self, Write};

use serde::Serialize;

use crate::evans::EvansSample;
use crate::model::Side;
use crate::profile::Profile;
use crate::simulate::TimeSample;

/// `x` with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// A header and rows of numbers.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{}", self.header.join(","))?;
        let mut line = String::new();
        for row in &self.rows {
            line.clear();
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    line.push(',');
                }
                line.push_str(&fmt_f64(*v));
            }
            line.push('\n');
            w.write_all(line.as_bytes())?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ASCII output")
    }
}

/// Pretty JSON followed by a newline.
pub fn to_json<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Profile nodes: `x, U, U', U'', Q`, every `stride`-th node.
pub fn profile_table(profile: &Profile, stride: usize) -> Table {
    let mut t = Table::new(&["x", "U", "dU", "d2U", "Q"]);
    let stride = stride.max(1);
    let mut i = 0;
    while i < profile.len() {
        let p = profile.at(i);
        t.push(vec![profile.x(i), p.u, p.du, p.d2u, p.q]);
        i += stride;
    }
    t
}

/// Contour samples: parameter, `λ`, and `D±` as log-modulus and argument
/// of the stored part.
pub fn evans_table(samples: &[(f64, EvansSample)]) -> Table {
    let mut t = Table::new(&[
        "t",
        "re_lambda",
        "im_lambda",
        "log_abs_d_minus",
        "arg_d_minus",
        "log_abs_d_plus",
        "arg_d_plus",
        "normalized_minus",
        "normalized_plus",
    ]);
    for (s, e) in samples {
        let lm = e.log_value(Side::Minus);
        let lp = e.log_value(Side::Plus);
        t.push(vec![
            *s,
            e.lambda.re,
            e.lambda.im,
            lm.re,
            e.stored(Side::Minus).arg(),
            lp.re,
            e.stored(Side::Plus).arg(),
            e.normalized_minus,
            e.normalized_plus,
        ]);
    }
    t
}

/// Simulation time series.
pub fn time_series_table(samples: &[TimeSample]) -> Table {
    let mut t = Table::new(&[
        "t",
        "L1",
        "L2",
        "Linf",
        "alpha",
        "alpha_mass",
        "alpha_dot",
        "E_k",
        "dE_dt",
        "Hk_sq",
        "q_L2",
        "ux_L2",
        "mass",
        "Linf_raw",
    ]);
    for s in samples {
        t.push(vec![
            s.t,
            s.l1,
            s.l2,
            s.linf,
            s.alpha,
            s.alpha_mass,
            s.alpha_dot,
            s.energy,
            s.energy_rate,
            s.h1_sq,
            s.q_l2,
            s.ux_l2,
            s.mass,
            s.linf_raw,
        ]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let mantissa = s.trim_start_matches('-').split('e').next().unwrap();
            assert_eq!(mantissa.chars().filter(|c| c.is_ascii_digit()).count(), 17);
        }
    }

    #[test]
    fn csv_uses_lf_and_dot_decimal() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![1.5, -0.25]);
        let s = t.to_csv_string();
        assert_eq!(s, "a,b\n1.5000000000000000e0,-2.5000000000000000e-1\n");
    }
}
