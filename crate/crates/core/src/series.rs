//! Truncated real power series `sum_k c[k] x^k` and the few operations the
//! local expansions need.

/// Product of two series truncated to `n` terms.
pub fn mul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (i, &ai) in a.iter().enumerate().take(n) {
        if ai == 0.0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate().take(n - i) {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// Term-wise derivative; the result has one term fewer.
pub fn derivative(a: &[f64]) -> Vec<f64> {
    a.iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| k as f64 * c)
        .collect()
}

/// Horner evaluation at `x`.
pub fn eval(a: &[f64], x: f64) -> f64 {
    a.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Value and first derivative at `x`.
pub fn eval_with_derivative(a: &[f64], x: f64) -> (f64, f64) {
    let mut v = 0.0;
    let mut d = 0.0;
    for &c in a.iter().rev() {
        d = d * x + v;
        v = v * x + c;
    }
    (v, d)
}

/// Composition `p(s(x))` of a polynomial given by its coefficients with a
/// series, truncated to `n` terms.
pub fn compose(p: &[f64], s: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for &c in p.iter().rev() {
        out = mul(&out, s, n);
        out[0] += c;
    }
    out
}

/// Taylor coefficients of the polynomial `p` re-centred at `x0`, so that
/// `p(x0 + h) = sum_k out[k] h^k`.
pub fn shift(p: &[f64], x0: f64) -> Vec<f64> {
    let mut out = p.to_vec();
    let n = out.len();
    for i in 0..n {
        for j in (i..n - 1).rev() {
            let carry = out[j + 1] * x0;
            out[j] += carry;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_and_composition_agree_with_direct_evaluation() {
        let a = [1.0, 2.0, -0.5];
        let b = [0.0, 1.0, 3.0];
        let x = 0.13;
        let ab = mul(&a, &b, 5);
        assert!((eval(&ab, x) - eval(&a, x) * eval(&b, x)).abs() < 1e-15);
        let p = [0.5, -1.0, 0.25, 2.0];
        let c = compose(&p, &b, 12);
        let direct = eval(&p, eval(&b, x));
        assert!((eval(&c, x) - direct).abs() < 1e-12);
    }

    #[test]
    fn shift_recentres_polynomial() {
        let p = [1.0, -2.0, 0.0, 4.0];
        let q = shift(&p, 0.7);
        for h in [-0.3, 0.0, 0.45] {
            assert!((eval(&q, h) - eval(&p, 0.7 + h)).abs() < 1e-13);
        }
    }

    #[test]
    fn derivative_matches_eval_with_derivative() {
        let p = [0.3, 1.0, -2.0, 0.5];
        let x = -0.8;
        let (_, d) = eval_with_derivative(&p, x);
        assert!((d - eval(&derivative(&p), x)).abs() < 1e-14);
    }
}
