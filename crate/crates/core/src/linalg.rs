//! Small dense and banded linear solvers.

use std::ops::{Add, Div, Mul, Sub};

use num_complex::Complex64;

pub type C3 = [Complex64; 3];

/// Solves a tridiagonal system by the Thomas algorithm.
///
/// `lower[i]` multiplies `x[i-1]` in row `i` (so `lower[0]` is unused) and
/// `upper[i]` multiplies `x[i+1]` (so `upper[n-1]` is unused). Assumes the
/// matrix is diagonally dominant or otherwise safe without pivoting.
pub fn solve_tridiagonal<T>(lower: &[T], diag: &[T], upper: &[T], rhs: &[T]) -> Vec<T>
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Mul<Output = T> + Div<Output = T>,
{
    let n = diag.len();
    assert!(lower.len() == n && upper.len() == n && rhs.len() == n);
    if n == 0 {
        return Vec::new();
    }
    let mut c = Vec::with_capacity(n);
    let mut d = Vec::with_capacity(n);
    c.push(upper[0] / diag[0]);
    d.push(rhs[0] / diag[0]);
    for i in 1..n {
        let m = diag[i] - lower[i] * c[i - 1];
        c.push(upper[i] / m);
        d.push((rhs[i] - lower[i] * d[i - 1]) / m);
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        let next = x[i + 1];
        x[i] = x[i] - c[i] * next;
    }
    x
}

/// Determinant of the 3x3 matrix with the given columns.
pub fn det3(c0: &C3, c1: &C3, c2: &C3) -> Complex64 {
    c0[0] * (c1[1] * c2[2] - c1[2] * c2[1]) - c1[0] * (c0[1] * c2[2] - c0[2] * c2[1])
        + c2[0] * (c0[1] * c1[2] - c0[2] * c1[1])
}

/// Solves `[c0 c1 c2] x = rhs` by Cramer's rule.
pub fn solve3(c0: &C3, c1: &C3, c2: &C3, rhs: &C3) -> Option<C3> {
    let d = det3(c0, c1, c2);
    if d == Complex64::new(0.0, 0.0) || !d.is_finite() {
        return None;
    }
    Some([det3(rhs, c1, c2) / d, det3(c0, rhs, c2) / d, det3(c0, c1, rhs) / d])
}

pub fn norm3(v: &C3) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Complex banded matrix stored by diagonals, factorized by Gaussian
/// elimination with partial pivoting.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    /// Row-major storage: row `i`, column `j` lives at `i * width + (j + kl - i)`
    /// with room for `kl` extra superdiagonals created by pivoting.
    data: Vec<Complex64>,
    width: usize,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        BandMatrix { n, kl, ku, data: vec![Complex64::new(0.0, 0.0); n * width], width }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.kl + self.ku);
        i * self.width + (j + self.kl - i)
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        if j + self.kl < i || j > i + self.ku {
            return Complex64::new(0.0, 0.0);
        }
        self.data[self.idx(i, j)]
    }

    /// Adds `v` to entry `(i, j)`, which must lie inside the declared band.
    pub fn add(&mut self, i: usize, j: usize, v: Complex64) {
        assert!(j + self.kl >= i && j <= i + self.ku, "entry ({i}, {j}) outside band");
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    pub fn conj_transpose(&self) -> BandMatrix {
        let mut t = BandMatrix::zeros(self.n, self.ku, self.kl);
        for i in 0..self.n {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            for j in lo..=hi {
                let v = self.get(i, j);
                if v != Complex64::new(0.0, 0.0) {
                    t.add(j, i, v.conj());
                }
            }
        }
        t
    }

    /// Solves `A x = b`, consuming the matrix. Returns `None` for an exactly
    /// singular pivot.
    pub fn solve(mut self, b: &[Complex64]) -> Option<Vec<Complex64>> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let mut x = b.to_vec();
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.idx(k, k)].norm();
            for i in k + 1..=last_row {
                let v = self.data[self.idx(i, k)].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 {
                return None;
            }
            let last_col = (k + kl + ku).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    let (a, b) = (self.idx(k, j), self.idx(p, j));
                    self.data.swap(a, b);
                }
                x.swap(k, p);
            }
            let pivot = self.data[self.idx(k, k)];
            for i in k + 1..=last_row {
                let l = self.data[self.idx(i, k)] / pivot;
                if l == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in k..=last_col {
                    let v = self.data[self.idx(k, j)];
                    let t = self.idx(i, j);
                    self.data[t] -= l * v;
                }
                let xk = x[k];
                x[i] -= l * xk;
            }
        }
        for k in (0..n).rev() {
            let last_col = (k + kl + ku).min(n - 1);
            let mut s = x[k];
            for j in k + 1..=last_col {
                s -= self.data[self.idx(k, j)] * x[j];
            }
            x[k] = s / self.data[self.idx(k, k)];
        }
        Some(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn thomas_solves_helmholtz_stencil() {
        let n = 50;
        let lower = vec![-1.0; n];
        let diag = vec![2.5; n];
        let upper = vec![-1.0; n];
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let rhs: Vec<f64> = (0..n)
            .map(|i| {
                let mut r = 2.5 * x_true[i];
                if i > 0 {
                    r -= x_true[i - 1];
                }
                if i + 1 < n {
                    r -= x_true[i + 1];
                }
                r
            })
            .collect();
        let x = solve_tridiagonal(&lower, &diag, &upper, &rhs);
        for (a, b) in x.iter().zip(&x_true) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn cramer_and_determinant() {
        let a = [c(1.0, 0.0), c(0.0, 1.0), c(2.0, 0.0)];
        let b = [c(0.0, 0.0), c(3.0, -1.0), c(1.0, 1.0)];
        let d = [c(1.0, 2.0), c(0.0, 0.0), c(-1.0, 0.0)];
        let x = [c(0.5, 0.0), c(-1.0, 2.0), c(0.25, 0.25)];
        let rhs: C3 = std::array::from_fn(|i| a[i] * x[0] + b[i] * x[1] + d[i] * x[2]);
        let sol = solve3(&a, &b, &d, &rhs).unwrap();
        for i in 0..3 {
            assert!((sol[i] - x[i]).norm() < 1e-14);
        }
        assert!((det3(&a, &b, &d) + det3(&b, &a, &d)).norm() < 1e-14);
    }

    #[test]
    fn banded_solve_needs_pivoting() {
        let n = 40;
        let (kl, ku) = (2, 3);
        let mut m = BandMatrix::zeros(n, kl, ku);
        for i in 0..n {
            for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                let v = c(((i * 7 + j * 3) % 5) as f64 - 2.0, ((i + 2 * j) % 3) as f64 - 1.0);
                m.add(i, j, v);
            }
            // Small diagonal forces row swaps.
            m.add(i, i, c(1e-3, 0.0));
        }
        let x_true: Vec<Complex64> = (0..n).map(|i| c(i as f64, 1.0 - i as f64 * 0.5)).collect();
        let b = m.mul_vec(&x_true);
        let x = m.clone().solve(&b).unwrap();
        let err = x.iter().zip(&x_true).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-8, "err {err}");
    }

    #[test]
    fn conj_transpose_is_adjoint() {
        let n = 12;
        let mut m = BandMatrix::zeros(n, 1, 3);
        for i in 0..n {
            for j in i.saturating_sub(1)..=(i + 3).min(n - 1) {
                m.add(i, j, c(i as f64 - 0.5 * j as f64, (i * j % 4) as f64));
            }
        }
        let t = m.conj_transpose();
        let x: Vec<Complex64> = (0..n).map(|i| c(1.0 + i as f64, -0.3 * i as f64)).collect();
        let y: Vec<Complex64> = (0..n).map(|i| c((i as f64).sin(), 0.7)).collect();
        let lhs: Complex64 = m.mul_vec(&x).iter().zip(&y).map(|(a, b)| a * b.conj()).sum();
        let rhs: Complex64 = x.iter().zip(&t.mul_vec(&y)).map(|(a, b)| a * b.conj()).sum();
        assert!((lhs - rhs).norm() < 1e-10);
    }
}
