//! Dense Hermitian positive-definite solves for the K x K normal equations.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Solve `A x = b` for Hermitian positive-definite `A` (row-major, `n x n`)
/// by Cholesky factorisation. Only the lower triangle of `A` is read.
pub(crate) fn cholesky_solve(a: &[Complex64], b: &[Complex64], n: usize) -> Result<Vec<Complex64>> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    let mut l = vec![Complex64::new(0.0, 0.0); n * n];
    for j in 0..n {
        let mut d = a[j * n + j].re;
        for k in 0..j {
            d -= l[j * n + k].norm_sqr();
        }
        if d.is_nan() || d <= 0.0 || d.is_infinite() {
            return Err(Error::numerical(format!(
                "normal equations are not positive definite (pivot {j} = {d:e})"
            )));
        }
        let d = d.sqrt();
        l[j * n + j] = Complex64::new(d, 0.0);
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k].conj();
            }
            l[i * n + j] = s / d;
        }
    }
    // L y = b
    let mut y = b.to_vec();
    for i in 0..n {
        let mut s = y[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i].re;
    }
    // L^H x = y
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k * n + i].conj() * y[k];
        }
        y[i] = s / l[i * n + i].re;
    }
    Ok(y)
}

/// Cholesky factor of a real symmetric positive-definite matrix.
pub(crate) struct RealCholesky {
    l: Vec<f64>,
    n: usize,
}

impl RealCholesky {
    /// Factor `a` (row-major, `n x n`); only the lower triangle is read.
    pub(crate) fn new(a: &[f64], n: usize) -> Result<Self> {
        debug_assert_eq!(a.len(), n * n);
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = a[j * n + j];
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if d.is_nan() || d <= 0.0 || d.is_infinite() {
                return Err(Error::numerical(format!(
                    "matrix is not positive definite (pivot {j} = {d:e})"
                )));
            }
            let d = d.sqrt();
            l[j * n + j] = d;
            for i in j + 1..n {
                let (ri, rj) = (&l[i * n..i * n + j], &l[j * n..j * n + j]);
                let s = a[i * n + j] - ri.iter().zip(rj).map(|(x, y)| x * y).sum::<f64>();
                l[i * n + j] = s / d;
            }
        }
        Ok(RealCholesky { l, n })
    }

    pub(crate) fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (l, n) = (&self.l, self.n);
        let mut y = b.to_vec();
        for i in 0..n {
            let s = y[i]
                - l[i * n..i * n + i]
                    .iter()
                    .zip(&y[..i])
                    .map(|(a, b)| a * b)
                    .sum::<f64>();
            y[i] = s / l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= l[k * n + i] * y[k];
            }
            y[i] = s / l[i * n + i];
        }
        y
    }
}

/// Solve a real symmetric positive-definite system (row-major).
#[cfg(test)]
pub(crate) fn cholesky_solve_real(a: &[f64], b: &[f64], n: usize) -> Result<Vec<f64>> {
    Ok(RealCholesky::new(a, n)?.solve(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn solves_small_hermitian_system() {
        // A = [[4, 1-i], [1+i, 3]], x = [1, i]
        let a = [c(4.0, 0.0), c(1.0, -1.0), c(1.0, 1.0), c(3.0, 0.0)];
        let x = [c(1.0, 0.0), c(0.0, 1.0)];
        let b = [a[0] * x[0] + a[1] * x[1], a[2] * x[0] + a[3] * x[1]];
        let got = cholesky_solve(&a, &b, 2).unwrap();
        for (g, e) in got.iter().zip(&x) {
            assert!((g - e).norm() < 1e-14);
        }
    }

    #[test]
    fn rejects_indefinite() {
        let a = [c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(1.0, 0.0)];
        assert!(cholesky_solve(&a, &[c(1.0, 0.0), c(0.0, 0.0)], 2).is_err());
        assert!(cholesky_solve_real(&[0.0], &[1.0], 1).is_err());
    }

    #[test]
    fn real_solver() {
        let a = [2.0, 1.0, 1.0, 3.0];
        let x = cholesky_solve_real(&a, &[3.0, 5.0], 2).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-14 && (x[1] - 1.4).abs() < 1e-14);
    }
}
