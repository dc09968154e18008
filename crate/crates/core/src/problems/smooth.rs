//! Smooth parts with Lipschitz gradients.

use std::fmt::Debug;

use crate::error::{Error, Result};
use crate::linalg;

/// Step of the central difference used for Hessian-vector products when no
/// closed form is available.
pub const HESSIAN_FD_STEP: f64 = 1e-6;

/// Differentiable `Phi` with an `L`-Lipschitz gradient.
pub trait SmoothOracle: Debug + Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    fn gradient(&self, x: &[f64], out: &mut [f64]);

    /// A valid Lipschitz constant of the gradient.
    fn lipschitz(&self) -> f64;

    /// `Hess Phi(x) v`; defaults to a central difference of the gradient
    /// along `v` with step [`HESSIAN_FD_STEP`].
    fn hessian_vec(&self, x: &[f64], v: &[f64], out: &mut [f64]) {
        let nv = linalg::norm(v);
        if nv == 0.0 {
            out.iter_mut().for_each(|o| *o = 0.0);
            return;
        }
        let h = HESSIAN_FD_STEP;
        let plus: Vec<f64> = x.iter().zip(v).map(|(a, d)| a + h * d / nv).collect();
        let minus: Vec<f64> = x.iter().zip(v).map(|(a, d)| a - h * d / nv).collect();
        let mut gp = vec![0.0; x.len()];
        self.gradient(&plus, &mut gp);
        self.gradient(&minus, out);
        for (o, p) in out.iter_mut().zip(&gp) {
            *o = nv * (p - *o) / (2.0 * h);
        }
    }

    fn gradient_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.gradient(x, &mut out);
        out
    }
}

#[derive(Debug, Clone)]
pub struct ZeroSmooth {
    pub dim: usize,
}

impl SmoothOracle for ZeroSmooth {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, _x: &[f64]) -> f64 {
        0.0
    }

    fn gradient(&self, _x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
    }

    fn lipschitz(&self) -> f64 {
        0.0
    }

    fn hessian_vec(&self, _x: &[f64], _v: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
    }
}

/// `Phi(x) = x^T Q x / 2 - c^T x` with symmetric positive definite `Q`.
#[derive(Debug, Clone)]
pub struct Quadratic {
    n: usize,
    q: Vec<f64>,
    c: Vec<f64>,
    lipschitz: f64,
}

impl Quadratic {
    /// `q` is dense row-major `n x n`.
    pub fn new(q: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        let n = c.len();
        if n == 0 || q.len() != n * n {
            return Err(Error::InvalidProblem(format!(
                "quadratic needs an {n}x{n} matrix, got {} entries",
                q.len()
            )));
        }
        for i in 0..n {
            for j in 0..i {
                let (u, v) = (q[i * n + j], q[j * n + i]);
                if (u - v).abs() > 1e-12 * u.abs().max(v.abs()).max(1.0) {
                    return Err(Error::InvalidProblem(format!(
                        "quadratic matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        if q.iter().chain(&c).any(|v| !v.is_finite()) {
            return Err(Error::InvalidProblem("non-finite quadratic data".into()));
        }
        let lipschitz = linalg::power_iteration(&q, n, 100, 1e-10);
        Ok(Quadratic { n, q, c, lipschitz })
    }

    pub fn matrix(&self) -> &[f64] {
        &self.q
    }

    pub fn linear_term(&self) -> &[f64] {
        &self.c
    }

    /// The unconstrained minimizer `Q^{-1} c`, or `None` if `Q` is not
    /// positive definite.
    pub fn minimizer(&self) -> Option<Vec<f64>> {
        linalg::cholesky_solve(&self.q, self.n, &self.c)
    }
}

impl SmoothOracle for Quadratic {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &[f64]) -> f64 {
        let mut qx = vec![0.0; self.n];
        linalg::matvec(&self.q, self.n, x, &mut qx);
        0.5 * linalg::dot(x, &qx) - linalg::dot(&self.c, x)
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        linalg::matvec(&self.q, self.n, x, out);
        for (o, c) in out.iter_mut().zip(&self.c) {
            *o -= c;
        }
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn hessian_vec(&self, _x: &[f64], v: &[f64], out: &mut [f64]) {
        linalg::matvec(&self.q, self.n, v, out);
    }
}

/// `Phi(x) = sum_i x_i^2 / (1 + x_i^2)`: bounded, nonconvex, gradient
/// Lipschitz with constant 2 (the second derivative peaks at the origin).
#[derive(Debug, Clone)]
pub struct SaturatingSquares {
    pub dim: usize,
}

impl SmoothOracle for SaturatingSquares {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        x.iter().map(|v| v * v / (1.0 + v * v)).sum()
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        for (o, v) in out.iter_mut().zip(x) {
            let s = 1.0 + v * v;
            *o = 2.0 * v / (s * s);
        }
    }

    fn lipschitz(&self) -> f64 {
        2.0
    }
}

/// `Phi(x) = |x|^4 / 4`, meant to be paired with a box of half-width
/// `radius`; on that box the Hessian `|x|^2 I + 2 x x^T` is bounded by
/// `3 n radius^2`.
#[derive(Debug, Clone)]
pub struct Quartic {
    pub dim: usize,
    pub radius: f64,
}

impl SmoothOracle for Quartic {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        let s = linalg::norm_sq(x);
        0.25 * s * s
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let s = linalg::norm_sq(x);
        for (o, v) in out.iter_mut().zip(x) {
            *o = s * v;
        }
    }

    fn lipschitz(&self) -> f64 {
        3.0 * self.dim as f64 * self.radius * self.radius
    }

    fn hessian_vec(&self, x: &[f64], v: &[f64], out: &mut [f64]) {
        let s = linalg::norm_sq(x);
        let xv = linalg::dot(x, v);
        for ((o, xi), vi) in out.iter_mut().zip(x).zip(v) {
            *o = s * vi + 2.0 * xv * xi;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn central_diff(phi: &dyn SmoothOracle, x: &[f64], i: usize, h: f64) -> f64 {
        let mut p = x.to_vec();
        let mut m = x.to_vec();
        p[i] += h;
        m[i] -= h;
        (phi.value(&p) - phi.value(&m)) / (2.0 * h)
    }

    #[test]
    fn identity_quadratic() {
        let q = Quadratic::new(vec![1.0, 0.0, 0.0, 1.0], vec![0.0, 0.0]).unwrap();
        assert_eq!(q.lipschitz(), 1.0);
        assert_eq!(q.minimizer().unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn asymmetric_matrix_rejected() {
        assert!(Quadratic::new(vec![1.0, 0.5, 0.0, 1.0], vec![0.0, 0.0]).is_err());
        assert!(Quadratic::new(vec![1.0, 0.0, 0.0], vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn saturating_gradient_matches_finite_differences() {
        let phi = SaturatingSquares { dim: 1 };
        for x in [-1.0, 0.0, 0.5] {
            let g = phi.gradient_vec(&[x])[0];
            let expected = 2.0 * x / (1.0 + x * x).powi(2);
            assert!((g - expected).abs() < 1e-15);
            let fd = central_diff(&phi, &[x], 0, 1e-6);
            assert!((g - fd).abs() <= 1e-6 * g.abs().max(1e-3));
        }
    }

    #[test]
    fn quartic_hessian_matches_default_fd() {
        let phi = Quartic { dim: 2, radius: 1.0 };
        let x = [0.3, -0.7];
        let v = [1.0, 2.0];
        let mut exact = [0.0; 2];
        phi.hessian_vec(&x, &v, &mut exact);
        let fd = Fd(phi.clone()).hessian_vec(&x, &v);
        for i in 0..2 {
            assert!((exact[i] - fd[i]).abs() < 1e-6);
        }
    }

    // Wrapper that forces the trait's finite-difference Hessian.
    #[derive(Debug)]
    struct Fd(Quartic);

    impl Fd {
        fn hessian_vec(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
            let mut out = vec![0.0; x.len()];
            SmoothOracle::hessian_vec(self, x, v, &mut out);
            out
        }
    }

    impl SmoothOracle for Fd {
        fn dim(&self) -> usize {
            self.0.dim()
        }
        fn value(&self, x: &[f64]) -> f64 {
            self.0.value(x)
        }
        fn gradient(&self, x: &[f64], out: &mut [f64]) {
            self.0.gradient(x, out)
        }
        fn lipschitz(&self) -> f64 {
            self.0.lipschitz()
        }
    }
}
