//! Nonsmooth convex parts with closed-form proximal maps, plus an exhaustive
//! grid minimizer used as an independent reference.

use std::fmt::Debug;

use crate::error::{Error, Result};
use crate::linalg;

/// Proper convex lower semicontinuous `f` with a computable prox.
///
/// `value` returns `f64::INFINITY` outside the effective domain.
pub trait NonsmoothOracle: Debug + Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    /// Writes `prox_{gamma f}(v)` into `out`.
    fn prox(&self, gamma: f64, v: &[f64], out: &mut [f64]);

    fn prox_vec(&self, gamma: f64, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        self.prox(gamma, v, &mut out);
        out
    }
}

/// `f = 0`; the prox is the identity.
#[derive(Debug, Clone)]
pub struct ZeroFunction {
    pub dim: usize,
}

impl NonsmoothOracle for ZeroFunction {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, _x: &[f64]) -> f64 {
        0.0
    }

    fn prox(&self, _gamma: f64, v: &[f64], out: &mut [f64]) {
        out.copy_from_slice(v);
    }
}

/// `f = lambda * |x|_1`.
#[derive(Debug, Clone)]
pub struct L1Norm {
    pub dim: usize,
    pub lambda: f64,
}

impl L1Norm {
    pub fn new(dim: usize, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidProblem(format!(
                "l1 weight must be positive, got {lambda}"
            )));
        }
        Ok(L1Norm { dim, lambda })
    }
}

impl NonsmoothOracle for L1Norm {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.lambda * x.iter().map(|v| v.abs()).sum::<f64>()
    }

    fn prox(&self, gamma: f64, v: &[f64], out: &mut [f64]) {
        soft_threshold_into(gamma * self.lambda, v, out);
    }
}

/// Indicator of the box `[lo, hi]`; the prox is the projection.
#[derive(Debug, Clone)]
pub struct BoxIndicator {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl BoxIndicator {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        check_box(&lo, &hi)?;
        Ok(BoxIndicator { lo, hi })
    }

    /// The cube `[-radius, radius]^dim`.
    pub fn cube(dim: usize, radius: f64) -> Result<Self> {
        Self::new(vec![-radius; dim], vec![radius; dim])
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (l, h))| *l <= *v && *v <= *h)
    }
}

impl NonsmoothOracle for BoxIndicator {
    fn dim(&self) -> usize {
        self.lo.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        if self.contains(x) {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn prox(&self, _gamma: f64, v: &[f64], out: &mut [f64]) {
        for ((o, x), (l, h)) in out.iter_mut().zip(v).zip(self.lo.iter().zip(&self.hi)) {
            *o = x.clamp(*l, *h);
        }
    }
}

fn check_box(lo: &[f64], hi: &[f64]) -> Result<()> {
    if lo.len() != hi.len() {
        return Err(Error::InvalidProblem(format!(
            "box bounds have lengths {} and {}",
            lo.len(),
            hi.len()
        )));
    }
    if let Some(i) = (0..lo.len()).find(|&i| !(lo[i] <= hi[i])) {
        return Err(Error::InvalidProblem(format!(
            "box bound lo[{i}] = {} exceeds hi[{i}] = {}",
            lo[i], hi[i]
        )));
    }
    Ok(())
}

fn soft_threshold_into(threshold: f64, v: &[f64], out: &mut [f64]) {
    for (o, x) in out.iter_mut().zip(v) {
        *o = x.signum() * (x.abs() - threshold).max(0.0);
    }
}

/// Componentwise `sign(v_i) * max(|v_i| - gamma*lambda, 0)`.
pub fn prox_soft_threshold(gamma: f64, lambda: f64, v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    soft_threshold_into(gamma * lambda, v, &mut out);
    out
}

/// Projection onto `[lo, hi]`. `gamma` has no effect.
pub fn prox_box_projection(_gamma: f64, lo: &[f64], hi: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    check_box(lo, hi)?;
    if v.len() != lo.len() {
        return Err(Error::InvalidProblem(format!(
            "vector of length {} projected onto a box of dimension {}",
            v.len(),
            lo.len()
        )));
    }
    Ok(v.iter()
        .zip(lo.iter().zip(hi))
        .map(|(x, (l, h))| x.clamp(*l, *h))
        .collect())
}

pub fn prox_zero(_gamma: f64, v: &[f64]) -> Vec<f64> {
    v.to_vec()
}

/// Uniform grid centred on the prox argument.
#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    pub step: f64,
    /// Half-width of the searched box. `None` uses `2|v| + 1`.
    pub radius: Option<f64>,
}

impl GridSpec {
    pub fn with_step(step: f64) -> Self {
        GridSpec { step, radius: None }
    }
}

/// Exhaustive minimization of `f(u) + |u - v|^2 / (2 gamma)` over a grid.
///
/// Points where `f` is infinite are skipped. Supports dimensions 1 and 2.
pub fn brute_force_prox<F>(f_value: F, gamma: f64, v: &[f64], grid: GridSpec) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64,
{
    let n = v.len();
    if n == 0 || n > 2 {
        return Err(Error::UnsupportedDimension(n));
    }
    if !(grid.step > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "grid step must be positive, got {}",
            grid.step
        )));
    }
    let min_radius = 2.0 * linalg::norm(v) + 1.0;
    let radius = grid.radius.unwrap_or(min_radius);
    if radius < min_radius {
        return Err(Error::InvalidParameter(format!(
            "grid radius {radius} below required 2|v|+1 = {min_radius}"
        )));
    }
    let half = (radius / grid.step).ceil() as i64;
    let scale = 1.0 / (2.0 * gamma);
    let offsets: Vec<f64> = (-half..=half).map(|k| k as f64 * grid.step).collect();

    let mut best = f64::INFINITY;
    let mut arg = v.to_vec();
    if n == 1 {
        for &d in &offsets {
            let u = [v[0] + d];
            let obj = f_value(&u) + scale * d * d;
            if obj < best {
                best = obj;
                arg[0] = u[0];
            }
        }
    } else {
        for &d0 in &offsets {
            let q0 = d0 * d0;
            for &d1 in &offsets {
                let u = [v[0] + d0, v[1] + d1];
                let obj = f_value(&u) + scale * (q0 + d1 * d1);
                if obj < best {
                    best = obj;
                    arg.copy_from_slice(&u);
                }
            }
        }
    }
    if best.is_finite() {
        Ok(arg)
    } else {
        Err(Error::InvalidProblem(
            "f is infinite on every grid point".to_string(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abs1(u: &[f64]) -> f64 {
        u.iter().map(|x| x.abs()).sum()
    }

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(prox_soft_threshold(1.0, 1.0, &[0.0, 0.0]), vec![0.0, 0.0]);
        assert_eq!(prox_soft_threshold(1.0, 1.0, &[2.0, -0.5]), vec![1.0, 0.0]);
        assert_eq!(prox_soft_threshold(0.5, 2.0, &[3.0]), vec![2.0]);
    }

    #[test]
    fn soft_threshold_matches_grid_minimizer() {
        let step = 1e-4;
        let bf = brute_force_prox(abs1, 1.0, &[2.0, -0.5], GridSpec::with_step(1e-3)).unwrap();
        assert!((bf[0] - 1.0).abs() <= 1e-3 && bf[1].abs() <= 1e-3);
        let bf = brute_force_prox(|u| 2.0 * abs1(u), 0.5, &[3.0], GridSpec::with_step(step)).unwrap();
        assert!((bf[0] - 2.0).abs() <= step);
    }

    #[test]
    fn box_projection_examples() {
        assert_eq!(prox_box_projection(1.0, &[-1.0], &[1.0], &[0.3]).unwrap(), vec![0.3]);
        assert_eq!(
            prox_box_projection(1.0, &[-1.0, -1.0], &[1.0, 1.0], &[5.0, -7.0]).unwrap(),
            vec![1.0, -1.0]
        );
        let v = [0.7, -3.0];
        assert_eq!(
            prox_box_projection(0.2, &[-1.0, -1.0], &[1.0, 1.0], &v).unwrap(),
            prox_box_projection(2.0, &[-1.0, -1.0], &[1.0, 1.0], &v).unwrap()
        );
    }

    #[test]
    fn inverted_box_rejected() {
        assert!(matches!(
            prox_box_projection(1.0, &[1.0], &[-1.0], &[0.0]),
            Err(Error::InvalidProblem(_))
        ));
        assert!(BoxIndicator::new(vec![0.0, 2.0], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn zero_prox_is_identity() {
        assert_eq!(prox_zero(1.0, &[1.0, 2.0, 3.0]), vec![1.0, 2.0, 3.0]);
        assert_eq!(prox_zero(100.0, &[0.0]), vec![0.0]);
    }

    #[test]
    fn brute_force_examples() {
        let v = [0.123456];
        let bf = brute_force_prox(|_| 0.0, 1.0, &v, GridSpec::with_step(1e-4)).unwrap();
        assert_eq!(bf, v.to_vec());

        let bf = brute_force_prox(abs1, 1.0, &[2.0], GridSpec::with_step(1e-4)).unwrap();
        assert!((bf[0] - 1.0).abs() <= 1e-4);

        let unit = BoxIndicator::cube(1, 1.0).unwrap();
        let bf = brute_force_prox(|u| unit.value(u), 1.0, &[3.0], GridSpec::with_step(1e-4)).unwrap();
        assert!((bf[0] - 1.0).abs() <= 1e-4);
    }

    #[test]
    fn brute_force_rejects_high_dimension() {
        assert_eq!(
            brute_force_prox(|_| 0.0, 1.0, &[0.0; 3], GridSpec::with_step(0.1)),
            Err(Error::UnsupportedDimension(3))
        );
    }

    #[test]
    fn box_value_is_infinite_outside() {
        let b = BoxIndicator::cube(2, 1.0).unwrap();
        assert_eq!(b.value(&[0.5, 1.0]), 0.0);
        assert_eq!(b.value(&[0.5, 1.5]), f64::INFINITY);
    }
}
