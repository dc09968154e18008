//! Composite objectives `f + Phi` as pairs of oracles.

pub mod prox;
pub mod smooth;

use std::sync::Arc;

pub use prox::{
    brute_force_prox, prox_box_projection, prox_soft_threshold, prox_zero, BoxIndicator,
    GridSpec, L1Norm, NonsmoothOracle, ZeroFunction,
};
pub use smooth::{Quadratic, Quartic, SaturatingSquares, SmoothOracle, ZeroSmooth};

use crate::error::{Error, Result};
use crate::linalg;

/// Tolerance on `|x - prox(x - gamma grad Phi(x))|` for a point to be
/// accepted as critical.
pub const CRITICAL_POINT_TOL: f64 = 1e-10;

pub const SMOOTH_QUADRATIC: &str = "smooth-quadratic";
pub const LASSO_LIKE: &str = "lasso-like";
pub const BOX_CONSTRAINED: &str = "box-constrained";
pub const NONCONVEX_SMOOTH: &str = "nonconvex-smooth";
pub const QUARTIC: &str = "quartic";

#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub smooth: Arc<dyn SmoothOracle>,
    pub nonsmooth: Arc<dyn NonsmoothOracle>,
    pub known_critical_points: Option<Vec<Vec<f64>>>,
    pub coercive: bool,
}

impl ProblemSpec {
    /// Builds a problem and checks every listed critical point against the
    /// forward-backward fixed-point identity.
    pub fn new(
        name: impl Into<String>,
        smooth: Arc<dyn SmoothOracle>,
        nonsmooth: Arc<dyn NonsmoothOracle>,
        known_critical_points: Option<Vec<Vec<f64>>>,
        coercive: bool,
    ) -> Result<Self> {
        let name = name.into();
        if smooth.dim() != nonsmooth.dim() || smooth.dim() == 0 {
            return Err(Error::InvalidProblem(format!(
                "{name}: smooth part has dimension {}, nonsmooth part {}",
                smooth.dim(),
                nonsmooth.dim()
            )));
        }
        let spec = ProblemSpec {
            name,
            smooth,
            nonsmooth,
            known_critical_points,
            coercive,
        };
        let gamma = spec.validation_gamma();
        for x in spec.known_critical_points.iter().flatten() {
            if x.len() != spec.dim() {
                return Err(Error::InvalidProblem(format!(
                    "{}: critical point has dimension {}",
                    spec.name,
                    x.len()
                )));
            }
            let r = spec.fixed_point_gap(gamma, x);
            if !(r <= CRITICAL_POINT_TOL) {
                return Err(Error::InvalidProblem(format!(
                    "{}: listed critical point {x:?} has fixed-point gap {r:e}",
                    spec.name
                )));
            }
        }
        Ok(spec)
    }

    pub fn dim(&self) -> usize {
        self.smooth.dim()
    }

    pub fn lipschitz(&self) -> f64 {
        self.smooth.lipschitz()
    }

    /// Step used to validate critical points, `1 / (1 + L)`.
    pub fn validation_gamma(&self) -> f64 {
        1.0 / (1.0 + self.lipschitz())
    }

    /// `(f + Phi)(x)`; infinite outside the domain of `f`.
    pub fn objective(&self, x: &[f64]) -> f64 {
        let fv = self.nonsmooth.value(x);
        if fv.is_infinite() {
            return fv;
        }
        fv + self.smooth.value(x)
    }

    /// `|x - prox_{gamma f}(x - gamma grad Phi(x))|`, zero exactly at
    /// critical points.
    pub fn fixed_point_gap(&self, gamma: f64, x: &[f64]) -> f64 {
        let mut g = self.smooth.gradient_vec(x);
        for (gi, xi) in g.iter_mut().zip(x) {
            *gi = xi - gamma * *gi;
        }
        let p = self.nonsmooth.prox_vec(gamma, &g);
        linalg::dist(x, &p)
    }

    /// Prox residual `|x - prox_{gamma f}(x - gamma grad Phi(x))| / gamma`.
    pub fn prox_residual(&self, gamma: f64, x: &[f64]) -> f64 {
        self.fixed_point_gap(gamma, x) / gamma
    }
}

/// Forward-backward iteration with step `1/L` until the iterates stall.
/// Used to locate critical points of the convex catalog entries.
pub fn forward_backward_fixed_point(
    smooth: &dyn SmoothOracle,
    nonsmooth: &dyn NonsmoothOracle,
    start: &[f64],
) -> Vec<f64> {
    let gamma = 1.0 / smooth.lipschitz().max(1e-12);
    let n = start.len();
    let mut x = start.to_vec();
    let mut g = vec![0.0; n];
    let mut next = vec![0.0; n];
    for _ in 0..1_000_000 {
        smooth.gradient(&x, &mut g);
        for (gi, xi) in g.iter_mut().zip(&x) {
            *gi = xi - gamma * *gi;
        }
        nonsmooth.prox(gamma, &g, &mut next);
        let step = linalg::dist(&x, &next);
        std::mem::swap(&mut x, &mut next);
        if step <= 1e-16 * linalg::norm(&x).max(1.0) {
            break;
        }
    }
    x
}

pub fn smooth_quadratic(q: Vec<f64>, c: Vec<f64>) -> Result<ProblemSpec> {
    let quad = Quadratic::new(q, c)?;
    let n = quad.dim();
    let xbar = quad.minimizer().ok_or_else(|| {
        Error::InvalidProblem("smooth-quadratic: Q is not positive definite".into())
    })?;
    ProblemSpec::new(
        SMOOTH_QUADRATIC,
        Arc::new(quad),
        Arc::new(ZeroFunction { dim: n }),
        Some(vec![xbar]),
        true,
    )
}

pub fn lasso_like(q: Vec<f64>, c: Vec<f64>, lambda: f64) -> Result<ProblemSpec> {
    let quad = Quadratic::new(q, c)?;
    if quad.minimizer().is_none() {
        return Err(Error::InvalidProblem(
            "lasso-like: Q is not positive definite".into(),
        ));
    }
    let l1 = L1Norm::new(quad.dim(), lambda)?;
    let xbar = forward_backward_fixed_point(&quad, &l1, &vec![0.0; quad.dim()]);
    ProblemSpec::new(LASSO_LIKE, Arc::new(quad), Arc::new(l1), Some(vec![xbar]), true)
}

pub fn box_constrained(q: Vec<f64>, c: Vec<f64>, lo: Vec<f64>, hi: Vec<f64>) -> Result<ProblemSpec> {
    let quad = Quadratic::new(q, c)?;
    if quad.minimizer().is_none() {
        return Err(Error::InvalidProblem(
            "box-constrained: Q is not positive definite".into(),
        ));
    }
    let bx = BoxIndicator::new(lo, hi)?;
    let start: Vec<f64> = bx.lo().iter().zip(bx.hi()).map(|(l, h)| 0.5 * (l + h)).collect();
    let xbar = forward_backward_fixed_point(&quad, &bx, &start);
    ProblemSpec::new(BOX_CONSTRAINED, Arc::new(quad), Arc::new(bx), Some(vec![xbar]), true)
}

/// Saturating squares, optionally restricted to the cube of half-width
/// `radius`. Without the box the objective is bounded and not coercive.
pub fn nonconvex_smooth(dim: usize, radius: Option<f64>) -> Result<ProblemSpec> {
    let nonsmooth: Arc<dyn NonsmoothOracle> = match radius {
        Some(r) => Arc::new(BoxIndicator::cube(dim, r)?),
        None => Arc::new(ZeroFunction { dim }),
    };
    ProblemSpec::new(
        NONCONVEX_SMOOTH,
        Arc::new(SaturatingSquares { dim }),
        nonsmooth,
        Some(vec![vec![0.0; dim]]),
        radius.is_some(),
    )
}

pub fn quartic(dim: usize, radius: f64) -> Result<ProblemSpec> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::InvalidProblem(format!(
            "quartic: box radius must be positive, got {radius}"
        )));
    }
    ProblemSpec::new(
        QUARTIC,
        Arc::new(Quartic { dim, radius }),
        Arc::new(BoxIndicator::cube(dim, radius)?),
        Some(vec![vec![0.0; dim]]),
        true,
    )
}

/// Default coupled matrix shared by the quadratic entries; eigenvalues
/// `(5 ± sqrt 5) / 2`.
pub const DEFAULT_Q: [f64; 4] = [3.0, 1.0, 1.0, 2.0];

/// The five reference problems, all in dimension 2.
pub fn catalog() -> Vec<ProblemSpec> {
    let q = DEFAULT_Q.to_vec();
    vec![
        smooth_quadratic(q.clone(), vec![1.0, 1.0]),
        lasso_like(q.clone(), vec![2.0, -0.5], 1.0),
        box_constrained(q, vec![1.5, 2.0], vec![-0.5; 2], vec![0.5; 2]),
        nonconvex_smooth(2, Some(2.0)),
        quartic(2, 1.0),
    ]
    .into_iter()
    .map(|p| p.expect("catalog entries are valid"))
    .collect()
}

pub fn catalog_names() -> [&'static str; 5] {
    [SMOOTH_QUADRATIC, LASSO_LIKE, BOX_CONSTRAINED, NONCONVEX_SMOOTH, QUARTIC]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(u: &[f64], v: &[f64], tol: f64) -> bool {
        linalg::dist(u, v) <= tol
    }

    #[test]
    fn catalog_has_five_valid_entries() {
        let cat = catalog();
        let names: Vec<_> = cat.iter().map(|p| p.name.as_str()).collect();
        assert_eq!(names, catalog_names());
        assert!(cat.iter().all(|p| p.coercive));
    }

    #[test]
    fn catalog_critical_points() {
        let cat = catalog();
        let xbar = |i: usize| cat[i].known_critical_points.as_ref().unwrap()[0].clone();
        assert!(close(&xbar(0), &[0.2, 0.4], 1e-14));
        assert!(close(&xbar(1), &[1.0 / 3.0, 0.0], 1e-12));
        assert!(close(&xbar(2), &[1.0 / 3.0, 0.5], 1e-12));
        assert_eq!(xbar(3), vec![0.0, 0.0]);
        let l = (5.0 + 5f64.sqrt()) / 2.0;
        assert!((cat[0].lipschitz() - l).abs() < 1e-9);
        assert_eq!(cat[3].lipschitz(), 2.0);
        assert_eq!(cat[4].lipschitz(), 6.0);
    }

    #[test]
    fn identity_quadratic_entry() {
        let p = smooth_quadratic(vec![1.0, 0.0, 0.0, 1.0], vec![0.0, 0.0]).unwrap();
        assert_eq!(p.known_critical_points.unwrap()[0], vec![0.0, 0.0]);
        assert_eq!(p.smooth.lipschitz(), 1.0);
    }

    #[test]
    fn lasso_one_dimensional_minimizer() {
        // 0 in u - 2 + d|u| gives u = 1.
        let p = lasso_like(vec![1.0], vec![2.0], 1.0).unwrap();
        let u = p.known_critical_points.as_ref().unwrap()[0][0];
        assert!((u - 1.0).abs() < 1e-14);
        let grid = brute_force_prox(
            |v| p.objective(v) + 0.0,
            1e12,
            &[0.0],
            GridSpec {
                step: 1e-4,
                radius: Some(3.0),
            },
        )
        .unwrap();
        assert!((grid[0] - 1.0).abs() <= 1e-4);
    }

    #[test]
    fn wrong_critical_point_rejected() {
        let quad = Quadratic::new(vec![1.0], vec![1.0]).unwrap();
        let err = ProblemSpec::new(
            "typo",
            Arc::new(quad),
            Arc::new(ZeroFunction { dim: 1 }),
            Some(vec![vec![0.9]]),
            true,
        );
        assert!(matches!(err, Err(Error::InvalidProblem(_))));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let err = ProblemSpec::new(
            "bad",
            Arc::new(ZeroSmooth { dim: 2 }),
            Arc::new(ZeroFunction { dim: 3 }),
            None,
            false,
        );
        assert!(err.is_err());
    }

    #[test]
    fn unboxed_nonconvex_is_not_coercive() {
        assert!(!nonconvex_smooth(3, None).unwrap().coercive);
    }
}
