//! Lyapunov diagnostics along trajectories.
//!
//! The regularized energy
//!
//! ```text
//! H(u, v, w) = (f + Phi)(u) + |u - v|^2 / (2 gamma) + |a v + b w|^2 / (2 gamma a)
//! ```
//!
//! is evaluated at `(z, x, y)` with `z = xdot + x`. Along exact trajectories
//! with admissible parameters it decreases at least as fast as
//! `m1 |xdot|^2 + m2 |ydot|^2`, and the explicit subgradient `zeta` is bounded
//! by `c1 |xdot| + c2 |ydot|`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{DerivedState, Sample, State, StopReason, Trajectory};
use crate::linalg;
use crate::params::{lyapunov_constants, LyapunovConstants, SystemParams};
use crate::problems::ProblemSpec;

/// Absolute slack allowed in the subgradient bound.
pub const ZETA_SLACK: f64 = 1e-12;

/// Fraction of the predicted dissipation that the integrated energy drop must
/// reach.
pub const DISSIPATION_FACTOR: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub h_value: f64,
    /// `|x - prox_{gamma f}(x - gamma grad Phi(x))| / gamma`
    pub prox_residual: f64,
    pub xdot_norm: f64,
    pub ydot_norm: f64,
    pub axby_norm: f64,
    /// `c1 |xdot| + c2 |ydot|`
    pub zeta_bound: f64,
}

/// `(f + Phi)(z) + |xdot|^2 / (2 gamma) + |a x + b y|^2 / (2 gamma a)`.
///
/// Infinite when `z` leaves the domain of `f`, which only a faulty prox can
/// cause.
pub fn h_value(problem: &ProblemSpec, params: &SystemParams, state: &State, derived: &DerivedState) -> f64 {
    let SystemParams { a, b, gamma, .. } = *params;
    let obj = problem.objective(&derived.z);
    if obj.is_infinite() {
        return obj;
    }
    let axby: f64 = state
        .x
        .iter()
        .zip(&state.y)
        .map(|(x, y)| (a * x + b * y).powi(2))
        .sum();
    obj + linalg::norm_sq(&derived.xdot) / (2.0 * gamma) + axby / (2.0 * gamma * a)
}

pub fn record(
    problem: &ProblemSpec,
    params: &SystemParams,
    constants: &LyapunovConstants,
    state: &State,
    derived: &DerivedState,
) -> DiagnosticsRecord {
    let xdot_norm = linalg::norm(&derived.xdot);
    let ydot_norm = linalg::norm(&derived.ydot);
    let axby: Vec<f64> = state
        .x
        .iter()
        .zip(&state.y)
        .map(|(x, y)| params.a * x + params.b * y)
        .collect();
    DiagnosticsRecord {
        h_value: h_value(problem, params, state, derived),
        prox_residual: problem.prox_residual(params.gamma, &state.x),
        xdot_norm,
        ydot_norm,
        axby_norm: linalg::norm(&axby),
        zeta_bound: constants.c1 * xdot_norm + constants.c2 * ydot_norm,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecreaseReport {
    /// Largest `H(t_{k+1}) - H(t_k)` over consecutive samples.
    pub max_jump: f64,
    /// `10 dt^4 (1 + max |H|)`
    pub jump_tolerance: f64,
    pub jumps_ok: bool,
    /// `H(t_K) - H(t_0)`
    pub h_change: f64,
    /// Trapezoidal integral of `m1 |xdot|^2 + m2 |ydot|^2`.
    pub dissipation: f64,
    pub integrated_ok: bool,
}

impl DecreaseReport {
    pub fn passed(&self) -> bool {
        self.jumps_ok && self.integrated_ok
    }
}

pub fn check_decrease(trajectory: &Trajectory) -> DecreaseReport {
    let constants = lyapunov_constants(&trajectory.params);
    let dt = trajectory.settings.dt;
    let samples = &trajectory.samples;

    let h: Vec<f64> = samples.iter().map(|s| s.diagnostics.h_value).collect();
    let max_abs_h = h.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let jump_tolerance = 10.0 * dt.powi(4) * (1.0 + max_abs_h);
    let max_jump = h
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(0.0f64, |m, j| if j.is_nan() { f64::INFINITY } else { m.max(j) });

    let rate = |s: &Sample| {
        constants.m1 * s.diagnostics.xdot_norm.powi(2) + constants.m2 * s.diagnostics.ydot_norm.powi(2)
    };
    let dissipation: f64 = samples
        .windows(2)
        .map(|w| 0.5 * (rate(&w[0]) + rate(&w[1])) * (w[1].state.t - w[0].state.t))
        .sum();
    let h_change = h.last().copied().unwrap_or(0.0) - h.first().copied().unwrap_or(0.0);

    DecreaseReport {
        max_jump,
        jump_tolerance,
        jumps_ok: max_jump <= jump_tolerance,
        h_change,
        dissipation,
        integrated_ok: h_change <= -DISSIPATION_FACTOR * dissipation,
    }
}

/// The explicit element of the subdifferential of `H` at `(z, x, y)`.
pub fn zeta(problem: &ProblemSpec, params: &SystemParams, sample: &Sample) -> Vec<f64> {
    let SystemParams { a, b, gamma, .. } = *params;
    let x = &sample.state.x;
    let d = &sample.derived;
    let gx = problem.smooth.gradient_vec(x);
    let gz = problem.smooth.gradient_vec(&d.z);
    let n = x.len();
    let mut out = Vec::with_capacity(3 * n);
    out.extend((0..n).map(|i| gz[i] - gx[i] + d.ydot[i] / gamma));
    out.extend((0..n).map(|i| -d.xdot[i] / gamma - d.ydot[i] / gamma));
    out.extend((0..n).map(|i| -b / (gamma * a) * d.ydot[i]));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZetaReport {
    pub samples: usize,
    pub violations: usize,
    /// Largest `|zeta| - (c1 |xdot| + c2 |ydot|)`.
    pub max_excess: f64,
}

impl ZetaReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

pub fn zeta_bound_check(problem: &ProblemSpec, trajectory: &Trajectory) -> ZetaReport {
    let params = &trajectory.params;
    let mut violations = 0;
    let mut max_excess = f64::NEG_INFINITY;
    for s in &trajectory.samples {
        let excess = linalg::norm(&zeta(problem, params, s)) - s.diagnostics.zeta_bound;
        if !(excess <= ZETA_SLACK) {
            violations += 1;
        }
        max_excess = max_excess.max(excess);
    }
    ZetaReport {
        samples: trajectory.samples.len(),
        violations,
        max_excess,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitReport {
    pub x_limit: Vec<f64>,
    pub y_limit: Vec<f64>,
    pub prox_residual_at_limit: f64,
    /// `|y_limit + (a/b) x_limit|`
    pub y_relation_error: f64,
    pub h_at_limit: f64,
}

/// Terminal point of a stationary trajectory, checked for criticality.
pub fn limit_report(trajectory: &Trajectory, problem: &ProblemSpec) -> Result<LimitReport> {
    if trajectory.stop_reason != StopReason::Stationarity {
        return Err(Error::NotConverged(trajectory.stop_reason.to_string()));
    }
    let params = &trajectory.params;
    let last = trajectory.last();
    let x = &last.state.x;
    let y = &last.state.y;
    let ratio = params.a / params.b;
    let rel: Vec<f64> = x.iter().zip(y).map(|(x, y)| y + ratio * x).collect();
    Ok(LimitReport {
        x_limit: x.clone(),
        y_limit: y.clone(),
        prox_residual_at_limit: problem.prox_residual(params.gamma, x),
        y_relation_error: linalg::norm(&rel),
        h_at_limit: last.diagnostics.h_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::{integrate, rhs, IntegrationSettings};
    use crate::problems::{self, ProblemSpec, ZeroFunction, ZeroSmooth};
    use std::sync::Arc;

    fn witness() -> SystemParams {
        SystemParams::new(0.5, 1.0, 0.01, 1.0).unwrap()
    }

    #[test]
    fn h_value_hand_example() {
        let p = problems::smooth_quadratic(vec![1.0], vec![0.0]).unwrap();
        let params = witness();
        let state = State {
            t: 0.0,
            x: vec![1.0],
            y: vec![0.0],
        };
        let d = rhs(&p, &params, &state.x, &state.y).unwrap();
        let h = h_value(&p, &params, &state, &d);
        assert!((h - 38.12505).abs() < 1e-12, "{h}");
    }

    #[test]
    fn h_value_at_rest_point_is_objective() {
        let p = problems::lasso_like(vec![1.0], vec![2.0], 1.0).unwrap();
        let params = witness();
        let state = State {
            t: 0.0,
            x: vec![1.0],
            y: vec![-0.5],
        };
        let d = rhs(&p, &params, &state.x, &state.y).unwrap();
        assert_eq!(h_value(&p, &params, &state, &d), p.objective(&[1.0]));
    }

    #[test]
    fn h_value_zero_problem() {
        let p = ProblemSpec::new(
            "zero",
            Arc::new(ZeroSmooth { dim: 1 }),
            Arc::new(ZeroFunction { dim: 1 }),
            None,
            false,
        )
        .unwrap();
        let state = State {
            t: 0.0,
            x: vec![0.0],
            y: vec![0.0],
        };
        let d = rhs(&p, &witness(), &state.x, &state.y).unwrap();
        assert_eq!(h_value(&p, &witness(), &state, &d), 0.0);
    }

    #[test]
    fn rest_trajectory_passes_everything() {
        let p = problems::lasso_like(vec![1.0], vec![2.0], 1.0).unwrap();
        let tr = integrate(&p, &witness(), &[1.0], &[-0.5], IntegrationSettings::new(1e-3, 5.0)).unwrap();
        let dec = check_decrease(&tr);
        assert_eq!(dec.max_jump, 0.0);
        assert!(dec.passed());
        let z = zeta_bound_check(&p, &tr);
        assert!(z.passed());
        assert_eq!(z.max_excess, 0.0);
        let lim = limit_report(&tr, &p).unwrap();
        assert_eq!(lim.x_limit, vec![1.0]);
        assert_eq!(lim.y_limit, vec![-0.5]);
    }

    #[test]
    fn limit_report_requires_stationarity() {
        let p = problems::smooth_quadratic(vec![1.0], vec![0.0]).unwrap();
        let tr = integrate(&p, &witness(), &[1.0], &[0.0], IntegrationSettings::new(1e-3, 0.5)).unwrap();
        assert!(matches!(limit_report(&tr, &p), Err(Error::NotConverged(_))));
    }

    #[test]
    fn linear_trajectory_decreases() {
        let p = problems::smooth_quadratic(vec![1.0], vec![0.0]).unwrap();
        let params = witness();
        let tr = integrate(&p, &params, &[1.0], &[0.0], IntegrationSettings::new(params.default_dt(), 5.0)).unwrap();
        let dec = check_decrease(&tr);
        assert!(dec.passed(), "{dec:?}");
        assert!(zeta_bound_check(&p, &tr).passed());
    }

    #[test]
    fn zeta_reduces_to_gain_terms_without_potential() {
        let p = ProblemSpec::new(
            "zero",
            Arc::new(ZeroSmooth { dim: 1 }),
            Arc::new(ZeroFunction { dim: 1 }),
            None,
            false,
        )
        .unwrap();
        let params = SystemParams::new(0.5, 1.0, 0.1, 0.0).unwrap();
        let tr = integrate(&p, &params, &[1.0], &[2.0], IntegrationSettings::new(1e-3, 0.01)).unwrap();
        let s = tr.last();
        let z = zeta(&p, &params, s);
        let (xd, yd) = (s.derived.xdot[0], s.derived.ydot[0]);
        assert!((z[0] - yd / 0.1).abs() < 1e-12);
        assert!((z[1] + xd / 0.1 + yd / 0.1).abs() < 1e-12);
        assert!((z[2] + 1.0 / (0.1 * 0.5) * yd).abs() < 1e-12);
        assert!(zeta_bound_check(&p, &tr).passed());
    }
}
