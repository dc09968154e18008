//! Fixed-step integration of the proximal-gradient system
//!
//! ```text
//! xdot + x = prox_{gamma f}[x - gamma grad Phi(x) - a x - b y]
//! ydot     = -(a x + b y)
//! ```
//!
//! with classical four-stage Runge-Kutta on the stacked `2n` state. The prox
//! is evaluated at every stage point.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{self, DiagnosticsRecord};
use crate::error::{Error, Result};
use crate::linalg;
use crate::params::{check_conditions, lyapunov_constants, SystemParams};
use crate::problems::{ProblemSpec, SmoothOracle};

/// Abort when `|x| + |y|` exceeds this.
pub const DIVERGENCE_BOUND: f64 = 1e12;

pub const DEFAULT_STOP_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub t: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivedState {
    /// Prox output, equal to `xdot + x`.
    pub z: Vec<f64>,
    pub xdot: Vec<f64>,
    pub ydot: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Sample {
    pub state: State,
    pub derived: DerivedState,
    pub diagnostics: DiagnosticsRecord,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    TimeLimit,
    Stationarity,
    Divergence,
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StopReason::TimeLimit => "time-limit",
            StopReason::Stationarity => "stationarity",
            StopReason::Divergence => "divergence",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceInfo {
    pub t: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationSettings {
    pub dt: f64,
    pub t_max: f64,
    pub stop_tol: f64,
    pub sample_stride: usize,
    /// Integrate even when the admissibility condition fails.
    pub override_param_check: bool,
}

impl IntegrationSettings {
    pub fn new(dt: f64, t_max: f64) -> Self {
        IntegrationSettings {
            dt,
            t_max,
            stop_tol: DEFAULT_STOP_TOL,
            sample_stride: 1,
            override_param_check: false,
        }
    }

    pub fn stop_tol(mut self, tol: f64) -> Self {
        self.stop_tol = tol;
        self
    }

    pub fn sample_stride(mut self, stride: usize) -> Self {
        self.sample_stride = stride;
        self
    }

    pub fn override_param_check(mut self, yes: bool) -> Self {
        self.override_param_check = yes;
        self
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub params: SystemParams,
    pub problem: String,
    pub settings: IntegrationSettings,
    pub stop_reason: StopReason,
    pub divergence: Option<DivergenceInfo>,
}

impl Trajectory {
    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectories hold at least one sample")
    }

    pub fn dim(&self) -> usize {
        self.samples[0].state.x.len()
    }

    pub fn csv_header(n: usize) -> String {
        let mut cols = vec!["t".to_string()];
        cols.extend((0..n).map(|i| format!("x_{i}")));
        cols.extend((0..n).map(|i| format!("y_{i}")));
        cols.extend(
            ["xdot_norm", "ydot_norm", "axby_norm", "H", "prox_residual"]
                .iter()
                .map(|s| s.to_string()),
        );
        cols.join(",")
    }

    /// One row per sample, every value written with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", Self::csv_header(self.dim()))?;
        for s in &self.samples {
            let d = &s.diagnostics;
            let mut row = String::with_capacity(32 * (2 * s.state.x.len() + 6));
            push_value(&mut row, s.state.t);
            for v in s.state.x.iter().chain(&s.state.y) {
                row.push(',');
                push_value(&mut row, *v);
            }
            for v in [d.xdot_norm, d.ydot_norm, d.axby_norm, d.h_value, d.prox_residual] {
                row.push(',');
                push_value(&mut row, v);
            }
            writeln!(w, "{row}")?;
        }
        Ok(())
    }
}

fn push_value(row: &mut String, v: f64) {
    use std::fmt::Write as _;
    let _ = write!(row, "{v:.16e}");
}

/// Scratch buffers for one vector-field evaluation.
struct Field<'a> {
    problem: &'a ProblemSpec,
    params: SystemParams,
    grad: Vec<f64>,
    arg: Vec<f64>,
}

impl<'a> Field<'a> {
    fn new(problem: &'a ProblemSpec, params: SystemParams) -> Self {
        let n = problem.dim();
        Field {
            problem,
            params,
            grad: vec![0.0; n],
            arg: vec![0.0; n],
        }
    }

    /// Writes `z`, `xdot`, `ydot` at `(x, y)`. One gradient and one prox.
    fn eval(&mut self, x: &[f64], y: &[f64], z: &mut [f64], xdot: &mut [f64], ydot: &mut [f64]) -> bool {
        let SystemParams { a, b, gamma, .. } = self.params;
        self.problem.smooth.gradient(x, &mut self.grad);
        for i in 0..x.len() {
            let axby = a * x[i] + b * y[i];
            self.arg[i] = x[i] - gamma * self.grad[i] - axby;
            ydot[i] = -axby;
        }
        self.problem.nonsmooth.prox(gamma, &self.arg, z);
        for i in 0..x.len() {
            xdot[i] = z[i] - x[i];
        }
        linalg::all_finite(z) && linalg::all_finite(ydot)
    }
}

/// Right-hand side of the system at `(x, y)`.
pub fn rhs(problem: &ProblemSpec, params: &SystemParams, x: &[f64], y: &[f64]) -> Result<DerivedState> {
    let n = problem.dim();
    if x.len() != n || y.len() != n {
        return Err(Error::InvalidProblem(format!(
            "state has dimensions ({}, {}) but the problem has dimension {n}",
            x.len(),
            y.len()
        )));
    }
    let mut field = Field::new(problem, *params);
    let mut d = DerivedState {
        z: vec![0.0; n],
        xdot: vec![0.0; n],
        ydot: vec![0.0; n],
    };
    if field.eval(x, y, &mut d.z, &mut d.xdot, &mut d.ydot) {
        Ok(d)
    } else {
        Err(Error::NonFinite {
            x: x.to_vec(),
            y: y.to_vec(),
        })
    }
}

fn stationary(d: &DerivedState, tol: f64) -> bool {
    linalg::norm(&d.xdot) + linalg::norm(&d.ydot) < tol
}

fn blown_up(x: &[f64], y: &[f64]) -> bool {
    !(linalg::all_finite(x) && linalg::all_finite(y))
        || linalg::norm(x) + linalg::norm(y) > DIVERGENCE_BOUND
}

/// Integrates from `(x0, y0)` until `t_max`, stationarity
/// (`|xdot| + |ydot| < stop_tol`) or divergence.
pub fn integrate(
    problem: &ProblemSpec,
    params: &SystemParams,
    x0: &[f64],
    y0: &[f64],
    settings: IntegrationSettings,
) -> Result<Trajectory> {
    let n = problem.dim();
    if x0.len() != n || y0.len() != n {
        return Err(Error::InvalidProblem(format!(
            "initial state has dimensions ({}, {}) but {} has dimension {n}",
            x0.len(),
            y0.len(),
            problem.name
        )));
    }
    let IntegrationSettings {
        dt,
        t_max,
        stop_tol,
        sample_stride,
        override_param_check,
    } = settings;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    if !(t_max.is_finite() && t_max >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "t_max must be nonnegative, got {t_max}"
        )));
    }
    if !(stop_tol >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "stop_tol must be nonnegative, got {stop_tol}"
        )));
    }
    if sample_stride == 0 {
        return Err(Error::InvalidParameter("sample_stride must be at least 1".into()));
    }
    let report = check_conditions(params)?;
    if !report.admissible() {
        if override_param_check {
            log::warn!("integrating with inadmissible parameters: {}", report.describe_violation());
        } else {
            return Err(Error::Inadmissible(report.describe_violation()));
        }
    }
    if dt > params.gamma / 10.0 {
        log::warn!("dt = {dt} exceeds gamma/10 = {}", params.gamma / 10.0);
    }

    let constants = lyapunov_constants(params);
    let mut field = Field::new(problem, *params);
    let mut traj = Trajectory {
        samples: Vec::new(),
        params: *params,
        problem: problem.name.clone(),
        settings,
        stop_reason: StopReason::TimeLimit,
        divergence: None,
    };

    let mut x = x0.to_vec();
    let mut y = y0.to_vec();
    let mut cur = DerivedState {
        z: vec![0.0; n],
        xdot: vec![0.0; n],
        ydot: vec![0.0; n],
    };
    let push = |traj: &mut Trajectory, t: f64, x: &[f64], y: &[f64], d: &DerivedState| {
        let state = State {
            t,
            x: x.to_vec(),
            y: y.to_vec(),
        };
        let diagnostics = diagnostics::record(problem, params, &constants, &state, d);
        traj.samples.push(Sample {
            state,
            derived: d.clone(),
            diagnostics,
        });
    };

    let finite = field.eval(&x, &y, &mut cur.z, &mut cur.xdot, &mut cur.ydot);
    push(&mut traj, 0.0, &x, &y, &cur);
    if !finite || blown_up(&x, &y) {
        traj.stop_reason = StopReason::Divergence;
        traj.divergence = Some(DivergenceInfo { t: 0.0, x, y });
        return Ok(traj);
    }
    if stationary(&cur, stop_tol) {
        traj.stop_reason = StopReason::Stationarity;
        return Ok(traj);
    }

    let ratio = t_max / dt;
    let full_steps = (ratio + 1e-9).floor() as u64;
    let tail = t_max - full_steps as f64 * dt;
    let total_steps = if tail > 1e-9 * dt { full_steps + 1 } else { full_steps };

    // stage buffers: (z, xdot, ydot) for stages 2..4 and the probe state
    let mut k2 = cur.clone();
    let mut k3 = cur.clone();
    let mut k4 = cur.clone();
    let mut xs = vec![0.0; n];
    let mut ys = vec![0.0; n];
    let mut prev_t = 0.0;
    let mut prev_sampled = true;

    for step in 1..=total_steps {
        let last = step == total_steps;
        let (h, t) = if step > full_steps {
            (tail, t_max)
        } else if last {
            (dt, t_max)
        } else {
            (dt, step as f64 * dt)
        };

        let mut ok = true;
        for i in 0..n {
            xs[i] = x[i] + 0.5 * h * cur.xdot[i];
            ys[i] = y[i] + 0.5 * h * cur.ydot[i];
        }
        ok &= field.eval(&xs, &ys, &mut k2.z, &mut k2.xdot, &mut k2.ydot);
        for i in 0..n {
            xs[i] = x[i] + 0.5 * h * k2.xdot[i];
            ys[i] = y[i] + 0.5 * h * k2.ydot[i];
        }
        ok &= field.eval(&xs, &ys, &mut k3.z, &mut k3.xdot, &mut k3.ydot);
        for i in 0..n {
            xs[i] = x[i] + h * k3.xdot[i];
            ys[i] = y[i] + h * k3.ydot[i];
        }
        ok &= field.eval(&xs, &ys, &mut k4.z, &mut k4.xdot, &mut k4.ydot);
        for i in 0..n {
            xs[i] = x[i] + h / 6.0 * (cur.xdot[i] + 2.0 * k2.xdot[i] + 2.0 * k3.xdot[i] + k4.xdot[i]);
            ys[i] = y[i] + h / 6.0 * (cur.ydot[i] + 2.0 * k2.ydot[i] + 2.0 * k3.ydot[i] + k4.ydot[i]);
        }
        if ok {
            ok = field.eval(&xs, &ys, &mut k2.z, &mut k2.xdot, &mut k2.ydot);
        }
        if !ok || blown_up(&xs, &ys) {
            if !prev_sampled {
                push(&mut traj, prev_t, &x, &y, &cur);
            }
            traj.stop_reason = StopReason::Divergence;
            traj.divergence = Some(DivergenceInfo { t, x: xs, y: ys });
            return Ok(traj);
        }
        std::mem::swap(&mut x, &mut xs);
        std::mem::swap(&mut y, &mut ys);
        std::mem::swap(&mut cur, &mut k2);

        let stop = stationary(&cur, stop_tol);
        prev_t = t;
        prev_sampled = stop || last || step % sample_stride as u64 == 0;
        if prev_sampled {
            push(&mut traj, t, &x, &y, &cur);
        }
        if stop {
            traj.stop_reason = StopReason::Stationarity;
            return Ok(traj);
        }
    }
    traj.stop_reason = StopReason::TimeLimit;
    Ok(traj)
}

/// `(a, b) = (lambda - 1/gamma, 1/gamma)`, the first-order gains equivalent
/// to the damped Newton-like second-order system.
pub fn first_order_gains(lambda: f64, gamma: f64) -> (f64, f64) {
    (lambda - 1.0 / gamma, 1.0 / gamma)
}

/// Initial velocity of the second-order system that matches the first-order
/// system started at `(x0, y0)` with `f = 0`.
pub fn matched_velocity(smooth: &dyn SmoothOracle, params: &SystemParams, x0: &[f64], y0: &[f64]) -> Vec<f64> {
    let g = smooth.gradient_vec(x0);
    (0..x0.len())
        .map(|i| -params.gamma * g[i] - params.a * x0[i] - params.b * y0[i])
        .collect()
}

#[derive(Debug, Clone)]
pub struct SecondOrderPath {
    pub times: Vec<f64>,
    pub xs: Vec<Vec<f64>>,
    pub stop_reason: StopReason,
}

/// Integrates `x'' + lambda x' + gamma Hess Phi(x) x' + grad Phi(x) = 0` as a
/// first-order system in `(x, x')` with the same Runge-Kutta scheme,
/// recording `x` every step.
pub fn integrate_second_order(
    smooth: &dyn SmoothOracle,
    lambda: f64,
    gamma: f64,
    x0: &[f64],
    v0: &[f64],
    dt: f64,
    t_max: f64,
) -> Result<SecondOrderPath> {
    let n = smooth.dim();
    if x0.len() != n || v0.len() != n {
        return Err(Error::InvalidProblem("initial state dimension mismatch".into()));
    }
    if !(dt > 0.0 && t_max >= 0.0 && lambda > 0.0 && gamma > 0.0) {
        return Err(Error::InvalidParameter(
            "dt, lambda and gamma must be positive and t_max nonnegative".into(),
        ));
    }
    let accel = |x: &[f64], v: &[f64], out: &mut [f64]| {
        let mut hv = vec![0.0; n];
        smooth.hessian_vec(x, v, &mut hv);
        smooth.gradient(x, out);
        for i in 0..n {
            out[i] = -lambda * v[i] - gamma * hv[i] - out[i];
        }
    };

    let mut path = SecondOrderPath {
        times: vec![0.0],
        xs: vec![x0.to_vec()],
        stop_reason: StopReason::TimeLimit,
    };
    let full_steps = (t_max / dt + 1e-9).floor() as u64;
    let tail = t_max - full_steps as f64 * dt;
    let total = if tail > 1e-9 * dt { full_steps + 1 } else { full_steps };

    let mut x = x0.to_vec();
    let mut v = v0.to_vec();
    let (mut a1, mut a2, mut a3, mut a4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let (mut xs, mut vs) = (vec![0.0; n], vec![0.0; n]);
    let (mut v2, mut v3, mut v4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for step in 1..=total {
        let (h, t) = if step > full_steps { (tail, t_max) } else { (dt, step as f64 * dt) };
        accel(&x, &v, &mut a1);
        for i in 0..n {
            xs[i] = x[i] + 0.5 * h * v[i];
            v2[i] = v[i] + 0.5 * h * a1[i];
        }
        accel(&xs, &v2, &mut a2);
        for i in 0..n {
            xs[i] = x[i] + 0.5 * h * v2[i];
            v3[i] = v[i] + 0.5 * h * a2[i];
        }
        accel(&xs, &v3, &mut a3);
        for i in 0..n {
            xs[i] = x[i] + h * v3[i];
            v4[i] = v[i] + h * a3[i];
        }
        accel(&xs, &v4, &mut a4);
        for i in 0..n {
            xs[i] = x[i] + h / 6.0 * (v[i] + 2.0 * v2[i] + 2.0 * v3[i] + v4[i]);
            vs[i] = v[i] + h / 6.0 * (a1[i] + 2.0 * a2[i] + 2.0 * a3[i] + a4[i]);
        }
        std::mem::swap(&mut x, &mut xs);
        std::mem::swap(&mut v, &mut vs);
        if blown_up(&x, &v) {
            path.stop_reason = StopReason::Divergence;
            return Ok(path);
        }
        path.times.push(t);
        path.xs.push(x.clone());
    }
    Ok(path)
}
