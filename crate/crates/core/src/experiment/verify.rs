//! Self-check suite run by the `verify` subcommand.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::random_start;
use crate::diagnostics::{check_decrease, limit_report, zeta_bound_check};
use crate::error::Result;
use crate::integrator::{
    first_order_gains, integrate, integrate_second_order, matched_velocity, IntegrationSettings, Trajectory,
};
use crate::linalg;
use crate::params::{check_conditions, lyapunov_constants, suggest_params, LyapunovConstants, SystemParams};
use crate::problems::{
    self, brute_force_prox, catalog, BoxIndicator, GridSpec, L1Norm, NonsmoothOracle, ProblemSpec, ZeroFunction,
};
use crate::rate::{classify_rate, polynomial_exponent, theta_from_polynomial_slope, DecaySignal, Regime};

const SEED: u64 = 20_240_601;

#[derive(Clone, Copy)]
pub struct VerifyOptions {
    /// Replaces the default step in the decrease and subgradient checks.
    pub dt_override: Option<f64>,
    /// Source of `m1, m2, c1, c2`; swapped out to test the suite itself.
    pub constants: fn(&SystemParams) -> LyapunovConstants,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            dt_override: None,
            constants: lyapunov_constants,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn exit_code(&self) -> i32 {
        if self.all_passed() {
            0
        } else {
            1
        }
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        for c in &self.checks {
            let mark = if c.passed { "PASS" } else { "FAIL" };
            writeln!(f, "{mark}  {:width$}  {}", c.name, c.detail)?;
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        write!(f, "{} checks, {failed} failed", self.checks.len())
    }
}

fn check(name: &str, outcome: Result<(bool, String)>) -> CheckResult {
    let (passed, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
    CheckResult {
        name: name.to_string(),
        passed,
        detail,
    }
}

pub fn verify(options: VerifyOptions) -> VerifyReport {
    let mut checks = vec![
        check("parameter-implication", parameter_implication(options.constants)),
        check("witness-constants", witness_constants(options.constants)),
        check("prox-vs-brute-force", prox_vs_brute_force()),
        check("prox-nonexpansive", prox_nonexpansive()),
        check("prox-subgradient", prox_subgradient()),
        check("gradient-fd", gradient_fd()),
        check("gradient-lipschitz", gradient_lipschitz()),
        check("stationarity", stationarity()),
    ];
    match decrease_cases(options.dt_override) {
        Ok(cases) => {
            checks.push(check("lyapunov-decrease", Ok(decrease_summary(&cases, false))));
            checks.push(check("zeta-bound", Ok(decrease_summary(&cases, true))));
        }
        Err(e) => {
            checks.push(check("lyapunov-decrease", Err(e.clone())));
            checks.push(check("zeta-bound", Err(e)));
        }
    }
    checks.extend([
        check("second-order-equivalence", second_order_equivalence()),
        check("rate-round-trip", rate_round_trip()),
        check("rate-synthetic", rate_synthetic()),
        check("lasso-limit", lasso_limit()),
    ]);
    VerifyReport { checks }
}

/// Nonsmooth terms exercised by the prox checks.
fn prox_cases() -> Vec<(String, Box<dyn NonsmoothOracle>)> {
    let mut out: Vec<(String, Box<dyn NonsmoothOracle>)> = Vec::new();
    for n in 1..=2 {
        out.push((format!("l1/{n}d"), Box::new(L1Norm::new(n, 1.0).expect("valid"))));
        out.push((format!("box/{n}d"), Box::new(BoxIndicator::cube(n, 0.05).expect("valid"))));
        out.push((format!("zero/{n}d"), Box::new(ZeroFunction { dim: n })));
    }
    out
}

pub const PROX_GAMMA: f64 = 0.05;
pub const PROX_INPUTS: usize = 100;
pub const PROX_PAIRS: usize = 1000;

/// Brute-force grid step for a dimension.
pub fn brute_force_step(dim: usize) -> f64 {
    if dim == 1 {
        1e-4
    } else {
        1e-3
    }
}

fn uniform(rng: &mut ChaCha8Rng, n: usize, r: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-r..r)).collect()
}

pub fn parameter_implication(constants: fn(&SystemParams) -> LyapunovConstants) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut admissible, mut violations) = (0, 0);
    for _ in 0..10_000 {
        let p = SystemParams {
            a: rng.gen_range(f64::EPSILON..2.0),
            b: rng.gen_range(f64::EPSILON..10.0),
            gamma: rng.gen_range(f64::EPSILON..1.0),
            lipschitz: rng.gen_range(0.0..=10.0),
        };
        if check_conditions(&p)?.admissible() {
            admissible += 1;
            let k = constants(&p);
            if !(k.m1 > 0.0 && k.m2 > 0.0) {
                violations += 1;
            }
        }
    }
    Ok((
        violations == 0 && admissible > 0,
        format!("10000 tuples, {admissible} admissible, {violations} with m1 <= 0 or m2 <= 0"),
    ))
}

pub fn witness_constants(constants: fn(&SystemParams) -> LyapunovConstants) -> Result<(bool, String)> {
    let k = constants(&SystemParams::new(0.5, 1.0, 0.01, 1.0)?);
    let ok = (k.m1 - 23.49).abs() <= 1e-9 && (k.m2 - 24.0).abs() <= 1e-9;
    Ok((ok, format!("(0.5, 1, 0.01, 1): m1 = {:.12}, m2 = {:.12}", k.m1, k.m2)))
}

pub fn prox_vs_brute_force() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for (name, f) in prox_cases() {
        let n = f.dim();
        let step = brute_force_step(n);
        for _ in 0..PROX_INPUTS {
            let v = uniform(&mut rng, n, 0.1);
            let exact = f.prox_vec(PROX_GAMMA, &v);
            let grid = brute_force_prox(|u| f.value(u), PROX_GAMMA, &v, GridSpec::with_step(step))?;
            let err = linalg::dist(&exact, &grid) / step;
            worst = worst.max(err);
            if err > 2.0 {
                failures.push(name.clone());
            }
        }
    }
    failures.dedup();
    Ok((
        failures.is_empty(),
        format!(
            "{PROX_INPUTS} inputs per oracle, worst error {worst:.3} grid steps (limit 2){}",
            if failures.is_empty() { String::new() } else { format!("; failing: {}", failures.join(", ")) }
        ),
    ))
}

pub fn prox_nonexpansive() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    let mut violations = 0;
    for (_, f) in prox_cases() {
        let n = f.dim();
        for _ in 0..PROX_PAIRS {
            let u = uniform(&mut rng, n, 2.0);
            let v = uniform(&mut rng, n, 2.0);
            let d = linalg::dist(&f.prox_vec(PROX_GAMMA, &u), &f.prox_vec(PROX_GAMMA, &v));
            if d > linalg::dist(&u, &v) + 1e-12 {
                violations += 1;
            }
        }
    }
    Ok((violations == 0, format!("{PROX_PAIRS} pairs per oracle, {violations} violations")))
}

/// `(v - p) / gamma` must be a subgradient of `f` at `p = prox(v)`.
pub fn prox_subgradient() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    let mut violations = 0;
    let mut tested = 0;
    for (_, f) in prox_cases() {
        let n = f.dim();
        for _ in 0..PROX_PAIRS {
            let v = uniform(&mut rng, n, 2.0);
            let w = uniform(&mut rng, n, 2.0);
            let fw = f.value(&w);
            if !fw.is_finite() {
                continue;
            }
            tested += 1;
            let p = f.prox_vec(PROX_GAMMA, &v);
            let g: Vec<f64> = v.iter().zip(&p).map(|(v, p)| (v - p) / PROX_GAMMA).collect();
            let lower = f.value(&p) + linalg::dot(&g, &linalg::sub(&w, &p));
            if fw < lower - 1e-12 * (1.0 + lower.abs()) {
                violations += 1;
            }
        }
    }
    Ok((violations == 0, format!("{tested} (v, w) pairs, {violations} violations")))
}

/// Random points in the region where each problem's `L` is claimed.
fn domain_point(problem: &ProblemSpec, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let r = if problem.name == problems::QUARTIC { 1.0 } else { 3.0 };
    uniform(rng, problem.dim(), r)
}

pub fn gradient_fd() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 4);
    let h = 1e-6;
    let mut worst = 0.0f64;
    for problem in catalog() {
        let phi = &problem.smooth;
        for _ in 0..100 {
            let x = domain_point(&problem, &mut rng);
            let g = phi.gradient_vec(&x);
            for i in 0..x.len() {
                let (mut p, mut m) = (x.clone(), x.clone());
                p[i] += h;
                m[i] -= h;
                let fd = (phi.value(&p) - phi.value(&m)) / (2.0 * h);
                worst = worst.max((fd - g[i]).abs() / (1.0 + g[i].abs()));
            }
        }
    }
    Ok((worst < 1e-6, format!("worst relative error {worst:.2e} (limit 1e-6)")))
}

pub fn gradient_lipschitz() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 5);
    let mut worst = 0.0f64;
    for problem in catalog() {
        let phi = &problem.smooth;
        for _ in 0..1000 {
            let u = domain_point(&problem, &mut rng);
            let v = domain_point(&problem, &mut rng);
            let ratio = linalg::dist(&phi.gradient_vec(&u), &phi.gradient_vec(&v)) / linalg::dist(&u, &v);
            worst = worst.max(ratio / problem.lipschitz());
        }
    }
    Ok((
        worst <= 1.0 + 1e-12,
        format!("largest observed |grad difference| / (L |x - y|) = {worst:.6}"),
    ))
}

/// Rest points stay put over `t in [0, 10]` with no early stop.
pub fn stationarity() -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for problem in catalog() {
        let params = suggest_params(problem.lipschitz(), 1.0)?
            .params()
            .expect("catalog problems admit parameters");
        for xbar in problem.known_critical_points.clone().unwrap_or_default() {
            let ybar: Vec<f64> = xbar.iter().map(|v| -params.a / params.b * v).collect();
            let settings = IntegrationSettings::new(params.default_dt(), 10.0)
                .stop_tol(0.0)
                .sample_stride(100);
            let traj = integrate(&problem, &params, &xbar, &ybar, settings)?;
            for s in &traj.samples {
                worst = worst.max(linalg::dist(&s.state.x, &xbar) + linalg::dist(&s.state.y, &ybar));
            }
        }
    }
    Ok((worst <= 1e-10, format!("max drift from rest points {worst:.2e} (limit 1e-10)")))
}

pub const DECREASE_STARTS: u64 = 3;
pub const DECREASE_HORIZON: f64 = 20.0;

/// Catalog problems paired with their trajectories from
/// [`DECREASE_STARTS`] random starts each.
pub fn decrease_cases(dt_override: Option<f64>) -> Result<Vec<(ProblemSpec, Trajectory)>> {
    let mut out = Vec::new();
    for problem in catalog() {
        let params = suggest_params(problem.lipschitz(), 1.0)?
            .params()
            .expect("catalog problems admit parameters");
        let dt = dt_override.unwrap_or_else(|| params.default_dt());
        for seed in 0..DECREASE_STARTS {
            let (x0, y0) = random_start(seed, problem.dim());
            let traj = integrate(&problem, &params, &x0, &y0, IntegrationSettings::new(dt, DECREASE_HORIZON))?;
            out.push((problem.clone(), traj));
        }
    }
    Ok(out)
}

/// Decrease (or, with `zeta`, subgradient bound) outcome over `cases`.
pub fn decrease_summary(cases: &[(ProblemSpec, Trajectory)], zeta: bool) -> (bool, String) {
    let mut failing = Vec::new();
    let mut worst_slack = f64::NEG_INFINITY;
    for (problem, traj) in cases {
        let ok = if zeta {
            let r = zeta_bound_check(problem, traj);
            worst_slack = worst_slack.max(r.max_excess);
            r.passed()
        } else {
            let r = check_decrease(traj);
            worst_slack = worst_slack.max(r.max_jump - r.jump_tolerance);
            r.passed()
        };
        if !ok {
            failing.push(problem.name.clone());
        }
    }
    failing.dedup();
    let what = if zeta { "max |zeta| - bound" } else { "max jump - tolerance" };
    let mut detail = format!("{} trajectories, {what} = {worst_slack:.3e}", cases.len());
    if !failing.is_empty() {
        detail.push_str(&format!("; failing: {}", failing.join(", ")));
    }
    (failing.is_empty(), detail)
}

/// Quadratic used to compare the first- and second-order systems. `L = 0.1`
/// keeps `(a, b, gamma) = (0.5, 1, 1)` admissible.
pub fn equivalence_problem() -> Result<ProblemSpec> {
    problems::smooth_quadratic(vec![0.1, 0.0, 0.0, 0.05], vec![0.05, -0.02])
}

/// Max over `t in [0, 10]` of the distance between the two `x` paths.
pub fn second_order_gap(dt: f64) -> Result<f64> {
    let problem = equivalence_problem()?;
    let (lambda, gamma) = (1.5, 1.0);
    let (a, b) = first_order_gains(lambda, gamma);
    let params = SystemParams::new(a, b, gamma, problem.lipschitz())?;
    let (x0, y0) = (vec![1.0, -0.5], vec![0.3, 0.2]);
    let v0 = matched_velocity(problem.smooth.as_ref(), &params, &x0, &y0);
    let first = integrate(&problem, &params, &x0, &y0, IntegrationSettings::new(dt, 10.0).stop_tol(0.0))?;
    let second = integrate_second_order(problem.smooth.as_ref(), lambda, gamma, &x0, &v0, dt, 10.0)?;
    let gap = first
        .samples
        .iter()
        .zip(&second.xs)
        .map(|(s, x)| linalg::dist(&s.state.x, x))
        .fold(0.0, f64::max);
    if first.samples.len() != second.xs.len() {
        return Ok(f64::INFINITY);
    }
    Ok(gap)
}

pub fn second_order_equivalence() -> Result<(bool, String)> {
    let gap = second_order_gap(1e-3)?;
    Ok((gap < 1e-6, format!("max |x1(t) - x2(t)| on [0, 10] = {gap:.2e} (limit 1e-6)")))
}

pub fn rate_round_trip() -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for i in 1..1000 {
        let theta = 0.5 + 0.5 * i as f64 / 1000.0;
        let slope = -polynomial_exponent(theta);
        worst = worst.max((theta_from_polynomial_slope(slope)? - theta).abs());
    }
    Ok((worst <= 1e-12, format!("max |theta - theta(slope(theta))| = {worst:.2e}")))
}

/// `d(t) = (1 + t)^(-1/2)` with 1% multiplicative noise on `[0, 1000]`.
pub fn synthetic_polynomial_signal(seed: u64) -> Result<DecaySignal> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let times: Vec<f64> = (0..2000).map(|k| k as f64 * 0.5).collect();
    let values = times
        .iter()
        .map(|t| (1.0 + t).powf(-0.5) * (1.0 + 0.01 * rng.gen_range(-1.0..1.0)))
        .collect();
    DecaySignal::from_samples(times, values, 1e-12, 1000.0)
}

pub fn rate_synthetic() -> Result<(bool, String)> {
    let report = classify_rate(&synthetic_polynomial_signal(SEED)?)?;
    let theta = report.theta_hat.unwrap_or(f64::NAN);
    let ok = report.regime == Regime::Polynomial && (theta - 0.75).abs() <= 0.05;
    Ok((ok, format!("regime {}, theta {theta:.4} (expect polynomial, 0.75 +- 0.05)", report.regime)))
}

/// Gains used for the lasso limit check; faster than the witness tuple.
pub const LASSO_PARAMS: (f64, f64, f64) = (0.9, 10.0, 0.05);

pub fn lasso_limit() -> Result<(bool, String)> {
    let problem = problems::lasso_like(vec![1.0], vec![2.0], 1.0)?;
    let (a, b, gamma) = LASSO_PARAMS;
    let params = SystemParams::new(a, b, gamma, problem.lipschitz())?;
    let settings = IntegrationSettings::new(params.default_dt(), 2000.0).sample_stride(100);
    let traj = integrate(&problem, &params, &[0.0], &[0.0], settings)?;
    let limit = limit_report(&traj, &problem)?;
    let err = (limit.x_limit[0] - 1.0).abs();
    let ok = err < 1e-5 && limit.prox_residual_at_limit < 1e-5 && limit.y_relation_error < 1e-5;
    Ok((
        ok,
        format!(
            "x_limit = {:.8}, residual {:.1e}, y relation {:.1e}",
            limit.x_limit[0], limit.prox_residual_at_limit, limit.y_relation_error
        ),
    ))
}
