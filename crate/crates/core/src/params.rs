//! Parameters of the dynamics and the constants derived from them.
//!
//! The system is driven by three user gains `(a, b, gamma)` and the Lipschitz
//! modulus `L` of the smooth gradient. Two strict inequalities on these
//! values make the regularized energy a Lyapunov function; the decrease
//! weights `m1`, `m2` and the subgradient weights `c1`, `c2` follow from them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Coupling gain.
    pub a: f64,
    /// Decay gain.
    pub b: f64,
    /// Prox step.
    pub gamma: f64,
    /// Lipschitz modulus of the smooth gradient.
    pub lipschitz: f64,
}

impl SystemParams {
    pub fn new(a: f64, b: f64, gamma: f64, lipschitz: f64) -> Result<Self> {
        let p = SystemParams {
            a,
            b,
            gamma,
            lipschitz,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("a", self.a), ("b", self.b), ("gamma", self.gamma)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be a positive finite number, got {v}"
                )));
            }
        }
        if !(self.lipschitz.is_finite() && self.lipschitz >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "lipschitz must be a nonnegative finite number, got {}",
                self.lipschitz
            )));
        }
        Ok(())
    }

    /// Default integration step `min(gamma, 1/(1+L)) / 20`.
    pub fn default_dt(&self) -> f64 {
        self.gamma.min(1.0 / (1.0 + self.lipschitz)) / 20.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovConstants {
    /// Decrease weight on `|xdot|^2`.
    pub m1: f64,
    /// Decrease weight on `|ydot|^2`.
    pub m2: f64,
    /// `xdot` weight in the subgradient bound.
    pub c1: f64,
    /// `ydot` weight in the subgradient bound.
    pub c2: f64,
}

/// Outcome of evaluating both admissibility inequalities. Margins are
/// right-hand side minus left-hand side, so positive means satisfied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub first_holds: bool,
    pub second_holds: bool,
    pub first_margin: f64,
    pub second_margin: f64,
}

impl FeasibilityReport {
    pub fn admissible(&self) -> bool {
        self.first_holds && self.second_holds
    }

    pub fn min_margin(&self) -> f64 {
        self.first_margin.min(self.second_margin)
    }

    /// Human-readable description of the violated inequalities.
    pub fn describe_violation(&self) -> String {
        let mut parts = Vec::new();
        if !self.first_holds {
            parts.push(format!(
                "2γL(|1-a|+γL) + |1-a| + γL + bγL < 1 fails (margin {:.6e})",
                self.first_margin
            ));
        }
        if !self.second_holds {
            parts.push(format!(
                "ab + a/2 + a|1-a|/2 + γaL/2 + γabL/2 < b fails (margin {:.6e})",
                self.second_margin
            ));
        }
        parts.join("; ")
    }
}

pub fn check_conditions(params: &SystemParams) -> Result<FeasibilityReport> {
    params.validate()?;
    let SystemParams {
        a,
        b,
        gamma: g,
        lipschitz: l,
    } = *params;
    let d = (1.0 - a).abs();

    let first_lhs = 2.0 * g * l * (d + g * l) + d + g * l + b * g * l;
    let second_lhs =
        a * b + a / 2.0 + a * d / 2.0 + g * a * l / 2.0 + g * a * b * l / 2.0;

    Ok(FeasibilityReport {
        first_holds: first_lhs < 1.0,
        second_holds: second_lhs < b,
        first_margin: 1.0 - first_lhs,
        second_margin: b - second_lhs,
    })
}

pub fn lyapunov_constants(params: &SystemParams) -> LyapunovConstants {
    let SystemParams {
        a,
        b,
        gamma: g,
        lipschitz: l,
    } = *params;
    let d = (1.0 - a).abs();
    let shared = d / (2.0 * g) + l / 2.0 + b * l / 2.0;

    LyapunovConstants {
        m1: 1.0 / (2.0 * g) - l * (d + g * l) - shared,
        m2: b / (g * a) - b / g - 1.0 / (2.0 * g) - shared,
        c1: l + 1.0 / g,
        c2: 2.0 / g + b / (g * a),
    }
}

/// Side length of the logarithmic search grid used by [`suggest_params`].
pub const SUGGEST_GRID: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Suggestion {
    Feasible {
        params: SystemParams,
        report: FeasibilityReport,
    },
    Infeasible {
        /// Best minimum margin seen on the grid (negative).
        best_min_margin: f64,
        cells: usize,
    },
}

impl Suggestion {
    pub fn params(&self) -> Option<SystemParams> {
        match self {
            Suggestion::Feasible { params, .. } => Some(*params),
            Suggestion::Infeasible { .. } => None,
        }
    }
}

/// Coupling gains searched by [`suggest_params`]: log-spaced on `[1e-3, 2)`.
pub fn suggest_a_grid() -> Vec<f64> {
    let (lo, hi) = (1e-3f64, 2.0f64);
    (0..SUGGEST_GRID)
        .map(|i| lo * (hi / lo).powf(i as f64 / SUGGEST_GRID as f64))
        .collect()
}

/// Prox steps searched by [`suggest_params`]: log-spaced on
/// `[1e-6 * gmax, gmax]` with `gmax = 1 / max(L, 1)`.
pub fn suggest_gamma_grid(lipschitz: f64) -> Vec<f64> {
    let hi = 1.0 / lipschitz.max(1.0);
    let lo = hi * 1e-6;
    (0..SUGGEST_GRID)
        .map(|j| lo * (hi / lo).powf(j as f64 / (SUGGEST_GRID - 1) as f64))
        .collect()
}

/// Deterministic grid search for admissible `(a, gamma)` at fixed `L`, `b`.
///
/// The margins keep growing as `gamma -> 0`, which would always select the
/// smallest step and stall the dynamics. Among grid cells whose minimum
/// margin is at least half the best achievable one, the largest `gamma`
/// wins; ties on `gamma` go to the larger minimum margin.
pub fn suggest_params(lipschitz: f64, b: f64) -> Result<Suggestion> {
    if !(lipschitz.is_finite() && lipschitz >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "lipschitz must be nonnegative, got {lipschitz}"
        )));
    }
    if !(b.is_finite() && b > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "b must be positive, got {b}"
        )));
    }

    let a_grid = suggest_a_grid();
    let g_grid = suggest_gamma_grid(lipschitz);
    let mut feasible = Vec::new();
    let mut best_min = f64::NEG_INFINITY;
    for &a in &a_grid {
        for &gamma in &g_grid {
            let params = SystemParams {
                a,
                b,
                gamma,
                lipschitz,
            };
            let report = check_conditions(&params)?;
            best_min = best_min.max(report.min_margin());
            if report.admissible() {
                feasible.push((params, report));
            }
        }
    }

    if feasible.is_empty() {
        return Ok(Suggestion::Infeasible {
            best_min_margin: best_min,
            cells: a_grid.len() * g_grid.len(),
        });
    }

    let threshold = 0.5 * best_min;
    let (params, report) = feasible
        .into_iter()
        .filter(|(_, r)| r.min_margin() >= threshold)
        .max_by(|(p1, r1), (p2, r2)| {
            p1.gamma
                .total_cmp(&p2.gamma)
                .then(r1.min_margin().total_cmp(&r2.min_margin()))
        })
        .expect("the best cell always clears half of its own margin");
    Ok(Suggestion::Feasible { params, report })
}
