//! Proximal-gradient dynamical systems for composite objectives `f + Phi`.
//!
//! The crate integrates
//!
//! ```text
//! xdot + x = prox_{gamma f}[x - gamma grad Phi(x) - a x - b y]
//! ydot + a x + b y = 0
//! ```
//!
//! for a convex, possibly nonsmooth `f` with a closed-form prox and a smooth,
//! possibly nonconvex `Phi` with Lipschitz gradient. Alongside the
//! integrator it provides the admissibility check on `(a, b, gamma, L)`, the
//! Lyapunov energy and its decrease diagnostics, and a classifier for the
//! observed convergence regime.

// Negated comparisons are used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod experiment;
pub mod integrator;
pub mod linalg;
pub mod params;
pub mod problems;
pub mod rate;

pub use error::{Error, Result};
pub use integrator::{integrate, rhs, IntegrationSettings, StopReason, Trajectory};
pub use params::{check_conditions, lyapunov_constants, suggest_params, SystemParams};
pub use problems::{catalog, ProblemSpec};
