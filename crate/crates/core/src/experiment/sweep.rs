//! Feasibility (and optionally rate) tables over parameter grids.

use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::diagnostics::limit_report;
use crate::error::{Error, Result};
use crate::integrator::{integrate, IntegrationSettings};
use crate::params::{check_conditions, lyapunov_constants, SystemParams};
use crate::problems::ProblemSpec;
use crate::rate::{classify_rate, decay_signal};

pub const SWEEP_FILE: &str = "sweep.csv";
pub const MAX_GRID_CELLS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Lin,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub spacing: Spacing,
}

impl Axis {
    pub fn single(v: f64) -> Self {
        Axis {
            lo: v,
            hi: v,
            count: 1,
            spacing: Spacing::Lin,
        }
    }

    /// Grid points including both endpoints.
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.lo];
        }
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                let s = i as f64 / last;
                match self.spacing {
                    Spacing::Lin => self.lo + s * (self.hi - self.lo),
                    Spacing::Log => self.lo * (self.hi / self.lo).powf(s),
                }
            })
            .collect()
    }
}

/// Axes over `a`, `b` and `gamma`; an axis left out of the grid is pinned
/// to the config's value.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GridSpec {
    pub a: Option<Axis>,
    pub b: Option<Axis>,
    pub gamma: Option<Axis>,
}

impl GridSpec {
    /// Parses `name=lo:hi:count[:lin|log]` entries separated by commas,
    /// e.g. `a=0.05:2:32,gamma=1e-4:0.5:32:log`.
    pub fn parse(spec: &str) -> Result<Self> {
        let mut grid = GridSpec::default();
        for entry in spec.split(',').map(str::trim).filter(|e| !e.is_empty()) {
            let (name, range) = entry
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("grid entry '{entry}' is not name=lo:hi:count")))?;
            let axis = parse_axis(range.trim())
                .map_err(|msg| Error::Config(format!("grid entry '{entry}': {msg}")))?;
            let slot = match name.trim() {
                "a" => &mut grid.a,
                "b" => &mut grid.b,
                "gamma" => &mut grid.gamma,
                other => {
                    return Err(Error::Config(format!(
                        "grid axis '{other}' is not one of a, b, gamma"
                    )))
                }
            };
            if slot.replace(axis).is_some() {
                return Err(Error::Config(format!("grid axis '{}' given twice", name.trim())));
            }
        }
        if grid.a.is_none() && grid.b.is_none() && grid.gamma.is_none() {
            return Err(Error::Config("grid spec names no axis".into()));
        }
        Ok(grid)
    }
}

fn parse_axis(range: &str) -> std::result::Result<Axis, String> {
    let parts: Vec<&str> = range.split(':').collect();
    if !(3..=4).contains(&parts.len()) {
        return Err("expected lo:hi:count[:lin|log]".into());
    }
    let num = |s: &str| s.trim().parse::<f64>().map_err(|e| format!("bad number '{s}': {e}"));
    let lo = num(parts[0])?;
    let hi = num(parts[1])?;
    let count: usize = parts[2]
        .trim()
        .parse()
        .map_err(|e| format!("bad count '{}': {e}", parts[2]))?;
    let spacing = match parts.get(3).map(|s| s.trim()) {
        None | Some("lin") => Spacing::Lin,
        Some("log") => Spacing::Log,
        Some(other) => return Err(format!("unknown spacing '{other}'")),
    };
    if count == 0 {
        return Err("count must be positive".into());
    }
    if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && hi >= lo) {
        return Err(format!("need 0 < lo <= hi, got {lo}:{hi}"));
    }
    Ok(Axis { lo, hi, count, spacing })
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SweepOptions {
    /// Integrate each feasible cell with the config's settings and classify
    /// the observed rate.
    pub integrate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub a: f64,
    pub b: f64,
    pub gamma: f64,
    pub feasible: bool,
    pub m1: f64,
    pub m2: f64,
    /// Rate regime, `not-run` without integration, or the reason none was
    /// obtained.
    pub regime: String,
}

/// Evaluates every cell of `grid` at the problem's `L`; rows come back in
/// grid order (`a` slowest, `gamma` fastest).
pub fn sweep_table(config: &ExperimentConfig, grid: &GridSpec, options: SweepOptions) -> Result<Vec<SweepRow>> {
    let problem = config.problem.build()?;
    let base = config.params.resolve(problem.lipschitz())?;
    let axes = [
        grid.a.unwrap_or(Axis::single(base.a)),
        grid.b.unwrap_or(Axis::single(base.b)),
        grid.gamma.unwrap_or(Axis::single(base.gamma)),
    ];
    let cells = axes
        .iter()
        .try_fold(1usize, |acc, ax| acc.checked_mul(ax.count))
        .filter(|&c| c <= MAX_GRID_CELLS)
        .ok_or_else(|| {
            Error::Config(format!(
                "grid has {} x {} x {} cells, more than the limit of {MAX_GRID_CELLS}",
                axes[0].count, axes[1].count, axes[2].count
            ))
        })?;
    let (av, bv, gv) = (axes[0].values(), axes[1].values(), axes[2].values());
    if options.integrate {
        // Fail on a bad start before spawning the cells.
        config.initial.resolve(problem.dim())?;
    }

    (0..cells)
        .into_par_iter()
        .map(|k| {
            let gi = k % gv.len();
            let bi = (k / gv.len()) % bv.len();
            let ai = k / (gv.len() * bv.len());
            let params = SystemParams::new(av[ai], bv[bi], gv[gi], problem.lipschitz())?;
            evaluate_cell(config, &problem, params, options)
        })
        .collect()
}

fn evaluate_cell(
    config: &ExperimentConfig,
    problem: &ProblemSpec,
    params: SystemParams,
    options: SweepOptions,
) -> Result<SweepRow> {
    let report = check_conditions(&params)?;
    let constants = lyapunov_constants(&params);
    let regime = if !options.integrate {
        "not-run".to_string()
    } else if !report.admissible() {
        "inadmissible".to_string()
    } else {
        cell_regime(config, problem, &params)?
    };
    Ok(SweepRow {
        a: params.a,
        b: params.b,
        gamma: params.gamma,
        feasible: report.admissible(),
        m1: constants.m1,
        m2: constants.m2,
        regime,
    })
}

fn cell_regime(config: &ExperimentConfig, problem: &ProblemSpec, params: &SystemParams) -> Result<String> {
    let (x0, y0) = config.initial.resolve(problem.dim())?;
    let ic = &config.integration;
    let settings = IntegrationSettings::new(ic.dt.resolve(params), ic.t_max)
        .stop_tol(ic.stop_tol)
        .sample_stride(ic.sample_stride);
    let trajectory = integrate(problem, params, &x0, &y0, settings)?;
    let regime = limit_report(&trajectory, problem)
        .and_then(|limit| decay_signal(&trajectory, &limit))
        .and_then(|signal| classify_rate(&signal));
    Ok(match regime {
        Ok(rate) => rate.regime.to_string(),
        Err(_) => trajectory.stop_reason.to_string(),
    })
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], w: &mut W) -> std::io::Result<()> {
    writeln!(w, "a,b,gamma,feasible,m1,m2,regime")?;
    for r in rows {
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e},{},{:.16e},{:.16e},{}",
            r.a, r.b, r.gamma, r.feasible, r.m1, r.m2, r.regime
        )?;
    }
    Ok(())
}

/// Runs the sweep and writes `sweep.csv` into the configured output
/// directory, returning the rows.
pub fn sweep(config_path: &Path, grid: &GridSpec, options: SweepOptions) -> Result<Vec<SweepRow>> {
    let config = ExperimentConfig::load(config_path)?;
    let rows = sweep_table(&config, grid, options)?;
    let dir = config.output_dir(config_path);
    fs::create_dir_all(&dir)?;
    let mut buf = Vec::new();
    write_sweep_csv(&rows, &mut buf)?;
    fs::write(dir.join(SWEEP_FILE), buf)?;
    Ok(rows)
}
