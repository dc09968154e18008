//! Single experiment: check, integrate, diagnose, classify, write files.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{Artifact, ExperimentConfig};
use crate::diagnostics::{check_decrease, limit_report, zeta_bound_check, DecreaseReport, LimitReport, ZetaReport};
use crate::error::{Error, Result};
use crate::integrator::{integrate, DivergenceInfo, IntegrationSettings, StopReason, Trajectory};
use crate::params::{check_conditions, lyapunov_constants, FeasibilityReport, LyapunovConstants, SystemParams};
use crate::rate::{classify_rate, decay_signal, DecaySignal, RateReport};

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const DECAY_FILE: &str = "decay.csv";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub override_param_check: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config: ExperimentConfig,
    pub problem: String,
    pub dim: usize,
    pub params: SystemParams,
    pub feasibility: FeasibilityReport,
    pub constants: LyapunovConstants,
    pub dt: f64,
    pub x0: Vec<f64>,
    pub y0: Vec<f64>,
    pub stop_reason: StopReason,
    pub final_time: f64,
    pub samples: usize,
    pub divergence: Option<DivergenceInfo>,
    pub limit: Option<LimitReport>,
    pub decrease: DecreaseReport,
    pub zeta: ZetaReport,
    pub rate: Option<RateReport>,
    /// Why `rate` is absent, when it is.
    pub rate_note: Option<String>,
    /// Paths of the files written by this run (the summary included).
    pub files: Vec<PathBuf>,
    pub wall_clock_seconds: f64,
}

impl RunSummary {
    /// `0` stationarity, `2` time limit, `3` divergence.
    pub fn exit_code(&self) -> i32 {
        exit_code(self.stop_reason)
    }
}

pub fn exit_code(reason: StopReason) -> i32 {
    match reason {
        StopReason::Stationarity => 0,
        StopReason::TimeLimit => 2,
        StopReason::Divergence => 3,
    }
}

/// Everything a run computes before anything touches the disk.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub trajectory: Trajectory,
    pub decay: Option<DecaySignal>,
    pub summary: RunSummary,
}

/// Executes a config held in memory; nothing is written.
pub fn execute(config: &ExperimentConfig, options: RunOptions) -> Result<RunArtifacts> {
    let started = Instant::now();
    let problem = config.problem.build()?;
    let params = config.params.resolve(problem.lipschitz())?;
    let feasibility = check_conditions(&params)?;
    if !feasibility.admissible() && !options.override_param_check {
        return Err(Error::Inadmissible(format!(
            "{} (a = {}, b = {}, gamma = {}, L = {}); pass --override-param-check to run anyway",
            feasibility.describe_violation(),
            params.a,
            params.b,
            params.gamma,
            params.lipschitz
        )));
    }
    let (x0, y0) = config.initial.resolve(problem.dim())?;
    let integration = &config.integration;
    let dt = integration.dt.resolve(&params);
    let settings = IntegrationSettings::new(dt, integration.t_max)
        .stop_tol(integration.stop_tol)
        .sample_stride(integration.sample_stride)
        .override_param_check(options.override_param_check);

    let trajectory = integrate(&problem, &params, &x0, &y0, settings)?;
    let decrease = check_decrease(&trajectory);
    let zeta = zeta_bound_check(&problem, &trajectory);

    let (limit, decay, rate, rate_note) = match limit_report(&trajectory, &problem) {
        Ok(limit) => match decay_signal(&trajectory, &limit).and_then(|s| classify_rate(&s).map(|r| (s, r))) {
            Ok((signal, rate)) => (Some(limit), Some(signal), Some(rate), None),
            Err(e) => {
                let signal = decay_signal(&trajectory, &limit).ok();
                (Some(limit), signal, None, Some(e.to_string()))
            }
        },
        Err(e) => (None, None, None, Some(e.to_string())),
    };

    let last = trajectory.last();
    let summary = RunSummary {
        config: config.clone(),
        problem: problem.name.clone(),
        dim: problem.dim(),
        params,
        feasibility,
        constants: lyapunov_constants(&params),
        dt,
        x0,
        y0,
        stop_reason: trajectory.stop_reason,
        final_time: last.state.t,
        samples: trajectory.samples.len(),
        divergence: trajectory.divergence.clone(),
        limit,
        decrease,
        zeta,
        rate,
        rate_note,
        files: Vec::new(),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };
    Ok(RunArtifacts {
        trajectory,
        decay,
        summary,
    })
}

/// Loads the config, runs it and writes the requested artifacts into the
/// configured output directory.
pub fn run(config_path: &Path, options: RunOptions) -> Result<RunSummary> {
    let config = ExperimentConfig::load(config_path)?;
    let started = Instant::now();
    let RunArtifacts {
        trajectory,
        decay,
        mut summary,
    } = execute(&config, options)?;

    let dir = config.output_dir(config_path);
    fs::create_dir_all(&dir)
        .map_err(|e| Error::Io(format!("cannot create output directory {}: {e}", dir.display())))?;
    let outputs = &config.outputs;
    if outputs.wants(Artifact::Trajectory) {
        let path = dir.join(TRAJECTORY_FILE);
        write_with(&path, |w| trajectory.write_csv(w))?;
        summary.files.push(path);
    }
    if outputs.wants(Artifact::Decay) {
        let path = dir.join(DECAY_FILE);
        write_with(&path, |w| write_decay_csv(decay.as_ref(), w))?;
        summary.files.push(path);
    }
    summary.wall_clock_seconds = started.elapsed().as_secs_f64();
    if outputs.wants(Artifact::Summary) {
        let path = dir.join(SUMMARY_FILE);
        summary.files.push(path.clone());
        let json = serde_json::to_string_pretty(&summary)
            .map_err(|e| Error::Io(format!("cannot serialize summary: {e}")))?;
        write_with(&path, |w| w.write_all(json.as_bytes()))?;
    }
    Ok(summary)
}

fn write_with<F>(path: &Path, body: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let wrap = |e: std::io::Error| Error::Io(format!("cannot write {}: {e}", path.display()));
    let mut w = BufWriter::new(File::create(path).map_err(wrap)?);
    body(&mut w).and_then(|_| w.flush()).map_err(wrap)
}

/// `t,d,sigma` rows; only the header when the run did not converge.
pub fn write_decay_csv<W: Write>(signal: Option<&DecaySignal>, w: &mut W) -> std::io::Result<()> {
    writeln!(w, "t,d,sigma")?;
    if let Some(s) = signal {
        for i in 0..s.times.len() {
            writeln!(w, "{:.16e},{:.16e},{:.16e}", s.times[i], s.values[i], s.sigma[i])?;
        }
    }
    Ok(())
}
