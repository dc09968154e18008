//! TOML experiment configuration.
//!
//! A complete config looks like
//!
//! ```toml
//! [problem]
//! name = "lasso-like"
//! q = [1.0]          # row-major matrix, dimension taken from c
//! c = [2.0]
//! lambda = 1.0
//!
//! [params]           # or: params = "auto"
//! a = 0.5
//! b = 1.0
//! gamma = 0.01
//!
//! [initial]          # or: random_seed = 7
//! x0 = [0.0]
//! y0 = [0.0]
//!
//! [integration]
//! dt = "auto"        # or a number
//! t_max = 40.0
//! stop_tol = 1e-8
//! sample_stride = 1
//!
//! [outputs]
//! directory = "out"  # relative to the config file
//! artifacts = ["trajectory", "decay", "summary"]
//! ```

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::DEFAULT_STOP_TOL;
use crate::params::{suggest_params, SystemParams};
use crate::problems::{self, ProblemSpec, DEFAULT_Q};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    #[serde(default)]
    pub params: ParamsConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    pub integration: IntegrationConfig,
    #[serde(default)]
    pub outputs: OutputsConfig,
}

/// Catalog name plus optional overrides. With only `name` set (and `dim`
/// absent or 2) the catalog entry is used unchanged.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoKeyword {
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamsConfig {
    Auto(AutoKeyword),
    /// Omitting both `a` and `gamma` searches for them at the given `b`.
    Explicit {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        a: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        b: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gamma: Option<f64>,
    },
}

impl Default for ParamsConfig {
    fn default() -> Self {
        ParamsConfig::Auto(AutoKeyword::Auto)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    /// Defaults to zero when `x0` is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y0: Option<Vec<f64>>,
    /// Seed for `ChaCha8Rng`; `x0` then `y0` are drawn uniformly from
    /// `[-1, 1)` componentwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StepConfig {
    Auto(AutoKeyword),
    Fixed(f64),
}

impl Default for StepConfig {
    fn default() -> Self {
        StepConfig::Auto(AutoKeyword::Auto)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrationConfig {
    #[serde(default)]
    pub dt: StepConfig,
    pub t_max: f64,
    #[serde(default = "default_stop_tol")]
    pub stop_tol: f64,
    #[serde(default = "default_stride")]
    pub sample_stride: usize,
}

fn default_stop_tol() -> f64 {
    DEFAULT_STOP_TOL
}

fn default_stride() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Artifact {
    Trajectory,
    Decay,
    Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsConfig {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    #[serde(default = "default_artifacts")]
    pub artifacts: Vec<Artifact>,
}

fn default_directory() -> PathBuf {
    PathBuf::from("out")
}

fn default_artifacts() -> Vec<Artifact> {
    vec![Artifact::Trajectory, Artifact::Decay, Artifact::Summary]
}

impl Default for OutputsConfig {
    fn default() -> Self {
        OutputsConfig {
            directory: default_directory(),
            artifacts: default_artifacts(),
        }
    }
}

impl OutputsConfig {
    pub fn wants(&self, artifact: Artifact) -> bool {
        self.artifacts.contains(&artifact)
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("cannot parse config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Output directory, resolved against the directory holding the config.
    pub fn output_dir(&self, config_path: &Path) -> PathBuf {
        if self.outputs.directory.is_absolute() {
            self.outputs.directory.clone()
        } else {
            config_path
                .parent()
                .unwrap_or_else(|| Path::new("."))
                .join(&self.outputs.directory)
        }
    }
}

impl ProblemConfig {
    pub fn named(name: &str) -> Self {
        ProblemConfig {
            name: name.to_string(),
            ..Default::default()
        }
    }

    pub fn build(&self) -> Result<ProblemSpec> {
        let known = problems::catalog_names();
        if !known.contains(&self.name.as_str()) {
            return Err(Error::InvalidProblem(format!(
                "unknown problem '{}'; known problems: {}",
                self.name,
                known.join(", ")
            )));
        }
        let problem = match self.name.as_str() {
            problems::NONCONVEX_SMOOTH => {
                problems::nonconvex_smooth(self.dim.unwrap_or(2), Some(self.radius.unwrap_or(2.0)))
            }
            problems::QUARTIC => problems::quartic(self.dim.unwrap_or(2), self.radius.unwrap_or(1.0)),
            name => {
                let (q, c) = self.quadratic_data()?;
                let n = c.len();
                match name {
                    problems::SMOOTH_QUADRATIC => problems::smooth_quadratic(q, c),
                    problems::LASSO_LIKE => problems::lasso_like(q, c, self.lambda.unwrap_or(1.0)),
                    _ => problems::box_constrained(
                        q,
                        c,
                        self.lo.clone().unwrap_or_else(|| vec![-0.5; n]),
                        self.hi.clone().unwrap_or_else(|| vec![0.5; n]),
                    ),
                }
            }
        }?;
        if let Some(dim) = self.dim {
            if dim != problem.dim() {
                return Err(Error::Config(format!(
                    "dimension mismatch: problem.dim = {dim} but the problem data has dimension {}",
                    problem.dim()
                )));
            }
        }
        Ok(problem)
    }

    fn quadratic_data(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        match (&self.q, &self.c) {
            (None, None) => {
                if self.dim.is_some_and(|d| d != 2) {
                    return Err(Error::Config(format!(
                        "dimension mismatch: the default '{}' data is 2-dimensional; give q and c for dim = {}",
                        self.name,
                        self.dim.unwrap_or(2)
                    )));
                }
                let c = match self.name.as_str() {
                    problems::SMOOTH_QUADRATIC => vec![1.0, 1.0],
                    problems::LASSO_LIKE => vec![2.0, -0.5],
                    _ => vec![1.5, 2.0],
                };
                Ok((DEFAULT_Q.to_vec(), c))
            }
            (Some(q), Some(c)) => {
                if q.len() != c.len() * c.len() {
                    return Err(Error::Config(format!(
                        "dimension mismatch: q has {} entries but c has {} (need {})",
                        q.len(),
                        c.len(),
                        c.len() * c.len()
                    )));
                }
                Ok((q.clone(), c.clone()))
            }
            _ => Err(Error::Config("problem.q and problem.c must be given together".into())),
        }
    }
}

impl ParamsConfig {
    /// Explicit gains, or the output of [`suggest_params`] for `L` and `b`.
    pub fn resolve(&self, lipschitz: f64) -> Result<SystemParams> {
        let (a, b, gamma) = match *self {
            ParamsConfig::Auto(_) => (None, 1.0, None),
            ParamsConfig::Explicit { a, b, gamma } => (a, b.unwrap_or(1.0), gamma),
        };
        match (a, gamma) {
            (Some(a), Some(gamma)) => SystemParams::new(a, b, gamma, lipschitz),
            (None, None) => suggest_params(lipschitz, b)?.params().ok_or_else(|| {
                Error::Inadmissible(format!(
                    "no admissible (a, gamma) found for L = {lipschitz}, b = {b}"
                ))
            }),
            _ => Err(Error::Config(
                "params: give both a and gamma, or neither to search for them".into(),
            )),
        }
    }
}

impl InitialConfig {
    pub fn resolve(&self, dim: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        let (x0, y0) = match (&self.x0, self.random_seed) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "initial: give either x0/y0 or random_seed, not both".into(),
                ))
            }
            (Some(x0), None) => (x0.clone(), self.y0.clone().unwrap_or_else(|| vec![0.0; x0.len()])),
            (None, Some(seed)) => {
                if self.y0.is_some() {
                    return Err(Error::Config("initial: y0 cannot be combined with random_seed".into()));
                }
                random_start(seed, dim)
            }
            (None, None) => {
                return Err(Error::Config(
                    "initial: x0 or random_seed is required".into(),
                ))
            }
        };
        for (name, v) in [("x0", &x0), ("y0", &y0)] {
            if v.len() != dim {
                return Err(Error::Config(format!(
                    "dimension mismatch: {name} has {} entries, problem has dimension {dim}",
                    v.len()
                )));
            }
        }
        Ok((x0, y0))
    }
}

/// Reproducible start: `x0` then `y0`, uniform on `[-1, 1)`.
pub fn random_start(seed: u64, dim: usize) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x0 = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let y0 = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    (x0, y0)
}

impl StepConfig {
    pub fn resolve(&self, params: &SystemParams) -> f64 {
        match *self {
            StepConfig::Auto(_) => params.default_dt(),
            StepConfig::Fixed(dt) => dt,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = r#"
        [problem]
        name = "lasso-like"
        q = [1.0]
        c = [2.0]
        lambda = 1.0

        [params]
        a = 0.5
        b = 1.0
        gamma = 0.01

        [initial]
        x0 = [0.0]

        [integration]
        dt = 0.001
        t_max = 10.0

        [outputs]
        directory = "results"
        artifacts = ["trajectory", "summary"]
    "#;

    #[test]
    fn parses_full_config() {
        let cfg = ExperimentConfig::from_toml(FULL).unwrap();
        assert_eq!(cfg.problem.lambda, Some(1.0));
        assert_eq!(
            cfg.params,
            ParamsConfig::Explicit {
                a: Some(0.5),
                b: Some(1.0),
                gamma: Some(0.01)
            }
        );
        assert_eq!(cfg.integration.dt, StepConfig::Fixed(0.001));
        assert_eq!(cfg.integration.stop_tol, DEFAULT_STOP_TOL);
        assert!(!cfg.outputs.wants(Artifact::Decay));
        let problem = cfg.problem.build().unwrap();
        assert_eq!(problem.dim(), 1);
        assert_eq!(cfg.initial.resolve(1).unwrap(), (vec![0.0], vec![0.0]));
        let p = cfg.params.resolve(problem.lipschitz()).unwrap();
        assert_eq!((p.a, p.b, p.gamma, p.lipschitz), (0.5, 1.0, 0.01, 1.0));
    }

    #[test]
    fn auto_keywords() {
        let cfg = ExperimentConfig::from_toml(
            r#"
            params = "auto"
            [problem]
            name = "quartic"
            [initial]
            random_seed = 3
            [integration]
            dt = "auto"
            t_max = 1.0
            "#,
        )
        .unwrap();
        assert_eq!(cfg.params, ParamsConfig::Auto(AutoKeyword::Auto));
        let problem = cfg.problem.build().unwrap();
        let p = cfg.params.resolve(problem.lipschitz()).unwrap();
        assert_eq!(cfg.integration.dt.resolve(&p), p.default_dt());
        let (x0, y0) = cfg.initial.resolve(2).unwrap();
        assert_eq!((x0.clone(), y0.clone()), random_start(3, 2));
        assert!(x0.iter().chain(&y0).all(|v| (-1.0..1.0).contains(v)));
    }

    #[test]
    fn unknown_fields_and_problems_are_rejected() {
        let bad = FULL.replace("lambda = 1.0", "lambda = 1.0\nmu = 2.0");
        assert!(matches!(ExperimentConfig::from_toml(&bad), Err(Error::Config(_))));
        let err = ProblemConfig::named("rosenbrock").build().unwrap_err();
        assert!(err.to_string().contains("unknown problem 'rosenbrock'"));
    }

    #[test]
    fn dimension_mismatches_are_reported() {
        let mut p = ProblemConfig::named("smooth-quadratic");
        p.dim = Some(3);
        assert!(p.build().unwrap_err().to_string().contains("dimension mismatch"));
        let init = InitialConfig {
            x0: Some(vec![1.0, 2.0, 3.0]),
            ..Default::default()
        };
        assert!(init.resolve(2).unwrap_err().to_string().contains("dimension mismatch"));
    }

    #[test]
    fn half_specified_params_are_rejected() {
        let p = ParamsConfig::Explicit {
            a: Some(0.5),
            b: None,
            gamma: None,
        };
        assert!(matches!(p.resolve(1.0), Err(Error::Config(_))));
    }

    #[test]
    fn output_dir_is_relative_to_config() {
        let cfg = ExperimentConfig::from_toml(FULL).unwrap();
        assert_eq!(
            cfg.output_dir(Path::new("/tmp/exp/run.toml")),
            PathBuf::from("/tmp/exp/results")
        );
    }
}
