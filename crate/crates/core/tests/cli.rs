use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use proxflow::experiment::{RunSummary, SweepRow};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_proxflow"))
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("config.toml");
    fs::write(&path, body).unwrap();
    path
}

const LASSO_1D: &str = r#"
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
t_max = 5000.0
sample_stride = 200

[outputs]
directory = "out"
"#;

fn run_config(body: &str, extra: &[&str]) -> (TempDir, std::process::Output) {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), body);
    let out = bin().arg("run").arg(&cfg).args(extra).output().unwrap();
    (dir, out)
}

fn read_summary(dir: &Path) -> RunSummary {
    serde_json::from_str(&fs::read_to_string(dir.join("out/summary.json")).unwrap()).unwrap()
}

#[test]
fn lasso_config_converges_to_one() {
    let (dir, out) = run_config(LASSO_1D, &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = read_summary(dir.path());
    let limit = summary.limit.unwrap();
    assert!((limit.x_limit[0] - 1.0).abs() < 1e-5);
    assert_eq!(summary.files.len(), 3);
    for f in &summary.files {
        assert!(f.exists(), "{}", f.display());
    }
    let decay = fs::read_to_string(dir.path().join("out/decay.csv")).unwrap();
    assert!(decay.lines().count() > 1);
}

#[test]
fn inadmissible_params_exit_one_citing_condition() {
    let body = LASSO_1D.replace("a = 0.5", "a = 1.0").replace("gamma = 0.01", "gamma = 0.1");
    let (dir, out) = run_config(&body, &[]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("admissibility condition") && err.contains("< b fails"), "{err}");
    assert!(!dir.path().join("out").exists());

    let short = body.replace("t_max = 5000.0", "t_max = 1.0");
    let (_dir, forced) = run_config(&short, &["--override-param-check"]);
    assert_eq!(forced.status.code(), Some(2));
}

#[test]
fn zero_horizon_exits_two_with_empty_decay_file() {
    let (dir, out) = run_config(&LASSO_1D.replace("t_max = 5000.0", "t_max = 0.0"), &[]);
    assert_eq!(out.status.code(), Some(2));
    let decay = fs::read_to_string(dir.path().join("out/decay.csv")).unwrap();
    assert_eq!(decay, "t,d,sigma\n");
    let traj = fs::read_to_string(dir.path().join("out/trajectory.csv")).unwrap();
    assert_eq!(traj.lines().count(), 2);
}

#[test]
fn config_errors_have_distinct_messages() {
    let dir = TempDir::new().unwrap();
    let missing = bin().arg("run").arg(dir.path().join("nope.toml")).output().unwrap();
    let unknown = run_config(&LASSO_1D.replace("lasso-like", "rosenbrock"), &[]).1;
    let mismatch = run_config(&LASSO_1D.replace("x0 = [0.0]", "x0 = [0.0, 1.0]"), &[]).1;
    let messages: Vec<String> = [&missing, &unknown, &mismatch]
        .iter()
        .map(|o| {
            assert_eq!(o.status.code(), Some(1));
            String::from_utf8_lossy(&o.stderr).into_owned()
        })
        .collect();
    assert!(messages[0].contains("cannot read config"), "{}", messages[0]);
    assert!(messages[1].contains("unknown problem 'rosenbrock'"), "{}", messages[1]);
    assert!(messages[2].contains("dimension mismatch"), "{}", messages[2]);
}

#[test]
fn divergence_exits_three() {
    // The fast mode has rate about 1.5; dt = 5 is far outside the RK4
    // stability interval, so the iterates blow up.
    let body = r#"
[problem]
name = "smooth-quadratic"
q = [1.0]
c = [0.0]
[params]
a = 0.5
b = 1.0
gamma = 0.01
[initial]
x0 = [1.0]
[integration]
dt = 5.0
t_max = 100000.0
[outputs]
directory = "out"
"#;
    let (dir, out) = run_config(body, &[]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = read_summary(dir.path());
    assert!(summary.divergence.is_some());
}

#[test]
fn summary_round_trips_exactly() {
    let (dir, out) = run_config(LASSO_1D, &[]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("out/summary.json")).unwrap();
    let parsed: RunSummary = serde_json::from_str(&text).unwrap();
    assert_eq!(serde_json::to_string_pretty(&parsed).unwrap(), text);
    let again: RunSummary = serde_json::from_str(&serde_json::to_string(&parsed).unwrap()).unwrap();
    assert_eq!(again, parsed);
}

#[test]
fn summary_lists_only_written_files() {
    let body = LASSO_1D.replace("directory = \"out\"", "directory = \"out\"\nartifacts = [\"summary\"]");
    let (dir, out) = run_config(&body, &[]);
    assert_eq!(out.status.code(), Some(0));
    let summary = read_summary(dir.path());
    assert_eq!(summary.files, vec![dir.path().join("out/summary.json")]);
    assert!(!dir.path().join("out/trajectory.csv").exists());
}

fn sweep_rows(dir: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(dir.join("out/sweep.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn sweep_examples() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), LASSO_1D);

    let out = bin()
        .args(["sweep", cfg.to_str().unwrap(), "--grid", "a=0.5:2.05:32,gamma=0.01:0.32:32"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let rows = sweep_rows(dir.path());
    assert_eq!(rows.len(), 1024);
    let witness = rows
        .iter()
        .find(|r| r[0].parse::<f64>().unwrap() == 0.5 && r[2].parse::<f64>().unwrap() == 0.01)
        .unwrap();
    assert_eq!(witness[3], "true");

    let out = bin()
        .args(["sweep", cfg.to_str().unwrap(), "--grid", "a=2:4:8,gamma=1e-5:1:8:log"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(sweep_rows(dir.path()).iter().all(|r| r[3] == "false"));

    let out = bin()
        .args(["sweep", cfg.to_str().unwrap(), "--grid", "a=0.5:0.5:1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(sweep_rows(dir.path()).len(), 1);

    let out = bin()
        .args(["sweep", cfg.to_str().unwrap(), "--grid", "a=0.1:1:200,gamma=0.001:0.1:200"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("more than the limit"));
}

#[test]
fn sweep_is_deterministic_in_grid_order() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), LASSO_1D);
    let grid = proxflow::experiment::GridSpec::parse("a=0.1:1.9:20,gamma=1e-4:0.5:20:log").unwrap();
    let options = proxflow::experiment::SweepOptions::default();
    let first: Vec<SweepRow> = proxflow::experiment::sweep(&cfg, &grid, options).unwrap();
    let bytes = fs::read(dir.path().join("out/sweep.csv")).unwrap();
    let second = proxflow::experiment::sweep(&cfg, &grid, options).unwrap();
    assert_eq!(first, second);
    assert_eq!(bytes, fs::read(dir.path().join("out/sweep.csv")).unwrap());
    assert!(first.windows(2).all(|w| (w[0].a, w[0].gamma) < (w[1].a, w[1].gamma)));
}

#[test]
fn verify_subcommand_passes() {
    let out = bin().arg("verify").output().unwrap();
    let table = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{table}");
    assert!(table.contains("0 failed"));
}

#[test]
fn shipped_configs_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for entry in fs::read_dir(&root).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let cfg = proxflow::experiment::ExperimentConfig::load(&path).unwrap();
            cfg.problem.build().unwrap();
        }
    }
}
