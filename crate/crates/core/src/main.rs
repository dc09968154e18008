use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use proxflow::experiment::{self, GridSpec, RunOptions, SweepOptions, VerifyOptions};

#[derive(Parser)]
#[command(name = "proxflow", version, about = "Integrate and diagnose proximal-gradient dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write trajectory.csv, decay.csv and summary.json.
    Run {
        config: PathBuf,
        /// Integrate even if (a, b, gamma, L) fails the admissibility condition.
        #[arg(long)]
        override_param_check: bool,
    },
    /// Run the built-in invariant suite and print a pass/fail table.
    Verify {
        /// Force the step used by the decrease and subgradient checks.
        #[arg(long)]
        dt: Option<f64>,
    },
    /// Tabulate feasibility over a grid of (a, b, gamma) into sweep.csv.
    Sweep {
        config: PathBuf,
        /// Axes such as "a=0.05:2:32,gamma=1e-4:0.5:32:log".
        #[arg(long)]
        grid: String,
        /// Also integrate each feasible cell and record its rate regime.
        #[arg(long)]
        integrate: bool,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let code = match Cli::parse().command {
        Command::Run {
            config,
            override_param_check,
        } => match experiment::run(&config, RunOptions { override_param_check }) {
            Ok(summary) => {
                println!(
                    "{}: stop reason {} at t = {} after {} samples",
                    summary.problem, summary.stop_reason, summary.final_time, summary.samples
                );
                if let Some(limit) = &summary.limit {
                    println!("x_limit = {:?}, prox residual {:.3e}", limit.x_limit, limit.prox_residual_at_limit);
                }
                match (&summary.rate, &summary.rate_note) {
                    (Some(rate), _) => println!("rate regime: {}", rate.regime),
                    (None, Some(note)) => println!("no rate estimate: {note}"),
                    (None, None) => {}
                }
                summary.exit_code()
            }
            Err(e) => {
                eprintln!("error: {e}");
                1
            }
        },
        Command::Verify { dt } => {
            let report = experiment::verify(VerifyOptions {
                dt_override: dt,
                ..VerifyOptions::default()
            });
            println!("{report}");
            report.exit_code()
        }
        Command::Sweep {
            config,
            grid,
            integrate,
        } => match GridSpec::parse(&grid).and_then(|g| experiment::sweep(&config, &g, SweepOptions { integrate })) {
            Ok(rows) => {
                let feasible = rows.iter().filter(|r| r.feasible).count();
                println!("{} cells, {feasible} feasible", rows.len());
                0
            }
            Err(e) => {
                eprintln!("error: {e}");
                1
            }
        },
    };
    ExitCode::from(code as u8)
}
