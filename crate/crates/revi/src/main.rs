//! Command-line front end: run configured experiments, verify the library
//! against its independent oracles, emit default configs, and plot traces.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use revi::experiment::{
    plot_csv_files, run_experiment, run_suites_with, ExperimentConfig, ExperimentKind,
    VerifyTolerances,
};
use revi::Error;

#[derive(Parser)]
#[command(
    name = "revi",
    version,
    about = "Adaptive proximal extragradient experiments",
    long_about = "Runs variational-inequality experiments from TOML configs, checks every \
                  closed-form component against brute-force oracles, and renders convergence \
                  plots. Set REVI_THREADS to cap the worker count."
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the experiment grid described by a TOML config file.
    Run {
        /// Path to the config (see `print-default-config` for templates).
        config: PathBuf,
    },
    /// Re-derive closed-form components by independent paths and report
    /// pass/fail per check.
    Verify {
        /// Restrict to one suite: kernels, gap, gradients, monotonicity,
        /// theorems, or budget.
        #[arg(long)]
        filter: Option<String>,
        /// Multiply all tolerances by this factor.
        #[arg(long, default_value_t = 1.0)]
        tolerance_scale: f64,
    },
    /// Print the built-in config for one experiment family to stdout.
    PrintDefaultConfig {
        /// box_simplex, erm, or synthetic.
        experiment: String,
    },
    /// Render metric traces from CSV files to a single SVG.
    Plot {
        /// One or more trace CSV files.
        #[arg(required = true)]
        csv: Vec<PathBuf>,
        /// Output SVG path.
        #[arg(long)]
        out: PathBuf,
        /// Use a linear vertical axis instead of decades.
        #[arg(long)]
        linear_y: bool,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    match cli.cmd {
        Cmd::Run { config } => {
            let config = ExperimentConfig::load(&config)?;
            let summary = run_experiment(&config)?;
            println!("trace:    {}", summary.trace_path.display());
            for plot in &summary.plot_paths {
                println!("plot:     {}", plot.display());
            }
            println!("manifest: {}", summary.manifest_path.display());
            let ok = summary.cells.iter().filter(|c| c.error.is_none()).count();
            println!("cells:    {ok}/{} succeeded", summary.cells.len());
            if summary.all_succeeded() {
                Ok(())
            } else {
                for failure in &summary.failures {
                    eprintln!("failed: {failure}");
                }
                Err(Error::Numeric(format!(
                    "{} of {} cells failed; partial artifacts kept",
                    summary.failures.len(),
                    summary.cells.len()
                )))
            }
        }
        Cmd::Verify {
            filter,
            tolerance_scale,
        } => {
            if !(tolerance_scale.is_finite() && tolerance_scale > 0.0) {
                return Err(Error::Config(format!(
                    "--tolerance-scale must be positive, got {tolerance_scale}"
                )));
            }
            let tol = VerifyTolerances::default().scaled(tolerance_scale);
            let outcomes = run_suites_with(filter.as_deref(), &tol)?;
            let mut failed = 0usize;
            for o in &outcomes {
                let status = if o.passed { "PASS" } else { "FAIL" };
                if !o.passed {
                    failed += 1;
                }
                println!("{status} [{:>12}] {} — {}", o.suite, o.check, o.detail);
            }
            println!("{} checks, {failed} failed", outcomes.len());
            if failed == 0 {
                Ok(())
            } else {
                Err(Error::Numeric(format!(
                    "verification failed: {failed} of {} checks",
                    outcomes.len()
                )))
            }
        }
        Cmd::PrintDefaultConfig { experiment } => {
            let kind = ExperimentKind::parse(&experiment)?;
            print!("{}", ExperimentConfig::default_for(kind).to_toml_string()?);
            Ok(())
        }
        Cmd::Plot { csv, out, linear_y } => {
            plot_csv_files(&csv, &out, !linear_y)?;
            println!("plot:     {}", out.display());
            Ok(())
        }
    }
}
