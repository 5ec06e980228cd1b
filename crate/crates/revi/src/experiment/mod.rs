//! Config-driven experiments: TOML configuration, grid execution with
//! CSV/SVG/manifest artifacts, and the self-check suites.

pub mod config;
pub mod csv;
pub mod runner;
pub mod svg;
pub mod verify;

pub use config::{
    BoxSimplexParams, ErmParams, ExperimentConfig, ExperimentKind, Metric, SolverKind, SolverSpec,
    SyntheticParams,
};
pub use csv::{parse_rows, read_rows, render_rows, rows_from_run, write_rows, CsvRow, CSV_HEADER};
pub use runner::{run_experiment, thread_budget, CellReport, RunSummary, THREADS_ENV};
pub use svg::{plot_csv_files, render_line_plot, write_plot, PlotSeries};
pub use verify::{run_suites, run_suites_with, CheckOutcome, VerifyTolerances, SUITE_NAMES};
