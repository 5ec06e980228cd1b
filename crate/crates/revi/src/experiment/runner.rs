//! Config-driven experiment execution: builds the (variant, seed, solver)
//! grid, runs the cells on a worker pool, and writes per-cell CSV traces, a
//! merged trace table, convergence plots, and a JSON manifest.

use std::collections::VecDeque;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiment::config::{ExperimentConfig, ExperimentKind, Metric, SolverKind, SolverSpec};
use crate::experiment::csv::{self, CsvRow};
use crate::experiment::svg::{self, PlotSeries};
use crate::metrics::{self, MetricTrace};
use crate::problems::{BoxSimplexInstance, DataDistribution, ErmInstance, SyntheticInstance};
use crate::solvers::{
    solve_adaptive, solve_adaptive_slack, solve_classical_eg, solve_mirror_descent,
    solve_nonadaptive_eg, theoretical_bound, AdaptiveConfig, ClassicalConfig, FixedStepConfig,
    MirrorDescentConfig, SlackConfig, SlackMode, SolverRun,
};
use crate::vector::Vector;
use crate::vi::VIProblem;

/// Stream separator for the injected-noise RNG, so noise draws never reuse
/// the instance or initial-point streams of the same seed.
const NOISE_STREAM: u64 = 0xD1B5_4A32_D192_ED03;

/// Environment variable limiting the worker-thread count.
pub const THREADS_ENV: &str = "REVI_THREADS";

/// What one grid cell reported back, serialized into the manifest.
#[derive(Debug, Clone, Serialize)]
pub struct CellReport {
    pub variant: usize,
    pub seed: u64,
    pub solver: String,
    pub wall_ms: f64,
    pub iterations: usize,
    pub total_trials: u64,
    pub total_oracle_calls: u64,
    /// Aggregation-gradient evaluations (ridge experiments only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comm_rounds: Option<u64>,
    /// Similarity weight actually used (ridge experiments only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_source: Option<String>,
    /// Data entries clamped during heavy-tailed generation.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clamped_entries: Option<u64>,
    /// Step size the classical baseline resolved to, when automatic.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resolved_step: Option<f64>,
    pub csv: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    package: &'static str,
    version: &'static str,
    experiment: &'static str,
    threads: usize,
    variants: Vec<String>,
    deviations: Vec<String>,
    cells: Vec<CellReport>,
    config: &'a ExperimentConfig,
}

/// Artifact paths and per-cell outcomes of one experiment run.
#[derive(Debug)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub trace_path: PathBuf,
    pub manifest_path: PathBuf,
    pub plot_paths: Vec<PathBuf>,
    pub cells: Vec<CellReport>,
    pub failures: Vec<String>,
}

impl RunSummary {
    pub fn all_succeeded(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Worker count: `REVI_THREADS` when set, otherwise the machine's available
/// parallelism.
pub fn thread_budget() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(raw) => match raw.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(Error::Config(format!(
                "{THREADS_ENV} must be a positive integer, got {raw:?}"
            ))),
        },
        Err(_) => Ok(std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)),
    }
}

struct CellTask {
    variant: usize,
    seed: u64,
    spec_index: usize,
}

struct CellOutcome {
    rows: Vec<CsvRow>,
    report: CellReport,
}

/// One problem variant plus whatever instance data the metrics still need;
/// the affine family is fully described by its `VIProblem`.
enum BuiltProblem {
    Game(Box<BoxSimplexInstance>),
    Ridge(Box<ErmInstance>),
    Affine,
}

fn build_problem(
    config: &ExperimentConfig,
    variant: usize,
    seed: u64,
) -> Result<(BuiltProblem, VIProblem, Option<Vector>)> {
    match config.experiment {
        ExperimentKind::BoxSimplex => {
            let p = config.box_simplex.as_ref().expect("validated");
            let (mu_y, mu_z) = p.mu_pairs[variant];
            let instance = BoxSimplexInstance::generate(p.n, mu_y, mu_z, seed)?;
            let problem = instance.problem()?;
            let x0 = instance.initial_point();
            Ok((BuiltProblem::Game(Box::new(instance)), problem, Some(x0)))
        }
        ExperimentKind::Erm => {
            let p = config.erm.as_ref().expect("validated");
            let distribution = DataDistribution::from_tag(&p.distribution)?;
            let instance =
                ErmInstance::generate(p.n, p.s, p.m, p.lambdas[variant], distribution, seed, p.gamma)?;
            let problem = instance.problem()?;
            let x0 = instance.initial_point();
            Ok((BuiltProblem::Ridge(Box::new(instance)), problem, Some(x0)))
        }
        ExperimentKind::Synthetic => {
            let p = config.synthetic.as_ref().expect("validated");
            let instance = SyntheticInstance::generate(p.n, p.mu, p.l, seed)?;
            let problem = instance.problem()?;
            Ok((BuiltProblem::Affine, problem, None))
        }
    }
}

fn dispatch_solver(
    spec: &SolverSpec,
    problem: &VIProblem,
    x0: Option<&Vector>,
) -> Result<SolverRun> {
    let stop_tol = spec.stop_tol.unwrap_or(0.0);
    match spec.kind {
        SolverKind::Adaptive
        | SolverKind::AdaptiveAdditiveSlack
        | SolverKind::AdaptiveMultiplicativeSlack => {
            let mut base = AdaptiveConfig::new(spec.l0.expect("validated"), spec.max_iters);
            base.mu_override = spec.mu_override;
            base.stop_tol = stop_tol;
            if let Some(t) = spec.max_trials {
                base.max_trials_per_iter = t;
            }
            match spec.kind {
                SolverKind::Adaptive => solve_adaptive(problem, &base, x0),
                SolverKind::AdaptiveAdditiveSlack => {
                    let config =
                        SlackConfig::new(base, spec.delta.expect("validated"), SlackMode::Additive);
                    solve_adaptive_slack(problem, &config, x0)
                }
                SolverKind::AdaptiveMultiplicativeSlack => {
                    let config = SlackConfig::new(
                        base,
                        spec.delta.expect("validated"),
                        SlackMode::Multiplicative,
                    );
                    solve_adaptive_slack(problem, &config, x0)
                }
                _ => unreachable!(),
            }
        }
        SolverKind::NonadaptiveEg => {
            let mut config = FixedStepConfig::new(spec.l.expect("validated"), spec.max_iters);
            config.mu_override = spec.mu_override;
            config.stop_tol = stop_tol;
            solve_nonadaptive_eg(problem, &config, x0)
        }
        SolverKind::ClassicalEg => {
            let mut config = ClassicalConfig::new(spec.max_iters);
            config.step = spec.step;
            config.stop_tol = stop_tol;
            solve_classical_eg(problem, &config, x0)
        }
        SolverKind::MirrorDescent => {
            let mut config = MirrorDescentConfig::new(spec.max_iters);
            config.stop_tol = stop_tol;
            solve_mirror_descent(problem, &config, x0)
        }
    }
}

/// The step constant reported for the initial row of the CSV trace.
fn initial_step_constant(spec: &SolverSpec, run: &SolverRun) -> f64 {
    match spec.kind {
        SolverKind::Adaptive
        | SolverKind::AdaptiveAdditiveSlack
        | SolverKind::AdaptiveMultiplicativeSlack => spec.l0.expect("validated"),
        SolverKind::NonadaptiveEg => spec.l.expect("validated"),
        SolverKind::ClassicalEg | SolverKind::MirrorDescent => {
            run.l_sequence.first().copied().unwrap_or(1.0)
        }
    }
}

fn slack_parameters(spec: &SolverSpec) -> (f64, SlackMode) {
    match spec.kind {
        SolverKind::AdaptiveAdditiveSlack => (spec.delta.expect("validated"), SlackMode::Additive),
        SolverKind::AdaptiveMultiplicativeSlack => {
            (spec.delta.expect("validated"), SlackMode::Multiplicative)
        }
        _ => (0.0, SlackMode::None),
    }
}

fn supports_bound_metric(kind: SolverKind) -> bool {
    !matches!(kind, SolverKind::ClassicalEg | SolverKind::MirrorDescent)
}

fn metric_traces(
    config: &ExperimentConfig,
    built: &BuiltProblem,
    problem: &VIProblem,
    spec: &SolverSpec,
    run: &SolverRun,
) -> Result<Vec<MetricTrace>> {
    let mut traces = Vec::new();
    for metric in config.effective_metrics() {
        if metric == Metric::Bound && !supports_bound_metric(spec.kind) {
            continue;
        }
        let mut trace = MetricTrace::new(metric.name());
        match metric {
            Metric::Gap => {
                let instance = match built {
                    BuiltProblem::Game(i) => i,
                    _ => return Err(Error::Misuse("gap metric outside the game family".into())),
                };
                for (k, z) in run.iterates.iter().enumerate() {
                    trace.push(k, metrics::box_simplex_gap(instance, z)?)?;
                }
            }
            Metric::Objective => {
                let instance = match built {
                    BuiltProblem::Ridge(i) => i,
                    _ => {
                        return Err(Error::Misuse(
                            "objective metric outside the ridge family".into(),
                        ))
                    }
                };
                for (k, z) in run.iterates.iter().enumerate() {
                    trace.push(k, instance.objective(z)?)?;
                }
            }
            Metric::Distance => {
                for (k, z) in run.iterates.iter().enumerate() {
                    trace.push(k, metrics::bregman_to_solution(problem, z)?)?;
                }
            }
            Metric::Bound => {
                let z0 = run.iterates.first().ok_or_else(|| {
                    Error::Numeric("run recorded no iterates".into())
                })?;
                let v0 = metrics::bregman_to_solution(problem, z0)?;
                let mu = spec.mu_override.unwrap_or(problem.mu());
                let (delta, mode) = slack_parameters(spec);
                for (k, b) in theoretical_bound(v0, mu, &run.l_sequence, delta, mode)
                    .into_iter()
                    .enumerate()
                {
                    trace.push(k, b)?;
                }
            }
        }
        traces.push(trace);
    }
    Ok(traces)
}

fn run_cell(config: &ExperimentConfig, task: &CellTask, cells_dir: &Path) -> Result<CellOutcome> {
    let spec = &config.solvers[task.spec_index];
    let label = spec.effective_label();
    let (built, mut problem, x0) = build_problem(config, task.variant, task.seed)?;
    if let Some(amplitude) = spec.noise_amplitude {
        if amplitude > 0.0 {
            problem = problem.with_noise(amplitude, task.seed ^ NOISE_STREAM)?;
        }
    }

    let clock = Instant::now();
    let mut run = dispatch_solver(spec, &problem, x0.as_ref())?;
    let wall_ms = clock.elapsed().as_secs_f64() * 1e3;
    run.solver = label.clone();

    let traces = metric_traces(config, &built, &problem, spec, &run)?;
    let csv_wall = if config.record_timing { wall_ms } else { 0.0 };
    let rows = csv::rows_from_run(&run, &traces, initial_step_constant(spec, &run), csv_wall)?;
    let csv_name = format!("v{}_s{}_{}.csv", task.variant, task.seed, label);
    csv::write_rows(&cells_dir.join(&csv_name), &rows)?;

    let (comm_rounds, gamma, gamma_source, clamped) = match &built {
        BuiltProblem::Ridge(instance) => {
            let source = match config.erm.as_ref().and_then(|p| p.gamma) {
                Some(_) => "config override",
                None => match config.erm.as_ref().map(|p| p.distribution.as_str()) {
                    Some("cauchy") => "heavy-tail fallback",
                    _ => "spectral estimate",
                },
            };
            (
                Some(instance.communication_rounds()),
                Some(instance.gamma()),
                Some(source.to_string()),
                Some(instance.clamped_entries()),
            )
        }
        _ => (None, None, None, None),
    };
    let resolved_step = match spec.kind {
        SolverKind::ClassicalEg if spec.step.is_none() => {
            run.l_sequence.first().map(|l| 1.0 / l)
        }
        _ => None,
    };

    Ok(CellOutcome {
        rows,
        report: CellReport {
            variant: task.variant,
            seed: task.seed,
            solver: label,
            wall_ms,
            iterations: run.iterations(),
            total_trials: run.total_trials(),
            total_oracle_calls: run.total_oracle_calls(),
            comm_rounds,
            gamma,
            gamma_source,
            clamped_entries: clamped,
            resolved_step,
            csv: format!("cells/{csv_name}"),
        error: None,
        },
    })
}

/// Runs the whole grid described by `config` and writes all artifacts under
/// `config.output_dir`. Cell failures are recorded in the summary (and the
/// manifest) rather than aborting the remaining cells.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunSummary> {
    config.validate()?;
    let threads = thread_budget()?;
    let output_dir = config.output_dir.clone();
    let cells_dir = output_dir.join("cells");
    std::fs::create_dir_all(&cells_dir)
        .map_err(|e| Error::Config(format!("cannot create {}: {e}", cells_dir.display())))?;

    let mut tasks = VecDeque::new();
    for variant in 0..config.variant_count() {
        for &seed in &config.seeds {
            for spec_index in 0..config.solvers.len() {
                tasks.push_back(CellTask {
                    variant,
                    seed,
                    spec_index,
                });
            }
        }
    }
    let total = tasks.len();
    let queue = Mutex::new(tasks);
    let done: Mutex<Vec<(usize, u64, usize, Result<CellOutcome>)>> =
        Mutex::new(Vec::with_capacity(total));

    std::thread::scope(|scope| {
        for _ in 0..threads.min(total.max(1)) {
            scope.spawn(|| loop {
                let task = match queue.lock().expect("queue lock").pop_front() {
                    Some(t) => t,
                    None => break,
                };
                let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| {
                    run_cell(config, &task, &cells_dir)
                }))
                .unwrap_or_else(|panic| {
                    let message = panic
                        .downcast_ref::<&str>()
                        .map(|s| s.to_string())
                        .or_else(|| panic.downcast_ref::<String>().cloned())
                        .unwrap_or_else(|| "worker panicked".into());
                    Err(Error::Numeric(format!("cell panicked: {message}")))
                });
                done.lock()
                    .expect("result lock")
                    .push((task.variant, task.seed, task.spec_index, outcome));
            });
        }
    });

    let mut outcomes = done.into_inner().expect("all workers joined");
    outcomes.sort_by_key(|(variant, seed, spec_index, _)| (*variant, *seed, *spec_index));

    let mut cell_rows: Vec<(usize, u64, Vec<CsvRow>)> = Vec::new();
    let mut cells: Vec<CellReport> = Vec::new();
    let mut failures: Vec<String> = Vec::new();
    for (variant, seed, spec_index, outcome) in outcomes {
        let label = config.solvers[spec_index].effective_label();
        match outcome {
            Ok(cell) => {
                cell_rows.push((variant, seed, cell.rows));
                cells.push(cell.report);
            }
            Err(e) => {
                let message = format!("variant {variant} seed {seed} solver {label}: {e}");
                failures.push(message.clone());
                cells.push(CellReport {
                    variant,
                    seed,
                    solver: label,
                    wall_ms: 0.0,
                    iterations: 0,
                    total_trials: 0,
                    total_oracle_calls: 0,
                    comm_rounds: None,
                    gamma: None,
                    gamma_source: None,
                    clamped_entries: None,
                    resolved_step: None,
                    csv: String::new(),
                    error: Some(message),
                });
            }
        }
    }

    let merged: Vec<CsvRow> = cell_rows
        .iter()
        .flat_map(|(_, _, rows)| rows.iter().cloned())
        .collect();
    let trace_path = output_dir.join("trace.csv");
    csv::write_rows(&trace_path, &merged)?;

    let mut plot_paths = Vec::new();
    for variant in 0..config.variant_count() {
        for metric in config.effective_metrics() {
            let mut series: Vec<PlotSeries> = Vec::new();
            for (_, seed, rows) in cell_rows.iter().filter(|(v, _, _)| *v == variant) {
                let mut by_solver: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
                for row in rows.iter().filter(|r| r.metric_name == metric.name()) {
                    match by_solver.iter_mut().find(|(s, _)| *s == row.solver) {
                        Some((_, points)) => points.push((row.iter as f64, row.metric_value)),
                        None => by_solver.push((
                            row.solver.clone(),
                            vec![(row.iter as f64, row.metric_value)],
                        )),
                    }
                }
                for (solver, points) in by_solver {
                    let label = if config.seeds.len() > 1 {
                        format!("{solver} s{seed}")
                    } else {
                        solver
                    };
                    series.push(PlotSeries { label, points });
                }
            }
            if series.is_empty() {
                continue;
            }
            let title = format!("{} — {}", metric.name(), config.variant_description(variant));
            let svg_text = svg::render_line_plot(&series, &title, config.log_y)?;
            let path = output_dir.join(format!("{}_v{variant}.svg", metric.name()));
            svg::write_plot(&path, &svg_text)?;
            plot_paths.push(path);
        }
    }

    let mut deviations = Vec::new();
    if !config.record_timing {
        deviations.push(
            "csv wall_ms column is zeroed for reproducibility; timings live in this manifest"
                .to_string(),
        );
    }
    if config
        .solvers
        .iter()
        .any(|s| !supports_bound_metric(s.kind))
        && config.effective_metrics().contains(&Metric::Bound)
    {
        deviations.push(
            "bound metric skipped for solvers without a step-constant recursion".to_string(),
        );
    }
    for cell in &cells {
        if let Some(clamped) = cell.clamped_entries {
            if clamped > 0 {
                deviations.push(format!(
                    "variant {} seed {}: {clamped} heavy-tailed data entries clamped to +/-1e6",
                    cell.variant, cell.seed
                ));
            }
        }
    }
    deviations.dedup();

    let manifest = Manifest {
        package: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        experiment: config.experiment.name(),
        threads,
        variants: (0..config.variant_count())
            .map(|v| config.variant_description(v))
            .collect(),
        deviations,
        cells: cells.clone(),
        config,
    };
    let manifest_path = output_dir.join("manifest.json");
    let manifest_text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::Misuse(format!("cannot render manifest: {e}")))?;
    std::fs::write(&manifest_path, manifest_text + "\n")
        .map_err(|e| Error::Misuse(format!("cannot write {}: {e}", manifest_path.display())))?;

    Ok(RunSummary {
        output_dir,
        trace_path,
        manifest_path,
        plot_paths,
        cells,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::config::ExperimentKind;

    fn tiny_synthetic(dir: &Path) -> ExperimentConfig {
        let mut config = ExperimentConfig::default_for(ExperimentKind::Synthetic);
        config.output_dir = dir.to_path_buf();
        config.synthetic.as_mut().unwrap().n = 6;
        for spec in &mut config.solvers {
            spec.max_iters = 25;
        }
        config
    }

    #[test]
    fn synthetic_grid_produces_all_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let config = tiny_synthetic(dir.path());
        let summary = run_experiment(&config).unwrap();
        assert!(summary.all_succeeded(), "failures: {:?}", summary.failures);
        assert_eq!(summary.cells.len(), 2);
        assert!(summary.trace_path.is_file());
        assert!(summary.manifest_path.is_file());
        assert_eq!(summary.plot_paths.len(), 2, "distance and bound plots");
        for cell in &summary.cells {
            assert!(dir.path().join(&cell.csv).is_file());
            assert_eq!(cell.iterations, 25);
            assert!(cell.total_oracle_calls > 0);
        }
        let manifest = std::fs::read_to_string(&summary.manifest_path).unwrap();
        let parsed: serde_json::Value = serde_json::from_str(&manifest).unwrap();
        assert_eq!(parsed["experiment"], "synthetic");
        assert_eq!(parsed["cells"].as_array().unwrap().len(), 2);

        let rows = csv::read_rows(&summary.trace_path).unwrap();
        let labels: std::collections::BTreeSet<_> =
            rows.iter().map(|r| r.solver.clone()).collect();
        assert_eq!(labels.len(), 2);
        assert!(rows.iter().all(|r| r.wall_ms == 0.0), "timing off by default");
        let bound_rows: Vec<_> = rows.iter().filter(|r| r.metric_name == "bound").collect();
        let distance_rows: Vec<_> =
            rows.iter().filter(|r| r.metric_name == "distance").collect();
        assert_eq!(bound_rows.len(), distance_rows.len());
    }

    #[test]
    fn rerun_with_same_config_is_byte_identical() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let a = run_experiment(&tiny_synthetic(dir_a.path())).unwrap();
        let b = run_experiment(&tiny_synthetic(dir_b.path())).unwrap();
        let text_a = std::fs::read_to_string(&a.trace_path).unwrap();
        let text_b = std::fs::read_to_string(&b.trace_path).unwrap();
        assert_eq!(text_a, text_b);
        for (pa, pb) in a.plot_paths.iter().zip(&b.plot_paths) {
            assert_eq!(
                std::fs::read_to_string(pa).unwrap(),
                std::fs::read_to_string(pb).unwrap()
            );
        }
    }

    #[test]
    fn failing_cell_is_reported_but_others_complete() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = tiny_synthetic(dir.path());
        // An absurd trial cap makes backtracking fail on the first iteration.
        config.solvers[0].max_trials = Some(1);
        config.solvers[0].l0 = Some(1e-12);
        let summary = run_experiment(&config).unwrap();
        assert_eq!(summary.failures.len(), 1, "{:?}", summary.failures);
        assert!(summary.cells.iter().any(|c| c.error.is_some()));
        assert!(summary.cells.iter().any(|c| c.error.is_none()));
        let rows = csv::read_rows(&summary.trace_path).unwrap();
        assert!(rows.iter().all(|r| r.solver == "nonadaptive_eg"));
    }

    #[test]
    fn record_timing_fills_wall_column() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = tiny_synthetic(dir.path());
        config.record_timing = true;
        config.solvers.truncate(1);
        let summary = run_experiment(&config).unwrap();
        let rows = csv::read_rows(&summary.trace_path).unwrap();
        assert!(rows.iter().all(|r| r.wall_ms > 0.0));
    }
}
