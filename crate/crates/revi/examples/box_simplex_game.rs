//! Regularized box-simplex matrix game: the adaptive method under the
//! coupled distance generator against the fixed-step iteration and the
//! Euclidean classical baseline, measured by the exact duality gap. Writes a
//! convergence plot under target/.
//!
//! Run with `cargo run --example box_simplex_game`.

use revi::experiment::{render_line_plot, write_plot, PlotSeries};
use revi::metrics::box_simplex_gap;
use revi::problems::BoxSimplexInstance;
use revi::solvers::{
    solve_adaptive, solve_classical_eg, solve_nonadaptive_eg, AdaptiveConfig, ClassicalConfig,
    FixedStepConfig,
};

fn main() -> Result<(), revi::Error> {
    let n = 50;
    let instance = BoxSimplexInstance::generate(n, 1e-2, 1e-2, 1)?;
    let problem = instance.problem()?;
    let x0 = instance.initial_point();

    let iters = 300;
    let runs = [
        solve_adaptive(&problem, &AdaptiveConfig::new(2.0, iters), Some(&x0))?,
        solve_nonadaptive_eg(&problem, &FixedStepConfig::new(1.0, iters), Some(&x0))?,
        solve_classical_eg(&problem, &ClassicalConfig::new(iters), Some(&x0))?,
    ];

    println!("game size n = {n}, scale {:.3}, {iters} iterations", instance.scale());
    let mut series = Vec::new();
    for run in &runs {
        let gaps: Vec<f64> = run
            .iterates
            .iter()
            .map(|z| box_simplex_gap(&instance, z))
            .collect::<Result<_, _>>()?;
        println!(
            "{:>14}: gap {:.3e} -> {:.3e}  ({} oracle calls)",
            run.solver,
            gaps[0],
            gaps[gaps.len() - 1],
            run.total_oracle_calls()
        );
        series.push(PlotSeries {
            label: run.solver.clone(),
            points: gaps.iter().enumerate().map(|(k, g)| (k as f64, *g)).collect(),
        });
    }

    let out = std::path::Path::new("target/box_simplex_game_gap.svg");
    write_plot(out, &render_line_plot(&series, "duality gap", true)?)?;
    println!("plot written to {}", out.display());
    Ok(())
}
