//! The adaptive extragradient solver with backtracking step-constant search.

use std::collections::BTreeMap;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::geometry::prox_step;
use crate::solvers::{AdaptiveConfig, SlackConfig, SlackMode, SolverRun};
use crate::vector::Vector;
use crate::vi::VIProblem;

/// Runs the adaptive method: each iteration backtracks for the smallest step
/// constant (starting from half the previous one, doubling on rejection)
/// whose extrapolation/update pair passes the acceptance test, then commits
/// the update.
pub fn solve_adaptive(
    problem: &VIProblem,
    config: &AdaptiveConfig,
    initial: Option<&Vector>,
) -> Result<SolverRun> {
    run(problem, config, 0.0, SlackMode::None, initial)
}

/// Same loop with a slack term in the acceptance test, for operators that
/// satisfy the smoothness inequality only up to an additive tolerance.
pub fn solve_adaptive_slack(
    problem: &VIProblem,
    config: &SlackConfig,
    initial: Option<&Vector>,
) -> Result<SolverRun> {
    if !(config.delta.is_finite() && config.delta >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "slack must be nonnegative, got {}",
            config.delta
        )));
    }
    run(problem, &config.base, config.delta, config.mode, initial)
}

fn run(
    problem: &VIProblem,
    config: &AdaptiveConfig,
    delta: f64,
    mode: SlackMode,
    initial: Option<&Vector>,
) -> Result<SolverRun> {
    if !(config.l0.is_finite() && config.l0 > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "initial step constant must be positive, got {}",
            config.l0
        )));
    }
    if config.max_trials_per_iter == 0 {
        return Err(Error::InvalidArgument(
            "backtracking needs at least one trial per iteration".into(),
        ));
    }
    let mu = config.mu_override.unwrap_or(problem.mu());
    if !(mu.is_finite() && mu >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "strong-monotonicity modulus must be nonnegative, got {mu}"
        )));
    }
    let geometry = problem.geometry().clone();
    let set = problem.set();
    let clock = Instant::now();

    let mut z = match initial {
        Some(x0) => {
            if !set.contains(x0) {
                return Err(Error::InvalidArgument(
                    "initial point lies outside the feasible set".into(),
                ));
            }
            x0.clone()
        }
        None => geometry.min_point(set)?,
    };

    let n = config.max_iters;
    let mut iterates = Vec::with_capacity(n + 1);
    let mut extrapolations = Vec::with_capacity(n);
    let mut l_sequence = Vec::with_capacity(n);
    let mut trials_per_iter = Vec::with_capacity(n);
    let mut oracle_calls = Vec::with_capacity(n);
    iterates.push(z.clone());

    let calls_before = problem.oracle_calls();
    let mut l_base = config.l0;
    for k in 0..n {
        let g_z = problem.eval(&z)?;
        let mut l_trial = 0.5 * l_base;
        let mut trials: u64 = 0;
        let mut accepted = None;
        while (trials as usize) < config.max_trials_per_iter {
            trials += 1;
            let w = prox_step(
                geometry.as_ref(),
                set,
                &g_z.scale(1.0 / l_trial),
                &[(1.0, &z)],
            )?;
            let g_w = problem.eval(&w)?;
            let linear = g_w.scale(1.0 / l_trial);
            let z_next = if mu > 0.0 {
                prox_step(
                    geometry.as_ref(),
                    set,
                    &linear,
                    &[(1.0, &z), (mu / l_trial, &w)],
                )?
            } else {
                prox_step(geometry.as_ref(), set, &linear, &[(1.0, &z)])?
            };
            let lhs = g_z.sub(&g_w).dot(&z_next.sub(&w));
            let core = l_trial
                * (geometry.divergence(&w, &z)? + geometry.divergence(&z_next, &w)?);
            let slack = match mode {
                SlackMode::None => 0.0,
                SlackMode::Additive => delta,
                SlackMode::Multiplicative => l_trial * delta,
            };
            if lhs <= core + slack {
                accepted = Some((w, z_next));
                break;
            }
            l_trial *= 2.0;
        }
        let Some((w, z_next)) = accepted else {
            return Err(Error::LineSearchExhausted {
                iteration: k,
                max_trials: config.max_trials_per_iter,
                last_l: l_trial / 2.0,
            });
        };

        #[cfg(debug_assertions)]
        if mode == SlackMode::None && !problem.has_noise() {
            if let Some(star) = problem.known_solution() {
                let before = geometry.divergence(star, &z)?;
                let after = geometry.divergence(star, &z_next)?;
                let contracted = before / (1.0 + mu / l_trial);
                debug_assert!(
                    after <= contracted + 1e-8 * (1.0 + before),
                    "iteration {k}: divergence {after} above contracted {contracted}"
                );
            }
        }

        let step_div = geometry.divergence(&z_next, &z)?;
        l_base = l_trial;
        l_sequence.push(l_trial);
        trials_per_iter.push(trials);
        oracle_calls.push(problem.oracle_calls() - calls_before);
        extrapolations.push(w);
        iterates.push(z_next.clone());
        z = z_next;
        if config.stop_tol > 0.0 && step_div <= config.stop_tol {
            break;
        }
    }

    Ok(SolverRun {
        solver: mode.label().to_string(),
        iterates,
        extrapolations,
        l_sequence,
        trials: trials_per_iter,
        oracle_calls,
        wall_ms: clock.elapsed().as_secs_f64() * 1e3,
        metrics: BTreeMap::new(),
    })
}
