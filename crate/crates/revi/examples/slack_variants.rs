//! Runs the two slack-tolerant variants on an operator corrupted by bounded
//! deterministic noise. The additive variant keeps contracting to a noise
//! floor; the multiplicative variant's floor is predicted by
//! `(1 + 2L/mu) * delta`.
//!
//! Run with `cargo run --example slack_variants`.

use revi::metrics::bregman_to_solution;
use revi::problems::SyntheticInstance;
use revi::solvers::{
    multiplicative_limit_floor, solve_adaptive, solve_adaptive_slack, AdaptiveConfig, SlackConfig,
    SlackMode,
};

fn main() -> Result<(), revi::Error> {
    let (mu, l, delta) = (1.0, 10.0, 1e-3);
    let instance = SyntheticInstance::generate(16, mu, l, 3)?;
    let clean = instance.problem()?;
    let noisy = instance.problem()?.with_noise(delta, 42)?;

    let iters = 150;
    let base = || AdaptiveConfig::new(2.0 * l, iters);
    let additive = solve_adaptive_slack(
        &noisy,
        &SlackConfig::new(base(), delta, SlackMode::Additive),
        None,
    )?;
    let multiplicative = solve_adaptive_slack(
        &noisy,
        &SlackConfig::new(base(), delta, SlackMode::Multiplicative),
        None,
    )?;

    let final_dist = |run: &revi::solvers::SolverRun| {
        bregman_to_solution(&noisy, run.final_iterate())
    };
    println!("noise amplitude {delta:.0e}, {iters} iterations");
    println!("additive slack:       V = {:.3e}", final_dist(&additive)?);
    println!("multiplicative slack: V = {:.3e}", final_dist(&multiplicative)?);
    println!(
        "multiplicative floor: {:.3e}",
        multiplicative_limit_floor(mu, l, delta)
    );

    // delta = 0 must reproduce the plain method bit for bit.
    let plain = solve_adaptive(&clean, &base(), None)?;
    let zero = solve_adaptive_slack(&clean, &SlackConfig::new(base(), 0.0, SlackMode::Additive), None)?;
    let identical = plain
        .iterates
        .iter()
        .zip(&zero.iterates)
        .all(|(a, b)| a.to_bits() == b.to_bits());
    println!("zero-slack run identical to plain adaptive: {identical}");
    assert!(identical);
    Ok(())
}
