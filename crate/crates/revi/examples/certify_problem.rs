//! Certifies the structural assumptions behind the convergence theory on a
//! concrete instance — relative strong monotonicity by sampling, relative
//! smoothness by ratio estimation — and round-trips the instance through the
//! binary archive format.
//!
//! Run with `cargo run --example certify_problem`.

use revi::problems::{BoxSimplexInstance, ProblemArchive};
use revi::vi::{certify_relative_strong_monotonicity, estimate_relative_smoothness};

fn main() -> Result<(), revi::Error> {
    let instance = BoxSimplexInstance::generate(12, 1e-2, 1e-3, 5)?;
    let problem = instance.problem()?;
    println!(
        "game n = {}, mu_y = {}, mu_z = {}, declared modulus {}",
        instance.n(),
        instance.mu_y(),
        instance.mu_z(),
        problem.mu()
    );

    let report = certify_relative_strong_monotonicity(&problem, 1000, 7)?;
    println!(
        "strong monotonicity over {} sampled pairs: min slack {:.3e} (holds: {})",
        report.samples,
        report.min_slack,
        report.holds(1e-8)
    );

    let smoothness = estimate_relative_smoothness(&problem, 1000, 8)?;
    println!("relative smoothness estimate: {smoothness:.4}");

    // Instances serialize to a validated binary layout; reconstruction
    // re-runs all structural checks.
    let dir = std::env::temp_dir().join("revi_certify_example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("game.bin");
    ProblemArchive::BoxSimplex(instance.clone()).save(&path)?;
    let restored = match ProblemArchive::load(&path)? {
        ProblemArchive::BoxSimplex(inner) => inner,
        other => panic!("unexpected archive kind {}", other.kind()),
    };
    assert_eq!(restored.matrix(), instance.matrix());
    assert_eq!(
        restored.initial_point().to_bits(),
        instance.initial_point().to_bits()
    );
    println!("archive round trip at {} is bit-exact", path.display());
    Ok(())
}
