//! Cross-checks each closed-form prox kernel against brute-force grid search
//! in a feasibility-preserving parametrization of its set.
//!
//! Run with `cargo run --release --example prox_kernels`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use revi::geometry::{QuadraticGeometry, ScaledEntropyGeometry};
use revi::kernels::{EntropySimplexKernel, QuadraticFormBallKernel, WeightedBoxKernel};
use revi::metrics::oracle::grid_prox_oracle;
use revi::{FeasibleSet, Vector};

fn report(name: &str, kernel_point: &Vector, oracle_point: &Vector) {
    let gap = kernel_point
        .iter()
        .zip(oracle_point.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!("{name:>16}: closed form vs grid search differ by {gap:.2e}");
    assert!(gap < 1e-5);
}

fn main() -> Result<(), revi::Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let linear = Vector::new(vec![0.4, -0.7, 0.2])?;

    // Entropy prox on the probability simplex.
    let simplex = FeasibleSet::simplex(3)?;
    let anchor = Vector::new(vec![0.5, 0.3, 0.2])?;
    let kernel = EntropySimplexKernel::new(3, 1.0)?;
    let point = kernel.prox(&linear, &[(1.0, &anchor)])?;
    let geometry = ScaledEntropyGeometry::new(3, 1.0)?;
    let oracle = grid_prox_oracle(&geometry, &simplex, &linear, &[(1.0, &anchor)], 160)?;
    report("entropy", &point, &oracle);

    // Weighted squared distance over a box.
    let weights = vec![0.8, 1.5, 0.6];
    let kernel = WeightedBoxKernel::new(weights.clone())?;
    let anchor = Vector::new(vec![0.9, -0.2, 0.4])?;
    let point = kernel.prox(&[-1.0; 3], &[1.0; 3], &linear, &[(2.0, &anchor)])?;
    let h = DMatrix::from_fn(3, 3, |r, c| if r == c { 2.0 * weights[r] } else { 0.0 });
    let geometry = QuadraticGeometry::new(h, Vector::zeros(3))?;
    let box_set = FeasibleSet::symmetric_unit_box(3);
    let oracle = grid_prox_oracle(&geometry, &box_set, &linear, &[(2.0, &anchor)], 100)?;
    report("weighted box", &point, &oracle);

    // Positive-definite quadratic form over a ball, in spherical coordinates
    // on the oracle side.
    let b = DMatrix::from_fn(3, 3, |_, _| rng.gen_range(-1.0..1.0));
    let h = &b * b.transpose() + DMatrix::identity(3, 3);
    let kernel = QuadraticFormBallKernel::new(h.clone())?;
    let anchor = Vector::new(vec![0.3, 0.3, -0.1])?;
    let ball = FeasibleSet::ball(Vector::zeros(3), 0.8)?;
    let point = kernel
        .prox(&Vector::zeros(3), 0.8, &linear, &[(1.0, &anchor)])?
        .point;
    let geometry = QuadraticGeometry::new(h, Vector::zeros(3))?;
    let oracle = grid_prox_oracle(&geometry, &ball, &linear, &[(1.0, &anchor)], 100)?;
    report("quadratic ball", &point, &oracle);

    println!("all kernels agree with the brute-force reference");
    Ok(())
}
