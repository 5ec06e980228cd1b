//! Variational-inequality problem descriptions.
//!
//! A problem couples an operator `g`, a feasible set `Q`, a Bregman geometry,
//! and the relative strong-monotonicity modulus `mu` the solvers rely on.
//! Every operator evaluation goes through [`VIProblem::eval`], which counts
//! calls and optionally injects bounded noise for the slack-tolerant solver
//! variants.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::BregmanGeometry;
use crate::set::FeasibleSet;
use crate::vector::Vector;

pub type Operator = Box<dyn Fn(&Vector) -> Result<Vector> + Send + Sync>;

struct OracleNoise {
    /// Euclidean bound on the injected perturbation.
    amplitude: f64,
    rng: Mutex<ChaCha8Rng>,
}

/// An operator over a feasible set, paired with the geometry its prox steps
/// use.
pub struct VIProblem {
    operator: Operator,
    set: FeasibleSet,
    geometry: Arc<dyn BregmanGeometry>,
    mu: f64,
    known_solution: Option<Vector>,
    gradient_field: bool,
    oracle_calls: AtomicU64,
    noise: Option<OracleNoise>,
}

impl VIProblem {
    pub fn new(
        operator: Operator,
        set: FeasibleSet,
        geometry: Arc<dyn BregmanGeometry>,
        mu: f64,
    ) -> Result<Self> {
        if set.dim() != geometry.dim() {
            return Err(Error::dim(geometry.dim(), set.dim(), "problem feasible set"));
        }
        if !(mu.is_finite() && mu >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "strong-monotonicity modulus must be nonnegative, got {mu}"
            )));
        }
        Ok(VIProblem {
            operator,
            set,
            geometry,
            mu,
            known_solution: None,
            gradient_field: false,
            oracle_calls: AtomicU64::new(0),
            noise: None,
        })
    }

    /// Records the exact solution for problems where it is known in closed
    /// form, enabling distance-to-solution metrics and tight solver checks.
    pub fn with_known_solution(mut self, solution: Vector) -> Result<Self> {
        if solution.dim() != self.dim() {
            return Err(Error::dim(self.dim(), solution.dim(), "known solution"));
        }
        if !self.set.contains(&solution) {
            return Err(Error::InvalidArgument(
                "known solution lies outside the feasible set".into(),
            ));
        }
        self.known_solution = Some(solution);
        Ok(self)
    }

    /// Marks the operator as the gradient of a convex objective, which makes
    /// plain mirror descent applicable.
    pub fn as_gradient_field(mut self) -> Self {
        self.gradient_field = true;
        self
    }

    /// Adds a bounded uniform perturbation to every operator evaluation:
    /// each component is drawn from `U[-a/sqrt(n), a/sqrt(n)]`, so the
    /// Euclidean norm of the perturbation never exceeds `amplitude`.
    pub fn with_noise(mut self, amplitude: f64, seed: u64) -> Result<Self> {
        if !(amplitude.is_finite() && amplitude >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "noise amplitude must be nonnegative, got {amplitude}"
            )));
        }
        self.noise = if amplitude == 0.0 {
            None
        } else {
            Some(OracleNoise {
                amplitude,
                rng: Mutex::new(ChaCha8Rng::seed_from_u64(seed)),
            })
        };
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.geometry.dim()
    }

    pub fn set(&self) -> &FeasibleSet {
        &self.set
    }

    pub fn geometry(&self) -> &Arc<dyn BregmanGeometry> {
        &self.geometry
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn known_solution(&self) -> Option<&Vector> {
        self.known_solution.as_ref()
    }

    pub fn is_gradient_field(&self) -> bool {
        self.gradient_field
    }

    /// Whether operator evaluations are perturbed.
    pub fn has_noise(&self) -> bool {
        self.noise.is_some()
    }

    /// Number of operator evaluations since construction (or the last reset).
    pub fn oracle_calls(&self) -> u64 {
        self.oracle_calls.load(Ordering::Relaxed)
    }

    pub fn reset_oracle_calls(&self) {
        self.oracle_calls.store(0, Ordering::Relaxed);
    }

    /// Evaluates the operator, counting the call and applying noise if any.
    pub fn eval(&self, x: &Vector) -> Result<Vector> {
        if x.dim() != self.dim() {
            return Err(Error::dim(self.dim(), x.dim(), "operator argument"));
        }
        let g = (self.operator)(x)?;
        if g.dim() != self.dim() {
            return Err(Error::dim(self.dim(), g.dim(), "operator value"));
        }
        self.oracle_calls.fetch_add(1, Ordering::Relaxed);
        match &self.noise {
            None => Ok(g),
            Some(noise) => {
                let bound = noise.amplitude / (self.dim() as f64).sqrt();
                let mut rng = noise.rng.lock().expect("noise generator poisoned");
                let perturbed: Vec<f64> = g
                    .iter()
                    .map(|v| v + rng.gen_range(-bound..=bound))
                    .collect();
                Ok(Vector::from_trusted(perturbed))
            }
        }
    }

    /// `V(y, x)` in this problem's geometry.
    pub fn divergence(&self, y: &Vector, x: &Vector) -> Result<f64> {
        self.geometry.divergence(y, x)
    }
}

/// Outcome of sampling-based monotonicity certification.
#[derive(Debug, Clone)]
pub struct MonotonicityReport {
    pub samples: usize,
    /// Smallest observed `<g(y) - g(x), y - x> - mu (V(y,x) + V(x,y))`.
    pub min_slack: f64,
    /// The pair attaining `min_slack`.
    pub witness: (Vector, Vector),
}

impl MonotonicityReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.min_slack >= -tol
    }
}

/// Samples point pairs from the feasible set and reports the worst violation
/// of relative strong monotonicity with the problem's own `mu`.
pub fn certify_relative_strong_monotonicity(
    problem: &VIProblem,
    samples: usize,
    seed: u64,
) -> Result<MonotonicityReport> {
    if samples == 0 {
        return Err(Error::InvalidArgument("certification needs samples".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_slack = f64::INFINITY;
    let mut witness = None;
    for _ in 0..samples {
        let x = problem.set.sample(&mut rng);
        let y = problem.set.sample(&mut rng);
        let gx = problem.eval(&x)?;
        let gy = problem.eval(&y)?;
        let inner = gy.sub(&gx).dot(&y.sub(&x));
        let vxy = problem.divergence(&y, &x)? + problem.divergence(&x, &y)?;
        let slack = inner - problem.mu * vxy;
        if slack < min_slack {
            min_slack = slack;
            witness = Some((x, y));
        }
    }
    let witness = witness.expect("at least one sampled pair");
    Ok(MonotonicityReport {
        samples,
        min_slack,
        witness,
    })
}

/// Largest sampled ratio `<g(y) - g(z), x - z> / (V(x,z) + V(z,y))`, a lower
/// estimate of the relative smoothness constant.
pub fn estimate_relative_smoothness(
    problem: &VIProblem,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    if samples == 0 {
        return Err(Error::InvalidArgument("estimation needs samples".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: f64 = 0.0;
    for _ in 0..samples {
        let x = problem.set.sample(&mut rng);
        let y = problem.set.sample(&mut rng);
        let z = problem.set.sample(&mut rng);
        let num = problem.eval(&y)?.sub(&problem.eval(&z)?).dot(&x.sub(&z));
        if num <= 0.0 {
            continue;
        }
        let den = problem.divergence(&x, &z)? + problem.divergence(&z, &y)?;
        if den > 1e-12 {
            best = best.max(num / den);
        }
    }
    Ok(best)
}

/// Largest sampled ratio `||g(x) - g(y)|| / ||x - y||` over point pairs: a
/// lower estimate of the Euclidean Lipschitz constant, used to pick step
/// sizes for the classical baseline.
pub fn estimate_euclidean_lipschitz(
    problem: &VIProblem,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    if samples == 0 {
        return Err(Error::InvalidArgument("estimation needs samples".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: f64 = 0.0;
    for _ in 0..samples {
        let x = problem.set.sample(&mut rng);
        let y = problem.set.sample(&mut rng);
        let dx = x.dist2(&y);
        if dx > 1e-12 {
            let dg = problem.eval(&x)?.sub(&problem.eval(&y)?).norm2();
            best = best.max(dg / dx);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::EuclideanGeometry;

    fn identity_problem(dim: usize) -> VIProblem {
        let set = FeasibleSet::ball(Vector::zeros(dim), 2.0).unwrap();
        VIProblem::new(
            Box::new(|x: &Vector| Ok(x.clone())),
            set,
            Arc::new(EuclideanGeometry::new(dim)),
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn eval_counts_calls_and_checks_dims() {
        let p = identity_problem(3);
        assert_eq!(p.oracle_calls(), 0);
        p.eval(&Vector::zeros(3)).unwrap();
        p.eval(&Vector::zeros(3)).unwrap();
        assert_eq!(p.oracle_calls(), 2);
        assert!(p.eval(&Vector::zeros(2)).is_err());
        // A dimension error is not a completed oracle call.
        assert_eq!(p.oracle_calls(), 2);
        p.reset_oracle_calls();
        assert_eq!(p.oracle_calls(), 0);
    }

    #[test]
    fn known_solution_must_be_feasible() {
        let far = Vector::new(vec![10.0, 0.0]).unwrap();
        assert!(identity_problem(2).with_known_solution(far).is_err());
        let ok = Vector::new(vec![0.5, 0.5]).unwrap();
        let p = identity_problem(2).with_known_solution(ok).unwrap();
        assert_eq!(p.known_solution().unwrap()[0], 0.5);
    }

    #[test]
    fn noise_stays_within_amplitude_and_is_seeded() {
        let a = 1e-3;
        let p = identity_problem(4).with_noise(a, 7).unwrap();
        let q = identity_problem(4).with_noise(a, 7).unwrap();
        let x = Vector::new(vec![0.1, -0.2, 0.3, 0.4]).unwrap();
        for _ in 0..50 {
            let gp = p.eval(&x).unwrap();
            let gq = q.eval(&x).unwrap();
            assert_eq!(gp.to_bits(), gq.to_bits());
            let xi = gp.sub(&x);
            assert!(xi.norm2() <= a + 1e-15);
        }
        // A different seed changes the perturbation stream.
        let r = identity_problem(4).with_noise(a, 8).unwrap();
        assert_ne!(r.eval(&x).unwrap().to_bits(), p.eval(&x).unwrap().to_bits());
    }

    #[test]
    fn identity_operator_is_certifiably_monotone() {
        // <y - x, y - x> - 1.0 * ||y - x||^2 = 0 exactly.
        let p = identity_problem(3);
        let report = certify_relative_strong_monotonicity(&p, 200, 0).unwrap();
        assert!(report.holds(1e-9), "min slack {}", report.min_slack);
        assert!(report.min_slack <= 1e-9);
    }

    #[test]
    fn scaled_identity_has_expected_lipschitz_estimate() {
        let set = FeasibleSet::ball(Vector::zeros(2), 1.0).unwrap();
        let p = VIProblem::new(
            Box::new(|x: &Vector| Ok(x.scale(3.0))),
            set,
            Arc::new(EuclideanGeometry::new(2)),
            0.0,
        )
        .unwrap();
        let l = estimate_euclidean_lipschitz(&p, 100, 1).unwrap();
        assert!((l - 3.0).abs() < 1e-9);
        let l_rel = estimate_relative_smoothness(&p, 300, 2).unwrap();
        assert!(l_rel <= 3.0 + 1e-9, "relative estimate {l_rel}");
        assert!(l_rel > 2.0, "relative estimate {l_rel}");
    }
}
