//! Synthetic affine instances `g(x) = M (x - x*)` with a prescribed spectrum,
//! used to compare realized convergence against the theoretical rate.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::geometry::EuclideanGeometry;
use crate::set::FeasibleSet;
use crate::vector::Vector;
use crate::vi::VIProblem;

/// Affine operator with symmetric positive definite matrix whose spectrum
/// lies in `[mu, l]` with both endpoints attained, and a known zero `x*`
/// strictly inside the feasible ball.
#[derive(Debug, Clone)]
pub struct SyntheticInstance {
    m: DMatrix<f64>,
    solution: Vector,
    mu: f64,
    l: f64,
    seed: u64,
    radius: f64,
}

impl SyntheticInstance {
    /// Draws an instance: `x*` uniform on `[-0.5, 0.5]^n`, eigenvalues
    /// log-uniform on `[mu, l]` with the extremes pinned, eigenbasis from a
    /// sign-fixed QR factorization of a Gaussian matrix.
    pub fn generate(n: usize, mu: f64, l: f64, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        if !(mu.is_finite() && l.is_finite() && mu > 0.0 && mu <= l) {
            return Err(Error::InvalidArgument(format!(
                "need 0 < mu <= l, got mu = {mu}, l = {l}"
            )));
        }
        if n == 1 && mu < l {
            return Err(Error::InvalidArgument(
                "a 1-d spectrum cannot attain two distinct endpoints".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let solution =
            Vector::from_trusted((0..n).map(|_| rng.gen_range(-0.5..0.5)).collect());

        let m = if mu == l {
            DMatrix::identity(n, n).scale(mu)
        } else {
            let mut eigenvalues = Vec::with_capacity(n);
            eigenvalues.push(mu);
            let (ln_lo, ln_hi) = (mu.ln(), l.ln());
            for _ in 0..n.saturating_sub(2) {
                eigenvalues.push(rng.gen_range(ln_lo..ln_hi).exp());
            }
            eigenvalues.push(l);
            eigenvalues.sort_by(|a, b| a.partial_cmp(b).expect("finite"));

            let gaussian =
                DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
            let qr = gaussian.qr();
            let r = qr.r();
            let mut q = qr.q();
            // Fix the factorization's sign ambiguity so the basis depends
            // only on the Gaussian draw.
            for k in 0..n {
                if r[(k, k)] < 0.0 {
                    for i in 0..n {
                        q[(i, k)] = -q[(i, k)];
                    }
                }
            }
            let lambda = DMatrix::from_diagonal(&DVector::from_vec(eigenvalues));
            let raw = &q * lambda * q.transpose();
            0.5 * (&raw + raw.transpose())
        };

        let spectrum = m.clone().symmetric_eigen().eigenvalues;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in spectrum.iter() {
            lo = lo.min(*v);
            hi = hi.max(*v);
        }
        if lo < mu - 1e-9 || hi > l + 1e-9 {
            return Err(Error::Numeric(format!(
                "spectrum [{lo}, {hi}] escaped the target range [{mu}, {l}]"
            )));
        }

        let radius = 2.0 * solution.norm2() + 1.0;
        Ok(SyntheticInstance {
            m,
            solution,
            mu,
            l,
            seed,
            radius,
        })
    }

    pub fn dim(&self) -> usize {
        self.solution.dim()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn solution(&self) -> &Vector {
        &self.solution
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Largest eigenvalue target; the operator's smoothness constant.
    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Ball centered at the origin containing `x*` strictly.
    pub fn set(&self) -> FeasibleSet {
        FeasibleSet::ball(Vector::zeros(self.dim()), self.radius).expect("radius >= 1")
    }

    pub fn operator_value(&self, x: &Vector) -> Result<Vector> {
        if x.dim() != self.dim() {
            return Err(Error::dim(self.dim(), x.dim(), "affine operator argument"));
        }
        let shifted = x.sub(&self.solution);
        Vector::from_dvector(&(&self.m * shifted.to_dvector()))
    }

    /// Assembles the problem under the half-squared-distance geometry, with
    /// the zero of the operator recorded as the known solution. The matrix is
    /// symmetric, so the operator is also exposed as a gradient field.
    pub fn problem(&self) -> Result<VIProblem> {
        let inst = self.clone();
        let operator = Box::new(move |x: &Vector| inst.operator_value(x));
        let geometry = Arc::new(EuclideanGeometry::new(self.dim()));
        VIProblem::new(operator, self.set(), geometry, self.mu)?
            .with_known_solution(self.solution.clone())
            .map(VIProblem::as_gradient_field)
    }

    /// Rebuilds an instance from stored parts (archive load path).
    pub(crate) fn from_parts(
        m: DMatrix<f64>,
        solution: Vector,
        mu: f64,
        l: f64,
        seed: u64,
    ) -> Result<Self> {
        let n = solution.dim();
        if m.nrows() != n || m.ncols() != n || n == 0 {
            return Err(Error::InvalidArgument(format!(
                "matrix {}x{} does not match solution dimension {n}",
                m.nrows(),
                m.ncols()
            )));
        }
        if !(mu.is_finite() && l.is_finite() && mu > 0.0 && mu <= l) {
            return Err(Error::InvalidArgument(format!(
                "need 0 < mu <= l, got mu = {mu}, l = {l}"
            )));
        }
        let radius = 2.0 * solution.norm2() + 1.0;
        Ok(SyntheticInstance {
            m,
            solution,
            mu,
            l,
            seed,
            radius,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vi::certify_relative_strong_monotonicity;

    #[test]
    fn spectrum_attains_both_endpoints() {
        let inst = SyntheticInstance::generate(20, 1.0, 10.0, 0).unwrap();
        let eig = inst.matrix().clone().symmetric_eigen().eigenvalues;
        let lo = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!((lo - 1.0).abs() < 1e-9, "smallest eigenvalue {lo}");
        assert!((hi - 10.0).abs() < 1e-9, "largest eigenvalue {hi}");
    }

    #[test]
    fn generation_is_deterministic_per_seed() {
        let a = SyntheticInstance::generate(8, 0.5, 4.0, 42).unwrap();
        let b = SyntheticInstance::generate(8, 0.5, 4.0, 42).unwrap();
        assert_eq!(a.matrix(), b.matrix());
        assert_eq!(a.solution().to_bits(), b.solution().to_bits());
        let c = SyntheticInstance::generate(8, 0.5, 4.0, 43).unwrap();
        assert_ne!(a.solution().to_bits(), c.solution().to_bits());
    }

    #[test]
    fn solution_is_a_strictly_interior_zero() {
        let inst = SyntheticInstance::generate(12, 1.0, 10.0, 3).unwrap();
        assert!(inst.solution().norm2() < inst.radius());
        let g = inst.operator_value(inst.solution()).unwrap();
        assert_eq!(g.norm2(), 0.0);
        assert!(inst.set().contains(inst.solution()));
    }

    #[test]
    fn equal_moduli_give_a_scaled_identity() {
        let inst = SyntheticInstance::generate(5, 2.0, 2.0, 0).unwrap();
        assert_eq!(inst.matrix(), &DMatrix::identity(5, 5).scale(2.0));
    }

    #[test]
    fn invalid_ranges_are_rejected() {
        assert!(SyntheticInstance::generate(4, 0.0, 1.0, 0).is_err());
        assert!(SyntheticInstance::generate(4, 2.0, 1.0, 0).is_err());
        assert!(SyntheticInstance::generate(0, 1.0, 2.0, 0).is_err());
        assert!(SyntheticInstance::generate(1, 1.0, 2.0, 0).is_err());
        assert!(SyntheticInstance::generate(1, 2.0, 2.0, 0).is_ok());
    }

    #[test]
    fn problem_certifies_strong_monotonicity() {
        let inst = SyntheticInstance::generate(10, 1.0, 10.0, 7).unwrap();
        let problem = inst.problem().unwrap();
        assert!(problem.is_gradient_field());
        assert_eq!(problem.known_solution().unwrap().to_bits(), inst.solution().to_bits());
        let report = certify_relative_strong_monotonicity(&problem, 300, 5).unwrap();
        assert!(report.holds(1e-8), "min slack {}", report.min_slack);
    }

    #[test]
    fn lipschitz_estimate_respects_the_spectral_bound() {
        let inst = SyntheticInstance::generate(10, 1.0, 10.0, 1).unwrap();
        let problem = inst.problem().unwrap();
        let est = crate::vi::estimate_euclidean_lipschitz(&problem, 300, 2).unwrap();
        assert!(est <= 10.0 + 1e-9, "estimate {est}");
        assert!(est > 5.0, "estimate {est} implausibly small");
    }
}
