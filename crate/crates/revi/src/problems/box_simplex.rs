//! Box-simplex matrix games: bilinear saddle problems over the product of
//! an infinity-norm box and the probability simplex, turned into strongly
//! monotone variational inequalities by a small prox-gradient regularizer.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::BoxSimplexGeometry;
use crate::kernels::BoxSimplexKernel;
use crate::set::FeasibleSet;
use crate::vector::Vector;
use crate::vi::VIProblem;

/// Mixes the data seed into an independent stream for the shared starting
/// point, so the initial iterate is decoupled from the instance draw.
const INITIAL_POINT_STREAM: u64 = 0x9E37_79B9_7F4A_7C15;

/// The saddle problem `min_{y in [-1,1]^n} max_{z in simplex} z'Ay - <b,z>
/// + <c,y>` with regularization weights for each block.
#[derive(Debug, Clone)]
pub struct BoxSimplexInstance {
    a: DMatrix<f64>,
    b: Vector,
    c: Vector,
    mu_y: f64,
    mu_z: f64,
    seed: u64,
    scale: f64,
}

impl BoxSimplexInstance {
    /// Draws an instance: `A = B B'` with `B` uniform on `[0, 0.001]`, and
    /// `b`, `c` uniform on `[0, 1]`.
    pub fn generate(n: usize, mu_y: f64, mu_z: f64, seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!(
                "game generation needs n >= 2, got {n}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b_factor =
            DMatrix::from_fn(n, n, |_, _| rng.gen_range(0.0..0.001));
        let mut a = &b_factor * b_factor.transpose();
        // B B' is symmetric in exact arithmetic; enforce it bitwise.
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (a[(i, j)] + a[(j, i)]);
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
        }
        let payoff_b = Vector::from_trusted((0..n).map(|_| rng.gen_range(0.0..1.0)).collect());
        let payoff_c = Vector::from_trusted((0..n).map(|_| rng.gen_range(0.0..1.0)).collect());
        Self::from_parts(a, payoff_b, payoff_c, mu_y, mu_z, seed)
    }

    /// Builds an instance from explicit data, validating shape, symmetry,
    /// and positive semidefiniteness.
    pub fn from_parts(
        a: DMatrix<f64>,
        b: Vector,
        c: Vector,
        mu_y: f64,
        mu_z: f64,
        seed: u64,
    ) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || n == 0 {
            return Err(Error::InvalidArgument(format!(
                "game matrix must be square and nonempty, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.dim() != n || c.dim() != n {
            return Err(Error::dim(n, b.dim().min(c.dim()), "game payoff vectors"));
        }
        let mut magnitude: f64 = 0.0;
        for v in a.iter() {
            if !v.is_finite() {
                return Err(Error::InvalidArgument("game matrix has non-finite entries".into()));
            }
            magnitude = magnitude.max(v.abs());
        }
        for i in 0..n {
            for j in 0..n {
                if (a[(i, j)] - a[(j, i)]).abs() > 1e-12 * magnitude.max(1.0) {
                    return Err(Error::InvalidArgument(format!(
                        "game matrix asymmetric at ({i},{j})"
                    )));
                }
            }
        }
        let shifted = a.clone() + DMatrix::identity(n, n).scale(1e-12);
        if nalgebra::Cholesky::new(shifted).is_none() {
            return Err(Error::InvalidArgument(
                "game matrix is not positive semidefinite".into(),
            ));
        }
        for (name, m) in [("mu_y", mu_y), ("mu_z", mu_z)] {
            if !(m.is_finite() && m > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be positive, got {m}"
                )));
            }
        }
        let abs_inf = (0..n)
            .map(|i| (0..n).map(|j| a[(i, j)].abs()).sum::<f64>())
            .fold(0.0_f64, f64::max);
        let scale = if abs_inf > 0.0 { 10.0 * abs_inf } else { 1.0 };
        Ok(BoxSimplexInstance {
            a,
            b,
            c,
            mu_y,
            mu_z,
            seed,
            scale,
        })
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn payoff_b(&self) -> &Vector {
        &self.b
    }

    pub fn payoff_c(&self) -> &Vector {
        &self.c
    }

    pub fn mu_y(&self) -> f64 {
        self.mu_y
    }

    pub fn mu_z(&self) -> f64 {
        self.mu_z
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Entropy-block weight of the distance generator.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn kernel(&self) -> Result<BoxSimplexKernel> {
        BoxSimplexKernel::new(self.a.abs(), Some(self.scale))
    }

    /// `[-1, 1]^n x simplex(n)`.
    pub fn set(&self) -> FeasibleSet {
        let n = self.n();
        FeasibleSet::product(vec![
            FeasibleSet::symmetric_unit_box(n),
            FeasibleSet::simplex(n).expect("n >= 1"),
        ])
        .expect("dimensions agree")
    }

    /// The saddle objective `f(y, z) = z'Ay - <b, z> + <c, y>`.
    pub fn saddle_value(&self, y: &[f64], z: &[f64]) -> f64 {
        let n = self.n();
        let mut v = 0.0;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += self.a[(i, j)] * y[j];
            }
            v += z[i] * (row - self.b[i]);
        }
        for j in 0..n {
            v += self.c[j] * y[j];
        }
        v
    }

    /// The unregularized saddle operator `(A'z + c, b - Ay)`: monotone but
    /// not strongly so.
    pub fn monotone_core(&self, x: &Vector) -> Result<Vector> {
        let n = self.n();
        if x.dim() != 2 * n {
            return Err(Error::dim(2 * n, x.dim(), "game operator argument"));
        }
        let (y, z) = x.split_at(n);
        let mut out = vec![0.0; 2 * n];
        for j in 0..n {
            let mut at_z = 0.0;
            for i in 0..n {
                at_z += self.a[(i, j)] * z[i];
            }
            out[j] = at_z + self.c[j];
        }
        for i in 0..n {
            let mut ay = 0.0;
            for j in 0..n {
                ay += self.a[(i, j)] * y[j];
            }
            out[n + i] = self.b[i] - ay;
        }
        Ok(Vector::from_trusted(out))
    }

    fn regularized_operator(
        &self,
        kernel: &BoxSimplexKernel,
        set: &FeasibleSet,
        x: &Vector,
    ) -> Result<Vector> {
        if !set.contains(x) {
            return Err(Error::InvalidArgument(
                "game operator argument is infeasible".into(),
            ));
        }
        let n = self.n();
        let core = self.monotone_core(x)?;
        let (y, z) = x.split_at(n);
        let (gy, gz) = kernel.gradient(y, z);
        let mut out = core.into_vec();
        for j in 0..n {
            out[j] += self.mu_y * gy[j];
        }
        for i in 0..n {
            out[n + i] += self.mu_z * gz[i];
        }
        Ok(Vector::from_trusted(out))
    }

    /// Evaluates the regularized operator at a feasible point.
    pub fn operator_value(&self, x: &Vector) -> Result<Vector> {
        self.regularized_operator(&self.kernel()?, &self.set(), x)
    }

    /// Shared starting point: components uniform on `[0, 1]`, with the
    /// simplex block normalized to sum one.
    pub fn initial_point(&self) -> Vector {
        let n = self.n();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ INITIAL_POINT_STREAM);
        let mut v: Vec<f64> = (0..2 * n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let total: f64 = v[n..].iter().sum();
        for z in &mut v[n..] {
            *z /= total;
        }
        Vector::from_trusted(v)
    }

    /// Assembles the variational-inequality problem: regularized operator,
    /// coupled geometry, modulus `min(mu_y, mu_z)`.
    pub fn problem(&self) -> Result<VIProblem> {
        let kernel = self.kernel()?;
        let geometry = Arc::new(BoxSimplexGeometry::from_kernel(self.kernel()?));
        let set = self.set();
        let inst = self.clone();
        let op_set = self.set();
        let operator = Box::new(move |x: &Vector| inst.regularized_operator(&kernel, &op_set, x));
        VIProblem::new(operator, set, geometry, self.mu_y.min(self.mu_z))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic_and_psd() {
        let a = BoxSimplexInstance::generate(6, 1e-2, 1e-2, 3).unwrap();
        let b = BoxSimplexInstance::generate(6, 1e-2, 1e-2, 3).unwrap();
        assert_eq!(a.matrix(), b.matrix());
        assert_eq!(a.payoff_b().to_bits(), b.payoff_b().to_bits());
        let other = BoxSimplexInstance::generate(6, 1e-2, 1e-2, 4).unwrap();
        assert_ne!(a.payoff_b().to_bits(), other.payoff_b().to_bits());
        // Entries of B B' with B in [0, 0.001] are small and nonnegative.
        assert!(a.matrix().iter().all(|v| (0.0..1e-3).contains(v)));
    }

    #[test]
    fn zero_regularization_reduces_to_the_monotone_core() {
        let inst = BoxSimplexInstance::generate(4, 1e-2, 1e-2, 0).unwrap();
        let x = inst.initial_point();
        let core = inst.monotone_core(&x).unwrap();
        let full = inst.operator_value(&x).unwrap();
        let n = inst.n();
        let kernel = inst.kernel().unwrap();
        let (y, z) = x.split_at(n);
        let (gy, gz) = kernel.gradient(y, z);
        for j in 0..n {
            let expected = core[j] + 1e-2 * gy[j];
            assert!((full[j] - expected).abs() < 1e-14);
        }
        for i in 0..n {
            let expected = core[n + i] + 1e-2 * gz[i];
            assert!((full[n + i] - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn operator_rejects_infeasible_points() {
        let inst = BoxSimplexInstance::generate(3, 1e-2, 1e-2, 1).unwrap();
        let mut bad = inst.initial_point().into_vec();
        bad[0] = 4.0;
        assert!(inst.operator_value(&Vector::from_trusted(bad)).is_err());
    }

    #[test]
    fn initial_point_is_feasible_and_shared() {
        let inst = BoxSimplexInstance::generate(5, 1e-2, 1e-6, 9).unwrap();
        let x0 = inst.initial_point();
        assert!(inst.set().contains(&x0));
        assert_eq!(x0.to_bits(), inst.initial_point().to_bits());
        // y components are drawn from [0, 1], strictly inside the box.
        assert!(x0.as_slice()[..5].iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn monotone_core_is_skew_adjoint_on_pairs() {
        // <core(u) - core(v), u - v> = 0 exactly for the bilinear part.
        let inst = BoxSimplexInstance::generate(4, 1e-2, 1e-2, 7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let set = inst.set();
        for _ in 0..100 {
            let u = set.sample(&mut rng);
            let v = set.sample(&mut rng);
            let du = inst.monotone_core(&u).unwrap();
            let dv = inst.monotone_core(&v).unwrap();
            let inner = du.sub(&dv).dot(&u.sub(&v));
            assert!(inner.abs() < 1e-10, "skew inner product {inner}");
        }
    }

    #[test]
    fn problem_mu_is_the_smaller_weight() {
        let inst = BoxSimplexInstance::generate(3, 1e-6, 1e-2, 0).unwrap();
        let p = inst.problem().unwrap();
        assert_eq!(p.mu(), 1e-6);
        assert_eq!(p.dim(), 6);
    }

    #[test]
    fn zero_matrix_instance_is_accepted() {
        let n = 3;
        let inst = BoxSimplexInstance::from_parts(
            DMatrix::zeros(n, n),
            Vector::zeros(n),
            Vector::zeros(n),
            1e-2,
            1e-2,
            0,
        )
        .unwrap();
        assert_eq!(inst.scale(), 1.0);
        let x = inst.initial_point();
        let g = inst.operator_value(&x).unwrap();
        assert!(g.iter().all(|v| v.is_finite()));
    }
}
