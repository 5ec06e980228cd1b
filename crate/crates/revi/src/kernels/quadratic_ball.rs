//! Weighted prox steps for quadratic-form distance generators over a
//! Euclidean ball, solved through the ball constraint's dual variable.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::vector::Vector;

use super::entropy::check_anchors;

/// Residual target for the dual bisection on the ball multiplier.
const DUAL_TOL: f64 = 1e-12;

/// Prox solver for `d(x) = x' H x / 2 (+ linear part)` over a ball. The linear
/// part of `d` cancels inside the divergence, so only `H` matters here.
#[derive(Debug, Clone)]
pub struct QuadraticFormBallKernel {
    h: DMatrix<f64>,
    eigvecs: DMatrix<f64>,
    eigvals: DVector<f64>,
}

/// Prox output together with the ball multiplier, so callers can audit
/// complementary slackness.
#[derive(Debug, Clone)]
pub struct QuadraticBallProx {
    pub point: Vector,
    /// Multiplier of the constraint `||x - center||^2 / 2 <= radius^2 / 2` in
    /// the KKT system of the original (unnormalized) objective.
    pub multiplier: f64,
}

impl QuadraticFormBallKernel {
    /// `h` must be symmetric positive definite; definiteness is certified by a
    /// Cholesky factorization at construction.
    pub fn new(h: DMatrix<f64>) -> Result<Self> {
        if h.nrows() != h.ncols() || h.nrows() == 0 {
            return Err(Error::InvalidArgument(format!(
                "quadratic kernel needs a square nonempty matrix, got {}x{}",
                h.nrows(),
                h.ncols()
            )));
        }
        let scale = h.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        for i in 0..h.nrows() {
            for j in 0..i {
                if (h[(i, j)] - h[(j, i)]).abs() > 1e-10 * scale {
                    return Err(Error::InvalidArgument(
                        "quadratic kernel matrix is not symmetric".into(),
                    ));
                }
            }
        }
        if Cholesky::new(h.clone()).is_none() {
            return Err(Error::InvalidArgument(
                "quadratic kernel matrix is not positive definite".into(),
            ));
        }
        let eig = SymmetricEigen::new(h.clone());
        if eig.eigenvalues.iter().any(|l| *l <= 0.0) {
            return Err(Error::Numeric(
                "eigendecomposition lost positive definiteness".into(),
            ));
        }
        Ok(QuadraticFormBallKernel {
            h,
            eigvecs: eig.eigenvectors,
            eigvals: eig.eigenvalues,
        })
    }

    pub fn dim(&self) -> usize {
        self.h.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn smallest_eigenvalue(&self) -> f64 {
        self.eigvals.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn largest_eigenvalue(&self) -> f64 {
        self.eigvals.iter().copied().fold(0.0, f64::max)
    }

    /// Minimizes `<linear, x> + sum_k w_k (x - x_k)' H (x - x_k) / 2` over
    /// `||x - center|| <= radius`.
    ///
    /// Dividing by the total weight `W` and writing `xbar` for the weighted
    /// anchor mean, stationarity with ball multiplier `nu` reads
    /// `(H + nu I) x = H xbar - linear / W + nu center`. In the eigenbasis of
    /// `H` the constrained norm `||x(nu) - center||` is strictly decreasing in
    /// `nu`, so the active case is solved by doubling a bracket until the norm
    /// drops below the radius and then bisecting the bracket down to the
    /// residual tolerance.
    pub fn prox(
        &self,
        center: &Vector,
        radius: f64,
        linear: &Vector,
        anchors: &[(f64, &Vector)],
    ) -> Result<QuadraticBallProx> {
        let n = self.dim();
        if center.dim() != n {
            return Err(Error::dim(n, center.dim(), "ball center"));
        }
        if linear.dim() != n {
            return Err(Error::dim(n, linear.dim(), "quadratic prox linear term"));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidArgument(format!("ball radius {radius}")));
        }
        let total_weight = check_anchors(n, anchors)?;

        let mut xbar = DVector::zeros(n);
        for (w, x) in anchors {
            xbar += x.to_dvector() * (*w / total_weight);
        }
        let rhs = &self.h * &xbar - linear.to_dvector() / total_weight;

        // Work in the eigenbasis: x(nu) - center has components
        // (beta_i - lambda_i c_i) / (lambda_i + nu).
        let beta = self.eigvecs.transpose() * &rhs;
        let c_hat = self.eigvecs.transpose() * center.to_dvector();
        let numer: Vec<f64> = (0..n)
            .map(|i| beta[i] - self.eigvals[i] * c_hat[i])
            .collect();
        let dist = |nu: f64| -> f64 {
            numer
                .iter()
                .zip(self.eigvals.iter())
                .map(|(num, l)| {
                    let t = num / (l + nu);
                    t * t
                })
                .sum::<f64>()
                .sqrt()
        };

        let assemble = |nu: f64| -> Result<Vector> {
            let mut x_hat = DVector::zeros(n);
            for i in 0..n {
                x_hat[i] = (beta[i] + nu * c_hat[i]) / (self.eigvals[i] + nu);
            }
            Vector::from_dvector(&(&self.eigvecs * x_hat))
        };

        if dist(0.0) <= radius {
            return Ok(QuadraticBallProx {
                point: assemble(0.0)?,
                multiplier: 0.0,
            });
        }

        let mut hi = self.largest_eigenvalue().max(1.0);
        let mut lo = 0.0;
        let mut doubles = 0;
        while dist(hi) > radius {
            lo = hi;
            hi *= 2.0;
            doubles += 1;
            if doubles > 2000 {
                return Err(Error::SubsolverDivergence {
                    what: "ball multiplier bracket",
                    residual: dist(hi) - radius,
                    iterations: doubles,
                });
            }
        }
        let mut nu = hi;
        for _ in 0..500 {
            nu = 0.5 * (lo + hi);
            let d = dist(nu);
            if (d - radius).abs() <= DUAL_TOL * radius.max(1.0) {
                break;
            }
            if d > radius {
                lo = nu;
            } else {
                hi = nu;
            }
        }

        Ok(QuadraticBallProx {
            point: assemble(nu)?,
            multiplier: nu * total_weight,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_kernel(n: usize) -> QuadraticFormBallKernel {
        QuadraticFormBallKernel::new(DMatrix::identity(n, n)).unwrap()
    }

    #[test]
    fn unconstrained_case_matches_closed_form() {
        // Huge radius: minimizer is xbar - H^{-1} linear / W.
        let kernel = identity_kernel(2);
        let anchor = Vector::new(vec![0.3, -0.2]).unwrap();
        let linear = Vector::new(vec![0.5, 1.0]).unwrap();
        let out = kernel
            .prox(&Vector::zeros(2), 1e9, &linear, &[(2.0, &anchor)])
            .unwrap();
        assert!((out.point[0] - (0.3 - 0.25)).abs() < 1e-12);
        assert!((out.point[1] - (-0.2 - 0.5)).abs() < 1e-12);
        assert_eq!(out.multiplier, 0.0);
    }

    #[test]
    fn identity_case_reduces_to_ball_projection() {
        // H = I, anchor 0, linear (-3, 0): unconstrained x = (3, 0), projects to (1, 0).
        let kernel = identity_kernel(2);
        let anchor = Vector::zeros(2);
        let linear = Vector::new(vec![-3.0, 0.0]).unwrap();
        let out = kernel
            .prox(&Vector::zeros(2), 1.0, &linear, &[(1.0, &anchor)])
            .unwrap();
        assert!((out.point[0] - 1.0).abs() < 1e-9, "{:?}", out.point);
        assert!(out.point[1].abs() < 1e-9);
        assert!(out.multiplier > 0.0);
    }

    #[test]
    fn complementary_slackness_holds() {
        let h = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.0, 0.3, 1.5, -0.2, 0.0, -0.2, 1.0]);
        let kernel = QuadraticFormBallKernel::new(h).unwrap();
        let center = Vector::new(vec![0.1, 0.0, -0.1]).unwrap();
        let anchor = Vector::new(vec![2.0, -1.0, 1.5]).unwrap();
        let linear = Vector::new(vec![-1.0, 0.7, 0.4]).unwrap();
        let out = kernel
            .prox(&center, 0.8, &linear, &[(1.3, &anchor)])
            .unwrap();
        let gap = 0.8 - out.point.dist2(&center);
        assert!(out.multiplier * gap.abs() <= 1e-8, "nu {} gap {}", out.multiplier, gap);
        assert!(out.point.dist2(&center) <= 0.8 + 1e-9);
    }

    #[test]
    fn active_constraint_satisfies_kkt() {
        let h = DMatrix::from_row_slice(2, 2, &[3.0, 0.5, 0.5, 1.0]);
        let kernel = QuadraticFormBallKernel::new(h.clone()).unwrap();
        let anchor = Vector::new(vec![4.0, 4.0]).unwrap();
        let linear = Vector::new(vec![0.3, -0.1]).unwrap();
        let anchors = [(0.9, &anchor)];
        let out = kernel.prox(&Vector::zeros(2), 1.0, &linear, &anchors).unwrap();
        // KKT: linear + W H (x - anchor-mean ... ) + nu (x - c) = 0 with the
        // anchor mix folded in; check the assembled gradient directly.
        let x = out.point.to_dvector();
        let mut grad = linear.to_dvector();
        for (w, a) in &anchors {
            grad += &h * (x.clone() - a.to_dvector()) * *w;
        }
        grad += x * out.multiplier;
        assert!(grad.norm() < 1e-6, "KKT residual {}", grad.norm());
    }

    #[test]
    fn rejects_indefinite_or_asymmetric_matrices() {
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, -0.5, 1.0]);
        assert!(QuadraticFormBallKernel::new(asym).is_err());
        let indef = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(QuadraticFormBallKernel::new(indef).is_err());
    }
}
