//! Coupled prox steps for the matrix-game distance generator
//! `d(y, z) = z' |A| y^2 + s * sum_i z_i ln z_i` over box x simplex.
//!
//! Neither block alone is separable from the other, but each block has a
//! closed-form minimizer with the other fixed: the y block is a diagonally
//! weighted quadratic over the box and the z block is an entropy prox whose
//! effective linear term absorbs the coupling `|A| y^2`. Alternating those
//! exact block solves minimizes the joint objective, which is convex on the
//! domain because the entropy scale dominates the coupling.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::vector::Vector;

use super::entropy::{check_anchors, entropy_prox_into, ENTROPY_FLOOR};

/// Alternating block minimizer for the coupled geometry.
#[derive(Debug, Clone)]
pub struct BoxSimplexKernel {
    abs_a: DMatrix<f64>,
    inf_norm: f64,
    scale: f64,
    max_sweeps: usize,
    tol: f64,
}

/// Output of a coupled prox solve.
#[derive(Debug, Clone)]
pub struct BoxSimplexProx {
    pub point: Vector,
    /// Block sweeps performed (one sweep = one y update plus one z update).
    pub sweeps: usize,
    /// Last inter-sweep movement in the max norm.
    pub movement: f64,
}

impl BoxSimplexKernel {
    /// `abs_a` holds the entrywise absolute values of the coupling matrix.
    /// `scale` defaults to `10 * ||A||_inf`; a zero matrix falls back to scale
    /// 1 so the entropy block stays well posed.
    pub fn new(abs_a: DMatrix<f64>, scale: Option<f64>) -> Result<Self> {
        if abs_a.nrows() != abs_a.ncols() || abs_a.nrows() == 0 {
            return Err(Error::InvalidArgument(format!(
                "coupling matrix must be square and nonempty, got {}x{}",
                abs_a.nrows(),
                abs_a.ncols()
            )));
        }
        if abs_a.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidArgument(
                "absolute coupling matrix must have finite nonnegative entries".into(),
            ));
        }
        let inf_norm = (0..abs_a.nrows())
            .map(|i| abs_a.row(i).iter().sum::<f64>())
            .fold(0.0f64, f64::max);
        let scale = match scale {
            Some(s) if s.is_finite() && s > 0.0 => s,
            Some(s) => {
                return Err(Error::InvalidArgument(format!(
                    "entropy scale must be positive, got {s}"
                )))
            }
            None if inf_norm > 0.0 => 10.0 * inf_norm,
            None => 1.0,
        };
        Ok(BoxSimplexKernel {
            abs_a,
            inf_norm,
            scale,
            max_sweeps: 200,
            tol: 1e-10,
        })
    }

    pub fn n(&self) -> usize {
        self.abs_a.nrows()
    }

    pub fn inf_norm(&self) -> f64 {
        self.inf_norm
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn abs_matrix(&self) -> &DMatrix<f64> {
        &self.abs_a
    }

    /// `theta(z) = |A|' z`, the diagonal y-block curvature induced by `z`.
    pub fn theta(&self, z: &[f64]) -> DVector<f64> {
        self.abs_a.tr_mul(&DVector::from_column_slice(z))
    }

    /// `q(y) = |A| y^2`, the z-block linear coupling induced by `y`.
    pub fn coupling(&self, y: &[f64]) -> DVector<f64> {
        let y2 = DVector::from_iterator(y.len(), y.iter().map(|v| v * v));
        &self.abs_a * y2
    }

    /// `d(y, z)` with the `0 ln 0 = 0` convention.
    pub fn value(&self, y: &[f64], z: &[f64]) -> f64 {
        let q = self.coupling(y);
        let mut v = 0.0;
        for (zi, qi) in z.iter().zip(q.iter()) {
            v += zi * qi;
            if *zi > 0.0 {
                v += self.scale * zi * zi.ln();
            }
        }
        v
    }

    /// `(grad_y d, grad_z d)`; z coordinates are floored before logarithms.
    pub fn gradient(&self, y: &[f64], z: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let theta = self.theta(z);
        let grad_y: Vec<f64> = y
            .iter()
            .zip(theta.iter())
            .map(|(yj, t)| 2.0 * yj * t)
            .collect();
        let q = self.coupling(y);
        let grad_z: Vec<f64> = z
            .iter()
            .zip(q.iter())
            .map(|(zi, qi)| qi + self.scale * (zi.max(ENTROPY_FLOOR).ln() + 1.0))
            .collect();
        (grad_y, grad_z)
    }

    /// Minimizes `<linear, x> + sum_k w_k V(x, x_k)` over box x simplex by
    /// alternating exact block solves.
    ///
    /// Per sweep, with `theta = |A|' z_current` and anchor curvatures
    /// `theta_k = |A|' z_k`, the y block solves
    /// `2 W theta_j y_j = 2 sum_k w_k theta_{k,j} y_{k,j} - linear_j`
    /// clipped to the box (a zero `theta_j` is regularized by adding 1e-12),
    /// and the z block is an entropy prox whose linear term carries
    /// `W |A| y^2 - sum_k w_k |A| y_k^2`. Sweeps stop when the max-norm
    /// movement drops below the kernel tolerance.
    pub fn prox(
        &self,
        lower: &[f64],
        upper: &[f64],
        linear: &Vector,
        anchors: &[(f64, &Vector)],
    ) -> Result<BoxSimplexProx> {
        self.prox_impl(lower, upper, linear, anchors, None)
    }

    /// Same solve, additionally recording the prox objective after every
    /// sweep (the alternating exact block solves make it non-increasing).
    pub fn prox_with_trace(
        &self,
        lower: &[f64],
        upper: &[f64],
        linear: &Vector,
        anchors: &[(f64, &Vector)],
    ) -> Result<(BoxSimplexProx, Vec<f64>)> {
        let mut trace = Vec::new();
        let out = self.prox_impl(lower, upper, linear, anchors, Some(&mut trace))?;
        Ok((out, trace))
    }

    fn prox_impl(
        &self,
        lower: &[f64],
        upper: &[f64],
        linear: &Vector,
        anchors: &[(f64, &Vector)],
        mut trace: Option<&mut Vec<f64>>,
    ) -> Result<BoxSimplexProx> {
        let n = self.n();
        let dim = 2 * n;
        if linear.dim() != dim {
            return Err(Error::dim(dim, linear.dim(), "coupled prox linear term"));
        }
        if lower.len() != n || upper.len() != n {
            return Err(Error::dim(n, lower.len().min(upper.len()), "coupled box bounds"));
        }
        let total_weight = check_anchors(dim, anchors)?;
        let (l_y, l_z) = linear.split_at(n);

        // Anchor-side constants, fixed across sweeps.
        let mut num_y = vec![0.0; n];
        let mut anchor_q = vec![0.0; n];
        let mut z_anchors: Vec<(f64, &[f64])> = Vec::with_capacity(anchors.len());
        for (w, x) in anchors {
            let (y_k, z_k) = x.split_at(n);
            let theta_k = self.theta(z_k);
            for j in 0..n {
                num_y[j] += w * theta_k[j] * y_k[j];
            }
            let q_k = self.coupling(y_k);
            for i in 0..n {
                anchor_q[i] += w * q_k[i];
            }
            z_anchors.push((*w, z_k));
        }

        // Start from the heaviest anchor (first on ties).
        let start = anchors
            .iter()
            .enumerate()
            .max_by(|(i, (wa, _)), (j, (wb, _))| {
                wa.partial_cmp(wb)
                    .expect("finite weights")
                    .then(j.cmp(i))
            })
            .map(|(_, (_, x))| *x)
            .expect("nonempty anchors");
        let (y0, z0) = start.split_at(n);
        let mut y = y0.to_vec();
        let mut z = z0.to_vec();
        let mut z_next = vec![0.0; n];
        let mut movement = f64::INFINITY;
        let mut sweeps = 0;

        while sweeps < self.max_sweeps {
            sweeps += 1;
            movement = 0.0;

            let theta = self.theta(&z);
            for j in 0..n {
                let theta_eff = if theta[j] == 0.0 { 1e-12 } else { theta[j] };
                let cand = (2.0 * num_y[j] - l_y[j]) / (2.0 * total_weight * theta_eff);
                let clipped = cand.clamp(lower[j], upper[j]);
                movement = movement.max((clipped - y[j]).abs());
                y[j] = clipped;
            }

            let q = self.coupling(&y);
            let l_tilde: Vec<f64> = (0..n)
                .map(|i| l_z[i] + total_weight * q[i] - anchor_q[i])
                .collect();
            entropy_prox_into(self.scale, &l_tilde, &z_anchors, total_weight, &mut z_next)?;
            for i in 0..n {
                movement = movement.max((z_next[i] - z[i]).abs());
                z[i] = z_next[i];
            }

            if let Some(values) = trace.as_deref_mut() {
                let mut stacked = y.clone();
                stacked.extend_from_slice(&z);
                values.push(self.prox_objective(linear, anchors, &Vector::new(stacked)?));
            }

            if movement < self.tol {
                break;
            }
        }

        if movement >= 100.0 * self.tol {
            return Err(Error::SubsolverDivergence {
                what: "box-simplex block sweeps",
                residual: movement,
                iterations: sweeps,
            });
        }

        let mut point = y;
        point.extend_from_slice(&z);
        Ok(BoxSimplexProx {
            point: Vector::new(point)?,
            sweeps,
            movement,
        })
    }

    /// Bregman divergence of the coupled generator, for objective audits.
    pub fn divergence(&self, to: &Vector, from: &Vector) -> f64 {
        let n = self.n();
        let (ty, tz) = to.split_at(n);
        let (fy, fz) = from.split_at(n);
        let (gy, gz) = self.gradient(fy, fz);
        let mut v = self.value(ty, tz) - self.value(fy, fz);
        for j in 0..n {
            v -= gy[j] * (ty[j] - fy[j]);
        }
        for i in 0..n {
            v -= gz[i] * (tz[i] - fz[i]);
        }
        v
    }

    /// The prox objective `<linear, x> + sum_k w_k V(x, x_k)`, for sweep
    /// monotonicity and oracle comparisons.
    pub fn prox_objective(
        &self,
        linear: &Vector,
        anchors: &[(f64, &Vector)],
        point: &Vector,
    ) -> f64 {
        let mut obj = linear.dot(point);
        for (w, x) in anchors {
            obj += w * self.divergence(point, x);
        }
        obj
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_kernel() -> BoxSimplexKernel {
        let abs_a = DMatrix::from_row_slice(2, 2, &[0.4, 0.9, 0.7, 0.2]);
        BoxSimplexKernel::new(abs_a, None).unwrap()
    }

    fn stack(y: &[f64], z: &[f64]) -> Vector {
        let mut v = y.to_vec();
        v.extend_from_slice(z);
        Vector::new(v).unwrap()
    }

    #[test]
    fn default_scale_is_ten_times_inf_norm() {
        let kernel = small_kernel();
        assert!((kernel.inf_norm() - 1.3).abs() < 1e-15);
        assert!((kernel.scale() - 13.0).abs() < 1e-14);
    }

    #[test]
    fn sweep_trace_is_non_increasing_and_matches_prox() {
        let kernel = small_kernel();
        let anchor = stack(&[0.3, -0.6], &[0.45, 0.55]);
        let other = stack(&[-0.2, 0.8], &[0.7, 0.3]);
        let linear = Vector::new(vec![0.4, -1.1, 0.6, -0.2]).unwrap();
        let anchors = [(0.8, &anchor), (0.5, &other)];
        let (out, trace) = kernel
            .prox_with_trace(&[-1.0; 2], &[1.0; 2], &linear, &anchors)
            .unwrap();
        assert_eq!(trace.len(), out.sweeps);
        for pair in trace.windows(2) {
            assert!(
                pair[1] <= pair[0] + 1e-12,
                "objective rose from {} to {}",
                pair[0],
                pair[1]
            );
        }
        let plain = kernel
            .prox(&[-1.0; 2], &[1.0; 2], &linear, &anchors)
            .unwrap();
        assert_eq!(plain.point.to_bits(), out.point.to_bits());
        let final_obj = kernel.prox_objective(&linear, &anchors, &out.point);
        assert!((final_obj - trace.last().unwrap()).abs() < 1e-12);
    }

    #[test]
    fn fixed_point_returns_anchor_in_one_sweep() {
        let kernel = small_kernel();
        let anchor = stack(&[0.3, -0.6], &[0.45, 0.55]);
        let out = kernel
            .prox(&[-1.0; 2], &[1.0; 2], &Vector::zeros(4), &[(1.0, &anchor)])
            .unwrap();
        assert_eq!(out.sweeps, 1);
        for (a, b) in out.point.iter().zip(anchor.iter()) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn output_is_feasible() {
        let kernel = small_kernel();
        let anchor = stack(&[0.9, 0.9], &[0.2, 0.8]);
        let linear = Vector::new(vec![5.0, -5.0, 2.0, -2.0]).unwrap();
        let out = kernel
            .prox(&[-1.0; 2], &[1.0; 2], &linear, &[(1.0, &anchor)])
            .unwrap();
        let (y, z) = out.point.split_at(2);
        assert!(y.iter().all(|v| (-1.0..=1.0).contains(v)));
        let sum: f64 = z.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!(z.iter().all(|v| *v > 0.0));
    }

    #[test]
    fn objective_never_increases_across_anchors_mix() {
        // The block solves are exact, so the returned point must beat every
        // anchor on the prox objective.
        let kernel = small_kernel();
        let a = stack(&[0.2, 0.1], &[0.5, 0.5]);
        let b = stack(&[-0.4, 0.8], &[0.9, 0.1]);
        let linear = Vector::new(vec![0.3, -0.2, 0.1, 0.4]).unwrap();
        let anchors = [(1.0, &a), (0.7, &b)];
        let out = kernel.prox(&[-1.0; 2], &[1.0; 2], &linear, &anchors).unwrap();
        let obj_out = kernel.prox_objective(&linear, &anchors, &out.point);
        assert!(obj_out <= kernel.prox_objective(&linear, &anchors, &a) + 1e-12);
        assert!(obj_out <= kernel.prox_objective(&linear, &anchors, &b) + 1e-12);
    }

    #[test]
    fn zero_matrix_regularizes_and_solves_the_linear_limit() {
        let kernel = BoxSimplexKernel::new(DMatrix::zeros(2, 2), None).unwrap();
        assert_eq!(kernel.scale(), 1.0);
        let anchor = stack(&[0.0, 0.0], &[0.5, 0.5]);
        let linear = Vector::new(vec![1.0, -2.0, 0.0, 0.0]).unwrap();
        let out = kernel
            .prox(&[-1.0; 2], &[1.0; 2], &linear, &[(1.0, &anchor)])
            .unwrap();
        // Zero curvature: the y block degenerates to a linear program whose
        // solution sits on the box boundary against the linear term.
        assert_eq!(out.point[0], -1.0);
        assert_eq!(out.point[1], 1.0);
    }

    #[test]
    fn divergence_is_nonnegative_on_the_domain() {
        let kernel = small_kernel();
        let a = stack(&[0.2, -0.5], &[0.3, 0.7]);
        let b = stack(&[-0.9, 0.4], &[0.6, 0.4]);
        assert!(kernel.divergence(&a, &b) >= 0.0);
        assert!(kernel.divergence(&b, &a) >= 0.0);
        assert!(kernel.divergence(&a, &a).abs() < 1e-14);
    }
}
