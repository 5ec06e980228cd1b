//! Coordinatewise prox steps for diagonally weighted quadratic distance
//! generators over a box.

use crate::error::{Error, Result};
use crate::vector::Vector;

use super::entropy::check_anchors;

/// Prox solver for `d(y) = sum_j theta_j y_j^2` over an axis-aligned box.
#[derive(Debug, Clone)]
pub struct WeightedBoxKernel {
    weights: Vec<f64>,
}

impl WeightedBoxKernel {
    /// Weights must be strictly positive; a degenerate coordinate has no
    /// curvature to prox against. (The coupled box-simplex kernel regularizes
    /// its on-the-fly weights instead of rejecting them.)
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidArgument("weighted box kernel needs weights".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "diagonal weights must be positive and finite, got {w}"
            )));
        }
        Ok(WeightedBoxKernel { weights })
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Minimizes `<linear, y> + sum_k w_k V(y, x_k)` over the box, where
    /// `V(y, x) = sum_j theta_j (y_j - x_j)^2`. Each coordinate solves
    /// `2 theta_j W y_j = 2 theta_j sum_k w_k x_{k,j} - linear_j`
    /// and clips to `[lower_j, upper_j]`; separability makes the clip exact.
    pub fn prox(
        &self,
        lower: &[f64],
        upper: &[f64],
        linear: &Vector,
        anchors: &[(f64, &Vector)],
    ) -> Result<Vector> {
        let dim = self.dim();
        if linear.dim() != dim {
            return Err(Error::dim(dim, linear.dim(), "weighted box linear term"));
        }
        if lower.len() != dim || upper.len() != dim {
            return Err(Error::dim(dim, lower.len().min(upper.len()), "box bounds"));
        }
        let total_weight = check_anchors(dim, anchors)?;
        let mut out = Vec::with_capacity(dim);
        for j in 0..dim {
            let theta = self.weights[j];
            let mut anchor_mix = 0.0;
            for (w, x) in anchors {
                anchor_mix += w * x[j];
            }
            let y = (2.0 * theta * anchor_mix - linear[j]) / (2.0 * theta * total_weight);
            out.push(y.clamp(lower[j], upper[j]));
        }
        Vector::new(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_linear_single_anchor_returns_anchor() {
        let kernel = WeightedBoxKernel::new(vec![0.7, 2.0, 1.3]).unwrap();
        let anchor = Vector::new(vec![0.4, -0.9, 0.0]).unwrap();
        let y = kernel
            .prox(&[-1.0; 3], &[1.0; 3], &Vector::zeros(3), &[(1.0, &anchor)])
            .unwrap();
        for (a, b) in y.iter().zip(anchor.iter()) {
            assert!((a - b).abs() <= 1e-15, "{a} vs {b}");
        }
    }

    #[test]
    fn clips_to_the_box() {
        // theta = 1, anchor 0, weight 1, linear 4: unconstrained y = -2, clips to -1.
        let kernel = WeightedBoxKernel::new(vec![1.0]).unwrap();
        let anchor = Vector::zeros(1);
        let linear = Vector::new(vec![4.0]).unwrap();
        let y = kernel
            .prox(&[-1.0], &[1.0], &linear, &[(1.0, &anchor)])
            .unwrap();
        assert_eq!(y[0], -1.0);
    }

    #[test]
    fn interior_solution_solves_stationarity() {
        let kernel = WeightedBoxKernel::new(vec![0.5, 3.0]).unwrap();
        let a = Vector::new(vec![0.2, 0.1]).unwrap();
        let b = Vector::new(vec![-0.3, 0.4]).unwrap();
        let linear = Vector::new(vec![0.1, -0.2]).unwrap();
        let anchors = [(0.8, &a), (0.4, &b)];
        let y = kernel.prox(&[-1.0; 2], &[1.0; 2], &linear, &anchors).unwrap();
        for j in 0..2 {
            let theta = kernel.weights()[j];
            let residual = linear[j]
                + anchors
                    .iter()
                    .map(|(w, x)| w * 2.0 * theta * (y[j] - x[j]))
                    .sum::<f64>();
            assert!(residual.abs() < 1e-12, "coordinate {j} residual {residual}");
        }
    }

    #[test]
    fn rejects_degenerate_weights() {
        assert!(WeightedBoxKernel::new(vec![1.0, 0.0]).is_err());
        assert!(WeightedBoxKernel::new(vec![-1.0]).is_err());
        assert!(WeightedBoxKernel::new(vec![]).is_err());
    }
}
