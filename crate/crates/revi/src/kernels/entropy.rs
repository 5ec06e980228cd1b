//! Closed-form weighted prox steps for the scaled negative entropy on the
//! probability simplex.

use crate::error::{Error, Result};
use crate::vector::Vector;

/// Coordinates are floored here before any logarithm so boundary anchors stay
/// usable; outputs are renormalized after flooring.
pub const ENTROPY_FLOOR: f64 = 1e-300;

/// Prox solver for `d(z) = scale * sum_i z_i ln z_i` over the simplex.
#[derive(Debug, Clone)]
pub struct EntropySimplexKernel {
    dim: usize,
    scale: f64,
}

impl EntropySimplexKernel {
    pub fn new(dim: usize, scale: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("entropy kernel over zero dims".into()));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "entropy scale must be positive, got {scale}"
            )));
        }
        Ok(EntropySimplexKernel { dim, scale })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Minimizes `<linear, z> + sum_k w_k V(z, x_k)` over the simplex, where
    /// `V` is the scaled entropy divergence. Stationarity gives
    /// `z_i proportional to exp((scale * sum_k w_k ln x_{k,i} - linear_i) / (scale * W))`,
    /// normalized onto the simplex; the exponent is shifted by its maximum
    /// before exponentiation to avoid overflow.
    pub fn prox(&self, linear: &Vector, anchors: &[(f64, &Vector)]) -> Result<Vector> {
        if linear.dim() != self.dim {
            return Err(Error::dim(self.dim, linear.dim(), "entropy prox linear term"));
        }
        let total_weight = check_anchors(self.dim, anchors)?;
        let mut out = vec![0.0; self.dim];
        entropy_prox_into(
            self.scale,
            linear.as_slice(),
            anchors
                .iter()
                .map(|(w, x)| (*w, x.as_slice()))
                .collect::<Vec<_>>()
                .as_slice(),
            total_weight,
            &mut out,
        )?;
        Vector::new(out)
    }
}

pub(crate) fn check_anchors(dim: usize, anchors: &[(f64, &Vector)]) -> Result<f64> {
    if anchors.is_empty() {
        return Err(Error::InvalidArgument("prox step needs at least one anchor".into()));
    }
    let mut total = 0.0;
    for (w, x) in anchors {
        if !(w.is_finite() && *w > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "anchor weights must be positive and finite, got {w}"
            )));
        }
        if x.dim() != dim {
            return Err(Error::dim(dim, x.dim(), "prox anchor"));
        }
        total += w;
    }
    Ok(total)
}

/// Slice-level solver shared with the coupled box-simplex kernel, which feeds
/// its own effective linear term for the z block.
pub(crate) fn entropy_prox_into(
    scale: f64,
    linear: &[f64],
    anchors: &[(f64, &[f64])],
    total_weight: f64,
    out: &mut [f64],
) -> Result<()> {
    let denom = scale * total_weight;
    for (i, slot) in out.iter_mut().enumerate() {
        let mut log_mix = 0.0;
        for (w, x) in anchors {
            log_mix += w * x[i].max(ENTROPY_FLOOR).ln();
        }
        *slot = (scale * log_mix - linear[i]) / denom;
    }
    let shift = out.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v));
    if !shift.is_finite() {
        return Err(Error::Numeric("entropy prox exponent overflowed".into()));
    }
    let mut sum = 0.0;
    for v in out.iter_mut() {
        *v = (*v - shift).exp();
        sum += *v;
    }
    if !(sum.is_finite() && sum > 0.0) {
        return Err(Error::Numeric(format!(
            "entropy prox normalization degenerate (sum {sum})"
        )));
    }
    let mut floored_sum = 0.0;
    for v in out.iter_mut() {
        *v = (*v / sum).max(ENTROPY_FLOOR);
        floored_sum += *v;
    }
    for v in out.iter_mut() {
        *v /= floored_sum;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_linear_single_anchor_returns_anchor() {
        let kernel = EntropySimplexKernel::new(3, 1.7).unwrap();
        let x = Vector::new(vec![0.2, 0.5, 0.3]).unwrap();
        let z = kernel.prox(&Vector::zeros(3), &[(1.0, &x)]).unwrap();
        for (zi, xi) in z.iter().zip(x.iter()) {
            assert!((zi - xi).abs() < 1e-12, "{zi} vs {xi}");
        }
    }

    #[test]
    fn matches_softmax_closed_form() {
        // Uniform anchor, linear (-ln 2, 0), scale 1: z = (2/3, 1/3).
        let kernel = EntropySimplexKernel::new(2, 1.0).unwrap();
        let anchor = Vector::new(vec![0.5, 0.5]).unwrap();
        let linear = Vector::new(vec![-(2f64.ln()), 0.0]).unwrap();
        let z = kernel.prox(&linear, &[(1.0, &anchor)]).unwrap();
        assert!((z[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((z[1] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn output_is_on_the_simplex_and_positive() {
        let kernel = EntropySimplexKernel::new(4, 0.6).unwrap();
        let a = Vector::new(vec![0.7, 0.1, 0.1, 0.1]).unwrap();
        let b = Vector::new(vec![0.25, 0.25, 0.25, 0.25]).unwrap();
        let linear = Vector::new(vec![5.0, -3.0, 0.0, 40.0]).unwrap();
        let z = kernel.prox(&linear, &[(1.0, &a), (0.3, &b)]).unwrap();
        let sum: f64 = z.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!(z.iter().all(|v| *v > 0.0));
    }

    #[test]
    fn survives_extreme_linear_terms() {
        let kernel = EntropySimplexKernel::new(3, 0.05).unwrap();
        let anchor = Vector::new(vec![1.0 / 3.0; 3]).unwrap();
        let linear = Vector::new(vec![1e4, -1e4, 0.0]).unwrap();
        let z = kernel.prox(&linear, &[(1.0, &anchor)]).unwrap();
        let sum: f64 = z.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!(z[1] > 0.999);
    }

    #[test]
    fn rejects_bad_inputs() {
        let kernel = EntropySimplexKernel::new(2, 1.0).unwrap();
        let anchor = Vector::new(vec![0.5, 0.5]).unwrap();
        assert!(kernel.prox(&Vector::zeros(3), &[(1.0, &anchor)]).is_err());
        assert!(kernel.prox(&Vector::zeros(2), &[]).is_err());
        assert!(kernel.prox(&Vector::zeros(2), &[(0.0, &anchor)]).is_err());
        assert!(EntropySimplexKernel::new(2, 0.0).is_err());
    }
}
