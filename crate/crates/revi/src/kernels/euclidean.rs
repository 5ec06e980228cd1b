//! Euclidean projections onto the supported feasible sets.
//!
//! These back both the Euclidean Bregman geometry (where the weighted prox
//! step reduces to a single projection) and the classical extragradient
//! baseline, which projects in the Euclidean metric regardless of the
//! problem's own geometry.

use crate::error::{Error, Result};
use crate::set::FeasibleSet;
use crate::vector::Vector;

/// Projects `x` onto `set` in the Euclidean metric.
pub fn project(set: &FeasibleSet, x: &Vector) -> Result<Vector> {
    if x.dim() != set.dim() {
        return Err(Error::dim(set.dim(), x.dim(), "projection input"));
    }
    let mut out = Vec::with_capacity(x.dim());
    project_slice(set, x.as_slice(), &mut out)?;
    Vector::new(out)
}

fn project_slice(set: &FeasibleSet, x: &[f64], out: &mut Vec<f64>) -> Result<()> {
    match set {
        FeasibleSet::Ball { center, radius } => {
            let mut shifted: Vec<f64> = x
                .iter()
                .zip(center.iter())
                .map(|(v, c)| v - c)
                .collect();
            let norm = shifted.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > *radius {
                let s = radius / norm;
                for v in &mut shifted {
                    *v *= s;
                }
            }
            out.extend(shifted.iter().zip(center.iter()).map(|(v, c)| v + c));
        }
        FeasibleSet::Box { lower, upper } => {
            out.extend(
                x.iter()
                    .zip(lower.iter().zip(upper.iter()))
                    .map(|(v, (l, u))| v.clamp(*l, *u)),
            );
        }
        FeasibleSet::Simplex { .. } => out.extend(project_simplex(x)),
        FeasibleSet::Product(blocks) => {
            let mut offset = 0;
            for block in blocks {
                let d = block.dim();
                project_slice(block, &x[offset..offset + d], out)?;
                offset += d;
            }
        }
    }
    Ok(())
}

/// Euclidean projection onto the probability simplex by the sort-and-threshold
/// rule: with `u` sorted descending, the active support is the largest prefix
/// whose entries stay positive after the common shift `tau`.
pub fn project_simplex(x: &[f64]) -> Vec<f64> {
    let mut u = x.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).expect("finite entries"));
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (j, uj) in u.iter().enumerate() {
        cumsum += uj;
        let candidate = (1.0 - cumsum) / (j + 1) as f64;
        if uj + candidate > 0.0 {
            tau = candidate;
        }
    }
    x.iter().map(|v| (v + tau).max(0.0)).collect()
}

/// Weighted Euclidean prox step. With `d = ||.||^2 / 2` the minimizer of
/// `<linear, z> + sum_k w_k ||z - x_k||^2 / 2` over the set is the projection
/// of `(sum_k w_k x_k - linear) / sum_k w_k`.
pub fn euclidean_prox(
    set: &FeasibleSet,
    linear: &Vector,
    anchors: &[(f64, &Vector)],
) -> Result<Vector> {
    let total: f64 = anchors.iter().map(|(w, _)| w).sum();
    let mut point = vec![0.0; linear.dim()];
    for (w, x) in anchors {
        for (p, v) in point.iter_mut().zip(x.iter()) {
            *p += w * v;
        }
    }
    for (p, l) in point.iter_mut().zip(linear.iter()) {
        *p = (*p - l) / total;
    }
    project(set, &Vector::new(point)?)
}
