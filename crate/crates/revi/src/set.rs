//! Feasible sets: Euclidean balls, boxes, probability simplexes, and products.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::vector::Vector;

/// Membership checks accept constraint violations up to this absolute slack.
pub const FEASIBILITY_TOL: f64 = 1e-12;

/// Closed convex feasible set for a variational inequality.
#[derive(Debug, Clone)]
pub enum FeasibleSet {
    /// `{ x : ||x - center||_2 <= radius }`.
    Ball { center: Vector, radius: f64 },
    /// Axis-aligned box `{ x : lower <= x <= upper }` componentwise.
    Box { lower: Vector, upper: Vector },
    /// Probability simplex `{ x >= 0, sum x = 1 }` in `dim` coordinates.
    Simplex { dim: usize },
    /// Cartesian product of blocks, stacked in order.
    Product(Vec<FeasibleSet>),
}

impl FeasibleSet {
    pub fn ball(center: Vector, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "ball radius must be positive and finite, got {radius}"
            )));
        }
        Ok(FeasibleSet::Ball { center, radius })
    }

    pub fn boxed(lower: Vector, upper: Vector) -> Result<Self> {
        if lower.dim() != upper.dim() {
            return Err(Error::dim(lower.dim(), upper.dim(), "box bounds"));
        }
        if lower.iter().zip(upper.iter()).any(|(l, u)| l > u) {
            return Err(Error::InvalidArgument(
                "box lower bound exceeds upper bound".into(),
            ));
        }
        Ok(FeasibleSet::Box { lower, upper })
    }

    /// `[-1, 1]^n`, the box used by the matrix-game problems.
    pub fn symmetric_unit_box(dim: usize) -> Self {
        FeasibleSet::Box {
            lower: Vector::from_trusted(vec![-1.0; dim]),
            upper: Vector::from_trusted(vec![1.0; dim]),
        }
    }

    pub fn simplex(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("simplex dimension is zero".into()));
        }
        Ok(FeasibleSet::Simplex { dim })
    }

    pub fn product(blocks: Vec<FeasibleSet>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidArgument("empty product set".into()));
        }
        Ok(FeasibleSet::Product(blocks))
    }

    /// Ambient dimension (blocks stacked for products).
    pub fn dim(&self) -> usize {
        match self {
            FeasibleSet::Ball { center, .. } => center.dim(),
            FeasibleSet::Box { lower, .. } => lower.dim(),
            FeasibleSet::Simplex { dim } => *dim,
            FeasibleSet::Product(blocks) => blocks.iter().map(|b| b.dim()).sum(),
        }
    }

    /// Membership up to `FEASIBILITY_TOL` per constraint.
    pub fn contains(&self, x: &Vector) -> bool {
        if x.dim() != self.dim() {
            return false;
        }
        self.contains_slice(x.as_slice())
    }

    fn contains_slice(&self, x: &[f64]) -> bool {
        match self {
            FeasibleSet::Ball { center, radius } => {
                let d2: f64 = x
                    .iter()
                    .zip(center.iter())
                    .map(|(a, c)| (a - c) * (a - c))
                    .sum();
                d2.sqrt() <= radius + FEASIBILITY_TOL
            }
            FeasibleSet::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper.iter()))
                .all(|(v, (l, u))| *v >= l - FEASIBILITY_TOL && *v <= u + FEASIBILITY_TOL),
            FeasibleSet::Simplex { .. } => {
                let sum: f64 = x.iter().sum();
                x.iter().all(|v| *v >= -FEASIBILITY_TOL) && (sum - 1.0).abs() <= FEASIBILITY_TOL
            }
            FeasibleSet::Product(blocks) => {
                let mut offset = 0;
                for block in blocks {
                    let d = block.dim();
                    if !block.contains_slice(&x[offset..offset + d]) {
                        return false;
                    }
                    offset += d;
                }
                true
            }
        }
    }

    /// Draws a feasible point. Balls use the normalized-Gaussian radial trick,
    /// simplexes normalize exponential draws (uniform on the simplex), boxes
    /// are sampled componentwise.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Vector {
        let mut out = Vec::with_capacity(self.dim());
        self.sample_into(rng, &mut out);
        Vector::from_trusted(out)
    }

    fn sample_into(&self, rng: &mut ChaCha8Rng, out: &mut Vec<f64>) {
        match self {
            FeasibleSet::Ball { center, radius } => {
                let n = center.dim();
                let mut g: Vec<f64> = (0..n)
                    .map(|_| {
                        // Box-Muller keeps the dependency surface small here.
                        let u1: f64 = rng.gen_range(1e-12..1.0);
                        let u2: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                        (-2.0 * u1.ln()).sqrt() * u2.cos()
                    })
                    .collect();
                let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
                let r = radius * rng.gen_range(0.0..1.0f64).powf(1.0 / n as f64);
                for (gi, c) in g.iter_mut().zip(center.iter()) {
                    *gi = c + *gi / norm * r;
                }
                out.extend_from_slice(&g);
            }
            FeasibleSet::Box { lower, upper } => {
                for (l, u) in lower.iter().zip(upper.iter()) {
                    out.push(if l == u { *l } else { rng.gen_range(*l..*u) });
                }
            }
            FeasibleSet::Simplex { dim } => {
                let draws: Vec<f64> = (0..*dim)
                    .map(|_| -rng.gen_range(1e-12..1.0f64).ln())
                    .collect();
                let sum: f64 = draws.iter().sum();
                out.extend(draws.iter().map(|v| v / sum));
            }
            FeasibleSet::Product(blocks) => {
                for block in blocks {
                    block.sample_into(rng, out);
                }
            }
        }
    }
}
