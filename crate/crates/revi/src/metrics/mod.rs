//! Convergence metrics and the independent oracles that audit them.

pub mod oracle;

use crate::error::{Error, Result};
use crate::problems::{BoxSimplexInstance, ErmInstance};
use crate::vector::Vector;
use crate::vi::VIProblem;

/// Negative metric values above this magnitude are treated as roundoff and
/// clamped to zero; anything more negative is a genuine failure.
pub const GAP_NEGATIVE_SLACK: f64 = 1e-12;

/// A named series of metric values recorded at strictly increasing
/// iteration indices.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricTrace {
    name: String,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl MetricTrace {
    pub fn new(name: impl Into<String>) -> Self {
        MetricTrace {
            name: name.into(),
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Appends a sample; indices must arrive strictly increasing and values
    /// must be finite.
    pub fn push(&mut self, index: usize, value: f64) -> Result<()> {
        if let Some(last) = self.indices.last() {
            if index <= *last {
                return Err(Error::InvalidArgument(format!(
                    "metric '{}' index {index} does not increase past {last}",
                    self.name
                )));
            }
        }
        if !value.is_finite() {
            return Err(Error::Numeric(format!(
                "metric '{}' got non-finite value at index {index}",
                self.name
            )));
        }
        self.indices.push(index);
        self.values.push(value);
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn last(&self) -> Option<(usize, f64)> {
        Some((*self.indices.last()?, *self.values.last()?))
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }
}

/// Exact duality gap of the box-simplex game at a feasible stacked point:
/// the best simplex response minus the best box response,
/// `max_i (Ay - b)_i + <c, y> + ||A'z + c||_1 + <b, z>`.
pub fn box_simplex_gap(instance: &BoxSimplexInstance, x: &Vector) -> Result<f64> {
    let n = instance.n();
    if x.dim() != 2 * n {
        return Err(Error::dim(2 * n, x.dim(), "gap argument"));
    }
    if !instance.set().contains(x) {
        return Err(Error::InvalidArgument("gap argument is infeasible".into()));
    }
    let (y, z) = x.split_at(n);
    let a = instance.matrix();
    let b = instance.payoff_b();
    let c = instance.payoff_c();

    let mut best_row = f64::NEG_INFINITY;
    for i in 0..n {
        let mut ay = 0.0;
        for j in 0..n {
            ay += a[(i, j)] * y[j];
        }
        best_row = best_row.max(ay - b[i]);
    }
    let mut gap = best_row;
    for j in 0..n {
        gap += c[j] * y[j];
        let mut at_z = 0.0;
        for i in 0..n {
            at_z += a[(i, j)] * z[i];
        }
        gap += (at_z + c[j]).abs();
    }
    for i in 0..n {
        gap += b[i] * z[i];
    }
    clamp_gap(gap)
}

pub(crate) fn clamp_gap(gap: f64) -> Result<f64> {
    if !gap.is_finite() || gap < -GAP_NEGATIVE_SLACK {
        return Err(Error::Numeric(format!(
            "duality gap {gap} is negative beyond roundoff"
        )));
    }
    Ok(gap.max(0.0))
}

/// Bregman distance from the recorded solution to the iterate,
/// `V(x*, x)` — the quantity the convergence theory contracts.
pub fn bregman_to_solution(problem: &VIProblem, x: &Vector) -> Result<f64> {
    let solution = problem.known_solution().ok_or_else(|| {
        Error::Misuse("distance-to-solution metric needs a recorded solution".into())
    })?;
    problem.divergence(solution, x)
}

/// Ridge objective `F(x)`, for reporting only — solvers never see it.
pub fn erm_objective(instance: &ErmInstance, x: &Vector) -> Result<f64> {
    instance.objective(x)
}
