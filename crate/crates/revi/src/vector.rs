//! Dense vectors with a finiteness guarantee.

use std::ops::{Deref, Index};

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Dense `f64` vector. Construction rejects NaN and infinite entries, so any
/// `Vector` handed out by this crate is finite componentwise.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite entry {} at index {i}",
                values[i]
            )));
        }
        Ok(Vector(values))
    }

    /// Constructor for values already known finite (asserts in debug builds).
    pub(crate) fn from_trusted(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Vector(values)
    }

    pub fn zeros(dim: usize) -> Self {
        Vector(vec![0.0; dim])
    }

    pub fn constant(dim: usize, value: f64) -> Result<Self> {
        Vector::new(vec![value; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm2(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn norm1(&self) -> f64 {
        self.0.iter().map(|v| v.abs()).sum()
    }

    pub fn norm_inf(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `self + c * other`.
    pub fn add_scaled(&self, c: f64, other: &Vector) -> Vector {
        debug_assert_eq!(self.dim(), other.dim());
        Vector::from_trusted(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + c * b)
                .collect(),
        )
    }

    pub fn add(&self, other: &Vector) -> Vector {
        self.add_scaled(1.0, other)
    }

    pub fn sub(&self, other: &Vector) -> Vector {
        self.add_scaled(-1.0, other)
    }

    pub fn scale(&self, c: f64) -> Vector {
        Vector::from_trusted(self.0.iter().map(|a| a * c).collect())
    }

    pub fn dist2(&self, other: &Vector) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Concatenates two vectors (used for stacked saddle-point variables).
    pub fn concat(&self, other: &Vector) -> Vector {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Vector(v)
    }

    /// Splits off the first `at` coordinates.
    pub fn split_at(&self, at: usize) -> (&[f64], &[f64]) {
        self.0.split_at(at)
    }

    pub(crate) fn to_dvector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.0)
    }

    pub(crate) fn from_dvector(v: &DVector<f64>) -> Result<Self> {
        Vector::new(v.iter().copied().collect())
    }

    /// Bit pattern of every entry, for exact trace comparisons.
    pub fn to_bits(&self) -> Vec<u64> {
        self.0.iter().map(|v| v.to_bits()).collect()
    }
}

impl Deref for Vector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl Index<usize> for Vector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl TryFrom<&[f64]> for Vector {
    type Error = Error;

    fn try_from(values: &[f64]) -> Result<Self> {
        Vector::new(values.to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite_entries() {
        assert!(Vector::new(vec![0.0, f64::NAN]).is_err());
        assert!(Vector::new(vec![f64::INFINITY]).is_err());
        assert!(Vector::new(vec![1.0, -2.5]).is_ok());
    }

    #[test]
    fn basic_arithmetic() {
        let a = Vector::new(vec![1.0, 2.0]).unwrap();
        let b = Vector::new(vec![3.0, -1.0]).unwrap();
        assert_eq!(a.dot(&b), 1.0);
        assert_eq!(a.add_scaled(2.0, &b).as_slice(), &[7.0, 0.0]);
        assert_eq!(a.norm1(), 3.0);
        assert_eq!(a.norm_inf(), 2.0);
        assert!((a.dist2(&b) - (4.0 + 9.0f64).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn concat_and_split_round_trip() {
        let a = Vector::new(vec![1.0, 2.0]).unwrap();
        let b = Vector::new(vec![3.0]).unwrap();
        let c = a.concat(&b);
        let (left, right) = c.split_at(2);
        assert_eq!(left, a.as_slice());
        assert_eq!(right, b.as_slice());
    }
}
