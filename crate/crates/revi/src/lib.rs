//! Adaptive proximal extragradient solvers for variational inequalities
//! under Bregman geometries.
//!
//! The crate is organized around four layers:
//!
//! * [`geometry`] — distance generators (`Euclidean`, scaled entropy, a
//!   quadratic form, and a coupled box-simplex generator) with exact prox
//!   solvers in [`kernels`];
//! * [`vi`] — the operator-plus-set problem description with oracle-call
//!   accounting and property certification helpers;
//! * [`solvers`] — the adaptive extragradient method with a backtracking
//!   step-size search, two slack-tolerant variants, and the fixed-step
//!   baselines it is compared against;
//! * [`problems`] / [`metrics`] / [`experiment`] — ready-made problem
//!   families, evaluation metrics with brute-force oracles, and a
//!   config-driven experiment runner with CSV/SVG output.
//!
//! ```
//! use revi::geometry::{BregmanGeometry, EuclideanGeometry};
//! use revi::set::FeasibleSet;
//! use revi::vector::Vector;
//!
//! let geom = EuclideanGeometry::new(2);
//! let set = FeasibleSet::ball(Vector::zeros(2), 1.0).unwrap();
//! let anchor = Vector::new(vec![3.0, 4.0]).unwrap();
//! // With no linear term the prox of a single anchor is its projection.
//! let p = geom.prox(&set, &Vector::zeros(2), &[(1.0, &anchor)]).unwrap();
//! assert!((p[0] - 0.6).abs() < 1e-12 && (p[1] - 0.8).abs() < 1e-12);
//! ```

pub mod error;
pub mod experiment;
pub mod geometry;
pub mod kernels;
pub mod metrics;
pub mod problems;
pub mod set;
pub mod solvers;
pub mod vector;
pub mod vi;

pub use error::{Error, Result};
pub use geometry::{BregmanGeometry, EuclideanGeometry};
pub use set::FeasibleSet;
pub use vector::Vector;
pub use vi::VIProblem;
