//! Prox-step solvers for the distance generators used by the problem suite.

pub mod box_simplex;
pub mod entropy;
pub mod euclidean;
pub mod quadratic_ball;
pub mod weighted_box;

pub use box_simplex::{BoxSimplexKernel, BoxSimplexProx};
pub use entropy::{EntropySimplexKernel, ENTROPY_FLOOR};
pub use quadratic_ball::{QuadraticBallProx, QuadraticFormBallKernel};
pub use weighted_box::WeightedBoxKernel;
