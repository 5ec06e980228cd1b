//! Problem generators: each instance couples an operator with a feasible set
//! and a distance generator under which it is relatively strongly monotone,
//! and serializes bit-exactly for replay.

pub mod archive;
pub mod box_simplex;
pub mod erm;
pub mod synthetic;

pub use archive::ProblemArchive;
pub use box_simplex::BoxSimplexInstance;
pub use erm::{estimate_similarity, DataDistribution, ErmInstance};
pub use synthetic::SyntheticInstance;
