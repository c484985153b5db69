//! Reduced-basis approximation of the smallest eigenvalues of parameterized
//! plane-strain elasticity eigenvalue problems.
//!
//! The crate covers the whole pipeline: structured meshing and P1 assembly of
//! the affine operator blocks, detailed and reduced generalized eigensolves,
//! POD and greedy construction of a single shared reduced space for several
//! outputs, and the residual-based a-posteriori error estimator with its
//! offline-online decomposition.

pub mod assemble;
pub mod eigensolve;
pub mod error;
pub mod estimator;
pub mod geometry;
pub mod greedy;
pub mod mesh;
pub mod parameter;
pub mod pod;
pub mod rb;
pub mod sparse;

pub use error::{Error, Result};
