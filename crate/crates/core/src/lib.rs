//! Mixed finite elements for linear elasticity with weakly imposed stress
//! symmetry on tetrahedral meshes.
//!
//! The discrete unknowns are a stress with H(div)-conforming rows, a
//! cellwise-constant displacement and a continuous piecewise-linear skew
//! multiplier. Two solution paths are provided: the full saddle-point system
//! with exact quadrature, and a vertex-based quadrature that makes the stress
//! and multiplier blocks local so both can be eliminated, leaving a sparse SPD
//! system for the displacement alone.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]


pub mod assembly;
pub mod exec;
pub mod fespace;
pub mod mesh;
pub mod quadrature;
pub mod solver;
pub mod sparse;
pub mod tensor;
pub mod verification;

pub use exec::ExecPolicy;
pub use mesh::{BoxExtent, SimplicialMesh};
pub use tensor::{Mat3, Vec3};
