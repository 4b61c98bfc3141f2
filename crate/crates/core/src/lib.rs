//! Lowest-order grad-curl conforming virtual elements on polyhedral meshes.
//!
//! The discrete spaces are the vertex-value space `U`, the grad-curl space
//! `V` (curl values at vertices plus tangential edge means), the vector `H¹`
//! space `W` (vertex values plus normal face moments) and piecewise constants
//! `Q`. They form an exact sequence `U → V → W → Q` under the discrete
//! gradient, curl and divergence.

// `!(x > 0.0)` deliberately rejects NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod error;
pub mod harness;
pub mod linsolve;
pub mod local;
pub mod mesh;
pub mod poly;
pub mod shapes;

pub use error::{Result, VemError};
pub use mesh::Mesh;
