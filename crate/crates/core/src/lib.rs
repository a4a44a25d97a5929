//! Simulation and numerical analysis of the Diaconis–Freedman chain on the simplex Δ_d.
//!
//! From a point x the chain picks a vertex e_i with probability p_i(x) and
//! jumps to a uniform point of the segment between x and e_i.

pub mod absorbing;
pub mod chain;
pub mod cli;
pub mod dirichlet;
pub mod error;
pub mod ifs;
pub mod operators;
pub mod quad;
pub mod rng;
pub mod simplex;
pub mod svg;
pub mod validate;
pub mod weights;

pub use error::{Error, Result};
pub use simplex::{segment_map, segment_param, vertex, SimplexPoint};
pub use weights::{boundary_profile, holder_constant, WeightSpec};
