//! Locally checkable certificates for multipartite quantum states.
//!
//! Given reduced density matrices on small overlapping regions, this crate
//! computes an upper bound on the trace distance between any two global
//! states that share those marginals, rebuilds a global state from them with
//! the Petz recovery map, and plans shield layouts on 2D grids under an
//! area-law entropy model.
//!
//! Entropies are in nats throughout.

pub mod bundle;
pub mod entropy;
pub mod error;
pub mod io;
pub mod linalg;
pub mod markov;
pub mod planner;
pub mod recovery;
pub mod state;
pub mod tomo;

pub use error::{Error, ErrorKind, Result};
pub use state::{
    partial_trace, project_to_density, tensor_product, trace_distance, DensityMatrix, Region, StateVector,
    SystemLayout, Tolerances,
};
