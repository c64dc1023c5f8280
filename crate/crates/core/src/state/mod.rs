//! Dense multipartite states: layouts, regions, density matrices and pure states.

mod density;
pub mod fixtures;
mod layout;
mod random;
mod region;
mod vector;

pub(crate) use density::project_like;
pub use density::{
    partial_trace, project_matrix, project_to_density, tensor_product, trace_distance, DensityMatrix, Tolerances,
    ZERO_EIGENVALUE,
};
pub use layout::{Site, SystemLayout, DEFAULT_MAX_DIM};
pub use random::{
    conjugate, conjugate_site, depolarize, ginibre, random_mixed_state, random_mixed_state_with,
    random_pure_state_with, random_unitary_with, rng_from_seed,
};
pub use region::Region;
pub use vector::{bell_pair, ghz_state, ghz_with_phase, StateVector};
