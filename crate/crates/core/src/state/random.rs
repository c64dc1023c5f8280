use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::density::DensityMatrix;
use super::layout::SystemLayout;
use super::region::Region;
use super::vector::StateVector;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Complex Ginibre matrix with i.i.d. standard normal real and imaginary parts.
pub fn ginibre(rows: usize, cols: usize, rng: &mut impl Rng) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// Induced-measure state `G G† / Tr(G G†)` with `G` of shape `total_dim × rank`.
pub fn random_mixed_state(layout: &SystemLayout, rank: usize, seed: u64) -> Result<DensityMatrix> {
    random_mixed_state_with(layout, rank, &mut rng_from_seed(seed))
}

pub fn random_mixed_state_with(layout: &SystemLayout, rank: usize, rng: &mut impl Rng) -> Result<DensityMatrix> {
    let d = layout.total_dim();
    if rank == 0 || rank > d {
        return Err(Error::Domain(format!("rank must lie in 1..={d}, got {rank}")));
    }
    let g = ginibre(d, rank, rng);
    let m = &g * g.adjoint();
    let tr = linalg::trace(&m).re;
    let m = linalg::hermitize(&(m / Complex64::new(tr, 0.0)));
    Ok(DensityMatrix::from_parts(layout.clone(), Region::full(layout.len()), m))
}

/// Haar-random pure state.
pub fn random_pure_state_with(layout: &SystemLayout, rng: &mut impl Rng) -> Result<StateVector> {
    let d = layout.total_dim();
    let v = DVector::from_fn(d, |_, _| gaussian(rng));
    StateVector::normalized(layout.clone(), v)
}

/// Haar-random unitary via QR of a Ginibre matrix with the phase fix on R's diagonal.
pub fn random_unitary_with(dim: usize, rng: &mut impl Rng) -> CMatrix {
    let qr = ginibre(dim, dim, rng).qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { linalg::ONE };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// `U ρ U†`.
pub fn conjugate(state: &DensityMatrix, u: &CMatrix) -> Result<DensityMatrix> {
    if u.nrows() != state.dim() || u.ncols() != state.dim() {
        return Err(Error::Shape(format!("unitary is {}x{}, state dimension {}", u.nrows(), u.ncols(), state.dim())));
    }
    let m = linalg::hermitize(&(u * state.matrix() * u.adjoint()));
    Ok(DensityMatrix::from_parts(state.layout().clone(), state.region().clone(), m))
}

/// Conjugates by `u` acting on a single global site.
pub fn conjugate_site(state: &DensityMatrix, site: usize, u: &CMatrix) -> Result<DensityMatrix> {
    let pos = state.positions_of(&Region::single(site))?;
    let dims = state.dims();
    if u.nrows() != dims[pos[0]] {
        return Err(Error::Shape(format!("unitary of size {} on site of dim {}", u.nrows(), dims[pos[0]])));
    }
    conjugate(state, &linalg::embed(u, &dims, &pos))
}

/// Global depolarizing channel `(1 - p) ρ + p I/d`.
pub fn depolarize(state: &DensityMatrix, p: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("depolarizing strength {p} outside [0, 1]")));
    }
    let d = state.dim();
    let m = state.matrix() * Complex64::new(1.0 - p, 0.0) + CMatrix::identity(d, d) * Complex64::new(p / d as f64, 0.0);
    Ok(DensityMatrix::from_parts(state.layout().clone(), state.region().clone(), m))
}
