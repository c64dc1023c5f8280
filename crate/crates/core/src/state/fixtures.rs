//! Reference states used by tests, benchmarks and the acceptance suite.

use rand::Rng;

use super::{
    conjugate_site, random_mixed_state_with, random_unitary_with, rng_from_seed, tensor_product, DensityMatrix, Region,
    SystemLayout,
};
use crate::error::{Error, Result};

/// Places single-site states on sites `0..n` and multiplies them out.
pub fn product_state(factors: &[DensityMatrix]) -> Result<DensityMatrix> {
    let mut iter = factors.iter().enumerate();
    let (_, first) = iter.next().ok_or_else(|| Error::Domain("no factors".into()))?;
    let mut acc = first.clone().on_region(Region::single(0))?;
    for (i, f) in iter {
        acc = tensor_product(&acc, &f.clone().on_region(Region::single(i))?)?;
    }
    Ok(acc)
}

/// Product of independent random single-site states of the given rank.
pub fn random_product_state(dims: &[usize], rank: usize, seed: u64) -> Result<DensityMatrix> {
    let mut rng = rng_from_seed(seed);
    let factors = dims
        .iter()
        .map(|&d| random_mixed_state_with(&SystemLayout::from_dims(&[d])?, rank.min(d), &mut rng))
        .collect::<Result<Vec<_>>>()?;
    product_state(&factors)
}

fn random_distribution(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    // Bounded away from zero so every transition stays full support.
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

/// Diagonal state of a classical Markov chain `p(x0) p(x1|x0) p(x2|x1) ...`.
pub fn classical_markov_chain(dims: &[usize], seed: u64) -> Result<DensityMatrix> {
    if dims.is_empty() {
        return Err(Error::Domain("empty chain".into()));
    }
    let layout = SystemLayout::from_dims(dims)?;
    let mut rng = rng_from_seed(seed);
    let mut probs = random_distribution(dims[0], &mut rng);
    for w in dims.windows(2) {
        let transitions: Vec<Vec<f64>> = (0..w[0]).map(|_| random_distribution(w[1], &mut rng)).collect();
        let mut next = Vec::with_capacity(probs.len() * w[1]);
        for (i, p) in probs.iter().enumerate() {
            let prev = i % w[0];
            next.extend(transitions[prev].iter().map(|t| p * t));
        }
        probs = next;
    }
    DensityMatrix::from_diagonal(layout, &probs)
}

/// Classical Markov chain dressed with independent Haar-random local unitaries.
/// Local unitaries leave every entropy unchanged, so the state stays a quantum
/// Markov chain along the line while acquiring off-diagonal structure.
pub fn rotated_markov_chain(dims: &[usize], seed: u64) -> Result<DensityMatrix> {
    let mut state = classical_markov_chain(dims, seed)?;
    let mut rng = rng_from_seed(seed ^ 0x9e37_79b9_7f4a_7c15);
    for (site, &d) in dims.iter().enumerate() {
        let u = random_unitary_with(d, &mut rng);
        state = conjugate_site(&state, site, &u)?;
    }
    Ok(state)
}

/// `ρ_{A B1} ⊗ ρ_{B2 C}` on sites `(A, B1, B2, C) = (0, 1, 2, 3)` with random
/// factors of the given ranks. `I(A:C|B1B2) = 0` by construction.
pub fn split_middle_markov(dims: [usize; 4], ranks: [usize; 2], seed: u64) -> Result<DensityMatrix> {
    let mut rng = rng_from_seed(seed);
    let left = random_mixed_state_with(&SystemLayout::from_dims(&dims[..2])?, ranks[0], &mut rng)?;
    let right = random_mixed_state_with(&SystemLayout::from_dims(&dims[2..])?, ranks[1], &mut rng)?
        .on_region(Region::new([2, 3])?)?;
    tensor_product(&left, &right)
}

/// `½(|0…0><0…0| + |1…1><1…1|)`.
pub fn dephased_ghz(n_qubits: usize) -> Result<DensityMatrix> {
    if n_qubits < 2 {
        return Err(Error::Domain(format!("need at least 2 qubits, got {n_qubits}")));
    }
    let layout = SystemLayout::qubits(n_qubits)?;
    let d = layout.total_dim();
    let mut p = vec![0.0; d];
    p[0] = 0.5;
    p[d - 1] = 0.5;
    DensityMatrix::from_diagonal(layout, &p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{partial_trace, Tolerances};

    #[test]
    fn markov_chain_is_valid_state() {
        let rho = classical_markov_chain(&[2, 3, 2], 5).unwrap();
        rho.validate(&Tolerances::default()).unwrap();
        let rot = rotated_markov_chain(&[2, 2, 2, 2], 5).unwrap();
        rot.validate(&Tolerances::default()).unwrap();
    }

    #[test]
    fn split_middle_factors() {
        let rho = split_middle_markov([2, 2, 2, 2], [2, 3], 1).unwrap();
        rho.validate(&Tolerances::default()).unwrap();
        let ab1 = partial_trace(&rho, &Region::new([0, 1]).unwrap()).unwrap();
        let b2c = partial_trace(&rho, &Region::new([2, 3]).unwrap()).unwrap();
        let back = tensor_product(&ab1, &b2c).unwrap();
        assert!((back.matrix() - rho.matrix()).norm() < 1e-12);
    }
}
