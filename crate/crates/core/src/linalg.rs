//! Dense complex matrix kernels shared by the state, entropy and recovery code.
//!
//! Subsystem bookkeeping is done with mixed-radix digit arithmetic: a composite
//! index over sites with dimensions `d_0, ..., d_{n-1}` is row-major with the
//! last site varying fastest. Nothing here materializes a rank-2N tensor.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type CMatrix = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Row-major strides for a list of site dimensions.
pub fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * dims[i + 1];
    }
    s
}

/// Flat-index contributions of every joint value of the sites at `positions`,
/// enumerated in row-major order over those sites.
pub fn digit_offsets(dims: &[usize], positions: &[usize]) -> Vec<usize> {
    let st = strides(dims);
    let mut out = vec![0usize];
    for &p in positions {
        let mut next = Vec::with_capacity(out.len() * dims[p]);
        for &base in &out {
            for digit in 0..dims[p] {
                next.push(base + digit * st[p]);
            }
        }
        out = next;
    }
    out
}

fn complement_positions(n: usize, positions: &[usize]) -> Vec<usize> {
    (0..n).filter(|p| !positions.contains(p)).collect()
}

/// Reduced matrix on the sites at `keep` (sorted positions into `dims`).
pub fn partial_trace(m: &CMatrix, dims: &[usize], keep: &[usize]) -> CMatrix {
    let kept = digit_offsets(dims, keep);
    let traced = digit_offsets(dims, &complement_positions(dims.len(), keep));
    let dk = kept.len();
    let mut out = CMatrix::zeros(dk, dk);
    for (a, &ka) in kept.iter().enumerate() {
        for (b, &kb) in kept.iter().enumerate() {
            let mut acc = ZERO;
            for &t in &traced {
                acc += m[(ka + t, kb + t)];
            }
            out[(a, b)] = acc;
        }
    }
    out
}

/// `op` acting on the sites at `positions`, tensored with the identity on the rest.
pub fn embed(op: &CMatrix, dims: &[usize], positions: &[usize]) -> CMatrix {
    let total: usize = dims.iter().product();
    let inner = digit_offsets(dims, positions);
    let outer = digit_offsets(dims, &complement_positions(dims.len(), positions));
    let mut out = CMatrix::zeros(total, total);
    for &o in &outer {
        for (a, &ia) in inner.iter().enumerate() {
            for (b, &ib) in inner.iter().enumerate() {
                let v = op[(a, b)];
                if v != ZERO {
                    out[(o + ia, o + ib)] = v;
                }
            }
        }
    }
    out
}

/// Reorders tensor factors: site `order[i]` of the input becomes site `i` of the output.
pub fn permute_sites(m: &CMatrix, dims: &[usize], order: &[usize]) -> CMatrix {
    if order.iter().enumerate().all(|(i, &o)| i == o) {
        return m.clone();
    }
    // Enumerating the old sites in the new order gives, for each new index, its old index.
    let map = digit_offsets(dims, order);
    let n = map.len();
    CMatrix::from_fn(n, n, |i, j| m[(map[i], map[j])])
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Largest entrywise modulus of `m - m†`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().copied().sum()
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
/// Eigen-decomposition of the Hermitian part of `m`. nalgebra's implicit QR
/// sweep can return NaN on sparse inputs whose off-diagonal entries underflow,
/// such as differences of nearby GHZ-like states; those are retried after a
/// similarity by a fixed dense unitary, which leaves the spectrum unchanged.
fn symmetric_eigen(m: &CMatrix) -> (SymmetricEigen<Complex64, nalgebra::Dyn>, Option<CMatrix>) {
    let h = hermitize(m);
    let eig = SymmetricEigen::new(h.clone());
    if eig.eigenvalues.iter().all(|x| x.is_finite()) {
        return (eig, None);
    }
    for seed in 0..8u64 {
        let u = dense_unitary(h.nrows(), seed);
        let eig = SymmetricEigen::new(hermitize(&(u.adjoint() * &h * &u)));
        if eig.eigenvalues.iter().all(|x| x.is_finite()) {
            log::debug!("eigensolver retried with a rotated basis (seed {seed})");
            return (eig, Some(u));
        }
    }
    panic!("Hermitian eigensolver returned non-finite values for a {0}x{0} matrix", h.nrows())
}

fn dense_unitary(dim: usize, seed: u64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = || rng.sample::<f64, _>(StandardNormal);
    CMatrix::from_fn(dim, dim, |_, _| Complex64::new(g(), g())).qr().q()
}

pub fn eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let (eig, rotation) = symmetric_eigen(m);
    let basis = match rotation {
        Some(u) => u * &eig.eigenvectors,
        None => eig.eigenvectors,
    };
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), idx.len(), |r, c| basis[(r, idx[c])]);
    (values, vectors)
}

pub fn eigvalsh(m: &CMatrix) -> Vec<f64> {
    let mut v: Vec<f64> = symmetric_eigen(m).0.eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// `V f(Λ) V†` for a Hermitian input.
pub fn map_hermitian(m: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let (values, vectors) = eigh(m);
    from_spectrum(&values.iter().map(|&x| f(x)).collect::<Vec<_>>(), &vectors)
}

pub fn from_spectrum(values: &[f64], vectors: &CMatrix) -> CMatrix {
    let mut scaled = vectors.clone();
    for (c, &v) in values.iter().enumerate() {
        scaled.column_mut(c).scale_mut(v);
    }
    &scaled * vectors.adjoint()
}

/// Sum of absolute eigenvalues of a Hermitian matrix.
pub fn trace_norm_hermitian(m: &CMatrix) -> f64 {
    eigvalsh(m).iter().map(|x| x.abs()).sum()
}
