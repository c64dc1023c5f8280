use num_complex::Complex64;

use super::layout::{auto_label, SystemLayout};
use super::region::Region;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};

/// Eigenvalues with modulus below this are treated as exactly zero.
pub const ZERO_EIGENVALUE: f64 = 1e-12;

/// Acceptance thresholds for density-matrix validation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub herm: f64,
    pub trace: f64,
    pub psd: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { herm: 1e-9, trace: 1e-9, psd: 1e-8 }
    }
}

/// A Hermitian, unit-trace, positive semidefinite operator on a set of sites.
///
/// `region` holds the global indices of the sites the operator lives on, in
/// the same order as `layout`. Reduced states keep the global indices of the
/// state they were taken from, so marginals of marginals compose.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    layout: SystemLayout,
    region: Region,
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Validates `matrix` with the default tolerances; the state sits on sites `0..n`.
    pub fn new(layout: SystemLayout, matrix: CMatrix) -> Result<Self> {
        Self::with_tolerances(layout, matrix, &Tolerances::default())
    }

    pub fn with_tolerances(layout: SystemLayout, matrix: CMatrix, tol: &Tolerances) -> Result<Self> {
        let region = Region::full(layout.len());
        let state = Self::checked_shape(layout, region, matrix)?;
        state.validate(tol)?;
        Ok(state)
    }

    fn checked_shape(layout: SystemLayout, region: Region, matrix: CMatrix) -> Result<Self> {
        let d = layout.total_dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::Shape(format!(
                "matrix is {}x{}, layout requires {d}x{d}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(DensityMatrix { layout, region, matrix })
    }

    pub(crate) fn from_parts(layout: SystemLayout, region: Region, matrix: CMatrix) -> Self {
        debug_assert_eq!(layout.len(), region.len());
        debug_assert_eq!(layout.total_dim(), matrix.nrows());
        DensityMatrix { layout, region, matrix }
    }

    /// Diagonal state with the given probabilities.
    pub fn from_diagonal(layout: SystemLayout, probs: &[f64]) -> Result<Self> {
        if probs.len() != layout.total_dim() {
            return Err(Error::Shape(format!("{} probabilities for dimension {}", probs.len(), layout.total_dim())));
        }
        let d = probs.len();
        let m = CMatrix::from_fn(d, d, |i, j| if i == j { Complex64::new(probs[i], 0.0) } else { linalg::ZERO });
        Self::new(layout, m)
    }

    pub fn maximally_mixed(layout: SystemLayout) -> Self {
        let d = layout.total_dim();
        let m = CMatrix::identity(d, d) * Complex64::new(1.0 / d as f64, 0.0);
        let region = Region::full(layout.len());
        DensityMatrix { layout, region, matrix: m }
    }

    /// Moves the state onto other global site indices. Auto-generated labels
    /// (`s<index>`) follow the new indices; explicit labels are kept.
    pub fn on_region(self, region: Region) -> Result<Self> {
        if region.len() != self.region.len() {
            return Err(Error::Region(format!(
                "state has {} sites, target region {region} has {}",
                self.region.len(),
                region.len()
            )));
        }
        let sites = self
            .layout
            .sites()
            .iter()
            .zip(self.region.iter().zip(region.iter()))
            .map(|(s, (old, new))| {
                let mut s = s.clone();
                if s.label == auto_label(old) {
                    s.label = auto_label(new);
                }
                s
            })
            .collect();
        let layout = SystemLayout::new(sites)?;
        Ok(DensityMatrix { layout, region, matrix: self.matrix })
    }

    pub fn validate(&self, tol: &Tolerances) -> Result<()> {
        let defect = linalg::hermiticity_defect(&self.matrix);
        if defect > tol.herm {
            return Err(Error::Validation(format!("not Hermitian (defect {defect:.3e})")));
        }
        let tr = linalg::trace(&self.matrix);
        if (tr.re - 1.0).abs() > tol.trace || tr.im.abs() > tol.trace {
            return Err(Error::Validation(format!("trace is {tr}, expected 1")));
        }
        let min = self.eigenvalues().first().copied().unwrap_or(0.0);
        if min < -tol.psd {
            return Err(Error::Validation(format!("not positive semidefinite (minimum eigenvalue {min:.3e})")));
        }
        Ok(())
    }

    pub fn layout(&self) -> &SystemLayout {
        &self.layout
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.layout.dims()
    }

    /// Local dimension of global site `site`.
    pub fn site_dim(&self, site: usize) -> Option<usize> {
        self.region.position(site).map(|p| self.layout.sites()[p].dim)
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::eigvalsh(&self.matrix)
    }

    pub fn rank(&self) -> usize {
        self.eigenvalues().iter().filter(|l| l.abs() > ZERO_EIGENVALUE).count()
    }

    pub fn trace(&self) -> Complex64 {
        linalg::trace(&self.matrix)
    }

    pub(crate) fn positions_of(&self, sub: &Region) -> Result<Vec<usize>> {
        sub.iter()
            .map(|s| {
                self.region
                    .position(s)
                    .ok_or_else(|| Error::Index(format!("site {s} is not in the state's region {}", self.region)))
            })
            .collect()
    }

    pub(crate) fn same_space(&self, other: &DensityMatrix) -> Result<()> {
        if self.region != other.region || self.dims() != other.dims() {
            return Err(Error::Shape(format!(
                "states live on different spaces: {} with dims {:?} vs {} with dims {:?}",
                self.region,
                self.dims(),
                other.region,
                other.dims()
            )));
        }
        Ok(())
    }
}

/// Reduced density matrix on `keep`, a subset of the state's region.
pub fn partial_trace(state: &DensityMatrix, keep: &Region) -> Result<DensityMatrix> {
    let positions = state.positions_of(keep)?;
    if positions.len() == state.region.len() {
        return Ok(state.clone());
    }
    let matrix = linalg::partial_trace(&state.matrix, &state.dims(), &positions);
    Ok(DensityMatrix::from_parts(state.layout.select(&positions), keep.clone(), matrix))
}

/// Trace norm of `a - b`, in `[0, 2]` for valid states.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    a.same_space(b)?;
    Ok(linalg::trace_norm_hermitian(&(&a.matrix - &b.matrix)))
}

/// Kronecker product of states on disjoint regions, factors ordered by site index.
pub fn tensor_product(a: &DensityMatrix, b: &DensityMatrix) -> Result<DensityMatrix> {
    if !a.region.is_disjoint(&b.region) {
        return Err(Error::Composition(format!("regions {} and {} overlap", a.region, b.region)));
    }
    let mut sites = a.layout.sites().to_vec();
    sites.extend(b.layout.sites().iter().cloned());
    let layout = SystemLayout::new(sites).map_err(|e| Error::Composition(e.to_string()))?;
    let joint: Vec<usize> = a.region.iter().chain(b.region.iter()).collect();
    let mut order: Vec<usize> = (0..joint.len()).collect();
    order.sort_by_key(|&i| joint[i]);
    let raw = linalg::kron(&a.matrix, &b.matrix);
    let matrix = linalg::permute_sites(&raw, &layout.dims(), &order);
    let layout = layout.select(&order);
    let region = a.region.union(&b.region);
    Ok(DensityMatrix::from_parts(layout, region, matrix))
}

/// Nearest density matrix under the two-step rule: Hermitize, clip negative
/// eigenvalues to zero, then rescale to unit trace.
pub fn project_matrix(m: &CMatrix) -> Result<CMatrix> {
    if m.nrows() != m.ncols() {
        return Err(Error::Shape(format!("matrix is {}x{}", m.nrows(), m.ncols())));
    }
    let (values, vectors) = linalg::eigh(m);
    let clipped: Vec<f64> = values.iter().map(|&v| v.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    if total <= ZERO_EIGENVALUE {
        return Err(Error::Degenerate("no positive spectrum left after clipping".into()));
    }
    let scaled: Vec<f64> = clipped.iter().map(|v| v / total).collect();
    Ok(linalg::from_spectrum(&scaled, &vectors))
}

pub fn project_to_density(layout: SystemLayout, m: &CMatrix) -> Result<DensityMatrix> {
    let d = layout.total_dim();
    if m.nrows() != d || m.ncols() != d {
        return Err(Error::Shape(format!("matrix is {}x{}, layout requires {d}x{d}", m.nrows(), m.ncols())));
    }
    let region = Region::full(layout.len());
    Ok(DensityMatrix::from_parts(layout, region, project_matrix(m)?))
}

/// Projects a matrix that lives on the same space as `like`.
pub(crate) fn project_like(like: &DensityMatrix, m: &CMatrix) -> Result<DensityMatrix> {
    Ok(DensityMatrix::from_parts(like.layout.clone(), like.region.clone(), project_matrix(m)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{bell_pair, ghz_state};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn ket0() -> DensityMatrix {
        DensityMatrix::from_diagonal(SystemLayout::qubits(1).unwrap(), &[1.0, 0.0]).unwrap()
    }

    fn ket1() -> DensityMatrix {
        DensityMatrix::from_diagonal(SystemLayout::qubits(1).unwrap(), &[0.0, 1.0]).unwrap()
    }

    fn plus() -> DensityMatrix {
        let m = CMatrix::from_element(2, 2, c(0.5));
        DensityMatrix::new(SystemLayout::qubits(1).unwrap(), m).unwrap()
    }

    #[test]
    fn validation_rejects_bad_matrices() {
        let l = SystemLayout::qubits(1).unwrap();
        let non_herm = CMatrix::from_row_slice(2, 2, &[c(0.5), c(0.1), c(0.0), c(0.5)]);
        assert!(matches!(DensityMatrix::new(l.clone(), non_herm), Err(Error::Validation(_))));
        let bad_trace = CMatrix::from_diagonal_element(2, 2, c(0.6));
        assert!(matches!(DensityMatrix::new(l.clone(), bad_trace), Err(Error::Validation(_))));
        let negative = CMatrix::from_row_slice(2, 2, &[c(1.1), c(0.0), c(0.0), c(-0.1)]);
        assert!(matches!(DensityMatrix::new(l.clone(), negative), Err(Error::Validation(_))));
        let wrong = CMatrix::identity(3, 3);
        assert!(matches!(DensityMatrix::new(l, wrong), Err(Error::Shape(_))));
    }

    #[test]
    fn trace_out_product_factor() {
        let prod = tensor_product(&ket0(), &plus().on_region(Region::single(1)).unwrap()).unwrap();
        let a = partial_trace(&prod, &Region::single(0)).unwrap();
        assert!((a.matrix() - ket0().matrix()).norm() < 1e-12);
    }

    #[test]
    fn bell_marginal_is_maximally_mixed() {
        let bell = bell_pair().to_density();
        let a = partial_trace(&bell, &Region::single(0)).unwrap();
        let half = CMatrix::identity(2, 2) * c(0.5);
        assert!((a.matrix() - half).norm() < 1e-12);
    }

    #[test]
    fn partial_trace_rejects_foreign_sites() {
        let bell = bell_pair().to_density();
        assert!(matches!(partial_trace(&bell, &Region::single(2)), Err(Error::Index(_))));
    }

    #[test]
    fn empty_region_marginal_is_scalar_one() {
        let g = ghz_state(3).unwrap().to_density();
        let e = partial_trace(&g, &Region::empty()).unwrap();
        assert_eq!(e.dim(), 1);
        assert!((e.matrix()[(0, 0)] - c(1.0)).norm() < 1e-12);
    }

    #[test]
    fn trace_distance_basic_cases() {
        assert!(trace_distance(&plus(), &plus()).unwrap().abs() < 1e-12);
        assert!((trace_distance(&ket0(), &ket1()).unwrap() - 2.0).abs() < 1e-12);
        let two = bell_pair().to_density();
        assert!(matches!(trace_distance(&ket0(), &two), Err(Error::Shape(_))));
    }

    #[test]
    fn tensor_product_of_mixed_qubits() {
        let mixed = DensityMatrix::maximally_mixed(SystemLayout::qubits(1).unwrap());
        let other = mixed.clone().on_region(Region::single(1)).unwrap();
        let prod = tensor_product(&mixed, &other).unwrap();
        let quarter = CMatrix::identity(4, 4) * c(0.25);
        assert!((prod.matrix() - quarter).norm() < 1e-12);
        assert_eq!(prod.layout().labels(), vec!["s0", "s1"]);
        assert!(matches!(tensor_product(&mixed, &mixed), Err(Error::Composition(_))));
    }

    #[test]
    fn tensor_product_orders_factors_by_site() {
        let a = ket1().on_region(Region::single(2)).unwrap();
        let b = plus();
        let ab = tensor_product(&a, &b).unwrap();
        let ba = tensor_product(&b, &a).unwrap();
        assert_eq!(ab.region().indices(), &[0, 2]);
        assert!((ab.matrix() - ba.matrix()).norm() < 1e-12);
        let back = partial_trace(&ab, &Region::single(2)).unwrap();
        assert!((back.matrix() - ket1().matrix()).norm() < 1e-12);
    }

    #[test]
    fn projection_clips_and_renormalizes() {
        let m = CMatrix::from_row_slice(2, 2, &[c(1.1), c(0.0), c(0.0), c(-0.1)]);
        let p = project_to_density(SystemLayout::qubits(1).unwrap(), &m).unwrap();
        assert!((p.matrix() - ket0().matrix()).norm() < 1e-12);
        let fixed = project_to_density(SystemLayout::qubits(1).unwrap(), plus().matrix()).unwrap();
        assert!((fixed.matrix() - plus().matrix()).norm() < 1e-12);
        let neg = CMatrix::from_diagonal_element(2, 2, c(-1.0));
        assert!(matches!(project_matrix(&neg), Err(Error::Degenerate(_))));
    }
}
