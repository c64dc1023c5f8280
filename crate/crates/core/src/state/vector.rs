use nalgebra::DVector;
use num_complex::Complex64;

use super::density::DensityMatrix;
use super::layout::{auto_label, Site, SystemLayout};
use super::region::Region;
use crate::error::{Error, Result};
use crate::linalg::ZERO;

const NORM_TOL: f64 = 1e-9;

/// A normalized pure state on sites `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    layout: SystemLayout,
    amplitudes: DVector<Complex64>,
}

impl StateVector {
    pub fn new(layout: SystemLayout, amplitudes: DVector<Complex64>) -> Result<Self> {
        if amplitudes.len() != layout.total_dim() {
            return Err(Error::Shape(format!("{} amplitudes for dimension {}", amplitudes.len(), layout.total_dim())));
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::Validation(format!("state vector norm is {norm}, expected 1")));
        }
        Ok(StateVector { layout, amplitudes })
    }

    /// Rescales `amplitudes` to unit norm before wrapping them.
    pub fn normalized(layout: SystemLayout, amplitudes: DVector<Complex64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 {
            return Err(Error::Degenerate("zero state vector".into()));
        }
        Self::new(layout, amplitudes.unscale(norm))
    }

    /// Computational basis state `|index>`.
    pub fn basis(layout: SystemLayout, index: usize) -> Result<Self> {
        let d = layout.total_dim();
        if index >= d {
            return Err(Error::Index(format!("basis index {index} >= dimension {d}")));
        }
        let mut v = DVector::from_element(d, ZERO);
        v[index] = Complex64::new(1.0, 0.0);
        Ok(StateVector { layout, amplitudes: v })
    }

    pub fn layout(&self) -> &SystemLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    /// `|self> ⊗ |other>`, with `other`'s sites numbered after `self`'s.
    pub fn tensor(&self, other: &StateVector) -> Result<StateVector> {
        let offset = self.layout.len();
        let mut sites = self.layout.sites().to_vec();
        sites.extend(other.layout.sites().iter().enumerate().map(|(i, s)| {
            if s.label == auto_label(i) {
                Site { label: auto_label(i + offset), dim: s.dim }
            } else {
                s.clone()
            }
        }));
        let layout = SystemLayout::new(sites).map_err(|e| Error::Composition(e.to_string()))?;
        let amplitudes = self.amplitudes.kronecker(&other.amplitudes);
        Ok(StateVector { layout, amplitudes })
    }

    /// `|v><v|`.
    pub fn to_density(&self) -> DensityMatrix {
        let m = &self.amplitudes * self.amplitudes.adjoint();
        DensityMatrix::from_parts(self.layout.clone(), Region::full(self.layout.len()), m)
    }
}

/// `(|00> + |11>)/√2`.
pub fn bell_pair() -> StateVector {
    ghz_state(2).expect("two qubits fit")
}

/// `(|0…0> + |1…1>)/√2` on `n_qubits >= 2` qubits.
pub fn ghz_state(n_qubits: usize) -> Result<StateVector> {
    ghz_with_phase(n_qubits, 0.0)
}

/// `(|0…0> + e^{iφ}|1…1>)/√2`. Every proper marginal agrees with the GHZ state.
pub fn ghz_with_phase(n_qubits: usize, phase: f64) -> Result<StateVector> {
    if n_qubits < 2 {
        return Err(Error::Domain(format!("GHZ state needs at least 2 qubits, got {n_qubits}")));
    }
    let layout = SystemLayout::qubits(n_qubits)?;
    let d = layout.total_dim();
    let mut v = DVector::from_element(d, ZERO);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    v[0] = Complex64::new(h, 0.0);
    v[d - 1] = Complex64::from_polar(h, phase);
    Ok(StateVector { layout, amplitudes: v })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ghz2_is_bell() {
        assert_eq!(ghz_state(2).unwrap(), bell_pair());
        assert!(ghz_state(1).is_err());
    }

    #[test]
    fn ghz_overlap_with_all_zeros() {
        for n in 2..6 {
            let g = ghz_state(n).unwrap();
            assert!((g.amplitudes()[0].re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        }
    }

    #[test]
    fn to_density_is_rank_one() {
        let rho = ghz_state(3).unwrap().to_density();
        assert_eq!(rho.rank(), 1);
        assert!((rho.trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tensor_renumbers_auto_labels() {
        let v = bell_pair().tensor(&bell_pair()).unwrap();
        assert_eq!(v.layout().labels(), vec!["s0", "s1", "s2", "s3"]);
    }

    #[test]
    fn rejects_unnormalized() {
        let l = SystemLayout::qubits(1).unwrap();
        let v = DVector::from_element(2, Complex64::new(1.0, 0.0));
        assert!(StateVector::new(l.clone(), v.clone()).is_err());
        assert!(StateVector::normalized(l, v).is_ok());
    }
}
