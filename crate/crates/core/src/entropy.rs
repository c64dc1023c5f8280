//! Von Neumann entropy calculus in nats.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{partial_trace, trace_distance, DensityMatrix, Region, Tolerances, ZERO_EIGENVALUE};

/// Negative CMI / weak-monotonicity values no worse than this are numerical noise.
pub const NEGATIVITY_TOL: f64 = 1e-9;

/// `-Σ λ ln λ` over eigenvalues above the zero floor.
pub fn entropy_of_spectrum(eigenvalues: &[f64]) -> f64 {
    eigenvalues.iter().filter(|&&l| l > ZERO_EIGENVALUE).map(|&l| -l * l.ln()).sum()
}

pub fn entropy(state: &DensityMatrix) -> Result<f64> {
    let ev = state.eigenvalues();
    let tol = Tolerances::default().psd;
    if let Some(&min) = ev.first() {
        if min < -tol {
            return Err(Error::Validation(format!("entropy of a non-PSD operator (minimum eigenvalue {min:.3e})")));
        }
    }
    Ok(entropy_of_spectrum(&ev))
}

/// Entropy of the marginal on `region`; the empty region has entropy 0.
pub fn region_entropy(state: &DensityMatrix, region: &Region) -> Result<f64> {
    if region.is_empty() {
        state.positions_of(region)?;
        return Ok(0.0);
    }
    entropy(&partial_trace(state, region)?)
}

fn require_disjoint(regions: &[&Region]) -> Result<()> {
    for (i, a) in regions.iter().enumerate() {
        for b in &regions[i + 1..] {
            if !a.is_disjoint(b) {
                return Err(Error::Region(format!("regions {a} and {b} overlap")));
            }
        }
    }
    Ok(())
}

/// Memoizes marginal entropies of one state for the duration of a computation.
pub struct EntropyCache<'a> {
    state: &'a DensityMatrix,
    memo: HashMap<Region, f64>,
}

impl<'a> EntropyCache<'a> {
    pub fn new(state: &'a DensityMatrix) -> Self {
        EntropyCache { state, memo: HashMap::new() }
    }

    pub fn state(&self) -> &DensityMatrix {
        self.state
    }

    pub fn entropy(&mut self, region: &Region) -> Result<f64> {
        if let Some(&s) = self.memo.get(region) {
            return Ok(s);
        }
        let s = region_entropy(self.state, region)?;
        self.memo.insert(region.clone(), s);
        Ok(s)
    }

    /// `S(a|b) = S(ab) - S(b)`.
    pub fn conditional(&mut self, a: &Region, b: &Region) -> Result<f64> {
        require_disjoint(&[a, b])?;
        Ok(self.entropy(&a.union(b))? - self.entropy(b)?)
    }

    pub fn mutual_information(&mut self, a: &Region, b: &Region) -> Result<f64> {
        require_disjoint(&[a, b])?;
        Ok(self.entropy(a)? + self.entropy(b)? - self.entropy(&a.union(b))?)
    }

    /// `I(a:c|b) = S(a|b) - S(a|bc)`.
    pub fn cmi(&mut self, a: &Region, b: &Region, c: &Region) -> Result<f64> {
        require_disjoint(&[a, b, c])?;
        let bc = b.union(c);
        Ok(self.conditional(a, b)? - self.conditional(a, &bc)?)
    }

    /// `S(a|b) + S(a|c)`.
    pub fn weak_monotonicity(&mut self, a: &Region, b: &Region, c: &Region) -> Result<f64> {
        require_disjoint(&[a, b, c])?;
        Ok(self.conditional(a, b)? + self.conditional(a, c)?)
    }
}

pub fn conditional_entropy(state: &DensityMatrix, a: &Region, b: &Region) -> Result<f64> {
    EntropyCache::new(state).conditional(a, b)
}

pub fn mutual_information(state: &DensityMatrix, a: &Region, b: &Region) -> Result<f64> {
    EntropyCache::new(state).mutual_information(a, b)
}

/// Conditional mutual information `I(A:C|B)`; nonnegative by strong subadditivity.
pub fn cmi(state: &DensityMatrix, a: &Region, b: &Region, c: &Region) -> Result<f64> {
    EntropyCache::new(state).cmi(a, b, c)
}

/// `S(A|B) + S(A|C)`; nonnegative for every state.
pub fn weak_monotonicity(state: &DensityMatrix, a: &Region, b: &Region, c: &Region) -> Result<f64> {
    EntropyCache::new(state).weak_monotonicity(a, b, c)
}

/// `H(x) = -x ln x - (1-x) ln(1-x)`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("binary entropy argument {x} outside [0, 1]")));
    }
    let term = |p: f64| if p > 0.0 { -p * p.ln() } else { 0.0 };
    Ok(term(x) + term(1.0 - x))
}

/// Per-site terms `4 ε_k ln d_k + 2 H(ε_k)` of the continuity correction.
pub fn continuity_terms(epsilons: &[f64], dims: &[usize]) -> Result<Vec<f64>> {
    if epsilons.len() != dims.len() {
        return Err(Error::Shape(format!("{} epsilons for {} sites", epsilons.len(), dims.len())));
    }
    epsilons
        .iter()
        .zip(dims)
        .map(|(&eps, &d)| {
            if d == 0 {
                return Err(Error::Domain("site dimension 0".into()));
            }
            Ok(4.0 * eps * (d as f64).ln() + 2.0 * binary_entropy(eps)?)
        })
        .collect()
}

/// `Σ_k (4 ε_k ln d_k + 2 H(ε_k))`.
pub fn continuity_correction(epsilons: &[f64], dims: &[usize]) -> Result<f64> {
    Ok(continuity_terms(epsilons, dims)?.iter().sum())
}

/// Correction with a single `ε` shared by every site.
pub fn uniform_continuity_correction(epsilon: f64, dims: &[usize]) -> Result<f64> {
    continuity_correction(&vec![epsilon; dims.len()], dims)
}

/// `S(cρ + (1-c)σ) - c S(ρ) - (1-c) S(σ)`, bounded below by `½ c(1-c) |ρ-σ|₁²`.
pub fn concavity_gap(rho: &DensityMatrix, sigma: &DensityMatrix, c: f64) -> Result<f64> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::Domain(format!("mixing weight {c} outside (0, 1)")));
    }
    rho.same_space(sigma)?;
    let mixed =
        rho.matrix() * num_complex::Complex64::new(c, 0.0) + sigma.matrix() * num_complex::Complex64::new(1.0 - c, 0.0);
    let mix = crate::linalg::eigvalsh(&mixed);
    Ok(entropy_of_spectrum(&mix) - c * entropy(rho)? - (1.0 - c) * entropy(sigma)?)
}

/// Lower bound `½ c(1-c) |ρ-σ|₁²` paired with [`concavity_gap`].
pub fn concavity_lower_bound(rho: &DensityMatrix, sigma: &DensityMatrix, c: f64) -> Result<f64> {
    let t = trace_distance(rho, sigma)?;
    Ok(0.5 * c * (1.0 - c) * t * t)
}

/// Clamps noise-level negatives (down to `-NEGATIVITY_TOL`) to zero.
pub fn clamp_noise(value: f64) -> f64 {
    if (-NEGATIVITY_TOL..0.0).contains(&value) {
        0.0
    } else {
        value
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantityKind {
    ConditionalEntropy,
    MutualInformation,
    Cmi,
    WeakMonotonicity,
}

impl QuantityKind {
    fn arity(self) -> usize {
        match self {
            QuantityKind::ConditionalEntropy | QuantityKind::MutualInformation => 2,
            QuantityKind::Cmi | QuantityKind::WeakMonotonicity => 3,
        }
    }
}

/// A requested derived quantity. `c` is only used by three-region kinds.
#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub kind: QuantityKind,
    pub a: Region,
    pub b: Region,
    pub c: Option<Region>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionEntropy {
    pub sites: Region,
    pub entropy_nats: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    pub kind: QuantityKind,
    pub a: Region,
    pub b: Region,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Region>,
    /// Reported value; CMI and weak-monotonicity noise negatives are clamped to 0.
    pub value: f64,
    /// Unclamped value as computed.
    pub raw: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EntropyReport {
    pub regions: Vec<RegionEntropy>,
    pub quantities: Vec<Quantity>,
}

impl EntropyReport {
    pub fn compute(state: &DensityMatrix, regions: &[Region], queries: &[Query]) -> Result<Self> {
        let mut cache = EntropyCache::new(state);
        let regions = regions
            .iter()
            .map(|r| Ok(RegionEntropy { sites: r.clone(), entropy_nats: cache.entropy(r)? }))
            .collect::<Result<Vec<_>>>()?;
        let quantities = queries
            .iter()
            .map(|q| {
                let c = match (q.kind.arity(), &q.c) {
                    (3, Some(c)) => Some(c),
                    (3, None) => return Err(Error::Region(format!("{:?} needs three regions", q.kind))),
                    _ => None,
                };
                let raw = match q.kind {
                    QuantityKind::ConditionalEntropy => cache.conditional(&q.a, &q.b)?,
                    QuantityKind::MutualInformation => cache.mutual_information(&q.a, &q.b)?,
                    QuantityKind::Cmi => cache.cmi(&q.a, &q.b, c.unwrap())?,
                    QuantityKind::WeakMonotonicity => cache.weak_monotonicity(&q.a, &q.b, c.unwrap())?,
                };
                let value = match q.kind {
                    QuantityKind::Cmi | QuantityKind::WeakMonotonicity => clamp_noise(raw),
                    _ => raw,
                };
                Ok(Quantity { kind: q.kind, a: q.a.clone(), b: q.b.clone(), c: c.cloned(), value, raw })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(EntropyReport { regions, quantities })
    }
}
