//! Simulated local tomography, verification against a known target, and a
//! small alternating-projection search for a state consistent with marginals.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::bundle::RdmBundle;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, ONE, ZERO};
use crate::markov::{certificate, CertificateReport, ShieldPlan, TRACE_DISTANCE_MAX};
use crate::state::{
    partial_trace, project_like, project_matrix, rng_from_seed, trace_distance, DensityMatrix, Region, SystemLayout,
};

/// Largest total dimension accepted by [`find_consistent_state`].
pub const CONSISTENT_MAX_DIM: usize = 1 << 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasurementScheme {
    /// Every product of single-qubit X, Y, Z eigenbases.
    #[default]
    Pauli,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementPlan {
    pub regions: Vec<Region>,
    /// Shots per region, split evenly over the measurement settings.
    pub shots: u64,
    #[serde(default)]
    pub scheme: MeasurementScheme,
    #[serde(default)]
    pub seed: u64,
}

impl MeasurementPlan {
    /// One region per certificate window of `plan`, duplicates removed.
    pub fn for_plan(plan: &ShieldPlan, shots: u64, seed: u64) -> Self {
        let mut regions: Vec<Region> = Vec::new();
        for r in crate::markov::certificate_regions(plan) {
            if !regions.contains(&r) {
                regions.push(r);
            }
        }
        MeasurementPlan { regions, shots, scheme: MeasurementScheme::Pauli, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.shots == 0 {
            return Err(Error::Domain("at least one shot per region is required".into()));
        }
        if self.regions.is_empty() {
            return Err(Error::Domain("measurement plan has no regions".into()));
        }
        Ok(())
    }

    /// Simulates every region with its own seed stream.
    pub fn simulate(&self, state: &DensityMatrix) -> Result<RdmBundle> {
        self.validate()?;
        let rdms = self
            .regions
            .iter()
            .map(|r| simulate_region_tomography(state, r, self.shots, self.scheme, region_seed(self.seed, r)))
            .collect::<Result<_>>()?;
        Ok(RdmBundle::new(rdms))
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable per-region seed: independent of process, platform and region order.
pub fn region_seed(seed: u64, region: &Region) -> u64 {
    region.iter().fold(splitmix64(seed), |h, s| splitmix64(h ^ s as u64))
}

/// How outcome frequencies are obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sampling {
    Shots {
        shots: u64,
        seed: u64,
    },
    /// Exact outcome probabilities, the infinite-shot limit.
    Exact,
}

/// Estimated expectation of one Pauli string, e.g. `"XIZ"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PauliExpectation {
    pub label: String,
    pub value: f64,
}

const LETTERS: [char; 4] = ['I', 'X', 'Y', 'Z'];

fn pauli(letter: usize) -> CMatrix {
    let i = Complex64::new(0.0, 1.0);
    match letter {
        0 => CMatrix::identity(2, 2),
        1 => CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        2 => CMatrix::from_row_slice(2, 2, &[ZERO, -i, i, ZERO]),
        _ => CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
    }
}

/// Unitary taking the eigenbasis of X, Y or Z (0, 1, 2) to the computational basis.
fn basis_rotation(setting: usize) -> CMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let hadamard = CMatrix::from_row_slice(2, 2, &[ONE, ONE, ONE, -ONE]) * Complex64::new(h, 0.0);
    match setting {
        0 => hadamard,
        1 => {
            let s_dag = CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, Complex64::new(0.0, -1.0)]);
            hadamard * s_dag
        }
        _ => CMatrix::identity(2, 2),
    }
}

fn digits(mut value: usize, base: usize, n: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    for d in out.iter_mut().rev() {
        *d = value % base;
        value /= base;
    }
    out
}

fn multinomial(shots: u64, probs: &[f64], rng: &mut impl Rng) -> Vec<u64> {
    let mut counts = vec![0; probs.len()];
    let mut left = shots;
    let mut mass: f64 = probs.iter().sum();
    for (i, &p) in probs.iter().enumerate() {
        if left == 0 {
            break;
        }
        if i + 1 == probs.len() || mass <= 0.0 {
            counts[i] = left;
            break;
        }
        let q = (p / mass).clamp(0.0, 1.0);
        let k = Binomial::new(left, q).expect("probability clamped to [0, 1]").sample(rng);
        counts[i] = k;
        left -= k;
        mass -= p;
    }
    counts
}

fn qubit_rdm(state: &DensityMatrix, region: &Region, scheme: MeasurementScheme) -> Result<DensityMatrix> {
    if region.is_empty() {
        return Err(Error::Domain("cannot do tomography on an empty region".into()));
    }
    let rdm = partial_trace(state, region)?;
    match scheme {
        MeasurementScheme::Pauli => {
            if let Some(s) = region.iter().find(|&s| rdm.site_dim(s) != Some(2)) {
                return Err(Error::Scheme(format!(
                    "Pauli scheme needs qubits, site {s} has dimension {}",
                    rdm.site_dim(s).unwrap_or(0)
                )));
            }
        }
    }
    Ok(rdm)
}

/// Pauli expectations averaged over every setting compatible with each string.
fn pauli_estimates(rdm: &DensityMatrix, sampling: Sampling) -> Vec<f64> {
    let n = rdm.region().len();
    let d = 1usize << n;
    let settings = 3usize.pow(n as u32);
    let mut rng = match sampling {
        Sampling::Shots { seed, .. } => Some(rng_from_seed(seed)),
        Sampling::Exact => None,
    };
    let mut sum = vec![0.0; 4usize.pow(n as u32)];
    let mut count = vec![0u64; sum.len()];
    for s in 0..settings {
        let letters = digits(s, 3, n);
        let u =
            letters.iter().map(|&l| basis_rotation(l)).reduce(|a, b| linalg::kron(&a, &b)).expect("region is nonempty");
        let rotated = &u * rdm.matrix() * u.adjoint();
        let probs: Vec<f64> = (0..d).map(|o| rotated[(o, o)].re.max(0.0)).collect();
        let freqs: Vec<f64> = match (&mut rng, sampling) {
            (Some(rng), Sampling::Shots { shots, .. }) => {
                let per = shots / settings as u64 + u64::from((s as u64) < shots % settings as u64);
                if per == 0 {
                    continue;
                }
                multinomial(per, &probs, rng).iter().map(|&c| c as f64 / per as f64).collect()
            }
            _ => {
                let total: f64 = probs.iter().sum();
                probs.iter().map(|p| p / total).collect()
            }
        };
        // Subset `mask` of sites (bit n-1-i for site i) selects the Pauli string
        // with this setting's letter on those sites and identity elsewhere.
        for mask in 0..d {
            let value: f64 =
                freqs.iter().enumerate().map(|(o, f)| if (o & mask).count_ones() % 2 == 0 { *f } else { -*f }).sum();
            let key = (0..n).fold(0usize, |acc, i| {
                let on = mask >> (n - 1 - i) & 1 == 1;
                acc * 4 + if on { letters[i] + 1 } else { 0 }
            });
            sum[key] += value;
            count[key] += 1;
        }
    }
    sum.iter().zip(&count).map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 }).collect()
}

fn pauli_label(key: usize, n: usize) -> String {
    digits(key, 4, n).iter().map(|&l| LETTERS[l]).collect()
}

/// Estimated expectations of every Pauli string on `region`.
pub fn estimate_pauli_expectations(
    state: &DensityMatrix,
    region: &Region,
    sampling: Sampling,
) -> Result<Vec<PauliExpectation>> {
    let rdm = qubit_rdm(state, region, MeasurementScheme::Pauli)?;
    let n = region.len();
    Ok(pauli_estimates(&rdm, sampling)
        .into_iter()
        .enumerate()
        .map(|(key, value)| PauliExpectation { label: pauli_label(key, n), value })
        .collect())
}

/// Linear inversion `ρ = 2^{-n} Σ_P ⟨P⟩ P` from estimated expectations.
fn invert(expectations: &[f64], n: usize) -> CMatrix {
    let d = 1usize << n;
    let mut m = CMatrix::zeros(d, d);
    for (key, &e) in expectations.iter().enumerate() {
        if e == 0.0 {
            continue;
        }
        let letters = digits(key, 4, n);
        let ops: Vec<CMatrix> = letters.iter().map(|&l| pauli(l)).collect();
        let flip = letters.iter().fold(0usize, |acc, &l| acc * 2 + usize::from(l == 1 || l == 2));
        for r in 0..d {
            let c = r ^ flip;
            let mut v = Complex64::new(e / d as f64, 0.0);
            for (i, op) in ops.iter().enumerate() {
                let shift = n - 1 - i;
                v *= op[((r >> shift) & 1, (c >> shift) & 1)];
            }
            m[(r, c)] += v;
        }
    }
    m
}

fn tomography(
    state: &DensityMatrix,
    region: &Region,
    scheme: MeasurementScheme,
    sampling: Sampling,
) -> Result<DensityMatrix> {
    let rdm = qubit_rdm(state, region, scheme)?;
    let estimate = invert(&pauli_estimates(&rdm, sampling), region.len());
    project_like(&rdm, &estimate)
}

/// Shot-noise tomography of the marginal of `state` on `region`, followed by
/// linear inversion and projection to a density matrix.
pub fn simulate_region_tomography(
    state: &DensityMatrix,
    region: &Region,
    shots: u64,
    scheme: MeasurementScheme,
    seed: u64,
) -> Result<DensityMatrix> {
    if shots == 0 {
        return Err(Error::Domain("at least one shot is required".into()));
    }
    tomography(state, region, scheme, Sampling::Shots { shots, seed })
}

/// Tomography with exact outcome probabilities.
pub fn exact_region_tomography(
    state: &DensityMatrix,
    region: &Region,
    scheme: MeasurementScheme,
) -> Result<DensityMatrix> {
    tomography(state, region, scheme, Sampling::Exact)
}

pub fn epsilon_against_target(estimated: &DensityMatrix, target: &DensityMatrix) -> Result<f64> {
    trace_distance(estimated, target)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionEpsilon {
    pub site: usize,
    pub region: Region,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Verdict {
    CertifiedClose { bound: f64 },
    NotCertified { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationVerdict {
    pub epsilons: Vec<RegionEpsilon>,
    pub certificate: CertificateReport,
    /// Capped bound on the trace distance between prepared and target states.
    pub bound: f64,
    pub verdict: Verdict,
}

impl VerificationVerdict {
    pub fn is_certified(&self) -> bool {
        matches!(self.verdict, Verdict::CertifiedClose { .. })
    }
}

/// Compares measured marginals against the target's and bounds the global distance.
///
/// Certificate terms come from the target marginals; each site's `ε` is the
/// trace distance between measured and target marginals on its full window.
pub fn verify(measured: &RdmBundle, target: &RdmBundle, plan: &ShieldPlan) -> Result<VerificationVerdict> {
    plan.check(&plan.sites())?;
    let n = plan.sites().iter().max().map_or(0, |m| m + 1);
    let mut by_site = vec![0.0; n];
    let mut epsilons = Vec::with_capacity(plan.ordering.len());
    for shield in plan.ordered_shields() {
        let window = shield.window();
        let k = shield.site;
        let ctx = |e: Error| e.context(format!("site {k}"));
        let m = measured.marginal(&window).map_err(|e| ctx(e.context("measured marginals")))?;
        let t = target.marginal(&window).map_err(|e| ctx(e.context("target marginals")))?;
        let epsilon = epsilon_against_target(&m, &t).map_err(ctx)?;
        by_site[k] = epsilon;
        epsilons.push(RegionEpsilon { site: k, region: window, epsilon });
    }
    let worst = epsilons.iter().map(|e| e.epsilon).fold(0.0, f64::max);
    let certificate = if worst <= 1.0 { certificate(target, plan, &by_site)? } else { certificate(target, plan, &[])? };
    let bound = certificate.bound_capped;
    let verdict = if !plan.remainder.is_empty() {
        Verdict::NotCertified { reason: format!("plan leaves {} site(s) unshielded", plan.remainder.len()) }
    } else if worst > 1.0 {
        Verdict::NotCertified { reason: format!("marginal error {worst:.3e} exceeds 1") }
    } else if certificate.bound_raw >= TRACE_DISTANCE_MAX {
        Verdict::NotCertified { reason: format!("bound {:.6} is not below 2", certificate.bound_raw) }
    } else {
        Verdict::CertifiedClose { bound }
    };
    Ok(VerificationVerdict {
        epsilons,
        bound: if matches!(verdict, Verdict::CertifiedClose { .. }) { bound } else { TRACE_DISTANCE_MAX },
        certificate,
        verdict,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalResidual {
    pub region: Region,
    pub distance: f64,
}

/// Result of [`find_consistent_state`]; on failure `state` is the best iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyOutcome {
    pub converged: bool,
    pub iterations: usize,
    pub max_residual: f64,
    pub residuals: Vec<MarginalResidual>,
    pub state: DensityMatrix,
}

/// The per-marginal correction applied before each projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarginalCorrection {
    /// `ρ ← (A ⊗ I) ρ (A ⊗ I)†` with `A = τ_R^{1/2} ρ_R^{-1/2}`: keeps `ρ`
    /// positive and fixes the marginal exactly when supports allow.
    #[default]
    Scaling,
    /// `ρ ← ρ + (τ_R − ρ_R) ⊗ I / d_rest`. Slow when the consistent set
    /// touches the boundary of the PSD cone, e.g. for pure marginals.
    Affine,
}

fn residuals(state: &DensityMatrix, rdms: &RdmBundle) -> Result<Vec<MarginalResidual>> {
    rdms.rdms()
        .iter()
        .map(|r| {
            let here = partial_trace(state, r.region())?;
            Ok(MarginalResidual { region: r.region().clone(), distance: trace_distance(&here, r)? })
        })
        .collect()
}

/// Heuristic search for a global state with the given marginals, using the
/// default [`MarginalCorrection`].
pub fn find_consistent_state(
    rdms: &RdmBundle,
    layout: &SystemLayout,
    max_iters: usize,
    tol: f64,
) -> Result<ConsistencyOutcome> {
    find_consistent_state_with(rdms, layout, max_iters, tol, MarginalCorrection::default())
}

/// Starting from the maximally mixed state, sweeps over the marginals, applying
/// `correction` for each and projecting back onto density matrices, until every
/// marginal is within `tol` in trace distance or `max_iters` sweeps have run.
///
/// There is no completeness claim: failure to converge does not prove the
/// marginals incompatible.
pub fn find_consistent_state_with(
    rdms: &RdmBundle,
    layout: &SystemLayout,
    max_iters: usize,
    tol: f64,
    correction: MarginalCorrection,
) -> Result<ConsistencyOutcome> {
    let d = layout.total_dim();
    if d > CONSISTENT_MAX_DIM {
        return Err(Error::Capacity { dim: d, max: CONSISTENT_MAX_DIM });
    }
    let full = Region::full(layout.len());
    let dims = layout.dims();
    let mut targets = Vec::with_capacity(rdms.len());
    for r in rdms.rdms() {
        if !r.region().is_subset(&full) {
            return Err(Error::Index(format!("marginal on {} lies outside {} sites", r.region(), layout.len())));
        }
        let positions = r.region().positions_in(&full)?;
        if positions.iter().map(|&p| dims[p]).collect::<Vec<_>>() != r.dims() {
            return Err(Error::Shape(format!("marginal on {} disagrees with the layout dimensions", r.region())));
        }
        let root = match correction {
            MarginalCorrection::Scaling => Some(crate::recovery::matrix_sqrt(r.matrix())?),
            MarginalCorrection::Affine => None,
        };
        targets.push((r, positions, root));
    }
    let mut state = DensityMatrix::maximally_mixed(layout.clone());
    let worst = |rs: &[MarginalResidual]| rs.iter().map(|r| r.distance).fold(0.0, f64::max);
    let res = residuals(&state, rdms)?;
    let mut best = (worst(&res), state.clone(), res);
    let mut iterations = 0;
    'sweeps: while best.0 > tol && iterations < max_iters {
        iterations += 1;
        let mut m = state.matrix().clone();
        for (target, positions, root) in &targets {
            let here = linalg::partial_trace(&m, &dims, positions);
            match root {
                Some(root) => {
                    let a = root * crate::recovery::pinv_sqrt(&here, crate::recovery::RANK_TOL)?;
                    let a = linalg::embed(&a, &dims, positions);
                    m = &a * m * a.adjoint();
                }
                None => {
                    let rest = (d / target.dim()) as f64;
                    let delta = (target.matrix() - here) * Complex64::new(1.0 / rest, 0.0);
                    m += linalg::embed(&delta, &dims, positions);
                }
            }
            m = match project_matrix(&m) {
                Ok(m) => m,
                Err(Error::Degenerate(_)) => {
                    log::warn!("iterate vanished after matching the marginal on {}", target.region());
                    break 'sweeps;
                }
                Err(e) => return Err(e),
            };
        }
        state = project_like(&state, &m)?;
        let res = residuals(&state, rdms)?;
        let w = worst(&res);
        if w < best.0 {
            best = (w, state.clone(), res);
        }
    }
    let (max_residual, state, residuals) = best;
    Ok(ConsistencyOutcome { converged: max_residual <= tol, iterations, max_residual, residuals, state })
}
