//! Markov entropy decomposition and the trace-distance certificates built on it.
//!
//! For a site ordering with shields `M_k ⊂ {<k}` and `M_k' ⊂ {>k}`:
//!
//! * the Markov entropy `S_M = Σ_k S(k|M_k)` upper-bounds the entropy;
//! * `S_M - S ≤ Σ_k S(k|M_k) + S(k|M_k')`, where every term only needs the
//!   marginal on `k ∪ M_k ∪ M_k'`;
//! * two states that agree on all of those marginals satisfy
//!   `|ρ - σ|₁ ≤ 2^{3/2} (Σ_k S(k|M_k) + S(k|M_k'))^{1/2}`.
//!
//! When the marginals only agree up to `ε_k` in trace distance, the radicand
//! picks up `Σ_k 4 ε_k ln d_k + 2 H(ε_k)`.

mod plan;

use serde::{Deserialize, Serialize};

pub use plan::{PlanViolation, Shield, ShieldPlan};

use crate::bundle::RdmBundle;
use crate::entropy::{self, EntropyCache};
use crate::error::{Error, Result};
use crate::state::{partial_trace, trace_distance, DensityMatrix, Region};

/// `2^{3/2}`.
pub const BOUND_PREFACTOR: f64 = 2.0 * std::f64::consts::SQRT_2;

/// Marginals closer than this count as identical.
pub const MARGINAL_TOL: f64 = 1e-8;

/// Slack allowed when comparing the two sides of an entropy inequality.
pub const INEQUALITY_TOL: f64 = 1e-9;

/// Largest possible trace distance between states.
pub const TRACE_DISTANCE_MAX: f64 = 2.0;

/// `2^{3/2} sqrt(max(x, 0))`.
pub fn bound_from_radicand(x: f64) -> f64 {
    BOUND_PREFACTOR * x.max(0.0).sqrt()
}

/// `Σ_k S(k|M_k)`.
pub fn markov_entropy(state: &DensityMatrix, plan: &ShieldPlan) -> Result<f64> {
    plan.check(state.region())?;
    let mut cache = EntropyCache::new(state);
    let mut total = 0.0;
    for shield in plan.ordered_shields() {
        total += cache.conditional(&Region::single(shield.site), &shield.m)?;
    }
    Ok(total)
}

/// `S_M(ρ) - S(ρ)`.
pub fn med_gap(state: &DensityMatrix, plan: &ShieldPlan) -> Result<f64> {
    Ok(markov_entropy(state, plan)? - entropy::entropy(state)?)
}

/// One site's contribution `S(k|M_k) + S(k|M_k')`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiteTerm {
    pub site: usize,
    /// `S(k|M_k)`.
    pub backward: f64,
    /// `S(k|M_k')`.
    pub forward: f64,
    pub value: f64,
}

/// Evaluates a site term from a marginal that covers `k ∪ M_k ∪ M_k'`.
pub fn site_term(local: &DensityMatrix, shield: &Shield) -> Result<SiteTerm> {
    let window = shield.window();
    if !window.is_subset(local.region()) {
        return Err(Error::Plan(format!(
            "marginal on {} does not cover the window {window} of site {}",
            local.region(),
            shield.site
        )));
    }
    let local = partial_trace(local, &window)?;
    let mut cache = EntropyCache::new(&local);
    let k = Region::single(shield.site);
    let backward = cache.conditional(&k, &shield.m)?;
    let forward = cache.conditional(&k, &shield.m_prime)?;
    Ok(SiteTerm { site: shield.site, backward, forward, value: backward + forward })
}

/// `Σ_k S(k|M_k) + S(k|M_k')`, each term evaluated on the window marginal only.
pub fn med_gap_upper_bound(state: &DensityMatrix, plan: &ShieldPlan) -> Result<f64> {
    plan.check(state.region())?;
    let mut total = 0.0;
    for shield in plan.ordered_shields() {
        let local = partial_trace(state, &shield.window())?;
        total += site_term(&local, shield)?.value;
    }
    Ok(total)
}

/// `|S(ρ) - Σ_k S(k|{<k})|` along `ordering`.
pub fn chain_rule_check(state: &DensityMatrix, ordering: &[usize]) -> Result<f64> {
    let plan = ShieldPlan::unshielded(ordering.to_vec());
    plan.check(state.region())?;
    let mut cache = EntropyCache::new(state);
    let mut sum = 0.0;
    for (i, &k) in ordering.iter().enumerate() {
        let prefix = Region::new(ordering[..i].iter().copied())?;
        sum += cache.conditional(&Region::single(k), &prefix)?;
    }
    Ok((cache.entropy(state.region())? - sum).abs())
}

/// Outcome of checking an inequality `lhs ≤ rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl BoundCheck {
    fn new(lhs: f64, rhs: f64) -> Self {
        BoundCheck { lhs, rhs, holds: lhs <= rhs + INEQUALITY_TOL }
    }
}

/// `¼|ρ - σ|₁² ≤ I(A:C|B)_ρ + I(A:C|B)_σ` for states that agree on `AB` and `BC`.
///
/// Both states are first reduced to `A ∪ B ∪ C`.
pub fn tripartite_distance_bound(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    a: &Region,
    b: &Region,
    c: &Region,
) -> Result<BoundCheck> {
    rho.same_space(sigma)?;
    let abc = a.union(b).union(c);
    let rho = partial_trace(rho, &abc)?;
    let sigma = partial_trace(sigma, &abc)?;
    let mut mismatches = Vec::new();
    for (name, region) in [("AB", a.union(b)), ("BC", b.union(c))] {
        let d = trace_distance(&partial_trace(&rho, &region)?, &partial_trace(&sigma, &region)?)?;
        if d > MARGINAL_TOL {
            mismatches.push(format!("{name} {region}: {d:.3e}"));
        }
    }
    if !mismatches.is_empty() {
        return Err(Error::Consistency(format!("marginals differ beyond {MARGINAL_TOL:e}: {}", mismatches.join(", "))));
    }
    let t = trace_distance(&rho, &sigma)?;
    let rhs = entropy::cmi(&rho, a, b, c)? + entropy::cmi(&sigma, a, b, c)?;
    Ok(BoundCheck::new(0.25 * t * t, rhs))
}

/// `¼|ρ - σ|₁² ≤ (S_M(ρ) - S(ρ)) + (S_M(σ) - S(σ))` for states that agree on
/// every `k ∪ M_k`. Needs both global states; used for diagnostics.
pub fn markov_gap_distance_bound(rho: &DensityMatrix, sigma: &DensityMatrix, plan: &ShieldPlan) -> Result<BoundCheck> {
    rho.same_space(sigma)?;
    plan.check(rho.region())?;
    let mut mismatches = Vec::new();
    for shield in plan.ordered_shields() {
        let w = shield.backward_window();
        let d = trace_distance(&partial_trace(rho, &w)?, &partial_trace(sigma, &w)?)?;
        if d > MARGINAL_TOL {
            mismatches.push(format!("site {} on {w}: {d:.3e}", shield.site));
        }
    }
    if !mismatches.is_empty() {
        return Err(Error::Consistency(format!("marginals differ beyond {MARGINAL_TOL:e}: {}", mismatches.join(", "))));
    }
    let t = trace_distance(rho, sigma)?;
    Ok(BoundCheck::new(0.25 * t * t, med_gap(rho, plan)? + med_gap(sigma, plan)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateTerm {
    pub site: usize,
    /// `S(k|M_k)` in nats.
    pub backward: f64,
    /// `S(k|M_k')` in nats.
    pub forward: f64,
    pub term: f64,
    pub epsilon: f64,
    pub site_dim: usize,
    /// `4 ε ln d + 2 H(ε)` for this site.
    pub correction: f64,
    /// Conditional entropies can be negative; such terms are summed as-is.
    pub negative: bool,
}

/// Trace-distance certificate computed from local marginals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub terms: Vec<CertificateTerm>,
    pub term_sum: f64,
    pub correction_sum: f64,
    /// `term_sum + correction_sum`, before clamping at zero.
    pub radicand: f64,
    pub radicand_clamped: bool,
    /// `2^{3/2} sqrt(max(radicand, 0))`.
    pub bound_raw: f64,
    /// `min(bound_raw, 2)`.
    pub bound_capped: f64,
    /// True when the raw bound beats the trivial value 2.
    pub nontrivial: bool,
}

/// Builds the certificate from marginals covering every `k ∪ M_k ∪ M_k'`.
///
/// `epsilons` is indexed by site; an empty slice means exact marginals.
/// Site dimensions are read off the supplied marginals.
pub fn certificate(bundle: &RdmBundle, plan: &ShieldPlan, epsilons: &[f64]) -> Result<CertificateReport> {
    plan.check(&plan.sites())?;
    let mut terms = Vec::with_capacity(plan.ordering.len());
    for shield in plan.ordered_shields() {
        let k = shield.site;
        let window = shield.window();
        let local = bundle
            .covering_rdm(&window)
            .ok_or_else(|| Error::Coverage(format!("no marginal covers {window}, needed for site {k}")))?;
        let st = site_term(local, shield)?;
        let epsilon = if epsilons.is_empty() {
            0.0
        } else {
            *epsilons
                .get(k)
                .ok_or_else(|| Error::Shape(format!("no epsilon for site {k} ({} supplied)", epsilons.len())))?
        };
        let site_dim = local.site_dim(k).expect("window contains the site");
        let correction = entropy::continuity_correction(&[epsilon], &[site_dim])?;
        terms.push(CertificateTerm {
            site: k,
            backward: st.backward,
            forward: st.forward,
            term: st.value,
            epsilon,
            site_dim,
            correction,
            negative: st.value < 0.0,
        });
    }
    let term_sum: f64 = terms.iter().map(|t| t.term).sum();
    let correction_sum: f64 = terms.iter().map(|t| t.correction).sum();
    let radicand = term_sum + correction_sum;
    let bound_raw = bound_from_radicand(radicand);
    Ok(CertificateReport {
        terms,
        term_sum,
        correction_sum,
        radicand,
        radicand_clamped: radicand < 0.0,
        bound_raw,
        bound_capped: bound_raw.min(TRACE_DISTANCE_MAX),
        nontrivial: bound_raw < TRACE_DISTANCE_MAX,
    })
}

/// Certificate regions `k ∪ M_k ∪ M_k'` in plan order.
pub fn certificate_regions(plan: &ShieldPlan) -> Vec<Region> {
    plan.ordered_shields().map(Shield::window).collect()
}
