//! Petz recovery and sequential reconstruction of a global state from
//! overlapping marginals.
//!
//! For a tripartite state with vanishing `I(A:C|B)`,
//! `ρ_ABC = ρ_AB^{1/2} ρ_B^{-1/2} ρ_BC ρ_B^{-1/2} ρ_AB^{1/2}`. Reconstruction
//! applies this once per site along a shield plan, with `A` the part of the
//! prefix outside the shield, `B = M_k` and `C = {k}`.

use log::{debug, warn};
use serde::Serialize;

use crate::bundle::RdmBundle;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::markov::{certificate, site_term, ShieldPlan, MARGINAL_TOL};
use crate::state::{
    partial_trace, project_matrix, trace_distance, DensityMatrix, Region, SystemLayout, Tolerances, ZERO_EIGENVALUE,
};

/// Eigenvalues at or below this are outside the support for pseudo-inverses.
pub const RANK_TOL: f64 = 1e-10;

/// Largest trace-norm repair accepted after a recovery step.
pub const MAX_REPAIR: f64 = 1e-4;

/// Pairwise marginal agreement required before reconstructing.
pub const OVERLAP_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryOptions {
    /// Allowed trace distance between the two B-marginals.
    pub marginal_tol: f64,
    pub rank_tol: f64,
    pub max_repair: f64,
}

impl Default for RecoveryOptions {
    fn default() -> Self {
        RecoveryOptions { marginal_tol: MARGINAL_TOL, rank_tol: RANK_TOL, max_repair: MAX_REPAIR }
    }
}

fn check_psd(m: &CMatrix, values: &[f64]) -> Result<()> {
    let tol = Tolerances::default();
    let defect = linalg::hermiticity_defect(m);
    if defect > tol.herm {
        return Err(Error::Validation(format!("matrix is not Hermitian (defect {defect:.3e})")));
    }
    if let Some(&min) = values.first() {
        if min < -tol.psd {
            return Err(Error::Validation(format!("matrix is not PSD (minimum eigenvalue {min:.3e})")));
        }
    }
    Ok(())
}

/// Principal square root of a PSD matrix.
pub fn matrix_sqrt(m: &CMatrix) -> Result<CMatrix> {
    let (values, vectors) = linalg::eigh(m);
    check_psd(m, &values)?;
    let roots: Vec<f64> = values.iter().map(|&v| v.max(0.0).sqrt()).collect();
    Ok(linalg::from_spectrum(&roots, &vectors))
}

/// `m^{-1/2}` on the support of `m` (eigenvalues above `rank_tol`), zero elsewhere.
pub fn pinv_sqrt(m: &CMatrix, rank_tol: f64) -> Result<CMatrix> {
    let (values, vectors) = linalg::eigh(m);
    check_psd(m, &values)?;
    let borderline = values.iter().filter(|&&v| v > ZERO_EIGENVALUE && v <= rank_tol).count();
    if borderline > 0 {
        warn!("{borderline} eigenvalue(s) between {ZERO_EIGENVALUE:e} and {rank_tol:e} treated as zero");
    }
    let inv: Vec<f64> = values.iter().map(|&v| if v > rank_tol { v.powf(-0.5) } else { 0.0 }).collect();
    Ok(linalg::from_spectrum(&inv, &vectors))
}

/// Orthogonal projector onto the eigenvectors of `m` with eigenvalue above `rank_tol`.
pub fn support_projector(m: &CMatrix, rank_tol: f64) -> CMatrix {
    let (values, vectors) = linalg::eigh(m);
    let p: Vec<f64> = values.iter().map(|&v| if v > rank_tol { 1.0 } else { 0.0 }).collect();
    linalg::from_spectrum(&p, &vectors)
}

/// A recovered state together with the trace norm of the PSD/trace repair.
#[derive(Debug, Clone, PartialEq)]
pub struct Recovered {
    pub state: DensityMatrix,
    pub repair: f64,
}

fn joint_layout(ab: &DensityMatrix, bc: &DensityMatrix, abc: &Region) -> Result<SystemLayout> {
    let sites = abc
        .iter()
        .map(|s| {
            let (src, pos) = match ab.region().position(s) {
                Some(p) => (ab, p),
                None => (bc, bc.region().position(s).expect("site is in one of the inputs")),
            };
            src.layout().sites()[pos].clone()
        })
        .collect();
    SystemLayout::new(sites).map_err(|e| e.context("joining marginal layouts"))
}

/// Recovers `ρ_ABC` from `ρ_AB` and `ρ_BC`.
///
/// Regions are global site indices. `rho_ab` must live on exactly `a ∪ b` and
/// `rho_bc` on `b ∪ c`; `ρ_B` is taken from `rho_ab`.
pub fn petz_recover(
    rho_ab: &DensityMatrix,
    rho_bc: &DensityMatrix,
    a: &Region,
    b: &Region,
    c: &Region,
    opts: &RecoveryOptions,
) -> Result<Recovered> {
    if !a.is_disjoint(b) || !a.is_disjoint(c) || !b.is_disjoint(c) {
        return Err(Error::Region(format!("regions {a}, {b}, {c} are not pairwise disjoint")));
    }
    let ab = a.union(b);
    let bc = b.union(c);
    if rho_ab.region() != &ab {
        return Err(Error::Shape(format!("first marginal lives on {}, expected {ab}", rho_ab.region())));
    }
    if rho_bc.region() != &bc {
        return Err(Error::Shape(format!("second marginal lives on {}, expected {bc}", rho_bc.region())));
    }
    let rho_b = partial_trace(rho_ab, b)?;
    let rho_b_other = partial_trace(rho_bc, b)?;
    if rho_b.dims() != rho_b_other.dims() {
        return Err(Error::Consistency(format!("marginals disagree on the dimensions of {b}")));
    }
    let mismatch = trace_distance(&rho_b, &rho_b_other)?;
    if mismatch > opts.marginal_tol {
        return Err(Error::Consistency(format!("marginals on {ab} and {bc} differ by {mismatch:.3e} on {b}")));
    }

    let abc = ab.union(c);
    let layout = joint_layout(rho_ab, rho_bc, &abc)?;
    let dims = layout.dims();

    let b_inv = pinv_sqrt(rho_b.matrix(), opts.rank_tol)?;
    if b_inv.iter().all(|z| *z == linalg::ZERO) {
        return Err(Error::Degenerate(format!("marginal on {b} has no support above {:e}", opts.rank_tol)));
    }
    let b_pos = b.positions_in(&bc)?;
    let b_inv_bc = linalg::embed(&b_inv, &rho_bc.dims(), &b_pos);
    let w = &b_inv_bc * rho_bc.matrix() * &b_inv_bc;
    let w = linalg::embed(&w, &dims, &bc.positions_in(&abc)?);
    let x = linalg::embed(&matrix_sqrt(rho_ab.matrix())?, &dims, &ab.positions_in(&abc)?);
    let raw = linalg::hermitize(&(&x * w * &x));

    let repaired = project_matrix(&raw)?;
    let repair = linalg::trace_norm_hermitian(&(&repaired - &raw));
    debug!("petz recovery on {abc}: repair {repair:.3e}");
    if repair > opts.max_repair {
        return Err(Error::Consistency(format!(
            "recovered operator on {abc} needed a repair of {repair:.3e} (limit {:e})",
            opts.max_repair
        )));
    }
    Ok(Recovered { state: DensityMatrix::from_parts(layout, abc, repaired), repair })
}

/// One reconstruction step: extends `prefix` by `site` using the marginal on `site ∪ shield`.
///
/// `local` may cover more than `site ∪ shield`; the excess is traced out.
pub fn petz_extend(
    prefix: &DensityMatrix,
    local: &DensityMatrix,
    site: usize,
    shield: &Region,
    opts: &RecoveryOptions,
) -> Result<Recovered> {
    if prefix.region().contains(site) {
        return Err(Error::Region(format!("site {site} is already in the prefix {}", prefix.region())));
    }
    if !shield.is_subset(prefix.region()) {
        return Err(Error::Region(format!("shield {shield} is not inside the prefix {}", prefix.region())));
    }
    let window = shield.union(&Region::single(site));
    let rho_bc = partial_trace(local, &window)?;
    let a = prefix.region().difference(shield);
    petz_recover(prefix, &rho_bc, &a, shield, &Region::single(site), opts)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReconstructionStep {
    pub site: usize,
    /// Region covered after this step.
    pub region: Region,
    /// `S(k|M_k) + S(k|M_k')` when the supplied marginals cover the full window.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub term: Option<f64>,
    pub repair: f64,
    /// Trace distance to the reference marginal on `region`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReconstructionTrace {
    pub steps: Vec<ReconstructionStep>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_distance: Option<f64>,
    /// Capped certificate bound from the same marginals, when they cover every window.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate_bound: Option<f64>,
    /// Whether the final distance respects the certificate bound.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub within_bound: Option<bool>,
    #[serde(skip)]
    pub state: DensityMatrix,
}

/// Folds [`petz_extend`] along the plan ordering.
///
/// The first site is seeded with its own marginal. `reference`, when given,
/// must cover every site of the plan.
pub fn reconstruct(
    bundle: &RdmBundle,
    plan: &ShieldPlan,
    reference: Option<&DensityMatrix>,
    opts: &RecoveryOptions,
) -> Result<ReconstructionTrace> {
    plan.check(&plan.sites())?;
    bundle.check_overlaps(OVERLAP_TOL)?;
    let Some(&first) = plan.ordering.first() else {
        return Err(Error::Plan("plan has no sites".into()));
    };
    if let Some(r) = reference {
        if !plan.sites().is_subset(r.region()) {
            return Err(Error::Shape(format!("reference lives on {}, plan covers {}", r.region(), plan.sites())));
        }
    }
    let distance_to_reference = |state: &DensityMatrix| -> Result<Option<f64>> {
        reference.map(|r| trace_distance(state, &partial_trace(r, state.region())?)).transpose()
    };

    let mut steps = Vec::with_capacity(plan.ordering.len());
    let mut state: Option<DensityMatrix> = None;
    for (i, shield) in plan.ordered_shields().enumerate() {
        let k = shield.site;
        let step = |e: Error| e.context(format!("step {i} (site {k})"));
        let term = bundle.covering_rdm(&shield.window()).map(|w| site_term(w, shield)).transpose().map_err(step)?;
        let backward = shield.backward_window();
        let local = bundle
            .covering_rdm(&backward)
            .ok_or_else(|| Error::Coverage(format!("no marginal covers {backward}")))
            .map_err(step)?;
        let (next, repair) = match &state {
            None => {
                debug_assert_eq!(k, first);
                (partial_trace(local, &backward).map_err(step)?, 0.0)
            }
            Some(prefix) => {
                let r = petz_extend(prefix, local, k, &shield.m, opts).map_err(step)?;
                (r.state, r.repair)
            }
        };
        steps.push(ReconstructionStep {
            site: k,
            region: next.region().clone(),
            term: term.map(|t| t.value),
            repair,
            reference_distance: distance_to_reference(&next)?,
        });
        state = Some(next);
    }
    let state = state.expect("plan has at least one site");
    let final_distance = steps.last().and_then(|s| s.reference_distance);
    let certificate_bound = match certificate(bundle, plan, &[]) {
        Ok(report) => Some(report.bound_capped),
        Err(Error::Coverage(_)) => None,
        Err(e) => return Err(e),
    };
    let within_bound = match (final_distance, certificate_bound) {
        (Some(d), Some(b)) => Some(d <= b + crate::markov::INEQUALITY_TOL),
        _ => None,
    };
    Ok(ReconstructionTrace { steps, final_distance, certificate_bound, within_bound, state })
}
