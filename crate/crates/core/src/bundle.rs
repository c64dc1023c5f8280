//! Collections of reduced density matrices on overlapping regions.

use crate::error::{Error, Result};
use crate::state::{partial_trace, trace_distance, DensityMatrix, Region};

/// A set of local marginals, each tagged with the global sites it covers.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RdmBundle {
    rdms: Vec<DensityMatrix>,
}

impl RdmBundle {
    pub fn new(rdms: Vec<DensityMatrix>) -> Self {
        RdmBundle { rdms }
    }

    /// Marginals of `state` on each region.
    pub fn from_state(state: &DensityMatrix, regions: &[Region]) -> Result<Self> {
        let rdms = regions.iter().map(|r| partial_trace(state, r)).collect::<Result<_>>()?;
        Ok(RdmBundle { rdms })
    }

    pub fn rdms(&self) -> &[DensityMatrix] {
        &self.rdms
    }

    pub fn push(&mut self, rdm: DensityMatrix) {
        self.rdms.push(rdm);
    }

    pub fn len(&self) -> usize {
        self.rdms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rdms.is_empty()
    }

    /// The smallest supplied marginal whose region contains `region`.
    pub fn covering_rdm(&self, region: &Region) -> Option<&DensityMatrix> {
        self.rdms.iter().filter(|r| region.is_subset(r.region())).min_by_key(|r| r.dim())
    }

    /// Marginal on exactly `region`, traced down from the smallest covering RDM.
    pub fn marginal(&self, region: &Region) -> Result<DensityMatrix> {
        let rdm = self
            .covering_rdm(region)
            .ok_or_else(|| Error::Coverage(format!("no supplied marginal covers region {region}")))?;
        partial_trace(rdm, region)
    }

    /// Local dimension of `site` as recorded by any marginal that contains it.
    pub fn site_dim(&self, site: usize) -> Option<usize> {
        self.rdms.iter().find_map(|r| r.site_dim(site))
    }

    /// Checks that every pair of marginals agrees on its overlap.
    pub fn check_overlaps(&self, tol: f64) -> Result<()> {
        for (i, a) in self.rdms.iter().enumerate() {
            for b in &self.rdms[i + 1..] {
                let common = a.region().intersection(b.region());
                if common.is_empty() {
                    continue;
                }
                let da = partial_trace(a, &common)?;
                let db = partial_trace(b, &common)?;
                if da.dims() != db.dims() {
                    return Err(Error::Consistency(format!(
                        "marginals on {} and {} disagree on site dimensions of {common}",
                        a.region(),
                        b.region()
                    )));
                }
                let dist = trace_distance(&da, &db)?;
                if dist > tol {
                    return Err(Error::Consistency(format!(
                        "marginals on {} and {} differ by {dist:.3e} on their overlap {common}",
                        a.region(),
                        b.region()
                    )));
                }
            }
        }
        Ok(())
    }
}
