use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest Hilbert-space dimension any layout may describe.
pub const DEFAULT_MAX_DIM: usize = 1 << 14;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Site {
    pub label: String,
    pub dim: usize,
}

/// Ordered sites with their local dimensions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemLayout {
    sites: Vec<Site>,
    total_dim: usize,
}

/// Label given to a site that was created without an explicit one.
pub(crate) fn auto_label(index: usize) -> String {
    format!("s{index}")
}

impl SystemLayout {
    pub fn new(sites: Vec<Site>) -> Result<Self> {
        Self::with_max_dim(sites, DEFAULT_MAX_DIM)
    }

    pub fn with_max_dim(sites: Vec<Site>, max_dim: usize) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut total: usize = 1;
        for s in &sites {
            if s.dim == 0 {
                return Err(Error::Validation(format!("site '{}' has dimension 0", s.label)));
            }
            if !seen.insert(s.label.as_str()) {
                return Err(Error::Validation(format!("duplicate site label '{}'", s.label)));
            }
            total = total
                .checked_mul(s.dim)
                .filter(|&t| t <= max_dim)
                .ok_or(Error::Capacity { dim: total.saturating_mul(s.dim), max: max_dim })?;
        }
        Ok(SystemLayout { sites, total_dim: total })
    }

    /// Sites labelled `s0, s1, ...` with the given dimensions.
    pub fn from_dims(dims: &[usize]) -> Result<Self> {
        Self::new(dims.iter().enumerate().map(|(i, &dim)| Site { label: auto_label(i), dim }).collect())
    }

    pub fn qubits(n: usize) -> Result<Self> {
        Self::from_dims(&vec![2; n])
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.sites.iter().map(|s| s.dim).collect()
    }

    pub fn labels(&self) -> Vec<String> {
        self.sites.iter().map(|s| s.label.clone()).collect()
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    /// Sub-layout made of the sites at the given positions.
    pub(crate) fn select(&self, positions: &[usize]) -> SystemLayout {
        let sites: Vec<Site> = positions.iter().map(|&p| self.sites[p].clone()).collect();
        let total_dim = sites.iter().map(|s| s.dim).product();
        SystemLayout { sites, total_dim }
    }
}
