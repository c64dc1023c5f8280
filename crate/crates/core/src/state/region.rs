use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A set of site indices, stored strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Region(Vec<usize>);

impl Region {
    /// Builds a region from indices in any order. Duplicates are rejected.
    pub fn new(indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut v: Vec<usize> = indices.into_iter().collect();
        v.sort_unstable();
        if let Some(w) = v.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Region(format!("duplicate site index {}", w[0])));
        }
        Ok(Region(v))
    }

    pub fn empty() -> Self {
        Region(Vec::new())
    }

    pub fn single(site: usize) -> Self {
        Region(vec![site])
    }

    /// `{0, 1, ..., n-1}`.
    pub fn full(n: usize) -> Self {
        Region((0..n).collect())
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, site: usize) -> bool {
        self.0.binary_search(&site).is_ok()
    }

    pub fn position(&self, site: usize) -> Option<usize> {
        self.0.binary_search(&site).ok()
    }

    pub fn union(&self, other: &Region) -> Region {
        let mut v = self.0.clone();
        v.extend(other.iter().filter(|s| !self.contains(*s)));
        v.sort_unstable();
        Region(v)
    }

    pub fn intersection(&self, other: &Region) -> Region {
        Region(self.iter().filter(|s| other.contains(*s)).collect())
    }

    pub fn difference(&self, other: &Region) -> Region {
        Region(self.iter().filter(|s| !other.contains(*s)).collect())
    }

    /// Sites of `{0, .., n-1}` not in this region.
    pub fn complement(&self, n: usize) -> Region {
        Region((0..n).filter(|s| !self.contains(*s)).collect())
    }

    pub fn is_disjoint(&self, other: &Region) -> bool {
        self.iter().all(|s| !other.contains(s))
    }

    pub fn is_subset(&self, other: &Region) -> bool {
        self.iter().all(|s| other.contains(s))
    }

    /// Positions of this region's sites inside `outer`, or an error naming the first missing site.
    pub fn positions_in(&self, outer: &Region) -> Result<Vec<usize>> {
        self.iter()
            .map(|s| outer.position(s).ok_or_else(|| Error::Region(format!("site {s} is not part of region {outer}"))))
            .collect()
    }
}

impl TryFrom<Vec<usize>> for Region {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        Region::new(v)
    }
}

impl From<Region> for Vec<usize> {
    fn from(r: Region) -> Self {
        r.0
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, "}}")
    }
}
