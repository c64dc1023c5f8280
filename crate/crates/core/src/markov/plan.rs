use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::Region;

/// Conditioning sets for one site: `m ⊂ {<k}` and `m_prime ⊂ {>k}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shield {
    pub site: usize,
    #[serde(default)]
    pub m: Region,
    #[serde(default)]
    pub m_prime: Region,
}

impl Shield {
    /// `{k} ∪ M_k ∪ M_k'`, the support of the site's certificate term.
    pub fn window(&self) -> Region {
        Region::single(self.site).union(&self.m).union(&self.m_prime)
    }

    /// `{k} ∪ M_k`.
    pub fn backward_window(&self) -> Region {
        Region::single(self.site).union(&self.m)
    }
}

/// A site ordering with a Markov shield per site.
///
/// Plans are plain data so that malformed plans read from disk can be
/// inspected; [`ShieldPlan::violations`] reports what is wrong with them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShieldPlan {
    pub ordering: Vec<usize>,
    pub shields: Vec<Shield>,
    /// Sites the planner could not shield topologically. Plans with a
    /// nonempty remainder never certify.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub remainder: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlanViolation {
    NotAPermutation {
        detail: String,
    },
    MissingShield {
        site: usize,
    },
    DuplicateShield {
        site: usize,
    },
    UnknownSite {
        site: usize,
    },
    ShieldContainsSite {
        site: usize,
    },
    /// Sites of `M_k` that are not earlier than `k` in the ordering.
    ShieldNotBefore {
        site: usize,
        offending: Vec<usize>,
    },
    /// Sites of `M_k'` that are not later than `k` in the ordering.
    ShieldNotAfter {
        site: usize,
        offending: Vec<usize>,
    },
}

impl ShieldPlan {
    pub fn new(ordering: Vec<usize>, shields: Vec<Shield>) -> Self {
        ShieldPlan { ordering, shields, remainder: Vec::new() }
    }

    /// Ordering `0..n` with nearest-neighbour shields `{k-1}` and `{k+1}`.
    pub fn chain(n: usize) -> Self {
        Self::chain_with_radius(n, 1)
    }

    /// Ordering `0..n` with `M_k = {k-r..k-1}` and `M_k' = {k+1..k+r}`, clipped to the chain.
    pub fn chain_with_radius(n: usize, radius: usize) -> Self {
        let shields = (0..n)
            .map(|k| Shield {
                site: k,
                m: Region::full(k).difference(&Region::full(k.saturating_sub(radius))),
                m_prime: Region::full((k + 1 + radius).min(n)).difference(&Region::full(k + 1)),
            })
            .collect();
        Self::new((0..n).collect(), shields)
    }

    /// Empty shields everywhere.
    pub fn unshielded(ordering: Vec<usize>) -> Self {
        let shields =
            ordering.iter().map(|&k| Shield { site: k, m: Region::empty(), m_prime: Region::empty() }).collect();
        Self::new(ordering, shields)
    }

    pub fn shield(&self, site: usize) -> Option<&Shield> {
        self.shields.iter().find(|s| s.site == site)
    }

    /// Shields in plan order. Only meaningful for valid plans.
    pub fn ordered_shields(&self) -> impl Iterator<Item = &Shield> + '_ {
        self.ordering.iter().filter_map(move |&k| self.shield(k))
    }

    /// Sites strictly before `site` in the ordering.
    pub fn before(&self, site: usize) -> Region {
        let pos = self.ordering.iter().position(|&s| s == site).unwrap_or(0);
        Region::new(self.ordering[..pos].iter().copied()).unwrap_or_default()
    }

    /// Distinct sites named by the ordering.
    pub fn sites(&self) -> Region {
        let set: std::collections::BTreeSet<usize> = self.ordering.iter().copied().collect();
        Region::new(set).expect("set has no duplicates")
    }

    /// Every way the plan fails to be a valid shield plan over `sites`.
    pub fn violations(&self, sites: &Region) -> Vec<PlanViolation> {
        let mut out = Vec::new();
        let mut rank = HashMap::new();
        for (i, &s) in self.ordering.iter().enumerate() {
            if !sites.contains(s) {
                out.push(PlanViolation::UnknownSite { site: s });
            }
            if rank.insert(s, i).is_some() {
                out.push(PlanViolation::NotAPermutation {
                    detail: format!("site {s} appears more than once in the ordering"),
                });
            }
        }
        for s in sites.iter().filter(|s| !rank.contains_key(s)) {
            out.push(PlanViolation::NotAPermutation { detail: format!("site {s} is missing from the ordering") });
        }
        let mut seen = HashMap::new();
        for shield in &self.shields {
            let k = shield.site;
            if seen.insert(k, ()).is_some() {
                out.push(PlanViolation::DuplicateShield { site: k });
                continue;
            }
            let Some(&rk) = rank.get(&k) else {
                out.push(PlanViolation::UnknownSite { site: k });
                continue;
            };
            if shield.m.contains(k) || shield.m_prime.contains(k) {
                out.push(PlanViolation::ShieldContainsSite { site: k });
            }
            let not_before: Vec<usize> =
                shield.m.iter().filter(|&s| s != k && rank.get(&s).is_none_or(|&r| r >= rk)).collect();
            if !not_before.is_empty() {
                out.push(PlanViolation::ShieldNotBefore { site: k, offending: not_before });
            }
            let not_after: Vec<usize> =
                shield.m_prime.iter().filter(|&s| s != k && rank.get(&s).is_none_or(|&r| r <= rk)).collect();
            if !not_after.is_empty() {
                out.push(PlanViolation::ShieldNotAfter { site: k, offending: not_after });
            }
        }
        for &k in &self.ordering {
            if !seen.contains_key(&k) {
                out.push(PlanViolation::MissingShield { site: k });
            }
        }
        out
    }

    /// Fails with a plan error describing the violations, if any.
    pub fn check(&self, sites: &Region) -> Result<()> {
        let v = self.violations(sites);
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Plan(v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join("; ")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(v: &[usize]) -> Region {
        Region::new(v.iter().copied()).unwrap()
    }

    #[test]
    fn chain_plan_shape() {
        let p = ShieldPlan::chain(4);
        assert_eq!(p.shield(0).unwrap().m, Region::empty());
        assert_eq!(p.shield(0).unwrap().m_prime, r(&[1]));
        assert_eq!(p.shield(2).unwrap().m, r(&[1]));
        assert_eq!(p.shield(2).unwrap().m_prime, r(&[3]));
        assert_eq!(p.shield(3).unwrap().m_prime, Region::empty());
        assert!(p.violations(&Region::full(4)).is_empty());
        let wide = ShieldPlan::chain_with_radius(5, 2);
        assert_eq!(wide.shield(2).unwrap().window(), Region::full(5));
        assert_eq!(wide.shield(1).unwrap().m, r(&[0]));
    }

    #[test]
    fn forward_site_in_backward_shield_is_one_violation() {
        let mut p = ShieldPlan::chain(3);
        p.shields[1].m = r(&[0, 2]);
        p.shields[1].m_prime = Region::empty();
        let v = p.violations(&Region::full(3));
        assert_eq!(v, vec![PlanViolation::ShieldNotBefore { site: 1, offending: vec![2] }]);
        assert!(matches!(p.check(&Region::full(3)), Err(Error::Plan(_))));
    }

    #[test]
    fn empty_shields_are_valid() {
        assert!(ShieldPlan::unshielded(vec![2, 0, 1]).violations(&Region::full(3)).is_empty());
    }

    #[test]
    fn structural_violations() {
        let p = ShieldPlan::unshielded(vec![0, 0, 1]);
        assert!(p.violations(&Region::full(3)).iter().any(|v| matches!(v, PlanViolation::NotAPermutation { .. })));
        let mut q = ShieldPlan::chain(3);
        q.shields.pop();
        assert!(q.violations(&Region::full(3)).contains(&PlanViolation::MissingShield { site: 2 }));
        let mut s = ShieldPlan::chain(3);
        s.shields[0].m_prime = r(&[0, 1]);
        assert!(s.violations(&Region::full(3)).contains(&PlanViolation::ShieldContainsSite { site: 0 }));
    }

    #[test]
    fn json_format() {
        let p = ShieldPlan::chain(2);
        let v = serde_json::to_value(&p).unwrap();
        assert_eq!(
            v,
            serde_json::json!({"ordering":[0,1],"shields":[
                {"site":0,"m":[],"m_prime":[1]},
                {"site":1,"m":[0],"m_prime":[]}]})
        );
        let back: ShieldPlan = serde_json::from_value(v).unwrap();
        assert_eq!(back, p);
    }
}
