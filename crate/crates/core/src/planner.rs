//! Square-lattice geometry, the area-law entropy model and shield planning.
//!
//! Under the model `S(A) = α·l − γ·c ± slack`, where `l` is the number of unit
//! edges separating `A` from the rest of the lattice and `c` the number of
//! closed boundary curves, the certificate term of a site depends only on the
//! topology of its shields. On open grids the physical edge of the lattice is
//! not an entanglement cut: edges lying on it are not counted, and interface
//! curves that end on it are open arcs, which carry no `γ`.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markov::{PlanViolation, Shield, ShieldPlan, BOUND_PREFACTOR};
use crate::state::Region;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridLayout {
    pub width: usize,
    pub height: usize,
    #[serde(default)]
    pub periodic: bool,
}

impl GridLayout {
    pub fn new(width: usize, height: usize, periodic: bool) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Geometry(format!("grid {width}x{height} has no sites")));
        }
        Ok(GridLayout { width, height, periodic })
    }

    pub fn open(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, false)
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index % self.width, index / self.width)
    }

    /// Cell at offset `(dx, dy)` from `index`, wrapping on periodic grids.
    pub fn offset(&self, index: usize, dx: isize, dy: isize) -> Option<usize> {
        let (x, y) = self.coords(index);
        let (w, h) = (self.width as isize, self.height as isize);
        let (mut nx, mut ny) = (x as isize + dx, y as isize + dy);
        if self.periodic {
            nx = nx.rem_euclid(w);
            ny = ny.rem_euclid(h);
        } else if nx < 0 || ny < 0 || nx >= w || ny >= h {
            return None;
        }
        Some(self.index(nx as usize, ny as usize))
    }

    fn neighbours4(&self, index: usize) -> impl Iterator<Item = usize> + '_ {
        [(1, 0), (-1, 0), (0, 1), (0, -1)].into_iter().filter_map(move |(dx, dy)| self.offset(index, dx, dy))
    }

    fn neighbours8(&self, index: usize) -> impl Iterator<Item = usize> + '_ {
        (-1..=1)
            .flat_map(|dy| (-1..=1).map(move |dx| (dx, dy)))
            .filter(|&d| d != (0, 0))
            .filter_map(move |(dx, dy)| self.offset(index, dx, dy))
    }

    /// Cells within Chebyshev distance `radius` of `index`, excluding it.
    pub fn neighbourhood(&self, index: usize, radius: usize) -> GridRegion {
        let r = radius as isize;
        let cells = (-r..=r)
            .flat_map(|dy| (-r..=r).map(move |dx| (dx, dy)))
            .filter_map(|(dx, dy)| self.offset(index, dx, dy))
            .filter(|&c| c != index)
            .collect();
        GridRegion { cells }
    }

    /// Row-by-row ordering, alternating direction on every row.
    pub fn boustrophedon(&self) -> Vec<usize> {
        (0..self.height)
            .flat_map(|y| {
                let row: Vec<usize> = (0..self.width).map(|x| self.index(x, y)).collect();
                if y % 2 == 0 {
                    row
                } else {
                    row.into_iter().rev().collect()
                }
            })
            .collect()
    }

    fn check_region(&self, region: &GridRegion) -> Result<()> {
        match region.cells.iter().next_back() {
            Some(&c) if c >= self.len() => {
                Err(Error::Geometry(format!("cell {c} lies outside the {}x{} grid", self.width, self.height)))
            }
            _ => Ok(()),
        }
    }
}

/// A set of grid cells, identified by row-major index.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GridRegion {
    cells: BTreeSet<usize>,
}

impl GridRegion {
    pub fn new(cells: impl IntoIterator<Item = usize>) -> Self {
        GridRegion { cells: cells.into_iter().collect() }
    }

    pub fn from_coords(grid: &GridLayout, coords: &[(usize, usize)]) -> Self {
        Self::new(coords.iter().map(|&(x, y)| grid.index(x, y)))
    }

    pub fn single(cell: usize) -> Self {
        Self::new([cell])
    }

    pub fn cells(&self) -> &BTreeSet<usize> {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn contains(&self, cell: usize) -> bool {
        self.cells.contains(&cell)
    }

    pub fn union(&self, other: &GridRegion) -> GridRegion {
        GridRegion { cells: self.cells.union(&other.cells).copied().collect() }
    }

    pub fn is_disjoint(&self, other: &GridRegion) -> bool {
        self.cells.is_disjoint(&other.cells)
    }

    pub fn to_region(&self) -> Region {
        Region::new(self.cells.iter().copied()).expect("set has no duplicates")
    }
}

impl From<&Region> for GridRegion {
    fn from(r: &Region) -> Self {
        GridRegion::new(r.iter())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryMetrics {
    /// Unit edges between the region and the rest of the lattice.
    pub length: usize,
    /// Closed boundary curves.
    pub components: usize,
    /// Complement components enclosed by the region.
    pub holes: usize,
    /// Boundary arcs ending on the physical edge of an open grid.
    pub open_arcs: usize,
    /// Edge-connected components of the region itself.
    pub region_components: usize,
}

/// Labels connected components of `cells`, returning one label per grid cell
/// (`usize::MAX` outside `cells`) and the component count.
fn label_components(
    grid: &GridLayout,
    inside: &[bool],
    neighbours: impl Fn(usize) -> Vec<usize>,
) -> (Vec<usize>, usize) {
    let mut label = vec![usize::MAX; grid.len()];
    let mut count = 0;
    for start in 0..grid.len() {
        if !inside[start] || label[start] != usize::MAX {
            continue;
        }
        label[start] = count;
        let mut queue = VecDeque::from([start]);
        while let Some(c) = queue.pop_front() {
            for n in neighbours(c) {
                if inside[n] && label[n] == usize::MAX {
                    label[n] = count;
                    queue.push_back(n);
                }
            }
        }
        count += 1;
    }
    (label, count)
}

/// Boundary length and topology of a nonempty region.
///
/// Region cells are connected through edges and complement cells through edges
/// or corners. Each adjacent pair of region and complement components shares
/// one closed curve, unless their interface reaches the physical edge, in which
/// case it splits into open arcs. On periodic grids a region that wraps around
/// the torus is still counted as having one curve per such pair.
pub fn boundary_metrics(region: &GridRegion, grid: &GridLayout) -> Result<BoundaryMetrics> {
    if region.is_empty() {
        return Err(Error::Domain("boundary of an empty region is undefined".into()));
    }
    grid.check_region(region)?;
    let n = grid.len();
    let mut inside = vec![false; n];
    for &c in region.cells() {
        inside[c] = true;
    }
    let outside: Vec<bool> = inside.iter().map(|b| !b).collect();
    let (rlabel, region_components) = label_components(grid, &inside, |c| grid.neighbours4(c).collect());
    let (clabel, complement_components) = label_components(grid, &outside, |c| grid.neighbours8(c).collect());

    // Per (region component, complement component) pair: border endpoints of the shared interface.
    let mut pairs: std::collections::BTreeMap<(usize, usize), usize> = Default::default();
    let mut length = 0;
    let on_border = |x: usize, y: usize, horizontal_pair: bool| -> usize {
        if grid.periodic {
            return 0;
        }
        // The edge between two horizontally adjacent cells is vertical: its
        // endpoints sit on the bottom and top rows' outer sides.
        if horizontal_pair {
            usize::from(y == 0) + usize::from(y + 1 == grid.height)
        } else {
            usize::from(x == 0) + usize::from(x + 1 == grid.width)
        }
    };
    for a in 0..n {
        for (dx, dy, horizontal) in [(1, 0, true), (0, 1, false)] {
            let Some(b) = grid.offset(a, dx, dy) else { continue };
            if b == a || inside[a] == inside[b] {
                continue;
            }
            // On a periodic grid of width or height 2, the same pair can be
            // adjacent twice; each adjacency is a distinct edge.
            length += 1;
            let (r, c) = if inside[a] { (a, b) } else { (b, a) };
            let (x, y) = grid.coords(a);
            *pairs.entry((rlabel[r], clabel[c])).or_default() += on_border(x, y, horizontal);
        }
    }
    let mut components = 0;
    let mut open_arcs = 0;
    for &ends in pairs.values() {
        if ends == 0 {
            components += 1;
        } else {
            open_arcs += ends.div_ceil(2);
        }
    }
    let holes = if grid.periodic {
        complement_components.saturating_sub(1)
    } else {
        let mut touches = vec![false; complement_components];
        for c in 0..n {
            if outside[c] {
                let (x, y) = grid.coords(c);
                if x == 0 || y == 0 || x + 1 == grid.width || y + 1 == grid.height {
                    touches[clabel[c]] = true;
                }
            }
        }
        touches.iter().filter(|t| !**t).count()
    };
    Ok(BoundaryMetrics { length, components, holes, open_arcs, region_components })
}

/// Euler characteristic `V − E + F` of the closed cells of `region`.
pub fn euler_characteristic(region: &GridRegion, grid: &GridLayout) -> i64 {
    let (w, h) = (grid.width, grid.height);
    // Vertices and edges keyed on the lower-left corner, wrapped when periodic.
    let wrap = |x: usize, y: usize| -> (usize, usize) {
        if grid.periodic {
            (x % w, y % h)
        } else {
            (x, y)
        }
    };
    let mut vertices = BTreeSet::new();
    let mut edges = BTreeSet::new();
    for &c in region.cells() {
        let (x, y) = grid.coords(c);
        for (vx, vy) in [(x, y), (x + 1, y), (x, y + 1), (x + 1, y + 1)] {
            vertices.insert(wrap(vx, vy));
        }
        edges.insert((wrap(x, y), 'h'));
        edges.insert((wrap(x, y + 1), 'h'));
        edges.insert((wrap(x, y), 'v'));
        edges.insert((wrap(x + 1, y), 'v'));
    }
    vertices.len() as i64 - edges.len() as i64 + region.len() as i64
}

/// Connected, hole-free and contractible: topologically a disk.
pub fn is_disk_like(region: &GridRegion, grid: &GridLayout) -> Result<bool> {
    let m = boundary_metrics(region, grid)?;
    Ok(m.region_components == 1 && euler_characteristic(region, grid) == 1)
}

/// `S(A) = α·l − γ·c`, with `slack` as the half-width of the per-region error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyModel {
    pub alpha: f64,
    pub gamma: f64,
    #[serde(default)]
    pub slack: f64,
}

impl EntropyModel {
    pub fn new(alpha: f64, gamma: f64, slack: f64) -> Result<Self> {
        let m = EntropyModel { alpha, gamma, slack };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("gamma", self.gamma), ("slack", self.slack)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Domain(format!("{name} must be finite and nonnegative, got {v}")));
            }
        }
        Ok(())
    }
}

/// A model value with the half-width of its uncertainty interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelValue {
    pub value: f64,
    pub slack_width: f64,
}

pub fn model_entropy(region: &GridRegion, model: &EntropyModel, grid: &GridLayout) -> Result<ModelValue> {
    let m = boundary_metrics(region, grid)?;
    Ok(ModelValue {
        value: model.alpha * m.length as f64 - model.gamma * m.components as f64,
        slack_width: model.slack,
    })
}

fn model_conditional(k: &GridRegion, m: &GridRegion, model: &EntropyModel, grid: &GridLayout) -> Result<f64> {
    let joint = model_entropy(&k.union(m), model, grid)?.value;
    if m.is_empty() {
        return Ok(joint);
    }
    Ok(joint - model_entropy(m, model, grid)?.value)
}

/// Model value of `S(k|M_k) + S(k|M_k')`.
pub fn model_shield_score(
    k: usize,
    m: &GridRegion,
    m_prime: &GridRegion,
    model: &EntropyModel,
    grid: &GridLayout,
) -> Result<ModelValue> {
    if m.contains(k) || m_prime.contains(k) {
        return Err(Error::Region(format!("shield of cell {k} contains the cell itself")));
    }
    if !m.is_disjoint(m_prime) {
        return Err(Error::Region(format!("the two shields of cell {k} overlap")));
    }
    let kr = GridRegion::single(k);
    let value = model_conditional(&kr, m, model, grid)? + model_conditional(&kr, m_prime, model, grid)?;
    Ok(ModelValue { value, slack_width: 4.0 * model.slack })
}

/// Boustrophedon sweep with Chebyshev-ball shields split into visited and unvisited cells.
///
/// Sites after the first prefix that stops being a disk are reported in the
/// plan's remainder; on open grids every prefix is a disk and the remainder is empty.
pub fn generate_plan(grid: &GridLayout, radius: usize) -> Result<ShieldPlan> {
    if radius == 0 {
        return Err(Error::Geometry("neighbourhood radius must be positive".into()));
    }
    let span = 2 * radius + 1;
    let too_large =
        if grid.periodic { span > grid.width || span > grid.height } else { span > grid.width.max(grid.height) };
    if too_large {
        return Err(Error::Geometry(format!(
            "radius {radius} does not fit a {}x{}{} grid",
            grid.width,
            grid.height,
            if grid.periodic { " periodic" } else { "" }
        )));
    }
    let ordering = grid.boustrophedon();
    let mut visited = vec![false; grid.len()];
    let mut shields = Vec::with_capacity(ordering.len());
    let mut prefix = GridRegion::default();
    let mut remainder = Vec::new();
    for &k in &ordering {
        let hood = grid.neighbourhood(k, radius);
        let (m, m_prime): (Vec<usize>, Vec<usize>) = hood.cells().iter().partition(|&&c| visited[c]);
        shields.push(Shield {
            site: k,
            m: Region::new(m).expect("distinct cells"),
            m_prime: Region::new(m_prime).expect("distinct cells"),
        });
        visited[k] = true;
        prefix.cells.insert(k);
        if !remainder.is_empty() || !is_disk_like(&prefix, grid)? {
            remainder.push(k);
        }
    }
    Ok(ShieldPlan { ordering, shields, remainder })
}

pub fn validate_plan(plan: &ShieldPlan, grid: &GridLayout) -> Vec<PlanViolation> {
    plan.violations(&Region::full(grid.len()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteScore {
    pub site: usize,
    pub x: usize,
    pub y: usize,
    pub value: f64,
    pub slack_width: f64,
}

/// Certificate bound predicted by the model, with its slack interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictedBound {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub score_sum: f64,
    pub slack_sum: f64,
    pub scores: Vec<SiteScore>,
    /// Sites the plan could not shield; a nonempty remainder means no certificate.
    pub remainder: Vec<usize>,
    pub assumptions: Vec<String>,
}

fn bound(sum: f64) -> f64 {
    BOUND_PREFACTOR * sum.max(0.0).sqrt()
}

pub fn predict_bound(plan: &ShieldPlan, model: &EntropyModel, grid: &GridLayout) -> Result<PredictedBound> {
    model.validate()?;
    plan.check(&Region::full(grid.len()))?;
    let mut scores = Vec::with_capacity(plan.ordering.len());
    for s in plan.ordered_shields() {
        let v = model_shield_score(s.site, &(&s.m).into(), &(&s.m_prime).into(), model, grid)?;
        let (x, y) = grid.coords(s.site);
        scores.push(SiteScore { site: s.site, x, y, value: v.value, slack_width: v.slack_width });
    }
    let score_sum: f64 = scores.iter().map(|s| s.value).sum();
    let slack_sum: f64 = scores.iter().map(|s| s.slack_width).sum();
    Ok(PredictedBound {
        value: bound(score_sum),
        lower: bound(score_sum - slack_sum),
        upper: bound(score_sum + slack_sum),
        score_sum,
        slack_sum,
        scores,
        remainder: plan.remainder.clone(),
        assumptions: vec![
            "regions with several boundary curves pay gamma once per closed curve".into(),
            "edges on the physical edge of an open grid are not entanglement cuts; arcs ending there carry no gamma"
                .into(),
            "the o(1) correction is a constant slack per evaluated region".into(),
        ],
    })
}

/// Grid and model parameters as read from a single JSON document.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridModel {
    pub width: usize,
    pub height: usize,
    #[serde(default)]
    pub periodic: bool,
    pub alpha: f64,
    pub gamma: f64,
    #[serde(default)]
    pub slack: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<usize>,
}

impl GridModel {
    pub fn grid(&self) -> Result<GridLayout> {
        GridLayout::new(self.width, self.height, self.periodic)
    }

    pub fn model(&self) -> Result<EntropyModel> {
        EntropyModel::new(self.alpha, self.gamma, self.slack)
    }
}
