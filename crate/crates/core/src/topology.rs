//! Finite graph substrates: max-norm boxes of the integer lattice and
//! truncated homogeneous trees carrying a level map.
//!
//! Every graph exposes its neighbors through fixed *slots*. An oriented edge
//! is identified by its source site and the slot of its target, which gives
//! every Poisson stream of the graphical construction a stable identity.

use std::fmt;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest lattice dimension supported by [`Point`].
pub const MAX_DIM: usize = 4;

/// Common interface of the finite graphs the dynamics run on.
pub trait Graph: Sync + Send {
    type Site: Copy + Eq + Ord + Hash + fmt::Debug + Send + Sync;

    /// Number of neighbor slots of an unrestricted site (2d on the lattice,
    /// d+1 on the tree).
    fn slots(&self) -> usize;

    /// Neighbor of `x` through `slot`, or `None` when that neighbor lies
    /// outside the window.
    fn neighbor(&self, x: Self::Site, slot: usize) -> Option<Self::Site>;

    /// Slot under which `x` appears in the neighbor list of
    /// `neighbor(x, slot)`.
    fn reverse_slot(&self, x: Self::Site, slot: usize) -> usize;

    fn contains(&self, x: Self::Site) -> bool;

    /// True when some neighbor slot of `x` leads out of the window.
    fn is_boundary(&self, x: Self::Site) -> bool;

    /// Injective 120-bit key, used to seed per-stream randomness.
    fn site_key(&self, x: Self::Site) -> u128;

    /// Number of sites when the graph supports dense indexing.
    fn dense_len(&self) -> Option<usize> {
        None
    }

    /// Dense index of `x`; only meaningful when `dense_len` is `Some`.
    fn dense_index(&self, _x: Self::Site) -> usize {
        0
    }

    /// The distinguished origin (lattice `0`, tree root).
    fn origin(&self) -> Self::Site;

    /// All sites of the window in canonical order.
    fn sites(&self) -> Vec<Self::Site>;

    /// Compact text form used in CSV exports (no commas).
    fn format_site(&self, x: Self::Site) -> String;

    /// Inverse of [`Graph::format_site`]; rejects sites outside the window.
    fn parse_site(&self, s: &str) -> Result<Self::Site>;

    /// In-window neighbors in slot order.
    fn neighbors_of(&self, x: Self::Site) -> Vec<Self::Site> {
        (0..self.slots())
            .filter_map(|s| self.neighbor(x, s))
            .collect()
    }
}

/// A lattice point. Coordinates beyond the box dimension are zero.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Point(pub [i32; MAX_DIM]);

impl Point {
    pub fn origin() -> Self {
        Point([0; MAX_DIM])
    }

    /// Builds a point from a coordinate slice of length at most [`MAX_DIM`].
    pub fn new(coords: &[i32]) -> Self {
        assert!(coords.len() <= MAX_DIM, "at most {MAX_DIM} coordinates");
        let mut c = [0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Point(c)
    }

    pub fn coords(&self, dim: usize) -> &[i32] {
        &self.0[..dim]
    }

    pub fn translate(&self, by: &Point) -> Point {
        let mut c = self.0;
        for (a, b) in c.iter_mut().zip(by.0.iter()) {
            *a += b;
        }
        Point(c)
    }

    pub fn max_norm(&self) -> i32 {
        self.0.iter().map(|c| c.abs()).max().unwrap_or(0)
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // trailing zeros are padding; print up to the last non-zero
        let last = self.0.iter().rposition(|&c| c != 0).map_or(1, |i| i + 1);
        write!(f, "(")?;
        for (i, c) in self.0[..last].iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// `Σ |x_i|`.
pub fn l1_norm(p: &Point) -> u32 {
    p.0.iter().map(|c| c.unsigned_abs()).sum()
}

/// The box `{x ∈ ℤᵈ : ‖x‖∞ ≤ R}`.
///
/// Slots are ordered `−e₁, …, −e_d, +e_d, …, +e₁` so that slot order
/// coincides with lexicographic order of the neighbors.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeBox {
    dim: usize,
    radius: u32,
}

impl LatticeBox {
    pub fn new(dim: usize, radius: u32) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::Domain(format!(
                "lattice dimension must be in 1..={MAX_DIM}, got {dim}"
            )));
        }
        let side = 2 * radius as u128 + 1;
        if side.pow(dim as u32) > u32::MAX as u128 {
            return Err(Error::Domain(format!(
                "lattice box d={dim} R={radius} is too large"
            )));
        }
        Ok(LatticeBox { dim, radius })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn side(&self) -> usize {
        2 * self.radius as usize + 1
    }

    fn direction(&self, slot: usize) -> (usize, i32) {
        debug_assert!(slot < 2 * self.dim);
        if slot < self.dim {
            (slot, -1)
        } else {
            (2 * self.dim - 1 - slot, 1)
        }
    }

    /// Inverse of [`Graph::dense_index`].
    pub fn site_at(&self, mut index: usize) -> Point {
        let side = self.side();
        let mut c = [0; MAX_DIM];
        for i in (0..self.dim).rev() {
            c[i] = (index % side) as i32 - self.radius as i32;
            index /= side;
        }
        Point(c)
    }

    /// Checked lookup used by the public `neighbors` operation.
    pub fn neighbors(&self, x: &Point) -> Result<Vec<Point>> {
        if !self.contains(*x) {
            return Err(Error::Domain(format!("site {x:?} is outside the box")));
        }
        Ok(self.neighbors_of(*x))
    }
}

impl Graph for LatticeBox {
    type Site = Point;

    fn slots(&self) -> usize {
        2 * self.dim
    }

    fn neighbor(&self, x: Point, slot: usize) -> Option<Point> {
        let (axis, step) = self.direction(slot);
        let mut c = x.0;
        c[axis] += step;
        (c[axis].unsigned_abs() <= self.radius).then_some(Point(c))
    }

    fn reverse_slot(&self, _x: Point, slot: usize) -> usize {
        2 * self.dim - 1 - slot
    }

    fn contains(&self, x: Point) -> bool {
        x.0[..self.dim]
            .iter()
            .all(|c| c.unsigned_abs() <= self.radius)
            && x.0[self.dim..].iter().all(|&c| c == 0)
    }

    fn is_boundary(&self, x: Point) -> bool {
        x.0[..self.dim]
            .iter()
            .any(|c| c.unsigned_abs() == self.radius)
    }

    fn site_key(&self, x: Point) -> u128 {
        self.dense_index(x) as u128
    }

    fn dense_len(&self) -> Option<usize> {
        Some(self.side().pow(self.dim as u32))
    }

    fn dense_index(&self, x: Point) -> usize {
        let side = self.side();
        x.0[..self.dim].iter().fold(0usize, |acc, &c| {
            acc * side + (c + self.radius as i32) as usize
        })
    }

    fn origin(&self) -> Point {
        Point::origin()
    }

    fn format_site(&self, x: Point) -> String {
        let parts: Vec<String> = x.coords(self.dim).iter().map(|c| c.to_string()).collect();
        parts.join(";")
    }

    fn parse_site(&self, s: &str) -> Result<Point> {
        let coords: Vec<i32> = s
            .split(';')
            .map(|c| c.trim().parse::<i32>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Domain(format!("bad lattice site {s:?}: {e}")))?;
        if coords.len() != self.dim {
            return Err(Error::Domain(format!(
                "lattice site {s:?} has {} coordinates, expected {}",
                coords.len(),
                self.dim
            )));
        }
        let p = Point::new(&coords);
        if !self.contains(p) {
            return Err(Error::Domain(format!("site {p:?} is outside the box")));
        }
        Ok(p)
    }

    fn sites(&self) -> Vec<Point> {
        (0..self.dense_len().unwrap_or(0))
            .map(|i| self.site_at(i))
            .collect()
    }
}

/// A vertex of the homogeneous tree, written as a path from the root:
/// `ups` steps towards the root's ancestors followed by `len` child steps
/// whose indices are the base-`d` digits of `digits`.
///
/// The ancestor chain `r₋₁, r₋₂, …` uses child index 0, so a path never
/// goes up and then immediately down through child 0; this makes the
/// representation unique.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct TreeSite {
    ups: u8,
    len: u8,
    digits: u128,
}

impl TreeSite {
    pub fn root() -> Self {
        TreeSite::default()
    }

    pub fn level(&self) -> i32 {
        self.len as i32 - self.ups as i32
    }

    pub fn ups(&self) -> u8 {
        self.ups
    }

    pub fn depth_below_ancestor(&self) -> u8 {
        self.len
    }
}

impl fmt::Debug for TreeSite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "T[up{} {}:{:x}]", self.ups, self.len, self.digits)
    }
}

/// The homogeneous tree `T_d` (vertex degree `d+1`) restricted to sites
/// with at most `depth` ancestor steps and `|level| ≤ depth`.
///
/// Slot 0 is the parent (level −1), slots `1..=d` the children (level +1).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruncatedTree {
    branching: u32,
    depth: u32,
}

impl TruncatedTree {
    pub fn new(branching: u32, depth: u32) -> Result<Self> {
        if branching < 2 {
            return Err(Error::Domain(format!(
                "tree branching must be at least 2, got {branching}"
            )));
        }
        // digits of the longest path (2·depth child steps) must fit in the key
        let bits_per_digit = (branching as f64).log2();
        if depth > 100 || 2.0 * depth as f64 * bits_per_digit > 104.0 {
            return Err(Error::Domain(format!(
                "tree depth {depth} too large for branching {branching}"
            )));
        }
        Ok(TruncatedTree { branching, depth })
    }

    pub fn branching(&self) -> u32 {
        self.branching
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn root(&self) -> TreeSite {
        TreeSite::root()
    }

    /// Level of a site. Always defined on a tree.
    pub fn level(&self, x: TreeSite) -> i32 {
        x.level()
    }

    pub fn parent(&self, x: TreeSite) -> TreeSite {
        if x.len == 0 {
            TreeSite {
                ups: x.ups + 1,
                ..x
            }
        } else {
            TreeSite {
                ups: x.ups,
                len: x.len - 1,
                digits: x.digits / self.branching as u128,
            }
        }
    }

    pub fn child(&self, x: TreeSite, c: u32) -> TreeSite {
        debug_assert!(c < self.branching);
        if x.len == 0 && x.ups > 0 && c == 0 {
            TreeSite {
                ups: x.ups - 1,
                len: 0,
                digits: 0,
            }
        } else {
            TreeSite {
                ups: x.ups,
                len: x.len + 1,
                digits: x.digits * self.branching as u128 + c as u128,
            }
        }
    }

    /// Child index of `x` within its parent.
    pub fn child_index(&self, x: TreeSite) -> u32 {
        if x.len == 0 {
            0
        } else {
            (x.digits % self.branching as u128) as u32
        }
    }

    /// The ancestor of the root at level `-k`.
    pub fn ancestor(&self, k: u8) -> TreeSite {
        TreeSite {
            ups: k,
            len: 0,
            digits: 0,
        }
    }

    /// Checked lookup used by the public `neighbors` operation.
    pub fn neighbors(&self, x: TreeSite) -> Result<Vec<TreeSite>> {
        if !self.contains(x) {
            return Err(Error::Domain(format!("site {x:?} is outside the tree")));
        }
        Ok(self.neighbors_of(x))
    }

    fn sites_below(&self, x: TreeSite, out: &mut Vec<TreeSite>) {
        out.push(x);
        if x.level() >= self.depth as i32 {
            return;
        }
        for c in 0..self.branching {
            self.sites_below(self.child(x, c), out);
        }
    }
}

impl Graph for TruncatedTree {
    type Site = TreeSite;

    fn slots(&self) -> usize {
        self.branching as usize + 1
    }

    fn neighbor(&self, x: TreeSite, slot: usize) -> Option<TreeSite> {
        let y = if slot == 0 {
            self.parent(x)
        } else {
            self.child(x, slot as u32 - 1)
        };
        self.contains(y).then_some(y)
    }

    fn reverse_slot(&self, x: TreeSite, slot: usize) -> usize {
        if slot == 0 {
            1 + self.child_index(x) as usize
        } else {
            0
        }
    }

    fn contains(&self, x: TreeSite) -> bool {
        x.ups as u32 <= self.depth && x.level() <= self.depth as i32
    }

    fn is_boundary(&self, x: TreeSite) -> bool {
        x.ups as u32 == self.depth || x.level() == self.depth as i32
    }

    fn site_key(&self, x: TreeSite) -> u128 {
        // 7 bits ups, 7 bits len, 104 bits of digits
        ((x.ups as u128) << 111) | ((x.len as u128) << 104) | x.digits
    }

    fn origin(&self) -> TreeSite {
        TreeSite::root()
    }

    /// `u{ups}/{c₁.c₂…}`: ancestor steps, then child indices from the top.
    fn format_site(&self, x: TreeSite) -> String {
        let b = self.branching as u128;
        let mut digits = Vec::with_capacity(x.len as usize);
        let mut rest = x.digits;
        for _ in 0..x.len {
            digits.push((rest % b).to_string());
            rest /= b;
        }
        digits.reverse();
        format!("u{}/{}", x.ups, digits.join("."))
    }

    fn parse_site(&self, s: &str) -> Result<TreeSite> {
        let bad = || Error::Domain(format!("bad tree site {s:?}"));
        let (ups, path) = s.strip_prefix('u').and_then(|r| r.split_once('/')).ok_or_else(bad)?;
        let ups: u8 = ups.parse().map_err(|_| bad())?;
        let mut x = self.ancestor(ups);
        // walking from the ancestor reproduces the canonical label
        x = TreeSite { len: 0, digits: 0, ..x };
        if !path.is_empty() {
            for c in path.split('.') {
                let c: u32 = c.parse().map_err(|_| bad())?;
                if c >= self.branching || x.len as u32 >= 2 * self.depth {
                    return Err(bad());
                }
                x = TreeSite {
                    ups: x.ups,
                    len: x.len + 1,
                    digits: x.digits * self.branching as u128 + c as u128,
                };
            }
        }
        // a path that starts by re-entering the ancestor chain is not canonical
        if x.ups > 0 && x.len > 0 && x.digits / (self.branching as u128).pow(x.len as u32 - 1) == 0 {
            return Err(bad());
        }
        if !self.contains(x) {
            return Err(Error::Domain(format!("site {s:?} is outside the tree")));
        }
        Ok(x)
    }

    /// Enumerates the whole window. Exponential in the depth; intended for
    /// small trees only.
    fn sites(&self) -> Vec<TreeSite> {
        let mut out = Vec::new();
        let top = self.ancestor(self.depth as u8);
        self.sites_below(top, &mut out);
        out.sort();
        out
    }
}

/// Runtime choice of substrate, as written in experiment configurations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "graph", rename_all = "lowercase", deny_unknown_fields)]
pub enum TopologySpec {
    Lattice {
        d: usize,
        #[serde(rename = "R")]
        r: u32,
    },
    Tree {
        d: u32,
        #[serde(rename = "D")]
        depth: u32,
    },
}

/// A site of either substrate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AnySite {
    Lattice(Point),
    Tree(TreeSite),
}

/// A constructed substrate of either kind.
#[derive(Clone, Debug, PartialEq)]
pub enum Topology {
    Lattice(LatticeBox),
    Tree(TruncatedTree),
}

impl Topology {
    pub fn from_spec(spec: &TopologySpec) -> Result<Self> {
        match *spec {
            TopologySpec::Lattice { d, r } => LatticeBox::new(d, r).map(Topology::Lattice),
            TopologySpec::Tree { d, depth } => {
                TruncatedTree::new(d, depth).map(Topology::Tree)
            }
        }
    }

    pub fn neighbors(&self, site: &AnySite) -> Result<Vec<AnySite>> {
        match (self, site) {
            (Topology::Lattice(b), AnySite::Lattice(p)) => {
                Ok(b.neighbors(p)?.into_iter().map(AnySite::Lattice).collect())
            }
            (Topology::Tree(t), AnySite::Tree(s)) => {
                Ok(t.neighbors(*s)?.into_iter().map(AnySite::Tree).collect())
            }
            _ => Err(Error::Domain("site kind does not match topology".into())),
        }
    }

    pub fn level(&self, site: &AnySite) -> Result<i32> {
        match (self, site) {
            (Topology::Tree(t), AnySite::Tree(s)) if t.contains(*s) => Ok(s.level()),
            (Topology::Tree(_), AnySite::Tree(s)) => {
                Err(Error::Domain(format!("site {s:?} is outside the tree")))
            }
            (Topology::Tree(_), _) => {
                Err(Error::Domain("site kind does not match topology".into()))
            }
            (Topology::Lattice(_), _) => Err(Error::Unsupported(
                "level is only defined on trees".into(),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: &[i32]) -> Point {
        Point::new(c)
    }

    #[test]
    fn lattice_neighbors_sorted() {
        let b = LatticeBox::new(2, 5).unwrap();
        let n = b.neighbors(&p(&[0, 0])).unwrap();
        assert_eq!(n, vec![p(&[-1, 0]), p(&[0, -1]), p(&[0, 1]), p(&[1, 0])]);
        let mut sorted = n.clone();
        sorted.sort();
        assert_eq!(n, sorted);
    }

    #[test]
    fn lattice_boundary_truncates() {
        let b = LatticeBox::new(1, 3).unwrap();
        assert_eq!(b.neighbors(&p(&[3])).unwrap(), vec![p(&[2])]);
        assert!(b.is_boundary(p(&[3])));
        assert!(b.neighbors(&p(&[4])).is_err());
    }

    #[test]
    fn l1_norm_examples() {
        assert_eq!(l1_norm(&p(&[0, 0])), 0);
        assert_eq!(l1_norm(&p(&[2, -1])), 3);
        assert_eq!(l1_norm(&p(&[-3, 0, 0])), 3);
    }

    #[test]
    fn lattice_regularity_and_symmetry() {
        for d in 1..=3 {
            for r in [0u32, 1, 2, 4] {
                let b = LatticeBox::new(d, r).unwrap();
                let sites = b.sites();
                assert_eq!(sites.len(), b.dense_len().unwrap());
                for (i, &x) in sites.iter().enumerate() {
                    assert_eq!(b.dense_index(x), i);
                    let n = b.neighbors_of(x);
                    if !b.is_boundary(x) {
                        assert_eq!(n.len(), 2 * d);
                    }
                    for s in 0..b.slots() {
                        if let Some(y) = b.neighbor(x, s) {
                            assert!(b.neighbors_of(y).contains(&x));
                            assert_eq!(b.neighbor(y, b.reverse_slot(x, s)), Some(x));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn tree_root_neighbors_levels() {
        let t = TruncatedTree::new(2, 3).unwrap();
        let n = t.neighbors(t.root()).unwrap();
        assert_eq!(n.len(), 3);
        let mut levels: Vec<i32> = n.iter().map(|s| s.level()).collect();
        levels.sort();
        assert_eq!(levels, vec![-1, 1, 1]);
        assert_eq!(t.level(t.root()), 0);
        assert_eq!(t.level(t.child(t.root(), 1)), 1);
        assert_eq!(t.level(t.parent(t.root())), -1);
    }

    #[test]
    fn tree_parent_child_roundtrip() {
        let t = TruncatedTree::new(3, 4).unwrap();
        for x in t.sites() {
            for c in 0..3 {
                let y = t.child(x, c);
                assert_eq!(t.parent(y), x);
                assert_eq!(t.child_index(y), c);
            }
        }
    }

    #[test]
    fn tree_level_consistency_full_enumeration() {
        for d in 2..=3u32 {
            for depth in 1..=4u32 {
                let t = TruncatedTree::new(d, depth).unwrap();
                let sites = t.sites();
                let set: std::collections::HashSet<_> = sites.iter().copied().collect();
                assert_eq!(set.len(), sites.len());
                let mut edges = 0usize;
                for &x in &sites {
                    let n = t.neighbors_of(x);
                    for &y in &n {
                        assert!(set.contains(&y));
                        assert_eq!((x.level() - y.level()).abs(), 1);
                        assert!(t.neighbors_of(y).contains(&x));
                    }
                    edges += n.len();
                    if !t.is_boundary(x) {
                        let down = n.iter().filter(|y| y.level() == x.level() - 1).count();
                        let up = n.iter().filter(|y| y.level() == x.level() + 1).count();
                        assert_eq!((down, up), (1, d as usize));
                    }
                }
                // connected and acyclic: |E| = |V| - 1
                assert_eq!(edges / 2, sites.len() - 1);
                let mut seen = std::collections::HashSet::new();
                let mut stack = vec![t.root()];
                while let Some(x) = stack.pop() {
                    if seen.insert(x) {
                        stack.extend(t.neighbors_of(x));
                    }
                }
                assert_eq!(seen.len(), sites.len());
            }
        }
    }

    #[test]
    fn level_on_lattice_is_unsupported() {
        let topo = Topology::Lattice(LatticeBox::new(2, 2).unwrap());
        let err = topo.level(&AnySite::Lattice(Point::origin())).unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
    }

    #[test]
    fn topology_spec_json() {
        let s: TopologySpec = serde_json::from_str(r#"{"graph":"lattice","d":2,"R":200}"#).unwrap();
        assert_eq!(s, TopologySpec::Lattice { d: 2, r: 200 });
        let s: TopologySpec = serde_json::from_str(r#"{"graph":"tree","d":2,"D":30}"#).unwrap();
        assert_eq!(s, TopologySpec::Tree { d: 2, depth: 30 });
    }
}
