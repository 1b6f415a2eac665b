//! Finite boxes of Z², bond configurations and connectivity queries.
//!
//! Vertices of a box of half-width `N` are the sites `{-N..N}²`, numbered
//! row-major from the bottom-left corner. Edges are numbered with all
//! x-oriented edges first (row-major by their left endpoint), followed by
//! all y-oriented edges (row-major by their lower endpoint). The numbering
//! is part of the on-disk format and must not change.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{bail, Error, Result};

/// A point of the integer lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Site {
    pub x: i32,
    pub y: i32,
}

impl Site {
    pub const ORIGIN: Site = Site { x: 0, y: 0 };

    pub const fn new(x: i32, y: i32) -> Self {
        Site { x, y }
    }

    pub fn linf(self) -> i32 {
        self.x.abs().max(self.y.abs())
    }

    /// Rotation by a quarter turn counterclockwise.
    pub fn rot90(self) -> Self {
        Site::new(-self.y, self.x)
    }

    /// Rotation by `k` quarter turns counterclockwise (`k` taken mod 4).
    pub fn rotate_quarters(self, k: i32) -> Self {
        (0..k.rem_euclid(4)).fold(self, |s, _| s.rot90())
    }
}

impl std::ops::Add for Site {
    type Output = Site;
    fn add(self, o: Site) -> Site {
        Site::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Site {
    type Output = Site;
    fn sub(self, o: Site) -> Site {
        Site::new(self.x - o.x, self.y - o.y)
    }
}

impl std::ops::Neg for Site {
    type Output = Site;
    fn neg(self) -> Site {
        Site::new(-self.x, -self.y)
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

/// Packed bit vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Bits {
    words: Vec<u64>,
    len: usize,
}

impl Bits {
    pub fn zeros(len: usize) -> Self {
        Bits {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut b = Bits::zeros(len);
        for i in 0..len {
            b.set(i, true);
        }
        b
    }

    /// Bits taken from the low `len` bits of `mask` (bit `i` is element `i`).
    pub fn from_mask(mask: u64, len: usize) -> Self {
        assert!(len <= 64);
        let mut b = Bits::zeros(len);
        if len > 0 {
            b.words[0] = if len == 64 { mask } else { mask & ((1u64 << len) - 1) };
        }
        b
    }

    /// Low 64 bits as an integer; only meaningful for `len <= 64`.
    pub fn to_mask(&self) -> u64 {
        self.words.first().copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i >> 6] >> (i & 63)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, v: bool) {
        debug_assert!(i < self.len);
        let m = 1u64 << (i & 63);
        if v {
            self.words[i >> 6] |= m;
        } else {
            self.words[i >> 6] &= !m;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        self.words[i >> 6] ^= 1u64 << (i & 63);
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |&i| self.get(i))
    }

    /// Lower-case hex, least significant nibble first (nibble `j` holds bits `4j..4j+3`).
    pub fn to_hex(&self) -> String {
        let nibbles = self.len.div_ceil(4);
        (0..nibbles)
            .map(|j| {
                let mut v = 0u32;
                for b in 0..4 {
                    let i = 4 * j + b;
                    if i < self.len && self.get(i) {
                        v |= 1 << b;
                    }
                }
                char::from_digit(v, 16).unwrap()
            })
            .collect()
    }

    pub fn from_hex(s: &str, len: usize) -> Result<Self> {
        if s.len() != len.div_ceil(4) {
            bail!(Parse, "expected {} hex digits, got {}", len.div_ceil(4), s.len());
        }
        let mut b = Bits::zeros(len);
        for (j, c) in s.chars().enumerate() {
            let v = c
                .to_digit(16)
                .ok_or_else(|| Error::Parse(format!("bad hex digit {c:?}")))?;
            for k in 0..4 {
                let i = 4 * j + k;
                if v >> k & 1 == 1 {
                    if i >= len {
                        bail!(Parse, "bit {i} set beyond length {len}");
                    }
                    b.set(i, true);
                }
            }
        }
        Ok(b)
    }
}

/// Set of edge ids of a fixed graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeSet {
    bits: Bits,
}

impl EdgeSet {
    pub fn empty(edge_count: usize) -> Self {
        EdgeSet {
            bits: Bits::zeros(edge_count),
        }
    }

    pub fn full(edge_count: usize) -> Self {
        EdgeSet {
            bits: Bits::ones(edge_count),
        }
    }

    pub fn from_edges(edge_count: usize, edges: impl IntoIterator<Item = usize>) -> Self {
        let mut s = EdgeSet::empty(edge_count);
        for e in edges {
            s.insert(e);
        }
        s
    }

    pub fn insert(&mut self, e: usize) {
        self.bits.set(e, true);
    }

    pub fn remove(&mut self, e: usize) {
        self.bits.set(e, false);
    }

    #[inline]
    pub fn contains(&self, e: usize) -> bool {
        self.bits.get(e)
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter_ones()
    }

    pub fn is_subset(&self, other: &EdgeSet) -> bool {
        self.iter().all(|e| other.contains(e))
    }

    pub fn is_disjoint(&self, other: &EdgeSet) -> bool {
        self.iter().all(|e| !other.contains(e))
    }

    pub fn capacity(&self) -> usize {
        self.bits.len()
    }
}

/// Finite graph on which bond configurations live.
///
/// `is_boundary` marks the interior vertex boundary used by the wired
/// cluster-counting rule.
pub trait BondGraph: Clone {
    fn vertex_count(&self) -> usize;
    fn edge_count(&self) -> usize;
    fn endpoints(&self, e: usize) -> (usize, usize);
    fn is_boundary(&self, v: usize) -> bool;
    /// Calls `f(edge, other_endpoint)` for every edge incident to `v`.
    fn for_each_incident(&self, v: usize, f: impl FnMut(usize, usize));

    fn touches_boundary(&self, e: usize) -> bool {
        let (a, b) = self.endpoints(e);
        self.is_boundary(a) || self.is_boundary(b)
    }
}

/// The box `{-N..N}²` with its nearest-neighbour edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LatticeBox {
    half_width: i32,
}

impl LatticeBox {
    pub fn new(half_width: i32) -> Result<Self> {
        if half_width < 1 {
            bail!(InvalidParameter, "box half-width must be >= 1, got {half_width}");
        }
        Ok(LatticeBox { half_width })
    }

    pub fn half_width(&self) -> i32 {
        self.half_width
    }

    /// Side length in vertices, `2N + 1`.
    pub fn side(&self) -> usize {
        (2 * self.half_width + 1) as usize
    }

    fn horizontal_count(&self) -> usize {
        self.side() * (self.side() - 1)
    }

    pub fn contains(&self, s: Site) -> bool {
        s.linf() <= self.half_width
    }

    pub fn vertex_id(&self, s: Site) -> Option<usize> {
        if !self.contains(s) {
            return None;
        }
        let n = self.half_width;
        Some(((s.y + n) as usize) * self.side() + (s.x + n) as usize)
    }

    pub fn site(&self, v: usize) -> Site {
        let n = self.half_width;
        let side = self.side();
        Site::new((v % side) as i32 - n, (v / side) as i32 - n)
    }

    /// Id of the edge joining two neighbouring sites, in either order.
    pub fn edge_between(&self, a: Site, b: Site) -> Option<usize> {
        if !self.contains(a) || !self.contains(b) {
            return None;
        }
        let (lo, hi) = if (a.x, a.y) <= (b.x, b.y) { (a, b) } else { (b, a) };
        let n = self.half_width;
        let side = self.side();
        match (hi.x - lo.x, hi.y - lo.y) {
            (1, 0) => Some(((lo.y + n) as usize) * (side - 1) + (lo.x + n) as usize),
            (0, 1) => Some(self.horizontal_count() + ((lo.y + n) as usize) * side + (lo.x + n) as usize),
            _ => None,
        }
    }

    /// Endpoints of an edge as sites, lower-left endpoint first.
    pub fn edge_sites(&self, e: usize) -> (Site, Site) {
        let n = self.half_width;
        let side = self.side();
        let h = self.horizontal_count();
        if e < h {
            let (row, col) = (e / (side - 1), e % (side - 1));
            let a = Site::new(col as i32 - n, row as i32 - n);
            (a, a + Site::new(1, 0))
        } else {
            let e = e - h;
            let (row, col) = (e / side, e % side);
            let a = Site::new(col as i32 - n, row as i32 - n);
            (a, a + Site::new(0, 1))
        }
    }

    /// Vertices of the interior boundary: sites with an incident lattice edge leaving the box.
    pub fn interior_boundary(&self) -> Vec<Site> {
        (0..self.vertex_count())
            .filter(|&v| self.is_boundary(v))
            .map(|v| self.site(v))
            .collect()
    }

    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        (0..self.vertex_count()).map(move |v| self.site(v))
    }
}

impl BondGraph for LatticeBox {
    fn vertex_count(&self) -> usize {
        self.side() * self.side()
    }

    fn edge_count(&self) -> usize {
        2 * self.horizontal_count()
    }

    fn endpoints(&self, e: usize) -> (usize, usize) {
        let (a, b) = self.edge_sites(e);
        (self.vertex_id(a).unwrap(), self.vertex_id(b).unwrap())
    }

    fn is_boundary(&self, v: usize) -> bool {
        self.site(v).linf() == self.half_width
    }

    fn for_each_incident(&self, v: usize, mut f: impl FnMut(usize, usize)) {
        let s = self.site(v);
        for d in [Site::new(1, 0), Site::new(0, 1), Site::new(-1, 0), Site::new(0, -1)] {
            let t = s + d;
            if let Some(e) = self.edge_between(s, t) {
                f(e, self.vertex_id(t).unwrap());
            }
        }
    }
}

/// Small explicit graph given by an edge list; used for toy models.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeListGraph {
    edges: Vec<(usize, usize)>,
    boundary: Vec<bool>,
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl EdgeListGraph {
    pub fn new(vertex_count: usize, edges: Vec<(usize, usize)>, boundary: Vec<usize>) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); vertex_count];
        for (e, &(a, b)) in edges.iter().enumerate() {
            if a >= vertex_count || b >= vertex_count || a == b {
                bail!(InvalidParameter, "edge {e} = ({a},{b}) is not a proper edge");
            }
            adjacency[a].push((e, b));
            adjacency[b].push((e, a));
        }
        let mut flags = vec![false; vertex_count];
        for v in boundary {
            if v >= vertex_count {
                bail!(InvalidParameter, "boundary vertex {v} out of range");
            }
            flags[v] = true;
        }
        Ok(EdgeListGraph {
            edges,
            boundary: flags,
            adjacency,
        })
    }

    /// Two vertices joined by a single edge, no boundary.
    pub fn single_edge() -> Self {
        EdgeListGraph::new(2, vec![(0, 1)], vec![]).unwrap()
    }
}

impl BondGraph for EdgeListGraph {
    fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    fn edge_count(&self) -> usize {
        self.edges.len()
    }

    fn endpoints(&self, e: usize) -> (usize, usize) {
        self.edges[e]
    }

    fn is_boundary(&self, v: usize) -> bool {
        self.boundary[v]
    }

    fn for_each_incident(&self, v: usize, mut f: impl FnMut(usize, usize)) {
        for &(e, w) in &self.adjacency[v] {
            f(e, w);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryCondition {
    Free,
    /// Components having an open edge incident to the interior boundary are
    /// not counted; every other component (isolated vertices included) is.
    /// This is the literal edge-touching rule, not the more common
    /// "glue the boundary into one vertex" formulation.
    Wired,
}

impl BoundaryCondition {
    pub fn name(self) -> &'static str {
        match self {
            BoundaryCondition::Free => "free",
            BoundaryCondition::Wired => "wired",
        }
    }
}

impl std::str::FromStr for BoundaryCondition {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "free" | "f" => Ok(BoundaryCondition::Free),
            "wired" | "w" => Ok(BoundaryCondition::Wired),
            other => Err(Error::Parse(format!("unknown boundary condition {other:?}"))),
        }
    }
}

/// One bit per edge; 1 = open.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BondConfig<G: BondGraph = LatticeBox> {
    graph: G,
    bits: Bits,
}

impl<G: BondGraph> BondConfig<G> {
    pub fn closed(graph: G) -> Self {
        let bits = Bits::zeros(graph.edge_count());
        BondConfig { graph, bits }
    }

    pub fn open(graph: G) -> Self {
        let bits = Bits::ones(graph.edge_count());
        BondConfig { graph, bits }
    }

    pub fn from_bits(graph: G, bits: Bits) -> Result<Self> {
        if bits.len() != graph.edge_count() {
            bail!(
                InvalidParameter,
                "bit vector has length {} but graph has {} edges",
                bits.len(),
                graph.edge_count()
            );
        }
        Ok(BondConfig { graph, bits })
    }

    pub fn from_mask(graph: G, mask: u64) -> Self {
        let bits = Bits::from_mask(mask, graph.edge_count());
        BondConfig { graph, bits }
    }

    pub fn graph(&self) -> &G {
        &self.graph
    }

    pub fn bits(&self) -> &Bits {
        &self.bits
    }

    #[inline]
    pub fn is_open(&self, e: usize) -> bool {
        self.bits.get(e)
    }

    #[inline]
    pub fn set(&mut self, e: usize, open: bool) {
        self.bits.set(e, open);
    }

    pub fn open_count(&self) -> usize {
        self.bits.count_ones()
    }

    pub fn open_edges(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter_ones()
    }

    /// Partial order on configurations: every edge open here is open in `other`.
    pub fn le(&self, other: &BondConfig<G>) -> bool {
        self.bits.iter_ones().all(|e| other.is_open(e))
    }
}

impl BondConfig<LatticeBox> {
    pub fn lattice(&self) -> LatticeBox {
        self.graph
    }

    pub fn is_open_between(&self, a: Site, b: Site) -> bool {
        self.graph.edge_between(a, b).is_some_and(|e| self.is_open(e))
    }

    /// Opens every edge of a nearest-neighbour path given by its sites.
    pub fn open_path(&mut self, sites: &[Site]) -> Result<()> {
        for w in sites.windows(2) {
            let e = self
                .graph
                .edge_between(w[0], w[1])
                .ok_or_else(|| Error::InvalidParameter(format!("{} - {} is not a box edge", w[0], w[1])))?;
            self.set(e, true);
        }
        Ok(())
    }

    /// One-line text form: `N=<n> bc=<free|wired> <hex bits>`.
    pub fn to_line(&self, bc: BoundaryCondition) -> String {
        format!("N={} bc={} {}", self.graph.half_width(), bc.name(), self.bits.to_hex())
    }

    pub fn parse_line(line: &str) -> Result<(Self, BoundaryCondition)> {
        let mut n = None;
        let mut bc = None;
        let mut hex = None;
        for tok in line.split_whitespace() {
            if let Some(v) = tok.strip_prefix("N=") {
                n = Some(v.parse::<i32>().map_err(|e| Error::Parse(format!("N: {e}")))?);
            } else if let Some(v) = tok.strip_prefix("bc=") {
                bc = Some(v.parse::<BoundaryCondition>()?);
            } else if hex.is_none() {
                hex = Some(tok);
            } else {
                bail!(Parse, "unexpected token {tok:?}");
            }
        }
        let n = n.ok_or_else(|| Error::Parse("missing N".into()))?;
        let bc = bc.ok_or_else(|| Error::Parse("missing bc".into()))?;
        let hex = hex.ok_or_else(|| Error::Parse("missing bit string".into()))?;
        let lattice = LatticeBox::new(n)?;
        let bits = Bits::from_hex(hex, lattice.edge_count())?;
        Ok((BondConfig::from_bits(lattice, bits)?, bc))
    }
}

/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            let p = self.parent[x] as usize;
            self.parent[x] = self.parent[p];
            x = self.parent[x] as usize;
        }
        x
    }

    /// Returns false if `a` and `b` were already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra as u32;
        self.size[ra] += self.size[rb];
        true
    }
}

/// Union-find over the open edges of `cfg`.
pub fn open_forest<G: BondGraph>(cfg: &BondConfig<G>) -> UnionFind {
    let g = cfg.graph();
    let mut uf = UnionFind::new(g.vertex_count());
    for e in cfg.open_edges() {
        let (a, b) = g.endpoints(e);
        uf.union(a, b);
    }
    uf
}

/// Number of open clusters `k` as it enters the random cluster weight.
pub fn cluster_count<G: BondGraph>(cfg: &BondConfig<G>, bc: BoundaryCondition) -> usize {
    let g = cfg.graph();
    let mut uf = open_forest(cfg);
    let n = g.vertex_count();
    let mut is_root = vec![false; n];
    for v in 0..n {
        let r = uf.find(v);
        is_root[r] = true;
    }
    if bc == BoundaryCondition::Wired {
        for e in cfg.open_edges() {
            if g.touches_boundary(e) {
                let r = uf.find(g.endpoints(e).0);
                is_root[r] = false;
            }
        }
    }
    is_root.iter().filter(|&&r| r).count()
}

/// The open component of a vertex inside an edge region.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub vertices: BTreeSet<usize>,
    pub edges: BTreeSet<usize>,
}

impl Component {
    pub fn contains_vertex(&self, v: usize) -> bool {
        self.vertices.contains(&v)
    }
}

/// Open component of `x` using only open edges inside `region` (`None` = all edges).
pub fn open_component<G: BondGraph>(cfg: &BondConfig<G>, x: usize, region: Option<&EdgeSet>) -> Result<Component> {
    let g = cfg.graph();
    if x >= g.vertex_count() {
        bail!(InvalidParameter, "vertex {x} outside the graph");
    }
    let mut vertices = BTreeSet::from([x]);
    let mut edges = BTreeSet::new();
    let mut stack = vec![x];
    while let Some(v) = stack.pop() {
        g.for_each_incident(v, |e, w| {
            if cfg.is_open(e) && region.is_none_or(|r| r.contains(e)) {
                edges.insert(e);
                if vertices.insert(w) {
                    stack.push(w);
                }
            }
        });
    }
    Ok(Component { vertices, edges })
}

/// Site-based convenience wrapper around [`open_component`].
pub fn open_component_at(cfg: &BondConfig, x: Site, region: Option<&EdgeSet>) -> Result<Component> {
    let v = cfg
        .lattice()
        .vertex_id(x)
        .ok_or_else(|| Error::InvalidParameter(format!("site {x} outside the box")))?;
    open_component(cfg, v, region)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(n: i32) -> LatticeBox {
        LatticeBox::new(n).unwrap()
    }

    #[test]
    fn box_counts() {
        assert_eq!(b(1).vertex_count(), 9);
        assert_eq!(b(1).edge_count(), 12);
        assert_eq!(b(2).vertex_count(), 25);
        assert_eq!(b(2).edge_count(), 40);
        assert_eq!(b(1).interior_boundary().len(), 8);
        assert!(LatticeBox::new(0).is_err());
    }

    #[test]
    fn indexing_is_bijective() {
        let lb = b(3);
        for v in 0..lb.vertex_count() {
            assert_eq!(lb.vertex_id(lb.site(v)), Some(v));
        }
        let mut seen = vec![false; lb.edge_count()];
        for s in lb.sites() {
            for d in [Site::new(1, 0), Site::new(0, 1)] {
                if let Some(e) = lb.edge_between(s, s + d) {
                    assert!(!seen[e]);
                    seen[e] = true;
                    assert_eq!(lb.edge_sites(e), (s, s + d));
                    assert_eq!(lb.edge_between(s + d, s), Some(e));
                }
            }
        }
        assert!(seen.iter().all(|&x| x));
    }

    #[test]
    fn edge_order_is_horizontal_first() {
        let lb = b(1);
        assert_eq!(lb.edge_sites(0), (Site::new(-1, -1), Site::new(0, -1)));
        assert_eq!(lb.edge_sites(5), (Site::new(0, 1), Site::new(1, 1)));
        assert_eq!(lb.edge_sites(6), (Site::new(-1, -1), Site::new(-1, 0)));
        assert_eq!(lb.edge_sites(11), (Site::new(1, 0), Site::new(1, 1)));
    }

    #[test]
    fn cluster_count_examples() {
        let lb = b(1);
        assert_eq!(cluster_count(&BondConfig::closed(lb), BoundaryCondition::Free), 9);
        assert_eq!(cluster_count(&BondConfig::open(lb), BoundaryCondition::Free), 1);
        let mut cfg = BondConfig::closed(b(2));
        cfg.open_path(&[Site::new(0, 0), Site::new(1, 0)]).unwrap();
        assert_eq!(cluster_count(&cfg, BoundaryCondition::Free), 24);
    }

    #[test]
    fn wired_rule_excludes_boundary_touching_components() {
        let lb = b(1);
        // every edge of the 3x3 grid touches the boundary
        assert_eq!(cluster_count(&BondConfig::open(lb), BoundaryCondition::Wired), 0);
        // isolated vertices have no edges and are all counted
        assert_eq!(cluster_count(&BondConfig::closed(lb), BoundaryCondition::Wired), 9);
        let mut cfg = BondConfig::closed(b(2));
        cfg.open_path(&[Site::new(0, 0), Site::new(1, 0)]).unwrap();
        assert_eq!(cluster_count(&cfg, BoundaryCondition::Wired), 24);
        cfg.open_path(&[Site::new(1, 0), Site::new(2, 0)]).unwrap();
        assert_eq!(cluster_count(&cfg, BoundaryCondition::Wired), 22);
    }

    #[test]
    fn open_component_examples() {
        let lb = b(4);
        let cfg = BondConfig::closed(lb);
        let c = open_component_at(&cfg, Site::ORIGIN, None).unwrap();
        assert_eq!(c.vertices.len(), 1);
        assert!(c.edges.is_empty());

        let mut cfg = BondConfig::closed(lb);
        cfg.open_path(&[Site::new(0, 0), Site::new(1, 0), Site::new(1, 1)])
            .unwrap();
        let c = open_component_at(&cfg, Site::ORIGIN, None).unwrap();
        assert_eq!((c.edges.len(), c.vertices.len()), (2, 3));

        let mut cfg = BondConfig::closed(lb);
        cfg.open_path(&[Site::new(0, 0), Site::new(1, 0)]).unwrap();
        cfg.open_path(&[Site::new(2, 0), Site::new(3, 0)]).unwrap();
        let c = open_component_at(&cfg, Site::ORIGIN, None).unwrap();
        assert!(!c.contains_vertex(lb.vertex_id(Site::new(2, 0)).unwrap()));
        assert!(open_component_at(&cfg, Site::new(9, 0), None).is_err());
    }

    #[test]
    fn open_component_respects_region() {
        let lb = b(3);
        let mut cfg = BondConfig::closed(lb);
        cfg.open_path(&[Site::new(0, 0), Site::new(1, 0), Site::new(2, 0)])
            .unwrap();
        let first = lb.edge_between(Site::new(0, 0), Site::new(1, 0)).unwrap();
        let region = EdgeSet::from_edges(lb.edge_count(), [first]);
        let c = open_component_at(&cfg, Site::ORIGIN, Some(&region)).unwrap();
        assert_eq!(c.edges.len(), 1);
    }

    #[test]
    fn line_roundtrip() {
        let lb = b(2);
        let mut cfg = BondConfig::closed(lb);
        for e in [0, 3, 17, 39] {
            cfg.set(e, true);
        }
        let line = cfg.to_line(BoundaryCondition::Wired);
        let (back, bc) = BondConfig::parse_line(&line).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(bc, BoundaryCondition::Wired);
        assert!(BondConfig::parse_line("N=2 bc=free 00").is_err());
    }
}
