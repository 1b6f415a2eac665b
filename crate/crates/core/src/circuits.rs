//! Open circuits around the origin, sector paths and fluctuation statistics.

use std::collections::{BTreeSet, HashMap};

use crate::error::{bail, Error, Result};
use crate::geometry::{triangle_area, Sector, Vec2};
use crate::lattice::{open_component, BondConfig, BondGraph, Component, EdgeSet, LatticeBox, Site};

/// Unit lattice steps in counterclockwise order starting east.
pub const STEPS: [Site; 4] = [Site::new(1, 0), Site::new(0, 1), Site::new(-1, 0), Site::new(0, -1)];

/// Twice the signed shoelace area of a closed vertex cycle.
fn twice_signed_area(vertices: &[Site]) -> i64 {
    let n = vertices.len();
    (0..n)
        .map(|i| {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            a.x as i64 * b.y as i64 - b.x as i64 * a.y as i64
        })
        .sum()
}

/// Self-avoiding closed nearest-neighbour lattice path, stored counterclockwise
/// and starting from its lexicographically smallest vertex.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Circuit {
    vertices: Vec<Site>,
}

impl Circuit {
    /// Validates and normalises a vertex cycle (the closing step is implicit).
    pub fn new(mut vertices: Vec<Site>) -> Result<Self> {
        if vertices.len() > 1 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        let n = vertices.len();
        if n < 4 {
            bail!(InvalidShape, "a circuit needs at least 4 vertices, got {n}");
        }
        let distinct: BTreeSet<Site> = vertices.iter().copied().collect();
        if distinct.len() != n {
            bail!(InvalidShape, "circuit visits a vertex twice");
        }
        for i in 0..n {
            let d = vertices[(i + 1) % n] - vertices[i];
            if d.x.abs() + d.y.abs() != 1 {
                bail!(
                    InvalidShape,
                    "{} -> {} is not a lattice step",
                    vertices[i],
                    vertices[(i + 1) % n]
                );
            }
        }
        if twice_signed_area(&vertices) < 0 {
            vertices.reverse();
        }
        let start = (0..n).min_by_key(|&i| vertices[i]).unwrap();
        vertices.rotate_left(start);
        Ok(Circuit { vertices })
    }

    /// Rectilinear polygon through the given corners; consecutive corners
    /// must share a coordinate.
    pub fn from_corners(corners: &[Site]) -> Result<Self> {
        let mut vertices = Vec::new();
        for i in 0..corners.len() {
            let a = corners[i];
            let b = corners[(i + 1) % corners.len()];
            if a.x != b.x && a.y != b.y {
                bail!(InvalidShape, "corners {a} and {b} are not axis-aligned");
            }
            let step = Site::new((b.x - a.x).signum(), (b.y - a.y).signum());
            let mut cur = a;
            while cur != b {
                vertices.push(cur);
                cur = cur + step;
            }
        }
        Circuit::new(vertices)
    }

    /// Boundary of the square `[-h, h]²`.
    pub fn square(h: i32) -> Self {
        Circuit::from_corners(&[Site::new(-h, -h), Site::new(h, -h), Site::new(h, h), Site::new(-h, h)]).unwrap()
    }

    pub fn vertices(&self) -> &[Site] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Consecutive vertex pairs, including the closing edge.
    pub fn edges(&self) -> impl Iterator<Item = (Site, Site)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn edge_set(&self, lattice: &LatticeBox) -> Result<EdgeSet> {
        let mut s = EdgeSet::empty(lattice.edge_count());
        for (a, b) in self.edges() {
            let e = lattice
                .edge_between(a, b)
                .ok_or_else(|| Error::InvalidShape(format!("edge {a}-{b} outside the box")))?;
            s.insert(e);
        }
        Ok(s)
    }

    /// Enclosed area (an integer for lattice circuits).
    pub fn area(&self) -> i64 {
        twice_signed_area(&self.vertices) / 2
    }

    pub fn points(&self) -> Vec<Vec2> {
        self.vertices.iter().map(|&s| Vec2::from(s)).collect()
    }

    pub fn contains_vertex(&self, s: Site) -> bool {
        self.vertices.contains(&s)
    }

    /// Whether the point lies in the bounded complementary component (not on the circuit).
    pub fn encloses(&self, p: Vec2) -> bool {
        let n = self.vertices.len();
        let mut inside = false;
        for i in 0..n {
            let a = Vec2::from(self.vertices[i]);
            let b = Vec2::from(self.vertices[(i + 1) % n]);
            if crate::geometry::point_segment_distance(p, a, b) == 0.0 {
                return false;
            }
            if (a.y > p.y) != (b.y > p.y) {
                let xc = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if p.x < xc {
                    inside = !inside;
                }
            }
        }
        inside
    }

    pub fn encloses_origin(&self) -> bool {
        !self.contains_vertex(Site::ORIGIN) && self.encloses(Vec2::new(0.5, 0.5))
    }

    /// Unit faces (named by their lower-left corner) inside the circuit.
    pub fn enclosed_faces(&self) -> BTreeSet<Site> {
        let (lo, hi) = self.bounding_box();
        let mut out = BTreeSet::new();
        for j in lo.y..hi.y {
            for i in lo.x..hi.x {
                if self.encloses(Vec2::new(i as f64 + 0.5, j as f64 + 0.5)) {
                    out.insert(Site::new(i, j));
                }
            }
        }
        out
    }

    pub fn bounding_box(&self) -> (Site, Site) {
        let lo = Site::new(
            self.vertices.iter().map(|s| s.x).min().unwrap(),
            self.vertices.iter().map(|s| s.y).min().unwrap(),
        );
        let hi = Site::new(
            self.vertices.iter().map(|s| s.x).max().unwrap(),
            self.vertices.iter().map(|s| s.y).max().unwrap(),
        );
        (lo, hi)
    }

    pub fn touches_box_boundary(&self, lattice: &LatticeBox) -> bool {
        self.vertices.iter().any(|s| s.linf() >= lattice.half_width())
    }

    /// Largest distance between two vertices.
    pub fn diameter(&self) -> f64 {
        diameter(&self.vertices)
    }

    pub fn translated(&self, z: Site) -> Circuit {
        Circuit {
            vertices: self.vertices.iter().map(|&s| s + z).collect(),
        }
    }
}

fn diameter(vertices: &[Site]) -> f64 {
    let mut best = 0i64;
    for (i, a) in vertices.iter().enumerate() {
        for b in &vertices[i + 1..] {
            let d = b.x as i64 - a.x as i64;
            let e = b.y as i64 - a.y as i64;
            best = best.max(d * d + e * e);
        }
    }
    (best as f64).sqrt()
}

/// `|INT(Γ)|`.
pub fn interior_area(c: &Circuit) -> f64 {
    c.area() as f64
}

/// Area excess `|INT(Γ)| - n²`.
pub fn area_excess(c: &Circuit, n: i64) -> Result<f64> {
    let a = c.area();
    if a < n * n {
        bail!(Precondition, "area {a} is below n² = {}", n * n);
    }
    Ok((a - n * n) as f64)
}

/// Result of an outermost-circuit search in a finite box.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outermost {
    /// No open circuit surrounds the origin.
    None,
    /// The outermost circuit inside the box reaches the box boundary, so the
    /// true outermost circuit of the infinite configuration is not observed.
    Censored(Circuit),
    Found(Circuit),
}

impl Outermost {
    pub fn found(&self) -> Option<&Circuit> {
        match self {
            Outermost::Found(c) => Some(c),
            _ => None,
        }
    }

    /// The outermost circuit within the box, censored or not.
    pub fn in_box(&self) -> Option<&Circuit> {
        match self {
            Outermost::Found(c) | Outermost::Censored(c) => Some(c),
            Outermost::None => None,
        }
    }

    fn classify(c: Circuit, lattice: &LatticeBox) -> Self {
        if c.touches_box_boundary(lattice) {
            Outermost::Censored(c)
        } else {
            Outermost::Found(c)
        }
    }
}

/// Unit faces of a box, with the region outside the box as one extra face.
struct Faces {
    n: i32,
    side: usize,
}

impl Faces {
    fn new(lattice: &LatticeBox) -> Self {
        let n = lattice.half_width();
        Faces {
            n,
            side: (2 * n) as usize,
        }
    }

    fn count(&self) -> usize {
        self.side * self.side
    }

    fn outer(&self) -> usize {
        self.count()
    }

    fn id(&self, f: Site) -> Option<usize> {
        let (i, j) = (f.x + self.n, f.y + self.n);
        if i < 0 || j < 0 || i as usize >= self.side || j as usize >= self.side {
            None
        } else {
            Some(j as usize * self.side + i as usize)
        }
    }

    fn corner(&self, id: usize) -> Site {
        Site::new((id % self.side) as i32 - self.n, (id / self.side) as i32 - self.n)
    }

    /// The four sides of face `f` as (neighbour face or outer, separating edge
    /// endpoints in counterclockwise order around `f`).
    fn sides(&self, f: Site) -> [(usize, Site, Site); 4] {
        let (i, j) = (f.x, f.y);
        let nb = |s: Site| self.id(s).unwrap_or(self.outer());
        [
            (nb(Site::new(i, j - 1)), Site::new(i, j), Site::new(i + 1, j)),
            (nb(Site::new(i + 1, j)), Site::new(i + 1, j), Site::new(i + 1, j + 1)),
            (nb(Site::new(i, j + 1)), Site::new(i + 1, j + 1), Site::new(i, j + 1)),
            (nb(Site::new(i - 1, j)), Site::new(i, j + 1), Site::new(i, j)),
        ]
    }
}

/// The outermost open circuit surrounding the origin.
///
/// Faces reachable from outside the box by crossing closed edges are flooded
/// first; the unreached face component around the origin is then exactly the
/// interior of the outermost circuit, whose boundary is traced with the
/// interior on the left.
pub fn outermost_circuit(cfg: &BondConfig) -> Outermost {
    let lattice = cfg.lattice();
    let faces = Faces::new(&lattice);
    let nf = faces.count();
    let mut reached = vec![false; nf];
    let mut stack = Vec::new();
    for id in 0..nf {
        let f = faces.corner(id);
        for (nb, a, b) in faces.sides(f) {
            if nb == faces.outer() && !cfg.is_open_between(a, b) && !reached[id] {
                reached[id] = true;
                stack.push(id);
            }
        }
    }
    while let Some(id) = stack.pop() {
        for (nb, a, b) in faces.sides(faces.corner(id)) {
            if nb != faces.outer() && !reached[nb] && !cfg.is_open_between(a, b) {
                reached[nb] = true;
                stack.push(nb);
            }
        }
    }
    let origin_faces = [Site::new(-1, -1), Site::new(0, -1), Site::new(-1, 0), Site::new(0, 0)];
    if origin_faces.iter().any(|&f| reached[faces.id(f).unwrap()]) {
        return Outermost::None;
    }
    // interior component: unreached faces connected to the origin faces
    let mut inside = vec![false; nf];
    let start = faces.id(Site::new(0, 0)).unwrap();
    inside[start] = true;
    stack.push(start);
    while let Some(id) = stack.pop() {
        for (nb, _, _) in faces.sides(faces.corner(id)) {
            if nb != faces.outer() && !reached[nb] && !inside[nb] {
                inside[nb] = true;
                stack.push(nb);
            }
        }
    }
    let mut outgoing: HashMap<Site, Vec<Site>> = HashMap::new();
    let mut boundary_edges = 0usize;
    for id in (0..nf).filter(|&id| inside[id]) {
        for (nb, a, b) in faces.sides(faces.corner(id)) {
            if nb == faces.outer() || !inside[nb] {
                outgoing.entry(a).or_default().push(b);
                boundary_edges += 1;
            }
        }
    }
    let start = *outgoing.keys().min().unwrap();
    let mut vertices = vec![start];
    let mut prev_dir = Site::new(1, 0);
    let mut cur = start;
    let mut used = 0usize;
    loop {
        let outs = outgoing.get_mut(&cur).expect("boundary trace left the interface");
        // rightmost turn first: right, straight, left
        let order = [prev_dir.rotate_quarters(-1), prev_dir, prev_dir.rotate_quarters(1)];
        let k = order
            .iter()
            .find_map(|d| outs.iter().position(|&t| t - cur == *d))
            .unwrap_or(0);
        let next = outs.swap_remove(k);
        used += 1;
        prev_dir = next - cur;
        cur = next;
        if cur == start {
            break;
        }
        vertices.push(cur);
    }
    debug_assert_eq!(
        used, boundary_edges,
        "interior of the outermost circuit is not simply connected"
    );
    let c = Circuit::new(vertices).expect("traced interface is a lattice circuit");
    Outermost::classify(c, &lattice)
}

/// Cap on DFS steps in the exhaustive search.
pub const BRUTE_FORCE_STEP_LIMIT: u64 = 200_000_000;

/// Exhaustive reference for [`outermost_circuit`]: enumerates every open
/// simple cycle, keeps those surrounding the origin and returns the one whose
/// interior contains all the others. Fails if no such cycle is unique.
pub fn brute_force_outermost(cfg: &BondConfig) -> Result<Outermost> {
    let lattice = cfg.lattice();
    let cycles = open_cycles(cfg, BRUTE_FORCE_STEP_LIMIT)?;
    let enclosing: Vec<(Circuit, BTreeSet<Site>)> = cycles
        .into_iter()
        .map(|v| Circuit::new(v).expect("enumerated cycle is a circuit"))
        .filter(|c| c.encloses_origin())
        .map(|c| {
            let f = c.enclosed_faces();
            (c, f)
        })
        .collect();
    if enclosing.is_empty() {
        return Ok(Outermost::None);
    }
    let maximal: Vec<usize> = (0..enclosing.len())
        .filter(|&i| {
            !enclosing
                .iter()
                .enumerate()
                .any(|(j, other)| j != i && enclosing[i].1.is_subset(&other.1) && enclosing[i].1 != other.1)
        })
        .collect();
    if maximal.len() != 1 {
        bail!(Internal, "{} maximal circuits around the origin", maximal.len());
    }
    let best = &enclosing[maximal[0]];
    if !enclosing.iter().all(|(_, f)| f.is_subset(&best.1)) {
        bail!(Internal, "outermost circuit does not contain every other circuit");
    }
    Ok(Outermost::classify(best.0.clone(), &lattice))
}

/// All simple cycles of the open subgraph, each listed once.
pub fn open_cycles(cfg: &BondConfig, step_limit: u64) -> Result<Vec<Vec<Site>>> {
    let lattice = cfg.lattice();
    let nv = lattice.vertex_count();
    let mut adj = vec![Vec::new(); nv];
    for e in cfg.open_edges() {
        let (a, b) = lattice.endpoints(e);
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut out = Vec::new();
    let mut on_path = vec![false; nv];
    let mut steps = 0u64;
    for s in 0..nv {
        if adj[s].len() < 2 {
            continue;
        }
        let mut path = vec![s];
        on_path[s] = true;
        cycles_from(s, &adj, &mut path, &mut on_path, &mut out, &mut steps, step_limit)?;
        on_path[s] = false;
    }
    Ok(out
        .into_iter()
        .map(|c| c.into_iter().map(|v| lattice.site(v)).collect())
        .collect())
}

fn cycles_from(
    s: usize,
    adj: &[Vec<usize>],
    path: &mut Vec<usize>,
    on_path: &mut [bool],
    out: &mut Vec<Vec<usize>>,
    steps: &mut u64,
    limit: u64,
) -> Result<()> {
    *steps += 1;
    if *steps > limit {
        bail!(TooLarge, "cycle enumeration exceeded {limit} steps");
    }
    let v = *path.last().unwrap();
    for &w in &adj[v] {
        if w == s && path.len() >= 4 && path[1] < v {
            // each cycle is found in both directions; keep one
            out.push(path.clone());
        } else if w > s && !on_path[w] {
            on_path[w] = true;
            path.push(w);
            cycles_from(s, adj, path, on_path, out, steps, limit)?;
            path.pop();
            on_path[w] = false;
        }
    }
    Ok(())
}

/// Edges of the box whose closed segment lies in the sector.
pub fn sector_edges(lattice: &LatticeBox, sector: &Sector) -> EdgeSet {
    let mut s = EdgeSet::empty(lattice.edge_count());
    for e in 0..lattice.edge_count() {
        let (a, b) = lattice.edge_sites(e);
        if sector.contains_segment(a.into(), b.into()) {
            s.insert(e);
        }
    }
    s
}

/// An open self-avoiding path from `x` to `y` inside the sector swept
/// counterclockwise from `x` to `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorPath {
    pub x: Site,
    pub y: Site,
    pub vertices: Vec<Site>,
    pub sector: Sector,
}

impl SectorPath {
    /// Area of the bounded region cut off by the path together with the
    /// segments from the origin to `x` and `y`.
    pub fn enclosed_area(&self) -> f64 {
        path_area(&self.vertices)
    }

    pub fn diameter(&self) -> f64 {
        diameter(&self.vertices)
    }
}

/// Shoelace area of the polygon `0, v_0, ..., v_k` (positive when counterclockwise).
pub fn path_area(vertices: &[Site]) -> f64 {
    let s: i64 = vertices
        .windows(2)
        .map(|w| w[0].x as i64 * w[1].y as i64 - w[1].x as i64 * w[0].y as i64)
        .sum();
    s as f64 / 2.0
}

fn sector_between(x: Site, y: Site) -> Result<Sector> {
    if x == Site::ORIGIN || y == Site::ORIGIN {
        bail!(InvalidParameter, "sector endpoints must differ from the origin");
    }
    Sector::new(x.into(), y.into())
}

/// The outermost open path from `x` to `y` in the sector `A_{x,y}`: the one
/// cutting off the largest bounded region together with the sector's sides.
///
/// Found by walking along the open cluster with the far side of the sector on
/// the right (always taking the rightmost available edge) from `x` until `y`
/// is reached, then erasing loops in chronological order.
pub fn outermost_open_path(cfg: &BondConfig, x: Site, y: Site) -> Result<Option<SectorPath>> {
    let lattice = cfg.lattice();
    let (ix, iy) = match (lattice.vertex_id(x), lattice.vertex_id(y)) {
        (Some(a), Some(b)) => (a, b),
        _ => bail!(InvalidParameter, "endpoints {x}, {y} must lie in the box"),
    };
    let sector = sector_between(x, y)?;
    let region = sector_edges(&lattice, &sector);
    let comp = open_component(cfg, ix, Some(&region))?;
    if !comp.contains_vertex(iy) {
        return Ok(None);
    }
    if x == y {
        return Ok(Some(SectorPath {
            x,
            y,
            vertices: vec![x],
            sector,
        }));
    }
    let usable = |a: Site, d: Site| {
        lattice
            .edge_between(a, a + d)
            .is_some_and(|e| region.contains(e) && cfg.is_open(e))
    };
    // pretend to arrive at x moving radially outward
    let xv = Vec2::from(x);
    let back = (-xv).arg();
    let first = (0..4)
        .map(|k| {
            let ang = crate::geometry::ccw_angle(back, Vec2::from(STEPS[k]).arg());
            (
                if ang <= crate::geometry::ANGLE_TOL {
                    std::f64::consts::TAU
                } else {
                    ang
                },
                k,
            )
        })
        .filter(|&(_, k)| usable(x, STEPS[k]))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, k)| k)
        .ok_or_else(|| Error::Internal("no usable edge at the path start".into()))?;

    let mut walk = vec![x];
    let mut cur = x + STEPS[first];
    let mut dir = first;
    walk.push(cur);
    let limit = 4 * lattice.edge_count() + 4;
    while cur != y {
        if walk.len() > limit {
            bail!(Internal, "boundary walk from {x} did not reach {y}");
        }
        // scan counterclockwise starting just after the reversed incoming direction
        let rev = (dir + 2) % 4;
        let next = (1..=4)
            .map(|k| (rev + k) % 4)
            .find(|&k| usable(cur, STEPS[k]))
            .expect("walk reached a vertex without open edges");
        dir = next;
        cur = cur + STEPS[next];
        walk.push(cur);
    }
    Ok(Some(SectorPath {
        x,
        y,
        vertices: loop_erase(&walk),
        sector,
    }))
}

/// Chronological loop erasure of a walk.
pub fn loop_erase(walk: &[Site]) -> Vec<Site> {
    let mut out: Vec<Site> = Vec::new();
    let mut pos: HashMap<Site, usize> = HashMap::new();
    for &v in walk {
        if let Some(&i) = pos.get(&v) {
            for w in out.drain(i + 1..) {
                pos.remove(&w);
            }
        } else {
            pos.insert(v, out.len());
            out.push(v);
        }
    }
    out
}

/// All open self-avoiding paths from `x` to `y` using edges of `region`.
pub fn enumerate_open_paths(
    cfg: &BondConfig,
    x: Site,
    y: Site,
    region: &EdgeSet,
    step_limit: u64,
) -> Result<Vec<Vec<Site>>> {
    let lattice = cfg.lattice();
    let mut out = Vec::new();
    let mut path = vec![x];
    let mut seen = BTreeSet::from([x]);
    let mut steps = 0u64;
    fn rec(
        cfg: &BondConfig,
        lattice: &LatticeBox,
        region: &EdgeSet,
        y: Site,
        path: &mut Vec<Site>,
        seen: &mut BTreeSet<Site>,
        out: &mut Vec<Vec<Site>>,
        steps: &mut u64,
        limit: u64,
    ) -> Result<()> {
        *steps += 1;
        if *steps > limit {
            bail!(TooLarge, "path enumeration exceeded {limit} steps");
        }
        let v = *path.last().unwrap();
        if v == y {
            out.push(path.clone());
            return Ok(());
        }
        for d in STEPS {
            let w = v + d;
            let ok = lattice
                .edge_between(v, w)
                .is_some_and(|e| region.contains(e) && cfg.is_open(e));
            if ok && seen.insert(w) {
                path.push(w);
                rec(cfg, lattice, region, y, path, seen, out, steps, limit)?;
                path.pop();
                seen.remove(&w);
            }
        }
        Ok(())
    }
    rec(
        cfg, &lattice, region, y, &mut path, &mut seen, &mut out, &mut steps, step_limit,
    )?;
    Ok(out)
}

/// Exhaustive reference for [`outermost_open_path`] on small boxes.
pub fn brute_force_open_path(cfg: &BondConfig, x: Site, y: Site) -> Result<Option<Vec<Site>>> {
    let sector = sector_between(x, y)?;
    let region = sector_edges(&cfg.lattice(), &sector);
    let paths = enumerate_open_paths(cfg, x, y, &region, BRUTE_FORCE_STEP_LIMIT)?;
    Ok(paths.into_iter().max_by(|a, b| path_area(a).total_cmp(&path_area(b))))
}

/// The joint open cluster of `x` and `y` within `region`, if they are connected there.
pub fn common_cluster(cfg: &BondConfig, x: Site, y: Site, region: Option<&EdgeSet>) -> Result<Option<Component>> {
    let lattice = cfg.lattice();
    let (ix, iy) = match (lattice.vertex_id(x), lattice.vertex_id(y)) {
        (Some(a), Some(b)) => (a, b),
        _ => bail!(InvalidParameter, "points {x}, {y} must lie in the box"),
    };
    let c = open_component(cfg, ix, region)?;
    Ok(c.contains_vertex(iy).then_some(c))
}

/// Largest distance from a point of the connected lattice set (given by its
/// vertices) to the segment `[x, y]`.
pub fn fluctuation(vertices: &[Site], x: Site, y: Site) -> Result<f64> {
    if !vertices.contains(&x) || !vertices.contains(&y) {
        bail!(Precondition, "both chord endpoints must belong to the set");
    }
    let (a, b) = (Vec2::from(x), Vec2::from(y));
    // distance to a convex set is convex along each edge, so vertices suffice
    Ok(vertices
        .iter()
        .map(|&v| crate::geometry::point_segment_distance(v.into(), a, b))
        .fold(0.0, f64::max))
}

/// Default `eps` of the good-area-capture test.
pub const GOOD_AREA_CAPTURE_EPS: f64 = 0.1;

/// Whether the path is not too spread out (`diam <= 2‖x - y‖`) and cuts off
/// at least `|T(0,x,y)| + eps ‖x - y‖^{3/2} (ln ‖x - y‖)^{1/2}` of area.
pub fn good_area_capture(path: &SectorPath, eps: f64) -> Result<bool> {
    let d = Vec2::from(path.x).dist(path.y.into());
    if d <= 1.0 {
        bail!(
            InvalidParameter,
            "endpoints must be more than distance 1 apart, got {d}"
        );
    }
    if path.diameter() > 2.0 * d {
        return Ok(false);
    }
    let needed = triangle_area(path.x.into(), path.y.into()) + eps * d.powf(1.5) * d.ln().sqrt();
    Ok(path.enclosed_area() >= needed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(x: i32, y: i32) -> Site {
        Site::new(x, y)
    }

    fn with_circuits(n: i32, circuits: &[&Circuit]) -> BondConfig {
        let mut cfg = BondConfig::closed(LatticeBox::new(n).unwrap());
        for c in circuits {
            for (a, b) in c.edges() {
                cfg.open_path(&[a, b]).unwrap();
            }
        }
        cfg
    }

    #[test]
    fn circuit_validation_and_area() {
        let unit = Circuit::new(vec![s(0, 0), s(1, 0), s(1, 1), s(0, 1)]).unwrap();
        assert_eq!(unit.area(), 1);
        let cw = Circuit::new(vec![s(0, 0), s(0, 1), s(1, 1), s(1, 0)]).unwrap();
        assert_eq!(cw, unit);
        assert_eq!(Circuit::square(1).area(), 4);
        assert_eq!(Circuit::square(1).len(), 8);
        let ell = Circuit::from_corners(&[s(0, 0), s(2, 0), s(2, 1), s(1, 1), s(1, 2), s(0, 2)]).unwrap();
        assert_eq!(interior_area(&ell), 3.0);
        assert_eq!(ell.enclosed_faces().len(), 3);
        assert!(Circuit::new(vec![s(0, 0), s(1, 0), s(0, 0), s(1, 0)]).is_err());
        assert!(Circuit::new(vec![s(0, 0), s(2, 0), s(2, 2), s(0, 2)]).is_err());
    }

    #[test]
    fn area_excess_examples() {
        let sq4 = Circuit::from_corners(&[s(-2, -2), s(2, -2), s(2, 2), s(-2, 2)]).unwrap();
        assert_eq!(area_excess(&sq4, 4).unwrap(), 0.0);
        let r = Circuit::from_corners(&[s(-2, -2), s(3, -2), s(3, 2), s(-2, 2)]).unwrap();
        assert_eq!(area_excess(&r, 4).unwrap(), 4.0);
        assert!(area_excess(&sq4, 5).is_err());
    }

    #[test]
    fn outermost_examples() {
        let lb = LatticeBox::new(4).unwrap();
        assert_eq!(outermost_circuit(&BondConfig::closed(lb)), Outermost::None);
        let sq1 = Circuit::square(1);
        let cfg = with_circuits(4, &[&sq1]);
        assert_eq!(outermost_circuit(&cfg), Outermost::Found(sq1.clone()));
        assert_eq!(brute_force_outermost(&cfg).unwrap(), Outermost::Found(sq1.clone()));
        let sq2 = Circuit::square(2);
        let cfg = with_circuits(4, &[&sq1, &sq2]);
        assert_eq!(outermost_circuit(&cfg), Outermost::Found(sq2.clone()));
        assert_eq!(brute_force_outermost(&cfg).unwrap(), Outermost::Found(sq2.clone()));
        assert_eq!(sq2.area(), 16);
        let shifted = with_circuits(4, &[&sq1.translated(s(3, 0))]);
        assert_eq!(outermost_circuit(&shifted), Outermost::None);
        assert_eq!(brute_force_outermost(&shifted).unwrap(), Outermost::None);
    }

    #[test]
    fn boundary_circuit_is_censored() {
        let cfg = with_circuits(2, &[&Circuit::square(2)]);
        assert!(matches!(outermost_circuit(&cfg), Outermost::Censored(_)));
    }

    #[test]
    fn pinched_configuration() {
        // two squares sharing the corner (1,1); only the lower-left one surrounds the origin
        let a = Circuit::from_corners(&[s(-1, -1), s(1, -1), s(1, 1), s(-1, 1)]).unwrap();
        let b = Circuit::from_corners(&[s(1, 1), s(3, 1), s(3, 3), s(1, 3)]).unwrap();
        let cfg = with_circuits(4, &[&a, &b]);
        assert_eq!(outermost_circuit(&cfg), Outermost::Found(a.clone()));
        assert_eq!(brute_force_outermost(&cfg).unwrap(), Outermost::Found(a));
    }

    #[test]
    fn open_path_examples() {
        let lb = LatticeBox::new(5).unwrap();
        let mut cfg = BondConfig::closed(lb);
        cfg.open_path(&[s(3, 0), s(3, 1), s(3, 2), s(3, 3)]).unwrap();
        let p = outermost_open_path(&cfg, s(3, 0), s(3, 3)).unwrap().unwrap();
        assert_eq!(p.vertices, vec![s(3, 0), s(3, 1), s(3, 2), s(3, 3)]);
        assert!((p.enclosed_area() - 4.5).abs() < 1e-12);
        assert!(!good_area_capture(&p, GOOD_AREA_CAPTURE_EPS).unwrap());

        // a second, bulging arc farther from the origin
        cfg.open_path(&[s(3, 0), s(4, 0), s(4, 1), s(4, 2), s(4, 3), s(3, 3)])
            .unwrap();
        let p = outermost_open_path(&cfg, s(3, 0), s(3, 3)).unwrap().unwrap();
        assert_eq!(p.vertices, vec![s(3, 0), s(4, 0), s(4, 1), s(4, 2), s(4, 3), s(3, 3)]);
        assert_eq!(
            brute_force_open_path(&cfg, s(3, 0), s(3, 3)).unwrap().unwrap(),
            p.vertices
        );

        let mut cut = BondConfig::closed(lb);
        cut.open_path(&[s(3, 0), s(3, 1)]).unwrap();
        cut.open_path(&[s(3, 2), s(3, 3)]).unwrap();
        assert!(outermost_open_path(&cut, s(3, 0), s(3, 3)).unwrap().is_none());
    }

    #[test]
    fn loop_erasure() {
        let w = [s(0, 0), s(1, 0), s(1, 1), s(1, 0), s(2, 0)];
        assert_eq!(loop_erase(&w), vec![s(0, 0), s(1, 0), s(2, 0)]);
    }

    #[test]
    fn common_cluster_examples() {
        let lb = LatticeBox::new(4).unwrap();
        let mut cfg = BondConfig::closed(lb);
        cfg.open_path(&[s(0, 0), s(1, 0), s(2, 0)]).unwrap();
        let c = common_cluster(&cfg, s(0, 0), s(2, 0), None).unwrap().unwrap();
        assert_eq!(c.edges.len(), 2);
        cfg.open_path(&[s(1, 0), s(1, 1)]).unwrap();
        let c = common_cluster(&cfg, s(0, 0), s(2, 0), None).unwrap().unwrap();
        assert_eq!(c.edges.len(), 3);
        assert!(common_cluster(&cfg, s(0, 0), s(3, 3), None).unwrap().is_none());
    }

    #[test]
    fn fluctuation_examples() {
        let seg = [s(0, 0), s(1, 0), s(2, 0)];
        assert_eq!(fluctuation(&seg, s(0, 0), s(2, 0)).unwrap(), 0.0);
        let stair = [s(0, 0), s(1, 0), s(1, 1), s(2, 1), s(3, 1), s(3, 0), s(4, 0)];
        assert_eq!(fluctuation(&stair, s(0, 0), s(4, 0)).unwrap(), 1.0);
        assert_eq!(fluctuation(&[s(0, 0), s(1, 0)], s(0, 0), s(0, 0)).unwrap(), 1.0);
        assert!(fluctuation(&seg, s(0, 0), s(5, 0)).is_err());
    }

    #[test]
    fn good_area_capture_diameter_clause() {
        let sector = Sector::new(Vec2::new(3.0, 0.0), Vec2::new(3.0, 3.0)).unwrap();
        let wide = SectorPath {
            x: s(3, 0),
            y: s(3, 3),
            vertices: vec![s(3, 0), s(10, 0), s(10, 3), s(3, 3)],
            sector,
        };
        assert!(!good_area_capture(&wide, 0.1).unwrap());
        let bulge = SectorPath {
            x: s(3, 0),
            y: s(3, 3),
            vertices: vec![s(3, 0), s(5, 0), s(5, 3), s(3, 3)],
            sector,
        };
        // area 4.5 + 6 = 10.5 against 4.5 + 0.1 * 3^1.5 * sqrt(ln 3)
        assert!((bulge.enclosed_area() - 10.5).abs() < 1e-12);
        assert!(good_area_capture(&bulge, 0.1).unwrap());
        let close = SectorPath {
            x: s(1, 0),
            y: s(1, 1),
            vertices: vec![s(1, 0), s(1, 1)],
            sector,
        };
        assert!(good_area_capture(&close, 0.1).is_err());
    }
}
