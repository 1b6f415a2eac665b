//! Radial regeneration sites of circuits, angular gaps between them,
//! connection regeneration decompositions of point-to-point connections, and
//! the sweep search for well-aligned outward-facing pairs.
//!
//! Circuits are assumed centred: the wedges used here are rooted at the
//! origin. [`rg_set`] takes the centre explicitly and reports sites in the
//! recentred frame.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::{PI, TAU};

use crate::circuits::Circuit;
use crate::error::{bail, Result};
use crate::geometry::{
    boundary_path, ccw_angle, clip_segment, point_segment_distance, segment_meets_open_cone, wrap_angle, Cone,
    ConeSide, DirectedCones, PathSide, Vec2, Wedge, ANGLE_TOL,
};
use crate::lattice::{open_component, BondConfig, Site, UnionFind};
use crate::wulff::ShapeConstants;

/// A closed unit lattice segment.
pub type Segment = (Site, Site);

fn cross(a: Site, b: Site) -> i64 {
    a.x as i64 * b.y as i64 - a.y as i64 * b.x as i64
}

fn dot(a: Site, b: Site) -> i64 {
    a.x as i64 * b.x as i64 + a.y as i64 * b.y as i64
}

/// 0 for directions in `[arg(base), arg(base) + π)`, 1 otherwise.
fn half(base: Site, z: Site) -> u8 {
    let c = cross(base, z);
    if c > 0 || (c == 0 && dot(base, z) > 0) {
        0
    } else {
        1
    }
}

/// Orders nonzero `a` and `b` by counterclockwise angle from `base`, measured in `[0, 2π)`.
/// Exact on integer points.
pub fn ccw_cmp(base: Site, a: Site, b: Site) -> Ordering {
    half(base, a).cmp(&half(base, b)).then_with(|| 0.cmp(&cross(a, b)))
}

/// Whether `z` lies in the closed sector swept counterclockwise from `u` to `v`.
fn in_sector(u: Site, v: Site, z: Site) -> bool {
    z == Site::ORIGIN || ccw_cmp(u, z, v) != Ordering::Greater
}

/// Closed triangle with vertices `0`, `u`, `v`, exactly.
fn in_triangle(u: Site, v: Site, z: Site) -> bool {
    let s = [cross(u, z), cross(v - u, z - u), cross(-v, z - v)];
    !(s.iter().any(|&c| c < 0) && s.iter().any(|&c| c > 0))
}

fn normalize(s: Segment) -> Segment {
    if s.0 <= s.1 {
        s
    } else {
        (s.1, s.0)
    }
}

fn check_constants(k: ShapeConstants) -> Result<()> {
    if !(k.q0 > 0.0 && k.q0 < PI / 2.0) {
        bail!(InvalidParameter, "q0 must lie in (0, π/2), got {}", k.q0);
    }
    if !(k.c0 > 0.0 && k.c0 <= PI / 2.0) {
        bail!(InvalidParameter, "c0 must lie in (0, π/2], got {}", k.c0);
    }
    Ok(())
}

/// The radial test at `v` against an arbitrary union of lattice segments.
fn site_passes(segments: &[Segment], v: Site, k: ShapeConstants) -> Result<bool> {
    if v == Site::ORIGIN {
        bail!(InvalidParameter, "the origin cannot be tested as a regeneration site");
    }
    let vv = Vec2::from(v);
    let planes = Wedge::about(vv, k.c0)?.half_planes();
    // the complement of the forward/backward cone union: open cones about ±v
    let bad = [
        Cone {
            apex: vv,
            axis: vv,
            half_angle: k.q0,
        },
        Cone {
            apex: vv,
            axis: -vv,
            half_angle: k.q0,
        },
    ];
    Ok(segments.iter().all(|&(a, b)| {
        let (a, b) = (Vec2::from(a), Vec2::from(b));
        match clip_segment(a, b, &planes) {
            None => true,
            Some((t0, t1)) => {
                let p0 = a + (b - a) * t0;
                let p1 = a + (b - a) * t1;
                !bad.iter().any(|c| segment_meets_open_cone(p0, p1, c))
            }
        }
    }))
}

/// Whether `v` is a regeneration site of the (centred) circuit: inside the
/// origin wedge of half-width `c0` about `v`, the circuit stays in the
/// forward and backward cones of half-angle `π/2 - q0` at `v`.
pub fn is_regeneration_site(circuit: &Circuit, v: Site, k: ShapeConstants) -> Result<bool> {
    check_constants(k)?;
    if !circuit.contains_vertex(v) {
        bail!(InvalidParameter, "{v} is not a vertex of the circuit");
    }
    let segments: Vec<Segment> = circuit.edges().collect();
    site_passes(&segments, v, k)
}

#[derive(Debug, Clone, Copy)]
pub enum RegenMode<'a> {
    /// Test the circuit against itself.
    Circuit,
    /// Test the circuit vertices against the whole open cluster of the circuit.
    Cluster(&'a BondConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegenReport {
    /// Regeneration sites in increasing argument order (from angle 0).
    pub sites: Vec<Site>,
    /// Arguments of `sites` in `[0, 2π)`.
    pub args: Vec<f64>,
    /// Largest angular sector free of sites; `2π` when there are fewer than two.
    pub theta_max: f64,
    /// Circular gaps between consecutive sites, largest first.
    pub gaps: Vec<f64>,
    /// Set when `theta_max` is the `2π` value for at most one site.
    pub sentinel: bool,
}

impl RegenReport {
    pub fn from_sites(mut sites: Vec<Site>) -> Self {
        sites.sort_by(|&a, &b| ccw_cmp(Site::new(1, 0), a, b));
        sites.dedup();
        let args: Vec<f64> = sites.iter().map(|&s| ccw_angle(0.0, Vec2::from(s).arg())).collect();
        let mut gaps = angular_gaps(&args);
        gaps.sort_by(|a, b| b.total_cmp(a));
        RegenReport {
            theta_max: theta_rg_max(&args),
            sentinel: sites.len() <= 1,
            sites,
            args,
            gaps,
        }
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// Indices `(i, i + 1 mod len)` of the consecutive pair bounding the largest
    /// gap; the first such pair in argument order on ties.
    pub fn max_gap_pair(&self) -> Option<(usize, usize)> {
        let n = self.sites.len();
        if n < 2 {
            return None;
        }
        let gap = |i: usize| {
            let d = self.args[(i + 1) % n] - self.args[i];
            if i + 1 == n {
                d + TAU
            } else {
                d
            }
        };
        let mut best = 0;
        for i in 1..n {
            if gap(i) > gap(best) + ANGLE_TOL {
                best = i;
            }
        }
        Some((best, (best + 1) % n))
    }

    /// Whether every open quadrant-sized sector `[kπ/2, (k+1)π/2)` holds a site.
    pub fn spans_quadrants(&self) -> bool {
        (0..4).all(|q| {
            let lo = q as f64 * PI / 2.0;
            self.args.iter().any(|&a| a >= lo && a < lo + PI / 2.0)
        })
    }
}

/// Regeneration sites among `candidates` for the union of `segments`.
pub fn regeneration_sites(candidates: &[Site], segments: &[Segment], k: ShapeConstants) -> Result<RegenReport> {
    check_constants(k)?;
    let mut sites = Vec::new();
    for &v in candidates {
        if v != Site::ORIGIN && site_passes(segments, v, k)? {
            sites.push(v);
        }
    }
    Ok(RegenReport::from_sites(sites))
}

/// Edges of the open cluster containing the circuit.
pub fn cluster_segments(cfg: &BondConfig, circuit: &Circuit) -> Result<Vec<Segment>> {
    let lattice = cfg.lattice();
    let Some(&v0) = circuit.vertices().first() else {
        bail!(InvalidParameter, "empty circuit");
    };
    let Some(id) = lattice.vertex_id(v0) else {
        bail!(InvalidRegion, "circuit vertex {v0} lies outside the box");
    };
    let comp = open_component(cfg, id, None)?;
    Ok(comp.edges.iter().map(|&e| lattice.edge_sites(e)).collect())
}

/// Regeneration sites of `circuit` after translating by `-centre`. In cluster
/// mode the test set is the full open cluster of the circuit; only circuit
/// vertices are candidates, since any other cluster vertex has the circuit
/// crossing its radial line.
pub fn rg_set(circuit: &Circuit, k: ShapeConstants, mode: RegenMode<'_>, centre: Site) -> Result<RegenReport> {
    let shift = |s: Site| s - centre;
    let candidates: Vec<Site> = circuit.vertices().iter().map(|&s| shift(s)).collect();
    let segments: Vec<Segment> = match mode {
        RegenMode::Circuit => circuit.edges().map(|(a, b)| (shift(a), shift(b))).collect(),
        RegenMode::Cluster(cfg) => cluster_segments(cfg, circuit)?
            .into_iter()
            .map(|(a, b)| (shift(a), shift(b)))
            .collect(),
    };
    regeneration_sites(&candidates, &segments, k)
}

/// Circular gaps between consecutive sorted arguments in `[0, 2π)`.
/// A single argument has the full-turn gap; no arguments give no gaps.
pub fn angular_gaps(sorted_args: &[f64]) -> Vec<f64> {
    let n = sorted_args.len();
    (0..n)
        .map(|i| {
            if i + 1 < n {
                sorted_args[i + 1] - sorted_args[i]
            } else {
                sorted_args[0] + TAU - sorted_args[i]
            }
        })
        .collect()
}

/// Angle of the largest origin-rooted sector containing none of the given
/// arguments. The supremum over closed sectors equals the largest circular
/// gap; for at most one argument it is `2π` (not attained).
pub fn theta_rg_max(args: &[f64]) -> f64 {
    let mut sorted: Vec<f64> = args.iter().map(|&a| ccw_angle(0.0, a)).collect();
    sorted.sort_by(f64::total_cmp);
    if sorted.len() <= 1 {
        return TAU;
    }
    angular_gaps(&sorted).into_iter().fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// Connection regeneration

/// A finite set of unit segments, stored with normalised endpoints.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct LocalPattern(BTreeSet<Segment>);

impl LocalPattern {
    pub fn new(segments: impl IntoIterator<Item = Segment>) -> Self {
        LocalPattern(segments.into_iter().map(normalize).collect())
    }

    pub fn segments(&self) -> impl Iterator<Item = Segment> + '_ {
        self.0.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Whether the segments form one self-avoiding path.
    pub fn is_simple_path(&self) -> bool {
        if self.0.is_empty() {
            return false;
        }
        let mut degree: BTreeMap<Site, usize> = BTreeMap::new();
        for &(a, b) in &self.0 {
            *degree.entry(a).or_default() += 1;
            *degree.entry(b).or_default() += 1;
        }
        if degree.values().any(|&d| d > 2) || degree.len() != self.0.len() + 1 {
            return false;
        }
        let index: BTreeMap<Site, usize> = degree.keys().enumerate().map(|(i, &s)| (s, i)).collect();
        let mut uf = UnionFind::new(index.len());
        for &(a, b) in &self.0 {
            uf.union(index[&a], index[&b]);
        }
        let root = uf.find(0);
        (0..index.len()).all(|i| uf.find(i) == root)
    }

    /// Whether this pattern is a crossing path for the ball of radius `k` in
    /// direction `d` with aperture `delta`: a simple path through the origin
    /// using edges meeting the ball, touching the ball's boundary inside both
    /// the forward and backward aperture-`delta` wedges.
    pub fn is_crossing(&self, d: Vec2, delta: f64, k: i32) -> bool {
        let kf = k as f64;
        let near = self
            .0
            .iter()
            .all(|&(a, b)| point_segment_distance(Vec2::ZERO, a.into(), b.into()) <= kf + 1e-9);
        let through_origin = self.0.iter().any(|&(a, b)| a == Site::ORIGIN || b == Site::ORIGIN);
        near && through_origin
            && self.is_simple_path()
            && self.0.iter().any(|&s| meets_arc(s, kf, d, delta))
            && self.0.iter().any(|&s| meets_arc(s, kf, -d, delta))
    }
}

/// Whether the segment meets the circle of radius `r` about the origin at an
/// argument within `delta` of `arg(d)`.
fn meets_arc((a, b): Segment, r: f64, d: Vec2, delta: f64) -> bool {
    let (a, b) = (Vec2::from(a), Vec2::from(b));
    let dir = b - a;
    let qa = dir.dot(dir);
    let qb = 2.0 * a.dot(dir);
    let qc = a.dot(a) - r * r;
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 {
        return false;
    }
    let sq = disc.sqrt();
    [(-qb - sq) / (2.0 * qa), (-qb + sq) / (2.0 * qa)].iter().any(|&t| {
        (-1e-12..=1.0 + 1e-12).contains(&t) && {
            let p = a + dir * t;
            wrap_angle(p.arg() - d.arg()).abs() <= delta + ANGLE_TOL
        }
    })
}

/// The two-sided lattice path hugging the line through the origin in
/// direction `d`, cut to the edges meeting the ball of radius `k`.
pub fn crossing_pattern(d: Site, k: i32) -> Result<LocalPattern> {
    if d == Site::ORIGIN || k < 1 {
        bail!(
            InvalidParameter,
            "crossing pattern needs a nonzero direction and k >= 1"
        );
    }
    let len = 2 * k as usize + 4;
    let mut segs = Vec::new();
    for dir in [d, -d] {
        let path = boundary_path(Vec2::from(dir), PathSide::Minus, len)?;
        for w in path.windows(2) {
            if point_segment_distance(Vec2::ZERO, w[0].into(), w[1].into()) <= k as f64 + 1e-9 {
                segs.push((w[0], w[1]));
            }
        }
    }
    Ok(LocalPattern::new(segs))
}

/// Largest ball radius tried by [`default_ball_radius`].
pub const MAX_BALL_RADIUS: i32 = 16;

/// Smallest `k` for which [`crossing_pattern`] is a crossing path.
pub fn default_ball_radius(d: Site, delta: f64) -> Result<i32> {
    for k in 1..=MAX_BALL_RADIUS {
        if crossing_pattern(d, k)?.is_crossing(d.into(), delta, k) {
            return Ok(k);
        }
    }
    bail!(
        Precondition,
        "no crossing path with radius <= {MAX_BALL_RADIUS} for direction {d} and aperture {delta}"
    )
}

#[derive(Debug, Clone, Copy)]
pub enum PatternChoice<'a> {
    /// Any local pattern that is itself a crossing path.
    Any,
    Fixed(&'a LocalPattern),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrgCluster {
    pub segments: Vec<Segment>,
    /// Regeneration sites at the ends of the cluster's segments, ordered along `y - x`.
    pub boundary: Vec<Site>,
    pub contains_x: bool,
    pub contains_y: bool,
    pub displacement: Site,
    /// Boundary-site count differs from the one expected for its kind.
    pub irregular: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrgReport {
    /// Sites ordered by projection on `y - x`.
    pub sites: Vec<Site>,
    pub clusters: Vec<CrgCluster>,
    pub maxreg: f64,
}

/// Pieces of the segment outside the closed disc of radius `r` about `c`.
fn outside_disc(a: Vec2, b: Vec2, c: Vec2, r: f64) -> Vec<(Vec2, Vec2)> {
    let dir = b - a;
    let f = a - c;
    let qa = dir.dot(dir);
    let qb = 2.0 * f.dot(dir);
    let qc = f.dot(f) - r * r;
    let disc = qb * qb - 4.0 * qa * qc;
    if disc <= 0.0 {
        return vec![(a, b)];
    }
    let sq = disc.sqrt();
    let (t1, t2) = ((-qb - sq) / (2.0 * qa), (-qb + sq) / (2.0 * qa));
    let mut out = Vec::new();
    if t1 > 1e-12 {
        out.push((a, a + dir * t1.min(1.0)));
    }
    if t2 < 1.0 - 1e-12 {
        out.push((a + dir * t2.max(0.0), b));
    }
    out
}

/// The two defining clauses at `v`.
fn is_connection_site(segments: &[Segment], v: Site, d: Site, delta: f64, k: i32, phi: PatternChoice<'_>) -> bool {
    let vv = Vec2::from(v);
    let dv = Vec2::from(d);
    let kf = k as f64;
    let bad = [dv.perp(), -dv.perp()].map(|axis| Cone {
        apex: vv,
        axis,
        half_angle: PI / 2.0 - delta,
    });
    let cones_ok = segments.iter().all(|&(a, b)| {
        outside_disc(a.into(), b.into(), vv, kf)
            .into_iter()
            .all(|(p, q)| !bad.iter().any(|c| segment_meets_open_cone(p, q, c)))
    });
    if !cones_ok {
        return false;
    }
    let local = LocalPattern::new(
        segments
            .iter()
            .filter(|&&(a, b)| point_segment_distance(vv, a.into(), b.into()) <= kf + 1e-9)
            .map(|&(a, b)| (a - v, b - v)),
    );
    match phi {
        PatternChoice::Fixed(p) => &local == p,
        PatternChoice::Any => local.is_crossing(dv, delta, k),
    }
}

/// Connection regeneration sites of the connected segment union `gamma`
/// between `x` and `y`, its regeneration clusters and the largest cluster
/// displacement. The endpoints themselves are never sites.
pub fn connection_regeneration(
    gamma: &[Segment],
    x: Site,
    y: Site,
    delta: f64,
    k: i32,
    phi: PatternChoice<'_>,
) -> Result<CrgReport> {
    if x == y {
        bail!(Precondition, "connection endpoints coincide at {x}");
    }
    if !(delta > 0.0 && delta < PI / 2.0) {
        bail!(InvalidParameter, "aperture must lie in (0, π/2), got {delta}");
    }
    if k < 1 {
        bail!(InvalidParameter, "ball radius must be at least 1, got {k}");
    }
    let segments: Vec<Segment> = gamma
        .iter()
        .map(|&s| normalize(s))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let vertices: BTreeSet<Site> = segments.iter().flat_map(|&(a, b)| [a, b]).collect();
    if !vertices.contains(&x) || !vertices.contains(&y) {
        bail!(Precondition, "endpoints {x} and {y} must both lie on the connection");
    }
    let d = y - x;
    if let PatternChoice::Fixed(p) = phi {
        if !p.is_crossing(d.into(), delta, k) {
            bail!(
                Precondition,
                "the fixed local pattern is not a crossing path for radius {k}"
            );
        }
    }
    let index: BTreeMap<Site, usize> = vertices.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    {
        let mut uf = UnionFind::new(index.len());
        for &(a, b) in &segments {
            uf.union(index[&a], index[&b]);
        }
        if uf.find(index[&x]) != uf.find(index[&y]) || (0..index.len()).any(|i| uf.find(i) != uf.find(0)) {
            bail!(Precondition, "the connection is not connected");
        }
    }

    let mut sites: Vec<Site> = vertices
        .iter()
        .copied()
        .filter(|&v| v != x && v != y && is_connection_site(&segments, v, d, delta, k, phi))
        .collect();
    sites.sort_by_key(|&s| (dot(s, d), s));
    let site_set: BTreeSet<Site> = sites.iter().copied().collect();

    // clusters: segments glued at non-site vertices
    let mut uf = UnionFind::new(segments.len());
    let mut at: BTreeMap<Site, Vec<usize>> = BTreeMap::new();
    for (i, &(a, b)) in segments.iter().enumerate() {
        at.entry(a).or_default().push(i);
        at.entry(b).or_default().push(i);
    }
    for (v, ids) in &at {
        if !site_set.contains(v) {
            for w in ids.windows(2) {
                uf.union(w[0], w[1]);
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..segments.len() {
        groups.entry(uf.find(i)).or_default().push(i);
    }
    let mut clusters = Vec::new();
    for ids in groups.into_values() {
        let segs: Vec<Segment> = ids.iter().map(|&i| segments[i]).collect();
        let ends: BTreeSet<Site> = segs.iter().flat_map(|&(a, b)| [a, b]).collect();
        let mut boundary: Vec<Site> = ends.iter().copied().filter(|s| site_set.contains(s)).collect();
        boundary.sort_by_key(|&s| (dot(s, d), s));
        let contains_x = ends.contains(&x);
        let contains_y = ends.contains(&y);
        let far = |from: Site| boundary.iter().copied().max_by_key(|&r| dot(r - from, r - from));
        let (displacement, irregular) = match (contains_x, contains_y) {
            (true, true) => (d, !boundary.is_empty()),
            (true, false) => (far(x).map_or(Site::ORIGIN, |r| r - x), boundary.len() != 1),
            (false, true) => (far(y).map_or(Site::ORIGIN, |r| y - r), boundary.len() != 1),
            (false, false) => match (boundary.first(), boundary.last()) {
                (Some(&f), Some(&b)) => (b - f, boundary.len() != 2),
                _ => (Site::ORIGIN, true),
            },
        };
        clusters.push(CrgCluster {
            segments: segs,
            boundary,
            contains_x,
            contains_y,
            displacement,
            irregular,
        });
    }
    let maxreg = clusters
        .iter()
        .map(|c| Vec2::from(c.displacement).norm())
        .fold(0.0, f64::max);
    Ok(CrgReport {
        sites,
        clusters,
        maxreg,
    })
}

// ---------------------------------------------------------------------------
// Pairs and the sweep search

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairPredicates {
    pub well_aligned: bool,
    pub outward_facing: bool,
}

impl PairPredicates {
    pub fn both(&self) -> bool {
        self.well_aligned && self.outward_facing
    }
}

fn predicates_unchecked(rg: &[Site], k: ShapeConstants, u: Site, v: Site) -> Result<PairPredicates> {
    let well_aligned = DirectedCones::new(v.into(), 2.0 * k.q0)?.contains(ConeSide::Backward, u.into())
        || DirectedCones::new(u.into(), 2.0 * k.q0)?.contains(ConeSide::Forward, v.into());
    let outward_facing = rg
        .iter()
        .all(|&z| z == u || z == v || !in_sector(u, v, z) || in_triangle(u, v, z));
    Ok(PairPredicates {
        well_aligned,
        outward_facing,
    })
}

/// Well-alignment (`u` in the backward cone of half-angle `π/2 - 2q0` at `v`,
/// or `v` in the forward one at `u`) and outward-facing (every site in the
/// counterclockwise sector from `u` to `v` lies in the triangle `0, u, v`).
pub fn pair_predicates(rg: &[Site], k: ShapeConstants, u: Site, v: Site) -> Result<PairPredicates> {
    check_constants(k)?;
    if !rg.contains(&u) || !rg.contains(&v) {
        bail!(Precondition, "{u} and {v} must both be regeneration sites");
    }
    if u == v || (cross(u, v) == 0 && dot(u, v) > 0) {
        bail!(Precondition, "{u} and {v} must have distinct arguments");
    }
    predicates_unchecked(rg, k, u, v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepDir {
    Counterclockwise,
    Clockwise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepOutput {
    pub site: Site,
    pub good: bool,
}

/// One sweep from `x`: the first site in the sweep direction lying on the far
/// side (from the origin) of the boundary line of the half-angle `π/2 - 2q0`
/// forward (counterclockwise) or backward (clockwise) cone at `x` nearest the
/// origin. Good when that site is inside the cone.
pub fn sweep(rg: &[Site], k: ShapeConstants, x: Site, dir: SweepDir) -> Result<Option<SweepOutput>> {
    check_constants(k)?;
    if x == Site::ORIGIN {
        bail!(InvalidParameter, "sweep origin must be nonzero");
    }
    let xv = Vec2::from(x);
    let side = match dir {
        SweepDir::Counterclockwise => ConeSide::Forward,
        SweepDir::Clockwise => ConeSide::Backward,
    };
    let cone = DirectedCones::new(xv, 2.0 * k.q0)?.cone(side);
    let a = cone.axis.normalized();
    let rays = [a.rotate(cone.half_angle), a.rotate(-cone.half_angle)];
    let e = if rays[0].dot(xv) <= rays[1].dot(xv) {
        rays[0]
    } else {
        rays[1]
    };
    let origin_side = e.cross(-xv);
    let mut order: Vec<Site> = rg.iter().copied().filter(|&z| z != x).collect();
    order.sort_by(|&p, &q| ccw_cmp(x, p, q));
    if dir == SweepDir::Clockwise {
        order.reverse();
    }
    Ok(order
        .into_iter()
        .find(|&z| e.cross(Vec2::from(z) - xv) * origin_side <= 0.0)
        .map(|z| SweepOutput {
            site: z,
            good: cone.contains(z.into()),
        }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchFailure {
    NoSites,
    SweepFailed,
    /// A sweep returned an already visited site.
    Revisited,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    /// Final pair in increasing argument order.
    pub pair: Option<(Site, Site)>,
    pub failure: Option<SearchFailure>,
    /// Visited sites `x0, x1, ...`.
    pub visited: Vec<Site>,
    /// Arguments of the visited sites on a continuous branch, relative to the
    /// search direction.
    pub rel_args: Vec<f64>,
}

impl SearchResult {
    pub fn distinct(&self) -> bool {
        self.visited.iter().collect::<BTreeSet<_>>().len() == self.visited.len()
    }

    /// Whether the visited intervals are strictly nested, each sweep extending
    /// the opposite end from the previous one, within one turn.
    pub fn nested(&self) -> bool {
        let a = &self.rel_args;
        for i in 0..a.len().saturating_sub(1) {
            let ok = if i % 2 == 0 {
                a[i + 1] > a[i] && (i == 0 || a[i + 1] > a[i - 1])
            } else {
                a[i + 1] < a[i] && a[i + 1] < a[i - 1]
            };
            if !ok {
                return false;
            }
        }
        let lo = a.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        a.len() < 2 || hi - lo < TAU
    }

    /// Whether the final interval contains the search direction.
    pub fn brackets_direction(&self) -> bool {
        match self.rel_args.len() {
            n if n >= 2 => {
                let (p, q) = (self.rel_args[n - 2], self.rel_args[n - 1]);
                p.min(q) <= ANGLE_TOL && p.max(q) >= -ANGLE_TOL
            }
            _ => false,
        }
    }
}

/// Alternating counterclockwise and clockwise sweeps starting from the first
/// site clockwise of direction `u`, stopping at the first good sweep.
pub fn search(rg: &[Site], k: ShapeConstants, u: Vec2) -> Result<SearchResult> {
    check_constants(k)?;
    if u.is_zero() {
        bail!(InvalidParameter, "search direction must be nonzero");
    }
    let ua = u.arg();
    let mut res = SearchResult {
        pair: None,
        failure: None,
        visited: Vec::new(),
        rel_args: Vec::new(),
    };
    let Some(x0) = rg
        .iter()
        .copied()
        .min_by(|&p, &q| ccw_angle(Vec2::from(p).arg(), ua).total_cmp(&ccw_angle(Vec2::from(q).arg(), ua)))
    else {
        res.failure = Some(SearchFailure::NoSites);
        return Ok(res);
    };
    res.visited.push(x0);
    res.rel_args.push(-ccw_angle(Vec2::from(x0).arg(), ua));
    for step in 0..=rg.len() {
        let x = *res.visited.last().unwrap();
        let rel = *res.rel_args.last().unwrap();
        let dir = if step % 2 == 0 {
            SweepDir::Counterclockwise
        } else {
            SweepDir::Clockwise
        };
        let Some(out) = sweep(rg, k, x, dir)? else {
            res.failure = Some(SearchFailure::SweepFailed);
            return Ok(res);
        };
        let (xa, za) = (Vec2::from(x).arg(), Vec2::from(out.site).arg());
        let next = match dir {
            SweepDir::Counterclockwise => rel + ccw_angle(xa, za),
            SweepDir::Clockwise => rel - ccw_angle(za, xa),
        };
        let revisit = res.visited.contains(&out.site);
        res.visited.push(out.site);
        res.rel_args.push(next);
        if revisit {
            res.failure = Some(SearchFailure::Revisited);
            return Ok(res);
        }
        if out.good {
            res.pair = Some(if next > rel { (x, out.site) } else { (out.site, x) });
            return Ok(res);
        }
    }
    res.failure = Some(SearchFailure::Revisited);
    Ok(res)
}

/// The pair bracketing the largest gap that is well-aligned and outward-facing
/// with the smallest enclosing sector (ties: fewer extra sites clockwise, then
/// counterclockwise).
pub fn pertinent_pair(report: &RegenReport, k: ShapeConstants) -> Result<Option<(Site, Site)>> {
    check_constants(k)?;
    let n = report.sites.len();
    let Some((gi, _)) = report.max_gap_pair() else {
        return Ok(None);
    };
    let s = &report.sites;
    let mut cands = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i + j + 2 > n {
                continue;
            }
            let x = s[(gi + n - i) % n];
            let y = s[(gi + 1 + j) % n];
            let width = ccw_angle(Vec2::from(x).arg(), Vec2::from(y).arg());
            cands.push((width, i, j, x, y));
        }
    }
    cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    for (_, _, _, x, y) in cands {
        if predicates_unchecked(s, k, x, y)?.both() {
            return Ok(Some((x, y)));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairSearch {
    pub search: SearchResult,
    pub pertinent: Option<(Site, Site)>,
}

pub fn search_pertinent_pair(report: &RegenReport, k: ShapeConstants, u: Vec2) -> Result<PairSearch> {
    Ok(PairSearch {
        search: search(&report.sites, k, u)?,
        pertinent: pertinent_pair(report, k)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::outermost_circuit;
    use crate::lattice::{BondGraph, LatticeBox};

    const WIDE: ShapeConstants = ShapeConstants { q0: 0.7, c0: 0.15 };
    const NARROW: ShapeConstants = ShapeConstants { q0: 0.3, c0: 0.12 };

    fn s(x: i32, y: i32) -> Site {
        Site::new(x, y)
    }

    fn spike_circuit() -> Circuit {
        let sq = Circuit::square(6);
        let mut v = sq.vertices().to_vec();
        let i = v.iter().position(|&p| p == s(6, -1)).unwrap();
        for (j, p) in [s(7, -1), s(8, -1), s(8, 0), s(7, 0)].into_iter().enumerate() {
            v.insert(i + 1 + j, p);
        }
        Circuit::new(v).unwrap()
    }

    #[test]
    fn square_sites() {
        let sq = Circuit::square(6);
        let k = ShapeConstants { q0: 0.9, c0: 0.15 };
        let rg = rg_set(&sq, k, RegenMode::Circuit, Site::ORIGIN).unwrap();
        let mut expect: Vec<Site> = (-4..=4).flat_map(|j| [s(6, j), s(-6, j), s(j, 6), s(j, -6)]).collect();
        expect.sort();
        let mut got = rg.sites.clone();
        got.sort();
        assert_eq!(got, expect);
        assert!(!is_regeneration_site(&sq, s(6, 6), ShapeConstants { q0: 0.9, c0: 0.3 }).unwrap());
        assert!(is_regeneration_site(&sq, s(7, 0), k).is_err());
    }

    #[test]
    fn spike_removes_its_base() {
        let sq = Circuit::square(6);
        let all = rg_set(&sq, NARROW, RegenMode::Circuit, Site::ORIGIN).unwrap();
        assert_eq!(all.len(), sq.len());
        let rg = rg_set(&spike_circuit(), NARROW, RegenMode::Circuit, Site::ORIGIN).unwrap();
        let got: BTreeSet<Site> = rg.sites.iter().copied().collect();
        let expect: BTreeSet<Site> = sq
            .vertices()
            .iter()
            .copied()
            .filter(|&p| p != s(6, 0) && p != s(6, -1))
            .collect();
        assert_eq!(got, expect);
    }

    #[test]
    fn dangling_branch_in_cluster_mode() {
        let lat = LatticeBox::new(10).unwrap();
        let mut cfg = BondConfig::closed(lat);
        let sq = Circuit::square(6);
        let mut cyc = sq.vertices().to_vec();
        cyc.push(cyc[0]);
        cfg.open_path(&cyc).unwrap();
        cfg.open_path(&[s(6, 2), s(7, 2), s(8, 2)]).unwrap();
        let k = ShapeConstants { q0: 0.7, c0: 0.15 };
        let circ = rg_set(&sq, k, RegenMode::Circuit, Site::ORIGIN).unwrap();
        let clus = rg_set(&sq, k, RegenMode::Cluster(&cfg), Site::ORIGIN).unwrap();
        assert!(circ.sites.contains(&s(6, 2)));
        assert!(!clus.sites.contains(&s(6, 2)));
        assert!(clus.sites.iter().all(|p| circ.sites.contains(p)));
        // without the branch the two modes agree
        let mut plain = BondConfig::closed(lat);
        plain.open_path(&cyc).unwrap();
        assert_eq!(rg_set(&sq, k, RegenMode::Cluster(&plain), Site::ORIGIN).unwrap(), circ);
    }

    #[test]
    fn recentring_translates_sites() {
        let k = ShapeConstants { q0: 0.9, c0: 0.15 };
        let moved = Circuit::square(6).translated(s(3, -2));
        let a = rg_set(&moved, k, RegenMode::Circuit, s(3, -2)).unwrap();
        let b = rg_set(&Circuit::square(6), k, RegenMode::Circuit, Site::ORIGIN).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn theta_examples() {
        assert!((theta_rg_max(&[0.0, PI]) - PI).abs() < 1e-12);
        assert!((theta_rg_max(&[0.0, PI / 2.0, PI, 1.5 * PI]) - PI / 2.0).abs() < 1e-12);
        assert_eq!(theta_rg_max(&[1.0]), TAU);
        assert_eq!(theta_rg_max(&[]), TAU);
        let r = RegenReport::from_sites(vec![s(3, 4)]);
        assert!(r.sentinel && r.theta_max == TAU);
        let r = RegenReport::from_sites(vec![s(1, 0), s(0, 1), s(-1, 0), s(0, -1)]);
        assert_eq!(r.sites, vec![s(1, 0), s(0, 1), s(-1, 0), s(0, -1)]);
        assert!(r.spans_quadrants());
        assert_eq!(r.max_gap_pair(), Some((0, 1)));
    }

    #[test]
    fn exact_angular_order() {
        let base = s(1, 0);
        let pts = [s(1, 0), s(2, 1), s(0, 3), s(-1, 1), s(-2, 0), s(-1, -5), s(1, -1)];
        for i in 0..pts.len() {
            for j in 0..pts.len() {
                assert_eq!(ccw_cmp(base, pts[i], pts[j]), i.cmp(&j), "{} {}", pts[i], pts[j]);
            }
        }
    }

    fn straight(x: i32, y: i32) -> Vec<Segment> {
        (x..y).map(|i| (s(i, 0), s(i + 1, 0))).collect()
    }

    #[test]
    fn straight_connection() {
        let gamma = straight(0, 10);
        let phi = crossing_pattern(s(1, 0), 2).unwrap();
        assert_eq!(phi.len(), 6);
        let r = connection_regeneration(&gamma, s(0, 0), s(10, 0), 0.3, 2, PatternChoice::Fixed(&phi)).unwrap();
        assert_eq!(r.sites, (3..=7).map(|i| s(i, 0)).collect::<Vec<_>>());
        assert_eq!(r.clusters.len(), 6);
        assert!(r.clusters.iter().all(|c| !c.irregular));
        assert!((r.maxreg - 3.0).abs() < 1e-12);
        // the union over patterns also admits the shorter end patterns
        let any = connection_regeneration(&gamma, s(0, 0), s(10, 0), 0.3, 2, PatternChoice::Any).unwrap();
        assert_eq!(any.sites, (2..=8).map(|i| s(i, 0)).collect::<Vec<_>>());
    }

    #[test]
    fn bump_has_no_sites() {
        // straight line with a rectangular bump of height 3 over [28, 32]
        let mut pts: Vec<Site> = (0..=28).map(|i| s(i, 0)).collect();
        pts.extend((1..=3).map(|j| s(28, j)));
        pts.extend((29..=32).map(|i| s(i, 3)));
        pts.extend((0..=2).rev().map(|j| s(32, j)));
        pts.extend((33..=60).map(|i| s(i, 0)));
        let gamma: Vec<Segment> = pts.windows(2).map(|w| (w[0], w[1])).collect();
        let r = connection_regeneration(&gamma, s(0, 0), s(60, 0), 0.3, 2, PatternChoice::Any).unwrap();
        // the bump corner (28, 3) leaves the aperture-0.3 wedge unless 3 / (28 - x) <= tan 0.3
        let expect: Vec<Site> = (2..=18).chain(42..=58).map(|i| s(i, 0)).collect();
        assert_eq!(r.sites, expect);
        assert!((r.maxreg - 24.0).abs() < 1e-12);
    }

    #[test]
    fn connection_errors() {
        let gamma = straight(0, 10);
        assert!(connection_regeneration(&gamma, s(2, 0), s(2, 0), 0.3, 2, PatternChoice::Any).is_err());
        assert!(connection_regeneration(&gamma, s(0, 0), s(11, 0), 0.3, 2, PatternChoice::Any).is_err());
        let mut broken = gamma.clone();
        broken.push((s(0, 5), s(1, 5)));
        assert!(connection_regeneration(&broken, s(0, 0), s(10, 0), 0.3, 2, PatternChoice::Any).is_err());
    }

    #[test]
    fn no_sites_gives_full_displacement() {
        let gamma = straight(0, 3);
        let r = connection_regeneration(&gamma, s(0, 0), s(3, 0), 0.3, 2, PatternChoice::Any).unwrap();
        assert!(r.sites.is_empty());
        assert!((r.maxreg - 3.0).abs() < 1e-12);
    }

    #[test]
    fn ball_radius_defaults() {
        assert_eq!(default_ball_radius(s(1, 0), 0.3).unwrap(), 1);
        let k = default_ball_radius(s(3, 1), 0.2).unwrap();
        assert!(crossing_pattern(s(3, 1), k)
            .unwrap()
            .is_crossing(Vec2::new(3.0, 1.0), 0.2, k));
        assert!(!crossing_pattern(s(3, 1), k - 1)
            .map(|p| p.is_crossing(Vec2::new(3.0, 1.0), 0.2, k - 1))
            .unwrap_or(false));
    }

    #[test]
    fn predicate_examples() {
        let k = ShapeConstants { q0: 0.3, c0: 0.1 };
        let u = s(10, 0);
        let v = s(10, 1);
        let p = pair_predicates(&[u, v], k, u, v).unwrap();
        assert!(p.well_aligned && p.outward_facing);
        // a site inside the triangle keeps the pair outward-facing
        let rg = [u, s(5, 0), v, s(9, 1)];
        assert!(pair_predicates(&rg, k, u, v).unwrap().outward_facing);
        // one beyond the segment [u, v] does not
        let rg = [u, s(20, 1), v];
        assert!(!pair_predicates(&rg, k, u, v).unwrap().outward_facing);
        // far apart in angle: not aligned
        let rg = [u, s(-10, 1)];
        assert!(!pair_predicates(&rg, k, u, s(-10, 1)).unwrap().well_aligned);
        assert!(pair_predicates(&rg, k, u, s(1, 1)).is_err());
    }

    fn disk_circuit(r: f64) -> Circuit {
        let h = r.ceil() as i32 + 2;
        let lat = LatticeBox::new(h).unwrap();
        let mut cfg = BondConfig::closed(lat);
        for e in 0..BondGraph::edge_count(&lat) {
            let (a, b) = lat.edge_sites(e);
            if Vec2::from(a).norm() <= r && Vec2::from(b).norm() <= r {
                cfg.set(e, true);
            }
        }
        outermost_circuit(&cfg).found().unwrap().clone()
    }

    #[test]
    fn search_on_round_circuit() {
        let k = ShapeConstants {
            q0: 0.9 * PI / 8.0,
            c0: 0.9 * PI / 16.0,
        };
        let c = disk_circuit(20.0);
        let rg = rg_set(&c, k, RegenMode::Circuit, Site::ORIGIN).unwrap();
        assert!(rg.spans_quadrants());
        for i in 0..16 {
            let u = Vec2::from_angle(i as f64 * TAU / 16.0 + 0.01);
            let res = search(&rg.sites, k, u).unwrap();
            let (a, b) = res.pair.expect("search succeeds on a round circuit");
            assert!(res.distinct() && res.nested() && res.brackets_direction(), "{res:?}");
            assert!(pair_predicates(&rg.sites, k, a, b).unwrap().both());
        }
        let (x, y) = pertinent_pair(&rg, k).unwrap().unwrap();
        assert!(pair_predicates(&rg.sites, k, x, y).unwrap().both());
    }

    #[test]
    fn search_fails_without_enough_sites() {
        let k = WIDE;
        let res = search(&[], k, Vec2::new(1.0, 0.0)).unwrap();
        assert_eq!(res.failure, Some(SearchFailure::NoSites));
        let res = search(&[s(5, 0)], k, Vec2::new(1.0, 0.0)).unwrap();
        assert_eq!(res.failure, Some(SearchFailure::SweepFailed));
        assert!(res.pair.is_none());
        assert_eq!(
            pertinent_pair(&RegenReport::from_sites(vec![s(5, 0)]), k).unwrap(),
            None
        );
    }
}
