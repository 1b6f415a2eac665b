//! Hausdorff distance between finite unions of points and segments.
//!
//! The directed distance from a segment to a set is the maximum over the
//! segment of a minimum of convex functions. It is found by bisection with
//! bounds: on a sub-segment each convex distance is at most the larger of its
//! endpoint values, and the minimum is 1-Lipschitz. Intervals are refined
//! best-first until the gap between bounds drops below [`HAUSDORFF_TOL`].

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{point_segment_distance, Vec2};
use crate::error::{bail, Result};

/// Absolute accuracy of computed Hausdorff distances.
pub const HAUSDORFF_TOL: f64 = 1e-9;

/// A finite union of points and closed segments.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlanarSet {
    pub points: Vec<Vec2>,
    pub segments: Vec<(Vec2, Vec2)>,
}

impl PlanarSet {
    pub fn from_points(points: Vec<Vec2>) -> Self {
        PlanarSet {
            points,
            segments: Vec::new(),
        }
    }

    /// Polygonal chain through `vertices`, closed back to the start if `closed`.
    pub fn polyline(vertices: &[Vec2], closed: bool) -> Self {
        let mut segments: Vec<(Vec2, Vec2)> = vertices.windows(2).map(|w| (w[0], w[1])).collect();
        if closed && vertices.len() > 2 {
            segments.push((vertices[vertices.len() - 1], vertices[0]));
        }
        let points = if vertices.len() == 1 {
            vertices.to_vec()
        } else {
            Vec::new()
        };
        PlanarSet { points, segments }
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty() && self.segments.is_empty()
    }

    pub fn translated(&self, z: Vec2) -> Self {
        PlanarSet {
            points: self.points.iter().map(|&p| p + z).collect(),
            segments: self.segments.iter().map(|&(a, b)| (a + z, b + z)).collect(),
        }
    }

    pub fn scaled(&self, k: f64) -> Self {
        PlanarSet {
            points: self.points.iter().map(|&p| p * k).collect(),
            segments: self.segments.iter().map(|&(a, b)| (a * k, b * k)).collect(),
        }
    }

    fn elements(&self) -> Vec<(Vec2, Vec2)> {
        self.points
            .iter()
            .map(|&p| (p, p))
            .chain(self.segments.iter().copied())
            .collect()
    }

    pub fn bounding_box(&self) -> Option<(Vec2, Vec2)> {
        let mut it = self
            .points
            .iter()
            .copied()
            .chain(self.segments.iter().flat_map(|&(a, b)| [a, b]));
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), p| {
            (
                Vec2::new(lo.x.min(p.x), lo.y.min(p.y)),
                Vec2::new(hi.x.max(p.x), hi.y.max(p.y)),
            )
        }))
    }

    /// Distance from `p` to the set.
    pub fn distance_to(&self, p: Vec2) -> f64 {
        self.elements()
            .iter()
            .map(|&(a, b)| point_segment_distance(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Uniform bucket grid over the elements of a set, for nearest-distance queries.
struct Index {
    elems: Vec<(Vec2, Vec2)>,
    lo: Vec2,
    cell: f64,
    nx: usize,
    ny: usize,
    cells: Vec<Vec<u32>>,
    diag: f64,
}

impl Index {
    const BRUTE_LIMIT: usize = 24;

    fn new(set: &PlanarSet) -> Self {
        let elems = set.elements();
        let (lo, hi) = set.bounding_box().unwrap_or((Vec2::ZERO, Vec2::ZERO));
        let span = hi - lo;
        let diag = span.norm();
        let n = elems.len();
        if n <= Self::BRUTE_LIMIT {
            return Index {
                elems,
                lo,
                cell: 1.0,
                nx: 0,
                ny: 0,
                cells: Vec::new(),
                diag,
            };
        }
        let area = (span.x.max(1e-9)) * (span.y.max(1e-9));
        let mut cell = (area / n as f64).sqrt().max(diag / (4.0 * n as f64)).max(1e-9);
        let mut nx = (span.x / cell).floor() as usize + 1;
        let mut ny = (span.y / cell).floor() as usize + 1;
        while nx * ny > 4 * n + 16 {
            cell *= 1.5;
            nx = (span.x / cell).floor() as usize + 1;
            ny = (span.y / cell).floor() as usize + 1;
        }
        let mut cells = vec![Vec::new(); nx * ny];
        for (i, &(a, b)) in elems.iter().enumerate() {
            let (cx0, cy0) = Self::coords(lo, cell, nx, ny, Vec2::new(a.x.min(b.x), a.y.min(b.y)));
            let (cx1, cy1) = Self::coords(lo, cell, nx, ny, Vec2::new(a.x.max(b.x), a.y.max(b.y)));
            for cy in cy0..=cy1 {
                for cx in cx0..=cx1 {
                    cells[cy * nx + cx].push(i as u32);
                }
            }
        }
        Index {
            elems,
            lo,
            cell,
            nx,
            ny,
            cells,
            diag,
        }
    }

    fn coords(lo: Vec2, cell: f64, nx: usize, ny: usize, p: Vec2) -> (usize, usize) {
        let cx = ((p.x - lo.x) / cell).floor().clamp(0.0, (nx - 1) as f64) as usize;
        let cy = ((p.y - lo.y) / cell).floor().clamp(0.0, (ny - 1) as f64) as usize;
        (cx, cy)
    }

    fn brute(&self) -> bool {
        self.cells.is_empty()
    }

    /// Calls `f` on every element whose bucket meets the box `[c - r, c + r]²`
    /// (elements may be visited more than once).
    fn for_near(&self, c: Vec2, r: f64, mut f: impl FnMut(usize)) {
        let (cx0, cy0) = Self::coords(self.lo, self.cell, self.nx, self.ny, Vec2::new(c.x - r, c.y - r));
        let (cx1, cy1) = Self::coords(self.lo, self.cell, self.nx, self.ny, Vec2::new(c.x + r, c.y + r));
        for cy in cy0..=cy1 {
            for cx in cx0..=cx1 {
                for &i in &self.cells[cy * self.nx + cx] {
                    f(i as usize);
                }
            }
        }
    }

    fn dist_to(&self, i: usize, p: Vec2) -> f64 {
        let (a, b) = self.elems[i];
        point_segment_distance(p, a, b)
    }

    fn distance(&self, p: Vec2) -> f64 {
        let brute = || {
            (0..self.elems.len())
                .map(|i| self.dist_to(i, p))
                .fold(f64::INFINITY, f64::min)
        };
        if self.brute() {
            return brute();
        }
        let outside = Vec2::new(
            (self.lo.x - p.x)
                .max(0.0)
                .max(p.x - (self.lo.x + self.nx as f64 * self.cell)),
            (self.lo.y - p.y)
                .max(0.0)
                .max(p.y - (self.lo.y + self.ny as f64 * self.cell)),
        )
        .norm();
        let mut r = outside + self.cell;
        loop {
            let mut best = f64::INFINITY;
            self.for_near(p, r, |i| best = best.min(self.dist_to(i, p)));
            if best <= r {
                return best;
            }
            if r > outside + self.diag + self.cell {
                return brute();
            }
            r *= 2.0;
        }
    }

    /// `min_b max(d_b(p0), d_b(p1))` over elements within `radius` of `p0`; an upper
    /// bound for the distance function on the whole segment `[p0, p1]`.
    fn segment_bound(&self, p0: Vec2, p1: Vec2, radius: f64) -> f64 {
        let mut best = f64::INFINITY;
        let mut visit = |i: usize| {
            let d0 = self.dist_to(i, p0);
            if d0 < best {
                best = best.min(d0.max(self.dist_to(i, p1)));
            }
        };
        if self.brute() {
            (0..self.elems.len()).for_each(&mut visit);
        } else {
            self.for_near(p0, radius, visit);
        }
        best
    }
}

#[derive(Debug, Clone, Copy)]
struct Interval {
    upper: f64,
    a: Vec2,
    b: Vec2,
    fa: f64,
    fb: f64,
}

impl PartialEq for Interval {
    fn eq(&self, o: &Self) -> bool {
        self.upper.total_cmp(&o.upper) == Ordering::Equal
    }
}
impl Eq for Interval {}
impl PartialOrd for Interval {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Interval {
    fn cmp(&self, o: &Self) -> Ordering {
        self.upper.total_cmp(&o.upper)
    }
}

fn make_interval(index: &Index, a: Vec2, b: Vec2, fa: f64, fb: f64) -> Interval {
    let len = a.dist(b);
    let lipschitz = 0.5 * (fa + fb + len);
    let convex = index.segment_bound(a, b, lipschitz);
    Interval {
        upper: lipschitz.min(convex),
        a,
        b,
        fa,
        fb,
    }
}

/// `sup_{a ∈ A} d(a, B)`, or a value above `abort_above` as soon as one is certain.
fn directed(a: &PlanarSet, index: &Index, abort_above: f64) -> f64 {
    let mut best: f64 = 0.0;
    for &p in &a.points {
        best = best.max(index.distance(p));
        if best > abort_above {
            return best;
        }
    }
    let mut heap = BinaryHeap::new();
    for &(s, t) in &a.segments {
        let fs = index.distance(s);
        let ft = index.distance(t);
        best = best.max(fs).max(ft);
        if best > abort_above {
            return best;
        }
        heap.push(make_interval(index, s, t, fs, ft));
    }
    while let Some(iv) = heap.pop() {
        if iv.upper <= best + HAUSDORFF_TOL {
            break;
        }
        let m = (iv.a + iv.b) * 0.5;
        let fm = index.distance(m);
        best = best.max(fm);
        if best > abort_above {
            return best;
        }
        for child in [
            make_interval(index, iv.a, m, iv.fa, fm),
            make_interval(index, m, iv.b, fm, iv.fb),
        ] {
            if child.upper > best + HAUSDORFF_TOL {
                heap.push(child);
            }
        }
    }
    best
}

/// Directed Hausdorff distance `sup_{a ∈ A} inf_{b ∈ B} |a - b|`.
pub fn directed_hausdorff(a: &PlanarSet, b: &PlanarSet) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        bail!(InvalidParameter, "Hausdorff distance of an empty set");
    }
    Ok(directed(a, &Index::new(b), f64::INFINITY))
}

/// Symmetric Hausdorff distance, accurate to [`HAUSDORFF_TOL`].
pub fn hausdorff_distance(a: &PlanarSet, b: &PlanarSet) -> Result<f64> {
    hausdorff_distance_below(a, b, f64::INFINITY)
}

/// Hausdorff distance with early exit: once the distance is known to exceed
/// `abort_above`, some value larger than `abort_above` is returned.
pub fn hausdorff_distance_below(a: &PlanarSet, b: &PlanarSet, abort_above: f64) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        bail!(InvalidParameter, "Hausdorff distance of an empty set");
    }
    let ab = directed(a, &Index::new(b), abort_above);
    if ab > abort_above {
        return Ok(ab);
    }
    let ba = directed(b, &Index::new(a), abort_above);
    Ok(ab.max(ba))
}
