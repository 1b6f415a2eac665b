//! Planar geometry: angles, wedges, cones, sectors, triangles, clipping,
//! Hausdorff distance and boundary lattice paths.
//!
//! All angle comparisons use the single absolute tolerance [`ANGLE_TOL`].
//! Wedge, cone and sector membership is closed (boundary rays included).

mod hausdorff;
mod paths;
pub mod props;

pub use hausdorff::{directed_hausdorff, hausdorff_distance, hausdorff_distance_below, PlanarSet, HAUSDORFF_TOL};
pub use paths::{boundary_path, PathSide};

use std::f64::consts::{PI, TAU};
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{bail, Result};
use crate::lattice::Site;

/// Absolute tolerance for angle comparisons.
pub const ANGLE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn from_angle(theta: f64) -> Self {
        Vec2::new(theta.cos(), theta.sin())
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the cross product; positive when `o` is counterclockwise of `self`.
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm2(self) -> f64 {
        self.dot(self)
    }

    pub fn dist(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        Vec2::new(self.x / n, self.y / n)
    }

    /// Counterclockwise right-angle rotation.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn rotate(self, theta: f64) -> Vec2 {
        let (s, c) = theta.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    /// Argument in `(-π, π]`.
    pub fn arg(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn is_zero(self) -> bool {
        self.x == 0.0 && self.y == 0.0
    }
}

impl From<Site> for Vec2 {
    fn from(s: Site) -> Self {
        Vec2::new(s.x as f64, s.y as f64)
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(TAU);
    if r > PI {
        r -= TAU;
    }
    r
}

/// Argument of `z` on the branch continuous on `(reference - π, reference + π]`.
pub fn arg_near(z: Vec2, reference: f64) -> f64 {
    reference + wrap_angle(z.arg() - reference)
}

/// Counterclockwise rotation angle from direction `from` to direction `to`, in `[0, 2π)`.
pub fn ccw_angle(from: f64, to: f64) -> f64 {
    let d = (to - from).rem_euclid(TAU);
    if d >= TAU {
        0.0
    } else {
        d
    }
}

/// Argument in `[0, 2π)`.
pub fn arg_positive(z: Vec2) -> f64 {
    ccw_angle(0.0, z.arg())
}

/// Unoriented angle between two nonzero vectors, in `[0, π]`.
pub fn angle_between(x: Vec2, y: Vec2) -> Result<f64> {
    if x.is_zero() || y.is_zero() {
        bail!(InvalidParameter, "angle with the zero vector is undefined");
    }
    Ok(x.cross(y).abs().atan2(x.dot(y)))
}

/// Angle between nonzero vectors without the zero check.
pub(crate) fn angle_unchecked(x: Vec2, y: Vec2) -> f64 {
    x.cross(y).abs().atan2(x.dot(y))
}

/// Closed wedge of half-width `half_width` about the direction `center_arg`,
/// with apex `apex`. The apex itself belongs to the wedge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wedge {
    pub apex: Vec2,
    pub center_arg: f64,
    pub half_width: f64,
}

impl Wedge {
    pub fn new(apex: Vec2, center_arg: f64, half_width: f64) -> Result<Self> {
        if !(0.0..PI).contains(&half_width) {
            bail!(
                InvalidParameter,
                "wedge half-width must lie in [0, π), got {half_width}"
            );
        }
        Ok(Wedge {
            apex,
            center_arg,
            half_width,
        })
    }

    /// Wedge at the origin about the direction of `v`.
    pub fn about(v: Vec2, half_width: f64) -> Result<Self> {
        if v.is_zero() {
            bail!(InvalidParameter, "wedge direction must be nonzero");
        }
        Wedge::new(Vec2::ZERO, v.arg(), half_width)
    }

    pub fn contains(&self, z: Vec2) -> bool {
        let d = z - self.apex;
        if d.is_zero() {
            return true;
        }
        wrap_angle(d.arg() - self.center_arg).abs() <= self.half_width + ANGLE_TOL
    }

    /// The two bounding half-planes `n·(z - apex) >= 0`, valid when the wedge is convex
    /// (`half_width <= π/2`).
    pub fn half_planes(&self) -> [(Vec2, Vec2); 2] {
        let lo = Vec2::from_angle(self.center_arg - self.half_width);
        let hi = Vec2::from_angle(self.center_arg + self.half_width);
        // left of the clockwise ray, right of the counterclockwise ray
        [(lo.perp(), self.apex), (-hi.perp(), self.apex)]
    }
}

/// Closed circular cone `{w : w = apex or ∠(w - apex, axis) <= half_angle}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cone {
    pub apex: Vec2,
    pub axis: Vec2,
    pub half_angle: f64,
}

impl Cone {
    pub fn contains(&self, w: Vec2) -> bool {
        let d = w - self.apex;
        d.is_zero() || angle_unchecked(d, self.axis) <= self.half_angle + ANGLE_TOL
    }

    /// Strict interior test with the same tolerance used against the boundary.
    pub fn contains_strictly(&self, w: Vec2) -> bool {
        let d = w - self.apex;
        !d.is_zero() && angle_unchecked(d, self.axis) < self.half_angle - ANGLE_TOL
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConeSide {
    Forward,
    Backward,
}

/// Forward and backward cones of half-angle `π/2 - q0` at `v`, with axes
/// `v⊥` and `-v⊥` respectively.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectedCones {
    pub apex: Vec2,
    pub q0: f64,
}

impl DirectedCones {
    pub fn new(apex: Vec2, q0: f64) -> Result<Self> {
        if apex.is_zero() {
            bail!(InvalidParameter, "cone apex must be nonzero");
        }
        if !(0.0..=PI / 2.0).contains(&q0) {
            bail!(InvalidParameter, "q0 must lie in [0, π/2], got {q0}");
        }
        Ok(DirectedCones { apex, q0 })
    }

    pub fn cone(&self, side: ConeSide) -> Cone {
        let axis = match side {
            ConeSide::Forward => self.apex.perp(),
            ConeSide::Backward => -self.apex.perp(),
        };
        Cone {
            apex: self.apex,
            axis,
            half_angle: PI / 2.0 - self.q0,
        }
    }

    pub fn contains(&self, side: ConeSide, w: Vec2) -> bool {
        self.cone(side).contains(w)
    }

    pub fn contains_either(&self, w: Vec2) -> bool {
        self.contains(ConeSide::Forward, w) || self.contains(ConeSide::Backward, w)
    }
}

/// Closed angular sector swept counterclockwise from `from` to `to`, plus the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sector {
    pub from: Vec2,
    pub to: Vec2,
}

impl Sector {
    pub fn new(from: Vec2, to: Vec2) -> Result<Self> {
        if from.is_zero() || to.is_zero() {
            bail!(InvalidParameter, "sector boundary points must be nonzero");
        }
        Ok(Sector { from, to })
    }

    /// Angular width in `[0, 2π)`.
    pub fn width(&self) -> f64 {
        ccw_angle(self.from.arg(), self.to.arg())
    }

    pub fn contains(&self, z: Vec2) -> bool {
        if z.is_zero() {
            return true;
        }
        let off = ccw_angle(self.from.arg(), z.arg());
        off <= self.width() + ANGLE_TOL || off >= TAU - ANGLE_TOL
    }

    /// Whether the whole segment `[a, b]` lies in the sector.
    pub fn contains_segment(&self, a: Vec2, b: Vec2) -> bool {
        if !self.contains(a) || !self.contains(b) {
            return false;
        }
        if self.width() <= PI + ANGLE_TOL {
            return true;
        }
        // the complement is an open convex cone; the segment must avoid it
        let comp = Sector {
            from: self.to,
            to: self.from,
        };
        let mid = Vec2::from_angle(self.to.arg() + comp.width() / 2.0);
        let cone = Cone {
            apex: Vec2::ZERO,
            axis: mid,
            half_angle: comp.width() / 2.0,
        };
        !segment_meets_open_cone(a, b, &cone)
    }
}

/// Area of the triangle with vertices `0`, `x`, `y`.
pub fn triangle_area(x: Vec2, y: Vec2) -> f64 {
    0.5 * x.cross(y).abs()
}

/// Closed triangle membership for the triangle `0, x, y`.
pub fn triangle_contains(x: Vec2, y: Vec2, z: Vec2) -> bool {
    let eps = 1e-9 * (1.0 + x.norm2() + y.norm2());
    let o = Vec2::ZERO;
    let s1 = (x - o).cross(z - o);
    let s2 = (y - x).cross(z - x);
    let s3 = (o - y).cross(z - y);
    let has_neg = s1 < -eps || s2 < -eps || s3 < -eps;
    let has_pos = s1 > eps || s2 > eps || s3 > eps;
    !(has_neg && has_pos)
}

/// Euclidean distance from `p` to the segment `[a, b]`.
pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let l2 = ab.norm2();
    if l2 == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(ab) / l2).clamp(0.0, 1.0);
    p.dist(a + ab * t)
}

/// Parameter interval `[t0, t1] ⊆ [0, 1]` of the segment `a + t (b - a)` lying in
/// every closed half-plane `{z : n·(z - p) >= 0}`; `None` if empty.
pub fn clip_segment(a: Vec2, b: Vec2, half_planes: &[(Vec2, Vec2)]) -> Option<(f64, f64)> {
    const EPS: f64 = 1e-12;
    let d = b - a;
    let len = d.norm().max(1e-300);
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for &(n, p) in half_planes {
        let n = n.normalized();
        let f = n.dot(a - p);
        let g = n.dot(d);
        if (g / len).abs() < EPS {
            if f < -EPS * (1.0 + p.norm()) {
                return None;
            }
            continue;
        }
        let t = -f / g;
        if g > 0.0 {
            t0 = t0.max(t);
        } else {
            t1 = t1.min(t);
        }
        if t0 > t1 + EPS / len {
            return None;
        }
    }
    Some((t0, t1.max(t0)))
}

/// Whether the segment `[a, b]` contains a point of the open cone interior
/// (`∠(z - apex, axis) < half_angle`), for a convex cone (`half_angle <= π/2`).
pub fn segment_meets_open_cone(a: Vec2, b: Vec2, cone: &Cone) -> bool {
    if cone.half_angle <= ANGLE_TOL {
        return false;
    }
    let axis = cone.axis.normalized();
    let lo = axis.rotate(-cone.half_angle);
    let hi = axis.rotate(cone.half_angle);
    // shrink by the tolerance so boundary contact does not count
    let shrink = ANGLE_TOL.max(1e-12);
    let lo_in = lo.rotate(shrink);
    let hi_in = hi.rotate(-shrink);
    let planes = [(lo_in.perp(), cone.apex), (-hi_in.perp(), cone.apex)];
    match clip_segment(a, b, &planes) {
        None => false,
        Some((t0, t1)) => {
            // a single clipped point could be the apex, which is not interior
            let mid = a + (b - a) * (0.5 * (t0 + t1));
            cone.contains_strictly(mid) || {
                let p0 = a + (b - a) * t0;
                let p1 = a + (b - a) * t1;
                cone.contains_strictly(p0) || cone.contains_strictly(p1)
            }
        }
    }
}

/// Bound `‖y - x‖ <= csc(q0/2) ‖x‖ ∠(x, y)` for `y` near `x` inside the
/// forward/backward cones of `x`. Errors if the hypotheses fail.
pub fn distang_check(x: Vec2, y: Vec2, q0: f64, c0: f64) -> Result<bool> {
    if x.is_zero() || y.is_zero() {
        bail!(Precondition, "distance-angle bound needs nonzero points");
    }
    let ang = angle_unchecked(x, y);
    if ang > c0 + ANGLE_TOL {
        bail!(Precondition, "angle {ang} exceeds c0 = {c0}");
    }
    let cones = DirectedCones::new(x, q0)?;
    if !cones.contains_either(y) {
        bail!(Precondition, "y lies outside the forward and backward cones of x");
    }
    let lhs = y.dist(x);
    let rhs = x.norm() * ang / (q0 / 2.0).sin();
    Ok(lhs <= rhs * (1.0 + 1e-9) + 1e-12)
}

/// Summary of how far apart two edge sets are.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WellSeparation {
    /// Sum of `exp(-λ ‖x - y‖)` over vertex pairs at distance at least `m`.
    pub kappa: f64,
    /// Number of vertex pairs at distance at most `m`.
    pub phi: usize,
    pub disjoint: bool,
}

impl WellSeparation {
    pub fn is_well_separated(&self, c: f64, c0: f64) -> bool {
        self.disjoint && self.kappa <= 1.0 / (2.0 * c) && (self.phi as f64) <= c0
    }
}

fn normalize_edge(e: (Site, Site)) -> (Site, Site) {
    if e.0 <= e.1 {
        e
    } else {
        (e.1, e.0)
    }
}

pub fn well_separation(a: &[(Site, Site)], b: &[(Site, Site)], m: f64, lambda: f64) -> Result<WellSeparation> {
    if !(lambda > 0.0) {
        bail!(InvalidParameter, "lambda must be positive, got {lambda}");
    }
    let ea: std::collections::BTreeSet<_> = a.iter().copied().map(normalize_edge).collect();
    let eb: std::collections::BTreeSet<_> = b.iter().copied().map(normalize_edge).collect();
    let disjoint = ea.is_disjoint(&eb);
    let va: std::collections::BTreeSet<Site> = ea.iter().flat_map(|&(s, t)| [s, t]).collect();
    let vb: std::collections::BTreeSet<Site> = eb.iter().flat_map(|&(s, t)| [s, t]).collect();
    let mut kappa = 0.0;
    let mut phi = 0;
    for &x in &va {
        for &y in &vb {
            let d = Vec2::from(x).dist(Vec2::from(y));
            if d >= m {
                kappa += (-lambda * d).exp();
            }
            if d <= m {
                phi += 1;
            }
        }
    }
    Ok(WellSeparation { kappa, phi, disjoint })
}
