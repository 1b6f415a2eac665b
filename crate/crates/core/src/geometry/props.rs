//! Property checks for the geometric primitives. Each returns `Err` with a
//! description of the first violation; the fuzz drivers live in the tests
//! and in the CLI.

use std::f64::consts::{FRAC_PI_8, PI, TAU};

use rand::Rng;

use super::{
    angle_between, boundary_path, distang_check, hausdorff_distance, wrap_angle, DirectedCones, PathSide, PlanarSet,
    Vec2, Wedge,
};
use crate::lattice::Site;

pub type Check = std::result::Result<(), String>;

/// Random closed polygon with `k` vertices in a box of half-width `r`.
pub fn random_polygon<R: Rng>(rng: &mut R, k: usize, r: f64) -> PlanarSet {
    let pts: Vec<Vec2> = (0..k)
        .map(|_| Vec2::new(rng.gen_range(-r..r), rng.gen_range(-r..r)))
        .collect();
    PlanarSet::polyline(&pts, true)
}

pub fn hausdorff_axioms(a: &PlanarSet, b: &PlanarSet, c: &PlanarSet) -> Check {
    let d = |x: &PlanarSet, y: &PlanarSet| hausdorff_distance(x, y).map_err(|e| e.to_string());
    let (ab, ba, bc, ac, aa) = (d(a, b)?, d(b, a)?, d(b, c)?, d(a, c)?, d(a, a)?);
    let tol = 1e-7;
    if aa > tol {
        return Err(format!("d(a, a) = {aa}"));
    }
    if ab < 0.0 || (ab - ba).abs() > tol {
        return Err(format!("d(a, b) = {ab}, d(b, a) = {ba}"));
    }
    if ac > ab + bc + tol {
        return Err(format!("triangle: {ac} > {ab} + {bc}"));
    }
    Ok(())
}

/// Points closer than this to a wedge or cone boundary are skipped: their
/// membership legitimately flips under rounding.
const BOUNDARY_MARGIN: f64 = 1e-7;

pub fn wedge_rotation(apex: Vec2, center: f64, half: f64, z: Vec2, phi: f64) -> Check {
    let w = Wedge::new(apex, center, half).map_err(|e| e.to_string())?;
    let d = z - apex;
    if d.norm() < 1e-6 {
        return Ok(());
    }
    let off = wrap_angle(d.arg() - center).abs();
    if (off - half).abs() < BOUNDARY_MARGIN {
        return Ok(());
    }
    let r = Wedge::new(apex.rotate(phi), center + phi, half).map_err(|e| e.to_string())?;
    if w.contains(z) != r.contains(z.rotate(phi)) {
        return Err(format!("wedge {w:?} at {z:?} changes under rotation by {phi}"));
    }
    Ok(())
}

pub fn cone_invariance(v: Vec2, w: Vec2, q0: f64, phi: f64, scale: f64) -> Check {
    let c = DirectedCones::new(v, q0).map_err(|e| e.to_string())?;
    let d = w - v;
    if d.norm() < 1e-6 {
        return Ok(());
    }
    let ang = angle_between(d, v.perp()).map_err(|e| e.to_string())?;
    let half = PI / 2.0 - q0;
    if (ang - half).abs() < BOUNDARY_MARGIN || (PI - ang - half).abs() < BOUNDARY_MARGIN {
        return Ok(());
    }
    let base = c.contains_either(w);
    let rot = DirectedCones::new(v.rotate(phi), q0).map_err(|e| e.to_string())?;
    if rot.contains_either(w.rotate(phi)) != base {
        return Err(format!(
            "cones at {v:?}, point {w:?}: rotation by {phi} changes membership"
        ));
    }
    if c.contains_either(v + d * scale) != base {
        return Err(format!(
            "cones at {v:?}, point {w:?}: scaling by {scale} changes membership"
        ));
    }
    Ok(())
}

/// L∞ distance from `p` to the ray `{t u : t >= 0}`; convex in `t`.
fn linf_to_ray(p: Vec2, u: Vec2) -> f64 {
    let f = |t: f64| (p.x - t * u.x).abs().max((p.y - t * u.y).abs());
    let (mut lo, mut hi) = (0.0, 2.0 * p.norm() / u.norm() + 1.0);
    for _ in 0..200 {
        let (a, b) = (lo + (hi - lo) / 3.0, hi - (hi - lo) / 3.0);
        if f(a) <= f(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    f(0.5 * (lo + hi))
}

/// Simple, monotone in the rotated frame, and within L∞ distance 2 of the ray.
pub fn boundary_path_props(u: Vec2, side: PathSide, len: usize) -> Check {
    let path = boundary_path(u, side, len).map_err(|e| e.to_string())?;
    let mut seen = std::collections::HashSet::new();
    if !path.iter().all(|s| seen.insert(*s)) {
        return Err(format!("path along {u:?} repeats a vertex"));
    }
    // frame in which the path runs right and up
    let k = (0..4)
        .find(|&k| {
            let w = (0..k).fold(u, |w, _| Vec2::new(w.y, -w.x));
            w.x > 0.0 && w.y >= 0.0
        })
        .unwrap_or(0);
    let back = |s: Site| s.rotate_quarters(-k);
    if path.windows(2).any(|w| {
        let d = back(w[1]) - back(w[0]);
        d != Site::new(1, 0) && d != Site::new(0, 1)
    }) {
        return Err(format!("path along {u:?} is not monotone"));
    }
    if let Some(s) = path.iter().find(|&&s| linf_to_ray(Vec2::from(s), u) > 2.0 + 1e-9) {
        return Err(format!("path along {u:?} strays to {s:?}"));
    }
    Ok(())
}

/// A point satisfying the distance-angle hypotheses relative to `x`, or
/// `None` if the draw misses them.
pub fn distang_input<R: Rng>(rng: &mut R) -> (Vec2, f64, f64, Option<Vec2>) {
    let q0 = rng.gen_range(0.01..FRAC_PI_8);
    let c0 = rng.gen_range(0.0..0.5 * q0).max(1e-4);
    let x = Vec2::from_angle(rng.gen_range(0.0..TAU)) * rng.gen_range(0.5..50.0);
    let dir = x.perp().rotate(rng.gen_range(-(PI / 2.0 - q0)..(PI / 2.0 - q0)));
    let dir = if rng.gen_bool(0.5) { dir } else { -dir };
    let y = x + dir.normalized() * rng.gen_range(0.0..x.norm() * c0 * 1.2);
    let ok = !y.is_zero()
        && angle_between(x, y).is_ok_and(|a| a <= c0)
        && DirectedCones::new(x, q0).is_ok_and(|c| c.contains_either(y));
    (x, q0, c0, ok.then_some(y))
}

pub fn distang_holds(x: Vec2, y: Vec2, q0: f64, c0: f64) -> Check {
    match distang_check(x, y, q0, c0) {
        Ok(true) => Ok(()),
        Ok(false) => Err(format!("bound fails at x = {x:?}, y = {y:?}, q0 = {q0}, c0 = {c0}")),
        Err(e) => Err(format!("hypotheses rejected at x = {x:?}, y = {y:?}: {e}")),
    }
}

/// Per-suite outcome of [`fuzz_suites`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SuiteTally {
    pub trials: usize,
    pub violations: usize,
    pub first_failure: Option<String>,
}

/// Runs every property above on `trials` random inputs, keyed by suite name.
pub fn fuzz_suites<R: Rng>(rng: &mut R, trials: usize) -> std::collections::BTreeMap<&'static str, SuiteTally> {
    let mut out: std::collections::BTreeMap<&'static str, SuiteTally> = Default::default();
    let mut record = |name: &'static str, r: Check| {
        let t = out.entry(name).or_default();
        t.trials += 1;
        if let Err(e) = r {
            t.violations += 1;
            t.first_failure.get_or_insert(e);
        }
    };
    for _ in 0..trials {
        let k = [rng.gen_range(1..5), rng.gen_range(1..5), rng.gen_range(1..5)];
        let polys: Vec<_> = k.iter().map(|&k| random_polygon(rng, k, 10.0)).collect();
        record("hausdorff", hausdorff_axioms(&polys[0], &polys[1], &polys[2]));
        let mut pt = |r: f64| Vec2::new(rng.gen_range(-r..r), rng.gen_range(-r..r));
        let (apex, z, v, w) = (pt(5.0), pt(20.0), pt(20.0), pt(40.0));
        record(
            "wedge",
            wedge_rotation(
                apex,
                rng.gen_range(-7.0..7.0),
                rng.gen_range(0.0..3.1),
                z,
                rng.gen_range(-7.0..7.0),
            ),
        );
        if v.norm() > 1e-3 {
            let q0 = rng.gen_range(0.0..1.5);
            record(
                "cone",
                cone_invariance(v, w, q0, rng.gen_range(-7.0..7.0), rng.gen_range(0.01..100.0)),
            );
        }
        let side = if rng.gen_bool(0.5) {
            PathSide::Plus
        } else {
            PathSide::Minus
        };
        record(
            "boundary_path",
            boundary_path_props(Vec2::from_angle(rng.gen_range(0.0..TAU)), side, rng.gen_range(0..60)),
        );
    }
    let mut valid = 0;
    while valid < trials {
        if let (x, q0, c0, Some(y)) = distang_input(rng) {
            valid += 1;
            record("distance_angle", distang_holds(x, y, q0, c0));
        }
    }
    out
}
