//! Lattice paths hugging a ray from the origin on either side.

use super::Vec2;
use crate::error::{bail, Result};
use crate::lattice::Site;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PathSide {
    /// Stays on the clockwise side of the ray.
    Minus,
    /// Stays on the counterclockwise side of the ray.
    Plus,
}

/// Number of quarter turns `k` such that rotating `u` clockwise by `k`
/// quarter turns puts its argument in `[0, π/2)`.
fn quadrant(u: Vec2) -> i32 {
    if u.x > 0.0 && u.y >= 0.0 {
        0
    } else if u.x <= 0.0 && u.y > 0.0 {
        1
    } else if u.x < 0.0 && u.y <= 0.0 {
        2
    } else {
        3
    }
}

fn rotate_quarters(u: Vec2, k: i32) -> Vec2 {
    (0..k.rem_euclid(4)).fold(u, |v, _| v.perp())
}

/// The first `length + 1` vertices of the lattice path from the origin that
/// follows the ray through `u` on the given side.
///
/// For `arg(u) ∈ [0, π/2)` the minus path steps up whenever the vertex above
/// has argument at most `arg(u)` and right otherwise; the plus path steps
/// right whenever the vertex to the right has argument at least `arg(u)` and
/// up otherwise. Other directions are handled by rotating into the first
/// quadrant and back.
pub fn boundary_path(u: Vec2, side: PathSide, length: usize) -> Result<Vec<Site>> {
    if u.is_zero() || !u.x.is_finite() || !u.y.is_finite() {
        bail!(InvalidParameter, "boundary path needs a nonzero direction");
    }
    let k = quadrant(u);
    let w = rotate_quarters(u, -k);
    let mut cur = Site::ORIGIN;
    let mut out = Vec::with_capacity(length + 1);
    out.push(cur);
    for _ in 0..length {
        let up = cur + Site::new(0, 1);
        let right = cur + Site::new(1, 0);
        cur = match side {
            // arg(up) <= arg(w)  <=>  up is not counterclockwise of w
            PathSide::Minus => {
                if w.cross(Vec2::from(up)) <= 0.0 {
                    up
                } else {
                    right
                }
            }
            // arg(right) >= arg(w)  <=>  right is not clockwise of w
            PathSide::Plus => {
                if w.cross(Vec2::from(right)) >= 0.0 {
                    right
                } else {
                    up
                }
            }
        };
        out.push(cur);
    }
    Ok(out.into_iter().map(|s| s.rotate_quarters(k)).collect())
}
