use std::collections::BTreeSet;
use std::f64::consts::{PI, TAU};

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rcm_core::circuits::{outermost_circuit, Circuit};
use rcm_core::geometry::Vec2;
use rcm_core::regeneration::{
    connection_regeneration, default_ball_radius, pair_predicates, rg_set, search, theta_rg_max, PatternChoice,
    RegenMode, Segment,
};
use rcm_core::wulff::ShapeConstants;
use rcm_core::{BondConfig, BondGraph, LatticeBox, Site};

fn random_config(rng: &mut ChaCha8Rng, n: i32, p: f64) -> BondConfig {
    let lat = LatticeBox::new(n).unwrap();
    let mut cfg = BondConfig::closed(lat);
    for e in 0..BondGraph::edge_count(&lat) {
        cfg.set(e, rng.gen_bool(p));
    }
    cfg
}

fn random_circuit(rng: &mut ChaCha8Rng, n: i32, p: f64) -> (BondConfig, Circuit) {
    loop {
        let cfg = random_config(rng, n, p);
        if let Some(c) = outermost_circuit(&cfg).in_box() {
            let c = c.clone();
            return (cfg, c);
        }
    }
}

fn angle(a: Vec2, b: Vec2) -> f64 {
    a.cross(b).abs().atan2(a.dot(b))
}

/// Dense sampling of the radial site condition.
fn sampled_site(segments: &[Segment], v: Site, k: ShapeConstants) -> bool {
    const M: usize = 2000;
    let vv = Vec2::from(v);
    let perp = Vec2::new(-vv.y, vv.x);
    let va = vv.y.atan2(vv.x);
    for &(a, b) in segments {
        let (a, b) = (Vec2::from(a), Vec2::from(b));
        for i in 0..=M {
            let p = a + (b - a) * (i as f64 / M as f64);
            let off = {
                let d = (p.y.atan2(p.x) - va).rem_euclid(TAU);
                d.min(TAU - d)
            };
            if p.norm() < 1e-12 || off > k.c0 - 1e-9 {
                continue;
            }
            let w = p - vv;
            if w.norm() < 1e-12 {
                continue;
            }
            let lim = PI / 2.0 - k.q0 + 1e-9;
            if angle(w, perp) > lim && angle(w, -perp) > lim {
                return false;
            }
        }
    }
    true
}

fn random_constants(rng: &mut ChaCha8Rng) -> ShapeConstants {
    let q0 = rng.gen_range(0.15..0.7);
    ShapeConstants {
        q0,
        c0: rng.gen_range(0.05..q0 / 2.0),
    }
}

#[test]
fn radial_sites_match_sampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut total = 0;
    for _ in 0..60 {
        let (cfg, c) = random_circuit(&mut rng, 6, 0.62);
        let k = random_constants(&mut rng);
        let segs: Vec<Segment> = c.edges().collect();
        let fast: BTreeSet<Site> = rg_set(&c, k, RegenMode::Circuit, Site::ORIGIN)
            .unwrap()
            .sites
            .into_iter()
            .collect();
        let slow: BTreeSet<Site> = c
            .vertices()
            .iter()
            .copied()
            .filter(|&v| sampled_site(&segs, v, k))
            .collect();
        assert_eq!(fast, slow, "circuit {:?} constants {k:?}", c.vertices());
        let cluster = rg_set(&c, k, RegenMode::Cluster(&cfg), Site::ORIGIN).unwrap();
        assert!(cluster.sites.iter().all(|s| fast.contains(s)));
        total += fast.len();
    }
    assert!(total > 0);
}

/// Direct evaluation of the sup over closed wedges on an angular grid.
fn theta_by_grid(args: &[f64], m: usize) -> f64 {
    if args.len() <= 1 {
        return TAU;
    }
    (0..m)
        .map(|i| {
            let a = i as f64 * TAU / m as f64;
            let nearest = args
                .iter()
                .map(|&t| {
                    let d = (t - a).rem_euclid(TAU);
                    d.min(TAU - d)
                })
                .fold(f64::INFINITY, f64::min);
            2.0 * nearest
        })
        .fold(0.0, f64::max)
}

#[test]
fn theta_gap_matches_grid_sup() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..1000 {
        let n = rng.gen_range(2..12);
        let args: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..TAU)).collect();
        let gap = theta_rg_max(&args);
        let grid = theta_by_grid(&args, 8192);
        assert!((gap - grid).abs() < 1e-3, "{args:?}: {gap} vs {grid}");
        assert!(grid <= gap + 1e-12);
    }
}

fn rotated(c: &Circuit) -> Circuit {
    Circuit::new(c.vertices().iter().map(|s| s.rot90()).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn quarter_turns_map_sites(seed in any::<u64>(), q0 in 0.2f64..0.7, frac in 0.2f64..0.9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (_, c) = random_circuit(&mut rng, 5, 0.6);
        let k = ShapeConstants { q0, c0: frac * q0 / 2.0 };
        let a = rg_set(&c, k, RegenMode::Circuit, Site::ORIGIN).unwrap();
        let b = rg_set(&rotated(&c), k, RegenMode::Circuit, Site::ORIGIN).unwrap();
        let ra: BTreeSet<Site> = a.sites.iter().map(|s| s.rot90()).collect();
        let rb: BTreeSet<Site> = b.sites.iter().copied().collect();
        prop_assert_eq!(ra, rb);
        prop_assert!((a.theta_max - b.theta_max).abs() < 1e-9);
    }

    #[test]
    fn connection_sites_cut_simple_paths(seed in any::<u64>(), delta in 0.2f64..0.7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let path = random_walk_path(&mut rng, 40);
        let (x, y) = (path[0], *path.last().unwrap());
        prop_assume!(x != y);
        let k = default_ball_radius(y - x, delta).unwrap();
        let gamma: Vec<Segment> = path.windows(2).map(|w| (w[0], w[1])).collect();
        let r = connection_regeneration(&gamma, x, y, delta, k, PatternChoice::Any).unwrap();
        for v in &r.sites {
            let i = path.iter().position(|p| p == v).unwrap();
            prop_assert!(i > 0 && i + 1 < path.len());
        }
        prop_assert_eq!(r.clusters.len(), r.sites.len() + 1);
        prop_assert!(r.clusters.iter().all(|c| !c.irregular));
        let span = Vec2::from(y - x).norm();
        prop_assert!(r.maxreg <= gamma.len() as f64 + 1e-9);
        if r.sites.is_empty() {
            prop_assert!((r.maxreg - span).abs() < 1e-9);
        }
    }
}

/// A self-avoiding walk biased eastward, restarted when trapped.
fn random_walk_path(rng: &mut ChaCha8Rng, len: usize) -> Vec<Site> {
    let steps = [Site::new(1, 0), Site::new(0, 1), Site::new(0, -1), Site::new(-1, 0)];
    'outer: loop {
        let mut path = vec![Site::ORIGIN];
        let mut seen: BTreeSet<Site> = path.iter().copied().collect();
        while path.len() <= len {
            let cur = *path.last().unwrap();
            let free: Vec<Site> = steps.iter().map(|&s| cur + s).filter(|s| !seen.contains(s)).collect();
            if free.is_empty() {
                continue 'outer;
            }
            let next = if rng.gen_bool(0.5) && free.contains(&(cur + steps[0])) {
                cur + steps[0]
            } else {
                free[rng.gen_range(0..free.len())]
            };
            seen.insert(next);
            path.push(next);
        }
        return path;
    }
}

#[test]
fn search_invariants_on_random_circuits() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let k = ShapeConstants {
        q0: 0.9 * PI / 8.0,
        c0: 0.9 * PI / 16.0,
    };
    let mut checked = 0;
    // dense configurations: the outermost circuit follows the box with dents
    for _ in 0..300 {
        let (_, c) = random_circuit(&mut rng, 10, 0.85);
        let rg = rg_set(&c, k, RegenMode::Circuit, Site::ORIGIN).unwrap();
        if !rg.spans_quadrants() {
            continue;
        }
        for i in 0..8 {
            let u = Vec2::from_angle(i as f64 * TAU / 8.0 + 0.1);
            let res = search(&rg.sites, k, u).unwrap();
            assert!(res.distinct(), "{res:?}");
            assert!(res.nested(), "{res:?}");
            if let Some((a, b)) = res.pair {
                assert!(pair_predicates(&rg.sites, k, a, b).unwrap().both(), "{res:?}");
            }
            checked += 1;
        }
    }
    assert!(checked > 100, "only {checked} searches");
}
