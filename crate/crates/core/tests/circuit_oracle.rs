use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rcm_core::circuits::{
    brute_force_open_path, brute_force_outermost, open_cycles, outermost_circuit, outermost_open_path, path_area,
    Outermost,
};
use rcm_core::lattice::{BondConfig, BondGraph, LatticeBox, Site};

fn random_config(lattice: LatticeBox, density: f64, rng: &mut ChaCha8Rng) -> BondConfig {
    let mut cfg = BondConfig::closed(lattice);
    for e in 0..lattice.edge_count() {
        cfg.set(e, rng.gen::<f64>() < density);
    }
    cfg
}

#[test]
fn outermost_matches_brute_force_on_random_configs() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for n in [1, 2] {
        let lattice = LatticeBox::new(n).unwrap();
        let mut found = 0;
        for i in 0..2000 {
            let density = [0.5, 0.7, 0.85][i % 3];
            let cfg = random_config(lattice, density, &mut rng);
            let fast = outermost_circuit(&cfg);
            let slow = brute_force_outermost(&cfg).unwrap();
            assert_eq!(
                fast,
                slow,
                "mismatch on {}",
                cfg.to_line(rcm_core::BoundaryCondition::Free)
            );
            if fast != Outermost::None {
                found += 1;
            }
        }
        assert!(found > 100);
    }
}

#[test]
fn outermost_contains_every_enclosing_circuit() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let lattice = LatticeBox::new(2).unwrap();
    for _ in 0..300 {
        let cfg = random_config(lattice, 0.75, &mut rng);
        if let Some(outer) = outermost_circuit(&cfg).in_box() {
            let faces = outer.enclosed_faces();
            assert_eq!(faces.len() as i64, outer.area());
            for cyc in open_cycles(&cfg, u64::MAX).unwrap() {
                let c = rcm_core::circuits::Circuit::new(cyc).unwrap();
                if c.encloses_origin() {
                    assert!(c.enclosed_faces().is_subset(&faces));
                }
            }
        }
    }
}

#[test]
fn outermost_open_path_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let lattice = LatticeBox::new(3).unwrap();
    let sites: Vec<Site> = lattice.sites().filter(|s| *s != Site::ORIGIN).collect();
    let mut checked = 0;
    for _ in 0..4000 {
        let cfg = random_config(lattice, 0.7, &mut rng);
        let x = sites[rng.gen_range(0..sites.len())];
        let y = sites[rng.gen_range(0..sites.len())];
        if x == y {
            continue;
        }
        let fast = outermost_open_path(&cfg, x, y).unwrap();
        let slow = brute_force_open_path(&cfg, x, y).unwrap();
        match (fast, slow) {
            (None, None) => {}
            (Some(p), Some(q)) => {
                assert!(
                    (p.enclosed_area() - path_area(&q)).abs() < 1e-9,
                    "x={x} y={y} walk {:?} area {} vs brute {:?} area {} cfg {}",
                    p.vertices,
                    p.enclosed_area(),
                    q,
                    path_area(&q),
                    cfg.to_line(rcm_core::BoundaryCondition::Free)
                );
                assert_eq!(p.vertices, q);
                checked += 1;
            }
            (a, b) => panic!("x={x} y={y}: {a:?} vs {b:?}"),
        }
    }
    assert!(checked > 200, "{checked}");
}
