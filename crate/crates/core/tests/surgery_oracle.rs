use rand::Rng;

use rcm_core::geometry::{boundary_path, PathSide, Vec2};
use rcm_core::rng::chain_rng;
use rcm_core::sampler::exact_enumerate;
use rcm_core::stats::{chi_square_gof, total_variation};
use rcm_core::surgery::{
    conditional_tv, equal_mass_cells, open_path_seal, region_conditional, region_edges, regular_action_check,
    sector_storage_replacement, shift_measure_ratio, shift_replacement, two_step_invariance, HeatBathResampler, Region,
    StoredBitsResampler,
};
use rcm_core::{BondConfig, BoundaryCondition, EdgeSet, FKParams, LatticeBox, Site};

fn unit_box() -> LatticeBox {
    LatticeBox::new(1).unwrap()
}

fn spokes(lat: &LatticeBox) -> EdgeSet {
    region_edges(
        lat,
        &Region::Sector {
            from: Site::new(1, 0),
            to: Site::new(1, -1),
            radius: 1.0,
        },
    )
    .unwrap()
}

#[test]
fn heat_bath_matches_exact_conditional() {
    let lat = unit_box();
    let region = spokes(&lat);
    let params = FKParams::from_p(0.5, 2.0, BoundaryCondition::Free, 0).unwrap();
    let mut rng = chain_rng(3, 0);
    for mask in [0u64, 0xfff, 0x0a5] {
        let cfg = BondConfig::from_mask(lat, mask);
        let tv = conditional_tv(
            &cfg,
            &region,
            &params,
            &mut HeatBathResampler::default(),
            100_000,
            &mut rng,
        )
        .unwrap();
        assert!(tv < 0.02, "exterior {mask:x}: tv {tv}");
    }
}

#[test]
fn larger_region_in_bigger_box() {
    // twelve interior edges of the N=2 box around the origin, wired
    let lat = LatticeBox::new(2).unwrap();
    let region = region_edges(
        &lat,
        &Region::Sector {
            from: Site::new(1, 0),
            to: Site::new(1, -1),
            radius: 1.5,
        },
    )
    .unwrap();
    assert!(region.len() <= 12 && region.len() >= 8, "{}", region.len());
    let params = FKParams::from_p(0.5, 2.0, BoundaryCondition::Wired, 0).unwrap();
    let mut rng = chain_rng(4, 0);
    let mut cfg = BondConfig::closed(lat);
    for e in 0..40 {
        cfg.set(e, rng.gen_bool(0.5));
    }
    let reps = 30_000;
    let tv = conditional_tv(
        &cfg,
        &region,
        &params,
        &mut HeatBathResampler::default(),
        reps,
        &mut rng,
    )
    .unwrap();
    // the empirical law over this many cells has a sizeable sampling TV by itself
    let law = region_conditional(&cfg, &region, &params).unwrap();
    let mut hist = vec![0.0; law.len()];
    for _ in 0..reps {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let i = law
            .iter()
            .position(|&p| {
                acc += p;
                u < acc
            })
            .unwrap_or(law.len() - 1);
        hist[i] += 1.0 / reps as f64;
    }
    let exact = total_variation(&hist, &law);
    assert!(tv < exact + 0.02, "heat-bath {tv} vs exact draws {exact}");
}

#[test]
fn q1_resampling_is_independent_bernoulli() {
    let lat = unit_box();
    let region = spokes(&lat);
    let params = FKParams::from_p(0.3, 1.0, BoundaryCondition::Wired, 0).unwrap();
    let mut rng = chain_rng(5, 0);
    let cfg = BondConfig::from_mask(lat, 0xfff);
    let mut counts = vec![0u64; 16];
    for _ in 0..50_000 {
        let out =
            sector_storage_replacement(&cfg, &region, &params, &mut HeatBathResampler::default(), &mut rng).unwrap();
        let m = region
            .iter()
            .enumerate()
            .fold(0, |m, (i, e)| m | (out.omega1.is_open(e) as usize) << i);
        counts[m] += 1;
    }
    let expect: Vec<f64> = (0..16u32)
        .map(|m| {
            let k = m.count_ones() as i32;
            0.3f64.powi(k) * 0.7f64.powi(4 - k)
        })
        .collect();
    let (_, p) = chi_square_gof(&counts, &expect).unwrap();
    assert!(p > 0.001, "p = {p}");
    let reg = regular_action_check(
        &cfg,
        &region,
        &params,
        &mut HeatBathResampler::default(),
        20_000,
        &mut rng,
    )
    .unwrap();
    assert!(reg.independent(), "{reg:?}");
}

#[test]
fn two_step_kernel_preserves_the_measure() {
    let lat = unit_box();
    let mut rng = chain_rng(6, 0);
    for (bc, region) in [
        (BoundaryCondition::Free, spokes(&lat)),
        (
            BoundaryCondition::Wired,
            region_edges(
                &lat,
                &Region::Sector {
                    from: Site::new(1, 0),
                    to: Site::new(0, 1),
                    radius: 1.0,
                },
            )
            .unwrap(),
        ),
    ] {
        let params = FKParams::from_p(0.5, 2.0, bc, 0).unwrap();
        let table = exact_enumerate(&lat, &params).unwrap();
        let r = two_step_invariance(
            &table,
            &region,
            &params,
            &mut HeatBathResampler::default(),
            100_000,
            20,
            &mut rng,
        )
        .unwrap();
        assert!(r.p_value > 0.001, "{bc:?}: {r:?}");
    }
}

#[test]
fn regular_action_and_negative_control() {
    let lat = unit_box();
    let region = spokes(&lat);
    let params = FKParams::from_p(0.5, 2.0, BoundaryCondition::Free, 0).unwrap();
    let mut rng = chain_rng(7, 0);
    for mask in [0u64, 0x924, 0xfff] {
        let ext = BondConfig::from_mask(lat, mask);
        let good = regular_action_check(
            &ext,
            &region,
            &params,
            &mut HeatBathResampler::default(),
            20_000,
            &mut rng,
        )
        .unwrap();
        assert!(good.independent(), "{mask:x}: {good:?}");
        let bad = regular_action_check(&ext, &region, &params, &mut StoredBitsResampler, 20_000, &mut rng).unwrap();
        assert!(!bad.independent(), "{mask:x}: {bad:?}");
    }
}

fn shift_sets(lat: &LatticeBox) -> (EdgeSet, EdgeSet, Site) {
    // A touches the image of B but not B itself, so the two joint laws differ
    let a = EdgeSet::from_edges(12, [lat.edge_between(Site::new(0, 0), Site::new(1, 0)).unwrap()]);
    let b = EdgeSet::from_edges(12, [lat.edge_between(Site::new(-1, -1), Site::new(-1, 0)).unwrap()]);
    (a, b, Site::new(2, 0))
}

#[test]
fn shift_output_law_matches_enumeration() {
    let lat = unit_box();
    let (a, b, shift) = shift_sets(&lat);
    let mut rng = chain_rng(8, 0);
    for q in [1.0, 2.0] {
        let params = FKParams::from_p(0.5, q, BoundaryCondition::Free, 0).unwrap();
        let table = exact_enumerate(&lat, &params).unwrap();
        let ratio = shift_measure_ratio(&table, &a, &b, shift).unwrap();
        assert!((ratio.output.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        if q == 1.0 {
            assert!((ratio.max_ratio - 1.0).abs() < 1e-12 && (ratio.min_ratio - 1.0).abs() < 1e-12);
        } else {
            assert!(
                ratio.max_ratio.is_finite() && ratio.min_ratio > 0.0,
                "{} {}",
                ratio.max_ratio,
                ratio.min_ratio
            );
            assert!(ratio.max_ratio > 1.0 + 1e-6);
        }
        let (cell_of, mass) = equal_mass_cells(&ratio.output, 20);
        let mut counts = vec![0u64; mass.len()];
        let reps = 40_000;
        for _ in 0..reps {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mask = table
                .probs()
                .iter()
                .position(|&p| {
                    acc += p;
                    u < acc
                })
                .unwrap_or(table.probs().len() - 1);
            let out = shift_replacement(
                &table.config(mask as u64),
                &a,
                &b,
                shift,
                &params,
                &mut HeatBathResampler::default(),
                &mut rng,
            )
            .unwrap();
            let m = out.bits().to_mask() as usize;
            counts[cell_of[m]] += 1;
        }
        let (_, p) = chi_square_gof(&counts, &mass).unwrap();
        assert!(p > 0.001, "q={q}: p = {p}");
        if q == 1.0 {
            // exact product measure
            let (_, p) = chi_square_gof(&counts, &cell_masses(&cell_of, table.probs(), mass.len())).unwrap();
            assert!(p > 0.001);
            assert!(total_variation(&ratio.output, table.probs()) < 1e-12);
        }
    }
}

fn cell_masses(cell_of: &[usize], probs: &[f64], n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n];
    for (&c, &p) in cell_of.iter().zip(probs) {
        m[c] += p;
    }
    m
}

#[test]
fn seal_is_monotone_and_idempotent() {
    let lat = LatticeBox::new(6).unwrap();
    let mut rng = chain_rng(9, 0);
    for k in 0..20 {
        let mut cfg = BondConfig::closed(lat);
        for e in 0..cfg.bits().len() {
            cfg.set(e, rng.gen_bool(0.3));
        }
        let u = Vec2::from_angle(k as f64 * 0.31);
        let path = boundary_path(u, PathSide::Minus, 5).unwrap();
        let sealed = open_path_seal(&cfg, &path).unwrap();
        assert!(cfg.le(&sealed));
        assert_eq!(open_path_seal(&sealed, &path).unwrap(), sealed);
        assert!(path.windows(2).all(|w| sealed.is_open_between(w[0], w[1])));
        let fresh = open_path_seal(&BondConfig::closed(lat), &path).unwrap();
        assert_eq!(fresh.open_count(), 5);
    }
}
