use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rcm_core::conditioning::{event_circuit, EventKind, EventSpec, RestrictedChain};
use rcm_core::sampler::exact_enumerate;
use rcm_core::stats::total_variation;
use rcm_core::wulff::{build_wulff, WulffShape, XiTable, DEFAULT_GRID};
use rcm_core::{BondConfig, BondGraph, BoundaryCondition, FKParams, LatticeBox};

fn disk() -> WulffShape {
    build_wulff(&XiTable::constant(DEFAULT_GRID, 1.0).unwrap()).unwrap()
}

/// Exact conditional law on the event, from full enumeration.
fn exact_conditional(
    lat: LatticeBox,
    params: &FKParams,
    ev: &EventSpec,
    shape: Option<&WulffShape>,
) -> BTreeMap<u64, f64> {
    let table = exact_enumerate(&lat, params).unwrap();
    let mut law = BTreeMap::new();
    for (mask, &p) in table.probs().iter().enumerate() {
        let cfg = table.config(mask as u64);
        if event_circuit(&cfg, ev, shape).unwrap().is_some() {
            law.insert(mask as u64, p);
        }
    }
    let z: f64 = law.values().sum();
    law.values_mut().for_each(|p| *p /= z);
    law
}

fn chain_law(ch: &mut RestrictedChain, proposals: usize) -> BTreeMap<u64, f64> {
    let mut hist = BTreeMap::new();
    for _ in 0..proposals {
        ch.step().unwrap();
        *hist.entry(ch.config().bits().to_mask()).or_insert(0.0) += 1.0 / proposals as f64;
    }
    hist
}

fn tv(a: &BTreeMap<u64, f64>, b: &BTreeMap<u64, f64>) -> f64 {
    let keys: BTreeSet<u64> = a.keys().chain(b.keys()).copied().collect();
    let pa: Vec<f64> = keys.iter().map(|k| a.get(k).copied().unwrap_or(0.0)).collect();
    let pb: Vec<f64> = keys.iter().map(|k| b.get(k).copied().unwrap_or(0.0)).collect();
    total_variation(&pa, &pb)
}

#[test]
fn chain_matches_exact_conditional_in_unit_box() {
    let lat = LatticeBox::new(1).unwrap();
    let ev = EventSpec {
        n: 2,
        kind: EventKind::AreaOnly,
        allow_censored: true,
    };
    for (q, bc) in [
        (1.0, BoundaryCondition::Free),
        (2.0, BoundaryCondition::Free),
        (2.0, BoundaryCondition::Wired),
    ] {
        let params = FKParams::from_p(0.45, q, bc, 17).unwrap();
        let exact = exact_conditional(lat, &params, &ev, None);
        assert_eq!(exact.len(), 16);
        let mut ch = RestrictedChain::new(lat, params, ev, None, 0).unwrap();
        let emp = chain_law(&mut ch, 1_000_000);
        assert!(emp.keys().all(|k| exact.contains_key(k)));
        let d = tv(&emp, &exact);
        assert!(d < 0.03, "q={q} {bc:?}: tv {d}");
    }
}

#[test]
fn centred_chain_visits_exactly_the_event_set() {
    let lat = LatticeBox::new(1).unwrap();
    let shape = disk();
    let ev = EventSpec {
        n: 2,
        kind: EventKind::AreaAndCentred,
        allow_censored: true,
    };
    let params = FKParams::from_p(0.45, 2.0, BoundaryCondition::Free, 5).unwrap();
    let exact = exact_conditional(lat, &params, &ev, Some(&shape));
    let mut ch = RestrictedChain::new(lat, params, ev, Some(&shape), 0).unwrap();
    let emp = chain_law(&mut ch, 200_000);
    let a: Vec<u64> = emp.keys().copied().collect();
    let b: Vec<u64> = exact.keys().copied().collect();
    assert_eq!(a, b);
}

#[test]
fn chain_matches_rejection_sampling_for_independent_edges() {
    // q = 1: i.i.d. draws kept when the event holds are exact conditional samples
    let lat = LatticeBox::new(4).unwrap();
    let m = BondGraph::edge_count(&lat);
    let ev = EventSpec {
        n: 2,
        kind: EventKind::AreaOnly,
        allow_censored: false,
    };
    let params = FKParams::from_p(0.45, 1.0, BoundaryCondition::Free, 9).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut rej_density = vec![0.0; m];
    let mut rej_area = 0.0;
    let mut kept = 0usize;
    while kept < 8000 {
        let mut cfg = BondConfig::closed(lat);
        for e in 0..m {
            cfg.set(e, rng.gen_bool(0.45));
        }
        if let Some(c) = event_circuit(&cfg, &ev, None).unwrap() {
            kept += 1;
            rej_area += c.area() as f64;
            for e in cfg.open_edges() {
                rej_density[e] += 1.0;
            }
        }
    }
    let mut chain_density = vec![0.0; m];
    let mut chain_area = 0.0;
    let sweeps = 40_000;
    let mut samples = 0.0;
    for chain in 0..2 {
        let mut ch = RestrictedChain::new(lat, params, ev, None, chain).unwrap();
        for _ in 0..200 {
            ch.sweep().unwrap();
        }
        for _ in 0..sweeps / 2 {
            ch.sweep().unwrap();
            chain_area += ch.circuit().area() as f64;
            for e in ch.config().open_edges() {
                chain_density[e] += 1.0;
            }
            samples += 1.0;
        }
    }
    let (ra, ca) = (rej_area / kept as f64, chain_area / samples);
    assert!((ra - ca).abs() < 0.04 * ra, "mean area: rejection {ra}, chain {ca}");
    let ra: f64 = rej_density.iter().sum::<f64>() / kept as f64;
    let cd: f64 = chain_density.iter().sum::<f64>() / samples;
    assert!((ra - cd).abs() < 0.01 * ra, "open edges: rejection {ra}, chain {cd}");
    let worst = (0..m)
        .map(|e| (rej_density[e] / kept as f64 - chain_density[e] / samples).abs())
        .fold(0.0, f64::max);
    assert!(worst < 0.04, "largest edge-marginal gap {worst}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn chain_never_leaves_the_event(seed in any::<u64>(), q in prop::sample::select(vec![1.0, 2.0, 4.0]), centred in any::<bool>()) {
        let lat = LatticeBox::new(5).unwrap();
        let shape = disk();
        let ev = EventSpec {
            n: 3,
            kind: if centred { EventKind::AreaAndCentred } else { EventKind::AreaOnly },
            allow_censored: false,
        };
        let params = FKParams::from_p(0.5, q, BoundaryCondition::Wired, seed).unwrap();
        let mut ch = RestrictedChain::new(lat, params, ev, Some(&shape), seed % 3).unwrap();
        for _ in 0..15 {
            ch.sweep().unwrap();
            let c = event_circuit(ch.config(), &ev, Some(&shape)).unwrap();
            prop_assert_eq!(c.as_ref(), Some(ch.circuit()));
        }
    }
}
