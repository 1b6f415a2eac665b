use rcm_core::lattice::{BondGraph, BoundaryCondition, EdgeListGraph, LatticeBox, Site};
use rcm_core::sampler::{
    exact_enumerate, two_point_connectivity, ExactTable, FKParams, FkChain, HeatBath, RunLength, SweepKind,
};

const PARAM_SETS: [(f64, f64); 5] = [(0.3, 1.0), (0.5, 1.5), (0.5, 2.0), (0.6, 4.0), (0.4, 2.0)];
const BCS: [BoundaryCondition; 2] = [BoundaryCondition::Free, BoundaryCondition::Wired];

/// Conditional law of one edge read off the enumerated table.
fn table_conditional<G: BondGraph>(t: &ExactTable<G>, mask: u64, e: usize) -> f64 {
    let on = t.prob(mask | 1 << e);
    let off = t.prob(mask & !(1 << e));
    on / (on + off)
}

#[test]
fn heat_bath_conditional_matches_enumeration() {
    let lb = LatticeBox::new(1).unwrap();
    for &(p, q) in &PARAM_SETS {
        for bc in BCS {
            let fk = FKParams::from_p(p, q, bc, 0).unwrap();
            let t = exact_enumerate(&lb, &fk).unwrap();
            let mut hb = HeatBath::new(&lb);
            for mask in 0..1u64 << 12 {
                let cfg = t.config(mask);
                for e in 0..12 {
                    let got = hb.open_probability(&cfg, &fk, e);
                    let want = table_conditional(&t, mask, e);
                    assert!(
                        (got - want).abs() <= 1e-12 * want.max(1e-300),
                        "p={p} q={q} {bc:?} mask={mask} e={e}: {got} vs {want}"
                    );
                }
            }
        }
    }
}

#[test]
fn heat_bath_conditional_on_toy_graph_with_boundary() {
    // path 0-1-2-3 with vertex 0 marked as boundary
    let g = EdgeListGraph::new(4, vec![(0, 1), (1, 2), (2, 3), (3, 1)], vec![0]).unwrap();
    for bc in BCS {
        let fk = FKParams::from_p(0.45, 3.0, bc, 0).unwrap();
        let t = exact_enumerate(&g, &fk).unwrap();
        let mut hb = HeatBath::new(&g);
        for mask in 0..16u64 {
            let cfg = t.config(mask);
            for e in 0..4 {
                let got = hb.open_probability(&cfg, &fk, e);
                assert!((got - table_conditional(&t, mask, e)).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn chains_agree_on_edge_marginals() {
    let lb = LatticeBox::new(1).unwrap();
    let fk = FKParams::from_p(0.5, 2.0, BoundaryCondition::Wired, 11).unwrap();
    let exact = exact_enumerate(&lb, &fk).unwrap().edge_marginals();
    for kind in [SweepKind::HeatBath, SweepKind::Cluster] {
        let mut chain = FkChain::new(lb, fk, 0);
        chain.run(kind, 100);
        let n = 100_000;
        let mut counts = [0usize; 12];
        for _ in 0..n {
            chain.sweep(kind);
            for e in chain.config().open_edges() {
                counts[e] += 1;
            }
        }
        for e in 0..12 {
            let f = counts[e] as f64 / n as f64;
            let sigma = (exact[e] * (1.0 - exact[e]) / n as f64).sqrt();
            assert!(
                (f - exact[e]).abs() < 5.0 * sigma,
                "{kind:?} edge {e}: {f} vs {}",
                exact[e]
            );
        }
    }
}

#[test]
fn connectivity_matches_enumeration() {
    let lb = LatticeBox::new(1).unwrap();
    let fk = FKParams::from_p(0.4, 2.0, BoundaryCondition::Free, 5).unwrap();
    let t = exact_enumerate(&lb, &fk).unwrap();
    let (a, b) = (Site::new(0, 0), Site::new(1, 0));
    let (ia, ib) = (lb.vertex_id(a).unwrap(), lb.vertex_id(b).unwrap());
    let exact = t.probability(|c| {
        rcm_core::lattice::open_component(c, ia, None)
            .unwrap()
            .contains_vertex(ib)
    });
    let est = two_point_connectivity(&fk, lb, &[(a, b)], RunLength::new(100, 50_000, 2).unwrap()).unwrap();
    assert!(
        (est[0].estimate - exact).abs() < 3.0 * est[0].stderr,
        "{:?} vs {exact}",
        est[0]
    );
}

#[test]
fn same_seed_same_stream() {
    let lb = LatticeBox::new(3).unwrap();
    let fk = FKParams::from_p(0.5, 2.0, BoundaryCondition::Free, 99).unwrap();
    let mut a = FkChain::new(lb, fk, 2);
    let mut b = FkChain::new(lb, fk, 2);
    for _ in 0..50 {
        a.sweep(SweepKind::HeatBath);
        b.sweep(SweepKind::HeatBath);
        assert_eq!(a.config(), b.config());
    }
}
