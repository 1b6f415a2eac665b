//! Random cluster measure: parameters, single-edge heat-bath dynamics,
//! Chayes-Machta cluster updates, exact enumeration and connectivity
//! estimators.

use rand::Rng;

use crate::error::{bail, Error, Result};
use crate::lattice::{cluster_count, open_forest, BondConfig, BondGraph, BoundaryCondition, LatticeBox, Site};
use crate::rng::{chain_rng, ChainRng};
use crate::stats::{jackknife, jackknife_mean, linear_fit, LinearFit};

/// `p = 1 - exp(-2 beta)`.
pub fn p_from_beta(beta: f64) -> f64 {
    -(-2.0 * beta).exp_m1()
}

/// Critical inverse temperature `½ log(1 + √q)`.
pub fn critical_beta(q: f64) -> f64 {
    0.5 * (1.0 + q.sqrt()).ln()
}

/// Parameters of the random cluster measure. `beta` is the only stored
/// coupling; `p` is always recomputed from it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FKParams {
    beta: f64,
    q: f64,
    p: f64,
    bc: BoundaryCondition,
    seed: u64,
}

impl FKParams {
    pub fn new(beta: f64, q: f64, bc: BoundaryCondition, seed: u64) -> Result<Self> {
        if !(beta >= 0.0) || beta.is_nan() {
            bail!(InvalidParameter, "beta must be >= 0, got {beta}");
        }
        if !(q >= 1.0) || !q.is_finite() {
            bail!(UnsupportedParameter, "q must be a finite real >= 1, got {q}");
        }
        Ok(FKParams {
            beta,
            q,
            p: p_from_beta(beta),
            bc,
            seed,
        })
    }

    /// Parameters specified through the edge probability instead of `beta`.
    pub fn from_p(p: f64, q: f64, bc: BoundaryCondition, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            bail!(InvalidParameter, "p must lie in [0, 1], got {p}");
        }
        let beta = if p == 1.0 { f64::INFINITY } else { -0.5 * (-p).ln_1p() };
        let mut params = FKParams::new(beta, q, bc, seed)?;
        // keep the requested p bit-exact; it agrees with p_from_beta(beta) to rounding
        params.p = p;
        Ok(params)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn bc(&self) -> BoundaryCondition {
        self.bc
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_bc(mut self, bc: BoundaryCondition) -> Self {
        self.bc = bc;
        self
    }

    pub fn is_subcritical(&self) -> bool {
        self.beta < critical_beta(self.q)
    }

    /// Human-readable warning for runs at or above the critical point.
    pub fn criticality_warning(&self) -> Option<String> {
        (!self.is_subcritical()).then(|| {
            format!(
                "beta = {} is not below the critical value {:.6} for q = {}; estimates may not decay",
                self.beta,
                critical_beta(self.q),
                self.q
            )
        })
    }

    /// Unnormalised log-weight of a configuration.
    pub fn log_weight<G: BondGraph>(&self, cfg: &BondConfig<G>) -> f64 {
        let open = cfg.open_count();
        let closed = cfg.graph().edge_count() - open;
        let k = cluster_count(cfg, self.bc);
        xlogy(open, self.p) + xlogy(closed, 1.0 - self.p) + xlogy(k, self.q)
    }
}

fn xlogy(n: usize, x: f64) -> f64 {
    if n == 0 {
        0.0
    } else {
        n as f64 * x.ln()
    }
}

/// Extreme single-edge conditional open probabilities `(p/(p+(1-p)q), p)`.
pub fn bounded_energy_bounds(params: &FKParams) -> (f64, f64) {
    let p = params.p();
    let q = params.q();
    (p / (p + (1.0 - p) * q), p)
}

#[derive(Debug, Clone, Copy)]
struct Explored {
    reached_target: bool,
    tainted: bool,
}

/// Scratch space for single-edge heat-bath updates.
///
/// Off-edge connectivity is decided by a local search from the edge's
/// endpoints rather than a global union-find rebuild; subcritical clusters
/// are small, so this is much cheaper and gives the same answer.
#[derive(Debug, Clone)]
pub struct HeatBath {
    stamp: Vec<u32>,
    generation: u32,
    stack: Vec<usize>,
}

impl HeatBath {
    pub fn new<G: BondGraph>(graph: &G) -> Self {
        HeatBath {
            stamp: vec![0; graph.vertex_count()],
            generation: 0,
            stack: Vec::new(),
        }
    }

    fn next_generation(&mut self) -> u32 {
        self.generation = self.generation.wrapping_add(1);
        if self.generation == 0 {
            self.stamp.fill(0);
            self.generation = 1;
        }
        self.generation
    }

    /// Explores the open component of `start` with `skip` treated as closed.
    fn explore<G: BondGraph>(
        &mut self,
        cfg: &BondConfig<G>,
        start: usize,
        skip: usize,
        target: usize,
        track_taint: bool,
        stop_at_target: bool,
    ) -> Explored {
        let g = cfg.graph();
        let gen = self.next_generation();
        let mut out = Explored {
            reached_target: start == target,
            tainted: false,
        };
        if out.reached_target && stop_at_target {
            return out;
        }
        self.stack.clear();
        self.stack.push(start);
        self.stamp[start] = gen;
        while let Some(v) = self.stack.pop() {
            let v_boundary = track_taint && g.is_boundary(v);
            let mut found = false;
            let stamp = &mut self.stamp;
            let stack = &mut self.stack;
            g.for_each_incident(v, |e, w| {
                if e == skip || !cfg.is_open(e) {
                    return;
                }
                if track_taint && (v_boundary || g.is_boundary(w)) {
                    out.tainted = true;
                }
                if stamp[w] != gen {
                    stamp[w] = gen;
                    if w == target {
                        found = true;
                    }
                    stack.push(w);
                }
            });
            if found {
                out.reached_target = true;
                if stop_at_target {
                    return out;
                }
            }
        }
        out
    }

    /// `k(edge open) - k(edge closed)` with every other edge as in `cfg`.
    pub fn cluster_delta<G: BondGraph>(&mut self, cfg: &BondConfig<G>, edge: usize, bc: BoundaryCondition) -> i32 {
        let g = cfg.graph();
        let (a, b) = g.endpoints(edge);
        let wired = bc == BoundaryCondition::Wired;
        let ea = self.explore(cfg, a, edge, b, wired, !wired);
        if ea.reached_target {
            let clean = !ea.tainted;
            let clean_open = clean && !(wired && g.touches_boundary(edge));
            return clean_open as i32 - clean as i32;
        }
        if !wired {
            return -1;
        }
        let eb = self.explore(cfg, b, edge, usize::MAX, true, false);
        let (ca, cb) = (!ea.tainted, !eb.tainted);
        let merged = ca && cb && !g.touches_boundary(edge);
        merged as i32 - ca as i32 - cb as i32
    }

    /// Whether the endpoints of `edge` are joined by an open path avoiding `edge`.
    pub fn connected_off<G: BondGraph>(&mut self, cfg: &BondConfig<G>, edge: usize) -> bool {
        let (a, b) = cfg.graph().endpoints(edge);
        self.explore(cfg, a, edge, b, false, true).reached_target
    }

    /// Conditional probability that `edge` is open given all other edges.
    pub fn open_probability<G: BondGraph>(&mut self, cfg: &BondConfig<G>, params: &FKParams, edge: usize) -> f64 {
        let p = params.p();
        if params.q() == 1.0 || p == 0.0 || p == 1.0 {
            return p;
        }
        let delta = self.cluster_delta(cfg, edge, params.bc());
        let w = p * params.q().powi(delta);
        w / (w + (1.0 - p))
    }

    /// Resamples `edge` from its conditional law using the uniform `u`; returns the new state.
    pub fn step<G: BondGraph>(&mut self, cfg: &mut BondConfig<G>, params: &FKParams, edge: usize, u: f64) -> bool {
        let open = u < self.open_probability(cfg, params, edge);
        cfg.set(edge, open);
        open
    }

    /// One systematic sweep over all edges in id order.
    pub fn sweep<G: BondGraph, R: Rng>(&mut self, cfg: &mut BondConfig<G>, params: &FKParams, rng: &mut R) {
        for e in 0..cfg.graph().edge_count() {
            let u: f64 = rng.gen();
            self.step(cfg, params, e, u);
        }
    }
}

/// Single heat-bath update of `edge` with uniform `u`; returns the new state of the edge.
pub fn heat_bath_step<G: BondGraph>(cfg: &mut BondConfig<G>, params: &FKParams, edge: usize, u: f64) -> Result<bool> {
    if edge >= cfg.graph().edge_count() {
        bail!(InvalidParameter, "edge {edge} outside the graph");
    }
    let mut hb = HeatBath::new(cfg.graph());
    Ok(hb.step(cfg, params, edge, u))
}

/// Scratch space for Chayes-Machta cluster updates.
///
/// Each counted cluster is activated with probability `1/q`; clusters that
/// the wired rule does not count carry weight 1 and are always active. Edges
/// between active vertices are then redrawn as independent Bernoulli(p).
/// For integer `q` this is equivalent in law to a Swendsen-Wang step.
#[derive(Debug, Clone, Default)]
pub struct ClusterSweep {
    root: Vec<usize>,
    tainted: Vec<bool>,
    active: Vec<bool>,
}

impl ClusterSweep {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn sweep<G: BondGraph, R: Rng>(&mut self, cfg: &mut BondConfig<G>, params: &FKParams, rng: &mut R) {
        let g = cfg.graph().clone();
        let n = g.vertex_count();
        let p = params.p();
        let inv_q = 1.0 / params.q();
        let mut uf = open_forest(cfg);
        self.root.clear();
        self.root.extend((0..n).map(|v| uf.find(v)));
        self.tainted.clear();
        self.tainted.resize(n, false);
        if params.bc() == BoundaryCondition::Wired {
            for e in cfg.open_edges() {
                if g.touches_boundary(e) {
                    let r = self.root[g.endpoints(e).0];
                    self.tainted[r] = true;
                }
            }
        }
        self.active.clear();
        self.active.resize(n, false);
        for v in 0..n {
            if self.root[v] == v {
                self.active[v] = self.tainted[v] || inv_q >= 1.0 || rng.gen::<f64>() < inv_q;
            }
        }
        for e in 0..g.edge_count() {
            let (a, b) = g.endpoints(e);
            if self.active[self.root[a]] && self.active[self.root[b]] {
                cfg.set(e, rng.gen::<f64>() < p);
            }
        }
    }
}

/// One global cluster update of `cfg`.
pub fn cluster_sweep<G: BondGraph, R: Rng>(cfg: &mut BondConfig<G>, params: &FKParams, rng: &mut R) -> Result<()> {
    if params.q() < 1.0 {
        bail!(UnsupportedParameter, "cluster updates need q >= 1, got {}", params.q());
    }
    ClusterSweep::new().sweep(cfg, params, rng);
    Ok(())
}

/// Which update a [`FkChain`] applies per sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    HeatBath,
    Cluster,
}

/// A Markov chain on bond configurations with its own random stream.
#[derive(Debug, Clone)]
pub struct FkChain<G: BondGraph = LatticeBox> {
    cfg: BondConfig<G>,
    params: FKParams,
    rng: ChainRng,
    heat_bath: HeatBath,
    cluster: ClusterSweep,
}

impl<G: BondGraph> FkChain<G> {
    /// Chain started from the all-closed configuration, drawing from stream `chain` of the seed.
    pub fn new(graph: G, params: FKParams, chain: u64) -> Self {
        let heat_bath = HeatBath::new(&graph);
        FkChain {
            cfg: BondConfig::closed(graph),
            params,
            rng: chain_rng(params.seed(), chain),
            heat_bath,
            cluster: ClusterSweep::new(),
        }
    }

    pub fn config(&self) -> &BondConfig<G> {
        &self.cfg
    }

    pub fn params(&self) -> &FKParams {
        &self.params
    }

    pub fn sweep(&mut self, kind: SweepKind) {
        match kind {
            SweepKind::HeatBath => self.heat_bath.sweep(&mut self.cfg, &self.params, &mut self.rng),
            SweepKind::Cluster => self.cluster.sweep(&mut self.cfg, &self.params, &mut self.rng),
        }
    }

    pub fn run(&mut self, kind: SweepKind, sweeps: usize) {
        for _ in 0..sweeps {
            self.sweep(kind);
        }
    }
}

/// Exact law of the measure on a small graph, indexed by edge bitmask
/// (bit `e` of the index is the state of edge `e`).
#[derive(Debug, Clone)]
pub struct ExactTable<G: BondGraph = LatticeBox> {
    graph: G,
    probs: Vec<f64>,
}

/// Largest edge count accepted by [`exact_enumerate`].
pub const MAX_ENUMERATED_EDGES: usize = 24;

pub fn exact_enumerate<G: BondGraph>(graph: &G, params: &FKParams) -> Result<ExactTable<G>> {
    let m = graph.edge_count();
    if m > MAX_ENUMERATED_EDGES {
        bail!(
            TooLarge,
            "{m} edges exceed the enumeration limit of {MAX_ENUMERATED_EDGES}"
        );
    }
    let mut logw = Vec::with_capacity(1 << m);
    for mask in 0..(1u64 << m) {
        let cfg = BondConfig::from_mask(graph.clone(), mask);
        logw.push(params.log_weight(&cfg));
    }
    let top = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut probs: Vec<f64> = logw.iter().map(|l| (l - top).exp()).collect();
    let z: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|x| *x /= z);
    Ok(ExactTable {
        graph: graph.clone(),
        probs,
    })
}

impl<G: BondGraph> ExactTable<G> {
    pub fn graph(&self) -> &G {
        &self.graph
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, mask: u64) -> f64 {
        self.probs[mask as usize]
    }

    pub fn config(&self, mask: u64) -> BondConfig<G> {
        BondConfig::from_mask(self.graph.clone(), mask)
    }

    pub fn expectation(&self, mut f: impl FnMut(&BondConfig<G>) -> f64) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(mask, &p)| p * f(&self.config(mask as u64)))
            .sum()
    }

    /// Probability of an event, given as a predicate on configurations.
    pub fn probability(&self, mut event: impl FnMut(&BondConfig<G>) -> bool) -> f64 {
        self.expectation(|c| if event(c) { 1.0 } else { 0.0 })
    }

    /// `P(edge e open)` for every edge.
    pub fn edge_marginals(&self) -> Vec<f64> {
        let m = self.graph.edge_count();
        let mut out = vec![0.0; m];
        for (mask, &p) in self.probs.iter().enumerate() {
            for (e, o) in out.iter_mut().enumerate() {
                if mask >> e & 1 == 1 {
                    *o += p;
                }
            }
        }
        out
    }
}

/// Burn-in and measurement lengths of a Monte Carlo run, in sweeps per chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunLength {
    pub burnin: usize,
    pub sweeps: usize,
    pub chains: usize,
}

impl RunLength {
    pub fn new(burnin: usize, sweeps: usize, chains: usize) -> Result<Self> {
        if sweeps == 0 || chains == 0 {
            bail!(InvalidParameter, "sweeps and chains must be positive");
        }
        Ok(RunLength { burnin, sweeps, chains })
    }
}

/// Runs `chains` independent cluster-update chains (in parallel) and calls
/// `measure` on every post-burn-in configuration. Per-chain results are
/// returned in chain order, so the output does not depend on scheduling.
pub fn run_chains<G, T, F>(graph: &G, params: &FKParams, run: RunLength, measure: F) -> Vec<Vec<T>>
where
    G: BondGraph + Send + Sync,
    T: Send,
    F: Fn(&BondConfig<G>) -> T + Sync,
{
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..run.chains)
            .map(|c| {
                let measure = &measure;
                s.spawn(move || {
                    let mut chain = FkChain::new(graph.clone(), *params, c as u64);
                    chain.run(SweepKind::Cluster, run.burnin);
                    (0..run.sweeps)
                        .map(|_| {
                            chain.sweep(SweepKind::Cluster);
                            measure(chain.config())
                        })
                        .collect::<Vec<T>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sampling thread panicked"))
            .collect()
    })
}

/// Number of jackknife blocks used for Monte Carlo error bars.
const JACKKNIFE_BLOCKS: usize = 20;

/// Default width of the layer next to the box boundary kept free of
/// observation points, standing in for an infinite-volume limit.
pub fn default_buffer(half_width: i32) -> i32 {
    half_width / 4
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConnectivityEstimate {
    pub x: usize,
    pub y: usize,
    pub estimate: f64,
    pub stderr: f64,
    pub n: usize,
}

/// Monte Carlo estimates of `P(x <-> y)` for vertex pairs of any graph.
pub fn two_point_connectivity_on<G>(
    graph: &G,
    params: &FKParams,
    pairs: &[(usize, usize)],
    run: RunLength,
) -> Result<Vec<ConnectivityEstimate>>
where
    G: BondGraph + Send + Sync,
{
    let nv = graph.vertex_count();
    if let Some(&(x, y)) = pairs.iter().find(|(x, y)| *x >= nv || *y >= nv) {
        bail!(InvalidParameter, "pair ({x}, {y}) outside the graph");
    }
    let series = run_chains(graph, params, run, |cfg| {
        let mut uf = open_forest(cfg);
        pairs
            .iter()
            .map(|&(x, y)| uf.find(x) == uf.find(y))
            .collect::<Vec<bool>>()
    });
    let series: Vec<Vec<bool>> = series.into_iter().flatten().collect();
    let blocks = JACKKNIFE_BLOCKS * run.chains;
    Ok(pairs
        .iter()
        .enumerate()
        .map(|(i, &(x, y))| {
            let xs: Vec<f64> = series.iter().map(|s| s[i] as u8 as f64).collect();
            let (estimate, stderr) = jackknife_mean(&xs, blocks);
            ConnectivityEstimate {
                x,
                y,
                estimate,
                stderr,
                n: xs.len(),
            }
        })
        .collect())
}

/// Site-pair version of [`two_point_connectivity_on`] for boxes.
pub fn two_point_connectivity(
    params: &FKParams,
    lattice: LatticeBox,
    pairs: &[(Site, Site)],
    run: RunLength,
) -> Result<Vec<ConnectivityEstimate>> {
    let ids = pairs
        .iter()
        .map(|&(x, y)| match (lattice.vertex_id(x), lattice.vertex_id(y)) {
            (Some(a), Some(b)) => Ok((a, b)),
            _ => Err(Error::InvalidParameter(format!("pair {x}-{y} outside the box"))),
        })
        .collect::<Result<Vec<_>>>()?;
    two_point_connectivity_on(&lattice, params, &ids, run)
}

/// Warnings for pairs that sit within two sites of the box boundary.
pub fn boundary_proximity_warnings(lattice: LatticeBox, pairs: &[(Site, Site)]) -> Vec<String> {
    let limit = lattice.half_width() - 2;
    pairs
        .iter()
        .filter(|(x, y)| x.linf() > limit || y.linf() > limit)
        .map(|(x, y)| format!("pair {x}-{y} is within 2 sites of the box boundary"))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayPoint {
    pub radius: i32,
    pub estimate: f64,
    pub log_estimate: f64,
    pub log_stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixingPoint {
    pub distance: i32,
    /// `|P(D∩F) / (P(D) P(F)) - 1|` for the events that two edges at this distance are open.
    pub ratio_deviation: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    pub points: Vec<DecayPoint>,
    /// Fit of `log P(0 <-> boundary of the radius-R box)` against `R`.
    pub fit: LinearFit,
    pub mixing: Vec<MixingPoint>,
}

/// Arm-event decay and single-edge decorrelation diagnostics.
pub fn decay_and_mixing_check(
    params: &FKParams,
    lattice: LatticeBox,
    radii: &[i32],
    run: RunLength,
) -> Result<DecayReport> {
    if radii.len() < 2 {
        bail!(
            InsufficientData,
            "a decay fit needs at least 2 radii, got {}",
            radii.len()
        );
    }
    let n = lattice.half_width();
    if let Some(r) = radii.iter().find(|&&r| r < 1 || r > n) {
        bail!(InvalidParameter, "radius {r} outside 1..={n}");
    }
    let origin = lattice.vertex_id(Site::ORIGIN).unwrap();
    let base = lattice.edge_between(Site::new(0, 0), Site::new(1, 0)).unwrap();
    let distances: Vec<i32> = radii.iter().copied().filter(|&d| d + 1 <= n).collect();
    let far: Vec<usize> = distances
        .iter()
        .map(|&d| lattice.edge_between(Site::new(d, 0), Site::new(d + 1, 0)).unwrap())
        .collect();
    let series = run_chains(&lattice, params, run, |cfg| {
        let comp = crate::lattice::open_component(cfg, origin, None).unwrap();
        let reach = comp.vertices.iter().map(|&v| lattice.site(v).linf()).max().unwrap_or(0);
        let d = cfg.is_open(base);
        let f: Vec<bool> = far.iter().map(|&e| cfg.is_open(e)).collect();
        (reach, d, f)
    });
    let series: Vec<(i32, bool, Vec<bool>)> = series.into_iter().flatten().collect();
    let blocks = JACKKNIFE_BLOCKS * run.chains;

    let mut points = Vec::new();
    for &r in radii {
        let xs: Vec<f64> = series.iter().map(|s| (s.0 >= r) as u8 as f64).collect();
        let (est, se) = jackknife_mean(&xs, blocks);
        if est > 0.0 {
            points.push(DecayPoint {
                radius: r,
                estimate: est,
                log_estimate: est.ln(),
                log_stderr: se / est,
            });
        }
    }
    if points.len() < 2 {
        bail!(InsufficientData, "fewer than two radii have a positive arm estimate");
    }
    let xs: Vec<f64> = points.iter().map(|p| p.radius as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.log_estimate).collect();
    let fit = linear_fit(&xs, &ys)?;

    let mixing = distances
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let pairs: Vec<(bool, bool)> = series.iter().map(|s| (s.1, s.2[i])).collect();
            let (dev, se) = jackknife(&pairs, blocks, |v| {
                let n = v.len() as f64;
                let pd = v.iter().filter(|p| p.0).count() as f64 / n;
                let pf = v.iter().filter(|p| p.1).count() as f64 / n;
                let pdf = v.iter().filter(|p| p.0 && p.1).count() as f64 / n;
                (pdf / (pd * pf) - 1.0).abs()
            });
            MixingPoint {
                distance: d,
                ratio_deviation: dev,
                stderr: se,
            }
        })
        .collect();
    Ok(DecayReport { points, fit, mixing })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::EdgeListGraph;

    fn params(p: f64, q: f64, bc: BoundaryCondition) -> FKParams {
        FKParams::from_p(p, q, bc, 1).unwrap()
    }

    #[test]
    fn p_is_derived_from_beta() {
        let fk = FKParams::new(0.3, 2.0, BoundaryCondition::Free, 0).unwrap();
        assert!((fk.p() - (1.0 - (-0.6f64).exp())).abs() < 1e-15);
        let fk = params(0.4, 2.0, BoundaryCondition::Free);
        assert!((p_from_beta(fk.beta()) - 0.4).abs() < 1e-15);
        assert!(FKParams::new(0.3, 0.5, BoundaryCondition::Free, 0).is_err());
        assert!((critical_beta(1.0) - 0.5 * 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn heat_bath_probabilities() {
        let g = EdgeListGraph::single_edge();
        let fk = params(0.5, 2.0, BoundaryCondition::Free);
        let cfg = BondConfig::closed(g.clone());
        let mut hb = HeatBath::new(&g);
        assert!((hb.open_probability(&cfg, &fk, 0) - 1.0 / 3.0).abs() < 1e-15);
        let fk1 = params(0.37, 1.0, BoundaryCondition::Free);
        assert_eq!(hb.open_probability(&cfg, &fk1, 0), 0.37);

        // triangle: endpoints connected through the other two edges
        let tri = EdgeListGraph::new(3, vec![(0, 1), (1, 2), (0, 2)], vec![]).unwrap();
        let cfg = BondConfig::from_mask(tri.clone(), 0b110);
        let mut hb = HeatBath::new(&tri);
        assert!((hb.open_probability(&cfg, &params(0.5, 2.0, BoundaryCondition::Free), 0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn heat_bath_step_sets_edge() {
        let g = EdgeListGraph::single_edge();
        let fk = params(0.5, 2.0, BoundaryCondition::Free);
        let mut cfg = BondConfig::closed(g);
        assert!(heat_bath_step(&mut cfg, &fk, 0, 0.2).unwrap());
        assert!(cfg.is_open(0));
        assert!(!heat_bath_step(&mut cfg, &fk, 0, 0.5).unwrap());
        assert!(heat_bath_step(&mut cfg, &fk, 1, 0.5).is_err());
    }

    #[test]
    fn bounded_energy_examples() {
        let (lo, hi) = bounded_energy_bounds(&params(0.5, 2.0, BoundaryCondition::Free));
        assert!((lo - 1.0 / 3.0).abs() < 1e-15 && hi == 0.5);
        assert_eq!(
            bounded_energy_bounds(&params(0.3, 1.0, BoundaryCondition::Free)),
            (0.3, 0.3)
        );
        assert_eq!(
            bounded_energy_bounds(&params(0.0, 3.0, BoundaryCondition::Free)),
            (0.0, 0.0)
        );
    }

    #[test]
    fn exact_table_examples() {
        let g = EdgeListGraph::single_edge();
        let t = exact_enumerate(&g, &params(0.5, 2.0, BoundaryCondition::Free)).unwrap();
        assert!((t.prob(1) - 1.0 / 3.0).abs() < 1e-15);

        let lb = LatticeBox::new(1).unwrap();
        let t = exact_enumerate(&lb, &params(0.5, 1.0, BoundaryCondition::Free)).unwrap();
        assert!((t.prob(0xfff) - 0.5f64.powi(12)).abs() < 1e-18);
        assert!((t.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);

        let fk = params(0.3, 1.0, BoundaryCondition::Wired);
        let t = exact_enumerate(&lb, &fk).unwrap();
        for mask in [0u64, 5, 1234, 4095] {
            let o = mask.count_ones() as i32;
            assert!((t.prob(mask) - 0.3f64.powi(o) * 0.7f64.powi(12 - o)).abs() < 1e-15);
        }
        assert!(matches!(
            exact_enumerate(&LatticeBox::new(2).unwrap(), &fk),
            Err(Error::TooLarge(_))
        ));
    }

    #[test]
    fn cluster_sweep_q1_is_bernoulli() {
        let lb = LatticeBox::new(3).unwrap();
        let fk = params(0.3, 1.0, BoundaryCondition::Free);
        let mut chain = FkChain::new(lb, fk, 0);
        let mut open = 0usize;
        for _ in 0..2000 {
            chain.sweep(SweepKind::Cluster);
            open += chain.config().open_count();
        }
        let freq = open as f64 / (2000.0 * lb.edge_count() as f64);
        assert!((freq - 0.3).abs() < 0.005, "{freq}");
    }

    #[test]
    fn cluster_sweep_single_edge_stationary() {
        let g = EdgeListGraph::single_edge();
        let fk = params(0.5, 2.0, BoundaryCondition::Free);
        let mut chain = FkChain::new(g, fk, 3);
        let n = 200_000;
        let mut open = 0;
        for _ in 0..n {
            chain.sweep(SweepKind::Cluster);
            open += chain.config().open_count();
        }
        let f = open as f64 / n as f64;
        let sigma = (1.0 / 3.0 * 2.0 / 3.0 / n as f64).sqrt();
        // successive sweeps are correlated; allow a generous multiple
        assert!((f - 1.0 / 3.0).abs() < 6.0 * sigma, "{f}");
    }

    #[test]
    fn decay_fit_refuses_single_radius() {
        let lb = LatticeBox::new(4).unwrap();
        let fk = params(0.25, 1.0, BoundaryCondition::Free);
        let run = RunLength::new(10, 100, 1).unwrap();
        assert!(decay_and_mixing_check(&fk, lb, &[2], run).is_err());
    }
}
