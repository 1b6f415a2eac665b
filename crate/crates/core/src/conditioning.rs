//! Heat-bath dynamics restricted to configurations whose outermost circuit
//! is large, and tail estimates of the circuit statistics under it.

use std::collections::{HashMap, HashSet};
use std::f64::consts::TAU;
use std::str::FromStr;

use rand::Rng;

use crate::circuits::{outermost_circuit, Circuit, Outermost};
use crate::error::{bail, Error, Result};
use crate::geometry::{angle_between, Vec2};
use crate::lattice::{BondConfig, BondGraph, LatticeBox, Site};
use crate::regeneration::{
    connection_regeneration, default_ball_radius, pair_predicates, pertinent_pair, rg_set, search, PatternChoice,
    RegenMode, Segment,
};
use crate::rng::{chain_rng, ChainRng};
use crate::sampler::{ClusterSweep, FKParams, HeatBath};
use crate::stats::{effective_sample_size, gelman_rubin, quantile, weighted_linear_fit, wilson_interval, LinearFit};
use crate::wulff::{global_distortion, ShapeConstants, WulffShape};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    /// Outermost circuit with at least `n²` enclosed faces.
    AreaOnly,
    /// As above, and the best-fitting Wulff translate is the origin.
    AreaAndCentred,
}

impl EventKind {
    pub fn name(self) -> &'static str {
        match self {
            EventKind::AreaOnly => "area_only",
            EventKind::AreaAndCentred => "area_and_centred",
        }
    }
}

impl FromStr for EventKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "area_only" => Ok(EventKind::AreaOnly),
            "area_and_centred" => Ok(EventKind::AreaAndCentred),
            _ => Err(Error::Parse(format!(
                "unknown event kind {s:?} (area_only | area_and_centred)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventSpec {
    pub n: i64,
    pub kind: EventKind,
    /// Accept an outermost circuit that reaches the box boundary. Only
    /// meaningful for boxes too small to hold the circuit strictly inside.
    pub allow_censored: bool,
}

/// The outermost circuit when the event holds, `None` otherwise.
pub fn event_circuit(cfg: &BondConfig, event: &EventSpec, shape: Option<&WulffShape>) -> Result<Option<Circuit>> {
    let c = match outermost_circuit(cfg) {
        Outermost::Found(c) => c,
        Outermost::Censored(c) if event.allow_censored => c,
        _ => return Ok(None),
    };
    if c.area() < event.n * event.n {
        return Ok(None);
    }
    if event.kind == EventKind::AreaAndCentred {
        let shape = shape.ok_or_else(|| Error::InvalidParameter("the centred event needs a Wulff shape".into()))?;
        if global_distortion(&c, shape, event.n)?.cen != Site::ORIGIN {
            return Ok(None);
        }
    }
    Ok(Some(c))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ChainCounters {
    pub proposals: u64,
    /// Proposals that changed an edge and were kept.
    pub flips: u64,
    /// Proposals undone because the event failed.
    pub rejected: u64,
    /// Proposals that needed a fresh outermost-circuit computation.
    pub recomputed: u64,
}

impl ChainCounters {
    fn add(&mut self, o: &ChainCounters) {
        self.proposals += o.proposals;
        self.flips += o.flips;
        self.rejected += o.rejected;
        self.recomputed += o.recomputed;
    }
}

/// Random-scan heat-bath restricted to the event: a proposal that would
/// leave the event is undone.
///
/// The set of faces joined to the outer face is kept up to date, so a
/// proposal only touches the region it can change: the faces cut off by
/// closing a circuit edge, or the region enclosed by opening an edge whose
/// endpoints are already connected.
#[derive(Debug, Clone)]
pub struct RestrictedChain {
    cfg: BondConfig,
    params: FKParams,
    event: EventSpec,
    shape: Option<WulffShape>,
    hb: HeatBath,
    rng: ChainRng,
    circuit: Circuit,
    /// Unit faces joined to the outer face across closed edges, row-major
    /// from the lower-left face.
    reached: Vec<bool>,
    /// Unit faces inside the circuit.
    inside: Vec<bool>,
    counters: ChainCounters,
}

/// Attempts at drawing an initial state before giving up.
const INIT_ATTEMPTS: usize = 100;

impl RestrictedChain {
    /// Starts from an unconditioned cluster-dynamics sample with an opened
    /// square circuit of area at least `n²`; odd chains use a square one
    /// step larger when it fits.
    pub fn new(
        lattice: LatticeBox,
        params: FKParams,
        event: EventSpec,
        shape: Option<&WulffShape>,
        chain: u64,
    ) -> Result<Self> {
        if event.n < 1 {
            bail!(InvalidParameter, "n must be at least 1, got {}", event.n);
        }
        if event.kind == EventKind::AreaAndCentred && shape.is_none() {
            bail!(InvalidParameter, "the centred event needs a Wulff shape");
        }
        let limit = lattice.half_width() - if event.allow_censored { 0 } else { 1 };
        let h0 = ((event.n + 1) / 2) as i32;
        if h0 > limit {
            bail!(
                Precondition,
                "box of half-width {} cannot hold a circuit of area {}",
                lattice.half_width(),
                event.n * event.n
            );
        }
        let h = if chain % 2 == 1 && h0 < limit { h0 + 1 } else { h0 };
        let square = Circuit::square(h).edge_set(&lattice)?;
        let mut rng = chain_rng(params.seed(), chain);
        let mut cs = ClusterSweep::new();
        for _ in 0..INIT_ATTEMPTS {
            let mut cfg = BondConfig::closed(lattice);
            for _ in 0..20 {
                cs.sweep(&mut cfg, &params, &mut rng);
            }
            for e in square.iter() {
                cfg.set(e, true);
            }
            if let Some(c) = event_circuit(&cfg, &event, shape)? {
                let (reached, inside) = face_masks(&cfg);
                return Ok(RestrictedChain {
                    reached,
                    inside,
                    hb: HeatBath::new(&lattice),
                    cfg,
                    params,
                    event,
                    shape: shape.cloned(),
                    rng,
                    circuit: c,
                    counters: ChainCounters::default(),
                });
            }
        }
        bail!(
            Internal,
            "no initial state satisfied the event in {INIT_ATTEMPTS} attempts"
        )
    }

    pub fn config(&self) -> &BondConfig {
        &self.cfg
    }

    /// Outermost circuit of the current state.
    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub fn counters(&self) -> ChainCounters {
        self.counters
    }

    pub fn event(&self) -> &EventSpec {
        &self.event
    }

    pub fn step(&mut self) -> Result<()> {
        let m = BondGraph::edge_count(self.cfg.graph());
        let e = self.rng.gen_range(0..m);
        let u: f64 = self.rng.gen();
        self.counters.proposals += 1;
        let old = self.cfg.is_open(e);
        let new = u < self.hb.open_probability(&self.cfg, &self.params, e);
        if new == old {
            return Ok(());
        }
        self.cfg.set(e, new);
        let kept = if new { self.after_open(e)? } else { self.after_close(e)? };
        if kept {
            self.counters.flips += 1;
        } else {
            self.cfg.set(e, old);
            self.counters.rejected += 1;
        }
        Ok(())
    }

    /// The two faces on either side of `e`; the outer face is `None`.
    fn faces_of(&self, e: usize) -> [Option<usize>; 2] {
        let lat = self.cfg.lattice();
        let (a, b) = lat.edge_sites(e);
        let lo = a.min(b);
        let other = if a.y == b.y {
            lo - Site::new(0, 1)
        } else {
            lo - Site::new(1, 0)
        };
        [face_index(&lat, lo), face_index(&lat, other)]
    }

    /// Faces reachable from `start` across closed edges, staying on faces
    /// that satisfy `keep`.
    fn closed_flood(&self, start: usize, keep: impl Fn(usize) -> bool) -> Vec<usize> {
        let lat = self.cfg.lattice();
        let w = 2 * lat.half_width();
        let mut seen = HashSet::from([start]);
        let mut out = vec![start];
        let mut k = 0;
        while k < out.len() {
            for (nb, s, t) in face_sides(face_site(w, out[k])) {
                if let Some(j) = face_index(&lat, nb) {
                    if keep(j) && !self.cfg.is_open_between(s, t) && seen.insert(j) {
                        out.push(j);
                    }
                }
            }
            k += 1;
        }
        out
    }

    /// Closing `e` joins the unreached side, if any, to the outer face.
    /// When that side is the interior the circuit shrinks.
    fn after_close(&mut self, e: usize) -> Result<bool> {
        let [a, b] = self.faces_of(e).map(|f| f.map_or(true, |i| self.reached[i]));
        if a == b {
            return Ok(true);
        }
        let start = self.faces_of(e)[usize::from(a)].expect("the unreached side is a box face");
        if !self.inside[start] {
            for f in self.closed_flood(start, |j| !self.reached[j]) {
                self.reached[f] = true;
            }
            return Ok(true);
        }
        self.counters.recomputed += 1;
        let lat = self.cfg.lattice();
        let lost = self.closed_flood(start, |j| self.inside[j]);
        if lost.iter().any(|&f| is_origin_face(&lat, f)) {
            return Ok(false);
        }
        for &f in &lost {
            self.reached[f] = true;
        }
        let origin = face_index(&lat, Site::ORIGIN).expect("box holds the origin faces");
        let kept = plain_flood(&lat, origin, |j| self.inside[j] && !self.reached[j]);
        let c = if (kept.len() as i64) < self.event.n * self.event.n {
            None
        } else {
            let mut mask = vec![false; self.inside.len()];
            kept.iter().for_each(|&f| mask[f] = true);
            self.checked_circuit(&mask, &kept)?.map(|c| (c, mask))
        };
        match c {
            Some((c, mask)) => {
                self.circuit = c;
                self.inside = mask;
                Ok(true)
            }
            None => {
                for &f in &lost {
                    self.reached[f] = false;
                }
                Ok(false)
            }
        }
    }

    /// Opening `e` between two outer faces whose endpoints were already
    /// connected cuts a bounded region off from the outer face. If that
    /// region touches the interior the circuit grows around it.
    fn after_open(&mut self, e: usize) -> Result<bool> {
        let [a, b] = self.faces_of(e);
        if a.is_some_and(|i| !self.reached[i]) || !self.hb.connected_off(&self.cfg, e) {
            return Ok(true);
        }
        let cut = self.enclosed_side(a, b);
        for &f in &cut {
            self.reached[f] = false;
        }
        let lat = self.cfg.lattice();
        let w = 2 * lat.half_width();
        let touches = cut.iter().any(|&f| {
            face_sides(face_site(w, f))
                .iter()
                .any(|(nb, _, _)| face_index(&lat, *nb).is_some_and(|j| self.inside[j]))
        });
        if !touches {
            return Ok(true);
        }
        self.counters.recomputed += 1;
        // the cut region and any pockets it meets join the interior
        let mut grown = Vec::new();
        let mut seen = HashSet::new();
        for &f in &cut {
            if seen.insert(f) {
                for g in plain_flood(&lat, f, |j| !self.reached[j] && !self.inside[j]) {
                    seen.insert(g);
                    grown.push(g);
                }
            }
        }
        for &f in &grown {
            self.inside[f] = true;
        }
        let faces: Vec<usize> = (0..self.inside.len()).filter(|&i| self.inside[i]).collect();
        match self.checked_circuit(&self.inside, &faces)? {
            Some(c) => {
                self.circuit = c;
                Ok(true)
            }
            None => {
                for &f in &grown {
                    self.inside[f] = false;
                }
                for &f in &cut {
                    self.reached[f] = true;
                }
                Ok(false)
            }
        }
    }

    /// Floods both sides of a newly opened edge in lockstep and returns the
    /// side that runs out first, i.e. the one cut off from the outer face.
    fn enclosed_side(&self, a: Option<usize>, b: Option<usize>) -> Vec<usize> {
        let lat = self.cfg.lattice();
        let w = 2 * lat.half_width();
        let mut seen: [HashSet<usize>; 2] = Default::default();
        let mut lists: [Vec<usize>; 2] = Default::default();
        let mut next = [0usize; 2];
        let mut unbounded = [false; 2];
        for (side, f) in [a, b].into_iter().enumerate() {
            match f {
                Some(f) => {
                    seen[side].insert(f);
                    lists[side].push(f);
                }
                None => unbounded[side] = true,
            }
        }
        loop {
            for side in 0..2 {
                if unbounded[side] {
                    continue;
                }
                let Some(&f) = lists[side].get(next[side]) else {
                    return std::mem::take(&mut lists[side]);
                };
                next[side] += 1;
                for (nb, s, t) in face_sides(face_site(w, f)) {
                    if self.cfg.is_open_between(s, t) {
                        continue;
                    }
                    match face_index(&lat, nb) {
                        None => unbounded[side] = true,
                        Some(j) => {
                            if seen[side].insert(j) {
                                lists[side].push(j);
                            }
                        }
                    }
                }
            }
            debug_assert!(
                !(unbounded[0] && unbounded[1]),
                "connected endpoints must enclose a side"
            );
        }
    }

    /// Boundary circuit of an interior face set, if it satisfies the event.
    fn checked_circuit(&self, inside: &[bool], faces: &[usize]) -> Result<Option<Circuit>> {
        let lat = self.cfg.lattice();
        let c = trace_boundary(&lat, inside, faces)?;
        if !self.event.allow_censored && c.touches_box_boundary(&lat) {
            return Ok(None);
        }
        if self.event.kind == EventKind::AreaAndCentred {
            let shape = self.shape.as_ref().expect("checked at construction");
            if global_distortion(&c, shape, self.event.n)?.cen != Site::ORIGIN {
                return Ok(None);
            }
        }
        Ok(Some(c))
    }

    /// As many proposals as there are edges.
    pub fn sweep(&mut self) -> Result<()> {
        for _ in 0..BondGraph::edge_count(self.cfg.graph()) {
            self.step()?;
        }
        Ok(())
    }
}

/// Faces of a box of half-width `N` are indexed row-major by their
/// lower-left corner, from `(-N, -N)`.
fn face_index(lat: &LatticeBox, f: Site) -> Option<usize> {
    let n = lat.half_width();
    let (x, y) = (f.x + n, f.y + n);
    (0..2 * n).contains(&x).then_some(())?;
    (0..2 * n).contains(&y).then(|| (y * 2 * n + x) as usize)
}

fn face_site(w: i32, i: usize) -> Site {
    let (i, half) = (i as i32, w / 2);
    Site::new(i % w - half, i / w - half)
}

/// Neighbouring face and the shared edge, counterclockwise around `f`.
fn face_sides(f: Site) -> [(Site, Site, Site); 4] {
    let (r, u, ru) = (f + Site::new(1, 0), f + Site::new(0, 1), f + Site::new(1, 1));
    [
        (f - Site::new(0, 1), f, r),
        (r, r, ru),
        (u, ru, u),
        (f - Site::new(1, 0), u, f),
    ]
}

fn is_origin_face(lat: &LatticeBox, f: usize) -> bool {
    let s = face_site(2 * lat.half_width(), f);
    (-1..=0).contains(&s.x) && (-1..=0).contains(&s.y)
}

/// Faces side-connected to `start` through faces satisfying `keep`.
fn plain_flood(lat: &LatticeBox, start: usize, keep: impl Fn(usize) -> bool) -> Vec<usize> {
    let w = 2 * lat.half_width();
    let mut seen = HashSet::from([start]);
    let mut out = vec![start];
    let mut k = 0;
    while k < out.len() {
        for (nb, _, _) in face_sides(face_site(w, out[k])) {
            if let Some(j) = face_index(lat, nb) {
                if keep(j) && seen.insert(j) {
                    out.push(j);
                }
            }
        }
        k += 1;
    }
    out
}

/// Faces reached from the outer face across closed edges, and the
/// unreached faces side-connected to the origin face.
fn face_masks(cfg: &BondConfig) -> (Vec<bool>, Vec<bool>) {
    let lat = cfg.lattice();
    let n = lat.half_width();
    let w = 2 * n;
    let count = (w * w) as usize;
    let mut reached = vec![false; count];
    let mut stack = Vec::new();
    for i in 0..count {
        let f = face_site(w, i);
        let on_rim = face_sides(f)
            .iter()
            .any(|(nb, s, t)| face_index(&lat, *nb).is_none() && !cfg.is_open_between(*s, *t));
        if on_rim {
            reached[i] = true;
            stack.push(i);
        }
    }
    while let Some(i) = stack.pop() {
        for (nb, s, t) in face_sides(face_site(w, i)) {
            if let Some(j) = face_index(&lat, nb) {
                if !reached[j] && !cfg.is_open_between(s, t) {
                    reached[j] = true;
                    stack.push(j);
                }
            }
        }
    }
    let mut inside = vec![false; count];
    let origin = face_index(&lat, Site::ORIGIN).expect("box holds the origin faces");
    if !reached[origin] {
        for f in plain_flood(&lat, origin, |j| !reached[j]) {
            inside[f] = true;
        }
    }
    (reached, inside)
}

/// Boundary of a simply connected set of faces, traced with the faces on
/// the left and the rightmost turn taken at shared corners.
fn trace_boundary(lat: &LatticeBox, inside: &[bool], faces: &[usize]) -> Result<Circuit> {
    let w = 2 * lat.half_width();
    let mut outgoing: HashMap<Site, Vec<Site>> = HashMap::new();
    for &f in faces {
        for (nb, s, t) in face_sides(face_site(w, f)) {
            if !face_index(lat, nb).is_some_and(|j| inside[j]) {
                outgoing.entry(s).or_default().push(t);
            }
        }
    }
    let start = *outgoing.keys().min().expect("nonempty face set");
    let mut vertices = vec![start];
    let mut prev = Site::new(1, 0);
    let mut cur = start;
    loop {
        let outs = outgoing
            .get_mut(&cur)
            .ok_or_else(|| Error::Internal(format!("boundary trace lost at {cur}")))?;
        let order = [prev.rotate_quarters(-1), prev, prev.rotate_quarters(1)];
        let k = order
            .iter()
            .find_map(|d| outs.iter().position(|&t| t - cur == *d))
            .unwrap_or(0);
        let next = outs.swap_remove(k);
        prev = next - cur;
        cur = next;
        if cur == start {
            break;
        }
        vertices.push(cur);
    }
    Circuit::new(vertices)
}

/// Counts of SEARCH runs on one sample and of the ways they went wrong.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchTally {
    pub runs: usize,
    /// Runs ending without a pair.
    pub failed: usize,
    pub not_distinct: usize,
    pub not_nested: usize,
    /// Pairs returned that fail the pair predicates.
    pub bad_pair: usize,
}

impl SearchTally {
    pub fn violations(&self) -> usize {
        self.failed + self.not_distinct + self.not_nested + self.bad_pair
    }
}

/// Statistics of one retained state.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub chain: u64,
    pub sweep: usize,
    pub area: i64,
    /// Area in excess of `n²`.
    pub exc: f64,
    pub gd: f64,
    pub cen: Site,
    /// Widest site-free angle for the circuit and for its cluster.
    pub theta_circuit: f64,
    pub theta_cluster: f64,
    pub rg_circuit: usize,
    pub rg_cluster: usize,
    /// Whether every cluster site is also a circuit site.
    pub cluster_subset: bool,
    /// Largest displacement between connection sites along the circuit arc
    /// joining the pertinent pair; `None` without a pertinent pair.
    pub maxreg: Option<f64>,
    /// Angle at the centre between the two sites of the pertinent pair.
    pub pair_angle: Option<f64>,
    /// Extreme distances of the circuit from its centre.
    pub r_min: f64,
    pub r_max: f64,
    /// `None` when the circuit sites do not reach every quadrant.
    pub search: Option<SearchTally>,
}

#[derive(Debug, Clone)]
pub struct AnalysisSettings {
    pub shape: WulffShape,
    pub constants: ShapeConstants,
    pub search_directions: usize,
}

/// Computes the statistics of a state whose outermost circuit is `circuit`.
/// Angles are measured about `cen(circuit)`.
pub fn analyse_sample(cfg: &BondConfig, circuit: &Circuit, n: i64, a: &AnalysisSettings) -> Result<SampleRecord> {
    let k = a.constants;
    let dist = global_distortion(circuit, &a.shape, n)?;
    let centre = dist.cen;
    let rc = rg_set(circuit, k, RegenMode::Circuit, centre)?;
    let rk = rg_set(circuit, k, RegenMode::Cluster(cfg), centre)?;
    let cluster_subset = rk.sites.iter().all(|s| rc.sites.contains(s));
    let norms: Vec<f64> = circuit
        .vertices()
        .iter()
        .map(|&v| Vec2::from(v - centre).norm())
        .collect();
    let (maxreg, pair_angle) = match pertinent_pair(&rk, k)? {
        Some((x, y)) => (
            Some(arc_maxreg(circuit, centre, x, y, 2.0 * k.q0)?),
            angle_between(x.into(), y.into()).ok(),
        ),
        None => (None, None),
    };
    let search_tally = if rc.spans_quadrants() {
        let mut t = SearchTally::default();
        for i in 0..a.search_directions {
            let u = Vec2::from_angle(TAU * i as f64 / a.search_directions as f64 + 0.1);
            let r = search(&rc.sites, k, u)?;
            t.runs += 1;
            t.not_distinct += !r.distinct() as usize;
            t.not_nested += !r.nested() as usize;
            match r.pair {
                Some((p, q)) => t.bad_pair += !pair_predicates(&rc.sites, k, p, q)?.both() as usize,
                None => t.failed += 1,
            }
        }
        Some(t)
    } else {
        None
    };
    Ok(SampleRecord {
        chain: 0,
        sweep: 0,
        area: circuit.area(),
        exc: (circuit.area() - n * n) as f64,
        gd: dist.gd,
        cen: centre,
        theta_circuit: rc.theta_max,
        theta_cluster: rk.theta_max,
        rg_circuit: rc.len(),
        rg_cluster: rk.len(),
        cluster_subset,
        maxreg,
        pair_angle,
        r_min: norms.iter().copied().fold(f64::INFINITY, f64::min),
        r_max: norms.iter().copied().fold(0.0, f64::max),
        search: search_tally,
    })
}

/// Connection regeneration on the counterclockwise circuit arc from `x` to
/// `y` (both given relative to `centre`).
fn arc_maxreg(circuit: &Circuit, centre: Site, x: Site, y: Site, delta: f64) -> Result<f64> {
    let vs: Vec<Site> = circuit.vertices().iter().map(|&v| v - centre).collect();
    let find = |s: Site| {
        vs.iter()
            .position(|&v| v == s)
            .ok_or_else(|| Error::Internal(format!("{s} is not on the circuit")))
    };
    let (i, j) = (find(x)?, find(y)?);
    let len = vs.len();
    let steps = (j + len - i) % len;
    let arc: Vec<Segment> = (0..steps).map(|t| (vs[(i + t) % len], vs[(i + t + 1) % len])).collect();
    let k = default_ball_radius(y - x, delta)?;
    Ok(connection_regeneration(&arc, x, y, delta, k, PatternChoice::Any)?.maxreg)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSettings {
    pub half_width: i32,
    pub burnin_sweeps: usize,
    pub thin_sweeps: usize,
    pub samples_per_chain: usize,
    pub chains: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainRun {
    pub chain: u64,
    pub records: Vec<SampleRecord>,
    pub counters: ChainCounters,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionedRun {
    pub n: i64,
    pub kind: EventKind,
    pub half_width: i32,
    pub chains: Vec<ChainRun>,
}

impl ConditionedRun {
    pub fn records(&self) -> impl Iterator<Item = &SampleRecord> {
        self.chains.iter().flat_map(|c| c.records.iter())
    }

    pub fn len(&self) -> usize {
        self.chains.iter().map(|c| c.records.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// One series per chain.
    pub fn series(&self, f: impl Fn(&SampleRecord) -> f64) -> Vec<Vec<f64>> {
        self.chains.iter().map(|c| c.records.iter().map(&f).collect()).collect()
    }

    /// Sum over chains of the autocorrelation-corrected sample sizes.
    pub fn effective_samples(&self, f: impl Fn(&SampleRecord) -> f64) -> f64 {
        self.series(f).iter().map(|s| effective_sample_size(s)).sum()
    }

    /// Cross-chain agreement of a statistic.
    pub fn gelman_rubin(&self, f: impl Fn(&SampleRecord) -> f64) -> Result<f64> {
        gelman_rubin(&self.series(f))
    }

    pub fn counters(&self) -> ChainCounters {
        let mut t = ChainCounters::default();
        for c in &self.chains {
            t.add(&c.counters);
        }
        t
    }
}

/// Runs independent restricted chains in parallel (one thread per chain,
/// streams keyed by the chain index) and records thinned states.
pub fn restricted_chain(
    params: &FKParams,
    event: EventSpec,
    run: &RunSettings,
    analysis: &AnalysisSettings,
) -> Result<ConditionedRun> {
    if (run.half_width as i64) < 2 * event.n {
        bail!(
            Precondition,
            "box half-width {} is below 2n = {}",
            run.half_width,
            2 * event.n
        );
    }
    if run.chains == 0 || run.thin_sweeps == 0 {
        bail!(InvalidParameter, "need at least one chain and a positive thinning");
    }
    let lattice = LatticeBox::new(run.half_width)?;
    let shape = Some(&analysis.shape);
    let results: Vec<Result<ChainRun>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..run.chains as u64)
            .map(|chain| {
                s.spawn(move || -> Result<ChainRun> {
                    let mut ch = RestrictedChain::new(lattice, *params, event, shape, chain)?;
                    for _ in 0..run.burnin_sweeps {
                        ch.sweep()?;
                    }
                    let mut records = Vec::with_capacity(run.samples_per_chain);
                    for i in 0..run.samples_per_chain {
                        for _ in 0..run.thin_sweeps {
                            ch.sweep()?;
                        }
                        let mut r = analyse_sample(ch.config(), ch.circuit(), event.n, analysis)?;
                        r.chain = chain;
                        r.sweep = run.burnin_sweeps + (i + 1) * run.thin_sweeps;
                        records.push(r);
                    }
                    Ok(ChainRun {
                        chain,
                        records,
                        counters: ch.counters(),
                    })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Err(Error::Internal("chain thread panicked".into())))
            })
            .collect()
    });
    Ok(ConditionedRun {
        n: event.n,
        kind: event.kind,
        half_width: run.half_width,
        chains: results.into_iter().collect::<Result<_>>()?,
    })
}

/// Minimum effective sample size for tail estimates.
pub const MIN_EFFECTIVE_SAMPLES: f64 = 500.0;

/// Points with fewer exceedances are left out of the log-linear fit.
pub const MIN_FIT_HITS: usize = 5;

/// The fit window starts at the median: only points with tail estimate at
/// most this are fitted, since the bulk of the distribution is not log-linear.
pub const TAIL_START: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailPoint {
    pub x: f64,
    pub estimate: f64,
    /// 95% Wilson interval at the effective sample size.
    pub lo: f64,
    pub hi: f64,
    pub n_eff: f64,
    pub hits: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailCurve {
    pub points: Vec<TailPoint>,
    /// Weighted fit of `ln estimate` against `x` over the window.
    pub fit: Option<LinearFit>,
    /// Indices of the points in the fit window.
    pub window: Vec<usize>,
}

impl TailCurve {
    pub fn is_monotone(&self) -> bool {
        self.points.windows(2).all(|w| w[1].estimate <= w[0].estimate)
    }
}

/// Empirical tail `P(value > x)` (or `>=` when `inclusive`) at each
/// threshold. The sample size used for intervals is the autocorrelation
/// corrected one, summed over chains.
pub fn tail_curve(chains: &[Vec<f64>], thresholds: &[f64], inclusive: bool, min_effective: f64) -> Result<TailCurve> {
    if thresholds.windows(2).any(|w| w[1] < w[0]) {
        bail!(InvalidParameter, "thresholds must be non-decreasing");
    }
    let all: Vec<f64> = chains.iter().flatten().copied().collect();
    let n_eff: f64 = chains
        .iter()
        .filter(|c| !c.is_empty())
        .map(|c| effective_sample_size(c))
        .sum();
    if all.is_empty() || n_eff < min_effective {
        bail!(InsufficientData, "{n_eff:.0} effective samples, need {min_effective}");
    }
    let trials = n_eff.round().max(1.0);
    let points: Vec<TailPoint> = thresholds
        .iter()
        .map(|&x| {
            let hits = all.iter().filter(|&&v| if inclusive { v >= x } else { v > x }).count();
            let est = hits as f64 / all.len() as f64;
            let (lo, hi) = wilson_interval((est * trials).round() as u64, trials as u64, 1.96);
            TailPoint {
                x,
                estimate: est,
                lo,
                hi,
                n_eff,
                hits,
            }
        })
        .collect();
    let window: Vec<usize> = (0..points.len())
        .filter(|&i| points[i].hits >= MIN_FIT_HITS && points[i].estimate <= TAIL_START)
        .collect();
    let fit = log_fit(&points, &window);
    Ok(TailCurve { points, fit, window })
}

fn log_fit(points: &[TailPoint], idx: &[usize]) -> Option<LinearFit> {
    if idx.len() < 3 {
        return None;
    }
    let x: Vec<f64> = idx.iter().map(|&i| points[i].x).collect();
    let y: Vec<f64> = idx.iter().map(|&i| points[i].estimate.ln()).collect();
    let s: Vec<f64> = idx.iter().map(|&i| log_sigma(&points[i])).collect();
    weighted_linear_fit(&x, &y, &s).ok()
}

/// Standard deviation of `ln estimate` read off the Wilson interval.
fn log_sigma(p: &TailPoint) -> f64 {
    ((p.hi.ln() - p.lo.max(1e-300).ln()) / (2.0 * 1.96)).max(1e-9)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThetaOf {
    Circuit,
    Cluster,
}

/// `P(θ > u/n)` for each `u`.
pub fn theta_tail(run: &ConditionedRun, of: ThetaOf, us: &[f64], min_effective: f64) -> Result<TailCurve> {
    let n = run.n as f64;
    let series = run.series(|r| {
        n * match of {
            ThetaOf::Circuit => r.theta_circuit,
            ThetaOf::Cluster => r.theta_cluster,
        }
    });
    tail_curve(&series, us, false, min_effective)
}

/// `P(EXC >= n t)` for each `t`.
pub fn exc_tail(run: &ConditionedRun, ts: &[f64], min_effective: f64) -> Result<TailCurve> {
    let n = run.n as f64;
    tail_curve(&run.series(|r| r.exc / n), ts, true, min_effective)
}

/// `P(GD > ε n)` for each `ε`.
pub fn gd_tail(run: &ConditionedRun, eps: &[f64], min_effective: f64) -> Result<TailCurve> {
    let n = run.n as f64;
    tail_curve(&run.series(|r| r.gd / n), eps, false, min_effective)
}

/// Fraction of samples with the circuit inside the annulus
/// `inner·n <= |v - cen| <= outer·n`, with a Wilson interval at the
/// effective sample size.
pub fn annulus_frequency(run: &ConditionedRun, inner: f64, outer: f64) -> Result<(f64, f64, f64)> {
    if run.is_empty() {
        bail!(InsufficientData, "no samples");
    }
    let n = run.n as f64;
    let inside = |r: &SampleRecord| (r.r_min >= inner * n && r.r_max <= outer * n) as u8 as f64;
    let hits: f64 = run.records().map(inside).sum();
    let freq = hits / run.len() as f64;
    let n_eff = run.effective_samples(|r| r.r_max).max(1.0).round();
    let (lo, hi) = wilson_interval((freq * n_eff).round() as u64, n_eff as u64, 1.96);
    Ok((freq, lo, hi))
}

/// Whether a log-tail falls off no faster than linearly over its window:
/// the slope over the later half of the window must not be significantly
/// steeper than over the earlier half.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayShape {
    pub slope: f64,
    pub early_slope: f64,
    pub late_slope: f64,
    /// Combined standard error of the slope difference.
    pub diff_stderr: f64,
    /// Signs of the residuals of the full fit, `+`, `-` or `0`.
    pub residual_signs: String,
    pub at_most_linear: bool,
}

pub fn decay_shape(curve: &TailCurve) -> Result<DecayShape> {
    let fit = curve
        .fit
        .ok_or_else(|| Error::InsufficientData("tail window has fewer than 3 points".into()))?;
    let w = &curve.window;
    if w.len() < 4 {
        bail!(
            InsufficientData,
            "need 4 window points to compare halves, got {}",
            w.len()
        );
    }
    let half = w.len() / 2;
    let early = log_fit(&curve.points, &w[..half + 1]).or_else(|| log_fit(&curve.points, &w[..half]));
    let late = log_fit(&curve.points, &w[half - 1..]);
    let (early, late) = match (early, late) {
        (Some(a), Some(b)) => (a, b),
        _ => bail!(InsufficientData, "window halves too short to fit"),
    };
    let diff_stderr = (early.slope_stderr.powi(2) + late.slope_stderr.powi(2)).sqrt();
    let residual_signs = w
        .iter()
        .map(|&i| {
            let p = &curve.points[i];
            let r = p.estimate.ln() - fit.predict(p.x);
            if r.abs() <= log_sigma(p) {
                '0'
            } else if r > 0.0 {
                '+'
            } else {
                '-'
            }
        })
        .collect();
    Ok(DecayShape {
        slope: fit.slope,
        early_slope: early.slope,
        late_slope: late.slope,
        diff_stderr,
        residual_signs,
        at_most_linear: fit.slope < 0.0 && late.slope >= early.slope - 3.0 * diff_stderr,
    })
}

/// Median with a distribution-free 95% interval at the effective sample size.
pub fn median_interval(values: &[f64], n_eff: f64) -> Result<(f64, f64, f64)> {
    if values.is_empty() || !(n_eff >= 1.0) {
        bail!(InsufficientData, "no samples for a median");
    }
    let h = 1.96 * 0.5 / n_eff.sqrt();
    Ok((
        quantile(values, 0.5),
        quantile(values, (0.5 - h).max(0.0)),
        quantile(values, (0.5 + h).min(1.0)),
    ))
}

/// Growth of a statistic across `n`: log-log slope (sub-linear when below
/// 1 beyond error) and the fit `A log n + B` with its goodness of fit.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthCheck {
    pub loglog_slope: f64,
    pub loglog_stderr: f64,
    pub log_fit: LinearFit,
    pub chi2: f64,
    pub p_value: f64,
}

impl GrowthCheck {
    pub fn sublinear(&self) -> bool {
        self.loglog_slope < 1.0
    }

    pub fn consistent_with_log(&self) -> bool {
        self.p_value > 0.001
    }
}

pub fn growth_check(ns: &[f64], values: &[f64], sigmas: &[f64]) -> Result<GrowthCheck> {
    if ns.len() < 3 || values.iter().any(|&v| !(v > 0.0)) {
        bail!(InsufficientData, "need 3 sizes with positive values");
    }
    let ln_n: Vec<f64> = ns.iter().map(|n| n.ln()).collect();
    let ln_v: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let ln_s: Vec<f64> = values.iter().zip(sigmas).map(|(v, s)| s / v).collect();
    let ll = weighted_linear_fit(&ln_n, &ln_v, &ln_s)?;
    let lf = weighted_linear_fit(&ln_n, values, sigmas)?;
    let chi2: f64 = (0..ns.len())
        .map(|i| ((values[i] - lf.predict(ln_n[i])) / sigmas[i]).powi(2))
        .sum();
    let dof = (ns.len() - 2) as f64;
    Ok(GrowthCheck {
        loglog_slope: ll.slope,
        loglog_stderr: ll.slope_stderr,
        log_fit: lf,
        chi2,
        p_value: crate::stats::chi_square_sf(chi2, dof),
    })
}
