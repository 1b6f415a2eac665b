//! Configuration surgeries: store-and-resample on a region, shift of one
//! region's contents onto another, and forced opening of a path. Each comes
//! with an empirical check of the property it is supposed to preserve.

use std::collections::HashMap;
use std::f64::consts::PI;

use rand::Rng;

use crate::circuits::sector_edges;
use crate::error::{bail, Error, Result};
use crate::geometry::{Sector, Vec2};
use crate::lattice::{BondConfig, BondGraph, EdgeSet, LatticeBox, Site};
use crate::rng::ChainRng;
use crate::sampler::{ExactTable, FKParams, HeatBath};
use crate::stats::{chi_square_gof, correlation, total_variation};

/// Operated regions in the box.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    /// Sector swept counterclockwise from `from` to `to`, cut at Euclidean radius `radius`.
    Sector {
        from: Site,
        to: Site,
        radius: f64,
    },
    /// Sector of half-width `half_width` about `dir`, cut at `radius`.
    Wedge {
        dir: Vec2,
        half_width: f64,
        radius: f64,
    },
    Edges(EdgeSet),
}

/// Edge set of a region. Fails if it is empty or contains an edge running
/// along the interior boundary ring.
pub fn region_edges(lattice: &LatticeBox, region: &Region) -> Result<EdgeSet> {
    let set = match region {
        Region::Sector { from, to, radius } => {
            let s = Sector::new((*from).into(), (*to).into())?;
            within_radius(lattice, sector_edges(lattice, &s), *radius)?
        }
        Region::Wedge {
            dir,
            half_width,
            radius,
        } => {
            if dir.is_zero() || !(*half_width > 0.0 && *half_width < PI) {
                bail!(
                    InvalidParameter,
                    "wedge needs a nonzero direction and half-width in (0, π)"
                );
            }
            let c = dir.arg();
            let s = Sector::new(Vec2::from_angle(c - half_width), Vec2::from_angle(c + half_width))?;
            within_radius(lattice, sector_edges(lattice, &s), *radius)?
        }
        Region::Edges(set) => {
            if set.capacity() != BondGraph::edge_count(lattice) {
                bail!(InvalidRegion, "edge set built for a different box");
            }
            set.clone()
        }
    };
    check_region(lattice, &set)?;
    Ok(set)
}

fn within_radius(lattice: &LatticeBox, set: EdgeSet, radius: f64) -> Result<EdgeSet> {
    if !(radius > 0.0) {
        bail!(InvalidParameter, "region radius must be positive, got {radius}");
    }
    let keep = set.iter().filter(|&e| {
        let (a, b) = lattice.edge_sites(e);
        Vec2::from(a).norm() <= radius + 1e-12 && Vec2::from(b).norm() <= radius + 1e-12
    });
    Ok(EdgeSet::from_edges(set.capacity(), keep.collect::<Vec<_>>()))
}

fn check_region<G: BondGraph>(graph: &G, set: &EdgeSet) -> Result<()> {
    if set.is_empty() {
        bail!(InvalidRegion, "region has no edges");
    }
    for e in set.iter() {
        let (a, b) = graph.endpoints(e);
        if graph.is_boundary(a) && graph.is_boundary(b) {
            bail!(InvalidRegion, "edge {e} runs along the box boundary");
        }
    }
    Ok(())
}

/// Redraws the edges of a region given everything outside it.
pub trait Resampler {
    fn resample<G: BondGraph>(
        &mut self,
        cfg: &mut BondConfig<G>,
        region: &EdgeSet,
        params: &FKParams,
        rng: &mut ChainRng,
    ) -> Result<()>;
}

/// Heat-bath on the region only, started from the all-closed region.
#[derive(Debug, Clone, Copy)]
pub struct HeatBathResampler {
    pub proposals_per_edge: usize,
}

impl Default for HeatBathResampler {
    fn default() -> Self {
        HeatBathResampler { proposals_per_edge: 50 }
    }
}

impl Resampler for HeatBathResampler {
    fn resample<G: BondGraph>(
        &mut self,
        cfg: &mut BondConfig<G>,
        region: &EdgeSet,
        params: &FKParams,
        rng: &mut ChainRng,
    ) -> Result<()> {
        let edges: Vec<usize> = region.iter().collect();
        if edges.is_empty() {
            return Ok(());
        }
        // the start must not depend on the stored bits
        for &e in &edges {
            cfg.set(e, false);
        }
        let mut hb = HeatBath::new(cfg.graph());
        for _ in 0..self.proposals_per_edge * edges.len() {
            let e = edges[rng.gen_range(0..edges.len())];
            let u: f64 = rng.gen();
            hb.step(cfg, params, e, u);
        }
        Ok(())
    }
}

/// Exact draw from the conditional law by enumerating the region.
#[derive(Debug, Clone, Copy)]
pub struct ExactResampler {
    pub max_edges: usize,
}

impl Default for ExactResampler {
    fn default() -> Self {
        ExactResampler { max_edges: 20 }
    }
}

impl Resampler for ExactResampler {
    fn resample<G: BondGraph>(
        &mut self,
        cfg: &mut BondConfig<G>,
        region: &EdgeSet,
        params: &FKParams,
        rng: &mut ChainRng,
    ) -> Result<()> {
        if region.len() > self.max_edges {
            bail!(TooLarge, "{} region edges exceed {}", region.len(), self.max_edges);
        }
        let law = region_conditional(cfg, region, params)?;
        let idx = draw_index(&law, rng.gen());
        set_region(cfg, region, idx as u64);
        Ok(())
    }
}

/// Leaves the stored bits in place. Not a valid resampler; it exists so the
/// regularity check has something to catch.
#[derive(Debug, Clone, Copy, Default)]
pub struct StoredBitsResampler;

impl Resampler for StoredBitsResampler {
    fn resample<G: BondGraph>(
        &mut self,
        _: &mut BondConfig<G>,
        _: &EdgeSet,
        _: &FKParams,
        _: &mut ChainRng,
    ) -> Result<()> {
        Ok(())
    }
}

/// Writes assignment `mask` (bit i = i-th region edge in id order) into the region.
pub fn set_region<G: BondGraph>(cfg: &mut BondConfig<G>, region: &EdgeSet, mask: u64) {
    for (i, e) in region.iter().enumerate() {
        cfg.set(e, mask >> i & 1 == 1);
    }
}

/// Reads the region assignment as a mask (bit i = i-th region edge).
pub fn region_mask<G: BondGraph>(cfg: &BondConfig<G>, region: &EdgeSet) -> u64 {
    region
        .iter()
        .enumerate()
        .fold(0, |m, (i, e)| if cfg.is_open(e) { m | 1 << i } else { m })
}

/// Conditional law of the region assignment given the rest of `cfg`,
/// indexed by [`region_mask`].
pub fn region_conditional<G: BondGraph>(cfg: &BondConfig<G>, region: &EdgeSet, params: &FKParams) -> Result<Vec<f64>> {
    let m = region.len();
    if m > 24 {
        bail!(TooLarge, "{m} region edges are too many to enumerate");
    }
    let mut work = cfg.clone();
    let logw: Vec<f64> = (0..1u64 << m)
        .map(|mask| {
            set_region(&mut work, region, mask);
            params.log_weight(&work)
        })
        .collect();
    let top = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = logw.iter().map(|l| (l - top).exp()).collect();
    let z: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= z);
    Ok(w)
}

fn draw_index(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // rounding: fall back to the last index with mass
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurgeryOutcome<G: BondGraph = LatticeBox> {
    /// Input outside the region, resampled inside.
    pub omega1: BondConfig<G>,
    /// Input bits on the region, aligned with `region.iter()`.
    pub stored: Vec<bool>,
    pub region: EdgeSet,
}

impl<G: BondGraph> SurgeryOutcome<G> {
    pub fn stored_open(&self) -> usize {
        self.stored.iter().filter(|&&b| b).count()
    }

    pub fn updated_open(&self) -> usize {
        self.region.iter().filter(|&e| self.omega1.is_open(e)).count()
    }
}

/// Stores the region's bits and resamples them given the outside.
pub fn sector_storage_replacement<G: BondGraph, R: Resampler>(
    cfg: &BondConfig<G>,
    region: &EdgeSet,
    params: &FKParams,
    resampler: &mut R,
    rng: &mut ChainRng,
) -> Result<SurgeryOutcome<G>> {
    if region.capacity() != cfg.graph().edge_count() {
        bail!(InvalidRegion, "region built for a different graph");
    }
    check_region(cfg.graph(), region)?;
    let stored = region.iter().map(|e| cfg.is_open(e)).collect();
    let mut omega1 = cfg.clone();
    resampler.resample(&mut omega1, region, params, rng)?;
    Ok(SurgeryOutcome {
        omega1,
        stored,
        region: region.clone(),
    })
}

/// The edge set `b + shift`; fails if an image leaves the box.
pub fn shifted_edges(lattice: &LatticeBox, b: &EdgeSet, shift: Site) -> Result<EdgeSet> {
    let mut out = EdgeSet::empty(b.capacity());
    for e in b.iter() {
        let (s, t) = lattice.edge_sites(e);
        let img = lattice
            .edge_between(s + shift, t + shift)
            .ok_or_else(|| Error::InvalidRegion(format!("{s} - {t} shifted by {shift} leaves the box")))?;
        out.insert(img);
    }
    Ok(out)
}

/// Keeps `a`, copies the contents of `b` onto `b + shift`, and resamples
/// every other edge given those.
pub fn shift_replacement<R: Resampler>(
    cfg: &BondConfig,
    a: &EdgeSet,
    b: &EdgeSet,
    shift: Site,
    params: &FKParams,
    resampler: &mut R,
    rng: &mut ChainRng,
) -> Result<BondConfig> {
    let lat = cfg.lattice();
    let m = BondGraph::edge_count(&lat);
    if a.capacity() != m || b.capacity() != m {
        bail!(InvalidRegion, "edge sets built for a different box");
    }
    let b_shift = shifted_edges(&lat, b, shift)?;
    if !a.is_disjoint(b) || !a.is_disjoint(&b_shift) {
        bail!(InvalidParameter, "A must be disjoint from B and from B + {shift}");
    }
    let mut out = cfg.clone();
    for e in b.iter() {
        let (s, t) = lat.edge_sites(e);
        let img = lat.edge_between(s + shift, t + shift).expect("checked above");
        out.set(img, cfg.is_open(e));
    }
    let rest = EdgeSet::from_edges(
        m,
        (0..m)
            .filter(|&e| !a.contains(e) && !b_shift.contains(e))
            .collect::<Vec<_>>(),
    );
    resampler.resample(&mut out, &rest, params, rng)?;
    Ok(out)
}

/// Exact comparison of the shift-replacement output law with the input law.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftRatio {
    /// Output law, indexed by configuration mask.
    pub output: Vec<f64>,
    /// Extremes of output/input over configurations of positive mass.
    pub max_ratio: f64,
    pub min_ratio: f64,
}

/// Output law of [`shift_replacement`] with an exact resampler, from the
/// input table: the output assigns `ω` the input mass of `ω` reweighted by
/// the ratio of the (A, B) marginal at the unshifted values to the
/// (A, B + shift) marginal.
pub fn shift_measure_ratio(table: &ExactTable, a: &EdgeSet, b: &EdgeSet, shift: Site) -> Result<ShiftRatio> {
    let lat = *table.graph();
    let b_shift = shifted_edges(&lat, b, shift)?;
    if !a.is_disjoint(b) || !a.is_disjoint(&b_shift) {
        bail!(InvalidParameter, "A must be disjoint from B and from B + {shift}");
    }
    // B's edges paired with their images, in B's order
    let pairs: Vec<(usize, usize)> = b
        .iter()
        .map(|e| {
            let (s, t) = lat.edge_sites(e);
            (e, lat.edge_between(s + shift, t + shift).expect("checked above"))
        })
        .collect();
    let a_edges: Vec<usize> = a.iter().collect();
    let key = |mask: u64, second: &mut dyn Iterator<Item = usize>| -> u64 {
        let mut k = 0u64;
        for (i, &e) in a_edges.iter().enumerate() {
            k |= (mask >> e & 1) << i;
        }
        for (j, e) in second.enumerate() {
            k |= (mask >> e & 1) << (a_edges.len() + j);
        }
        k
    };
    let mut m_unshifted: HashMap<u64, f64> = HashMap::new();
    let mut m_shifted: HashMap<u64, f64> = HashMap::new();
    for (mask, &p) in table.probs().iter().enumerate() {
        let mask = mask as u64;
        *m_unshifted
            .entry(key(mask, &mut pairs.iter().map(|p| p.0)))
            .or_default() += p;
        *m_shifted.entry(key(mask, &mut pairs.iter().map(|p| p.1))).or_default() += p;
    }
    let mut output = Vec::with_capacity(table.probs().len());
    let (mut max_ratio, mut min_ratio) = (0.0f64, f64::INFINITY);
    for (mask, &p) in table.probs().iter().enumerate() {
        let k = key(mask as u64, &mut pairs.iter().map(|p| p.1));
        let denom = m_shifted[&k];
        let num = m_unshifted.get(&k).copied().unwrap_or(0.0);
        let r = if denom > 0.0 { num / denom } else { 0.0 };
        output.push(p * r);
        if p > 0.0 {
            max_ratio = max_ratio.max(r);
            min_ratio = min_ratio.min(r);
        }
    }
    Ok(ShiftRatio {
        output,
        max_ratio,
        min_ratio,
    })
}

/// Opens every edge of the nearest-neighbour path `path`.
pub fn open_path_seal(cfg: &BondConfig, path: &[Site]) -> Result<BondConfig> {
    let mut out = cfg.clone();
    out.open_path(path)?;
    Ok(out)
}

/// Correlation between stored and updated open counts over repeated
/// surgeries with a fixed exterior.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularityReport {
    pub correlation: f64,
    /// Three-sigma Fisher interval for the correlation.
    pub lo: f64,
    pub hi: f64,
    pub reps: usize,
}

impl RegularityReport {
    pub fn independent(&self) -> bool {
        self.lo <= 0.0 && 0.0 <= self.hi
    }
}

/// Draws the region from its exact conditional given `exterior`, runs the
/// surgery, and correlates stored with updated open counts.
pub fn regular_action_check<G: BondGraph, R: Resampler>(
    exterior: &BondConfig<G>,
    region: &EdgeSet,
    params: &FKParams,
    resampler: &mut R,
    reps: usize,
    rng: &mut ChainRng,
) -> Result<RegularityReport> {
    if reps < 10 {
        bail!(InsufficientData, "need at least 10 repetitions, got {reps}");
    }
    let law = region_conditional(exterior, region, params)?;
    let mut stored = Vec::with_capacity(reps);
    let mut updated = Vec::with_capacity(reps);
    let mut input = exterior.clone();
    for _ in 0..reps {
        set_region(&mut input, region, draw_index(&law, rng.gen()) as u64);
        let out = sector_storage_replacement(&input, region, params, resampler, rng)?;
        stored.push(out.stored_open() as f64);
        updated.push(out.updated_open() as f64);
    }
    let r = correlation(&stored, &updated);
    let (lo, hi) = if r.is_nan() {
        // one side constant: nothing to correlate
        (0.0, 0.0)
    } else {
        let z = r.clamp(-1.0, 1.0).atanh();
        let s = 3.0 / ((reps as f64) - 3.0).sqrt();
        ((z - s).tanh(), (z + s).tanh())
    };
    Ok(RegularityReport {
        correlation: r,
        lo,
        hi,
        reps,
    })
}

/// Groups configuration masks, in mask order, into at most `cells` cells
/// of roughly equal probability. Returns the cell of each mask and the cell
/// probabilities; cells that would be empty are dropped.
pub fn equal_mass_cells(probs: &[f64], cells: usize) -> (Vec<usize>, Vec<f64>) {
    let mut raw = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for &p in probs {
        let mid = acc + p / 2.0;
        raw.push(((mid * cells as f64) as usize).min(cells - 1));
        acc += p;
    }
    let mut relabel = vec![usize::MAX; cells];
    let mut next = 0;
    for &c in &raw {
        if relabel[c] == usize::MAX {
            relabel[c] = next;
            next += 1;
        }
    }
    let cell_of: Vec<usize> = raw.iter().map(|&c| relabel[c]).collect();
    let mut mass = vec![0.0; next];
    for (&c, &p) in cell_of.iter().zip(probs) {
        mass[c] += p;
    }
    (cell_of, mass)
}

/// Law of the full-plane output when the input is drawn from the table.
#[derive(Debug, Clone, PartialEq)]
pub struct InvarianceReport {
    pub chi2: f64,
    pub p_value: f64,
    pub cells: usize,
    /// TV between the empirical output law and the table.
    pub tv: f64,
    pub reps: usize,
}

/// Draws exact inputs from `table`, applies the storage-replacement surgery
/// and compares the output law with the table.
pub fn two_step_invariance<G: BondGraph, R: Resampler>(
    table: &ExactTable<G>,
    region: &EdgeSet,
    params: &FKParams,
    resampler: &mut R,
    reps: usize,
    cells: usize,
    rng: &mut ChainRng,
) -> Result<InvarianceReport> {
    if cells < 2 || reps == 0 {
        bail!(InvalidParameter, "need at least 2 cells and one repetition");
    }
    let probs = table.probs();
    let (cell_of, cell_mass) = equal_mass_cells(probs, cells);
    let mut counts = vec![0u64; cell_mass.len()];
    let mut hist = vec![0u64; probs.len()];
    for _ in 0..reps {
        let input = table.config(draw_index(probs, rng.gen()) as u64);
        let out = sector_storage_replacement(&input, region, params, resampler, rng)?;
        let mask = out.omega1.bits().to_mask() as usize;
        counts[cell_of[mask]] += 1;
        hist[mask] += 1;
    }
    let (chi2, p_value) = chi_square_gof(&counts, &cell_mass)?;
    let emp: Vec<f64> = hist.iter().map(|&c| c as f64 / reps as f64).collect();
    Ok(InvarianceReport {
        chi2,
        p_value,
        cells: cell_mass.len(),
        tv: total_variation(&emp, probs),
        reps,
    })
}

/// Empirical TV between the resampler's output on the region and the exact
/// conditional law, with the exterior fixed.
pub fn conditional_tv<G: BondGraph, R: Resampler>(
    cfg: &BondConfig<G>,
    region: &EdgeSet,
    params: &FKParams,
    resampler: &mut R,
    reps: usize,
    rng: &mut ChainRng,
) -> Result<f64> {
    if reps == 0 {
        bail!(InvalidParameter, "need at least one repetition");
    }
    let law = region_conditional(cfg, region, params)?;
    let mut hist = vec![0u64; law.len()];
    for _ in 0..reps {
        let out = sector_storage_replacement(cfg, region, params, resampler, rng)?;
        hist[region_mask(&out.omega1, region) as usize] += 1;
    }
    let emp: Vec<f64> = hist.iter().map(|&c| c as f64 / reps as f64).collect();
    Ok(total_variation(&emp, &law))
}
