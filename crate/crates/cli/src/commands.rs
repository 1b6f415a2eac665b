use std::f64::consts::FRAC_PI_4;
use std::path::Path;

use anyhow::Context;
use rcm_core::conditioning::{
    exc_tail, gd_tail, restricted_chain, theta_tail, AnalysisSettings, EventKind, EventSpec, RunSettings, SearchTally,
    TailCurve, ThetaOf,
};
use rcm_core::geometry::props::fuzz_suites;
use rcm_core::rng::chain_rng;
use rcm_core::sampler::{
    boundary_proximity_warnings, decay_and_mixing_check, exact_enumerate, two_point_connectivity, FkChain, RunLength,
    SweepKind,
};
use rcm_core::stats::total_variation;
use rcm_core::surgery::{region_edges, regular_action_check, HeatBathResampler, Region};
use rcm_core::wulff::{build_wulff, choose_constants, estimate_xi, probe_sites, DirectionData, XiTable, DEFAULT_GRID};
use rcm_core::{BondGraph, BoundaryCondition, FKParams, LatticeBox, Site};

use crate::config::Config;
use crate::output::{opt, Outcome, Table};
use crate::{CliError, Common};

const MODEL_KEYS: &[&str] = &["beta", "p", "q", "bc", "seed"];

const LARGE_BOX: i32 = 64;
const LARGE_N: i64 = 16;

pub const SAMPLE_HELP: &str = "\
Config keys: beta | p, q, bc (free|wired, default free), N (box half-width, default 16),
  burnin (1000), sweeps (10000), chains (4), seed (1), distances (1..N/2 along the x axis),
  radii (1..N/2), allow_large (false; needed for N > 64).

Outputs:
  connectivity.csv  x1,x2,y1,y2,estimate,stderr,n   P(x <-> y) with jackknife errors
  decay.csv         radius,estimate,log_estimate,log_stderr   P(0 <-> boundary of the radius box)
  mixing.csv        distance,ratio_deviation,stderr   |P(D,F)/(P(D)P(F)) - 1| for two edges";

pub const WULFF_HELP: &str = "\
Config keys: beta | p, q, bc, N (default 16), burnin (1000), sweeps (10000), chains (4), seed (1),
  directions (probe directions in [0, pi/4], default 3), distances (2,3,4,5,6,7,8),
  grid (table size, multiple of 8, default 720), allow_large.

Outputs:
  estimates.csv  theta,xi,stderr        fitted decay rate per probe direction
  wulff.csv      theta,xi,stderr        symmetrised table on the full grid (usable as xi_file)
  shape.csv      x,y                    unit-area shape vertices, counterclockwise
The manifest records the shape scale, area, diameter and the angular constants q0, c0.";

pub const CONDITION_HELP: &str = "\
Config keys: beta | p, q, bc, n (scale), N (box half-width, default 2n), event
  (area_only|area_and_centred, default area_only), burnin (200), thin (10), samples (500 per chain),
  chains (4), seed (1), search_directions (8), xi_file (wulff.csv from `rcm wulff`; default: disk),
  allow_censored (false), allow_large (false; needed for n > 16 or N > 64), min_eff (100),
  u_max (60), t_max (10), t_step (0.25), eps_max (1), eps_step (0.05).

Outputs:
  tails_theta.csv  u,estimate,lo,hi,n_eff,hits     P(n theta > u) for the widest site-free angle
  tails_exc.csv    t,estimate,lo,hi,n_eff,hits     P(excess area >= n t)
  tails_gd.csv     eps,estimate,lo,hi,n_eff,hits   P(global distortion > eps n)
  regen.csv        chain,sweep,area,exc,gd,cen_x,cen_y,theta_circuit,theta_cluster,rg_circuit,
                   rg_cluster,cluster_subset,maxreg,pair_angle,r_min,r_max   one row per retained state
A tail table is omitted (and the reason noted in the manifest) when the run has too few samples.";

pub const SURGERY_HELP: &str = "\
Config keys: beta | p, q, bc, N (default 4), radius (sector radius, default 2.5), burnin (100),
  reps (200), seed (1).

Outputs:
  surgery.csv  region_edges,reps,correlation,lo,hi,independent
Stored versus resampled open-edge counts in the quarter sector, on an exterior drawn from the chain.";

pub const ORACLE_HELP: &str = "\
Config keys: beta | p, q, bc, N (default 1), burnin (1000), sweeps (100000), seed (1).

Outputs:
  oracle.csv  sampler,mask,exact,empirical   configuration law (edge bitmask) by sampler
The manifest records the total variation distance per sampler and their maximum.";

pub const GEOM_HELP: &str = "\
Config keys: trials (10000), seed (1).

Outputs:
  geom.csv  suite,trials,violations,first_failure
Exits with status 1 when any suite reports a violation.";

fn keys(extra: &[&'static str]) -> Vec<&'static str> {
    MODEL_KEYS.iter().chain(extra).copied().collect()
}

fn fk_params(cfg: &mut Config) -> Result<FKParams, CliError> {
    let q: f64 = cfg.require("q")?;
    let bc: BoundaryCondition = cfg.get_or("bc", "free".to_string())?.parse()?;
    let seed: u64 = cfg.get_or("seed", 1)?;
    let params = match (cfg.has("beta"), cfg.has("p")) {
        (true, true) => return Err(CliError::Usage("give either `beta` or `p`, not both".into())),
        (true, false) => FKParams::new(cfg.require("beta")?, q, bc, seed)?,
        (false, true) => FKParams::from_p(cfg.require("p")?, q, bc, seed)?,
        (false, false) => return Err(CliError::Usage("missing required key `beta` (or `p`)".into())),
    };
    Ok(params)
}

fn note_params(out: &mut Outcome, params: &FKParams, chains: usize) {
    out.note("p", params.p());
    out.note("beta", params.beta());
    out.note(
        "chain_seeds",
        format!("stream c of seed {} for chains c = 0..{chains}", params.seed()),
    );
    if let Some(w) = params.criticality_warning() {
        out.note("warning", w);
    }
}

fn guard_box(cfg: &mut Config, half_width: i32) -> Result<(), CliError> {
    let allow: bool = cfg.get_or("allow_large", false)?;
    if half_width > LARGE_BOX && !allow {
        return Err(CliError::Refused(format!(
            "box half-width N = {half_width} exceeds {LARGE_BOX}; set allow_large = true to run anyway"
        )));
    }
    Ok(())
}

fn run_length(cfg: &mut Config, burnin: usize, sweeps: usize) -> Result<RunLength, CliError> {
    let b = cfg.get_or("burnin", burnin)?;
    let s = cfg.get_or("sweeps", sweeps)?;
    let c = cfg.get_or("chains", 4)?;
    Ok(RunLength::new(b, s, c)?)
}

fn half_range(n: i32) -> Vec<i32> {
    (1..=(n / 2).max(2)).collect()
}

pub fn sample(cfg: &mut Config, _: &Common) -> Result<Outcome, CliError> {
    cfg.check_keys(
        "sample",
        &keys(&["N", "burnin", "sweeps", "chains", "distances", "radii", "allow_large"]),
    )?;
    let params = fk_params(cfg)?;
    let n: i32 = cfg.get_or("N", 16)?;
    guard_box(cfg, n)?;
    let run = run_length(cfg, 1000, 10_000)?;
    let distances = cfg.list_or("distances", &half_range(n))?;
    let radii = cfg.list_or("radii", &half_range(n))?;
    let lattice = LatticeBox::new(n)?;

    let mut out = Outcome::new("sample");
    note_params(&mut out, &params, run.chains);
    let pairs: Vec<(Site, Site)> = distances.iter().map(|&d| (Site::ORIGIN, Site::new(d, 0))).collect();
    for w in boundary_proximity_warnings(lattice, &pairs) {
        out.note("warning", w);
    }

    let mut conn = Table::new("connectivity.csv", &["x1", "x2", "y1", "y2", "estimate", "stderr", "n"]);
    for (est, (x, y)) in two_point_connectivity(&params, lattice, &pairs, run)?
        .iter()
        .zip(&pairs)
    {
        conn.push(vec![
            x.x.to_string(),
            x.y.to_string(),
            y.x.to_string(),
            y.y.to_string(),
            est.estimate.to_string(),
            est.stderr.to_string(),
            est.n.to_string(),
        ]);
    }

    let report = decay_and_mixing_check(&params, lattice, &radii, run)?;
    let mut decay = Table::new("decay.csv", &["radius", "estimate", "log_estimate", "log_stderr"]);
    for p in &report.points {
        decay.push(vec![
            p.radius.to_string(),
            p.estimate.to_string(),
            p.log_estimate.to_string(),
            p.log_stderr.to_string(),
        ]);
    }
    let mut mixing = Table::new("mixing.csv", &["distance", "ratio_deviation", "stderr"]);
    for m in &report.mixing {
        mixing.push(vec![
            m.distance.to_string(),
            m.ratio_deviation.to_string(),
            m.stderr.to_string(),
        ]);
    }
    out.note(
        "decay_fit",
        format!(
            "slope {} ± {}, R2 {}",
            report.fit.slope, report.fit.slope_stderr, report.fit.r_squared
        ),
    );
    out.tables = vec![conn, decay, mixing];
    Ok(out)
}

pub fn wulff(cfg: &mut Config, _: &Common) -> Result<Outcome, CliError> {
    cfg.check_keys(
        "wulff",
        &keys(&[
            "N",
            "burnin",
            "sweeps",
            "chains",
            "directions",
            "distances",
            "grid",
            "allow_large",
        ]),
    )?;
    let params = fk_params(cfg)?;
    let n: i32 = cfg.get_or("N", 16)?;
    guard_box(cfg, n)?;
    let run = run_length(cfg, 1000, 10_000)?;
    let directions: usize = cfg.get_or("directions", 3)?;
    let distances: Vec<f64> = cfg.list_or("distances", &[2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0])?;
    let grid: usize = cfg.get_or("grid", DEFAULT_GRID)?;
    if directions == 0 {
        return Err(CliError::Usage("key `directions`: must be positive".into()));
    }
    let lattice = LatticeBox::new(n)?;
    let thetas: Vec<f64> = (0..directions)
        .map(|i| match directions {
            1 => 0.0,
            k => FRAC_PI_4 * i as f64 / (k - 1) as f64,
        })
        .collect();
    let probes: Vec<Vec<Site>> = thetas.iter().map(|&t| probe_sites(t, &distances)).collect();
    let pairs: Vec<(Site, Site)> = probes.iter().flatten().map(|&s| (Site::ORIGIN, s)).collect();

    let mut out = Outcome::new("wulff");
    note_params(&mut out, &params, run.chains);
    for w in boundary_proximity_warnings(lattice, &pairs) {
        out.note("warning", w);
    }
    let est = two_point_connectivity(&params, lattice, &pairs, run)?;
    let data: Vec<DirectionData> = thetas
        .iter()
        .enumerate()
        .map(|(i, &theta)| DirectionData {
            theta,
            points: distances
                .iter()
                .enumerate()
                .map(|(j, &k)| {
                    let e = &est[i * distances.len() + j];
                    (k, e.estimate, e.stderr)
                })
                .collect(),
        })
        .collect();
    let xi = estimate_xi(&data)?;
    let table = XiTable::from_estimates(grid, &xi)?;
    let shape = build_wulff(&table)?;
    let k = choose_constants(&shape)?;

    let mut estimates = Table::new("estimates.csv", &["theta", "xi", "stderr"]);
    for e in &xi {
        estimates.push(vec![e.theta.to_string(), e.xi.to_string(), e.stderr.to_string()]);
    }
    let mut full = Table::new("wulff.csv", &["theta", "xi", "stderr"]);
    for i in 0..table.len() {
        full.push(vec![
            table.theta(i).to_string(),
            table.values()[i].to_string(),
            table.stderrs()[i].to_string(),
        ]);
    }
    let mut poly = Table::new("shape.csv", &["x", "y"]);
    for v in shape.polygon() {
        poly.push(vec![v.x.to_string(), v.y.to_string()]);
    }
    out.note("lambda", shape.lambda());
    out.note("area", shape.area());
    out.note("diameter", shape.diameter());
    out.note("q0", k.q0);
    out.note("c0", k.c0);
    out.tables = vec![estimates, full, poly];
    Ok(out)
}

fn read_xi_file(path: &Path) -> Result<XiTable, CliError> {
    let mut r = csv::Reader::from_path(path)
        .map_err(|e| CliError::Usage(format!("key `xi_file`: cannot open {}: {e}", path.display())))?;
    let col = r
        .headers()
        .context("reading xi_file header")?
        .iter()
        .position(|h| h == "xi")
        .ok_or_else(|| CliError::Usage(format!("key `xi_file`: {} has no `xi` column", path.display())))?;
    let mut xi = Vec::new();
    for rec in r.records() {
        let rec = rec.context("reading xi_file")?;
        let v = rec.get(col).unwrap_or("");
        xi.push(
            v.trim()
                .parse::<f64>()
                .map_err(|e| CliError::Usage(format!("key `xi_file`: bad value `{v}`: {e}")))?,
        );
    }
    Ok(XiTable::from_values(xi)?)
}

fn grid(max: f64, step: f64, key: &str) -> Result<Vec<f64>, CliError> {
    if !(step > 0.0) || !(max >= 0.0) {
        return Err(CliError::Usage(format!(
            "key `{key}`: grid needs a positive step and nonnegative end"
        )));
    }
    let k = (max / step + 1e-9).floor() as usize;
    Ok((0..=k).map(|i| i as f64 * step).collect())
}

fn tail_table(file: &'static str, col: &'static str, curve: &TailCurve) -> Table {
    let mut t = Table::new(file, &[col, "estimate", "lo", "hi", "n_eff", "hits"]);
    for p in &curve.points {
        t.push(vec![
            p.x.to_string(),
            p.estimate.to_string(),
            p.lo.to_string(),
            p.hi.to_string(),
            p.n_eff.to_string(),
            p.hits.to_string(),
        ]);
    }
    t
}

pub fn condition(cfg: &mut Config, _: &Common) -> Result<Outcome, CliError> {
    cfg.check_keys(
        "condition",
        &keys(&[
            "n",
            "N",
            "event",
            "burnin",
            "thin",
            "samples",
            "chains",
            "search_directions",
            "xi_file",
            "allow_censored",
            "allow_large",
            "min_eff",
            "u_max",
            "t_max",
            "t_step",
            "eps_max",
            "eps_step",
        ]),
    )?;
    let params = fk_params(cfg)?;
    let n: i64 = cfg.require("n")?;
    if n < 1 {
        return Err(CliError::Usage("key `n`: must be at least 1".into()));
    }
    let half_width: i32 = cfg.get_or("N", 2 * n as i32)?;
    let allow_large: bool = cfg.get_or("allow_large", false)?;
    if (n > LARGE_N || half_width > LARGE_BOX) && !allow_large {
        return Err(CliError::Refused(format!(
            "n = {n}, N = {half_width} exceed n <= {LARGE_N}, N <= {LARGE_BOX}; set allow_large = true to run anyway"
        )));
    }
    let kind: EventKind = cfg.get_or("event", "area_only".to_string())?.parse()?;
    let settings = RunSettings {
        half_width,
        burnin_sweeps: cfg.get_or("burnin", 200)?,
        thin_sweeps: cfg.get_or("thin", 10)?,
        samples_per_chain: cfg.get_or("samples", 500)?,
        chains: cfg.get_or("chains", 4)?,
    };
    let event = EventSpec {
        n,
        kind,
        allow_censored: cfg.get_or("allow_censored", false)?,
    };
    let search_directions = cfg.get_or("search_directions", 8)?;
    let min_eff: f64 = cfg.get_or("min_eff", 100.0)?;
    let us = grid(cfg.get_or("u_max", 60.0)?, 1.0, "u_max")?;
    let ts = grid(cfg.get_or("t_max", 10.0)?, cfg.get_or("t_step", 0.25)?, "t_step")?;
    let eps = grid(cfg.get_or("eps_max", 1.0)?, cfg.get_or("eps_step", 0.05)?, "eps_step")?;

    let mut out = Outcome::new("condition");
    let (xi, source) = match cfg.optional::<String>("xi_file")? {
        Some(p) => (read_xi_file(Path::new(&p))?, p),
        None => (XiTable::constant(DEFAULT_GRID, 1.0)?, "disk (constant xi)".to_string()),
    };
    let shape = build_wulff(&xi)?;
    let analysis = AnalysisSettings {
        constants: choose_constants(&shape)?,
        shape,
        search_directions,
    };
    note_params(&mut out, &params, settings.chains);
    out.note("shape", source);
    out.note("q0", analysis.constants.q0);
    out.note("c0", analysis.constants.c0);

    let run = restricted_chain(&params, event, &settings, &analysis)?;
    out.note("samples", run.len());
    out.note("n_eff_theta", run.effective_samples(|r| r.theta_circuit));
    match run.gelman_rubin(|r| r.theta_circuit) {
        Ok(r) => out.note("r_hat_theta", r),
        Err(e) => out.note("r_hat_theta", format!("unavailable: {e}")),
    }
    let c = run.counters();
    out.note(
        "chain_counters",
        format!(
            "proposals {} flips {} rejected {} recomputed {}",
            c.proposals, c.flips, c.rejected, c.recomputed
        ),
    );
    let mut search = SearchTally::default();
    for s in run.records().filter_map(|r| r.search) {
        search.runs += s.runs;
        search.failed += s.failed;
        search.not_distinct += s.not_distinct;
        search.not_nested += s.not_nested;
        search.bad_pair += s.bad_pair;
    }
    out.note(
        "search",
        format!(
            "runs {} failed {} not_distinct {} not_nested {} bad_pair {}",
            search.runs, search.failed, search.not_distinct, search.not_nested, search.bad_pair
        ),
    );

    let tails = [
        ("tails_theta.csv", "u", theta_tail(&run, ThetaOf::Circuit, &us, min_eff)),
        ("tails_exc.csv", "t", exc_tail(&run, &ts, min_eff)),
        ("tails_gd.csv", "eps", gd_tail(&run, &eps, min_eff)),
    ];
    for (file, col, curve) in tails {
        match curve {
            Ok(curve) => {
                if let Some(f) = curve.fit {
                    out.note(
                        format!("{file} fit"),
                        format!("slope {} ± {}, R2 {}", f.slope, f.slope_stderr, f.r_squared),
                    );
                }
                out.tables.push(tail_table(file, col, &curve));
            }
            Err(e) => out.note(format!("{file} omitted"), e),
        }
    }

    let mut regen = Table::new(
        "regen.csv",
        &[
            "chain",
            "sweep",
            "area",
            "exc",
            "gd",
            "cen_x",
            "cen_y",
            "theta_circuit",
            "theta_cluster",
            "rg_circuit",
            "rg_cluster",
            "cluster_subset",
            "maxreg",
            "pair_angle",
            "r_min",
            "r_max",
        ],
    );
    for r in run.records() {
        regen.push(vec![
            r.chain.to_string(),
            r.sweep.to_string(),
            r.area.to_string(),
            r.exc.to_string(),
            r.gd.to_string(),
            r.cen.x.to_string(),
            r.cen.y.to_string(),
            r.theta_circuit.to_string(),
            r.theta_cluster.to_string(),
            r.rg_circuit.to_string(),
            r.rg_cluster.to_string(),
            r.cluster_subset.to_string(),
            opt(r.maxreg),
            opt(r.pair_angle),
            r.r_min.to_string(),
            r.r_max.to_string(),
        ]);
    }
    out.tables.push(regen);
    Ok(out)
}

pub fn surgery_check(cfg: &mut Config, common: &Common) -> Result<Outcome, CliError> {
    cfg.check_keys("surgery-check", &keys(&["N", "radius", "burnin", "reps"]))?;
    let params = fk_params(cfg)?;
    let n: i32 = cfg.get_or("N", 4)?;
    guard_box(cfg, n)?;
    let radius: f64 = cfg.get_or("radius", 2.5)?;
    let burnin: usize = cfg.get_or("burnin", 100)?;
    let reps: usize = cfg.get_or("reps", 200)?;
    let lattice = LatticeBox::new(n)?;
    let region = region_edges(
        &lattice,
        &Region::Sector {
            from: Site::new(1, 0),
            to: Site::new(0, 1),
            radius,
        },
    )?;
    if region.len() > common.max_edges_enumerate {
        return Err(CliError::Refused(format!(
            "sector has {} edges, above --max-edges-enumerate {}",
            region.len(),
            common.max_edges_enumerate
        )));
    }
    let mut chain = FkChain::new(lattice, params, 0);
    chain.run(SweepKind::Cluster, burnin);
    let mut rng = chain_rng(params.seed(), 1);
    let report = regular_action_check(
        chain.config(),
        &region,
        &params,
        &mut HeatBathResampler::default(),
        reps,
        &mut rng,
    )?;

    let mut out = Outcome::new("surgery-check");
    note_params(&mut out, &params, 2);
    let mut t = Table::new(
        "surgery.csv",
        &["region_edges", "reps", "correlation", "lo", "hi", "independent"],
    );
    t.push(vec![
        region.len().to_string(),
        report.reps.to_string(),
        report.correlation.to_string(),
        report.lo.to_string(),
        report.hi.to_string(),
        report.independent().to_string(),
    ]);
    out.tables.push(t);
    Ok(out)
}

pub fn oracle(cfg: &mut Config, common: &Common) -> Result<Outcome, CliError> {
    cfg.check_keys("oracle", &keys(&["N", "burnin", "sweeps"]))?;
    let params = fk_params(cfg)?;
    let n: i32 = cfg.get_or("N", 1)?;
    let burnin: usize = cfg.get_or("burnin", 1000)?;
    let sweeps: usize = cfg.get_or("sweeps", 100_000)?;
    let lattice = LatticeBox::new(n)?;
    let m = lattice.edge_count();
    if m > common.max_edges_enumerate {
        return Err(CliError::Refused(format!(
            "box has {m} edges, above --max-edges-enumerate {}",
            common.max_edges_enumerate
        )));
    }
    let exact = exact_enumerate(&lattice, &params)?;

    let mut out = Outcome::new("oracle");
    note_params(&mut out, &params, 2);
    let mut t = Table::new("oracle.csv", &["sampler", "mask", "exact", "empirical"]);
    let mut max_tv: f64 = 0.0;
    for (i, (name, kind)) in [("heat_bath", SweepKind::HeatBath), ("cluster", SweepKind::Cluster)]
        .into_iter()
        .enumerate()
    {
        let mut chain = FkChain::new(lattice, params, i as u64);
        chain.run(kind, burnin);
        let mut counts = vec![0u64; 1 << m];
        for _ in 0..sweeps {
            chain.sweep(kind);
            counts[chain.config().bits().to_mask() as usize] += 1;
        }
        let empirical: Vec<f64> = counts.iter().map(|&c| c as f64 / sweeps as f64).collect();
        let tv = total_variation(exact.probs(), &empirical);
        max_tv = max_tv.max(tv);
        out.note(format!("tv_{name}"), tv);
        for (mask, (&p, &q)) in exact.probs().iter().zip(&empirical).enumerate() {
            t.push(vec![name.to_string(), mask.to_string(), p.to_string(), q.to_string()]);
        }
    }
    out.note("max_tv", max_tv);
    // expected TV of an iid histogram of the same size, to read max_tv against
    let iid: f64 = exact
        .probs()
        .iter()
        .map(|&p| (2.0 * p * (1.0 - p) / (std::f64::consts::PI * sweeps as f64)).sqrt())
        .sum::<f64>()
        / 2.0;
    out.note("iid_tv_reference", iid);
    out.tables.push(t);
    Ok(out)
}

pub fn geom_test(cfg: &mut Config, _: &Common) -> Result<Outcome, CliError> {
    cfg.check_keys("geom-test", &["trials", "seed"])?;
    let trials: usize = cfg.get_or("trials", 10_000)?;
    let seed: u64 = cfg.get_or("seed", 1)?;
    let mut rng = chain_rng(seed, 0);
    let tallies = fuzz_suites(&mut rng, trials);

    let mut out = Outcome::new("geom-test");
    let mut t = Table::new("geom.csv", &["suite", "trials", "violations", "first_failure"]);
    let mut total = 0;
    for (name, s) in &tallies {
        total += s.violations;
        t.push(vec![
            name.to_string(),
            s.trials.to_string(),
            s.violations.to_string(),
            s.first_failure.clone().unwrap_or_default(),
        ]);
    }
    out.note("violations", total);
    if total > 0 {
        out.failure = Some(format!("{total} geometric property violations; see geom.csv"));
    }
    out.tables.push(t);
    Ok(out)
}
