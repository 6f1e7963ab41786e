//! Batch experiments: one validated config in, CSV/JSON artifacts and a
//! checksummed manifest out.
//!
//! Every artifact is assembled in memory from results gathered in replica
//! order, so the bytes depend only on the config and the master seed, never
//! on the thread count.

pub mod config;

use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::bounds::{bracket_with_ladder, conjugate_slowly_varying, Certifier};
use crate::diagnostics::{endpoint_histogram, overlap_log_ratio, phase_scan, Ensemble, ScanSettings, WalkFamily};
use crate::localization::{
    exchangeability_frequency, fluctuation_probability, shift_rn_bound, tilt_identity, AtomTrace,
    BlockLayout, Radius,
};
use crate::stats::mean_se;
use crate::walk::{intersection_probability, Recurrence};
use crate::{Error, Result};

pub use config::{load, validate, ExperimentConfig, Kind, Overrides};

/// Floats are written with 17 significant digits so they round-trip.
pub fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

/// An in-memory CSV table.
pub struct Table {
    w: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Result<Self> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).map_err(csv_err)?;
        Ok(Table { w })
    }

    pub fn row(&mut self, fields: &[String]) -> Result<()> {
        self.w.write_record(fields).map_err(csv_err)
    }

    pub fn finish(self) -> Result<Vec<u8>> {
        self.w
            .into_inner()
            .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

#[derive(Debug, Clone)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedEntry {
    pub cell: String,
    pub seed: u64,
    pub replicas: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CellFailure {
    pub cell: String,
    pub error: String,
}

/// What an experiment produced before anything touches the disk.
#[derive(Debug, Default)]
pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    pub seeds: Vec<SeedEntry>,
    pub failures: Vec<CellFailure>,
    /// Lines worth echoing to the terminal.
    pub notes: Vec<String>,
}

impl Outcome {
    fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.artifacts.push(Artifact {
            name: name.to_string(),
            bytes,
        });
    }

    fn fail(&mut self, cell: String, e: Error) {
        self.failures.push(CellFailure {
            cell,
            error: e.to_string(),
        });
    }

    fn ensemble(&mut self, cfg: &ExperimentConfig, cell: String, coords: &[u64]) -> Result<Ensemble> {
        let seed = cfg.seeding.seed(cfg.master_seed, coords);
        self.seeds.push(SeedEntry {
            cell,
            seed,
            replicas: cfg.replicas,
        });
        let mut ens = Ensemble::new(std::sync::Arc::new(cfg.env_model()?), seed, cfg.replicas);
        ens.leak_budget = cfg.leak_budget;
        Ok(ens)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub kind: Kind,
    pub code_version: &'static str,
    pub master_seed: u64,
    pub threads: usize,
    pub config: ExperimentConfig,
    pub files: Vec<FileEntry>,
    pub seed_ledger: Vec<SeedEntry>,
    pub failures: Vec<CellFailure>,
    /// Some cells failed; their rows are missing from the outputs.
    pub partial: bool,
    pub wall_clock_seconds: f64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Runs the experiment on a dedicated pool of `cfg.threads` workers.
pub fn execute(cfg: &ExperimentConfig) -> Result<Outcome> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::invalid("threads", e.to_string()))?;
    pool.install(|| match cfg.kind {
        Kind::FreeEnergy => free_energy(cfg),
        Kind::PhaseScan => phase(cfg),
        Kind::Overlap => overlap(cfg),
        Kind::Atoms => atoms(cfg),
        Kind::Fluct => fluct(cfg),
        Kind::Blocks => blocks(cfg),
        Kind::Bound => bound(cfg),
        Kind::WalkCheck => walk_check(cfg),
    })
}

/// Executes and writes every artifact plus `manifest.json` under `cfg.out`.
pub fn run(cfg: &ExperimentConfig) -> Result<(RunManifest, Vec<String>)> {
    let start = Instant::now();
    let outcome = execute(cfg)?;
    let dir = Path::new(&cfg.out);
    fs::create_dir_all(dir)?;
    let mut files = Vec::with_capacity(outcome.artifacts.len());
    for a in &outcome.artifacts {
        fs::write(dir.join(&a.name), &a.bytes)?;
        files.push(FileEntry {
            name: a.name.clone(),
            sha256: sha256_hex(&a.bytes),
            bytes: a.bytes.len() as u64,
        });
    }
    let manifest = RunManifest {
        kind: cfg.kind,
        code_version: env!("CARGO_PKG_VERSION"),
        master_seed: cfg.master_seed,
        threads: cfg.threads,
        config: cfg.clone(),
        files,
        seed_ledger: outcome.seeds,
        partial: !outcome.failures.is_empty(),
        failures: outcome.failures,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    };
    fs::write(dir.join("manifest.json"), serde_json::to_vec_pretty(&manifest)?)?;
    Ok((manifest, outcome.notes))
}

fn beta_cell(b: f64) -> String {
    format!("beta={b}")
}

fn free_energy(cfg: &ExperimentConfig) -> Result<Outcome> {
    let walk = cfg.walk.build()?;
    let mut out = Outcome::default();
    let n_max = cfg.n_max();
    let mut fe = Table::new(&[
        "beta", "N", "replicas", "p_hat", "p_se", "mean_zhat", "zhat_se", "median_zhat",
    ])?;
    let mut hist = Table::new(&[
        "beta", "N", "bin", "x_lo", "x_hi", "polymer_mass", "free_mass",
    ])?;
    for (i, &beta) in cfg.beta.iter().enumerate() {
        let ens = out.ensemble(cfg, beta_cell(beta), &[beta.to_bits()])?;
        let traces = match ens.traces(&walk, beta, n_max) {
            Ok(t) => t,
            Err(e) => {
                out.fail(beta_cell(beta), e);
                continue;
            }
        };
        for &n in &cfg.n {
            let logs: Vec<f64> = traces.iter().map(|t| t[n as usize - 1].log_zhat).collect();
            let per_step: Vec<f64> = logs.iter().map(|l| l / n as f64).collect();
            let z: Vec<f64> = logs.iter().map(|l| l.exp()).collect();
            let p = mean_se(&per_step);
            let zs = mean_se(&z);
            fe.row(&[
                fmt_f(beta),
                n.to_string(),
                cfg.replicas.to_string(),
                fmt_f(p.mean),
                fmt_f(p.se),
                fmt_f(zs.mean),
                fmt_f(zs.se),
                fmt_f(crate::stats::median(&z)),
            ])?;
        }
        let mut tr = Table::new(&[
            "replica_id",
            "n",
            "log_zhat",
            "overlap",
            "max_endpoint_mass",
            "argmax_x",
            "leaked_mass",
        ])?;
        for (r, t) in traces.iter().enumerate() {
            for s in t {
                tr.row(&[
                    r.to_string(),
                    s.n.to_string(),
                    fmt_f(s.log_zhat),
                    fmt_f(s.overlap),
                    fmt_f(s.max_endpoint_mass),
                    s.argmax_x.to_string(),
                    fmt_f(s.leaked_mass),
                ])?;
            }
        }
        out.add(&format!("traces_beta{i}.csv"), tr.finish()?);
        match endpoint_histogram(&ens, &walk, beta, n_max) {
            Ok(h) => {
                let w = h.bin as i64;
                for (j, (p, f)) in h.polymer.iter().zip(&h.free).enumerate() {
                    let b = h.first + j as i64;
                    hist.row(&[
                        fmt_f(beta),
                        n_max.to_string(),
                        b.to_string(),
                        (b * w).to_string(),
                        (b * w + w - 1).to_string(),
                        fmt_f(*p),
                        fmt_f(*f),
                    ])?;
                }
            }
            Err(e) => out.fail(format!("{} endpoint", beta_cell(beta)), e),
        }
    }
    out.add("free_energy.csv", fe.finish()?);
    out.add("endpoint.csv", hist.finish()?);
    Ok(out)
}

#[derive(Serialize)]
struct PhaseSummary<'a> {
    config: &'a ExperimentConfig,
    rows: &'a [crate::diagnostics::PhaseRow],
}

fn phase(cfg: &ExperimentConfig) -> Result<Outcome> {
    let mut out = Outcome::default();
    let family = WalkFamily {
        ell: cfg.walk.ell,
        p0: cfg.walk.p0,
        tail_tolerance: cfg.walk.tail_tolerance,
    };
    let settings = ScanSettings {
        n: cfg.phase.n,
        theta: cfg.phase.theta,
        n_grid: cfg.phase.n_grid.clone(),
        intersection_horizon: cfg.phase.intersection_horizon,
    };
    let cells: Vec<(f64, f64)> = cfg
        .alpha
        .iter()
        .flat_map(|&a| cfg.beta.iter().map(move |&b| (a, b)))
        .collect();
    let ens = Ensemble {
        leak_budget: cfg.leak_budget,
        ..Ensemble::new(std::sync::Arc::new(cfg.env_model()?), cfg.master_seed, cfg.replicas)
    };
    for &(a, b) in &cells {
        out.seeds.push(SeedEntry {
            cell: format!("alpha={a} beta={b}"),
            seed: cfg.seeding.seed(cfg.master_seed, &[a.to_bits(), b.to_bits()]),
            replicas: cfg.replicas,
        });
    }
    let rows = phase_scan(&ens, &family, &cells, &settings, cfg.seeding)?;
    let mut t = Table::new(&[
        "alpha", "beta", "N", "theta", "replicas", "p_hat", "p_se", "fm_rate", "fm_se",
        "overlap_sum", "weak_crit", "strong_crit", "verdict",
    ])?;
    for row in &rows {
        match &row.result {
            Ok(p) => t.row(&[
                fmt_f(p.alpha),
                fmt_f(p.beta),
                p.n.to_string(),
                fmt_f(p.theta),
                p.replicas.to_string(),
                fmt_f(p.p_hat.mean),
                fmt_f(p.p_hat.se),
                fmt_f(p.fm_rate),
                fmt_f(p.fm_se),
                fmt_f(p.overlap_sum),
                p.weak.to_string(),
                p.strong.to_string(),
                p.verdict.to_string(),
            ])?,
            Err(e) => {
                out.failures.push(CellFailure {
                    cell: format!("alpha={} beta={}", row.alpha, row.beta),
                    error: e.clone(),
                });
                let nan = fmt_f(f64::NAN);
                t.row(&[
                    fmt_f(row.alpha),
                    fmt_f(row.beta),
                    settings.n.to_string(),
                    fmt_f(settings.theta),
                    cfg.replicas.to_string(),
                    nan.clone(),
                    nan.clone(),
                    nan.clone(),
                    nan.clone(),
                    nan,
                    "error".into(),
                    "error".into(),
                    "error".into(),
                ])?
            }
        }
    }
    out.add("phase.csv", t.finish()?);
    let summary = PhaseSummary {
        config: cfg,
        rows: &rows,
    };
    out.add("phase.json", serde_json::to_vec_pretty(&summary)?);
    Ok(out)
}

fn overlap(cfg: &ExperimentConfig) -> Result<Outcome> {
    let walk = cfg.walk.build()?;
    let mut out = Outcome::default();
    let [lo, hi] = cfg.overlap_bracket;
    let mut t = Table::new(&[
        "beta", "N", "replicas", "flagged", "median", "q05", "q95", "bracket_lo", "bracket_hi",
        "fraction_inside",
    ])?;
    for &beta in &cfg.beta {
        let ens = out.ensemble(cfg, beta_cell(beta), &[beta.to_bits()])?;
        match overlap_log_ratio(&ens, &walk, beta, &cfg.n) {
            Ok(rows) => {
                for r in rows {
                    t.row(&[
                        fmt_f(beta),
                        r.n.to_string(),
                        cfg.replicas.to_string(),
                        r.flagged.to_string(),
                        fmt_f(r.median),
                        fmt_f(r.q05),
                        fmt_f(r.q95),
                        fmt_f(lo),
                        fmt_f(hi),
                        fmt_f(r.fraction_inside(lo, hi)),
                    ])?;
                }
            }
            Err(e) => out.fail(beta_cell(beta), e),
        }
    }
    out.add("overlap.csv", t.finish()?);
    Ok(out)
}

fn atoms(cfg: &ExperimentConfig) -> Result<Outcome> {
    let walk = cfg.walk.build()?;
    let mut out = Outcome::default();
    let eps = cfg.atoms_epsilon;
    let n_max = cfg.n_max();
    let mut summary = Table::new(&[
        "beta", "N", "epsilon", "replicas", "mean_fraction", "fraction_se", "min_fraction",
        "max_fraction",
    ])?;
    let mut curve = Table::new(&["beta", "n", "epsilon", "atom_rate", "mean_max_mass"])?;
    for &beta in &cfg.beta {
        let ens = out.ensemble(cfg, beta_cell(beta), &[beta.to_bits()])?;
        let traces = match ens.traces(&walk, beta, n_max) {
            Ok(t) => t,
            Err(e) => {
                out.fail(beta_cell(beta), e);
                continue;
            }
        };
        let atoms: Vec<AtomTrace> = traces.iter().map(|t| AtomTrace::from_trace(t, eps)).collect();
        for &n in &cfg.n {
            let f: Vec<f64> = atoms.iter().map(|a| a.fraction_between(n / 2, n)).collect();
            let m = mean_se(&f);
            summary.row(&[
                fmt_f(beta),
                n.to_string(),
                fmt_f(eps),
                cfg.replicas.to_string(),
                fmt_f(m.mean),
                fmt_f(m.se),
                fmt_f(f.iter().copied().fold(f64::INFINITY, f64::min)),
                fmt_f(f.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
            ])?;
        }
        let r = atoms.len() as f64;
        for i in 0..n_max as usize {
            let rate = atoms.iter().filter(|a| a.indicator[i]).count() as f64 / r;
            let mass = atoms.iter().map(|a| a.max_mass[i]).sum::<f64>() / r;
            curve.row(&[
                fmt_f(beta),
                (i + 1).to_string(),
                fmt_f(eps),
                fmt_f(rate),
                fmt_f(mass),
            ])?;
        }
    }
    out.add("atoms.csv", summary.finish()?);
    out.add("atom_curve.csv", curve.finish()?);
    Ok(out)
}

fn fluct(cfg: &ExperimentConfig) -> Result<Outcome> {
    let walk = cfg.walk.build()?;
    let mut out = Outcome::default();
    let mut t = Table::new(&[
        "beta", "N", "mode", "radius", "r_used", "degenerate", "replicas", "mean", "se",
    ])?;
    for &beta in &cfg.beta {
        for &n in &cfg.n {
            let cell = format!("beta={beta} N={n}");
            let ens = out.ensemble(cfg, cell.clone(), &[beta.to_bits(), n])?;
            match fluctuation_probability(&ens, &walk, beta, n, cfg.fluct) {
                Ok(f) => {
                    let mode = match f.radius {
                        Radius::Theorem { .. } => "theorem",
                        Radius::User { .. } => "user",
                    };
                    if mode == "theorem" {
                        out.notes.push(format!(
                            "beta={beta} N={n}: theorem radius {} (corridor |x| < {}){}",
                            fmt_f(f.radius_value),
                            f.r_used,
                            if f.degenerate { ", below 1" } else { "" }
                        ));
                    }
                    t.row(&[
                        fmt_f(beta),
                        n.to_string(),
                        mode.into(),
                        fmt_f(f.radius_value),
                        f.r_used.to_string(),
                        f.degenerate.to_string(),
                        cfg.replicas.to_string(),
                        fmt_f(f.mean.mean),
                        fmt_f(f.mean.se),
                    ])?;
                }
                Err(e) => out.fail(cell, e),
            }
        }
    }
    out.add("fluct.csv", t.finish()?);
    Ok(out)
}

fn blocks(cfg: &ExperimentConfig) -> Result<Outcome> {
    let walk = cfg.walk.build()?;
    let spec = &cfg.blocks;
    let mut out = Outcome::default();
    let mut ex = Table::new(&[
        "beta", "N", "L", "M", "replicas", "hits", "frequency", "se", "expected", "ci_lo",
        "ci_hi",
    ])?;
    let mut sh = Table::new(&[
        "N", "L", "k", "h", "min_ratio", "argmin_x", "excluded_mass", "floor", "potter_floor",
        "delta",
    ])?;
    let mut tilt = Table::new(&[
        "beta", "N", "r_tilt", "r_stat", "replicas", "direct", "direct_se", "reweighted",
        "reweighted_se", "difference", "difference_se",
    ])?;
    let mut shifted_for = Vec::new();
    for &beta in &cfg.beta {
        for &n in &cfg.n {
            let cell = format!("beta={beta} N={n}");
            let layout = match spec.l_half {
                Some(l) => BlockLayout::new(n, l, spec.m),
                None => BlockLayout::theorem(n, cfg.walk.alpha, beta, spec.eps, spec.m),
            };
            let layout = match layout {
                Ok(l) => l,
                Err(e) => {
                    out.fail(cell, e);
                    continue;
                }
            };
            let ens = out.ensemble(cfg, cell.clone(), &[beta.to_bits(), n])?;
            match exchangeability_frequency(&ens, &walk, beta, &layout) {
                Ok(x) => ex.row(&[
                    fmt_f(beta),
                    n.to_string(),
                    layout.l_half.to_string(),
                    layout.m.to_string(),
                    x.replicas.to_string(),
                    x.hits.to_string(),
                    fmt_f(x.frequency),
                    fmt_f(x.se),
                    fmt_f(x.expected),
                    fmt_f(x.ci.0),
                    fmt_f(x.ci.1),
                ])?,
                Err(e) => out.fail(cell.clone(), e),
            }
            if let Some(r_tilt) = spec.tilt_radius {
                match tilt_identity(&ens, &walk, beta, n, r_tilt, spec.stat_radius) {
                    Ok(ti) => tilt.row(&[
                        fmt_f(beta),
                        n.to_string(),
                        r_tilt.to_string(),
                        spec.stat_radius.to_string(),
                        cfg.replicas.to_string(),
                        fmt_f(ti.direct.mean),
                        fmt_f(ti.direct.se),
                        fmt_f(ti.reweighted.mean),
                        fmt_f(ti.reweighted.se),
                        fmt_f(ti.difference.mean),
                        fmt_f(ti.difference.se),
                    ])?,
                    Err(e) => out.fail(format!("{cell} tilt"), e),
                }
            }
            // the shift bound depends on (N, L) only
            if shifted_for.contains(&(n, layout.l_half)) {
                continue;
            }
            shifted_for.push((n, layout.l_half));
            for k in layout.ks().filter(|&k| k != 0) {
                match shift_rn_bound(&walk, &layout, k, spec.shift_delta) {
                    Ok(b) => sh.row(&[
                        n.to_string(),
                        layout.l_half.to_string(),
                        k.to_string(),
                        b.scan.h.to_string(),
                        fmt_f(b.scan.min_ratio),
                        b.scan.argmin_x.to_string(),
                        fmt_f(b.scan.excluded_mass),
                        fmt_f(b.floor),
                        fmt_f(b.potter_floor),
                        fmt_f(spec.shift_delta),
                    ])?,
                    Err(e) => out.fail(format!("N={n} L={} k={k} shift", layout.l_half), e),
                }
            }
        }
    }
    out.add("blocks.csv", ex.finish()?);
    out.add("shift_bound.csv", sh.finish()?);
    if spec.tilt_radius.is_some() {
        out.add("tilt.csv", tilt.finish()?);
    }
    Ok(out)
}

#[derive(Serialize)]
struct BoundSummary<'a> {
    config: &'a ExperimentConfig,
    conjugate: Option<crate::bounds::ConjugateForms>,
    reports: Vec<crate::bounds::BoundReport>,
}

fn bound(cfg: &ExperimentConfig) -> Result<Outcome> {
    let walk = cfg.walk.build()?;
    let env = cfg.env_model()?;
    let mut out = Outcome::default();
    let mut t = Table::new(&[
        "beta", "rung", "C1", "C2", "theta", "gamma", "K_cut", "mc_samples", "n_of_beta", "a_n",
        "delta_n", "cost_factor", "tail_sum", "block_term", "block_se", "block_over_bound",
        "bracket", "bracket_over_bound", "p_upper", "candidate", "certified_by",
    ])?;
    let mut reports = Vec::new();
    for &beta in &cfg.beta {
        let seed = cfg.seeding.seed(cfg.master_seed, &[beta.to_bits()]);
        out.seeds.push(SeedEntry {
            cell: beta_cell(beta),
            seed,
            replicas: cfg.bound.mc_samples,
        });
        match bracket_with_ladder(&walk, &env, beta, &cfg.bound.config(seed), cfg.bound.ladder) {
            Ok(rungs) => {
                for (i, r) in rungs.into_iter().enumerate() {
                    t.row(&[
                        fmt_f(beta),
                        i.to_string(),
                        r.config.c1.to_string(),
                        fmt_f(r.config.c2),
                        fmt_f(r.config.theta),
                        fmt_f(r.config.gamma),
                        r.config.k_cut.to_string(),
                        r.config.mc_samples.to_string(),
                        r.n_of_beta.to_string(),
                        fmt_f(r.a_n),
                        fmt_f(r.delta_n),
                        fmt_f(r.cost_factor),
                        fmt_f(r.tail_sum),
                        fmt_f(r.block_term),
                        fmt_f(r.block_se),
                        fmt_f(r.block_over_bound),
                        fmt_f(r.bracket),
                        fmt_f(r.bracket_over_bound),
                        r.p_upper.map(fmt_f).unwrap_or_default(),
                        fmt_f(r.candidate),
                        match r.certified_by {
                            Some(Certifier::OverBound) => "over-bound".into(),
                            Some(Certifier::MonteCarlo) => "monte-carlo".into(),
                            None => String::new(),
                        },
                    ])?;
                    reports.push(r);
                }
            }
            Err(e) => out.fail(beta_cell(beta), e),
        }
    }
    out.add("bound.csv", t.finish()?);
    let summary = BoundSummary {
        config: cfg,
        conjugate: conjugate_slowly_varying(walk.alpha(), &walk.ell()).ok(),
        reports,
    };
    out.add("bound.json", serde_json::to_vec_pretty(&summary)?);
    Ok(out)
}

fn walk_check(cfg: &ExperimentConfig) -> Result<Outcome> {
    let walk = cfg.walk.build()?;
    let mut out = Outcome::default();
    let h = walk.entropy();
    let rec = walk.classify_recurrence();
    let (pi, pi_err) = match rec {
        Recurrence::Transient => match intersection_probability(&walk, cfg.walk_check_horizon) {
            Ok(i) => (i.pi_p, i.error_bound),
            Err(e) => {
                out.fail("intersection".into(), e);
                (f64::NAN, f64::NAN)
            }
        },
        Recurrence::Recurrent => (1.0, 0.0),
    };
    let mut t = Table::new(&[
        "alpha", "L_family", "L_gamma", "p0", "c", "tail_cut", "eps_tail", "entropy",
        "entropy_tail", "recurrence", "pi_p", "pi_p_err",
    ])?;
    t.row(&[
        fmt_f(walk.alpha()),
        walk.ell().name().into(),
        fmt_f(walk.ell().gamma()),
        fmt_f(walk.p0()),
        fmt_f(walk.c()),
        walk.tail_cut().to_string(),
        fmt_f(walk.eps_tail()),
        fmt_f(h.total()),
        fmt_f(h.tail),
        rec.to_string(),
        fmt_f(pi),
        fmt_f(pi_err),
    ])?;
    out.add("walk.csv", t.finish()?);
    let mut s = Table::new(&["n", "a_n", "l_n"])?;
    for &n in &cfg.n {
        let a = walk.scaling_at(n);
        s.row(&[
            n.to_string(),
            a.to_string(),
            fmt_f(a as f64 / (n as f64).powf(1.0 / walk.alpha())),
        ])?;
    }
    out.add("scaling.csv", s.finish()?);
    Ok(out)
}
