//! Experiment configuration: TOML parsing, defaults and validation.
//!
//! Parsing is strict (unknown keys are errors). Validation never stops at
//! the first problem; every failed check is collected and reported.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bounds::{BoundConfig, DEFAULT_MC_HORIZON};
use crate::diagnostics::{Seeding, DEFAULT_INTERSECTION_HORIZON};
use crate::environment::{EnvFamily, EnvModel, DEFAULT_BETA_MAX};
use crate::localization::Radius;
use crate::polymer::DEFAULT_LEAK_BUDGET;
use crate::walk::{SlowlyVarying, WalkModel};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    FreeEnergy,
    PhaseScan,
    Overlap,
    Atoms,
    Fluct,
    Blocks,
    Bound,
    WalkCheck,
}

impl Kind {
    pub const ALL: [Kind; 8] = [
        Kind::FreeEnergy,
        Kind::PhaseScan,
        Kind::Overlap,
        Kind::Atoms,
        Kind::Fluct,
        Kind::Blocks,
        Kind::Bound,
        Kind::WalkCheck,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Kind::FreeEnergy => "free-energy",
            Kind::PhaseScan => "phase-scan",
            Kind::Overlap => "overlap",
            Kind::Atoms => "atoms",
            Kind::Fluct => "fluct",
            Kind::Blocks => "blocks",
            Kind::Bound => "bound",
            Kind::WalkCheck => "walk-check",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Kind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Kind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Kind::ALL.iter().map(|k| k.as_str()).collect();
                format!("unknown experiment kind `{s}` (expected one of {})", names.join(", "))
            })
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub kind: Option<String>,
    pub master_seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub replicas: Option<u64>,
    pub leak_budget: Option<f64>,
    pub share_seeds: Option<bool>,
    pub walk: Option<RawWalk>,
    pub env: Option<RawEnv>,
    pub grid: Option<RawGrid>,
    pub phase: Option<RawPhase>,
    pub overlap: Option<RawOverlap>,
    pub atoms: Option<RawAtoms>,
    pub fluct: Option<RawFluct>,
    pub blocks: Option<RawBlocks>,
    pub bound: Option<RawBound>,
    pub walk_check: Option<RawWalkCheck>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawWalk {
    pub alpha: Option<f64>,
    pub p0: Option<f64>,
    pub tail_tolerance: Option<f64>,
    pub tail_cut: Option<u64>,
    #[serde(rename = "L")]
    pub ell: Option<RawEll>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawEll {
    pub family: String,
    #[serde(default)]
    pub params: Vec<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawEnv {
    pub family: Option<String>,
    pub values: Option<Vec<f64>>,
    pub probs: Option<Vec<f64>>,
    pub beta_max: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawGrid {
    pub beta: Option<Vec<f64>>,
    pub n: Option<Vec<u64>>,
    pub alpha: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawPhase {
    pub n: Option<u64>,
    pub theta: Option<f64>,
    pub n_grid: Option<Vec<u64>>,
    pub intersection_horizon: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawOverlap {
    pub bracket: Option<[f64; 2]>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawAtoms {
    pub epsilon: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawFluct {
    pub eps_margin: Option<f64>,
    pub radius: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawBlocks {
    pub m: Option<u64>,
    pub l_half: Option<u64>,
    pub eps: Option<f64>,
    pub shift_delta: Option<f64>,
    pub tilt_radius: Option<u64>,
    pub stat_radius: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawBound {
    #[serde(rename = "C1")]
    pub c1: Option<u64>,
    #[serde(rename = "C2")]
    pub c2: Option<f64>,
    pub theta: Option<f64>,
    pub gamma: Option<f64>,
    pub k_cut: Option<u64>,
    pub mc_samples: Option<u64>,
    pub mc_horizon: Option<u64>,
    pub ladder: Option<u32>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawWalkCheck {
    pub horizon: Option<u64>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub master_seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub beta: Option<Vec<f64>>,
    pub c1: Option<u64>,
    pub c2: Option<f64>,
    pub theta: Option<f64>,
    pub gamma: Option<f64>,
    pub mc_samples: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct WalkSpec {
    pub alpha: f64,
    #[serde(rename = "L")]
    pub ell: SlowlyVarying,
    pub p0: f64,
    pub tail_tolerance: f64,
    pub tail_cut: Option<u64>,
}

impl WalkSpec {
    pub fn build(&self) -> Result<WalkModel> {
        self.build_at(self.alpha)
    }

    pub fn build_at(&self, alpha: f64) -> Result<WalkModel> {
        match self.tail_cut {
            Some(k) => WalkModel::with_tail_cut(alpha, self.ell, self.p0, k),
            None => WalkModel::build(alpha, self.ell, self.p0, self.tail_tolerance),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PhaseSpec {
    pub n: u64,
    pub theta: f64,
    pub n_grid: Vec<u64>,
    pub intersection_horizon: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlocksSpec {
    pub m: u64,
    /// Explicit half-width; `None` uses the asymptotic formula with `eps`.
    pub l_half: Option<u64>,
    pub eps: f64,
    pub shift_delta: f64,
    pub tilt_radius: Option<u64>,
    pub stat_radius: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundSpec {
    pub c1: u64,
    pub c2: f64,
    pub theta: f64,
    pub gamma: f64,
    pub k_cut: u64,
    pub mc_samples: u64,
    pub mc_horizon: u64,
    pub ladder: u32,
}

impl BoundSpec {
    pub fn config(&self, seed: u64) -> BoundConfig {
        BoundConfig {
            c1: self.c1,
            c2: self.c2,
            theta: self.theta,
            gamma: self.gamma,
            k_cut: self.k_cut,
            mc_samples: self.mc_samples,
            mc_horizon: self.mc_horizon,
            seed,
        }
    }
}

/// A fully defaulted and validated experiment.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub master_seed: u64,
    /// 0 lets the pool pick one thread per core.
    pub threads: usize,
    pub out: PathBuf,
    pub replicas: u64,
    pub leak_budget: f64,
    pub seeding: Seeding,
    pub walk: WalkSpec,
    pub env: EnvFamily,
    pub beta_max: f64,
    pub beta: Vec<f64>,
    pub n: Vec<u64>,
    pub alpha: Vec<f64>,
    pub phase: PhaseSpec,
    pub overlap_bracket: [f64; 2],
    pub atoms_epsilon: f64,
    pub fluct: Radius,
    pub blocks: BlocksSpec,
    pub bound: BoundSpec,
    pub walk_check_horizon: u64,
}

impl ExperimentConfig {
    pub fn env_model(&self) -> Result<EnvModel> {
        EnvModel::new(self.env.clone(), self.beta_max)
    }

    pub fn n_max(&self) -> u64 {
        self.n.iter().copied().max().unwrap_or(0)
    }
}

pub fn parse(text: &str) -> Result<RawConfig> {
    toml::from_str(text).map_err(|e| Error::Config(vec![e.to_string()]))
}

/// Fills defaults and checks every field; all failures are returned together.
pub fn validate(raw: RawConfig, kind: Kind, ov: &Overrides) -> Result<ExperimentConfig> {
    let mut errs: Vec<String> = Vec::new();
    let mut check = |ok: bool, msg: String| {
        if !ok {
            errs.push(msg);
        }
    };

    if let Some(k) = &raw.kind {
        match k.parse::<Kind>() {
            Ok(k) if k != kind => check(
                false,
                format!("kind: file declares `{k}` but the command is `{kind}`"),
            ),
            Ok(_) => {}
            Err(e) => check(false, format!("kind: {e}")),
        }
    }

    let replicas = raw.replicas.unwrap_or(100);
    let min_replicas = match kind {
        Kind::FreeEnergy | Kind::PhaseScan => 2,
        Kind::WalkCheck | Kind::Bound => 0,
        _ => 1,
    };
    check(
        replicas >= min_replicas,
        format!("replicas: must be at least {min_replicas} for {kind}"),
    );
    let leak_budget = raw.leak_budget.unwrap_or(DEFAULT_LEAK_BUDGET);
    check(
        leak_budget > 0.0 && leak_budget < 1.0,
        "leak_budget: must lie in (0, 1)".into(),
    );

    // walk
    let rw = raw.walk.unwrap_or_default();
    let alpha = rw.alpha.unwrap_or(1.5);
    check(
        alpha.is_finite() && alpha > 0.0,
        format!("walk.alpha: must be a positive real, got {alpha}"),
    );
    let p0 = rw.p0.unwrap_or(0.5);
    check(
        (0.0..1.0).contains(&p0),
        format!("walk.p0: must lie in [0, 1), got {p0}"),
    );
    let tail_tolerance = rw.tail_tolerance.unwrap_or(1e-4);
    check(
        tail_tolerance > 0.0 && tail_tolerance < 1.0,
        "walk.tail_tolerance: must lie in (0, 1)".into(),
    );
    if let Some(k) = rw.tail_cut {
        check(k >= 1, "walk.tail_cut: must be at least 1".into());
    }
    let ell = match rw.ell {
        None => SlowlyVarying::constant(),
        Some(e) => match (e.family.as_str(), e.params.as_slice()) {
            ("constant", []) => SlowlyVarying::constant(),
            ("log-power", [g]) if g.is_finite() => SlowlyVarying::log_power(*g),
            ("constant", _) => {
                check(
                    false,
                    "walk.L.params: the constant family takes no parameters \
                     (its constant is fixed by normalization)"
                        .into(),
                );
                SlowlyVarying::constant()
            }
            ("log-power", _) => {
                check(false, "walk.L.params: log-power takes one finite exponent [gamma]".into());
                SlowlyVarying::constant()
            }
            (f, _) => {
                check(
                    false,
                    format!("walk.L.family: unknown family `{f}` (expected constant or log-power)"),
                );
                SlowlyVarying::constant()
            }
        },
    };
    let walk = WalkSpec {
        alpha,
        ell,
        p0,
        tail_tolerance,
        tail_cut: rw.tail_cut,
    };

    // env
    let re = raw.env.unwrap_or_default();
    let beta_max = re.beta_max.unwrap_or(DEFAULT_BETA_MAX);
    let family = match re.family.as_deref().unwrap_or("gaussian") {
        "gaussian" | "rademacher" if re.values.is_some() || re.probs.is_some() => {
            check(false, "env.values/env.probs: only the tabulated family takes a table".into());
            EnvFamily::Gaussian
        }
        "gaussian" => EnvFamily::Gaussian,
        "rademacher" => EnvFamily::Rademacher,
        "tabulated" => match (re.values, re.probs) {
            (Some(values), Some(probs)) => EnvFamily::Tabulated { values, probs },
            _ => {
                check(false, "env: the tabulated family needs both values and probs".into());
                EnvFamily::Gaussian
            }
        },
        f => {
            check(
                false,
                format!("env.family: unknown family `{f}` (expected gaussian, rademacher or tabulated)"),
            );
            EnvFamily::Gaussian
        }
    };
    let env_model = EnvModel::new(family.clone(), beta_max);
    if let Err(e) = &env_model {
        check(false, format!("env: {e}"));
    }
    let gaussian = matches!(family, EnvFamily::Gaussian);

    // grid
    let rg = raw.grid.unwrap_or_default();
    let beta = ov
        .beta
        .clone()
        .or(rg.beta)
        .unwrap_or_else(|| vec![1.0]);
    for &b in &beta {
        check(
            b.is_finite() && b >= 0.0 && b <= beta_max,
            format!("grid.beta: {b} must lie in [0, beta_max = {beta_max}]"),
        );
    }
    let n = rg.n.unwrap_or_else(|| vec![64]);
    for &v in &n {
        check(v >= 1, "grid.n: entries must be at least 1".into());
    }
    let alpha_grid = rg.alpha.unwrap_or_else(|| vec![alpha]);
    let needs_beta = !matches!(kind, Kind::WalkCheck);
    check(!needs_beta || !beta.is_empty(), "grid.beta: must not be empty".into());
    let needs_n = matches!(
        kind,
        Kind::FreeEnergy | Kind::Overlap | Kind::Atoms | Kind::Fluct | Kind::Blocks | Kind::WalkCheck
    );
    check(!needs_n || !n.is_empty(), "grid.n: must not be empty".into());

    // phase
    let rp = raw.phase.unwrap_or_default();
    let phase_n = rp.n.unwrap_or(64);
    let phase = PhaseSpec {
        n: phase_n,
        theta: rp.theta.unwrap_or(0.5),
        n_grid: rp.n_grid.unwrap_or_else(|| {
            [phase_n / 8, phase_n / 4, phase_n / 2, phase_n]
                .into_iter()
                .filter(|&v| v > 0)
                .collect()
        }),
        intersection_horizon: rp.intersection_horizon.unwrap_or(DEFAULT_INTERSECTION_HORIZON),
    };
    if kind == Kind::PhaseScan {
        check(phase.n >= 1, "phase.n: must be at least 1".into());
        check(
            phase.theta > 0.0 && phase.theta < 1.0,
            "phase.theta: must lie in (0, 1)".into(),
        );
        check(phase.n_grid.len() >= 2, "phase.n_grid: needs at least two horizons".into());
        check(
            phase.intersection_horizon >= 10,
            "phase.intersection_horizon: must be at least 10".into(),
        );
        for &a in &alpha_grid {
            check(a.is_finite() && a > 0.0, format!("grid.alpha: {a} must be positive"));
        }
    }

    // overlap, atoms
    let overlap_bracket = raw.overlap.and_then(|o| o.bracket).unwrap_or([0.05, 20.0]);
    if kind == Kind::Overlap {
        check(
            overlap_bracket[0] > 0.0 && overlap_bracket[0] < overlap_bracket[1],
            "overlap.bracket: needs 0 < lo < hi".into(),
        );
    }
    let atoms_epsilon = raw.atoms.and_then(|a| a.epsilon).unwrap_or(0.05);
    if kind == Kind::Atoms {
        check(
            atoms_epsilon > 0.0 && atoms_epsilon < 1.0,
            "atoms.epsilon: must lie in (0, 1)".into(),
        );
    }

    // fluct
    let rf = raw.fluct.unwrap_or_default();
    let fluct = match (rf.radius, rf.eps_margin) {
        (Some(r), None) => Radius::User { r },
        (None, eps) => Radius::Theorem {
            eps: eps.unwrap_or(0.1),
        },
        (Some(r), Some(_)) => {
            if kind == Kind::Fluct {
                check(false, "fluct: set either radius or eps_margin, not both".into());
            }
            Radius::User { r }
        }
    };
    if kind == Kind::Fluct {
        match fluct {
            Radius::User { r } => check(r >= 1, "fluct.radius: must be at least 1".into()),
            Radius::Theorem { eps } => {
                check(eps > 0.0 && eps < 1.0, "fluct.eps_margin: must lie in (0, 1)".into());
                check(alpha > 1.0, "walk.alpha: theorem-radius mode needs alpha > 1".into());
                check(gaussian, "env.family: theorem-radius mode needs a Gaussian environment".into());
                check(n.iter().all(|&v| v >= 2), "grid.n: entries must be at least 2".into());
            }
        }
    }

    // blocks
    let rb = raw.blocks.unwrap_or_default();
    let blocks = BlocksSpec {
        m: rb.m.unwrap_or(1),
        l_half: rb.l_half,
        eps: rb.eps.unwrap_or(0.1),
        shift_delta: rb.shift_delta.unwrap_or(0.1),
        tilt_radius: rb.tilt_radius,
        stat_radius: rb.stat_radius.unwrap_or(2),
    };
    if kind == Kind::Blocks {
        check(gaussian, "env.family: block experiments need a Gaussian environment".into());
        check(
            n.iter().all(|&v| v >= 2 && v % 2 == 0),
            "grid.n: block experiments need even N ≥ 2".into(),
        );
        if let Some(l) = blocks.l_half {
            check(l >= 1, "blocks.l_half: must be at least 1".into());
        }
        check(blocks.eps > 0.0 && blocks.eps < 1.0, "blocks.eps: must lie in (0, 1)".into());
        check(blocks.shift_delta > 0.0, "blocks.shift_delta: must be positive".into());
        check(p0 > 0.0, "walk.p0: the shift bound needs a lazy walk (p0 > 0)".into());
        if let Some(r) = blocks.tilt_radius {
            check(r >= 1, "blocks.tilt_radius: must be at least 1".into());
        }
        check(blocks.stat_radius >= 1, "blocks.stat_radius: must be at least 1".into());
    }

    // bound
    let rbd = raw.bound.unwrap_or_default();
    let d = BoundConfig::defaults(alpha);
    let bound = BoundSpec {
        c1: ov.c1.or(rbd.c1).unwrap_or(d.c1),
        c2: ov.c2.or(rbd.c2).unwrap_or(d.c2),
        theta: ov.theta.or(rbd.theta).unwrap_or(d.theta),
        gamma: ov.gamma.or(rbd.gamma).unwrap_or(d.gamma),
        k_cut: rbd.k_cut.unwrap_or(d.k_cut),
        mc_samples: ov.mc_samples.or(rbd.mc_samples).unwrap_or(d.mc_samples),
        mc_horizon: rbd.mc_horizon.unwrap_or(DEFAULT_MC_HORIZON),
        ladder: rbd.ladder.unwrap_or(3),
    };
    if kind == Kind::Bound {
        if let Err(Error::Config(list)) = bound.config(0).validate(alpha) {
            errs_extend(&mut check, list);
        }
        check(gaussian, "env.family: the bound pipeline needs a Gaussian environment".into());
        check(
            alpha > 1.0 && alpha <= 2.0,
            format!("walk.alpha: the bound pipeline needs alpha in (1, 2], got {alpha}"),
        );
        check(beta.iter().all(|&b| b > 0.0), "grid.beta: the bound needs beta > 0".into());
        check(bound.mc_horizon >= 1, "bound.mc_horizon: must be at least 1".into());
    }

    let walk_check_horizon = raw.walk_check.and_then(|w| w.horizon).unwrap_or(4096);
    if kind == Kind::WalkCheck {
        check(walk_check_horizon >= 10, "walk_check.horizon: must be at least 10".into());
    }

    if errs.is_empty() && kind != Kind::PhaseScan {
        if let Err(e) = walk.build() {
            errs.push(format!("walk: {e}"));
        }
    }
    if !errs.is_empty() {
        return Err(Error::Config(errs));
    }

    Ok(ExperimentConfig {
        kind,
        master_seed: ov.master_seed.or(raw.master_seed).unwrap_or(0),
        threads: ov.threads.or(raw.threads).unwrap_or(0),
        out: ov
            .out
            .clone()
            .or(raw.out)
            .unwrap_or_else(|| PathBuf::from("out")),
        replicas,
        leak_budget,
        seeding: if raw.share_seeds.unwrap_or(false) {
            Seeding::Shared
        } else {
            Seeding::PerCell
        },
        walk,
        env: family,
        beta_max,
        beta,
        n,
        alpha: alpha_grid,
        phase,
        overlap_bracket,
        atoms_epsilon,
        fluct,
        blocks,
        bound,
        walk_check_horizon,
    })
}

fn errs_extend(check: &mut impl FnMut(bool, String), list: Vec<String>) {
    for m in list {
        check(false, m);
    }
}

pub fn load(text: &str, kind: Kind, ov: &Overrides) -> Result<ExperimentConfig> {
    validate(parse(text)?, kind, ov)
}
