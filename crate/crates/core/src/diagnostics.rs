//! Free energy, fractional moments, overlaps and disorder-regime criteria.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::environment::{EnvField, EnvModel};
use crate::error::{Error, Result};
use crate::polymer::{PathConstraint, Propagator, StepStats, DEFAULT_LEAK_BUDGET};
use crate::rng::cell_seed;
use crate::stats::{jackknife, mean_se, ols, quantile, MeanSe, Z99};
use crate::walk::{intersection_probability, Intersection, Recurrence, SlowlyVarying, WalkModel};

/// A family of independent environment replicas sharing one law and seed.
#[derive(Debug, Clone)]
pub struct Ensemble {
    pub env: Arc<EnvModel>,
    pub seed: u64,
    pub replicas: u64,
    /// Cap on the mass trimmed from the transfer-matrix window.
    pub leak_budget: f64,
}

impl Ensemble {
    pub fn new(env: Arc<EnvModel>, seed: u64, replicas: u64) -> Self {
        Ensemble {
            env,
            seed,
            replicas,
            leak_budget: DEFAULT_LEAK_BUDGET,
        }
    }

    pub fn field(&self, replica: u64) -> EnvField {
        EnvField::new(self.env.clone(), self.seed, replica)
    }

    /// Evaluates `f` on every replica in parallel; results are in replica order.
    pub fn map<T, F>(&self, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(u64, &EnvField) -> Result<T> + Sync + Send,
    {
        (0..self.replicas)
            .into_par_iter()
            .map(|r| f(r, &self.field(r)))
            .collect()
    }

    /// Step statistics of an unconstrained run of `steps` steps per replica.
    pub fn traces(&self, walk: &WalkModel, beta: f64, steps: u64) -> Result<Vec<Vec<StepStats>>> {
        let lambda = self.env.lambda(beta)?;
        self.map(|_, field| {
            Propagator::new(walk, beta, lambda, self.leak_budget)
                .run(field, steps, &PathConstraint::None)
                .map(|r| r.trace)
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FreeEnergy {
    /// Mean of (1/N) log Ẑ_N over replicas.
    pub p_hat: MeanSe,
    pub per_replica: Vec<f64>,
}

impl FreeEnergy {
    /// p̂ + z₀.₉₉·SE < 0.
    pub fn negative_at_99(&self) -> bool {
        self.p_hat.mean + Z99 * self.p_hat.se < 0.0
    }
}

pub fn free_energy(ens: &Ensemble, walk: &WalkModel, beta: f64, n: u64) -> Result<FreeEnergy> {
    if ens.replicas < 2 {
        return Err(Error::invalid("replicas", "free energy needs at least 2 replicas"));
    }
    if n == 0 {
        return Err(Error::invalid("N", "must be at least 1"));
    }
    let traces = ens.traces(walk, beta, n)?;
    let per_replica: Vec<f64> = traces
        .iter()
        .map(|t| t.last().expect("n >= 1").log_zhat / n as f64)
        .collect();
    Ok(FreeEnergy {
        p_hat: mean_se(&per_replica),
        per_replica,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentRow {
    pub n: u64,
    /// Estimate of E[Ẑ_N^θ].
    pub moment: MeanSe,
}

#[derive(Debug, Clone, Serialize)]
pub struct FractionalMoment {
    pub theta: f64,
    pub rows: Vec<MomentRow>,
    /// Slope of log E[Ẑ_N^θ] against N.
    pub rate: f64,
    /// Jackknife standard error of the slope over replicas.
    pub rate_se: f64,
}

impl FractionalMoment {
    pub fn decaying_at_99(&self) -> bool {
        self.rate + Z99 * self.rate_se < 0.0
    }
}

/// E[Ẑ_N^θ] on `n_grid`, every grid point read off the same replica runs.
pub fn fractional_moment(
    ens: &Ensemble,
    walk: &WalkModel,
    beta: f64,
    theta: f64,
    n_grid: &[u64],
) -> Result<FractionalMoment> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::invalid("theta", "must lie in (0, 1)"));
    }
    if n_grid.is_empty() {
        return Err(Error::invalid("N_grid", "must be nonempty"));
    }
    let n_max = n_grid.iter().copied().max().expect("nonempty");
    // powers[r][g] = Ẑ_{N_g}^θ for replica r
    let powers: Vec<Vec<f64>> = if n_max == 0 {
        vec![vec![1.0; n_grid.len()]; ens.replicas as usize]
    } else {
        ens.traces(walk, beta, n_max)?
            .into_iter()
            .map(|t| {
                n_grid
                    .iter()
                    .map(|&n| {
                        if n == 0 {
                            1.0
                        } else {
                            (theta * t[(n - 1) as usize].log_zhat).exp()
                        }
                    })
                    .collect()
            })
            .collect()
    };
    let rows: Vec<MomentRow> = n_grid
        .iter()
        .enumerate()
        .map(|(g, &n)| {
            let col: Vec<f64> = powers.iter().map(|p| p[g]).collect();
            MomentRow {
                n,
                moment: mean_se(&col),
            }
        })
        .collect();

    let xs: Vec<f64> = n_grid.iter().map(|&n| n as f64).collect();
    let slope = |skip: Option<usize>| {
        let ys: Vec<f64> = (0..n_grid.len())
            .map(|g| {
                let (sum, cnt) = powers
                    .iter()
                    .enumerate()
                    .filter(|(r, _)| Some(*r) != skip)
                    .fold((0.0, 0usize), |(s, c), (_, p)| (s + p[g], c + 1));
                (sum / cnt as f64).ln()
            })
            .collect();
        ols(&xs, &ys).0
    };
    let (rate, rate_se) = if n_grid.len() < 2 {
        (f64::NAN, f64::NAN)
    } else {
        jackknife(powers.len(), slope)
    };
    Ok(FractionalMoment {
        theta,
        rows,
        rate,
        rate_se,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RecursionTrace {
    /// ε = max_N 2·P(S_N ∉ Λ_N)^θ.
    pub epsilon: f64,
    /// u_0 = 1, u_N = ε + exp(−c3/(2 b_N)) (u_{N−1} − ε).
    pub bound: Vec<f64>,
    /// The linear form (1 − c3/|Λ_N|) u_{N−1} + (2 c3/|Λ_N|) P(S_N ∉ Λ_N)^θ
    /// with |Λ_N| = 2 b_N.
    pub linear: Vec<f64>,
}

/// Iterates the one-step fractional-moment bound with Λ_N = (−b_N, b_N).
pub fn fractional_moment_recursion_trace(
    theta: f64,
    c3: f64,
    b: &[f64],
    tail_probs: &[f64],
) -> Result<RecursionTrace> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::invalid("theta", "must lie in (0, 1)"));
    }
    if !(c3 > 0.0 && c3.is_finite()) {
        return Err(Error::invalid("c3", "must be positive"));
    }
    if b.len() != tail_probs.len() {
        return Err(Error::invalid("tail_probs", "must have one entry per b_N"));
    }
    if b.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::invalid("b_sequence", "entries must be positive"));
    }
    if tail_probs.iter().any(|&t| !(0.0..=1.0).contains(&t)) {
        return Err(Error::invalid("tail_probs", "entries must be probabilities"));
    }
    let epsilon = tail_probs
        .iter()
        .map(|t| 2.0 * t.powf(theta))
        .fold(0.0, f64::max);
    let mut bound = Vec::with_capacity(b.len() + 1);
    let mut linear = Vec::with_capacity(b.len() + 1);
    bound.push(1.0);
    linear.push(1.0);
    let (mut u, mut v) = (1.0f64, 1.0f64);
    for (&bn, &t) in b.iter().zip(tail_probs) {
        u = epsilon + (-c3 / (2.0 * bn)).exp() * (u - epsilon);
        v = (1.0 - c3 / (2.0 * bn)).max(0.0) * v + c3 / bn * t.powf(theta);
        bound.push(u);
        linear.push(v.min(1.0));
    }
    Ok(RecursionTrace {
        epsilon,
        bound,
        linear,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RatioRow {
    pub n: u64,
    /// Σ_{n≤N} I_n / (−log Ẑ_N) for replicas with −log Ẑ_N > 0, in replica order.
    pub ratios: Vec<f64>,
    /// Replicas excluded because −log Ẑ_N ≤ 0.
    pub flagged: usize,
    pub median: f64,
    pub q05: f64,
    pub q95: f64,
}

impl RatioRow {
    /// Fraction of all replicas (flagged ones count as outside) with a ratio
    /// in `[lo, hi]`.
    pub fn fraction_inside(&self, lo: f64, hi: f64) -> f64 {
        let total = self.ratios.len() + self.flagged;
        if total == 0 {
            return f64::NAN;
        }
        let inside = self.ratios.iter().filter(|&&r| r >= lo && r <= hi).count();
        inside as f64 / total as f64
    }
}

pub fn overlap_log_ratio(
    ens: &Ensemble,
    walk: &WalkModel,
    beta: f64,
    n_grid: &[u64],
) -> Result<Vec<RatioRow>> {
    if n_grid.contains(&0) {
        return Err(Error::invalid("N_grid", "entries must be at least 1"));
    }
    let n_max = match n_grid.iter().copied().max() {
        Some(n) => n,
        None => return Ok(Vec::new()),
    };
    let traces = ens.traces(walk, beta, n_max)?;
    Ok(n_grid
        .iter()
        .map(|&n| {
            let mut ratios = Vec::new();
            let mut flagged = 0;
            for t in &traces {
                let head = &t[..n as usize];
                let denom = -head.last().expect("n >= 1").log_zhat;
                if denom > 0.0 {
                    let sum: f64 = head.iter().map(|s| s.overlap).sum();
                    ratios.push(sum / denom);
                } else {
                    flagged += 1;
                }
            }
            RatioRow {
                n,
                median: quantile(&ratios, 0.5),
                q05: quantile(&ratios, 0.05),
                q95: quantile(&ratios, 0.95),
                ratios,
                flagged,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    Holds,
    Fails,
    Inapplicable,
    Undecided,
}

impl std::fmt::Display for Criterion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Criterion::Holds => "holds",
            Criterion::Fails => "fails",
            Criterion::Inapplicable => "inapplicable",
            Criterion::Undecided => "undecided",
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionReport {
    pub verdict: Criterion,
    /// Right-hand side minus left-hand side; positive when the criterion holds.
    pub margin: f64,
    /// Half-width of the uncertainty on `margin`.
    pub uncertainty: f64,
    pub pi_p: Option<Intersection>,
}

/// Horizon used for π_p by the weak-disorder criterion.
pub const DEFAULT_INTERSECTION_HORIZON: u64 = 1 << 12;

/// λ(2β) − 2λ(β) < −log π_p.
pub fn weak_disorder_criterion(
    env: &EnvModel,
    walk: &WalkModel,
    beta: f64,
    horizon: u64,
) -> Result<CriterionReport> {
    if walk.classify_recurrence() == Recurrence::Recurrent {
        return Ok(CriterionReport {
            verdict: Criterion::Inapplicable,
            margin: f64::NAN,
            uncertainty: f64::NAN,
            pi_p: None,
        });
    }
    let gap = env.lambda(2.0 * beta)? - 2.0 * env.lambda(beta)?;
    let pi = intersection_probability(walk, horizon)?;
    let margin = -pi.pi_p.ln() - gap;
    let uncertainty = pi.error_bound / pi.pi_p;
    let verdict = if margin.abs() <= uncertainty {
        Criterion::Undecided
    } else if margin > 0.0 {
        Criterion::Holds
    } else {
        Criterion::Fails
    };
    Ok(CriterionReport {
        verdict,
        margin,
        uncertainty,
        pi_p: Some(pi),
    })
}

/// βλ'(β) − λ(β) > H(q), with H the entropy of the increment law.
pub fn strong_disorder_criterion(
    env: &EnvModel,
    walk: &WalkModel,
    beta: f64,
) -> Result<CriterionReport> {
    let lhs = beta * env.lambda_prime(beta)? - env.lambda(beta)?;
    let h = walk.entropy();
    let margin = lhs - h.total();
    Ok(CriterionReport {
        verdict: if margin > 0.0 {
            Criterion::Holds
        } else {
            Criterion::Fails
        },
        margin,
        uncertainty: h.tail.abs(),
        pi_p: None,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EndpointDistance {
    /// Bin width, a_N.
    pub bin: u64,
    pub per_replica: Vec<f64>,
    pub mean: MeanSe,
    pub median: f64,
    pub q90: f64,
}

/// Total-variation distance between the polymer and free endpoint laws at
/// time N, both coarse-grained into bins of width a_N.
pub fn scaled_endpoint_distance(
    ens: &Ensemble,
    walk: &WalkModel,
    beta: f64,
    n: u64,
) -> Result<EndpointDistance> {
    if n == 0 {
        return Err(Error::invalid("N", "must be at least 1"));
    }
    let lambda = ens.env.lambda(beta)?;
    let bin = walk.scaling_at(n);
    let free = Propagator::new(walk, 0.0, 0.0, ens.leak_budget).run(
        &ens.field(0),
        n,
        &PathConstraint::None,
    )?;
    let free_bins = binned(&free.state.rho, free.state.x_lo, bin);
    let per_replica = ens.map(|_, field| {
        let r = Propagator::new(walk, beta, lambda, ens.leak_budget).run(
            field,
            n,
            &PathConstraint::None,
        )?;
        let b = binned(&r.state.rho, r.state.x_lo, bin);
        Ok(total_variation(&b, &free_bins))
    })?;
    Ok(EndpointDistance {
        bin,
        mean: mean_se(&per_replica),
        median: quantile(&per_replica, 0.5),
        q90: quantile(&per_replica, 0.9),
        per_replica,
    })
}

/// Replica-mean polymer endpoint law and the free law at time N, binned at
/// width a_N over a common range of bins.
#[derive(Debug, Clone, Serialize)]
pub struct EndpointHistogram {
    pub bin: u64,
    /// Index of the first bin; bin b covers [b·a_N, (b+1)·a_N).
    pub first: i64,
    pub polymer: Vec<f64>,
    pub free: Vec<f64>,
}

pub fn endpoint_histogram(
    ens: &Ensemble,
    walk: &WalkModel,
    beta: f64,
    n: u64,
) -> Result<EndpointHistogram> {
    if n == 0 {
        return Err(Error::invalid("N", "must be at least 1"));
    }
    if ens.replicas == 0 {
        return Err(Error::invalid("replicas", "must be at least 1"));
    }
    let lambda = ens.env.lambda(beta)?;
    let bin = walk.scaling_at(n);
    let free = Propagator::new(walk, 0.0, 0.0, ens.leak_budget).run(
        &ens.field(0),
        n,
        &PathConstraint::None,
    )?;
    let free_bins = binned(&free.state.rho, free.state.x_lo, bin);
    let per = ens.map(|_, field| {
        let r = Propagator::new(walk, beta, lambda, ens.leak_budget).run(
            field,
            n,
            &PathConstraint::None,
        )?;
        Ok(binned(&r.state.rho, r.state.x_lo, bin))
    })?;
    let lo = per.iter().map(|b| b.0).chain([free_bins.0]).min().expect("nonempty");
    let hi = per
        .iter()
        .chain([&free_bins])
        .map(|b| b.0 + b.1.len() as i64)
        .max()
        .expect("nonempty");
    let width = (hi - lo) as usize;
    let spread = |b: &(i64, Vec<f64>), out: &mut Vec<f64>, scale: f64| {
        for (i, v) in b.1.iter().enumerate() {
            out[(b.0 - lo) as usize + i] += v * scale;
        }
    };
    let mut polymer = vec![0.0; width];
    let inv = 1.0 / per.len() as f64;
    for b in &per {
        spread(b, &mut polymer, inv);
    }
    let mut free = vec![0.0; width];
    spread(&free_bins, &mut free, 1.0);
    Ok(EndpointHistogram {
        bin,
        first: lo,
        polymer,
        free,
    })
}

/// (first bin index, masses) with bin b covering [b·w, (b+1)·w).
fn binned(rho: &[f64], x_lo: i64, w: u64) -> (i64, Vec<f64>) {
    let w = w as i64;
    if rho.is_empty() {
        return (0, Vec::new());
    }
    let first = x_lo.div_euclid(w);
    let last = (x_lo + rho.len() as i64 - 1).div_euclid(w);
    let mut out = vec![0.0; (last - first + 1) as usize];
    for (i, &p) in rho.iter().enumerate() {
        out[((x_lo + i as i64).div_euclid(w) - first) as usize] += p;
    }
    (first, out)
}

fn total_variation(a: &(i64, Vec<f64>), b: &(i64, Vec<f64>)) -> f64 {
    let lo = a.0.min(b.0);
    let hi = (a.0 + a.1.len() as i64).max(b.0 + b.1.len() as i64);
    let get = |v: &(i64, Vec<f64>), i: i64| {
        let j = i - v.0;
        if j < 0 || j >= v.1.len() as i64 {
            0.0
        } else {
            v.1[j as usize]
        }
    };
    0.5 * (lo..hi).map(|i| (get(a, i) - get(b, i)).abs()).sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    WeakConsistent,
    VeryStrongConsistent,
    Undecided,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::WeakConsistent => "weak-consistent",
            Verdict::VeryStrongConsistent => "very-strong-consistent",
            Verdict::Undecided => "undecided",
        })
    }
}

/// Walk family shared by every cell of a scan; α varies per cell.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct WalkFamily {
    pub ell: SlowlyVarying,
    pub p0: f64,
    pub tail_tolerance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanSettings {
    pub n: u64,
    pub theta: f64,
    pub n_grid: Vec<u64>,
    pub intersection_horizon: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PhasePoint {
    pub alpha: f64,
    pub beta: f64,
    pub n: u64,
    pub theta: f64,
    pub replicas: u64,
    pub p_hat: MeanSe,
    pub fm_rate: f64,
    pub fm_se: f64,
    /// Replica mean of Σ_{n≤N} I_n.
    pub overlap_sum: f64,
    pub weak: Criterion,
    pub strong: Criterion,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Serialize)]
pub struct PhaseRow {
    pub alpha: f64,
    pub beta: f64,
    pub result: std::result::Result<PhasePoint, String>,
}

/// Evaluates one (α, β) cell. Every cell uses the ensemble's seed, so
/// cells along a β slice share their environments.
pub fn phase_point(
    ens: &Ensemble,
    walk: &WalkModel,
    beta: f64,
    settings: &ScanSettings,
) -> Result<PhasePoint> {
    let weak = weak_disorder_criterion(&ens.env, walk, beta, settings.intersection_horizon)?;
    let strong = strong_disorder_criterion(&ens.env, walk, beta)?;
    if weak.verdict == Criterion::Holds && strong.verdict == Criterion::Holds {
        return Err(Error::CriteriaConflict { beta });
    }
    let n_max = settings
        .n_grid
        .iter()
        .copied()
        .chain([settings.n])
        .max()
        .expect("nonempty");
    let traces = ens.traces(walk, beta, n_max)?;
    let n = settings.n as usize;
    let logs: Vec<f64> = traces
        .iter()
        .map(|t| t[n - 1].log_zhat / settings.n as f64)
        .collect();
    let p_hat = mean_se(&logs);
    let overlap_sum = traces
        .iter()
        .map(|t| t[..n].iter().map(|s| s.overlap).sum::<f64>())
        .sum::<f64>()
        / traces.len() as f64;
    let fm = fractional_moment(ens, walk, beta, settings.theta, &settings.n_grid)?;

    let verdict = if strong.verdict == Criterion::Holds {
        Verdict::VeryStrongConsistent
    } else if weak.verdict == Criterion::Holds {
        Verdict::WeakConsistent
    } else if p_hat.mean + Z99 * p_hat.se < 0.0 && fm.decaying_at_99() {
        Verdict::VeryStrongConsistent
    } else if fm.rate - Z99 * fm.rate_se > -1.0 / n_max as f64 && p_hat.mean > -Z99 * p_hat.se {
        Verdict::WeakConsistent
    } else {
        Verdict::Undecided
    };
    Ok(PhasePoint {
        alpha: walk.alpha(),
        beta,
        n: settings.n,
        theta: settings.theta,
        replicas: ens.replicas,
        p_hat,
        fm_rate: fm.rate,
        fm_se: fm.rate_se,
        overlap_sum,
        weak: weak.verdict,
        strong: strong.verdict,
        verdict,
    })
}

/// How grid cells key their environments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Seeding {
    /// Every cell reuses the master seed (common random numbers across β).
    Shared,
    /// Each cell derives its seed from its coordinates.
    PerCell,
}

impl Seeding {
    pub fn seed(self, master: u64, coords: &[u64]) -> u64 {
        match self {
            Seeding::Shared => master,
            Seeding::PerCell => cell_seed(master, coords),
        }
    }
}

/// Runs every (α, β) cell in order. Per-cell failures are recorded in the
/// row; a criteria conflict aborts the scan.
pub fn phase_scan(
    ens: &Ensemble,
    family: &WalkFamily,
    cells: &[(f64, f64)],
    settings: &ScanSettings,
    seeding: Seeding,
) -> Result<Vec<PhaseRow>> {
    let mut rows = Vec::with_capacity(cells.len());
    for &(alpha, beta) in cells {
        let cell = Ensemble {
            seed: seeding.seed(ens.seed, &[alpha.to_bits(), beta.to_bits()]),
            ..ens.clone()
        };
        let result = WalkModel::build(alpha, family.ell, family.p0, family.tail_tolerance)
            .and_then(|w| phase_point(&cell, &w, beta, settings));
        let result = match result {
            Err(e @ Error::CriteriaConflict { .. }) => return Err(e),
            other => other.map_err(|e| e.to_string()),
        };
        rows.push(PhaseRow {
            alpha,
            beta,
            result,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn walk() -> WalkModel {
        WalkModel::with_tail_cut(1.5, SlowlyVarying::constant(), 0.5, 4).unwrap()
    }

    fn ens(replicas: u64) -> Ensemble {
        Ensemble::new(Arc::new(EnvModel::gaussian()), 17, replicas)
    }

    #[test]
    fn beta_zero_free_energy_is_exactly_zero() {
        let f = free_energy(&ens(4), &walk(), 0.0, 20).unwrap();
        assert_eq!(f.p_hat.mean, 0.0);
        assert!(free_energy(&ens(1), &walk(), 0.0, 20).is_err());
    }

    #[test]
    fn fractional_moment_at_zero_is_one() {
        let fm = fractional_moment(&ens(5), &walk(), 1.0, 0.5, &[0, 4, 8]).unwrap();
        assert_eq!(fm.rows[0].moment.mean, 1.0);
        assert!(fm.rows.iter().all(|r| r.moment.mean > 0.0));
        assert!(fractional_moment(&ens(5), &walk(), 1.0, 1.0, &[4]).is_err());
    }

    #[test]
    fn recursion_trace_closed_forms() {
        let b = [2.0, 3.0, 5.0, 7.0];
        let t = fractional_moment_recursion_trace(0.5, 0.3, &b, &[0.0; 4]).unwrap();
        let mut s = 0.0;
        for (i, bn) in b.iter().enumerate() {
            s += 1.0 / bn;
            let want = (-0.15 * s).exp();
            assert!((t.bound[i + 1] - want).abs() < 1e-12);
        }
        let geo = fractional_moment_recursion_trace(0.5, 1.0, &[4.0; 3], &[0.0; 3]).unwrap();
        for w in geo.bound.windows(2) {
            assert!((w[1] / w[0] - (-1.0f64 / 8.0).exp()).abs() < 1e-14);
        }
        assert!(fractional_moment_recursion_trace(0.5, 1.0, &[0.0], &[0.0]).is_err());
        assert!(fractional_moment_recursion_trace(0.5, -1.0, &[1.0], &[0.0]).is_err());
    }

    #[test]
    fn beta_zero_flags_every_ratio() {
        let rows = overlap_log_ratio(&ens(3), &walk(), 0.0, &[5, 10]).unwrap();
        assert!(rows.iter().all(|r| r.flagged == 3 && r.ratios.is_empty()));
    }

    #[test]
    fn gaussian_criteria_thresholds() {
        let env = EnvModel::gaussian();
        let w = WalkModel::build(0.8, SlowlyVarying::constant(), 0.3, 1e-2).unwrap();
        let r0 = weak_disorder_criterion(&env, &w, 0.0, 1024).unwrap();
        assert_eq!(r0.verdict, Criterion::Holds);
        let pi = r0.pi_p.unwrap().pi_p;
        let star = (-pi.ln()).sqrt();
        let r = weak_disorder_criterion(&env, &w, 0.5 * star, 1024).unwrap();
        assert!((r.margin - (-pi.ln() - 0.25 * star * star)).abs() < 1e-12);
        assert_eq!(
            weak_disorder_criterion(&env, &walk(), 0.1, 1024).unwrap().verdict,
            Criterion::Inapplicable
        );

        let h = w.entropy().total();
        assert_eq!(strong_disorder_criterion(&env, &w, 0.0).unwrap().verdict, Criterion::Fails);
        let s = strong_disorder_criterion(&env, &w, 2.0 * (2.0 * h).sqrt()).unwrap();
        assert_eq!(s.verdict, Criterion::Holds);
        assert!((s.margin - (4.0 * h - h)).abs() < 1e-9);
    }

    #[test]
    fn endpoint_distance_vanishes_without_disorder() {
        let d = scaled_endpoint_distance(&ens(3), &walk(), 0.0, 12).unwrap();
        assert!(d.per_replica.iter().all(|&v| v == 0.0));
        let d = scaled_endpoint_distance(&ens(3), &walk(), 1.5, 12).unwrap();
        assert!(d.per_replica.iter().all(|&v| (0.0..=1.0).contains(&v)));
        let h = endpoint_histogram(&ens(3), &walk(), 0.0, 12).unwrap();
        assert!(h.polymer.iter().zip(&h.free).all(|(a, b)| (a - b).abs() < 1e-15));
        let h = endpoint_histogram(&ens(3), &walk(), 1.5, 12).unwrap();
        assert!((h.polymer.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_scan_and_duplicate_cells() {
        let fam = WalkFamily {
            ell: SlowlyVarying::constant(),
            p0: 0.5,
            tail_tolerance: 1e-2,
        };
        let settings = ScanSettings {
            n: 8,
            theta: 0.5,
            n_grid: vec![4, 8],
            intersection_horizon: 256,
        };
        assert!(phase_scan(&ens(3), &fam, &[], &settings, Seeding::PerCell)
            .unwrap()
            .is_empty());
        let cells = [(1.5, 0.7), (1.5, 0.7), (0.0, 0.7), (1.5, 0.9)];
        let rows = phase_scan(&ens(3), &fam, &cells, &settings, Seeding::PerCell).unwrap();
        let a = rows[0].result.as_ref().unwrap();
        let b = rows[1].result.as_ref().unwrap();
        assert_eq!(a.p_hat, b.p_hat);
        assert_eq!(a.fm_rate.to_bits(), b.fm_rate.to_bits());
        assert!(rows[2].result.is_err());
        assert_ne!(Seeding::PerCell.seed(17, &[1, 2]), Seeding::PerCell.seed(17, &[1, 3]));
        assert_eq!(Seeding::Shared.seed(17, &[1, 3]), 17);
    }
}
