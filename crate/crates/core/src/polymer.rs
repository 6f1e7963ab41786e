//! Transfer-matrix computation of the normalized partition function.
//!
//! The forward measure obeys
//!
//! ```text
//! ρ_{n+1}(y) ∝ Σ_x ρ_n(x) q(y − x) exp(βω(n+1, y) − λ(β))
//! ```
//!
//! and is renormalized every step; the log of each normalizer accumulates
//! into `log Ẑ_n`. Before the environment weights are applied, the
//! convolution μ_{n+1} = ρ_n ⋆ q is exactly the law of S_{n+1} under
//! P_{n,β} ⊗ (one free step), which gives the overlap I_{n+1} = Σ μ² and the
//! largest endpoint atom at no extra cost.

use serde::Serialize;

use crate::conv::Convolver;
use crate::environment::Environment;
use crate::error::{Error, Result};
use crate::rng::CounterRng;
use crate::stats::{mean_se, MeanSe};
use crate::walk::WalkModel;

/// Entries below this fraction of the maximum are trimmed from the edges.
pub const TRIM_RELATIVE: f64 = 1e-16;

/// Default cap on cumulative trimmed mass.
pub const DEFAULT_LEAK_BUDGET: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForwardState {
    pub n: u64,
    /// Site of `rho[0]`.
    pub x_lo: i64,
    /// Normalized weights; empty when every path has been excluded.
    pub rho: Vec<f64>,
    pub log_zhat: f64,
    pub leaked_mass: f64,
}

impl ForwardState {
    pub fn init() -> Self {
        ForwardState {
            n: 0,
            x_lo: 0,
            rho: vec![1.0],
            log_zhat: 0.0,
            leaked_mass: 0.0,
        }
    }

    /// Inclusive window `[x_lo, x_hi]`; `None` for the empty measure.
    pub fn window(&self) -> Option<(i64, i64)> {
        if self.rho.is_empty() {
            None
        } else {
            Some((self.x_lo, self.x_lo + self.rho.len() as i64 - 1))
        }
    }

    /// P_{n,β}(S_n = x).
    pub fn prob(&self, x: i64) -> f64 {
        let i = x - self.x_lo;
        if i < 0 || i >= self.rho.len() as i64 {
            0.0
        } else {
            self.rho[i as usize]
        }
    }

    /// Largest endpoint mass and its site (smallest site on ties).
    pub fn max_mass(&self) -> (f64, i64) {
        argmax(&self.rho, self.x_lo)
    }
}

pub fn init_state() -> ForwardState {
    ForwardState::init()
}

/// Polymer endpoint law as `(x_lo, weights)`.
pub fn endpoint_law(state: &ForwardState) -> (i64, &[f64]) {
    (state.x_lo, &state.rho)
}

fn argmax(v: &[f64], x_lo: i64) -> (f64, i64) {
    let mut best = f64::NEG_INFINITY;
    let mut at = 0;
    for (i, &p) in v.iter().enumerate() {
        if p > best {
            best = p;
            at = i;
        }
    }
    if v.is_empty() {
        (0.0, 0)
    } else {
        (best, x_lo + at as i64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PathConstraint {
    None,
    /// |S_n| < r for every n.
    GlobalWindow { r: u64 },
    /// S_n ∈ [lo, hi) for every n ≥ from.
    Block { lo: i64, hi: i64, from: u64 },
}

impl PathConstraint {
    /// Half-open allowed interval at time n, or `None` when unconstrained.
    pub fn allowed(&self, n: u64) -> Option<(i64, i64)> {
        match *self {
            PathConstraint::None => None,
            PathConstraint::GlobalWindow { r } => {
                let r = r as i64;
                Some((1 - r, r))
            }
            PathConstraint::Block { lo, hi, from } => (n >= from).then_some((lo, hi)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            PathConstraint::GlobalWindow { r: 0 } => {
                Err(Error::invalid("constraint.r", "window radius must be at least 1"))
            }
            PathConstraint::Block { lo, hi, .. } if lo >= hi => {
                Err(Error::invalid("constraint", "block interval must be nonempty"))
            }
            _ => Ok(()),
        }
    }
}

/// Per-step diagnostics, indexed by the new time n.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepStats {
    pub n: u64,
    pub log_zhat: f64,
    /// I_n = Σ_x μ_n(x)², μ_n = ρ_{n−1} ⋆ q.
    pub overlap: f64,
    /// max_x μ_n(x) and its site.
    pub atom_mass: f64,
    pub atom_x: i64,
    /// max_x ρ_n(x) and its site.
    pub max_endpoint_mass: f64,
    pub argmax_x: i64,
    pub leaked_mass: f64,
}

/// Advances forward states for one (walk, β) pair.
pub struct Propagator<'w> {
    walk: &'w WalkModel,
    beta: f64,
    lambda: f64,
    budget: f64,
    conv: Convolver,
    mu: Vec<f64>,
    omega: Vec<f64>,
}

impl<'w> Propagator<'w> {
    /// `lambda` must be λ(β) of the environment law the field is drawn from.
    pub fn new(walk: &'w WalkModel, beta: f64, lambda: f64, budget: f64) -> Self {
        Propagator {
            walk,
            beta,
            lambda,
            budget,
            conv: Convolver::new(walk.kernel()),
            mu: Vec::new(),
            omega: Vec::new(),
        }
    }

    pub fn walk(&self) -> &WalkModel {
        self.walk
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// μ = ρ ⋆ q over `[x_lo − K, x_hi + K]`; returns the new `x_lo`.
    pub fn free_step(&mut self, state: &ForwardState, out: &mut Vec<f64>) -> i64 {
        self.conv.convolve(&state.rho, out);
        state.x_lo - self.walk.tail_cut() as i64
    }

    pub fn step<E: Environment + ?Sized>(
        &mut self,
        state: &mut ForwardState,
        field: &E,
        constraint: &PathConstraint,
    ) -> Result<StepStats> {
        let n = state.n + 1;
        if state.rho.is_empty() {
            state.n = n;
            return Ok(StepStats {
                n,
                log_zhat: state.log_zhat,
                overlap: 0.0,
                atom_mass: 0.0,
                atom_x: 0,
                max_endpoint_mass: 0.0,
                argmax_x: 0,
                leaked_mass: state.leaked_mass,
            });
        }
        let mut mu = std::mem::take(&mut self.mu);
        let mut lo = self.free_step(state, &mut mu);
        let overlap: f64 = mu.iter().map(|m| m * m).sum();
        let (atom_mass, atom_x) = argmax(&mu, lo);
        let free_total: f64 = mu.iter().sum();

        // restrict to the allowed interval
        let mut start = 0usize;
        let mut end = mu.len();
        if let Some((a, b)) = constraint.allowed(n) {
            let hi = lo + mu.len() as i64;
            let s = a.max(lo);
            let e = b.min(hi);
            if s >= e {
                start = 0;
                end = 0;
            } else {
                start = (s - lo) as usize;
                end = (e - lo) as usize;
            }
        }
        let full = end - start == mu.len();
        let slice = &mut mu[start..end];
        lo += start as i64;

        let increment;
        if self.beta == 0.0 {
            let kept: f64 = slice.iter().sum();
            increment = if full {
                0.0
            } else {
                (kept / free_total).ln()
            };
            let inv = 1.0 / kept;
            slice.iter_mut().for_each(|v| *v *= inv);
        } else {
            self.omega.resize(slice.len(), 0.0);
            field.fill_row(n, lo, &mut self.omega);
            let (b, l) = (self.beta, self.lambda);
            let mut total = 0.0;
            for (v, w) in slice.iter_mut().zip(&self.omega) {
                *v *= (b * w - l).exp();
                total += *v;
            }
            increment = total.ln();
            let inv = 1.0 / total;
            slice.iter_mut().for_each(|v| *v *= inv);
        }
        if slice.is_empty() || !increment.is_finite() {
            state.n = n;
            state.rho.clear();
            state.log_zhat = f64::NEG_INFINITY;
            self.mu = mu;
            return Ok(StepStats {
                n,
                log_zhat: state.log_zhat,
                overlap,
                atom_mass,
                atom_x,
                max_endpoint_mass: 0.0,
                argmax_x: 0,
                leaked_mass: state.leaked_mass,
            });
        }

        // trim negligible edges
        let (peak, _) = argmax(slice, lo);
        let floor = peak * TRIM_RELATIVE;
        let first = slice.iter().position(|&v| v >= floor).unwrap_or(0);
        let last = slice.iter().rposition(|&v| v >= floor).unwrap_or(slice.len() - 1);
        let trimmed: f64 =
            slice[..first].iter().sum::<f64>() + slice[last + 1..].iter().sum::<f64>();
        let kept = &slice[first..=last];

        // the trimmed mass is dropped from ρ but not from Ẑ: its error is
        // bounded by leaked_mass, and β = 0 keeps log Ẑ exactly 0
        state.rho.clear();
        if trimmed > 0.0 {
            let inv = 1.0 / (1.0 - trimmed);
            state.rho.extend(kept.iter().map(|v| v * inv));
        } else {
            state.rho.extend_from_slice(kept);
        }
        state.log_zhat += increment;
        state.x_lo = lo + first as i64;
        state.n = n;
        state.leaked_mass += trimmed;
        self.mu = mu;
        if state.leaked_mass > self.budget {
            return Err(Error::BudgetExhausted {
                n,
                leaked: state.leaked_mass,
                budget: self.budget,
            });
        }
        let (max_endpoint_mass, argmax_x) = state.max_mass();
        Ok(StepStats {
            n,
            log_zhat: state.log_zhat,
            overlap,
            atom_mass,
            atom_x,
            max_endpoint_mass,
            argmax_x,
            leaked_mass: state.leaked_mass,
        })
    }

    /// Runs `steps` steps from `state`, recording the statistics of each.
    pub fn advance<E: Environment + ?Sized>(
        &mut self,
        state: &mut ForwardState,
        field: &E,
        constraint: &PathConstraint,
        steps: u64,
        trace: &mut Vec<StepStats>,
    ) -> Result<()> {
        for _ in 0..steps {
            trace.push(self.step(state, field, constraint)?);
        }
        Ok(())
    }

    /// N steps from the initial state.
    pub fn run<E: Environment + ?Sized>(
        &mut self,
        field: &E,
        steps: u64,
        constraint: &PathConstraint,
    ) -> Result<Run> {
        if steps == 0 {
            return Err(Error::invalid("N", "must be at least 1"));
        }
        constraint.validate()?;
        let mut state = ForwardState::init();
        let mut trace = Vec::with_capacity(steps as usize);
        self.advance(&mut state, field, constraint, steps, &mut trace)?;
        Ok(Run { state, trace })
    }

    /// Like [`run`](Self::run), keeping every intermediate state.
    pub fn run_keep_states<E: Environment + ?Sized>(
        &mut self,
        field: &E,
        steps: u64,
        constraint: &PathConstraint,
    ) -> Result<Vec<ForwardState>> {
        constraint.validate()?;
        let mut states = Vec::with_capacity(steps as usize + 1);
        let mut state = ForwardState::init();
        states.push(state.clone());
        for _ in 0..steps {
            self.step(&mut state, field, constraint)?;
            states.push(state.clone());
        }
        Ok(states)
    }
}

#[derive(Debug, Clone)]
pub struct Run {
    pub state: ForwardState,
    pub trace: Vec<StepStats>,
}

/// Convenience wrapper: N steps of the transfer matrix.
pub fn run<E: Environment + ?Sized>(
    field: &E,
    walk: &WalkModel,
    beta: f64,
    lambda: f64,
    steps: u64,
    constraint: &PathConstraint,
    budget: f64,
) -> Result<Run> {
    Propagator::new(walk, beta, lambda, budget).run(field, steps, constraint)
}

/// I_N = Σ_x μ_N(x)² from the state at time N − 1.
pub fn overlap(state: &ForwardState, walk: &WalkModel) -> f64 {
    let mut mu = Vec::new();
    Convolver::new(walk.kernel()).convolve(&state.rho, &mut mu);
    mu.iter().map(|m| m * m).sum()
}

/// Samples a polymer path S_0, …, S_n from the stored forward states
/// ρ_0, …, ρ_n by drawing S_n ~ ρ_n and then
/// P(S_m = z | S_{m+1} = y) ∝ ρ_m(z) q(y − z) backwards.
pub fn sample_path(states: &[ForwardState], walk: &WalkModel, rng: &mut CounterRng) -> Vec<i64> {
    let last = states.last().expect("at least the initial state");
    let mut path = vec![0i64; states.len()];
    let mut x = sample_from(&last.rho, last.x_lo, rng);
    path[states.len() - 1] = x;
    let k = walk.tail_cut() as i64;
    let kernel = walk.kernel();
    let mut weights = Vec::with_capacity(2 * k as usize + 1);
    for (m, st) in states[..states.len() - 1].iter().enumerate().rev() {
        let y = x;
        weights.clear();
        let lo = (y - k).max(st.x_lo);
        let hi = (y + k).min(st.x_lo + st.rho.len() as i64 - 1);
        for z in lo..=hi {
            weights.push(st.prob(z) * kernel[(y - z + k) as usize]);
        }
        let total: f64 = weights.iter().sum();
        let u = rng.next_f64() * total;
        let mut acc = 0.0;
        x = hi;
        for (i, w) in weights.iter().enumerate() {
            acc += w;
            if u < acc {
                x = lo + i as i64;
                break;
            }
        }
        path[m] = x;
    }
    path
}

fn sample_from(w: &[f64], x_lo: i64, rng: &mut CounterRng) -> i64 {
    let u = rng.next_f64();
    let mut acc = 0.0;
    for (i, p) in w.iter().enumerate() {
        acc += p;
        if u < acc {
            return x_lo + i as i64;
        }
    }
    x_lo + w.len() as i64 - 1
}

/// Monte Carlo estimate of P^{⊗2}(S_N¹ = S_N²) from two sampled replicas.
pub fn two_replica_overlap_mc<E: Environment + ?Sized>(
    field: &E,
    walk: &WalkModel,
    beta: f64,
    lambda: f64,
    steps: u64,
    samples: u64,
    seed: u64,
) -> Result<MeanSe> {
    if samples == 0 || steps == 0 {
        return Err(Error::invalid("samples", "samples and N must be at least 1"));
    }
    let mut prop = Propagator::new(walk, beta, lambda, DEFAULT_LEAK_BUDGET);
    let states = prop.run_keep_states(field, steps - 1, &PathConstraint::None)?;
    let mut rng = CounterRng::new(seed, crate::rng::domain::POLYMER_PATHS, 0, 0);
    let hits: Vec<f64> = (0..samples)
        .map(|_| {
            let a = *sample_path(&states, walk, &mut rng).last().expect("non-empty")
                + walk.sample_increment(&mut rng);
            let b = *sample_path(&states, walk, &mut rng).last().expect("non-empty")
                + walk.sample_increment(&mut rng);
            if a == b {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    Ok(mean_se(&hits))
}
