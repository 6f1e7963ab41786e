//! Endpoint atoms, corridor probabilities, half-time block partition
//! functions and the environment shifts and tilts used to compare them.

use serde::Serialize;

use crate::diagnostics::Ensemble;
use crate::environment::{EnvModel, Environment};
use crate::error::{Error, Result};
use crate::polymer::{ForwardState, PathConstraint, Propagator, StepStats};
use crate::stats::{mean_se, MeanSe};
use crate::walk::WalkModel;

#[derive(Debug, Clone, Serialize)]
pub struct AtomTrace {
    pub epsilon: f64,
    /// max_x P_{n−1,β}(S_n = x) for n = 1..=N.
    pub max_mass: Vec<f64>,
    pub atom_x: Vec<i64>,
    pub indicator: Vec<bool>,
    /// (1/n)·Σ_{m≤n} indicator_m.
    pub running_fraction: Vec<f64>,
}

impl AtomTrace {
    pub fn from_trace(trace: &[StepStats], epsilon: f64) -> Self {
        let max_mass: Vec<f64> = trace.iter().map(|s| s.atom_mass).collect();
        let atom_x = trace.iter().map(|s| s.atom_x).collect();
        let indicator: Vec<bool> = max_mass.iter().map(|&m| m > epsilon).collect();
        let mut hits = 0usize;
        let running_fraction = indicator
            .iter()
            .enumerate()
            .map(|(i, &b)| {
                hits += b as usize;
                hits as f64 / (i + 1) as f64
            })
            .collect();
        AtomTrace {
            epsilon,
            max_mass,
            atom_x,
            indicator,
            running_fraction,
        }
    }

    /// Fraction of n ∈ [lo, hi] (1-based, inclusive) with an atom.
    pub fn fraction_between(&self, lo: u64, hi: u64) -> f64 {
        let lo = lo.max(1) as usize;
        let hi = (hi as usize).min(self.indicator.len());
        if lo > hi {
            return f64::NAN;
        }
        let hits = self.indicator[lo - 1..hi].iter().filter(|&&b| b).count();
        hits as f64 / (hi - lo + 1) as f64
    }
}

pub fn atom_trace<E: Environment + ?Sized>(
    field: &E,
    walk: &WalkModel,
    beta: f64,
    lambda: f64,
    n: u64,
    epsilon: f64,
    budget: f64,
) -> Result<AtomTrace> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::invalid("epsilon", "must lie in (0, 1)"));
    }
    let run = Propagator::new(walk, beta, lambda, budget).run(field, n, &PathConstraint::None)?;
    Ok(AtomTrace::from_trace(&run.trace, epsilon))
}

/// Per-replica atom fraction over n ∈ [N/2, N].
pub fn atom_fractions(
    ens: &Ensemble,
    walk: &WalkModel,
    beta: f64,
    n: u64,
    epsilon: f64,
) -> Result<Vec<f64>> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::invalid("epsilon", "must lie in (0, 1)"));
    }
    Ok(ens
        .traces(walk, beta, n)?
        .iter()
        .map(|t| AtomTrace::from_trace(t, epsilon).fraction_between(n / 2, n))
        .collect())
}

/// P_{N,β}(max_{n≤N} |S_n| < r) on a fixed environment.
pub fn restricted_ratio<E: Environment + ?Sized>(
    field: &E,
    walk: &WalkModel,
    beta: f64,
    lambda: f64,
    n: u64,
    r: u64,
    budget: f64,
) -> Result<f64> {
    if r == 0 {
        return Err(Error::invalid("r", "must be at least 1"));
    }
    let mut prop = Propagator::new(walk, beta, lambda, budget);
    let free = prop.run(field, n, &PathConstraint::None)?;
    let kept = prop.run(field, n, &PathConstraint::GlobalWindow { r })?;
    Ok((kept.state.log_zhat - free.state.log_zhat).exp().min(1.0))
}

/// β²N / (4(α+1+ε)²(log N)²).
pub fn theorem_radius(alpha: f64, beta: f64, n: u64, eps: f64) -> f64 {
    let ln = (n as f64).ln();
    beta * beta * n as f64 / (4.0 * (alpha + 1.0 + eps).powi(2) * ln * ln)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum Radius {
    /// The asymptotic radius with margin ε.
    Theorem { eps: f64 },
    /// A fixed corridor |x| < r.
    User { r: u64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct Fluctuation {
    pub n: u64,
    pub radius: Radius,
    /// Real radius before rounding (equal to r in user mode).
    pub radius_value: f64,
    /// Integer corridor used: |S_n| < r_used.
    pub r_used: u64,
    /// Theorem radius below one: the corridor degenerates to {0}.
    pub degenerate: bool,
    pub per_replica: Vec<f64>,
    pub mean: MeanSe,
}

/// 1 − P_{N,β}(max |S_n| < r), per replica.
pub fn fluctuation_probability(
    ens: &Ensemble,
    walk: &WalkModel,
    beta: f64,
    n: u64,
    radius: Radius,
) -> Result<Fluctuation> {
    let (value, r_used) = match radius {
        Radius::Theorem { eps } => {
            if !(walk.alpha() > 1.0) {
                return Err(Error::NotApplicable(
                    "the fluctuation radius is defined for alpha > 1".into(),
                ));
            }
            if !ens.env.is_gaussian() {
                return Err(Error::NotApplicable(
                    "theorem-radius mode needs a Gaussian environment".into(),
                ));
            }
            if !(eps > 0.0) {
                return Err(Error::invalid("eps_margin", "must be positive"));
            }
            if n < 2 {
                return Err(Error::invalid("N", "must be at least 2"));
            }
            let v = theorem_radius(walk.alpha(), beta, n, eps);
            // |x| < v over the integers is |x| < ⌈v⌉
            (v, (v.ceil() as u64).max(1))
        }
        Radius::User { r } => {
            if r == 0 {
                return Err(Error::invalid("r", "must be at least 1"));
            }
            (r as f64, r)
        }
    };
    let lambda = ens.env.lambda(beta)?;
    let per_replica = ens.map(|_, field| {
        restricted_ratio(field, walk, beta, lambda, n, r_used, ens.leak_budget).map(|p| 1.0 - p)
    })?;
    Ok(Fluctuation {
        n,
        radius,
        radius_value: value,
        r_used,
        degenerate: value < 1.0,
        mean: mean_se(&per_replica),
        per_replica,
    })
}

/// Half-time blocks I^k = [(2k−1)L, (2k+1)L) for |k| ≤ M.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlockLayout {
    pub n: u64,
    pub l_half: u64,
    pub m: u64,
}

impl BlockLayout {
    pub fn new(n: u64, l_half: u64, m: u64) -> Result<Self> {
        if n < 2 || !n.is_multiple_of(2) {
            return Err(Error::invalid("N", "block experiments need an even N ≥ 2"));
        }
        if l_half == 0 {
            return Err(Error::invalid("L", "block half-width must be at least 1"));
        }
        if l_half > i64::MAX as u64 / (4 * m + 4) {
            return Err(Error::invalid("L", "block range overflows"));
        }
        Ok(BlockLayout { n, l_half, m })
    }

    /// L = ⌊β²N / (4(α+1+ε₀)²(log N)²)⌋ with ε₀ = ε/2.
    pub fn theorem(n: u64, alpha: f64, beta: f64, eps: f64, m: u64) -> Result<Self> {
        let l = theorem_radius(alpha, beta, n, 0.5 * eps).floor();
        if l < 1.0 {
            return Err(Error::NotApplicable(format!(
                "theorem block half-width is {l} at N = {n}; set L explicitly"
            )));
        }
        Self::new(n, l as u64, m)
    }

    pub fn half(&self) -> u64 {
        self.n / 2
    }

    /// [lo, hi) of block k.
    pub fn block(&self, k: i64) -> (i64, i64) {
        let l = self.l_half as i64;
        ((2 * k - 1) * l, (2 * k + 1) * l)
    }

    pub fn ks(&self) -> impl Iterator<Item = i64> {
        let m = self.m as i64;
        -m..=m
    }

    /// Constraint confining the second half of the path to block k.
    pub fn constraint(&self, k: i64) -> PathConstraint {
        let (lo, hi) = self.block(k);
        PathConstraint::Block {
            lo,
            hi,
            from: self.half() + 1,
        }
    }

    /// Spatial shift 2kL applied to times after N/2.
    pub fn shift(&self, k: i64) -> i64 {
        2 * k * self.l_half as i64
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockValues {
    /// log Ẑ_N without constraint.
    pub log_total: f64,
    /// log Ẑ_N(k), k = −M..=M.
    pub log_blocks: Vec<f64>,
}

/// Runs N/2 steps once, then the second half once per block.
pub fn block_partition_functions<E: Environment + ?Sized>(
    field: &E,
    walk: &WalkModel,
    beta: f64,
    lambda: f64,
    layout: &BlockLayout,
    budget: f64,
) -> Result<BlockValues> {
    let mut prop = Propagator::new(walk, beta, lambda, budget);
    let mut scratch = Vec::new();
    let mut mid = ForwardState::init();
    prop.advance(&mut mid, field, &PathConstraint::None, layout.half(), &mut scratch)?;
    let second = layout.n - layout.half();
    let mut total = mid.clone();
    prop.advance(&mut total, field, &PathConstraint::None, second, &mut scratch)?;
    let mut log_blocks = Vec::with_capacity(2 * layout.m as usize + 1);
    for k in layout.ks() {
        let mut s = mid.clone();
        prop.advance(&mut s, field, &layout.constraint(k), second, &mut scratch)?;
        log_blocks.push(s.log_zhat);
    }
    Ok(BlockValues {
        log_total: total.log_zhat,
        log_blocks,
    })
}

/// ω(n, x + h) for n ≥ `from`, ω(n, x) before.
pub struct ShiftedField<'a, E: ?Sized> {
    base: &'a E,
    h: i64,
    from: u64,
}

impl<'a, E: Environment + ?Sized> ShiftedField<'a, E> {
    pub fn new(base: &'a E, h: i64, from: u64) -> Self {
        ShiftedField { base, h, from }
    }
}

impl<E: Environment + ?Sized> Environment for ShiftedField<'_, E> {
    fn omega(&self, n: u64, x: i64) -> f64 {
        if n >= self.from {
            self.base.omega(n, x + self.h)
        } else {
            self.base.omega(n, x)
        }
    }

    fn fill_row(&self, n: u64, x0: i64, out: &mut [f64]) {
        let shift = if n >= self.from { self.h } else { 0 };
        self.base.fill_row(n, x0 + shift, out);
    }
}

/// log Z̄(k), k = −M..=M: second half confined to I^0 in the environment
/// shifted by 2kL after N/2.
pub fn shifted_block_values<E: Environment + ?Sized>(
    field: &E,
    walk: &WalkModel,
    beta: f64,
    lambda: f64,
    layout: &BlockLayout,
    budget: f64,
) -> Result<Vec<f64>> {
    let mut prop = Propagator::new(walk, beta, lambda, budget);
    let mut scratch = Vec::new();
    let mut mid = ForwardState::init();
    prop.advance(&mut mid, field, &PathConstraint::None, layout.half(), &mut scratch)?;
    let second = layout.n - layout.half();
    let home = layout.constraint(0);
    let mut out = Vec::with_capacity(2 * layout.m as usize + 1);
    for k in layout.ks() {
        let shifted = ShiftedField::new(field, layout.shift(k), layout.half() + 1);
        let mut s = mid.clone();
        prop.advance(&mut s, &shifted, &home, second, &mut scratch)?;
        out.push(s.log_zhat);
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct Exchangeability {
    pub m: u64,
    pub replicas: u64,
    /// Replicas in which block 0 attains the maximum.
    pub hits: u64,
    pub frequency: f64,
    /// Binomial standard error at the expected frequency.
    pub se: f64,
    pub expected: f64,
    /// 99% Wilson interval for the frequency.
    pub ci: (f64, f64),
}

impl Exchangeability {
    pub fn within(&self, k_se: f64) -> bool {
        (self.frequency - self.expected).abs() <= k_se * self.se
    }
}

pub fn exchangeability_frequency(
    ens: &Ensemble,
    walk: &WalkModel,
    beta: f64,
    layout: &BlockLayout,
) -> Result<Exchangeability> {
    if !ens.env.is_gaussian() {
        return Err(Error::NotApplicable(
            "exchangeability needs a continuous (Gaussian) environment".into(),
        ));
    }
    if ens.replicas == 0 {
        return Err(Error::invalid("replicas", "must be at least 1"));
    }
    let lambda = ens.env.lambda(beta)?;
    let m = layout.m as i64;
    let wins = ens.map(|r, field| {
        let v = shifted_block_values(field, walk, beta, lambda, layout, ens.leak_budget)?;
        let mut best = 0usize;
        for i in 1..v.len() {
            if v[i] > v[best] {
                best = i;
            }
        }
        for (i, &x) in v.iter().enumerate() {
            if i != best && x == v[best] {
                return Err(Error::TieDetected {
                    replica: r,
                    k: best as i64 - m,
                    j: i as i64 - m,
                });
            }
        }
        Ok(best as i64 == m)
    })?;
    let hits = wins.iter().filter(|&&w| w).count() as u64;
    let n = ens.replicas as f64;
    let expected = 1.0 / (2 * layout.m + 1) as f64;
    let frequency = hits as f64 / n;
    Ok(Exchangeability {
        m: layout.m,
        replicas: ens.replicas,
        hits,
        frequency,
        se: (expected * (1.0 - expected) / n).sqrt(),
        expected,
        ci: wilson(hits as f64, n, 2.575_829_303_548_901),
    })
}

fn wilson(k: f64, n: f64, z: f64) -> (f64, f64) {
    let p = k / n;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Debug, Clone, Serialize)]
pub struct ShiftScan {
    pub h: i64,
    /// min_x p_x/p_{x−h} over x with both sites in the truncated support.
    pub min_ratio: f64,
    pub argmin_x: i64,
    /// Mass of sites x whose partner x − h lies outside the support.
    pub excluded_mass: f64,
}

/// Exact scan of the one-increment density ratio under a shift by h.
pub fn shift_ratio_scan(walk: &WalkModel, h: i64) -> Result<ShiftScan> {
    if walk.p0() <= 0.0 {
        return Err(Error::NotApplicable(
            "the shift ratio needs a lazy walk (p0 > 0)".into(),
        ));
    }
    let k = walk.tail_cut() as i64;
    let lo = (-k).max(h - k);
    let hi = k.min(h + k);
    if lo > hi {
        return Err(Error::NotApplicable(format!(
            "shift {h} exceeds twice the support bound {k}"
        )));
    }
    let mut min_ratio = f64::INFINITY;
    let mut argmin_x = lo;
    for x in lo..=hi {
        let r = walk.pmf(x) / walk.pmf(x - h);
        if r < min_ratio {
            min_ratio = r;
            argmin_x = x;
        }
    }
    let excluded_mass = (-k..=k)
        .filter(|&x| (x - h).abs() > k)
        .map(|x| walk.pmf(x))
        .sum();
    Ok(ShiftScan {
        h,
        min_ratio,
        argmin_x,
        excluded_mass,
    })
}

/// Lower bound on min_x q(x)/q(x−h) for |h| ≥ 1:
/// min(1, c/p0)·(1 + ln(e+|h|))^{−|γ|}·|h|^{−(α+1)}.
pub fn shift_floor(walk: &WalkModel, h: i64) -> f64 {
    if h == 0 {
        return 1.0;
    }
    let a = h.unsigned_abs() as f64;
    let g = walk.ell().gamma().abs();
    (walk.c() / walk.p0()).min(1.0)
        * (1.0 + (std::f64::consts::E + a).ln()).powf(-g)
        * a.powf(-(walk.alpha() + 1.0))
}

#[derive(Debug, Clone, Serialize)]
pub struct ShiftBound {
    pub k: i64,
    pub n: u64,
    pub scan: ShiftScan,
    /// Explicit bound at h = 2kL.
    pub floor: f64,
    /// C·(|k|N)^{−(α+1+δ)}, valid because |h| ≤ 2|k|N.
    pub potter_floor: f64,
    pub potter_constant: f64,
}

/// Exact minimum density ratio for the shift h = 2kL, with its floors.
pub fn shift_rn_bound(
    walk: &WalkModel,
    layout: &BlockLayout,
    k: i64,
    delta: f64,
) -> Result<ShiftBound> {
    if k == 0 {
        return Err(Error::invalid("k", "must be nonzero"));
    }
    if !(delta > 0.0) {
        return Err(Error::invalid("delta", "must be positive"));
    }
    if layout.l_half > layout.n {
        return Err(Error::invalid("L", "must not exceed N"));
    }
    let h = layout.shift(k);
    let scan = shift_ratio_scan(walk, h)?;
    let floor = shift_floor(walk, h);
    let c = potter_constant(walk, delta);
    let y = k.unsigned_abs() as f64 * layout.n as f64;
    Ok(ShiftBound {
        k,
        n: layout.n,
        scan,
        floor,
        potter_floor: c * y.powf(-(walk.alpha() + 1.0 + delta)),
        potter_constant: c,
    })
}

/// C with C·y^{−(α+1+δ)} ≤ min(1, c/p0)·(1+ln(e+2y))^{−|γ|}·(2y)^{−(α+1)}
/// for all y ≥ 1, i.e. C = min(1, c/p0)·2^{−(α+1)}·inf_{y≥1} y^δ (1+ln(e+2y))^{−|γ|}.
fn potter_constant(walk: &WalkModel, delta: f64) -> f64 {
    let g = walk.ell().gamma().abs();
    let base = (walk.c() / walk.p0()).min(1.0) * 2f64.powf(-(walk.alpha() + 1.0));
    if g == 0.0 {
        return base;
    }
    // f(t) = δt − |γ| ln(1 + ln(e + 2e^t)) with t = ln y;
    // f'(t) ≥ δ − |γ|/(1 + t), so the infimum lies in t ≤ |γ|/δ
    let f = |t: f64| delta * t - g * (1.0 + (std::f64::consts::E + 2.0 * t.exp()).ln()).ln();
    let t_max = g / delta + 1.0;
    let steps = 4096;
    let mut lo = f(0.0);
    for i in 1..=steps {
        lo = lo.min(f(t_max * i as f64 / steps as f64));
    }
    // grid spacing slack: |f'| ≤ δ + |γ|
    let slack = (delta + g) * t_max / steps as f64;
    base * (lo - slack).exp()
}

/// ω + (N/2·|J|)^{−1/2} on [N/2+1, N] × J with J = {|x| < r}, ω elsewhere.
pub struct TiltedField<'a, E: ?Sized> {
    base: &'a E,
    half: u64,
    n: u64,
    r: i64,
    shift: f64,
}

impl<'a, E: Environment + ?Sized> TiltedField<'a, E> {
    pub fn new(base: &'a E, env: &EnvModel, n: u64, r: u64) -> Result<Self> {
        if !env.is_gaussian() {
            return Err(Error::NotApplicable("tilting needs a Gaussian environment".into()));
        }
        if n < 2 || !n.is_multiple_of(2) {
            return Err(Error::invalid("N", "must be even and at least 2"));
        }
        if r == 0 {
            return Err(Error::invalid("r", "must be at least 1"));
        }
        let size = (n / 2) as f64 * (2 * r - 1) as f64;
        Ok(TiltedField {
            base,
            half: n / 2,
            n,
            r: r as i64,
            shift: size.powf(-0.5),
        })
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    fn tilted(&self, n: u64) -> bool {
        n > self.half && n <= self.n
    }

    /// W = Σ_{region} ω / √|region| on the base field.
    pub fn w(&self) -> f64 {
        let width = (2 * self.r - 1) as usize;
        let mut row = vec![0.0; width];
        let mut sum = 0.0;
        for n in self.half + 1..=self.n {
            self.base.fill_row(n, 1 - self.r, &mut row);
            sum += row.iter().sum::<f64>();
        }
        sum * self.shift
    }
}

impl<E: Environment + ?Sized> Environment for TiltedField<'_, E> {
    fn omega(&self, n: u64, x: i64) -> f64 {
        let w = self.base.omega(n, x);
        if self.tilted(n) && x.abs() < self.r {
            w + self.shift
        } else {
            w
        }
    }

    fn fill_row(&self, n: u64, x0: i64, out: &mut [f64]) {
        self.base.fill_row(n, x0, out);
        if self.tilted(n) {
            let lo = (1 - self.r - x0).max(0);
            let hi = (self.r - x0).min(out.len() as i64);
            for v in out.iter_mut().take(hi.max(0) as usize).skip(lo as usize) {
                *v += self.shift;
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TiltIdentity {
    /// Mean of G(ω) over replicas.
    pub direct: MeanSe,
    /// Mean of exp(−W − 1/2)·G(ω̂).
    pub reweighted: MeanSe,
    /// Paired difference of the two per-replica estimators.
    pub difference: MeanSe,
}

impl TiltIdentity {
    pub fn agrees(&self, k_se: f64) -> bool {
        self.difference.mean.abs() <= k_se * self.difference.se
    }
}

/// Compares E[G(ω)] with E[exp(−W−1/2)·G(ω̂)] for
/// G(ω) = P_{N,β}^ω(max|S_n| < r_stat), tilting on J = {|x| < r_tilt}.
pub fn tilt_identity(
    ens: &Ensemble,
    walk: &WalkModel,
    beta: f64,
    n: u64,
    r_tilt: u64,
    r_stat: u64,
) -> Result<TiltIdentity> {
    let lambda = ens.env.lambda(beta)?;
    let pairs = ens.map(|_, field| {
        let tilt = TiltedField::new(field, &ens.env, n, r_tilt)?;
        let g = restricted_ratio(field, walk, beta, lambda, n, r_stat, ens.leak_budget)?;
        let g_hat = restricted_ratio(&tilt, walk, beta, lambda, n, r_stat, ens.leak_budget)?;
        Ok((g, (-tilt.w() - 0.5).exp() * g_hat))
    })?;
    let a: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let b: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let d: Vec<f64> = pairs.iter().map(|p| p.0 - p.1).collect();
    Ok(TiltIdentity {
        direct: mean_se(&a),
        reweighted: mean_se(&b),
        difference: mean_se(&d),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::EnvField;
    use crate::polymer::DEFAULT_LEAK_BUDGET;
    use crate::walk::SlowlyVarying;
    use std::sync::Arc;

    fn walk() -> WalkModel {
        WalkModel::with_tail_cut(1.5, SlowlyVarying::constant(), 0.5, 3).unwrap()
    }

    fn field(seed: u64) -> EnvField {
        EnvField::new(Arc::new(EnvModel::gaussian()), seed, 0)
    }

    #[test]
    fn atoms_threshold_and_spike() {
        let w = walk();
        let f = field(1);
        let t = atom_trace(&f, &w, 0.0, 0.0, 30, 0.9, DEFAULT_LEAK_BUDGET).unwrap();
        // at n = 1 the law is the truncated kernel, largest at the origin
        assert_eq!(t.max_mass[0], w.kernel()[3]);
        assert!(t.indicator.iter().all(|&b| !b));
        assert!(atom_trace(&f, &w, 0.0, 0.0, 3, 1.0, DEFAULT_LEAK_BUDGET).is_err());

        struct Spike;
        impl Environment for Spike {
            fn omega(&self, n: u64, x: i64) -> f64 {
                if n == 1 && x == 2 {
                    40.0
                } else {
                    0.0
                }
            }
        }
        // the atom at n = 2 sits one free step after the spiked endpoint
        let t = atom_trace(&Spike, &w, 3.0, 4.5, 2, 0.3, DEFAULT_LEAK_BUDGET).unwrap();
        assert!(t.indicator[1]);
        assert_eq!(t.atom_x[1], 2);
    }

    #[test]
    fn restricted_ratio_limits() {
        let w = walk();
        let f = field(2);
        let n = 6;
        let r = restricted_ratio(&f, &w, 1.0, 0.5, n, 3 * n + 1, DEFAULT_LEAK_BUDGET).unwrap();
        assert_eq!(r, 1.0);
        let mut prev = 0.0;
        for radius in 1..=8 {
            let p = restricted_ratio(&f, &w, 1.0, 0.5, n, radius, DEFAULT_LEAK_BUDGET).unwrap();
            assert!((0.0..=1.0).contains(&p) && p >= prev - 1e-15);
            prev = p;
        }
    }

    #[test]
    fn block_values_reuse_first_half() {
        let w = walk();
        let f = field(3);
        let layout = BlockLayout::new(10, 2, 2).unwrap();
        let v = block_partition_functions(&f, &w, 0.8, 0.32, &layout, DEFAULT_LEAK_BUDGET).unwrap();
        let mut sum = 0.0;
        for (i, k) in layout.ks().enumerate() {
            let scratch = Propagator::new(&w, 0.8, 0.32, DEFAULT_LEAK_BUDGET)
                .run(&f, 10, &layout.constraint(k))
                .unwrap();
            assert!((scratch.state.log_zhat - v.log_blocks[i]).abs() < 1e-12);
            sum += v.log_blocks[i].exp();
        }
        assert!(sum <= v.log_total.exp() * (1.0 + 1e-12));
    }

    #[test]
    fn shifted_field_matches_direct_lookup() {
        let f = field(4);
        let s = ShiftedField::new(&f, 6, 5);
        let mut row = vec![0.0; 9];
        for n in [3u64, 5, 8] {
            s.fill_row(n, -4, &mut row);
            for (i, v) in row.iter().enumerate() {
                let x = -4 + i as i64;
                let want = if n >= 5 { f.omega(n, x + 6) } else { f.omega(n, x) };
                assert_eq!(v.to_bits(), want.to_bits());
                assert_eq!(s.omega(n, x).to_bits(), want.to_bits());
            }
        }
    }

    #[test]
    fn tilted_field_offsets() {
        let f = field(5);
        let env = EnvModel::gaussian();
        let t = TiltedField::new(&f, &env, 8, 3).unwrap();
        assert_eq!(t.shift(), (4.0f64 * 5.0).powf(-0.5));
        let mut row = vec![0.0; 12];
        for n in 1..=9u64 {
            t.fill_row(n, -6, &mut row);
            for (i, v) in row.iter().enumerate() {
                let x = -6 + i as i64;
                let inside = n > 4 && n <= 8 && x.abs() < 3;
                let base = f.omega(n, x);
                if inside {
                    assert_eq!(*v, base + t.shift());
                } else {
                    assert_eq!(v.to_bits(), base.to_bits());
                }
                assert_eq!(t.omega(n, x).to_bits(), v.to_bits());
            }
        }
        assert!(TiltedField::new(&f, &EnvModel::rademacher(), 8, 3).is_err());
    }

    #[test]
    fn shift_scan_against_power_expression() {
        let w = WalkModel::with_tail_cut(1.5, SlowlyVarying::constant(), 0.5, 100).unwrap();
        let h = 10i64;
        let s = shift_ratio_scan(&w, h).unwrap();
        let mut brute = f64::INFINITY;
        for x in (h - 100)..=100 {
            let r = if x == 0 {
                0.5 / (w.c() * (h as f64).powf(-2.5))
            } else if x == h {
                w.c() * (h as f64).powf(-2.5) / 0.5
            } else {
                (1.0 - h as f64 / x as f64).abs().powf(2.5)
            };
            brute = brute.min(r);
        }
        assert!((s.min_ratio - brute).abs() <= 1e-12 * brute);
        assert!(s.min_ratio >= shift_floor(&w, h));
        assert_eq!(shift_ratio_scan(&w, 0).unwrap().min_ratio, 1.0);
    }
}
