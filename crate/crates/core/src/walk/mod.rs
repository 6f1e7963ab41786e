//! Heavy-tailed symmetric increment laws on ℤ.
//!
//! The increment law is
//!
//! ```text
//! q(0) = p0,   q(k) = c · ℓ(|k|) / |k|^{α+1}   (k ≠ 0)
//! ```
//!
//! with ℓ either constant or `ln(e + x)^γ`. The constructor solves for `c` so
//! that the series sums to one, then truncates the support at `K`, recording
//! the analytic tail mass `ε_tail = P(|X| > K)`. The simulation kernel is the
//! truncated law renormalized by `1 − ε_tail`.

mod intersection;

pub use intersection::{intersection_probability, Intersection};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::CounterRng;
use crate::special::{tail_series, tail_series_f64};

/// Largest truncation point accepted by the constructor.
pub const MAX_TAIL_CUT: u64 = 1 << 22;

/// Slowly varying factor of the increment tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SlowlyVarying {
    /// ℓ(x) = c.
    Constant { c: f64 },
    /// ℓ(x) = c · ln(e + x)^γ.
    LogPower { c: f64, gamma: f64 },
}

impl SlowlyVarying {
    pub fn constant() -> Self {
        SlowlyVarying::Constant { c: 1.0 }
    }

    pub fn log_power(gamma: f64) -> Self {
        SlowlyVarying::LogPower { c: 1.0, gamma }
    }

    pub fn c(&self) -> f64 {
        match *self {
            SlowlyVarying::Constant { c } | SlowlyVarying::LogPower { c, .. } => c,
        }
    }

    /// Log-power exponent; zero for the constant family.
    pub fn gamma(&self) -> f64 {
        match *self {
            SlowlyVarying::Constant { .. } => 0.0,
            SlowlyVarying::LogPower { gamma, .. } => gamma,
        }
    }

    fn with_c(self, c: f64) -> Self {
        match self {
            SlowlyVarying::Constant { .. } => SlowlyVarying::Constant { c },
            SlowlyVarying::LogPower { gamma, .. } => SlowlyVarying::LogPower { c, gamma },
        }
    }

    /// ℓ(x) without the constant.
    #[inline]
    pub fn shape(&self, x: f64) -> f64 {
        match *self {
            SlowlyVarying::Constant { .. } => 1.0,
            SlowlyVarying::LogPower { gamma, .. } => (std::f64::consts::E + x).ln().powf(gamma),
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        self.c() * self.shape(x)
    }

    pub fn name(&self) -> &'static str {
        match self {
            SlowlyVarying::Constant { .. } => "constant",
            SlowlyVarying::LogPower { .. } => "log-power",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Recurrence {
    Recurrent,
    Transient,
}

impl fmt::Display for Recurrence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Recurrence::Recurrent => "recurrent",
            Recurrence::Transient => "transient",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Entropy {
    /// −Σ_{|k|≤K} q(k) log q(k).
    pub truncated: f64,
    /// Contribution of |k| > K, from the analytic series.
    pub tail: f64,
}

impl Entropy {
    pub fn total(&self) -> f64 {
        self.truncated + self.tail
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingSequence {
    /// `values[n - 1] = a_n`.
    pub values: Vec<u64>,
    pub rule: &'static str,
}

impl ScalingSequence {
    pub const RULE: &'static str = "a_n = min{a >= 1 : n * P(|X_1| > a) <= 1}";

    pub fn get(&self, n: u64) -> u64 {
        self.values[(n - 1) as usize]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WalkModel {
    alpha: f64,
    ell: SlowlyVarying,
    p0: f64,
    tail_cut: u64,
    eps_tail: f64,
    /// q(k) for k = 0..=K (not renormalized).
    #[serde(skip)]
    half: Vec<f64>,
    /// Renormalized kernel over −K..=K, index k + K.
    #[serde(skip)]
    kernel: Vec<f64>,
    /// Cumulative renormalized mass of |X| ≤ k, k = 0..=K.
    #[serde(skip)]
    cumulative: Vec<f64>,
}

impl WalkModel {
    /// Builds the law with the smallest K whose analytic tail mass is at most
    /// `tail_tolerance`.
    pub fn build(alpha: f64, ell: SlowlyVarying, p0: f64, tail_tolerance: f64) -> Result<Self> {
        if !(tail_tolerance > 0.0 && tail_tolerance < 1.0) {
            return Err(Error::invalid("tail_tolerance", "must lie in (0, 1)"));
        }
        let proto = Self::normalized(alpha, ell, p0)?;
        let t = |k: u64| proto.tail_prob(k);
        let mut hi = 1u64;
        while t(hi) > tail_tolerance {
            if hi >= MAX_TAIL_CUT {
                return Err(Error::invalid(
                    "tail_tolerance",
                    format!(
                        "{tail_tolerance:e} needs a support beyond K = {MAX_TAIL_CUT}; \
                         raise the tolerance or set tail_cut explicitly"
                    ),
                ));
            }
            hi *= 2;
        }
        let mut lo = hi / 2;
        // invariant: t(hi) <= tol, and lo == 0 or t(lo) > tol
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if t(mid) <= tail_tolerance {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(proto.truncate(hi))
    }

    /// Builds the law truncated at an explicit support bound K.
    pub fn with_tail_cut(alpha: f64, ell: SlowlyVarying, p0: f64, tail_cut: u64) -> Result<Self> {
        if tail_cut == 0 || tail_cut > MAX_TAIL_CUT {
            return Err(Error::invalid(
                "tail_cut",
                format!("must lie in 1..={MAX_TAIL_CUT}"),
            ));
        }
        Ok(Self::normalized(alpha, ell, p0)?.truncate(tail_cut))
    }

    fn normalized(alpha: f64, ell: SlowlyVarying, p0: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::invalid("alpha", format!("must be a positive real, got {alpha}")));
        }
        if !(0.0..1.0).contains(&p0) {
            return Err(Error::invalid("p0", format!("must lie in [0, 1), got {p0}")));
        }
        if !ell.gamma().is_finite() {
            return Err(Error::invalid("L.gamma", "must be finite"));
        }
        let series = tail_series(|x| ell.shape(x) * x.powf(-alpha - 1.0), 1);
        if !(series.is_finite() && series > 0.0) {
            return Err(Error::invalid("L", "tail series cannot be normalized"));
        }
        let c = (1.0 - p0) / (2.0 * series);
        Ok(WalkModel {
            alpha,
            ell: ell.with_c(c),
            p0,
            tail_cut: 0,
            eps_tail: 1.0 - p0,
            half: vec![p0],
            kernel: Vec::new(),
            cumulative: Vec::new(),
        })
    }

    fn truncate(mut self, k_cut: u64) -> Self {
        let mut half = Vec::with_capacity(k_cut as usize + 1);
        half.push(self.p0);
        for k in 1..=k_cut {
            half.push(self.analytic_pmf(k));
        }
        let eps = self.tail_prob(k_cut);
        let norm = 1.0 - eps;
        let kk = k_cut as usize;
        let mut kernel = vec![0.0; 2 * kk + 1];
        let mut cumulative = Vec::with_capacity(kk + 1);
        let mut acc = 0.0;
        for (k, &q) in half.iter().enumerate() {
            let r = q / norm;
            kernel[kk + k] = r;
            kernel[kk - k] = r;
            acc += if k == 0 { r } else { 2.0 * r };
            cumulative.push(acc);
        }
        *cumulative.last_mut().expect("non-empty") = 1.0;
        self.tail_cut = k_cut;
        self.eps_tail = eps;
        self.half = half;
        self.kernel = kernel;
        self.cumulative = cumulative;
        self
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// The slowly varying factor with its solved constant.
    pub fn ell(&self) -> SlowlyVarying {
        self.ell
    }

    pub fn c(&self) -> f64 {
        self.ell.c()
    }

    pub fn p0(&self) -> f64 {
        self.p0
    }

    pub fn tail_cut(&self) -> u64 {
        self.tail_cut
    }

    pub fn eps_tail(&self) -> f64 {
        self.eps_tail
    }

    /// q(k) of the untruncated law.
    #[inline]
    pub fn analytic_pmf(&self, k: u64) -> f64 {
        if k == 0 {
            self.p0
        } else {
            let x = k as f64;
            self.ell.eval(x) * x.powf(-self.alpha - 1.0)
        }
    }

    /// q(k) on the truncated support, zero beyond K.
    pub fn pmf(&self, k: i64) -> f64 {
        let a = k.unsigned_abs();
        if a > self.tail_cut {
            0.0
        } else {
            self.half[a as usize]
        }
    }

    /// Renormalized kernel over −K..=K (index k + K).
    pub fn kernel(&self) -> &[f64] {
        &self.kernel
    }

    /// P(|X_1| > a) for the untruncated law.
    pub fn tail_prob(&self, a: u64) -> f64 {
        let alpha = self.alpha;
        let ell = self.ell;
        2.0 * tail_series(|x| ell.eval(x) * x.powf(-alpha - 1.0), a + 1)
    }

    /// P(|X_1| > ⌊a⌋) for real a ≥ 0, valid beyond the u64 range.
    pub fn tail_prob_real(&self, a: f64) -> f64 {
        let alpha = self.alpha;
        let ell = self.ell;
        2.0 * tail_series_f64(|x| ell.eval(x) * x.powf(-alpha - 1.0), a.floor() + 1.0)
    }

    /// Draws an increment from the renormalized truncated law.
    pub fn sample_increment(&self, rng: &mut CounterRng) -> i64 {
        let bits = rng.next_u64();
        let u = crate::rng::unit_open(bits);
        let k = self.cumulative.partition_point(|&c| c < u) as i64;
        let k = k.min(self.tail_cut as i64);
        // the lowest bit was discarded by unit_open and is free for the sign
        if bits & 1 == 1 {
            -k
        } else {
            k
        }
    }

    /// Entropy of the law: truncated support plus analytic tail contribution.
    pub fn entropy(&self) -> Entropy {
        let mut truncated = 0.0;
        for (k, &q) in self.half.iter().enumerate() {
            if q > 0.0 {
                let term = -q * q.ln();
                truncated += if k == 0 { term } else { 2.0 * term };
            }
        }
        let alpha = self.alpha;
        let ell = self.ell;
        let tail = 2.0
            * tail_series(
                |x| {
                    let q = ell.eval(x) * x.powf(-alpha - 1.0);
                    -q * q.ln()
                },
                self.tail_cut + 1,
            );
        Entropy { truncated, tail }
    }

    pub fn classify_recurrence(&self) -> Recurrence {
        classify(self.alpha, &self.ell)
    }

    /// a_n for a single n, by bisection on the analytic tail.
    pub fn scaling_at(&self, n: u64) -> u64 {
        assert!(n >= 1);
        let ok = |a: u64| n as f64 * self.tail_prob(a) <= 1.0;
        if ok(1) {
            return 1;
        }
        let mut hi = 2u64;
        while !ok(hi) {
            hi = hi.checked_mul(2).expect("scaling value overflows u64");
        }
        let mut lo = hi / 2;
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if ok(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    /// a_1, …, a_{N_max}.
    pub fn scaling_sequence(&self, n_max: u64) -> ScalingSequence {
        assert!(n_max >= 1);
        let a_top = self.scaling_at(n_max);
        let mut values = Vec::with_capacity(n_max as usize);
        if a_top <= 1 << 24 {
            // T(a) for a = 0..=a_top by backward recursion
            let top = a_top as usize;
            let mut t = vec![0.0; top + 1];
            t[top] = self.tail_prob(a_top);
            for a in (0..top).rev() {
                t[a] = t[a + 1] + 2.0 * self.analytic_pmf(a as u64 + 1);
            }
            let mut a = 1usize;
            for n in 1..=n_max {
                while a < top && n as f64 * t[a] > 1.0 {
                    a += 1;
                }
                values.push(a as u64);
            }
        } else {
            let mut prev = 1;
            for n in 1..=n_max {
                let v = self.scaling_at(n).max(prev);
                values.push(v);
                prev = v;
            }
        }
        ScalingSequence {
            values,
            rule: ScalingSequence::RULE,
        }
    }
}

/// Recurrence classification of the untruncated law.
///
/// α > 1 is recurrent and α < 1 transient. At α = 1 the walk is recurrent
/// iff Σ 1/(n ℓ(n)) diverges, which for ℓ = ln(e+x)^γ means γ ≤ 1.
pub fn classify(alpha: f64, ell: &SlowlyVarying) -> Recurrence {
    if alpha > 1.0 {
        Recurrence::Recurrent
    } else if alpha < 1.0 {
        Recurrence::Transient
    } else {
        match ell {
            SlowlyVarying::Constant { .. } => Recurrence::Recurrent,
            SlowlyVarying::LogPower { gamma, .. } => {
                if *gamma <= 1.0 {
                    Recurrence::Recurrent
                } else {
                    Recurrence::Transient
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::domain;

    fn lazy15() -> WalkModel {
        WalkModel::build(1.5, SlowlyVarying::constant(), 0.5, 1e-4).unwrap()
    }

    #[test]
    fn constant_normalization_matches_zeta() {
        let w = lazy15();
        // ζ(2.5)
        let c = 0.5 / (2.0 * 1.341_487_257_250_917);
        assert!((w.c() - c).abs() < 1e-14);
        assert!((w.pmf(1) - c).abs() < 1e-15);
        assert_eq!(w.pmf(0), 0.5);
    }

    #[test]
    fn mass_balance_and_symmetry() {
        for (alpha, ell, p0, tol) in [
            (1.5, SlowlyVarying::constant(), 0.5, 1e-4),
            (0.8, SlowlyVarying::constant(), 0.3, 1e-2),
            (1.0, SlowlyVarying::log_power(2.0), 0.2, 1e-3),
            (2.5, SlowlyVarying::log_power(-1.0), 0.0, 1e-8),
        ] {
            let w = WalkModel::build(alpha, ell, p0, tol).unwrap();
            let k = w.tail_cut() as i64;
            let total: f64 = (-k..=k).map(|x| w.pmf(x)).sum();
            assert!((total + w.eps_tail() - 1.0).abs() < 1e-12, "{alpha}: {total}");
            assert!(w.eps_tail() <= tol);
            assert!(w.tail_prob(w.tail_cut() - 1) > tol || w.tail_cut() == 1);
            for x in 0..=k {
                assert_eq!(w.pmf(x), w.pmf(-x));
            }
            assert_eq!(w.pmf(k + 1), 0.0);
            let ksum: f64 = w.kernel().iter().sum();
            assert!((ksum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_degenerate_parameters() {
        let l = SlowlyVarying::constant();
        assert!(WalkModel::build(1.5, l, 1.0, 1e-4).is_err());
        assert!(WalkModel::build(0.0, l, 0.5, 1e-4).is_err());
        assert!(WalkModel::build(-1.0, l, 0.5, 1e-4).is_err());
        assert!(WalkModel::build(1.5, l, -0.1, 1e-4).is_err());
        assert!(WalkModel::build(0.8, l, 0.5, 1e-12).is_err());
    }

    #[test]
    fn recurrence_table() {
        let c = SlowlyVarying::constant();
        assert_eq!(classify(1.5, &c), Recurrence::Recurrent);
        assert_eq!(classify(2.0, &c), Recurrence::Recurrent);
        assert_eq!(classify(0.8, &c), Recurrence::Transient);
        assert_eq!(classify(1.0, &c), Recurrence::Recurrent);
        assert_eq!(classify(1.0, &SlowlyVarying::log_power(2.0)), Recurrence::Transient);
        assert_eq!(classify(1.0, &SlowlyVarying::log_power(1.0)), Recurrence::Recurrent);
        assert_eq!(classify(1.0, &SlowlyVarying::log_power(-0.5)), Recurrence::Recurrent);
    }

    #[test]
    fn scaling_sequence_is_minimal() {
        let w = lazy15();
        let seq = w.scaling_sequence(3000);
        assert_eq!(seq.get(1), 1);
        for n in 1..=3000u64 {
            let a = seq.get(n);
            assert!(n as f64 * w.tail_prob(a) <= 1.0);
            if a > 1 {
                assert!(n as f64 * w.tail_prob(a - 1) > 1.0, "n = {n}");
            }
            if n > 1 {
                assert!(a >= seq.get(n - 1));
            }
        }
        for n in [1u64, 17, 500, 2999] {
            assert_eq!(w.scaling_at(n), seq.get(n));
        }
    }

    #[test]
    fn entropy_against_direct_sum() {
        let w = lazy15();
        let k = w.tail_cut() as i64;
        let direct: f64 = (-k..=k).map(|x| w.pmf(x)).map(|q| -q * q.ln()).sum();
        let h = w.entropy();
        assert!((h.truncated - direct).abs() < 1e-12);
        assert!(h.tail > 0.0 && h.tail < 1e-2);
        assert!(h.truncated <= ((2 * k + 1) as f64).ln());
    }

    #[test]
    fn sampling_is_deterministic_and_in_range() {
        let w = WalkModel::build(1.5, SlowlyVarying::constant(), 0.5, 1e-2).unwrap();
        let mut a = CounterRng::new(11, domain::WALK_PATHS, 0, 0);
        let mut b = CounterRng::new(11, domain::WALK_PATHS, 0, 0);
        for _ in 0..1000 {
            let x = w.sample_increment(&mut a);
            assert_eq!(x, w.sample_increment(&mut b));
            assert!(x.unsigned_abs() <= w.tail_cut());
        }
    }
}
