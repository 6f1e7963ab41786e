use polymerlab::conv::Convolver;
use polymerlab::rng::{domain, CounterRng};
use polymerlab::walk::{classify, intersection_probability, Recurrence, SlowlyVarying, WalkModel};
use proptest::prelude::*;

fn lazy15(tol: f64) -> WalkModel {
    WalkModel::build(1.5, SlowlyVarying::constant(), 0.5, tol).unwrap()
}

// Σ_{k≥1} k^{-s} by direct summation to 10^6 plus the integral bracket
// ∫_{M+1}^∞ ≤ tail ≤ ∫_M^∞, using the midpoint of the bracket.
fn zeta_direct(s: f64) -> f64 {
    let m = 1_000_000u64;
    let mut sum = 0.0;
    for k in (1..=m).rev() {
        sum += (k as f64).powf(-s);
    }
    let lo = ((m + 1) as f64).powf(1.0 - s) / (s - 1.0);
    let hi = (m as f64).powf(1.0 - s) / (s - 1.0);
    sum + 0.5 * (lo + hi)
}

#[test]
fn normalizing_constant_matches_direct_series() {
    let w = lazy15(1e-4);
    let c = 0.5 / (2.0 * zeta_direct(2.5));
    assert!((w.c() - c).abs() < 1e-12 * c);
    assert!((w.pmf(1) - c).abs() < 1e-12 * c);
    assert_eq!(w.pmf(0), 0.5);
}

#[test]
fn degenerate_walk_rejected() {
    assert!(WalkModel::build(1.5, SlowlyVarying::constant(), 1.0, 1e-4).is_err());
}

#[test]
fn sampled_increments_match_lazy_mass_and_symmetry() {
    let w = lazy15(1e-4);
    let mut rng = CounterRng::new(99, domain::WALK_PATHS, 0, 0);
    let draws = 1_000_000;
    let mut zeros = 0u64;
    let mut sum = 0.0;
    let mut sum2 = 0.0;
    for _ in 0..draws {
        let x = w.sample_increment(&mut rng);
        assert!(x.unsigned_abs() <= w.tail_cut());
        if x == 0 {
            zeros += 1;
        }
        sum += x as f64;
        sum2 += (x * x) as f64;
    }
    let n = draws as f64;
    let freq = zeros as f64 / n;
    let se = (0.5f64 * 0.5 / n).sqrt();
    assert!((freq - 0.5).abs() < 3.0 * se, "freq {freq}");
    let mean = sum / n;
    let var = sum2 / n - mean * mean;
    assert!(mean.abs() < 3.0 * (var / n).sqrt(), "mean {mean}");

    let mut a = CounterRng::new(5, domain::WALK_PATHS, 1, 2);
    let mut b = a.clone();
    assert_eq!(w.sample_increment(&mut a), w.sample_increment(&mut b));
}

#[test]
fn scaling_sequence_is_regularly_varying_with_index_two_thirds() {
    let w = lazy15(1e-4);
    let seq = w.scaling_sequence(100_000);
    assert_eq!(seq.get(1), 1);
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..=30 {
        let n = (100.0 * 1000f64.powf(i as f64 / 30.0)).round() as u64;
        let r = seq.get(n) as f64 / (n as f64).powf(2.0 / 3.0);
        lo = lo.min(r);
        hi = hi.max(r);
        xs.push((n as f64).ln());
        ys.push((seq.get(n) as f64).ln());
    }
    assert!(lo > 0.2 && hi < 2.0 && hi / lo < 1.2, "ratio range [{lo}, {hi}]");
    let (slope, _) = polymerlab::stats::ols(&xs, &ys);
    assert!((slope - 2.0 / 3.0).abs() < 0.01, "slope {slope}");
    for n in 2..=100_000u64 {
        assert!(seq.get(n) >= seq.get(n - 1));
    }
}

#[test]
fn entropy_matches_high_precision_summation() {
    let w = lazy15(1e-4);
    let k = w.tail_cut();
    // pairwise summation of the smallest terms first, independent of the
    // library's accumulation order
    let mut terms: Vec<f64> = (1..=k)
        .map(|j| {
            let q = w.c() * (j as f64).powf(-2.5);
            -2.0 * q * q.ln()
        })
        .collect();
    terms.sort_by(f64::total_cmp);
    let mut acc = -0.5f64 * 0.5f64.ln();
    let mut comp = 0.0;
    for t in terms {
        let y = t - comp;
        let s = acc + y;
        comp = (s - acc) - y;
        acc = s;
    }
    let h = w.entropy();
    assert!((h.truncated - acc).abs() < 1e-13, "{} vs {acc}", h.truncated);
    assert!(h.truncated <= ((2 * k + 1) as f64).ln());

    let point = WalkModel::with_tail_cut(1.5, SlowlyVarying::constant(), 0.0, 1).unwrap();
    assert!(point.entropy().truncated > 0.0);
}

#[test]
fn difference_law_by_convolution_matches_double_sum() {
    let w = WalkModel::with_tail_cut(1.5, SlowlyVarying::constant(), 0.4, 50).unwrap();
    let q = w.kernel();
    let mut conv = Convolver::new(q);
    let mut out = Vec::new();
    // X − X̃ has kernel q ⋆ reverse(q) = q ⋆ q by symmetry
    let rev: Vec<f64> = q.iter().rev().copied().collect();
    conv.convolve(&rev, &mut out);
    let k = 50i64;
    for d in -2 * k..=2 * k {
        let mut brute = 0.0;
        for x in -k..=k {
            let y = x - d;
            if y.abs() <= k {
                brute += q[(x + k) as usize] * q[(y + k) as usize];
            }
        }
        assert!((out[(d + 2 * k) as usize] - brute).abs() < 1e-12);
    }
}

#[test]
fn recurrence_table() {
    let c = SlowlyVarying::constant();
    assert_eq!(classify(1.5, &c), Recurrence::Recurrent);
    assert_eq!(classify(0.8, &c), Recurrence::Transient);
    assert_eq!(classify(1.0, &c), Recurrence::Recurrent);
    assert_eq!(classify(1.0, &SlowlyVarying::log_power(2.0)), Recurrence::Transient);
    let w = WalkModel::build(1.0, SlowlyVarying::log_power(2.0), 0.3, 1e-2).unwrap();
    assert_eq!(w.classify_recurrence(), Recurrence::Transient);
}

#[test]
fn intersection_probability_is_stable_under_horizon_doubling() {
    let w = WalkModel::build(0.8, SlowlyVarying::constant(), 0.3, 1e-2).unwrap();
    let a = intersection_probability(&w, 1 << 12).unwrap();
    let b = intersection_probability(&w, 1 << 13).unwrap();
    eprintln!("pi_p: {a:?}\n      {b:?}");
    assert!(a.pi_p > 0.0 && a.pi_p < 1.0);
    assert!((a.pi_p - b.pi_p).abs() < 5e-4, "{} vs {}", a.pi_p, b.pi_p);
    assert!(intersection_probability(&lazy15(1e-2), 1 << 12).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn constructed_laws_are_normalized_and_symmetric(
        alpha in 0.6f64..3.0,
        p0 in 0.0f64..0.95,
        gamma in -2.0f64..2.0,
        log_family in any::<bool>(),
        tol_exp in 2i32..6,
    ) {
        let ell = if log_family { SlowlyVarying::log_power(gamma) } else { SlowlyVarying::constant() };
        let tol = 10f64.powi(-tol_exp);
        if let Ok(w) = WalkModel::build(alpha, ell, p0, tol) {
            let k = w.tail_cut() as i64;
            let total: f64 = (-k..=k).map(|x| w.pmf(x)).sum();
            prop_assert!((total + w.eps_tail() - 1.0).abs() < 1e-12);
            prop_assert!(w.eps_tail() <= tol);
            for x in 1..=k {
                prop_assert_eq!(w.pmf(x), w.pmf(-x));
            }
            prop_assert_eq!(w.pmf(0), p0);
        }
    }

    #[test]
    fn slowly_varying_ratio_tends_to_one(gamma in -3.0f64..3.0, t in 0.5f64..4.0) {
        let l = SlowlyVarying::log_power(gamma);
        let r6 = (l.eval(1e6 * t) / l.eval(1e6) - 1.0).abs();
        let r12 = (l.eval(1e12 * t) / l.eval(1e12) - 1.0).abs();
        prop_assert!(r12 <= r6 + 1e-15);
        prop_assert!(l.eval(1.0) > 0.0 && l.eval(1.0).is_finite());
    }
}
