//! Special functions and series/quadrature helpers.

use std::sync::OnceLock;

/// Inverse standard normal CDF (Wichura's AS241, PPND16).
///
/// Relative accuracy about 1e-16 over (0, 1). This is the pinned algorithm
/// for Gaussian environment draws; changing it changes every stored result.
#[allow(clippy::excessive_precision)]
pub fn inv_norm_cdf(p: f64) -> f64 {
    const A: [f64; 8] = [
        3.387_132_872_796_366_608_0,
        1.331_416_678_917_843_774_5e2,
        1.971_590_950_306_551_442_7e3,
        1.373_169_376_550_946_112_5e4,
        4.592_195_393_154_987_145_7e4,
        6.726_577_092_700_870_085_3e4,
        3.343_057_558_358_812_810_5e4,
        2.509_080_928_730_122_672_7e3,
    ];
    const B: [f64; 8] = [
        1.0,
        4.231_333_070_160_091_125_2e1,
        6.871_870_074_920_579_083_0e2,
        5.394_196_021_424_751_107_7e3,
        2.121_379_430_158_659_586_7e4,
        3.930_789_580_009_271_061_0e4,
        2.872_908_573_572_194_267_4e4,
        5.226_495_278_852_854_561_0e3,
    ];
    const C: [f64; 8] = [
        1.423_437_110_749_683_577_34,
        4.630_337_846_156_545_295_90,
        5.769_497_221_460_691_405_50,
        3.647_848_324_763_204_605_04,
        1.270_458_252_452_368_382_58,
        2.417_807_251_774_506_117_70e-1,
        2.272_384_498_926_918_458_33e-2,
        7.745_450_142_783_414_076_40e-4,
    ];
    const D: [f64; 8] = [
        1.0,
        2.053_191_626_637_758_821_87,
        1.676_384_830_183_803_849_40,
        6.897_673_349_851_000_045_50e-1,
        1.481_039_764_274_800_745_90e-1,
        1.519_866_656_361_645_719_66e-2,
        5.475_938_084_995_344_946_00e-4,
        1.050_750_071_644_416_843_24e-9,
    ];
    const E: [f64; 8] = [
        6.657_904_643_501_103_777_20,
        5.463_784_911_164_114_369_90,
        1.784_826_539_917_291_335_80,
        2.965_605_718_285_048_912_30e-1,
        2.653_218_952_657_612_309_30e-2,
        1.242_660_947_388_078_438_60e-3,
        2.711_555_568_743_487_578_15e-5,
        2.010_334_399_292_288_132_65e-7,
    ];
    const F: [f64; 8] = [
        1.0,
        5.998_322_065_558_879_376_90e-1,
        1.369_298_809_227_358_053_10e-1,
        1.487_536_129_085_061_485_25e-2,
        7.868_691_311_456_132_591_00e-4,
        1.846_318_317_510_054_681_80e-5,
        1.421_511_758_316_445_888_70e-7,
        2.044_263_103_389_939_785_64e-15,
    ];

    fn rational(num: &[f64; 8], den: &[f64; 8], r: f64) -> f64 {
        let mut n = num[7];
        let mut d = den[7];
        for i in (0..7).rev() {
            n = n * r + num[i];
            d = d * r + den[i];
        }
        n / d
    }

    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q * rational(&A, &B, r);
    }
    let r = if q < 0.0 { p } else { 1.0 - p };
    let r = (-r.ln()).sqrt();
    let x = if r <= 5.0 {
        rational(&C, &D, r - 1.6)
    } else {
        rational(&E, &F, r - 5.0)
    };
    if q < 0.0 {
        -x
    } else {
        x
    }
}

/// 16-point Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre_16() -> &'static [(f64, f64); 16] {
    static NODES: OnceLock<[(f64, f64); 16]> = OnceLock::new();
    NODES.get_or_init(gauss_legendre::<16>)
}

fn gauss_legendre<const N: usize>() -> [(f64, f64); N] {
    let mut out = [(0.0, 0.0); N];
    let n = N as f64;
    for i in 0..N.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=N {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out[i] = (x, w);
        out[N - 1 - i] = (-x, w);
    }
    out
}

/// ∫_a^b g by one 16-point Gauss-Legendre panel.
pub fn gl_panel(g: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    gauss_legendre_16()
        .iter()
        .map(|&(x, w)| w * g(mid + half * x))
        .sum::<f64>()
        * half
}

/// ∫_{x0}^∞ f(x) dx for a positive, eventually regularly varying integrand.
///
/// Integrates in t = log(x/x0) over widening panels; once the integrand is
/// negligible (or x would leave the f64 range) the remainder is closed with
/// the local exponential decay rate in t.
pub fn integrate_to_infinity(f: impl Fn(f64) -> f64, x0: f64) -> f64 {
    assert!(x0 > 0.0);
    let g = |t: f64| {
        let x = x0 * t.exp();
        f(x) * x
    };
    let t_max = (1e300 / x0).ln();
    let mut total = 0.0;
    let mut t: f64 = 0.0;
    loop {
        let w = if t < 8.0 {
            0.5
        } else if t < 32.0 {
            1.0
        } else {
            4.0
        };
        let b = (t + w).min(t_max);
        total += gl_panel(&g, t, b);
        let ga = g(t);
        let gb = g(b);
        t = b;
        let rate = if ga > 0.0 && gb > 0.0 {
            (ga / gb).ln() / w
        } else {
            f64::INFINITY
        };
        let remainder = if gb <= 0.0 {
            0.0
        } else if rate > 0.0 {
            gb / rate
        } else {
            f64::INFINITY
        };
        if remainder <= 1e-17 * total || t >= t_max {
            if remainder.is_finite() {
                total += remainder;
            }
            return total;
        }
    }
}

/// Σ_{k ≥ m} f(k) for a smooth, eventually monotone summand (m ≥ 1).
///
/// Direct summation below 1000, Euler-Maclaurin beyond.
pub fn tail_series(f: impl Fn(f64) -> f64, m: u64) -> f64 {
    const DIRECT: u64 = 1000;
    let start = m.max(1);
    let split = start.max(DIRECT);
    let mut direct = 0.0;
    for k in (start..split).rev() {
        direct += f(k as f64);
    }
    direct + euler_maclaurin_tail(&f, split as f64)
}

/// [`tail_series`] for a start index given as an integral-valued float,
/// which may exceed the u64 range.
pub fn tail_series_f64(f: impl Fn(f64) -> f64, m: f64) -> f64 {
    if m < 1000.0 {
        tail_series(f, m.max(1.0) as u64)
    } else {
        euler_maclaurin_tail(&f, m)
    }
}

/// Σ_{k ≥ m} f(k) ≈ ∫_m^∞ f + f(m)/2 − f'(m)/12.
fn euler_maclaurin_tail(f: &impl Fn(f64) -> f64, m: f64) -> f64 {
    let h = m / 64.0;
    let d1 = (f(m - 2.0 * h) - 8.0 * f(m - h) + 8.0 * f(m + h) - f(m + 2.0 * h)) / (12.0 * h);
    integrate_to_infinity(f, m) + 0.5 * f(m) - d1 / 12.0
}

/// Hurwitz zeta ζ(s, q) = Σ_{k≥0} (q + k)^{−s}, for s > 1, q > 0.
pub fn hurwitz_zeta(s: f64, q: f64) -> f64 {
    assert!(s > 1.0 && q > 0.0);
    // B_{2j} / (2j)!
    const B: [f64; 8] = [
        1.0 / 12.0,
        -1.0 / 720.0,
        1.0 / 30_240.0,
        -1.0 / 1_209_600.0,
        1.0 / 47_900_160.0,
        -691.0 / 1_307_674_368_000.0,
        1.0 / 74_724_249_600.0,
        -3617.0 / 10_670_622_842_880_000.0,
    ];
    const N: usize = 24;
    let mut sum = 0.0;
    for k in (0..N).rev() {
        sum += (q + k as f64).powf(-s);
    }
    let x = q + N as f64;
    let xs = x.powf(-s);
    sum += x * xs / (s - 1.0) + 0.5 * xs;
    // term j: B_{2j}/(2j)! · s(s+1)…(s+2j−2) · x^{−s−2j+1}
    let mut rising = s;
    let mut pow = xs / x;
    for (j, b) in B.iter().enumerate() {
        sum += b * rising * pow;
        let k = 2.0 * j as f64;
        rising *= (s + k + 1.0) * (s + k + 2.0);
        pow /= x * x;
    }
    sum
}

/// log Σ exp(x_i), stable for large arguments.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    // Φ(x) from the complementary error function, computed independently of
    // the rational approximation (series for small |x|, Lentz continued
    // fraction for the tails).
    fn norm_cdf(x: f64) -> f64 {
        0.5 * erfc(-x / std::f64::consts::SQRT_2)
    }

    fn erfc(x: f64) -> f64 {
        if x < 0.0 {
            return 2.0 - erfc(-x);
        }
        if x < 2.5 {
            let mut term = x;
            let mut sum = x;
            let mut k = 0.0;
            loop {
                k += 1.0;
                term *= -x * x / k;
                let add = term / (2.0 * k + 1.0);
                sum += add;
                if add.abs() <= 1e-17 * sum.abs() {
                    break;
                }
            }
            1.0 - 2.0 / std::f64::consts::PI.sqrt() * sum
        } else {
            // erfc(x) = exp(-x²)/√π · 1/(x + 1/2/(x + 1/(x + 3/2/(x + …))))
            let tiny = 1e-300;
            let mut f = x;
            let mut c = x;
            let mut d = 0.0;
            for k in 1..300 {
                let a = k as f64 / 2.0;
                d = x + a * d;
                d = if d.abs() < tiny { tiny } else { d };
                c = x + a / c;
                c = if c.abs() < tiny { tiny } else { c };
                d = 1.0 / d;
                let delta = c * d;
                f *= delta;
                if (delta - 1.0).abs() < 1e-16 {
                    break;
                }
            }
            (-x * x).exp() / std::f64::consts::PI.sqrt() / f
        }
    }

    #[test]
    fn inverse_normal_round_trips() {
        for &p in &[1e-300, 1e-20, 1e-10, 1e-4, 0.01, 0.02425, 0.1, 0.3, 0.5, 0.7, 0.9, 0.975, 0.999] {
            let x = inv_norm_cdf(p);
            let back = norm_cdf(x);
            let rel = ((back - p) / p).abs();
            assert!(rel < 1e-9, "p = {p}: x = {x}, Φ(x) = {back}");
        }
        assert_eq!(inv_norm_cdf(0.5), 0.0);
        assert!((inv_norm_cdf(0.975) - 1.959_963_984_540_054).abs() < 1e-14);
        assert!((inv_norm_cdf(0.3) + inv_norm_cdf(0.7)).abs() < 1e-15);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let nodes = gauss_legendre_16();
        let wsum: f64 = nodes.iter().map(|n| n.1).sum();
        assert!((wsum - 2.0).abs() < 1e-14);
        // ∫_{-1}^{1} x^30 = 2/31
        let v: f64 = nodes.iter().map(|&(x, w)| w * x.powi(30)).sum();
        assert!((v - 2.0 / 31.0).abs() < 1e-14);
    }

    #[test]
    fn integral_of_power_law() {
        for &s in &[1.2, 1.8, 2.5, 4.0] {
            let exact = 10f64.powf(1.0 - s) / (s - 1.0);
            let v = integrate_to_infinity(|x| x.powf(-s), 10.0);
            assert!(((v - exact) / exact).abs() < 1e-12, "s = {s}: {v} vs {exact}");
        }
    }

    #[test]
    fn tail_series_matches_zeta() {
        // ζ(2) = π²/6, ζ(2.5) = 1.341487257250917…
        let z2 = tail_series(|x| x.powi(-2), 1);
        assert!((z2 - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-13);
        let z25 = tail_series(|x| x.powf(-2.5), 1);
        assert!((z25 - 1.341_487_257_250_917).abs() < 1e-13);
        let z25h = hurwitz_zeta(2.5, 1.0);
        assert!((z25h - 1.341_487_257_250_917).abs() < 1e-14);
        let z11 = hurwitz_zeta(1.1, 1.0);
        assert!((z11 - 10.584_448_464_950_81).abs() < 1e-11, "{z11}");
    }

    #[test]
    fn tail_series_from_large_start() {
        let s = 1.8;
        let m = 5000u64;
        let v = tail_series(|x| x.powf(-s), m);
        let h = hurwitz_zeta(s, m as f64);
        assert!(((v - h) / h).abs() < 1e-12);
    }

    #[test]
    fn log_sum_exp_is_stable() {
        let v = log_sum_exp(&[1000.0, 1000.0]);
        assert!((v - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
    }
}
