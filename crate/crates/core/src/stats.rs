//! Small statistics helpers shared by the Monte Carlo diagnostics.

use serde::Serialize;

/// One-sided 99% standard normal quantile.
pub const Z99: f64 = 2.326_347_874_040_841;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanSe {
    pub mean: f64,
    /// Standard error of the mean; NaN when fewer than two samples.
    pub se: f64,
    pub n: usize,
}

impl MeanSe {
    pub fn se_defined(&self) -> bool {
        self.se.is_finite()
    }
}

pub fn mean_se(xs: &[f64]) -> MeanSe {
    let n = xs.len();
    if n == 0 {
        return MeanSe {
            mean: f64::NAN,
            se: f64::NAN,
            n,
        };
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let se = if n < 2 {
        f64::NAN
    } else {
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    };
    MeanSe { mean, se, n }
}

/// Linear-interpolated quantile of unsorted data.
pub fn quantile(xs: &[f64], p: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = p.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

pub fn median(xs: &[f64]) -> f64 {
    quantile(xs, 0.5)
}

/// Ordinary least squares slope and intercept of y on x.
pub fn ols(x: &[f64], y: &[f64]) -> (f64, f64) {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Jackknife estimate and standard error of a statistic of `n` units.
///
/// `stat(skip)` evaluates the statistic with unit `skip` removed, or with
/// all units when `skip` is `None`.
pub fn jackknife(n: usize, stat: impl Fn(Option<usize>) -> f64) -> (f64, f64) {
    let full = stat(None);
    if n < 2 {
        return (full, f64::NAN);
    }
    let leave: Vec<f64> = (0..n).map(|i| stat(Some(i))).collect();
    let m = leave.iter().sum::<f64>() / n as f64;
    let var = leave.iter().map(|v| (v - m).powi(2)).sum::<f64>() * (n - 1) as f64 / n as f64;
    (full, var.sqrt())
}
