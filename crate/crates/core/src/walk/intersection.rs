//! Intersection probability of two independent copies of a transient walk.
//!
//! π_p = P(∃ n ≥ 1 : S_n = S̃_n) = 1 − 1/G with G = Σ_{n≥0} P(Y_n = 0), where
//! Y = S − S̃. The partial sum up to the horizon H is evaluated exactly on a
//! periodic lattice of size M ≫ a_H through the characteristic function:
//!
//! ```text
//! G_H = (1/M) Σ_j (1 − ψ_j^{H+1}) / (1 − ψ_j),   ψ_j = φ(2πj/M)²
//! ```
//!
//! The remainder Σ_{n>H} P(Y_n = 0) is completed with the local-limit decay
//! P(Y_n = 0) ≈ c / a_n, with c fitted over the last decade [H/10, H]; the
//! spread of the fitted constant brackets the completion.

use realfft::RealFftPlanner;
use serde::Serialize;

use super::{Recurrence, WalkModel};
use crate::error::{Error, Result};
use crate::special::integrate_to_infinity;

#[derive(Debug, Clone, Serialize)]
pub struct Intersection {
    pub pi_p: f64,
    /// Half-width of the interval induced by the tail-completion bracket.
    pub error_bound: f64,
    pub horizon: u64,
    /// Σ_{n=0}^{H} P(Y_n = 0).
    pub green_partial: f64,
    /// Estimated Σ_{n>H} P(Y_n = 0).
    pub green_tail: f64,
    pub lattice: usize,
}

struct Spectrum {
    /// (ψ_j, multiplicity) over the distinct frequencies j = 0..=M/2.
    psi: Vec<(f64, f64)>,
    m: usize,
}

impl Spectrum {
    fn new(walk: &WalkModel, m: usize) -> Self {
        let mut planner = RealFftPlanner::<f64>::new();
        let fft = planner.plan_fft_forward(m);
        let mut input = fft.make_input_vec();
        let reach = m / 4;
        input[0] = walk.p0();
        let mut total = walk.p0();
        for k in 1..=reach {
            let q = walk.analytic_pmf(k as u64);
            input[k] = q;
            input[m - k] = q;
            total += 2.0 * q;
        }
        for v in input.iter_mut() {
            *v /= total;
        }
        let mut out = fft.make_output_vec();
        fft.process(&mut input, &mut out)
            .expect("buffer sizes come from the planner");
        let half = m / 2;
        let psi = out
            .iter()
            .enumerate()
            .map(|(j, z)| {
                let phi = z.re;
                let mult = if j == 0 || j == half { 1.0 } else { 2.0 };
                (phi * phi, mult)
            })
            .collect();
        Spectrum { psi, m }
    }

    fn return_prob(&self, n: u64) -> f64 {
        let s: f64 = self
            .psi
            .iter()
            .map(|&(p, w)| w * p.powf(n as f64))
            .sum();
        s / self.m as f64
    }

    fn green_partial(&self, h: u64) -> f64 {
        let e = (h + 1) as f64;
        let s: f64 = self
            .psi
            .iter()
            .map(|&(p, w)| {
                let one_minus = 1.0 - p;
                if one_minus <= 0.0 {
                    w * e
                } else {
                    w * -(e * p.ln()).exp_m1() / one_minus
                }
            })
            .sum();
        s / self.m as f64
    }
}

pub fn intersection_probability(walk: &WalkModel, horizon: u64) -> Result<Intersection> {
    if walk.classify_recurrence() == Recurrence::Recurrent {
        return Err(Error::NotApplicable(
            "walk is recurrent, so the intersection probability is 1".into(),
        ));
    }
    if horizon < 10 {
        return Err(Error::invalid("horizon", "must be at least 10"));
    }
    let a_h = walk.scaling_at(horizon);
    let m = (256 * a_h as usize)
        .next_power_of_two()
        .clamp(1 << 16, 1 << 23);
    let spec = Spectrum::new(walk, m);
    let green_partial = spec.green_partial(horizon);

    let lo = (horizon / 10).max(1);
    let points = 16;
    let mut fits = Vec::with_capacity(points);
    for i in 0..points {
        let f = i as f64 / (points - 1) as f64;
        let n = ((lo as f64).ln() * (1.0 - f) + (horizon as f64).ln() * f)
            .exp()
            .round() as u64;
        fits.push(spec.return_prob(n) * walk.scaling_at(n) as f64);
    }
    let c_last = *fits.last().expect("non-empty");
    let c_min = fits.iter().copied().fold(f64::INFINITY, f64::min);
    let c_max = fits.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    // Σ_{n>H} 1/a_n ≈ ∫_{a_H}^∞ N(a)/a² da with N(a) = #{n > H : a_n ≤ a}.
    let h = horizon as f64;
    let inv_sum = integrate_to_infinity(
        |a| {
            let t = walk.tail_prob_real(a);
            let count = (1.0 / t - h).max(0.0);
            count / (a * a)
        },
        a_h as f64,
    );

    let pi = |g: f64| 1.0 - 1.0 / g;
    let green_tail = c_last * inv_sum;
    let pi_p = pi(green_partial + green_tail);
    let lo_pi = pi(green_partial + c_min * inv_sum);
    let hi_pi = pi(green_partial + c_max * inv_sum);
    let error_bound = (pi_p - lo_pi).abs().max((hi_pi - pi_p).abs());
    Ok(Intersection {
        pi_p,
        error_bound,
        horizon,
        green_partial,
        green_tail,
        lattice: m,
    })
}
