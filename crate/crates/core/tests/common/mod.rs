//! Brute-force path enumeration, independent of the transfer matrix.

#![allow(dead_code)]

use std::collections::BTreeMap;

use polymerlab::environment::Environment;

/// Exact quantities at time n obtained by summing over every path.
#[derive(Debug, Clone)]
pub struct Enumerated {
    pub log_z: f64,
    /// ρ_n(x).
    pub endpoint: BTreeMap<i64, f64>,
    /// I_n = Σ_x μ_n(x)², μ_n = law of S_n when the last step is free.
    pub overlap: f64,
}

/// Every path of length `n` with increments in `-K..=K`, weighted by
/// `kernel[k + K]` and `exp(β ω(i, S_i) − λ)`.
fn paths(kernel: &[f64], field: &dyn Environment, beta: f64, lambda: f64, n: u64) -> Vec<(i64, f64)> {
    let k = (kernel.len() / 2) as i64;
    let mut out = vec![(0i64, 1.0f64)];
    for i in 1..=n {
        let mut next = Vec::with_capacity(out.len() * kernel.len());
        for &(x, w) in &out {
            for j in -k..=k {
                let y = x + j;
                let q = kernel[(j + k) as usize];
                next.push((y, w * q * (beta * field.omega(i, y) - lambda).exp()));
            }
        }
        out = next;
    }
    out
}

pub fn enumerate(
    kernel: &[f64],
    field: &dyn Environment,
    beta: f64,
    lambda: f64,
    n: u64,
) -> Enumerated {
    assert!(n >= 1);
    let full = paths(kernel, field, beta, lambda, n);
    let z: f64 = full.iter().map(|p| p.1).sum();
    let mut endpoint = BTreeMap::new();
    for &(x, w) in &full {
        *endpoint.entry(x).or_insert(0.0) += w / z;
    }

    let k = (kernel.len() / 2) as i64;
    let head = paths(kernel, field, beta, lambda, n - 1);
    let z_head: f64 = head.iter().map(|p| p.1).sum();
    let mut mu: BTreeMap<i64, f64> = BTreeMap::new();
    for &(x, w) in &head {
        for j in -k..=k {
            *mu.entry(x + j).or_insert(0.0) += w / z_head * kernel[(j + k) as usize];
        }
    }
    Enumerated {
        log_z: z.ln(),
        endpoint,
        overlap: mu.values().map(|m| m * m).sum(),
    }
}

/// Small instances of every experiment kind.
pub const TINY: &[(&str, &str)] = &[
    ("free-energy", "replicas = 6\n[walk]\nalpha = 1.2\ntail_cut = 6\n[grid]\nbeta = [0.0, 0.8]\nn = [8, 16]\n"),
    ("phase-scan", "replicas = 6\n[walk]\ntail_cut = 6\n[grid]\nalpha = [0.8, 1.5]\nbeta = [0.5, 1.5]\n[phase]\nn = 16\nintersection_horizon = 64\n"),
    ("overlap", "replicas = 6\n[walk]\ntail_cut = 6\n[grid]\nbeta = [2.0]\nn = [8, 16]\n"),
    ("atoms", "replicas = 6\n[walk]\ntail_cut = 6\n[grid]\nbeta = [0.0, 3.0]\nn = [16]\n"),
    ("fluct", "replicas = 6\n[walk]\ntail_cut = 6\n[grid]\nbeta = [1.0]\nn = [16, 32]\n[fluct]\nradius = 2\n"),
    ("blocks", "replicas = 12\n[walk]\ntail_cut = 6\n[grid]\nbeta = [1.0]\nn = [16]\n[blocks]\nm = 1\nl_half = 2\ntilt_radius = 2\n"),
    ("bound", "[walk]\nalpha = 1.5\n[grid]\nbeta = [0.2, 0.4]\n[bound]\nmc_samples = 50\nmc_horizon = 64\nladder = 1\n"),
    ("walk-check", "[walk]\nalpha = 0.8\ntail_tolerance = 1e-2\n[walk_check]\nhorizon = 64\n"),
];
