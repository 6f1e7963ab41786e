//! Desk-scale acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`cargo test --test acceptance`). Failures are
//! reported but do not fail the process unless
//! `POLYMERLAB_ACCEPTANCE_STRICT=1` is set.

mod common;

use std::fs;
use std::sync::Arc;
use std::time::{Duration, Instant};

use polymerlab::bounds::{bracket_with_ladder, cost_exponent, delta_of_n, BoundConfig, Scaling};
use polymerlab::diagnostics::{
    fractional_moment, free_energy, overlap_log_ratio, scaled_endpoint_distance,
    weak_disorder_criterion, Ensemble,
};
use polymerlab::environment::{EnvModel, Environment};
use polymerlab::harness::{self, Kind, Overrides};
use polymerlab::localization::{
    atom_fractions, exchangeability_frequency, fluctuation_probability, shift_rn_bound,
    tilt_identity, BlockLayout, Radius,
};
use polymerlab::polymer::{run, two_replica_overlap_mc, PathConstraint, DEFAULT_LEAK_BUDGET};
use polymerlab::stats::{median, mean_se, ols};
use polymerlab::walk::{classify, Recurrence, SlowlyVarying, WalkModel};
use polymerlab::Result;

use common::{enumerate, TINY};

struct Line {
    pass: bool,
    detail: String,
}

fn line(pass: bool, detail: impl Into<String>) -> Result<Line> {
    Ok(Line {
        pass,
        detail: detail.into(),
    })
}

fn walk(alpha: f64, tol: f64) -> WalkModel {
    WalkModel::build(alpha, SlowlyVarying::constant(), 0.5, tol).unwrap()
}

fn gaussian() -> Arc<EnvModel> {
    Arc::new(EnvModel::gaussian())
}

fn enumeration(limit: Duration) -> Result<Line> {
    let t0 = Instant::now();
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for k_cut in 1..=3 {
        let w = WalkModel::with_tail_cut(1.5, SlowlyVarying::constant(), 0.4, k_cut)?;
        for env in [gaussian(), Arc::new(EnvModel::rademacher())] {
            for seed in 0..20 {
                let field = polymerlab::environment::EnvField::new(env.clone(), 1000 + seed, 0);
                for beta in [0.5, 1.5] {
                    let lambda = env.lambda(beta)?;
                    let r = run(&field, &w, beta, lambda, 4, &PathConstraint::None, 1.0)?;
                    for n in 1..=4u64 {
                        let e = enumerate(w.kernel(), &field, beta, lambda, n);
                        let st = &r.trace[n as usize - 1];
                        worst = worst.max((st.log_zhat - e.log_z).abs());
                        worst = worst.max((st.overlap - e.overlap).abs());
                        if n == 4 {
                            for (&x, &p) in &e.endpoint {
                                worst = worst.max((r.state.prob(x) - p).abs());
                            }
                        }
                    }
                    cases += 1;
                }
            }
        }
    }
    let dt = t0.elapsed();
    line(
        worst <= 1e-12 && dt < limit,
        format!("{cases} cases, N ≤ 4, K ≤ 3: max |Δ| = {worst:.1e} (tol 1e-12)"),
    )
}

fn martingale() -> Result<Line> {
    let mut worst = 0.0f64;
    let mut all = true;
    for (alpha, tol) in [(0.8, 1e-2), (1.5, 1e-3)] {
        let w = walk(alpha, tol);
        for env in [gaussian(), Arc::new(EnvModel::rademacher())] {
            for beta in [0.3, 1.0] {
                let ens = Ensemble::new(env.clone(), 108, 2000);
                let lambda = env.lambda(beta)?;
                let z = ens.map(|_, f| {
                    run(f, &w, beta, lambda, 64, &PathConstraint::None, DEFAULT_LEAK_BUDGET)
                        .map(|r| r.state.log_zhat.exp())
                })?;
                let m = mean_se(&z);
                let score = (m.mean - 1.0).abs() / m.se;
                worst = worst.max(score);
                all &= score <= 3.0;
            }
        }
    }
    line(all, format!("8 cells, N = 64, 2000 replicas: worst |mean Ẑ − 1| = {worst:.2} SE (tol 3)"))
}

fn jensen(ens: &Ensemble, w: &WalkModel) -> Result<Line> {
    let fe = free_energy(ens, w, 1.0, 256)?;
    let zero = free_energy(ens, w, 0.0, 256)?;
    let exact_zero = zero.per_replica.iter().all(|&p| p == 0.0);
    line(
        fe.negative_at_99() && exact_zero,
        format!(
            "p̂(β=1, N=256) = {:.4e} ± {:.1e}, upper 99% bound {:.3e}; β = 0 exactly 0: {exact_zero}",
            fe.p_hat.mean,
            fe.p_hat.se,
            fe.p_hat.mean + 2.326 * fe.p_hat.se
        ),
    )
}

fn fractional(ens: &Ensemble, w: &WalkModel) -> Result<Line> {
    let fm = fractional_moment(ens, w, 1.0, 0.5, &[32, 64, 128, 256])?;
    line(
        fm.decaying_at_99(),
        format!("θ = 0.5, N ∈ {{32..256}}: rate {:.4e} ± {:.1e}", fm.rate, fm.rate_se),
    )
}

fn overlap_identity() -> Result<Line> {
    let w = walk(1.5, 1e-3);
    let env = gaussian();
    let field = polymerlab::environment::EnvField::new(env.clone(), 16, 0);
    let beta = 1.0;
    let lambda = env.lambda(beta)?;
    let exact = run(&field, &w, beta, lambda, 16, &PathConstraint::None, DEFAULT_LEAK_BUDGET)?
        .trace[15]
        .overlap;
    let mc = two_replica_overlap_mc(&field, &w, beta, lambda, 16, 100_000, 77)?;
    let z = (mc.mean - exact).abs() / mc.se;
    line(
        z <= 3.0,
        format!("N = 16: exact I_N = {exact:.5}, MC {:.5} ± {:.5} ({z:.2} SE)", mc.mean, mc.se),
    )
}

fn overlap_bracket() -> Result<Line> {
    let w = walk(1.5, 1e-3);
    let ens = Ensemble::new(gaussian(), 111, 100);
    let rows = overlap_log_ratio(&ens, &w, 2.0, &[64, 128, 256, 512])?;
    let fr: Vec<f64> = rows.iter().map(|r| r.fraction_inside(0.05, 20.0)).collect();
    let worst = fr.iter().copied().fold(f64::INFINITY, f64::min);
    line(
        worst >= 0.9,
        format!("β = 2, N ∈ {{64..512}}, 100 replicas: fractions in [0.05, 20] {fr:?}"),
    )
}

fn recurrence() -> Result<Line> {
    let table = [
        (1.5, SlowlyVarying::constant(), Recurrence::Recurrent),
        (0.8, SlowlyVarying::constant(), Recurrence::Transient),
        (1.0, SlowlyVarying::constant(), Recurrence::Recurrent),
        (1.0, SlowlyVarying::log_power(2.0), Recurrence::Transient),
    ];
    let got: Vec<Recurrence> = table.iter().map(|(a, l, _)| classify(*a, l)).collect();
    let ok = table.iter().zip(&got).all(|(t, g)| t.2 == *g);
    line(ok, format!("{:?}", got.iter().map(|r| r.to_string()).collect::<Vec<_>>()))
}

fn bound_slope() -> Result<Line> {
    // cost-factor identity on every n up to 10^5
    let mut identity_err = 0.0f64;
    for alpha in [1.25, 1.5, 2.0] {
        let w = walk(alpha, 1e-4);
        let theta = BoundConfig::defaults(alpha).theta;
        for n in (1..=100_000u64).step_by(7) {
            let a = w.a(n);
            let c = cost_exponent(a, n, 16, theta, delta_of_n(a, n, 16));
            identity_err = identity_err.max((c - theta / (1.0 - theta)).abs() / (theta / (1.0 - theta)));
        }
    }
    let betas = [0.05, 0.1, 0.2, 0.4];
    let env = EnvModel::gaussian();
    let mut parts = Vec::new();
    let mut ok = identity_err < 1e-12;
    for alpha in [1.25, 1.5, 2.0] {
        let w = walk(alpha, 1e-4);
        let mut cfg = BoundConfig::defaults(alpha);
        cfg.seed = 341;
        let target = 2.0 * alpha / (alpha - 1.0);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        let mut best_bracket = f64::INFINITY;
        for &b in &betas {
            let reports = bracket_with_ladder(&w, &env, b, &cfg, 3)?;
            let last = reports.last().expect("at least one rung");
            best_bracket = best_bracket.min(last.bracket);
            if let Some(p) = last.p_upper {
                xs.push(b.ln());
                ys.push((-p).ln());
            }
        }
        if xs.len() >= 2 {
            let (_, slope) = ols(&xs, &ys);
            let good = ((slope - target) / target).abs() <= 0.05;
            ok &= good;
            parts.push(format!("α={alpha}: slope {slope:.3} vs {target}"));
        } else {
            ok = false;
            parts.push(format!(
                "α={alpha}: {} of {} β certified (smallest bracket {best_bracket:.2}, needs < −1)",
                xs.len(),
                betas.len()
            ));
        }
    }
    line(ok, format!("cost identity rel err {identity_err:.1e}; {}", parts.join("; ")))
}

fn exchangeability() -> Result<Line> {
    let w = walk(1.5, 1e-3);
    let ens = Ensemble::new(gaussian(), 521, 2000);
    let mut parts = Vec::new();
    let mut ok = true;
    for m in 1..=3 {
        let layout = BlockLayout::new(32, 2, m)?;
        let ex = exchangeability_frequency(&ens, &w, 1.0, &layout)?;
        ok &= ex.within(3.0);
        parts.push(format!(
            "M={m}: {:.4} vs {:.4} ({:.2} SE)",
            ex.frequency,
            ex.expected,
            (ex.frequency - ex.expected) / ex.se
        ));
    }
    line(ok, format!("N = 32, L = 2, 2000 replicas: {}", parts.join(", ")))
}

fn atoms(limit: Duration) -> Result<Line> {
    let t0 = Instant::now();
    let w = walk(1.5, 1e-3);
    let free = atom_fractions(&Ensemble::new(gaussian(), 125, 4), &w, 0.0, 512, 0.05)?;
    let strong = atom_fractions(&Ensemble::new(gaussian(), 125, 100), &w, 3.0, 256, 0.05)?;
    let m = mean_se(&strong);
    let free_zero = free.iter().all(|&f| f == 0.0);
    line(
        free_zero && m.mean > 0.2 && t0.elapsed() < limit,
        format!(
            "β=0, N=512: fraction {:?}; β=3, N=256: mean {:.3} ± {:.3} (needs > 0.2)",
            free[0], m.mean, m.se
        ),
    )
}

fn fluctuation() -> Result<Line> {
    // exact minimum ratio against the Potter floor
    let mut checked = 0;
    let mut shift_ok = true;
    let mut tightest = f64::INFINITY;
    for ell in [SlowlyVarying::constant(), SlowlyVarying::log_power(2.0)] {
        let w = WalkModel::with_tail_cut(1.5, ell, 0.5, 4096)?;
        for n in [32u64, 64, 128, 256, 512, 1024] {
            let layout = BlockLayout::new(n, n / 16, 8)?;
            for k in (-8..=8).filter(|&k| k != 0) {
                let b = shift_rn_bound(&w, &layout, k, 0.1)?;
                shift_ok &= b.scan.min_ratio >= b.potter_floor && b.scan.min_ratio >= b.floor;
                tightest = tightest.min(b.scan.min_ratio / b.potter_floor);
                checked += 1;
            }
        }
    }

    let w = walk(1.5, 1e-3);
    let tilt = tilt_identity(&Ensemble::new(gaussian(), 513, 500), &w, 1.0, 16, 2, 6)?;
    let tilt_z = tilt.difference.mean / tilt.difference.se;

    let w = walk(1.5, 1e-2);
    let ens = Ensemble::new(gaussian(), 128, 32);
    let mut exits = Vec::new();
    let mut radii = Vec::new();
    for n in [512, 1024, 2048] {
        let f = fluctuation_probability(&ens, &w, 1.0, n, Radius::Theorem { eps: 0.1 })?;
        exits.push(f.mean.mean);
        radii.push(f.r_used);
    }
    let monotone = exits.windows(2).all(|p| p[1] >= p[0]);
    line(
        shift_ok && tilt.agrees(3.0) && monotone,
        format!(
            "{checked} shifts, min exact/floor {tightest:.3}; tilt (N=16) {:.4} vs {:.4} ({tilt_z:.2} SE); \
             exit {exits:?} with corridors {radii:?}",
            tilt.direct.mean, tilt.reweighted.mean
        ),
    )
}

fn weak_disorder() -> Result<Line> {
    let w = walk(0.8, 1e-2);
    let env = gaussian();
    let report = weak_disorder_criterion(&env, &w, 0.0, 1 << 12)?;
    let pi = report.pi_p.expect("transient walk").pi_p;
    // λ(2β) − 2λ(β) = β² for the Gaussian law
    let beta_c = (-pi.ln()).sqrt();
    let beta = 0.5 * beta_c;
    let ens = Ensemble::new(env.clone(), 118, 200);
    let traces = ens.traces(&w, beta, 512)?;
    let mut min_median = f64::INFINITY;
    for n in 0..512 {
        let z: Vec<f64> = traces.iter().map(|t| t[n].log_zhat.exp()).collect();
        min_median = min_median.min(median(&z));
    }
    drop(traces);
    let tv = scaled_endpoint_distance(&ens, &w, beta, 512)?;
    line(
        min_median > 1e-2 && tv.mean.mean < 0.1,
        format!(
            "π_p = {pi:.4}, threshold β = {beta_c:.4}, run at β = {beta:.4}: min median Ẑ_n = {min_median:.3}, \
             TV at N=512 {:.4}",
            tv.mean.mean
        ),
    )
}

fn determinism() -> Result<Line> {
    let tmp = std::env::temp_dir().join(format!("polymerlab-acceptance-{}", std::process::id()));
    let mut differing = Vec::new();
    for (kind, text) in TINY {
        let k: Kind = kind.parse().map_err(polymerlab::Error::NotApplicable)?;
        let mut outputs = Vec::new();
        for threads in [1usize, 4] {
            let out = tmp.join(format!("{kind}-{threads}"));
            let ov = Overrides {
                threads: Some(threads),
                out: Some(out.clone()),
                ..Default::default()
            };
            let cfg = harness::load(&format!("master_seed = 4242\n{text}"), k, &ov)?;
            harness::run(&cfg)?;
            let mut files: Vec<_> = fs::read_dir(&out)?
                .map(|e| e.map(|e| e.path()))
                .collect::<std::io::Result<_>>()?;
            files.retain(|p| p.extension().is_some_and(|x| x == "csv"));
            files.sort();
            let bytes: Vec<Vec<u8>> = files.iter().map(fs::read).collect::<std::io::Result<_>>()?;
            outputs.push(bytes);
        }
        if outputs[0] != outputs[1] {
            differing.push(kind.to_string());
        }
    }
    let _ = fs::remove_dir_all(&tmp);
    line(
        differing.is_empty(),
        format!("{} kinds, 1 vs 4 threads; differing: {differing:?}", TINY.len()),
    )
}

fn main() {
    let strict = std::env::var("POLYMERLAB_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let w15 = walk(1.5, 1e-3);
    let ens = Ensemble::new(gaussian(), 114, 200);

    type Check<'a> = Box<dyn Fn() -> Result<Line> + 'a>;
    let checks: Vec<(&str, Option<Duration>, Check)> = vec![
        ("enumeration oracle", Some(Duration::from_secs(10)), Box::new(|| enumeration(Duration::from_secs(10)))),
        ("martingale normalization", Some(Duration::from_secs(120)), Box::new(martingale)),
        ("jensen / regime", Some(Duration::from_secs(300)), Box::new(|| jensen(&ens, &w15))),
        ("fractional-moment decay", None, Box::new(|| fractional(&ens, &w15))),
        ("overlap identity", None, Box::new(overlap_identity)),
        ("overlap / log-Z comparability", None, Box::new(overlap_bracket)),
        ("recurrence table", None, Box::new(recurrence)),
        ("bound-pipeline slope", None, Box::new(bound_slope)),
        ("exchangeability frequency", None, Box::new(exchangeability)),
        ("atoms", Some(Duration::from_secs(600)), Box::new(|| atoms(Duration::from_secs(600)))),
        ("fluctuation machinery", None, Box::new(fluctuation)),
        ("weak-disorder sanity", None, Box::new(weak_disorder)),
        ("determinism", None, Box::new(determinism)),
    ];

    let mut failed = Vec::new();
    for (name, limit, check) in &checks {
        let t0 = Instant::now();
        let res = check();
        let dt = t0.elapsed();
        let over = limit.is_some_and(|l| dt >= l);
        let (pass, detail) = match res {
            Ok(l) => (l.pass && !over, l.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let budget = match limit {
            Some(l) => format!("{:.1} s, limit {} s", dt.as_secs_f64(), l.as_secs()),
            None => format!("{:.1} s", dt.as_secs_f64()),
        };
        println!("{} {name}: {detail} [{budget}]", if pass { "PASS" } else { "FAIL" });
        if !pass {
            failed.push(*name);
        }
    }
    println!(
        "acceptance: {}/{} passed{}",
        checks.len() - failed.len(),
        checks.len(),
        if failed.is_empty() {
            String::new()
        } else {
            format!("; failing: {}", failed.join(", "))
        }
    );
    if strict && !failed.is_empty() {
        std::process::exit(1);
    }
}
