use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use polymerlab::harness::{self, Kind, Overrides};
use polymerlab::Error;

/// Batch experiments for long-range directed polymers.
///
/// Exit status: 0 success, 1 invalid arguments or config, 2 runtime failure
/// (including partially failed scans).
#[derive(Parser)]
#[command(name = "polymerlab", version)]
struct Cli {
    #[command(subcommand)]
    kind: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides the file.
    #[arg(long, env = "POLYMERLAB_SEED")]
    seed: Option<u64>,
    /// Worker threads (0 = one per core); overrides the file.
    #[arg(long, env = "POLYMERLAB_THREADS")]
    threads: Option<usize>,
    /// Output directory; overrides the file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundFlags {
    /// Comma-separated β grid.
    #[arg(long, value_delimiter = ',')]
    beta: Option<Vec<f64>>,
    #[arg(long)]
    c1: Option<u64>,
    #[arg(long)]
    c2: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    mc_samples: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Free energy, Ẑ_N statistics, per-replica traces and endpoint histograms.
    FreeEnergy(Common),
    /// Phase-diagram scan over (α, β) cells.
    PhaseScan(Common),
    /// Overlap sum over −log Ẑ_N.
    Overlap(Common),
    /// Endpoint atom fractions.
    Atoms(Common),
    /// Probability of leaving a corridor.
    Fluct(Common),
    /// Block exchangeability, shift bound and tilt identity.
    Blocks(Common),
    /// Coarse-graining free-energy upper bound.
    Bound {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        flags: BoundFlags,
    },
    /// Walk constants: normalization, entropy, recurrence, π_p, a_n.
    WalkCheck(Common),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let (kind, common, flags) = match cli.kind {
        Command::FreeEnergy(c) => (Kind::FreeEnergy, c, None),
        Command::PhaseScan(c) => (Kind::PhaseScan, c, None),
        Command::Overlap(c) => (Kind::Overlap, c, None),
        Command::Atoms(c) => (Kind::Atoms, c, None),
        Command::Fluct(c) => (Kind::Fluct, c, None),
        Command::Blocks(c) => (Kind::Blocks, c, None),
        Command::Bound { common, flags } => (Kind::Bound, common, Some(flags)),
        Command::WalkCheck(c) => (Kind::WalkCheck, c, None),
    };
    let text = match std::fs::read_to_string(&common.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", common.config.display());
            return ExitCode::from(1);
        }
    };
    let flags = flags.unwrap_or(BoundFlags {
        beta: None,
        c1: None,
        c2: None,
        theta: None,
        gamma: None,
        mc_samples: None,
    });
    let ov = Overrides {
        master_seed: common.seed,
        threads: common.threads,
        out: common.out,
        beta: flags.beta,
        c1: flags.c1,
        c2: flags.c2,
        theta: flags.theta,
        gamma: flags.gamma,
        mc_samples: flags.mc_samples,
    };
    let cfg = match harness::load(&text, kind, &ov) {
        Ok(c) => c,
        Err(Error::Config(list)) => {
            eprintln!("invalid config {}:", common.config.display());
            for m in list {
                eprintln!("  - {m}");
            }
            return ExitCode::from(1);
        }
        Err(e) => {
            eprintln!("invalid config {}: {e}", common.config.display());
            return ExitCode::from(1);
        }
    };
    match harness::run(&cfg) {
        Ok((manifest, notes)) => {
            for n in notes {
                println!("{n}");
            }
            for f in &manifest.files {
                println!("{}  {}", f.sha256, cfg.out.join(&f.name).display());
            }
            if manifest.partial {
                for f in &manifest.failures {
                    eprintln!("cell {} failed: {}", f.cell, f.error);
                }
                eprintln!("partial output: {} cell(s) failed", manifest.failures.len());
                return ExitCode::from(2);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
