use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use spinwave_cli::commands::{self, Outcome, RunOptions};
use spinwave_cli::config::RunConfig;
use spinwave_cli::sweep::{self, Manifest};
use spinwave_cli::{exit_code, EXIT_NUMERICAL, EXIT_PARTIAL_SWEEP, EXIT_VALIDATION};
use spinwave_core::dynamics::Mode;
use spinwave_core::{Error, Result};

#[derive(Parser)]
#[command(name = "spinwave", version, about = "Spin-ensemble / cavity shear simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Configuration file (`key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a configuration entry, e.g. `--set cavity.Omega=pi`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    sets: Vec<String>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for parallel work.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Table format(s): csv, json or csv,json (overrides `output.formats`).
    #[arg(long, global = true)]
    format: Option<String>,
    /// Evolution mode for `evolve`.
    #[arg(long, global = true, default_value = "full")]
    mode: Mode,
    /// Also write a PGM heat map of |chi|^2 (`evolve`).
    #[arg(long, global = true)]
    plot: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Cavity response, level shift and phase, with the strong-coupling comparison.
    Response,
    /// Finite-ensemble trajectory projected on the bare-time states.
    Evolve,
    /// Shear fidelity from the analytic and the finite-ensemble paths.
    Shear,
    /// Shear over the product of `sweep.axis.<key>` value lists.
    Sweep,
    /// Fast internal consistency checks.
    Selftest,
}

fn load(cli: &Cli) -> Result<String> {
    match &cli.config {
        Some(p) => Ok(std::fs::read_to_string(p)?),
        None => Ok(String::new()),
    }
}

fn apply_flags(cli: &Cli, cfg: &mut RunConfig) -> Result<()> {
    for kv in &cli.sets {
        cfg.apply_override(kv)?;
    }
    if let Some(o) = &cli.out {
        cfg.out_dir = o.clone();
    }
    if let Some(f) = &cli.format {
        cfg.apply_override(&format!("output.formats={f}"))?;
    }
    Ok(())
}

fn report(o: &Outcome) {
    for w in &o.warnings {
        eprintln!("warning: {w}");
    }
    for f in &o.files {
        println!("wrote {}", f.display());
    }
}

fn run(cli: &Cli) -> Result<i32> {
    if let Some(n) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| Error::Argument(e.to_string()))?;
    }
    let text = load(cli)?;
    let opts = RunOptions { mode: cli.mode, plot: cli.plot };
    match cli.command {
        Command::Sweep => {
            let mut m = Manifest::parse(&text)?;
            apply_flags(cli, &mut m.base)?;
            let r = sweep::run(&m)?;
            println!(
                "{} cells: {} computed, {} reused, {} failed",
                r.total,
                r.computed,
                r.reused,
                r.failed.len()
            );
            for (cell, e) in &r.failed {
                eprintln!("cell {cell} failed: {e}");
            }
            println!("wrote {}", r.summary.display());
            return Ok(if r.failed.is_empty() { 0 } else { EXIT_PARTIAL_SWEEP });
        }
        Command::Selftest => {
            let results = commands::selftest();
            for (name, ok, detail) in &results {
                println!("{} {name}: {detail}", if *ok { "ok  " } else { "FAIL" });
            }
            return Ok(if results.iter().all(|r| r.1) { 0 } else { EXIT_NUMERICAL });
        }
        _ => {}
    }
    let mut cfg = RunConfig::parse(&text)?;
    apply_flags(cli, &mut cfg)?;
    match cli.command {
        Command::Response => {
            let (o, s) = commands::response(&cfg)?;
            report(&o);
            if let Some(g) = s.phase_gap {
                println!("max interior |phi - phi_inf| = {g:.6}");
            }
        }
        Command::Evolve => {
            let (o, s) = commands::evolve(&cfg, &opts)?;
            report(&o);
            println!("max norm drift = {:.3e}", s.max_norm_drift);
        }
        Command::Shear => {
            let (o, r) = commands::shear(&cfg)?;
            report(&o);
            for f in [&r.analytic, &r.oracle] {
                println!("{:8}  F = {:.6}  dt_star = {:.5}  phi0 = {:.5}", f.method, f.f, f.dt_star, f.phi0);
            }
            println!("|dF| = {:.3e}", r.discrepancy.f.abs());
        }
        Command::Sweep | Command::Selftest => unreachable!(),
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(EXIT_VALIDATION as u8);
        }
        Err(e) => e.exit(),
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
