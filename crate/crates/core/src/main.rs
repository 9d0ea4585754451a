//! `nlplap` command-line interface.
//!
//! Subcommands: verify | solve | design | consistency | localize.
//! Flags override config-file keys. Exit codes: 0 ok, 1 I/O error,
//! 2 configuration error, 3 convergence failure, 4 verification failure.

use clap::{Parser, Subcommand};
use nlplap::config::RunConfig;
use nlplap::experiments::{
    run_consistency, run_design, run_localize, run_solve, run_verify, write_sweep_artifacts,
};
use nlplap::report::write_json;
use nlplap::{Error, Result};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "nlplap",
    about = "Nonlocal p-Laplacian diffusion: dual-flux solves, conductivity design, and horizon localization studies",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON configuration file; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Artifact directory (overrides output.dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Primal exponent override.
    #[arg(long, global = true)]
    p: Option<f64>,

    /// Horizon override.
    #[arg(long, global = true)]
    delta: Option<f64>,

    /// Horizon-to-cell ratio override.
    #[arg(long = "h-ratio", global = true)]
    h_ratio: Option<f64>,

    /// Kernel exponent override.
    #[arg(long, global = true)]
    alpha: Option<f64>,

    /// Seed override for randomized draws.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Sweep horizons, e.g. --deltas 0.2,0.1,0.05.
    #[arg(long, global = true, value_delimiter = ',')]
    deltas: Option<Vec<f64>>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the verification suite (kernel constants, identities, operators).
    Verify,
    /// Solve one nonlocal state problem and write its certificates.
    Solve,
    /// Run the conductivity-design loop.
    Design,
    /// Sweep the horizon and report div(lift sigma) - Div sigma errors.
    Consistency,
    /// Sweep the horizon and compare nonlocal against local values.
    Localize,
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(p) = cli.p {
        cfg.problem.p = p;
    }
    if let Some(delta) = cli.delta {
        cfg.problem.delta = delta;
    }
    if let Some(r) = cli.h_ratio {
        cfg.problem.h_ratio = r;
    }
    if let Some(a) = cli.alpha {
        cfg.problem.alpha = a;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(ds) = &cli.deltas {
        cfg.sweep.deltas = ds.clone();
    }
    if let Some(out) = &cli.out {
        cfg.output.dir = out.display().to_string();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    match cli.command {
        Command::Verify => {
            let report = run_verify(&cfg)?;
            for r in &report.results {
                println!(
                    "{:<40} {}  value {:.3e} (tolerance {:.1e})",
                    r.name,
                    if r.pass { "PASS" } else { "FAIL" },
                    r.value,
                    r.tolerance
                );
            }
            println!("verify: {} passed, {} failed", report.passed, report.failed);
            if !cfg.output.dir.is_empty() {
                write_json(&Path::new(&cfg.output.dir).join("verify.json"), &report)?;
            }
            if !report.all_passed() {
                return Err(Error::CheckFailure(format!(
                    "{} verification check(s) failed",
                    report.failed
                )));
            }
        }
        Command::Solve => {
            let (summary, _) = run_solve(&cfg)?;
            println!(
                "solve: primal {:.8e}, dual {:.8e}, gap {:.3e}, feasibility {:.3e}, {} iterations",
                summary.primal_energy,
                summary.dual_energy,
                summary.duality_gap,
                summary.kkt_feasibility,
                summary.iterations
            );
            for w in &summary.warnings {
                eprintln!("warning: {w}");
            }
        }
        Command::Design => {
            let summary = run_design(&cfg)?;
            println!(
                "design: objective {:.8e}, volume {:.6}, {} outer iterations",
                summary.objective, summary.volume_used, summary.outer_iterations
            );
            for w in &summary.warnings {
                eprintln!("warning: {w}");
            }
        }
        Command::Consistency => {
            let report = run_consistency(&cfg)?;
            println!("delta        h            E(delta)      order");
            for (k, row) in report.rows.iter().enumerate() {
                let order = if k > 0 {
                    format!("{:.3}", report.orders[k - 1])
                } else {
                    "-".into()
                };
                println!(
                    "{:<12.6} {:<12.8} {:<13.6e} {order}",
                    row.delta, row.h, row.value
                );
            }
            write_sweep_artifacts(&cfg, &report)?;
            if report.results.iter().any(|r| !r.pass) {
                return Err(Error::CheckFailure(
                    "consistency errors did not decrease monotonically".into(),
                ));
            }
        }
        Command::Localize => {
            let outcome = run_localize(&cfg)?;
            println!("state values against the local reference:");
            println!("delta        value          reference      rel_error");
            for row in &outcome.state.rows {
                println!(
                    "{:<12.6} {:<14.8e} {:<14.8e} {:.4e}",
                    row.delta, row.value, row.reference, row.rel_error
                );
            }
            write_sweep_artifacts(&cfg, &outcome.state)?;
            if let Some(design) = &outcome.design {
                println!("design values against the local design value:");
                println!("delta        value          reference      rel_error");
                for row in &design.rows {
                    println!(
                        "{:<12.6} {:<14.8e} {:<14.8e} {:.4e}",
                        row.delta, row.value, row.reference, row.rel_error
                    );
                }
                write_sweep_artifacts(&cfg, design)?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
