//! Argument parsing and dispatch.

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use tumour_core::perturbation::Side;

use crate::commands;
use crate::config::{RunConfig, SweepSpec};
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "tumour",
    version,
    about = "Linear stability runs for the two-phase tumour model"
)]
pub struct Args {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, overriding `out_dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Base-state branch, overriding `branch_id`.
    #[arg(long, global = true)]
    pub branch: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Locate the base states.
    Basestate {
        /// Scan with twice the configured resolution.
        #[arg(long)]
        double_resolution: bool,
    },
    /// Integrate the perturbation system and fit the outer rates.
    Simulate {
        #[arg(long)]
        zero_initial: bool,
    },
    /// Solve one boundary-layer problem.
    Layer {
        #[arg(long, value_parser = parse_side)]
        side: Side,
    },
    /// Stability margin, optionally over a parameter sweep.
    Stability {
        /// `name=lo:hi:n`
        #[arg(long, value_parser = parse_sweep)]
        sweep: Option<SweepSpec>,
    },
    /// Refit a decay rate from a field file.
    Rates {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        t0: f64,
        #[arg(long)]
        t1: f64,
        #[arg(long, default_value_t = 0.5)]
        xi: f64,
    },
    /// Emit plotting scripts next to the outputs in a run directory.
    Plotscripts {
        #[arg(long)]
        dir: PathBuf,
    },
}

fn parse_side(s: &str) -> Result<Side, String> {
    s.parse().map_err(|e: tumour_core::Error| e.to_string())
}

fn parse_sweep(s: &str) -> Result<SweepSpec, String> {
    s.parse().map_err(|e: CliError| e.to_string())
}

fn load(args: &Args) -> CliResult<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }
    if let Some(b) = args.branch {
        cfg.branch_id = b;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Run one subcommand; returns a one-line summary.
pub fn run(args: Args) -> CliResult<String> {
    if let Command::Plotscripts { dir } = &args.command {
        let written = commands::cmd_plotscripts(dir)?;
        return Ok(format!("wrote {} plot script(s) to {}", written.len(), dir.display()));
    }
    let cfg = load(&args)?;
    let out = cfg.out_dir.display();
    Ok(match &args.command {
        Command::Basestate { double_resolution } => {
            let states = commands::cmd_basestate(&cfg, *double_resolution)?;
            let s = states.get(cfg.branch_id).unwrap_or(&states[0]);
            format!(
                "{} base state(s); alpha_h = {:.10}, lambda2 = {:.10} -> {out}",
                states.len(),
                s.alpha_h,
                s.lambda2
            )
        }
        Command::Simulate { zero_initial } => {
            let o = commands::cmd_simulate(&cfg, *zero_initial)?;
            format!(
                "{} snapshots, {} rate fits -> {out}",
                o.trajectory.snapshots.len(),
                o.report.fitted.len()
            )
        }
        Command::Layer { side } => {
            let (_, r) = commands::cmd_layer(&cfg, *side)?;
            format!(
                "{side} layer: omega = {:.6}, A(x_max)/x_max = {:.8}, closure change {:.2e} -> {out}",
                r.omega, r.end_ratio.measured.re, r.closure_change
            )
        }
        Command::Stability { sweep } => {
            let o = commands::cmd_stability(&cfg, sweep.as_ref())?;
            let mut line = format!("margin = {:.10} ({})", o.report.margin, o.report.verdict);
            if let Some(rows) = &o.sweep {
                line.push_str(&format!(", {} sweep rows", rows.len()));
            }
            format!("{line} -> {out}")
        }
        Command::Rates { input, t0, t1, xi } => {
            let r = commands::cmd_rates(&cfg, input, *t0, *t1, *xi)?;
            format!(
                "{} at {}: fitted {:.8}, predicted {:.8}, rel_err {:.3e}",
                r.field, r.location, r.fitted_rate, r.predicted_rate, r.rel_err
            )
        }
        Command::Plotscripts { .. } => unreachable!("handled above"),
    })
}
