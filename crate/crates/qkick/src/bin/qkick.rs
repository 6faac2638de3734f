use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qkick::config::{load_config, parse_override};
use qkick::figures::{run_figure, FIGURES};
use qkick::sweep::GridKind;
use qkick::{run_single, run_sweep, ExperimentConfig, HarnessError, Result};
use qkick_core::evolution::parse_angle;

#[derive(Parser)]
#[command(
    name = "qkick",
    version,
    about = "Dissipative delta-kicked spin chain simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct ConfigArgs {
    /// Experiment config (TOML)
    #[arg(long, value_name = "FILE")]
    config: PathBuf,
    /// Override a config key, e.g. `--set temperature=0` (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one trajectory and write its time series and summary
    Evolve {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output directory (overrides `out_dir`)
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Quasi-stationary reports over a kappa and/or kick-period grid
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, value_parser = ["kappa", "tau_k", "both"])]
        grid: String,
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Regenerate the data of a bundled figure preset
    Figure {
        /// Figure number (1-9)
        n: u32,
        /// Kick period for figure 7 (default 4pi). The entanglement pattern
        /// is sensitive to it, so scanning neighbouring periods is worthwhile.
        #[arg(long = "tau-k", value_name = "X")]
        tau_k: Option<String>,
        #[arg(long, value_name = "DIR", default_value = "qkick-figures")]
        out: PathBuf,
    },
    /// Check a config and report every problem found
    Validate {
        #[command(flatten)]
        config: ConfigArgs,
    },
}

fn load(args: &ConfigArgs, out: Option<&PathBuf>) -> Result<ExperimentConfig> {
    let mut overrides = args
        .overrides
        .iter()
        .map(|o| parse_override(o))
        .collect::<Result<Vec<_>>>()?;
    if let Some(dir) = out {
        overrides.push((
            "out_dir".into(),
            toml::Value::String(dir.display().to_string()),
        ));
    }
    load_config(&args.config, &overrides)
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Evolve { config, out } => {
            let cfg = load(&config, out.as_ref())?;
            let s = run_single(&cfg)?;
            if let Some(q) = &s.qss {
                println!(
                    "E_qst = {:.8}  dQ/tau_k = {:.8}  purity = {:.6}  converged = {}",
                    q.e_qst, q.dq_per_tau, q.purity_qst, q.converged
                );
            }
            for w in &s.warnings {
                eprintln!("warning: {w}");
            }
            for f in &s.files {
                println!("wrote {}", f.display());
            }
        }
        Command::Sweep { config, grid, out } => {
            let cfg = load(&config, out.as_ref())?;
            let grid: GridKind = grid
                .parse()
                .map_err(|e: String| HarnessError::config("--grid", e))?;
            let (s, _) = run_sweep(&cfg, grid)?;
            println!(
                "{} points ({} failed, {} not converged) on {} threads",
                s.points, s.failed, s.not_converged, s.threads
            );
            for f in &s.fits {
                println!(
                    "fit {} tau_k={:.6}: slope {:.6} intercept {:.6} R^2 {:.6}",
                    f.kick, f.tau_k, f.slope, f.intercept, f.r_squared
                );
            }
            for w in &s.warnings {
                eprintln!("warning: {w}");
            }
        }
        Command::Figure { n, tau_k, out } => {
            let tau = tau_k
                .map(|t| parse_angle(&t))
                .transpose()
                .map_err(|e| HarnessError::config("--tau-k", e.to_string()))?;
            if !FIGURES.contains(&n) {
                return Err(HarnessError::config(
                    "figure",
                    format!("no preset for figure {n}; available: {FIGURES:?}"),
                ));
            }
            let r = run_figure(n, tau, &out)?;
            for w in &r.warnings {
                eprintln!("warning: {w}");
            }
            println!(
                "figure {}: {} ({} files in {})",
                r.figure,
                r.title,
                r.files.len(),
                out.display()
            );
        }
        Command::Validate { config } => {
            let cfg = load(&config, None)?;
            println!(
                "ok: {} qubits, temperature {}, kick '{}', config hash {}",
                cfg.chain.n_qubits(),
                cfg.chain.temperature(),
                cfg.kick().as_str(),
                cfg.content_hash()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
