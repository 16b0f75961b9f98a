use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;
use semoff_core::bcd::solve_traced;
use semoff_core::experiments::{
    cost_report, run_sweep, trace_convergence, write_cost_csv, write_sweep_csv, write_terminal_csv,
    write_trace_csv, Axis, SweepSpec,
};
use semoff_core::{generate_scenario, Algorithm, Config};

#[derive(Parser)]
#[command(name = "semoff", version, about = "Multi-cell edge offloading simulator with semantic transmission and early exit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML configuration; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one scenario and write the per-terminal outcome.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "proposed")]
        algorithm: Algorithm,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the full JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Also write every accepted swap, one per line, here.
        #[arg(long)]
        swap_trace: Option<PathBuf>,
    },
    /// Sweep one parameter over seeds and algorithms.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        axis: Axis,
        /// Comma-separated axis values; the axis defaults when omitted.
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
        #[arg(long, default_value_t = 20)]
        reps: usize,
        #[arg(long, value_delimiter = ',', default_value = "proposed,linear,fa,uc,ftm")]
        algorithms: Vec<Algorithm>,
        /// Add a wall_ms column (makes output non-reproducible).
        #[arg(long)]
        timing: bool,
        /// Worker threads; all cores when omitted.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Objective per BCD round for each algorithm.
    Trace {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_delimiter = ',', default_value = "proposed,linear,fa,uc,ftm")]
        algorithms: Vec<Algorithm>,
    },
    /// FLOP and size table of every generated task.
    CostReport {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn load_config(path: Option<&Path>) -> Result<Config> {
    let cfg = match path {
        Some(p) => Config::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => Config::default(),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { common, algorithm, seed, report, swap_trace } => {
            let cfg = load_config(common.config.as_deref())?;
            let scenario = generate_scenario(&cfg.scenario_config(), seed)?;
            let result = solve_traced(&scenario, algorithm, &cfg.solver, seed, swap_trace.is_some())?;
            info!(
                "{algorithm}: reward {} over {} rounds, {:.1} ms",
                result.reward,
                result.counters.rounds,
                result.wall_time.as_secs_f64() * 1e3
            );
            write_terminal_csv(&result, sink(common.out.as_deref())?)?;
            if let Some(p) = report {
                std::fs::write(&p, result.to_text()).with_context(|| format!("writing {}", p.display()))?;
            }
            if let Some(p) = swap_trace {
                let mut w = sink(Some(&p))?;
                for ev in &result.swap_trace {
                    writeln!(w, "{ev}")?;
                }
                w.flush()?;
            }
        }
        Command::Sweep { common, axis, values, reps, algorithms, timing, jobs } => {
            let cfg = load_config(common.config.as_deref())?;
            let values = if values.is_empty() { axis.default_values() } else { values };
            let spec = SweepSpec { axis, values, replications: reps, algorithms };
            let rows = run_sweep(&spec, &cfg, jobs)?;
            let failed = rows.iter().filter(|r| !r.error.is_empty()).count();
            if failed > 0 {
                log::warn!("{failed} of {} cells failed; see the error column", rows.len());
            }
            write_sweep_csv(&rows, sink(common.out.as_deref())?, timing)?;
        }
        Command::Trace { common, seed, algorithms } => {
            let cfg = load_config(common.config.as_deref())?;
            let scenario = generate_scenario(&cfg.scenario_config(), seed)?;
            let points = trace_convergence(&scenario, &algorithms, &cfg.solver, seed)?;
            write_trace_csv(&points, sink(common.out.as_deref())?)?;
        }
        Command::CostReport { common, seed } => {
            let cfg = load_config(common.config.as_deref())?;
            let scenario = generate_scenario(&cfg.scenario_config(), seed)?;
            let rows = cost_report(&scenario)?;
            write_cost_csv(&rows, scenario.arch.num_exits(), sink(common.out.as_deref())?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
