use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pmlde::config::{load_config, RunConfig};
use pmlde::driver::Simulation;
use pmlde::io::OutputSink;
use pmlde::{convergence, presets, verify, Error};

#[derive(Parser)]
#[command(name = "pmlde", version, about = "Acoustic scattering with a PML and embedded moving obstacles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation from a TOML config or a shipped preset.
    Run {
        config: Option<PathBuf>,
        #[arg(long, conflicts_with = "config")]
        preset: Option<String>,
        /// Output directory; overrides `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Continue from a checkpoint written by an earlier run.
        #[arg(long)]
        resume: Option<PathBuf>,
        /// Write a checkpoint at the end of the run.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Run the invariant and identity suite.
    Verify {
        /// Criterion numbers to run; all when empty.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// List the shipped presets, or print one as TOML.
    Presets {
        #[arg(long)]
        show: Option<String>,
    },
    /// Time and space self-convergence study with observed orders.
    Convergence,
}

fn resolve(config: Option<PathBuf>, preset: Option<String>) -> pmlde::Result<RunConfig> {
    match (config, preset) {
        (Some(p), _) => load_config(&p),
        (None, Some(name)) => presets::preset(&name).ok_or_else(|| Error::Config(format!("unknown preset {name:?}"))),
        (None, None) => Err(Error::Config("give a config file or --preset".into())),
    }
}

fn run(
    config: Option<PathBuf>,
    preset: Option<String>,
    out: Option<PathBuf>,
    resume: Option<PathBuf>,
    checkpoint: Option<PathBuf>,
) -> pmlde::Result<()> {
    let mut cfg = resolve(config, preset)?;
    if out.is_some() {
        cfg.output.dir = out;
    }
    let mut sim = match &resume {
        Some(path) => Simulation::load_checkpoint(cfg.clone(), path)?,
        None => Simulation::new(cfg.clone())?,
    };
    let sink = match &cfg.output.dir {
        Some(dir) => {
            let sink = OutputSink::create(dir)?;
            std::fs::write(dir.join("config.toml"), cfg.to_toml()).map_err(|e| Error::Io { path: dir.join("config.toml"), source: e })?;
            Some(sink)
        }
        None => None,
    };
    log::info!("{} steps of tau = {} on {}x{}", cfg.n_steps(), cfg.time.tau, cfg.grid.nx, cfg.grid.ny);
    sim.run(sink.as_ref())?;
    if let Some(s) = sink {
        s.finish()?;
    }
    if let Some(path) = checkpoint {
        sim.save_checkpoint(&path)?;
    }
    if let Some(r) = sim.ledger.last() {
        println!("t = {:.6} n = {} E_embed = {:.9e} E_phys = {:.9e}", r.t, r.n, r.e_embed, r.e_phys_all);
    }
    Ok(())
}

/// Prints to stdout, stopping quietly when the reader has gone away.
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

type CheckFn = fn(u64) -> pmlde::Result<verify::Check>;

fn run_verify(only: &[u8], seed: u64) -> pmlde::Result<bool> {
    let checks: [(u8, CheckFn); 12] = [
        (1, verify::sbp_exactness),
        (2, verify::coefficient_identities),
        (3, verify::constraint_decay),
        (4, |_| verify::scheme_equivalence()),
        (5, |_| verify::energy_identities()),
        (6, |_| verify::static_dissipation()),
        (7, |_| verify::early_window()),
        (8, |_| verify::pml_absorption()),
        (9, |_| verify::soft_limit()),
        (10, |_| verify::convergence_orders()),
        (11, |_| verify::amr_consistency()),
        (12, |_| verify::trivial_embedding()),
    ];
    let mut all = true;
    for (id, f) in checks {
        if only.is_empty() || only.contains(&id) {
            let c = f(seed)?;
            all &= c.passed();
            println!("{c}");
        }
    }
    Ok(all)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Run { config, preset, out, resume, checkpoint } => run(config, preset, out, resume, checkpoint).map(|_| true),
        Command::Verify { only, seed } => run_verify(&only, seed),
        Command::Presets { show: Some(name) } => match presets::preset(&name) {
            Some(c) => {
                emit(&c.to_toml());
                Ok(true)
            }
            None => Err(Error::Config(format!("unknown preset {name:?}"))),
        },
        Command::Presets { show: None } => {
            let list: String = presets::catalog().iter().map(|(n, d)| format!("{n:<36} {d}\n")).collect();
            emit(&list);
            Ok(true)
        }
        Command::Convergence => convergence::study().map(|s| {
            println!("{:>10} {:>14}", "tau", "|p - p(tau/2)|");
            for (t, e) in s.tau_levels.iter().zip(&s.tau_errors) {
                println!("{t:>10} {e:>14.6e}");
            }
            println!("observed order in tau: {:.3}", s.tau_order);
            println!("{:>10} {:>14}", "n", "|p - R p(2n)|");
            for (n, e) in s.h_levels.iter().zip(&s.h_errors) {
                println!("{n:>10} {e:>14.6e}");
            }
            println!("observed order in h: {:.3}", s.h_order);
            true
        }),
    };
    match res {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
