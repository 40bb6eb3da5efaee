use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fqlsni::harness::run::{replay, run_scenario, sweep, sweep_csv, SweepParam};
use fqlsni::harness::ScenarioConfig;
use fqlsni::ni_core::{dc_gain_stability, default_frequency_grid, sni_frequency_condition, SniGains};
use fqlsni::Result;

#[derive(Parser)]
#[command(name = "fqlsni", version, about = "Quadrotor SNI / fuzzy Q-learning tracking simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write trajectory, q-table and metrics CSVs.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mean RMSE per channel for each value of one learning hyperparameter.
    Sweep {
        config: PathBuf,
        /// eta, sigma or explore_duration
        #[arg(long)]
        param: SweepParam,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// Comma-separated seeds; defaults to the config seed.
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
        /// Write the table here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the SNI frequency and DC-gain conditions for one gain set.
    CheckSni { gamma: f64, tau: f64, beta: f64 },
    /// Run a scenario twice and verify the outputs are byte-identical.
    Replay { config: PathBuf },
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run { config, seed, out } => {
            let mut cfg = ScenarioConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.run.seed = s;
            }
            if out.is_some() {
                cfg.run.output_dir = out;
            }
            let m = run_scenario(&cfg)?;
            println!("channel    controller    rmse        so          settle_time");
            for c in &m.channels {
                println!(
                    "{:<10} {:<13} {:<11.6} {:<11.6} {:.2}{}",
                    c.channel.name(),
                    c.kind.name(),
                    c.rmse,
                    c.so,
                    c.settle.time,
                    if c.settle.settled { "" } else { " (not settled)" }
                );
            }
            if let Some(f) = &m.files {
                println!("wrote {}", f.trajectory.parent().unwrap_or(&f.trajectory).display());
            }
            Ok(true)
        }
        Command::Sweep {
            config,
            param,
            values,
            seeds,
            out,
        } => {
            let cfg = ScenarioConfig::load(&config)?;
            let seeds = if seeds.is_empty() { vec![cfg.run.seed] } else { seeds };
            let rows = sweep(&cfg, param, &values, &seeds)?;
            let csv = sweep_csv(param, &rows);
            match out {
                Some(p) => std::fs::write(p, csv)?,
                None => print!("{csv}"),
            }
            Ok(true)
        }
        Command::CheckSni { gamma, tau, beta } => {
            let g = SniGains { gamma, tau, beta };
            g.validate()?;
            let freq = sni_frequency_condition(&g, &default_frequency_grid())?;
            let dc = dc_gain_stability(gamma, beta);
            println!("frequency condition: {}", if freq { "holds" } else { "violated" });
            println!("dc gain gamma - beta = {}: {}", gamma - beta, if dc { "stable" } else { "not stable" });
            Ok(freq && dc)
        }
        Command::Replay { config } => {
            let cfg = ScenarioConfig::load(&config)?;
            let r = replay(&cfg)?;
            if r.identical {
                println!("replay identical");
            } else {
                println!("replay differs, first trajectory line {:?}", r.first_difference);
            }
            Ok(r.identical)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
