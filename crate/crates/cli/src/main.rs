//! Command-line front end: mesh generation, solves, convergence studies and
//! inf-sup estimates. The last line of output is always `STATUS: pass` or
//! `STATUS: fail`; the exit code is nonzero on failure.

mod commands;
mod config;
mod export;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{CommonArgs, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "elastica", version, about = "Weakly symmetric mixed FEM for 3D linear elasticity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a cube mesh in the ASCII tetmesh format.
    MeshGen(CommonArgs),
    /// Solve one manufactured case and report errors and checks.
    Solve(CommonArgs),
    /// Run a refinement study and write the rate table.
    Convergence(CommonArgs),
    /// Estimate the stability constants on small meshes.
    Infsup(CommonArgs),
}

fn run(cli: &Cli) -> anyhow::Result<bool> {
    let (args, f): (&CommonArgs, fn(&RunConfig) -> anyhow::Result<bool>) = match &cli.command {
        Command::MeshGen(a) => (a, commands::mesh_gen),
        Command::Solve(a) => (a, commands::solve),
        Command::Convergence(a) => (a, commands::convergence),
        Command::Infsup(a) => (a, commands::infsup),
    };
    let cfg = RunConfig::resolve(args, config::env_out())?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build()?;
    pool.install(|| f(&cfg))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            println!("STATUS: fail");
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(true) => {
            println!("STATUS: pass");
            ExitCode::SUCCESS
        }
        Ok(false) => {
            println!("STATUS: fail");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            println!("STATUS: fail");
            ExitCode::FAILURE
        }
    }
}
