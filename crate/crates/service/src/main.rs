mod cli;
mod commands;
mod http;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::Parser;
use netq_core::pcs::Pool;

use cli::{Cli, Command};

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Demands(a) => commands::demands(&a)?,
        Command::Pool(a) => commands::pool(&a)?,
        Command::Run(a) => commands::run(&a)?,
        Command::SweepPool(a) => commands::sweep(&a)?,
        Command::CheckTheory(a) => return commands::check_theory(&a),
        Command::Serve(a) => {
            let pool = Pool::load(&a.pool).with_context(|| format!("loading pool {}", a.pool.display()))?;
            let data_dir = std::env::var_os("NETQ_DATA_DIR").map_or_else(|| PathBuf::from("netq-data"), PathBuf::from);
            let cfg = http::ServerConfig { pool, ttl: Duration::from_secs(a.ttl_secs), data_dir, static_dir: a.static_dir };
            http::serve(&a.host, a.port, cfg)?;
        }
        Command::Plot(a) => plot::plot(&a.curves, &a.out, a.title.as_deref())?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: some theory checks failed");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
