//! `bregdc`: run the TV, RPCA and blind-deconvolution solvers from a config
//! file, or check the operator suites.
//!
//! Exit codes: 0 on success, 1 when a solve (or writing its output) fails or
//! a check fails, 2 on usage and configuration errors.

mod apps;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use apps::Failure;
use config::{load, AppConfig, BidConfig, Overrides, ProxCheckConfig, RpcaConfig, TvConfig};

#[derive(Parser)]
#[command(name = "bregdc", version, about = "Bregman alternating minimization for DC imaging models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Weighted anisotropic-minus-isotropic TV restoration.
    Tv(RunArgs),
    /// Capped-norm robust PCA trials.
    Rpca(RunArgs),
    /// Blind deconvolution.
    Bid(RunArgs),
    /// Run the operator oracle suites.
    ProxCheck(CheckArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Flat TOML config; defaults are used for missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config `method`.
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Stopping tolerance on the relative iterate change.
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    maxit: Option<usize>,
    #[arg(long, env = "BREGDC_OUT_DIR", default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            method: self.method.clone(),
            seed: self.seed,
            eps: self.eps,
            maxit: self.maxit,
        }
    }

    fn load<T: AppConfig>(&self) -> Result<T, Failure> {
        load(self.config.as_deref(), &self.overrides()).map_err(|e| Failure::Setup(e.0))
    }
}

fn dispatch(command: Command) -> Result<ExitCode, Failure> {
    match command {
        Command::Tv(a) => apps::run_tv(&a.load::<TvConfig>()?, &a.out_dir)?,
        Command::Rpca(a) => apps::run_rpca(&a.load::<RpcaConfig>()?, &a.out_dir)?,
        Command::Bid(a) => apps::run_bid(&a.load::<BidConfig>()?, &a.out_dir)?,
        Command::ProxCheck(a) => {
            let o = Overrides {
                seed: a.seed,
                ..Default::default()
            };
            let cfg: ProxCheckConfig =
                load(a.config.as_deref(), &o).map_err(|e| Failure::Setup(e.0))?;
            if apps::run_prox_check(&cfg)? > 0 {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(Failure::Setup(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
