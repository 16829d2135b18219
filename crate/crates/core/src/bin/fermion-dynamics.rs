use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use fermion_dynamics::cli::{self, Command, Overrides};

/// Glauber and Kawasaki dynamics for determinantal point processes.
#[derive(Parser)]
#[command(version)]
struct Args {
    /// sample | simulate | verify | spectrum | correlations | diagnose
    command: Command,
    #[arg(long)]
    config: PathBuf,
    /// Overrides `run.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to $FERMION_DYNAMICS_OUT, then ./out.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `run.replicas`.
    #[arg(long)]
    replicas: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    let out = cli::resolve_out_dir(args.out);
    let overrides = Overrides { seed: args.seed, replicas: args.replicas };
    let result = cli::load_config(&args.config).and_then(|cfg| cli::run(args.command, &cfg, &overrides, &out));
    match result {
        Ok(manifest) => {
            for f in &manifest.outputs {
                println!("{}", f.path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
