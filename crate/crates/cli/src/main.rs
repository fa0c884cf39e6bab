use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tjent_cli::commands::{self, resolve_out_dir, Context};
use tjent_cli::{CliError, CliResult, GroundStateCache, RunConfig, CACHE_DIR_ENV};

#[derive(Parser, Debug)]
#[command(name = "tjent", version, about = "Ground-state entanglement scans for the doped 1D t-J model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve every grid point and write an energy summary.
    Solve(RunArgs),
    /// Two-site logarithmic negativity against distance.
    Negativity(RunArgs),
    /// Generalized geometric measure over fillings and couplings.
    Ggm(RunArgs),
    /// Fidelity with the RVB gas.
    Rvb(RunArgs),
    /// Inverse-linear and exponential fits of the negativity curves.
    Fit(RunArgs),
    /// Freezing of the negativity curves across J/t.
    Freeze(RunArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `io.output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Neither read nor write cached ground states.
    #[arg(long)]
    no_cache: bool,
    /// Worker threads; overrides `threads`.
    #[arg(long)]
    threads: Option<usize>,
}

fn run(cli: Cli) -> CliResult<()> {
    let (args, cmd): (&RunArgs, fn(&Context) -> CliResult<Vec<PathBuf>>) = match &cli.command {
        Command::Solve(a) => (a, commands::cmd_solve),
        Command::Negativity(a) => (a, commands::cmd_negativity),
        Command::Ggm(a) => (a, commands::cmd_ggm),
        Command::Rvb(a) => (a, commands::cmd_rvb),
        Command::Fit(a) => (a, commands::cmd_fit),
        Command::Freeze(a) => (a, commands::cmd_freeze),
    };
    let config = RunConfig::load(&args.config)?;
    let threads = args.threads.or(config.threads);
    if threads == Some(0) {
        return Err(CliError::field("--threads", "must be at least 1"));
    }
    if let Some(t) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::field("--threads", e.to_string()))?;
    }
    let cache = if args.no_cache {
        GroundStateCache::disabled()
    } else {
        let dir = std::env::var_os(CACHE_DIR_ENV).map_or_else(|| config.io.cache_dir.clone(), PathBuf::from);
        GroundStateCache::new(Some(dir))
    };
    let out = resolve_out_dir(args.out.as_deref(), &config);
    let ctx = Context::new(config, out, cache);
    for path in cmd(&ctx)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tjent: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
