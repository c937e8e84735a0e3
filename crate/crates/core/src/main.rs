use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use apicov::capture_proxy::{self, ProxyConfig};
use apicov::cli::{load_config, run, RunError};

#[derive(Parser)]
#[command(
    name = "apicov",
    version,
    about = "Black-box test coverage for REST APIs",
    args_conflicts_with_subcommands = true
)]
struct Cli {
    /// Path to the JSON configuration file.
    #[arg(value_name = "CONFIG", default_value = "./config.json")]
    config: PathBuf,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Record HTTP traffic through a plaintext capture proxy, writing
    /// dump files in the ingestion naming convention.
    Proxy {
        /// host:port to listen on.
        #[arg(long)]
        listen: String,
        /// Base URL of the API under test, e.g. http://localhost:8080.
        #[arg(long)]
        upstream: String,
        /// Directory for the dump files.
        #[arg(long = "out")]
        out: PathBuf,
        /// First sequence number to assign.
        #[arg(long, default_value_t = 1)]
        start: u64,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            if err.use_stderr() {
                let _ = err.print();
                return ExitCode::from(1);
            }
            // --help / --version
            let _ = err.print();
            return ExitCode::SUCCESS;
        }
    };

    let result: Result<(), RunError> = match cli.command {
        Some(Command::Proxy {
            listen,
            upstream,
            out,
            start,
        }) => capture_proxy::serve(&ProxyConfig {
            listen_address: listen,
            upstream_base: upstream,
            output_dir: out,
            starting_sequence: start,
        })
        .map_err(RunError::from),
        None => load_config(&cli.config)
            .map_err(RunError::from)
            .and_then(|config| run(&config).map(|_| ())),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
