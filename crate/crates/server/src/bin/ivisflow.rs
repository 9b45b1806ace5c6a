use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand};
use tracing_subscriber::EnvFilter;

use ivisflow::synth::{generate_corpus, GeneratorConfig};
use ivisflow_server::{router, AppState, ServiceConfig};

/// Without a subcommand, serves the analysis API over HTTP.
#[derive(Parser)]
#[command(
    name = "ivisflow",
    version,
    about = "User-flow analytics for in-vehicle touchscreen logs",
    args_conflicts_with_subcommands = true,
    subcommand_negates_reqs = true
)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    #[arg(long, required = true)]
    data_dir: Option<PathBuf>,
    #[arg(long, required = true)]
    concept_db: Option<PathBuf>,
    #[arg(long, default_value_t = 8080)]
    port: u16,
    /// Reload the data directory every N seconds.
    #[arg(long)]
    reload_interval: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic corpus described by a JSON config.
    Generate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Some(Command::Generate { config, out }) => generate(config, out),
        None => serve(
            cli.data_dir.expect("required by clap"),
            cli.concept_db.expect("required by clap"),
            cli.port,
            cli.reload_interval,
        ),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn generate(config: PathBuf, out: PathBuf) -> Result<(), Box<dyn std::error::Error>> {
    let cfg = GeneratorConfig::load(&config)?;
    let gen = generate_corpus(&cfg, &out)?;
    println!(
        "wrote {} trips in {} files and {} to {}",
        gen.trip_count,
        gen.log_files.len(),
        gen.concept_path.display(),
        out.display()
    );
    Ok(())
}

#[tokio::main]
async fn serve(
    data_dir: PathBuf,
    concept_db: PathBuf,
    port: u16,
    reload_interval: Option<u64>,
) -> Result<(), Box<dyn std::error::Error>> {
    let state = AppState::new(ServiceConfig {
        data_dir,
        concept_db: Some(concept_db),
    });
    // a broken data dir or concept database stops startup
    let first = state.reload().await?;
    tracing::info!(?first, "initial snapshot");

    if let Some(secs) = reload_interval.filter(|&s| s > 0) {
        let state = state.clone();
        tokio::spawn(async move {
            let mut tick = tokio::time::interval(Duration::from_secs(secs));
            tick.tick().await;
            loop {
                tick.tick().await;
                if let Err(e) = state.reload().await {
                    tracing::error!(error = %e, "scheduled reload failed");
                }
            }
        });
    }

    let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
