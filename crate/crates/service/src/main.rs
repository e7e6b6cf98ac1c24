use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::Parser;
use tracing::{error, info, warn};
use tutor_service::config::ProviderKind;
use tutor_service::{router, App, ServiceConfig};

/// Course tutoring service.
#[derive(Debug, Parser)]
#[command(version, about)]
struct Cli {
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Corpus file; overrides `corpus_path`.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Listen address; overrides `listen`.
    #[arg(long)]
    listen: Option<SocketAddr>,
    /// Replay a JSON transcript instead of calling a remote model.
    #[arg(long, value_name = "TRANSCRIPT")]
    scripted_provider: Option<PathBuf>,
}

const PURGE_INTERVAL: Duration = Duration::from_secs(600);

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let terminate = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending().await,
        }
    };
    #[cfg(not(unix))]
    let terminate = std::future::pending::<()>();
    tokio::select! {
        () = ctrl_c => {},
        () = terminate => {},
    }
    info!("shutting down");
}

fn load(cli: Cli) -> Result<ServiceConfig, tutor_service::config::ConfigError> {
    let mut config = ServiceConfig::load(&cli.config)?;
    if let Some(corpus) = cli.corpus {
        config.corpus_path = Some(corpus);
    }
    if let Some(listen) = cli.listen {
        config.listen = listen;
    }
    if let Some(transcript) = cli.scripted_provider {
        config.provider.kind = ProviderKind::Scripted;
        config.provider.transcript = Some(transcript);
    }
    config.validate()?;
    Ok(config)
}

#[tokio::main]
async fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .init();

    let config = match load(Cli::parse()) {
        Ok(c) => c,
        Err(e) => {
            error!("{e}");
            return ExitCode::FAILURE;
        }
    };
    let app = match App::from_config(&config) {
        Ok(app) => Arc::new(app),
        Err(e) => {
            error!("{e}");
            return ExitCode::FAILURE;
        }
    };
    info!(
        problems = app.tutor.corpus().problems().len(),
        documents = app.tutor.corpus().documents().len(),
        events = app.tutor.log().len(),
        "corpus and log loaded"
    );

    let purger = Arc::clone(&app);
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(PURGE_INTERVAL);
        loop {
            tick.tick().await;
            let removed = purger.sessions.purge_expired(purger.clock().now());
            if removed > 0 {
                info!(removed, "closed idle sessions");
            }
        }
    });

    let listener = match tokio::net::TcpListener::bind(config.listen).await {
        Ok(l) => l,
        Err(e) => {
            error!("cannot listen on {}: {e}", config.listen);
            return ExitCode::FAILURE;
        }
    };
    info!("listening on {}", config.listen);
    let served = axum::serve(listener, router(Arc::clone(&app)))
        .with_graceful_shutdown(shutdown_signal())
        .await;
    if let Err(e) = app.tutor.log().flush() {
        warn!("final log flush failed: {e}");
    }
    match served {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("server error: {e}");
            ExitCode::FAILURE
        }
    }
}
