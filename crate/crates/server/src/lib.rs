//! The matching service over `vsim-core`, with its HTTP API and the `vsim` CLI.

pub mod bench;
pub mod cli;
pub mod config;
pub mod http;
pub mod journal;
pub mod service;
pub mod suggestions;
pub mod webhook;

use std::future::Future;
use std::sync::Arc;

use anyhow::Context;
use tokio::net::TcpListener;
use vsim_core::{EmbeddingModel, ModelFormat};

use crate::config::ServiceConfig;
use crate::http::AppState;
use crate::service::Service;
use crate::webhook::Notifier;

/// Loads the model and persisted state, then serves until ctrl-c or SIGTERM.
pub async fn serve(config: ServiceConfig, format: ModelFormat, host: &str) -> anyhow::Result<()> {
    let model = tokio::task::spawn_blocking({
        let path = config.model_path.clone();
        move || EmbeddingModel::load(&path, format).with_context(|| format!("cannot load model {}", path.display()))
    })
    .await??;
    tracing::info!(words = model.vocab_size(), dim = model.dim(), "model loaded");
    let service = Service::open(Arc::new(model), config.matching.clone()).context("cannot open index")?;
    let listener =
        TcpListener::bind((host, config.port)).await.with_context(|| format!("cannot bind {host}:{}", config.port))?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    serve_on(listener, Arc::new(service), &config, shutdown_signal()).await
}

/// Serves on an already bound listener. Snapshots every `snapshot_interval`
/// while dirty, and once more after `shutdown` resolves.
pub async fn serve_on(
    listener: TcpListener,
    service: Arc<Service>,
    config: &ServiceConfig,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> anyhow::Result<()> {
    let notifier =
        config.callback_url.as_ref().map(|url| Arc::new(Notifier::new(url.clone(), config.webhook_backoff.clone())));
    let app = http::router(AppState { service: Arc::clone(&service), notifier }, &config.ui_origin);

    let snapshots = tokio::spawn({
        let service = Arc::clone(&service);
        let period = config.snapshot_interval;
        async move {
            let mut ticker = tokio::time::interval_at(tokio::time::Instant::now() + period, period);
            loop {
                ticker.tick().await;
                let service = Arc::clone(&service);
                match tokio::task::spawn_blocking(move || service.snapshot_if_dirty()).await {
                    Ok(Ok(Some(bytes))) => tracing::debug!(bytes, "periodic snapshot written"),
                    Ok(Ok(None)) => {}
                    Ok(Err(e)) => tracing::error!(error = %e, "periodic snapshot failed"),
                    Err(e) => tracing::error!(error = %e, "snapshot task panicked"),
                }
            }
        }
    });

    let served = axum::serve(listener, app).with_graceful_shutdown(shutdown).await;
    snapshots.abort();
    let final_snapshot = tokio::task::spawn_blocking(move || service.snapshot()).await?;
    served.context("server error")?;
    let bytes = final_snapshot.context("final snapshot failed")?;
    tracing::info!(bytes, "snapshot written on shutdown");
    Ok(())
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
    tracing::info!("shutting down");
}
