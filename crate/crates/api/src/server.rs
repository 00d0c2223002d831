use std::net::SocketAddr;
use std::sync::Arc;

use tailoredsec_core::session::AllocationPolicy;
use tailoredsec_core::store::{load_content_bank, ContentBank, ContentError, FileLog, SessionStore, StoreError};
use thiserror::Error;
use tokio::net::TcpListener;

use crate::{router, ApiConfig, AppState};

#[derive(Debug, Error)]
pub enum ServeError {
    #[error(transparent)]
    Content(#[from] ContentError),
    #[error("cannot open store {path}: {source}")]
    Store {
        path: String,
        #[source]
        source: StoreError,
    },
    #[error("port_in_use: port {0} is already bound")]
    PortInUse(u16),
    #[error("cannot bind port {port}: {source}")]
    Bind {
        port: u16,
        #[source]
        source: std::io::Error,
    },
    #[error("server error: {0}")]
    Io(#[from] std::io::Error),
}

/// Loads the configured content bank and replays the event log.
pub fn open_store(config: &ApiConfig) -> Result<Arc<SessionStore>, ServeError> {
    let bank = match &config.content {
        Some(path) => load_content_bank(path)?,
        None => ContentBank::bundled(),
    };
    let store_err = |source| ServeError::Store {
        path: config.store.display().to_string(),
        source,
    };
    let log = FileLog::open(&config.store).map_err(store_err)?;
    let store = SessionStore::open(Box::new(log), Arc::new(bank)).map_err(store_err)?;
    Ok(Arc::new(store))
}

/// A bound, not yet running, service.
pub struct Server {
    listener: TcpListener,
    store: Arc<SessionStore>,
    state: AppState,
}

impl Server {
    pub fn local_addr(&self) -> std::io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    pub fn store(&self) -> &Arc<SessionStore> {
        &self.store
    }

    /// Serves until `shutdown` resolves, then flushes the log.
    pub async fn run(self, shutdown: impl std::future::Future<Output = ()> + Send + 'static) -> Result<(), ServeError> {
        axum::serve(self.listener, router(self.state))
            .with_graceful_shutdown(shutdown)
            .await?;
        self.store.flush().map_err(|source| ServeError::Store {
            path: "event log".into(),
            source,
        })
    }
}

/// Opens the store and binds the listener. Allocation resumes from the
/// number of sessions already in the log.
pub async fn bind(config: &ApiConfig) -> Result<Server, ServeError> {
    let store = open_store(config)?;
    let policy = AllocationPolicy::resume(config.alloc.clone(), store.len() as u64);
    let addr = SocketAddr::from(([0, 0, 0, 0], config.port));
    let listener = TcpListener::bind(addr).await.map_err(|source| {
        if source.kind() == std::io::ErrorKind::AddrInUse {
            ServeError::PortInUse(config.port)
        } else {
            ServeError::Bind {
                port: config.port,
                source,
            }
        }
    })?;
    let state = AppState::new(store.clone(), policy, config.admin_secret.clone());
    Ok(Server { listener, store, state })
}

/// Binds and serves until Ctrl-C.
pub async fn serve(config: &ApiConfig) -> Result<(), ServeError> {
    let server = bind(config).await?;
    println!("listening on http://{}", server.local_addr()?);
    server
        .run(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
