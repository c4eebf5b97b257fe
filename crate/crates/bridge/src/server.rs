//! HTTP model server.
//!
//! Each server runs its own tokio runtime on a dedicated thread, so several
//! servers (and a balancer) can live in one process. Model operations run on
//! the blocking pool; a FIFO semaphore bounds how many run at once.

use std::collections::HashMap;
use std::net::{SocketAddr, TcpListener};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, Method, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::Router;
use tokio::sync::{oneshot, Semaphore};
use uqbridge_core::dispatch::{self, WireResponse};
use uqbridge_core::wire::Request;
use uqbridge_core::{ConcurrencyPolicy, ErrorPayload, ModelRegistry};

/// Environment variable overriding the configured port.
pub const PORT_ENV: &str = "BRIDGE_PORT";

#[derive(Clone, Debug, PartialEq)]
pub struct ServerConfig {
    /// 0 picks a free port.
    pub port: u16,
    pub max_concurrent_requests: usize,
    pub request_timeout: Duration,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            port: 4242,
            max_concurrent_requests: 32,
            request_timeout: Duration::from_secs(3600),
        }
    }
}

impl ServerConfig {
    pub fn with_port(port: u16) -> Self {
        Self {
            port,
            ..Self::default()
        }
    }

    /// Applies `BRIDGE_PORT` if it is set.
    pub fn port_from_env(mut self) -> Result<Self, ServerError> {
        if let Ok(value) = std::env::var(PORT_ENV) {
            self.port = value
                .parse()
                .map_err(|_| ServerError::Config(format!("{PORT_ENV}={value} is not a port")))?;
        }
        Ok(self)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ServerError {
    #[error("invalid server configuration: {0}")]
    Config(String),
    #[error("cannot bind port {port}: {source}")]
    Bind { port: u16, source: std::io::Error },
    #[error("server runtime failed: {0}")]
    Runtime(#[from] std::io::Error),
}

struct ServerState {
    registry: ModelRegistry,
    serial_locks: HashMap<String, Arc<Mutex<()>>>,
    permits: Arc<Semaphore>,
    timeout: Duration,
}

enum Stop {
    Graceful,
    Kill,
}

/// A running server. Dropping the handle shuts it down gracefully.
pub struct ServerHandle {
    addr: SocketAddr,
    stop: Option<oneshot::Sender<Stop>>,
    thread: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn port(&self) -> u16 {
        self.addr.port()
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Stops accepting connections and waits for in-flight requests.
    pub fn shutdown(mut self) {
        self.stop_with(Stop::Graceful);
    }

    /// Drops the listener and every open connection immediately, as if the
    /// process had died. In-flight requests see a reset connection.
    pub fn kill(mut self) {
        self.stop_with(Stop::Kill);
    }

    /// Blocks until the server stops on its own (it never does unless
    /// stopped from elsewhere).
    pub fn wait(mut self) {
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }

    fn stop_with(&mut self, how: Stop) {
        if let Some(tx) = self.stop.take() {
            let _ = tx.send(how);
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        self.stop_with(Stop::Graceful);
    }
}

/// Serves `registry` on `config.port` (0 for any free port).
pub fn serve(registry: ModelRegistry, config: ServerConfig) -> Result<ServerHandle, ServerError> {
    if config.max_concurrent_requests == 0 {
        return Err(ServerError::Config("max_concurrent_requests must be at least 1".into()));
    }
    let listener = TcpListener::bind(("127.0.0.1", config.port)).map_err(|source| ServerError::Bind {
        port: config.port,
        source,
    })?;
    listener.set_nonblocking(true)?;
    let addr = listener.local_addr()?;
    let serial_locks = registry
        .iter()
        .filter(|m| m.concurrency() == ConcurrencyPolicy::Serial)
        .map(|m| (m.name().to_string(), Arc::new(Mutex::new(()))))
        .collect();
    let state = Arc::new(ServerState {
        registry,
        serial_locks,
        permits: Arc::new(Semaphore::new(config.max_concurrent_requests)),
        timeout: config.request_timeout,
    });
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(2)
        .thread_name("uqbridge-server")
        .enable_all()
        .build()?;
    let (stop_tx, stop_rx) = oneshot::channel();
    let thread = thread::Builder::new()
        .name(format!("uqbridge-server-{}", addr.port()))
        .spawn(move || run(runtime, listener, state, stop_rx))?;
    tracing::info!(%addr, "model server listening");
    Ok(ServerHandle {
        addr,
        stop: Some(stop_tx),
        thread: Some(thread),
    })
}

fn run(runtime: tokio::runtime::Runtime, listener: TcpListener, state: Arc<ServerState>, stop: oneshot::Receiver<Stop>) {
    let app = Router::new().fallback(handle).with_state(state);
    let killed = runtime.block_on(async move {
        let listener = match tokio::net::TcpListener::from_std(listener) {
            Ok(l) => l,
            Err(e) => {
                tracing::error!(error = %e, "cannot register listener");
                return false;
            }
        };
        let (graceful_tx, graceful_rx) = oneshot::channel::<()>();
        let server = axum::serve(listener, app).with_graceful_shutdown(async move {
            let _ = graceful_rx.await;
        });
        let mut server = std::pin::pin!(std::future::IntoFuture::into_future(server));
        tokio::select! {
            _ = &mut server => false,
            how = stop => match how {
                Ok(Stop::Kill) => true,
                // Graceful stop, or the handle was dropped.
                _ => {
                    let _ = graceful_tx.send(());
                    let _ = server.await;
                    false
                }
            },
        }
    });
    if killed {
        runtime.shutdown_background();
    }
}

fn to_response(wire: WireResponse) -> Response {
    let status = StatusCode::from_u16(wire.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
    (status, [(header::CONTENT_TYPE, "application/json")], wire.body).into_response()
}

async fn handle(State(state): State<Arc<ServerState>>, method: Method, uri: Uri, body: Bytes) -> Response {
    let request = match dispatch::decode(method.as_str(), uri.path(), &body) {
        Ok(r) => r,
        Err(e) => return to_response(WireResponse::error(&e)),
    };
    to_response(answer(state, request).await.into())
}

async fn answer(state: Arc<ServerState>, request: Request) -> Result<Vec<u8>, ErrorPayload> {
    let name = match request.model_name() {
        None => return dispatch::execute(&state.registry, &request),
        Some(name) => name.to_string(),
    };
    let model = state.registry.lookup(&name)?.clone();
    let permit = state
        .permits
        .clone()
        .acquire_owned()
        .await
        .map_err(|_| ErrorPayload::internal("server is shutting down"))?;
    let lock = state.serial_locks.get(&name).cloned();
    let op = request.operation().name();
    let work = tokio::task::spawn_blocking(move || {
        let _permit = permit;
        let _guard = lock.as_ref().map(|l| l.lock().unwrap_or_else(|e| e.into_inner()));
        catch_unwind(AssertUnwindSafe(|| dispatch::execute_on(model.as_ref(), &request)))
            .unwrap_or_else(|panic| Err(ErrorPayload::internal(format!("model panicked: {}", panic_message(&panic)))))
    });
    match tokio::time::timeout(state.timeout, work).await {
        Ok(Ok(result)) => {
            if let Err(e) = &result {
                tracing::debug!(model = %name, op, kind = e.kind.as_str(), "request failed");
            }
            result
        }
        Ok(Err(join)) => Err(ErrorPayload::internal(format!("model task failed: {join}"))),
        Err(_) => Err(ErrorPayload::internal(format!(
            "{op} on '{name}' exceeded the {} s request timeout",
            state.timeout.as_secs_f64()
        ))),
    }
}

fn panic_message(panic: &Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = panic.downcast_ref::<&str>() {
        (*s).to_string()
    } else if let Some(s) = panic.downcast_ref::<String>() {
        s.clone()
    } else {
        "unknown panic".into()
    }
}
