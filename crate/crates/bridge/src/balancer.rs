//! Load balancer: one wire-protocol front end over many model servers.
//!
//! Every model request is handed to exactly one backend, and a backend never
//! has more than one request outstanding. Requests that find no idle backend
//! wait in a FIFO queue. Idle backends are chosen least-recently-used first,
//! ties broken by registration order. A request whose backend fails at the
//! transport level marks that backend unhealthy and is requeued once.

use std::collections::VecDeque;
use std::net::{SocketAddr, TcpListener};
use std::path::Path;
use std::sync::{Arc, Mutex, MutexGuard};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, Method, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::sync::oneshot;
use uqbridge_core::dispatch::{self, WireResponse};
use uqbridge_core::wire::{InfoResponse, PROTOCOL_VERSION};
use uqbridge_core::ErrorPayload;

/// File and CLI configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BalancerConfig {
    #[serde(default)]
    pub port: u16,
    #[serde(default)]
    pub backends: Vec<String>,
    #[serde(default = "default_health_interval")]
    pub health_interval_s: f64,
}

fn default_health_interval() -> f64 {
    1.0
}

impl Default for BalancerConfig {
    fn default() -> Self {
        Self {
            port: 0,
            backends: Vec::new(),
            health_interval_s: default_health_interval(),
        }
    }
}

impl BalancerConfig {
    pub fn from_file(path: &Path) -> Result<Self, BalancerError> {
        let text = std::fs::read_to_string(path).map_err(|e| BalancerError::Config(format!("{}: {e}", path.display())))?;
        let config: Self =
            serde_json::from_str(&text).map_err(|e| BalancerError::Config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), BalancerError> {
        if !(self.health_interval_s > 0.0) || !self.health_interval_s.is_finite() {
            return Err(BalancerError::Config("health_interval_s must be positive".into()));
        }
        Ok(())
    }

    pub fn health_interval(&self) -> Duration {
        Duration::from_secs_f64(self.health_interval_s)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BalancerError {
    #[error("invalid balancer configuration: {0}")]
    Config(String),
    #[error("cannot bind port {port}: {source}")]
    Bind { port: u16, source: std::io::Error },
    #[error("balancer runtime failed: {0}")]
    Runtime(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SlotState {
    Idle,
    Busy,
    Unhealthy,
}

#[derive(Debug)]
struct Slot {
    id: u64,
    url: String,
    state: SlotState,
    /// Set by deregistration; the slot takes no new work.
    draining: bool,
    removed: Vec<oneshot::Sender<()>>,
    models: Vec<String>,
    last_used: u64,
    completed: u64,
    failed: u64,
    last_latency: Option<Duration>,
    total_latency: Duration,
    max_latency: Duration,
}

impl Slot {
    fn serves(&self, model: &str) -> bool {
        self.models.iter().any(|m| m == model)
    }

    fn available_for(&self, model: &str) -> bool {
        !self.draining && self.state != SlotState::Unhealthy && self.serves(model)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Lease {
    slot: u64,
    url: String,
}

#[derive(Debug)]
struct Waiter {
    model: String,
    reply: oneshot::Sender<Option<Lease>>,
}

#[derive(Debug, Default)]
struct Pool {
    slots: Vec<Slot>,
    waiters: VecDeque<Waiter>,
    next_id: u64,
    tick: u64,
    queue_high_water: usize,
    submitted: u64,
    requeued: u64,
    rejected: u64,
}

impl Pool {
    fn add(&mut self, url: String, models: Option<Vec<String>>) {
        let id = self.next_id;
        self.next_id += 1;
        let state = if models.is_some() { SlotState::Idle } else { SlotState::Unhealthy };
        self.slots.push(Slot {
            id,
            url,
            state,
            draining: false,
            removed: Vec::new(),
            models: models.unwrap_or_default(),
            last_used: 0,
            completed: 0,
            failed: 0,
            last_latency: None,
            total_latency: Duration::ZERO,
            max_latency: Duration::ZERO,
        });
    }

    fn slot_mut(&mut self, id: u64) -> Option<&mut Slot> {
        self.slots.iter_mut().find(|s| s.id == id)
    }

    /// Least-recently-used idle slot serving `model`; the scan runs in
    /// registration order, so ties go to the earlier slot.
    fn pick_idle(&mut self, model: &str) -> Option<Lease> {
        let slot = self
            .slots
            .iter_mut()
            .filter(|s| s.state == SlotState::Idle && s.available_for(model))
            .min_by_key(|s| s.last_used)?;
        self.tick += 1;
        slot.state = SlotState::Busy;
        slot.last_used = self.tick;
        Some(Lease {
            slot: slot.id,
            url: slot.url.clone(),
        })
    }

    fn can_ever_serve(&self, model: &str) -> bool {
        self.slots.iter().any(|s| s.available_for(model))
    }

    fn knows(&self, model: &str) -> bool {
        self.slots.iter().any(|s| s.serves(model))
    }

    fn has_healthy(&self) -> bool {
        self.slots.iter().any(|s| !s.draining && s.state != SlotState::Unhealthy)
    }

    /// Hands idle slots to waiters in FIFO order and fails waiters that no
    /// healthy slot can serve.
    fn dispatch_waiters(&mut self) {
        let mut remaining = VecDeque::with_capacity(self.waiters.len());
        while let Some(waiter) = self.waiters.pop_front() {
            if waiter.reply.is_closed() {
                continue;
            }
            if !self.can_ever_serve(&waiter.model) {
                self.rejected += 1;
                let _ = waiter.reply.send(None);
                continue;
            }
            match self.pick_idle(&waiter.model) {
                Some(lease) => {
                    if let Err(Some(lease)) = waiter.reply.send(Some(lease)) {
                        // The waiter gave up in the meantime.
                        if let Some(slot) = self.slot_mut(lease.slot) {
                            slot.state = SlotState::Idle;
                        }
                    }
                }
                None => remaining.push_back(waiter),
            }
        }
        self.waiters = remaining;
    }

    fn release(&mut self, lease: &Lease, latency: Duration, transport_ok: bool) {
        if let Some(slot) = self.slot_mut(lease.slot) {
            slot.last_latency = Some(latency);
            if transport_ok {
                slot.completed += 1;
                slot.total_latency += latency;
                slot.max_latency = slot.max_latency.max(latency);
                slot.state = SlotState::Idle;
            } else {
                slot.failed += 1;
                slot.state = SlotState::Unhealthy;
                tracing::warn!(url = %slot.url, "backend failed mid-request, marked unhealthy");
            }
            if slot.draining {
                self.remove(lease.slot);
            }
        }
        self.dispatch_waiters();
    }

    fn remove(&mut self, id: u64) {
        if let Some(pos) = self.slots.iter().position(|s| s.id == id) {
            let slot = self.slots.remove(pos);
            for tx in slot.removed {
                let _ = tx.send(());
            }
        }
    }
}

/// Per-backend statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackendStats {
    pub url: String,
    pub state: SlotState,
    pub models: Vec<String>,
    pub completed: u64,
    pub failed: u64,
    pub last_latency_s: Option<f64>,
    pub mean_latency_s: Option<f64>,
    pub max_latency_s: f64,
}

/// Consistent snapshot of the balancer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BalancerStats {
    pub backends: Vec<BackendStats>,
    pub queue_depth: usize,
    pub queue_high_water: usize,
    pub submitted: u64,
    pub requeued: u64,
    pub rejected: u64,
}

struct Shared {
    pool: Mutex<Pool>,
    http: reqwest::Client,
    health_interval: Duration,
}

impl Shared {
    fn pool(&self) -> MutexGuard<'_, Pool> {
        self.pool.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn stats(&self) -> BalancerStats {
        let pool = self.pool();
        BalancerStats {
            backends: pool
                .slots
                .iter()
                .map(|s| BackendStats {
                    url: s.url.clone(),
                    state: s.state,
                    models: s.models.clone(),
                    completed: s.completed,
                    failed: s.failed,
                    last_latency_s: s.last_latency.map(|d| d.as_secs_f64()),
                    mean_latency_s: (s.completed > 0).then(|| s.total_latency.as_secs_f64() / s.completed as f64),
                    max_latency_s: s.max_latency.as_secs_f64(),
                })
                .collect(),
            queue_depth: pool.waiters.len(),
            queue_high_water: pool.queue_high_water,
            submitted: pool.submitted,
            requeued: pool.requeued,
            rejected: pool.rejected,
        }
    }

    /// `Ok(models)` if the backend answers `/Info` with our protocol.
    async fn probe(&self, url: &str) -> Result<Vec<String>, String> {
        let timeout = self.health_interval.clamp(Duration::from_millis(200), Duration::from_secs(5));
        let response = self
            .http
            .get(format!("{url}/Info"))
            .timeout(timeout)
            .send()
            .await
            .map_err(|e| e.to_string())?;
        let body = response.bytes().await.map_err(|e| e.to_string())?;
        let info: InfoResponse = serde_json::from_slice(&body).map_err(|e| e.to_string())?;
        if info.protocol_version.split('.').next() != PROTOCOL_VERSION.split('.').next() {
            return Err(format!("protocol {}", info.protocol_version));
        }
        Ok(info.models)
    }

    async fn register(&self, url: &str) -> Result<SlotState, ErrorPayload> {
        let url = normalize(url)?;
        if self.pool().slots.iter().any(|s| s.url == url) {
            return Err(ErrorPayload::invalid_input(format!("backend {url} is already registered")));
        }
        let probe = self.probe(&url).await;
        let mut pool = self.pool();
        if pool.slots.iter().any(|s| s.url == url) {
            return Err(ErrorPayload::invalid_input(format!("backend {url} is already registered")));
        }
        let models = match probe {
            Ok(models) => Some(models),
            Err(e) => {
                tracing::warn!(%url, error = %e, "backend unreachable at registration");
                None
            }
        };
        pool.add(url.clone(), models);
        let state = pool.slots.last().map(|s| s.state).unwrap_or(SlotState::Unhealthy);
        tracing::info!(%url, ?state, "backend registered");
        pool.dispatch_waiters();
        Ok(state)
    }

    /// Removes a backend once its current request (if any) has completed.
    async fn deregister(&self, url: &str) -> Result<(), ErrorPayload> {
        let url = normalize(url)?;
        let done = {
            let mut pool = self.pool();
            let Some(slot) = pool.slots.iter_mut().find(|s| s.url == url) else {
                return Err(ErrorPayload::invalid_input(format!("backend {url} is not registered")));
            };
            slot.draining = true;
            if slot.state == SlotState::Busy {
                let (tx, rx) = oneshot::channel();
                slot.removed.push(tx);
                Some(rx)
            } else {
                let id = slot.id;
                pool.remove(id);
                None
            }
        };
        if let Some(rx) = done {
            let _ = rx.await;
        }
        self.pool().dispatch_waiters();
        tracing::info!(%url, "backend deregistered");
        Ok(())
    }

    async fn health_round(&self) {
        let targets: Vec<(u64, String)> = self
            .pool()
            .slots
            .iter()
            .filter(|s| s.state != SlotState::Busy && !s.draining)
            .map(|s| (s.id, s.url.clone()))
            .collect();
        for (id, url) in targets {
            let probe = self.probe(&url).await;
            let mut pool = self.pool();
            let Some(slot) = pool.slot_mut(id) else { continue };
            match probe {
                Ok(models) => {
                    slot.models = models;
                    if slot.state == SlotState::Unhealthy {
                        slot.state = SlotState::Idle;
                        tracing::info!(%url, "backend recovered");
                    }
                }
                Err(e) => {
                    if slot.state == SlotState::Idle {
                        slot.state = SlotState::Unhealthy;
                        tracing::warn!(%url, error = %e, "backend failed health check");
                    }
                }
            }
            pool.dispatch_waiters();
        }
    }

    /// Waits for a backend serving `model`; `None` if none can.
    async fn acquire(&self, model: &str) -> Option<Lease> {
        let rx = {
            let mut pool = self.pool();
            if let Some(lease) = pool.pick_idle(model) {
                return Some(lease);
            }
            if !pool.can_ever_serve(model) {
                pool.rejected += 1;
                return None;
            }
            let (tx, rx) = oneshot::channel();
            pool.waiters.push_back(Waiter {
                model: model.to_string(),
                reply: tx,
            });
            pool.queue_high_water = pool.queue_high_water.max(pool.waiters.len());
            rx
        };
        rx.await.ok().flatten()
    }

    async fn forward(&self, lease: &Lease, method: &Method, path: &str, body: Bytes) -> Result<(u16, Bytes), String> {
        let url = format!("{}{}", lease.url, path);
        let request = if *method == Method::GET {
            self.http.get(url)
        } else {
            self.http
                .post(url)
                .header(header::CONTENT_TYPE, "application/json")
                .body(body)
        };
        let response = request.send().await.map_err(|e| e.to_string())?;
        let status = response.status().as_u16();
        let bytes = response.bytes().await.map_err(|e| e.to_string())?;
        Ok((status, bytes))
    }

    async fn submit(&self, model: &str, method: &Method, path: &str, body: Bytes) -> Response {
        self.pool().submitted += 1;
        for attempt in 0..2 {
            let Some(lease) = self.acquire(model).await else {
                return no_backend(model);
            };
            // Return the slot even if this future is dropped mid-request.
            let mut guard = LeaseGuard {
                shared: self,
                lease: Some(lease.clone()),
                started: Instant::now(),
            };
            match self.forward(&lease, method, path, body.clone()).await {
                Ok((status, bytes)) => {
                    guard.finish(true);
                    let status = StatusCode::from_u16(status).unwrap_or(StatusCode::BAD_GATEWAY);
                    return (status, [(header::CONTENT_TYPE, "application/json")], bytes).into_response();
                }
                Err(e) => {
                    guard.finish(false);
                    tracing::warn!(url = %lease.url, attempt, error = %e, "forwarding failed");
                    if attempt == 0 {
                        self.pool().requeued += 1;
                    }
                }
            }
        }
        wire(WireResponse::error(&ErrorPayload::internal(format!(
            "request for '{model}' failed on two backends"
        ))))
    }
}

struct LeaseGuard<'a> {
    shared: &'a Shared,
    lease: Option<Lease>,
    started: Instant,
}

impl LeaseGuard<'_> {
    fn finish(&mut self, transport_ok: bool) {
        if let Some(lease) = self.lease.take() {
            self.shared.pool().release(&lease, self.started.elapsed(), transport_ok);
        }
    }
}

impl Drop for LeaseGuard<'_> {
    fn drop(&mut self) {
        // Cancelled mid-flight: the backend may still be working, but the
        // client is gone; treat the slot as usable again.
        self.finish(true);
    }
}

fn normalize(url: &str) -> Result<String, ErrorPayload> {
    let url = url.trim().trim_end_matches('/');
    let rest = url
        .strip_prefix("http://")
        .ok_or_else(|| ErrorPayload::invalid_input(format!("backend url '{url}' must start with http://")))?;
    if rest.is_empty() || rest.contains('/') {
        return Err(ErrorPayload::invalid_input(format!("backend url '{url}' must be http://host:port")));
    }
    Ok(url.to_string())
}

fn wire(w: WireResponse) -> Response {
    let status = StatusCode::from_u16(w.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
    (status, [(header::CONTENT_TYPE, "application/json")], w.body).into_response()
}

fn no_backend(model: &str) -> Response {
    let payload = ErrorPayload::internal(format!("NoBackendAvailable: no healthy backend serves '{model}'"));
    (
        StatusCode::SERVICE_UNAVAILABLE,
        [(header::CONTENT_TYPE, "application/json")],
        uqbridge_core::wire::encode_error(&payload),
    )
        .into_response()
}

async fn frontend(State(shared): State<Arc<Shared>>, method: Method, uri: Uri, body: Bytes) -> Response {
    let path = uri.path().to_string();
    // Decode with the same rules as a backend so malformed requests get the
    // very same answer without occupying one.
    let request = match dispatch::decode(method.as_str(), &path, &body) {
        Ok(r) => r,
        Err(e) => return wire(WireResponse::error(&e)),
    };
    let Some(model) = request.model_name().map(str::to_string) else {
        let models = {
            let pool = shared.pool();
            let mut names: Vec<String> = Vec::new();
            for slot in &pool.slots {
                for m in &slot.models {
                    if !names.contains(m) {
                        names.push(m.clone());
                    }
                }
            }
            names
        };
        return wire(
            uqbridge_core::wire::encode_response(&InfoResponse {
                protocol_version: PROTOCOL_VERSION.into(),
                models,
            })
            .into(),
        );
    };
    {
        let pool = shared.pool();
        if pool.has_healthy() && !pool.knows(&model) {
            return wire(WireResponse::error(&ErrorPayload::model_not_found(&model)));
        }
    }
    shared.submit(&model, &method, &path, body).await
}

#[derive(Deserialize)]
struct UrlBody {
    url: String,
}

async fn admin_register(State(shared): State<Arc<Shared>>, body: Bytes) -> Response {
    let parsed: Result<UrlBody, _> = serde_json::from_slice(&body);
    match parsed {
        Err(e) => wire(WireResponse::error(&ErrorPayload::invalid_input(e.to_string()))),
        Ok(b) => match shared.register(&b.url).await {
            Ok(state) => Json(serde_json::json!({ "url": b.url, "state": state })).into_response(),
            Err(e) => wire(WireResponse::error(&e)),
        },
    }
}

async fn admin_deregister(State(shared): State<Arc<Shared>>, body: Bytes) -> Response {
    let parsed: Result<UrlBody, _> = serde_json::from_slice(&body);
    match parsed {
        Err(e) => wire(WireResponse::error(&ErrorPayload::invalid_input(e.to_string()))),
        Ok(b) => match shared.deregister(&b.url).await {
            Ok(()) => Json(serde_json::json!({ "url": b.url, "removed": true })).into_response(),
            Err(e) => wire(WireResponse::error(&e)),
        },
    }
}

async fn admin_stats(State(shared): State<Arc<Shared>>) -> Json<BalancerStats> {
    Json(shared.stats())
}

/// A running balancer. Dropping the handle stops it.
pub struct BalancerHandle {
    addr: SocketAddr,
    shared: Arc<Shared>,
    stop: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<()>>,
    runtime_handle: tokio::runtime::Handle,
}

impl BalancerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn stats(&self) -> BalancerStats {
        self.shared.stats()
    }

    pub fn register(&self, url: &str) -> Result<SlotState, ErrorPayload> {
        let shared = self.shared.clone();
        let url = url.to_string();
        self.block_on(async move { shared.register(&url).await })
    }

    pub fn deregister(&self, url: &str) -> Result<(), ErrorPayload> {
        let shared = self.shared.clone();
        let url = url.to_string();
        self.block_on(async move { shared.deregister(&url).await })
    }

    fn block_on<T: Send + 'static>(&self, fut: impl std::future::Future<Output = T> + Send + 'static) -> T {
        let (tx, rx) = std::sync::mpsc::channel();
        self.runtime_handle.spawn(async move {
            let _ = tx.send(fut.await);
        });
        rx.recv().expect("balancer runtime alive")
    }

    /// Blocks until the balancer stops.
    pub fn wait(mut self) {
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }

    pub fn shutdown(self) {}
}

impl Drop for BalancerHandle {
    fn drop(&mut self) {
        if let Some(tx) = self.stop.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

/// Starts a balancer, registering the configured backends first.
pub fn start(config: BalancerConfig) -> Result<BalancerHandle, BalancerError> {
    config.validate()?;
    let listener = TcpListener::bind(("127.0.0.1", config.port)).map_err(|source| BalancerError::Bind {
        port: config.port,
        source,
    })?;
    listener.set_nonblocking(true)?;
    let addr = listener.local_addr()?;
    let http = reqwest::Client::builder()
        .no_proxy()
        .pool_max_idle_per_host(4)
        .build()
        .map_err(|e| BalancerError::Config(e.to_string()))?;
    let shared = Arc::new(Shared {
        pool: Mutex::new(Pool::default()),
        http,
        health_interval: config.health_interval(),
    });
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(2)
        .thread_name("uqbridge-balancer")
        .enable_all()
        .build()?;
    let runtime_handle = runtime.handle().clone();
    for url in &config.backends {
        let s = shared.clone();
        let url = url.clone();
        if let Err(e) = runtime.block_on(async move { s.register(&url).await }) {
            return Err(BalancerError::Config(e.message));
        }
    }
    let (stop_tx, stop_rx) = oneshot::channel::<()>();
    let app = Router::new()
        .route("/admin/register", post(admin_register))
        .route("/admin/deregister", post(admin_deregister))
        .route("/admin/stats", get(admin_stats))
        .fallback(frontend)
        .with_state(shared.clone());
    let health = shared.clone();
    let thread = thread::Builder::new()
        .name(format!("uqbridge-balancer-{}", addr.port()))
        .spawn(move || {
            runtime.block_on(async move {
                let listener = match tokio::net::TcpListener::from_std(listener) {
                    Ok(l) => l,
                    Err(e) => {
                        tracing::error!(error = %e, "cannot register listener");
                        return;
                    }
                };
                let checker = tokio::spawn(async move {
                    // Registration already probed every backend.
                    let first = tokio::time::Instant::now() + health.health_interval;
                    let mut ticker = tokio::time::interval_at(first, health.health_interval);
                    ticker.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
                    loop {
                        ticker.tick().await;
                        health.health_round().await;
                    }
                });
                let _ = axum::serve(listener, app)
                    .with_graceful_shutdown(async move {
                        let _ = stop_rx.await;
                    })
                    .await;
                checker.abort();
            });
            runtime.shutdown_background();
        })?;
    tracing::info!(%addr, "load balancer listening");
    Ok(BalancerHandle {
        addr,
        shared,
        stop: Some(stop_tx),
        thread: Some(thread),
        runtime_handle,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pool_with(n: usize) -> Pool {
        let mut pool = Pool::default();
        for i in 0..n {
            pool.add(format!("http://b{i}"), Some(vec!["m".into()]));
        }
        pool
    }

    #[test]
    fn lru_with_registration_tiebreak() {
        let mut pool = pool_with(3);
        let a = pool.pick_idle("m").unwrap();
        let b = pool.pick_idle("m").unwrap();
        assert_eq!((a.slot, b.slot), (0, 1));
        pool.release(&a, Duration::ZERO, true);
        // Slot 2 has never been used, so it beats the just-released slot 0.
        assert_eq!(pool.pick_idle("m").unwrap().slot, 2);
        assert_eq!(pool.pick_idle("m").unwrap().slot, 0);
        assert!(pool.pick_idle("m").is_none());
    }

    #[test]
    fn waiters_are_served_in_order() {
        let mut pool = pool_with(1);
        let lease = pool.pick_idle("m").unwrap();
        let mut receivers = Vec::new();
        for _ in 0..3 {
            let (tx, rx) = oneshot::channel();
            pool.waiters.push_back(Waiter {
                model: "m".into(),
                reply: tx,
            });
            receivers.push(rx);
        }
        pool.release(&lease, Duration::ZERO, true);
        let first = receivers[0].try_recv().unwrap().unwrap();
        assert!(receivers[1].try_recv().is_err());
        pool.release(&first, Duration::ZERO, true);
        assert!(receivers[1].try_recv().unwrap().is_some());
        assert_eq!(pool.waiters.len(), 1);
    }

    #[test]
    fn failure_marks_unhealthy_and_fails_stranded_waiters() {
        let mut pool = pool_with(1);
        let lease = pool.pick_idle("m").unwrap();
        let (tx, mut rx) = oneshot::channel();
        pool.waiters.push_back(Waiter {
            model: "m".into(),
            reply: tx,
        });
        pool.release(&lease, Duration::ZERO, false);
        assert_eq!(pool.slots[0].state, SlotState::Unhealthy);
        assert_eq!(rx.try_recv().unwrap(), None);
    }

    #[test]
    fn unreachable_registration_is_unhealthy() {
        let mut pool = Pool::default();
        pool.add("http://x".into(), None);
        assert_eq!(pool.slots[0].state, SlotState::Unhealthy);
        assert!(pool.pick_idle("m").is_none());
        assert!(!pool.has_healthy());
    }

    #[test]
    fn urls_are_normalized() {
        assert_eq!(normalize("http://127.0.0.1:80/").unwrap(), "http://127.0.0.1:80");
        assert!(normalize("ftp://x").is_err());
        assert!(normalize("http://x/y").is_err());
    }
}
