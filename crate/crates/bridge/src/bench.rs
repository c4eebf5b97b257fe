//! Weak-scaling harness: K sleep-model servers behind a balancer, R·K
//! requests fired at once.

use std::fmt::Write as _;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use uqbridge_core::model::ModelResult;
use uqbridge_core::wire::{EvaluateRequest, EvaluateResponse, Request};
use uqbridge_core::{Capabilities, ConcurrencyPolicy, Config, Model, ModelRegistry, ParameterList};

use crate::balancer::{self, BalancerConfig, BalancerError, SlotState};
use crate::catalog::SleepModel;
use crate::server::{self, ServerConfig, ServerError, ServerHandle};

/// Counts invocations that overlap on one model instance.
#[derive(Debug, Default)]
pub struct Audit {
    in_flight: AtomicUsize,
    max_in_flight: AtomicUsize,
    violations: AtomicU64,
    calls: AtomicU64,
}

impl Audit {
    pub fn violations(&self) -> u64 {
        self.violations.load(Ordering::SeqCst)
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn max_in_flight(&self) -> usize {
        self.max_in_flight.load(Ordering::SeqCst)
    }

    fn enter(&self) {
        let now = self.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.max_in_flight.fetch_max(now, Ordering::SeqCst);
        if now > 1 {
            self.violations.fetch_add(1, Ordering::SeqCst);
        }
    }

    fn exit(&self) {
        self.in_flight.fetch_sub(1, Ordering::SeqCst);
    }
}

/// Wraps a model and records overlapping calls. Declared parallel so the
/// server does not serialize calls itself.
pub struct Audited<M> {
    inner: M,
    audit: Arc<Audit>,
}

impl<M> Audited<M> {
    pub fn new(inner: M) -> Self {
        Self {
            inner,
            audit: Arc::default(),
        }
    }

    pub fn audit(&self) -> Arc<Audit> {
        self.audit.clone()
    }
}

impl<M: Model> Model for Audited<M> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn input_sizes(&self, config: &Config) -> ModelResult<Vec<usize>> {
        self.inner.input_sizes(config)
    }

    fn output_sizes(&self, config: &Config) -> ModelResult<Vec<usize>> {
        self.inner.output_sizes(config)
    }

    fn capabilities(&self) -> Capabilities {
        self.inner.capabilities()
    }

    fn concurrency(&self) -> ConcurrencyPolicy {
        ConcurrencyPolicy::Parallel
    }

    fn evaluate(&self, input: &ParameterList, config: &Config) -> ModelResult<ParameterList> {
        self.audit.enter();
        let out = self.inner.evaluate(input, config);
        self.audit.exit();
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub backends: usize,
    pub requests_per_backend: usize,
    pub model_duration: Duration,
    /// Kill the last backend halfway through the expected run time.
    pub kill_one: bool,
    pub health_interval: Duration,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            backends: 1,
            requests_per_backend: 20,
            model_duration: Duration::from_millis(100),
            kill_one: false,
            health_interval: Duration::from_millis(500),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("invalid bench configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Server(#[from] ServerError),
    #[error(transparent)]
    Balancer(#[from] BalancerError),
    #[error("bench runtime failed: {0}")]
    Runtime(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackendReport {
    pub url: String,
    pub state: SlotState,
    pub completed: u64,
    pub invocations: u64,
    pub max_in_flight: usize,
    pub violations: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub backends: usize,
    pub requests: usize,
    pub model_duration_ms: f64,
    pub completed: usize,
    pub failed: usize,
    /// Responses whose output differed from the input (identity model).
    pub wrong: usize,
    pub wall_s: f64,
    pub per_backend: Vec<BackendReport>,
    pub audit_clean: bool,
    pub violations: u64,
    pub unhealthy: usize,
    pub killed: Option<String>,
    /// Time from the kill until the balancer reported the slot unhealthy.
    pub unhealthy_after_s: Option<f64>,
    pub requeued: u64,
    pub queue_high_water: usize,
}

impl BenchReport {
    pub fn to_table(&self) -> String {
        let mut t = String::new();
        let _ = writeln!(
            t,
            "backends {}  requests {}  duration {} ms  wall {:.3} s",
            self.backends, self.requests, self.model_duration_ms, self.wall_s
        );
        let _ = writeln!(
            t,
            "completed {}  failed {}  wrong {}  requeued {}  queue high water {}",
            self.completed, self.failed, self.wrong, self.requeued, self.queue_high_water
        );
        let _ = writeln!(t, "{:<28} {:>10} {:>10} {:>12} {:>10}", "backend", "state", "completed", "max inflight", "violations");
        for b in &self.per_backend {
            let state = match b.state {
                SlotState::Idle => "idle",
                SlotState::Busy => "busy",
                SlotState::Unhealthy => "unhealthy",
            };
            let _ = writeln!(
                t,
                "{:<28} {:>10} {:>10} {:>12} {:>10}",
                b.url, state, b.completed, b.max_in_flight, b.violations
            );
        }
        let _ = writeln!(
            t,
            "audit {}  unhealthy {}{}",
            if self.audit_clean { "clean" } else { "VIOLATED" },
            self.unhealthy,
            match (&self.killed, self.unhealthy_after_s) {
                (Some(url), Some(s)) => format!("  killed {url}, unhealthy after {s:.3} s"),
                (Some(url), None) => format!("  killed {url}, never marked unhealthy"),
                _ => String::new(),
            }
        );
        t
    }
}

struct Backend {
    url: String,
    audit: Arc<Audit>,
    handle: Option<ServerHandle>,
}

fn start_backends(k: usize, delay: Duration) -> Result<Vec<Backend>, BenchError> {
    (0..k)
        .map(|_| {
            let model = Audited::new(SleepModel::new(delay));
            let audit = model.audit();
            let registry = ModelRegistry::new()
                .with(Arc::new(model))
                .map_err(|e| BenchError::Config(e.to_string()))?;
            let handle = server::serve(registry, ServerConfig::with_port(0))?;
            Ok(Backend {
                url: handle.url(),
                audit,
                handle: Some(handle),
            })
        })
        .collect()
}

/// Runs the harness in-process and reports timings and the audit.
pub fn run_bench(config: &BenchConfig) -> Result<BenchReport, BenchError> {
    if config.backends == 0 || config.requests_per_backend == 0 || config.model_duration.is_zero() {
        return Err(BenchError::Config("backends, requests and duration must all be at least 1".into()));
    }
    if config.kill_one && config.backends < 2 {
        return Err(BenchError::Config("killing a backend needs at least 2 backends".into()));
    }
    let mut backends = start_backends(config.backends, config.model_duration)?;
    let lb = balancer::start(BalancerConfig {
        port: 0,
        backends: backends.iter().map(|b| b.url.clone()).collect(),
        health_interval_s: config.health_interval.as_secs_f64(),
    })?;
    let total = config.backends * config.requests_per_backend;
    let bodies: Vec<Vec<u8>> = (0..total)
        .map(|i| {
            Request::Evaluate(EvaluateRequest {
                name: "sleep".into(),
                input: ParameterList::scalar(i as f64),
                config: Config::new(),
            })
            .encode()
            .expect("finite input")
        })
        .collect();
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(2)
        .enable_all()
        .build()?;
    let http = reqwest::Client::builder()
        .no_proxy()
        .pool_max_idle_per_host(total)
        .build()
        .map_err(|e| BenchError::Config(e.to_string()))?;
    let endpoint = format!("{}/Evaluate", lb.url());
    let start = Instant::now();
    let firing = runtime.spawn(async move {
        let tasks: Vec<_> = bodies
            .into_iter()
            .enumerate()
            .map(|(i, body)| {
                let http = http.clone();
                let endpoint = endpoint.clone();
                tokio::spawn(async move {
                    let response = http
                        .post(endpoint)
                        .header("content-type", "application/json")
                        .body(body)
                        .send()
                        .await
                        .map_err(|e| e.to_string())?;
                    let status = response.status();
                    let bytes = response.bytes().await.map_err(|e| e.to_string())?;
                    if !status.is_success() {
                        return Err(String::from_utf8_lossy(&bytes).into_owned());
                    }
                    let r: EvaluateResponse = serde_json::from_slice(&bytes).map_err(|e| e.to_string())?;
                    Ok(r.output == ParameterList::scalar(i as f64))
                })
            })
            .collect();
        let mut outcomes = Vec::with_capacity(tasks.len());
        for t in tasks {
            outcomes.push(t.await.unwrap_or_else(|e| Err(e.to_string())));
        }
        (outcomes, Instant::now())
    });

    let mut killed = None;
    let mut unhealthy_after = None;
    if config.kill_one {
        let victim = backends.last_mut().expect("at least two backends");
        std::thread::sleep(config.model_duration * config.requests_per_backend as u32 / 2);
        if let Some(h) = victim.handle.take() {
            h.kill();
        }
        let killed_at = Instant::now();
        tracing::info!(url = %victim.url, "backend killed");
        killed = Some(victim.url.clone());
        let deadline = killed_at + config.health_interval * 4;
        while Instant::now() < deadline {
            let down = lb
                .stats()
                .backends
                .iter()
                .any(|b| b.url == victim.url && b.state == SlotState::Unhealthy);
            if down {
                unhealthy_after = Some(killed_at.elapsed().as_secs_f64());
                break;
            }
            std::thread::sleep(Duration::from_millis(5));
        }
    }

    let (outcomes, finished) = runtime
        .block_on(firing)
        .map_err(|e| BenchError::Config(format!("request task failed: {e}")))?;
    let wall = finished.duration_since(start);
    let stats = lb.stats();
    let mut failed = 0;
    let mut wrong = 0;
    for outcome in &outcomes {
        match outcome {
            Ok(true) => {}
            Ok(false) => wrong += 1,
            Err(e) => {
                failed += 1;
                tracing::warn!(error = %e, "bench request failed");
            }
        }
    }
    let per_backend: Vec<BackendReport> = backends
        .iter()
        .map(|b| {
            let slot = stats.backends.iter().find(|s| s.url == b.url);
            BackendReport {
                url: b.url.clone(),
                state: slot.map_or(SlotState::Unhealthy, |s| s.state),
                completed: slot.map_or(0, |s| s.completed),
                invocations: b.audit.calls(),
                max_in_flight: b.audit.max_in_flight(),
                violations: b.audit.violations(),
            }
        })
        .collect();
    let violations = per_backend.iter().map(|b| b.violations).sum();
    Ok(BenchReport {
        backends: config.backends,
        requests: total,
        model_duration_ms: config.model_duration.as_secs_f64() * 1e3,
        completed: outcomes.len() - failed - wrong,
        failed,
        wrong,
        wall_s: wall.as_secs_f64(),
        audit_clean: violations == 0,
        violations,
        unhealthy: per_backend.iter().filter(|b| b.state == SlotState::Unhealthy).count(),
        per_backend,
        killed,
        unhealthy_after_s: unhealthy_after,
        requeued: stats.requeued,
        queue_high_water: stats.queue_high_water,
    })
}
