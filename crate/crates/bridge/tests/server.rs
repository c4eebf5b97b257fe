mod support;

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use support::*;
use uqbridge::catalog::SleepModel;
use uqbridge::server::{self, ServerConfig, ServerError, PORT_ENV};
use uqbridge_core::model::{Doubler, ModelResult};
use uqbridge_core::wire::decode_error;
use uqbridge_core::{Capabilities, ConcurrencyPolicy, Config, ErrorKind, Model, ModelRegistry, ParameterList};

fn golden(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    std::fs::read_to_string(&path).unwrap().trim_end().to_string()
}

fn error_kind(body: &str) -> ErrorKind {
    decode_error(body.as_bytes()).expect("error payload").kind
}

#[test]
fn responses_match_golden_files() {
    let s = serve_models(vec![Arc::new(Doubler::default())]);
    let u = s.url();
    assert_eq!(get(&format!("{u}/Info")), (200, golden("info.json")));
    let sizes = r#"{"name":"forward","config":{}}"#;
    assert_eq!(post(&format!("{u}/InputSizes"), sizes), (200, golden("input_sizes.json")));
    assert_eq!(post(&format!("{u}/OutputSizes"), sizes), (200, golden("output_sizes.json")));
    assert_eq!(post(&format!("{u}/ModelInfo"), r#"{"name":"forward"}"#), (200, golden("model_info.json")));
    let eval = r#"{"name":"forward","input":[[1.5]],"config":{}}"#;
    assert_eq!(post(&format!("{u}/Evaluate"), eval), (200, golden("evaluate.json")));
    let bad = r#"{"name":"forward","input":[[1.0,2.0]],"config":{}}"#;
    assert_eq!(post(&format!("{u}/Evaluate"), bad), (400, golden("error_invalid_input.json")));
    let missing = r#"{"name":"x","input":[[1.0]],"config":{}}"#;
    assert_eq!(post(&format!("{u}/Evaluate"), missing), (400, golden("error_model_not_found.json")));
}

#[test]
fn doubler_examples() {
    let s = serve_models(vec![Arc::new(Doubler::default())]);
    let u = s.url();
    for (x, y) in [("1.5", "3.0"), ("0.0", "0.0"), ("-2.25", "-4.5")] {
        let body = format!(r#"{{"name":"forward","input":[[{x}]],"config":{{}}}}"#);
        assert_eq!(post(&format!("{u}/Evaluate"), &body).1, format!(r#"{{"output":[[{y}]]}}"#));
    }
    let grad = r#"{"name":"forward","outWrt":0,"inWrt":0,"input":[[4.0]],"sens":[1.0],"config":{}}"#;
    assert_eq!(post(&format!("{u}/Gradient"), grad).1, r#"{"output":[2.0]}"#);
    let hess = r#"{"name":"forward","outWrt":0,"inWrt1":0,"inWrt2":0,"input":[[4.0]],"sens":[1.0],"vec":[1.0],"config":{}}"#;
    assert_eq!(post(&format!("{u}/ApplyHessian"), hess).1, r#"{"output":[0.0]}"#);
}

#[test]
fn optional_operations_are_refused() {
    let s = serve_models(vec![Arc::new(Doubler::with_capabilities(Capabilities::EVALUATE))]);
    let grad = r#"{"name":"forward","outWrt":0,"inWrt":0,"input":[[4.0]],"sens":[1.0],"config":{}}"#;
    let (status, body) = post(&format!("{}/Gradient", s.url()), grad);
    assert_eq!(status, 400);
    assert_eq!(error_kind(&body), ErrorKind::UnsupportedFeature);
}

/// Echoes `config.level` and records overlapping calls.
struct Probe {
    policy: ConcurrencyPolicy,
    in_flight: AtomicUsize,
    overlaps: AtomicUsize,
    calls: AtomicUsize,
}

impl Probe {
    fn new(policy: ConcurrencyPolicy) -> Arc<Self> {
        Arc::new(Self {
            policy,
            in_flight: AtomicUsize::new(0),
            overlaps: AtomicUsize::new(0),
            calls: AtomicUsize::new(0),
        })
    }
}

impl Model for Probe {
    fn name(&self) -> &str {
        "probe"
    }
    fn input_sizes(&self, _: &Config) -> ModelResult<Vec<usize>> {
        Ok(vec![1])
    }
    fn output_sizes(&self, _: &Config) -> ModelResult<Vec<usize>> {
        Ok(vec![1])
    }
    fn capabilities(&self) -> Capabilities {
        Capabilities::EVALUATE
    }
    fn concurrency(&self) -> ConcurrencyPolicy {
        self.policy
    }
    fn evaluate(&self, input: &ParameterList, config: &Config) -> ModelResult<ParameterList> {
        if self.in_flight.fetch_add(1, Ordering::SeqCst) > 0 {
            self.overlaps.fetch_add(1, Ordering::SeqCst);
        }
        self.calls.fetch_add(1, Ordering::SeqCst);
        if input.0[0][0] < 0.0 {
            self.in_flight.fetch_sub(1, Ordering::SeqCst);
            panic!("negative input");
        }
        thread::sleep(Duration::from_micros(300));
        self.in_flight.fetch_sub(1, Ordering::SeqCst);
        let level = config.get("level").and_then(|v| v.as_f64()).unwrap_or(-1.0);
        Ok(ParameterList::scalar(level))
    }
}

fn hammer(url: &str, requests: usize, threads: usize) -> Vec<(u16, String)> {
    let next = AtomicUsize::new(0);
    let out = std::sync::Mutex::new(Vec::new());
    thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| {
                let client = http();
                loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    if i >= requests {
                        break;
                    }
                    let body = format!(r#"{{"name":"probe","input":[[{i}.0]],"config":{{"level":{i}}}}}"#);
                    let (s, b) = raw(&client, "POST", &format!("{url}/Evaluate"), body.as_bytes());
                    out.lock().unwrap().push((s, String::from_utf8(b).unwrap()));
                }
            });
        }
    });
    out.into_inner().unwrap()
}

#[test]
fn serial_models_never_overlap() {
    let probe = Probe::new(ConcurrencyPolicy::Serial);
    let s = serve_models(vec![probe.clone()]);
    let results = hammer(&s.url(), 1000, 48);
    assert!(results.iter().all(|(status, _)| *status == 200));
    assert_eq!(probe.calls.load(Ordering::SeqCst), 1000);
    assert_eq!(probe.overlaps.load(Ordering::SeqCst), 0);
}

#[test]
fn parallel_models_do_overlap() {
    // Control for the test above: the probe can detect overlap.
    let probe = Probe::new(ConcurrencyPolicy::Parallel);
    let s = serve_models(vec![probe.clone()]);
    hammer(&s.url(), 400, 16);
    assert!(probe.overlaps.load(Ordering::SeqCst) > 0);
}

#[test]
fn config_is_forwarded_verbatim() {
    let s = serve_models(vec![Probe::new(ConcurrencyPolicy::Parallel)]);
    let body = r#"{"name":"probe","input":[[1.0]],"config":{"level":0}}"#;
    assert_eq!(post(&format!("{}/Evaluate", s.url()), body).1, r#"{"output":[[0.0]]}"#);
    let body = r#"{"name":"probe","input":[[1.0]],"config":{"level":3}}"#;
    assert_eq!(post(&format!("{}/Evaluate", s.url()), body).1, r#"{"output":[[3.0]]}"#);
}

const MALFORMED: [(&str, &str, &str); 12] = [
    ("POST", "/Evaluate", "{"),
    ("POST", "/Evaluate", ""),
    ("POST", "/Evaluate", "[]"),
    ("POST", "/Evaluate", r#"{"name":"probe","input":"x","config":{}}"#),
    ("POST", "/Evaluate", r#"{"name":"probe","input":[[1e999]],"config":{}}"#),
    ("POST", "/Evaluate", r#"{"name":"probe","input":[[1.0]],"config":7}"#),
    ("POST", "/Evaluate", r#"{"name":"probe","input":[[1.0,2.0]],"config":{}}"#),
    ("POST", "/Evaluate", r#"{"name":"probe","input":[],"config":{}}"#),
    ("POST", "/Gradient", r#"{"name":"probe","outWrt":-1,"inWrt":0,"input":[[1.0]],"sens":[1.0],"config":{}}"#),
    ("POST", "/Nope", "{}"),
    ("GET", "/Evaluate", ""),
    ("POST", "/Evaluate", "\u{0}\u{1}garbage"),
];

#[test]
fn malformed_requests_never_break_the_server() {
    let s = serve_models(vec![Probe::new(ConcurrencyPolicy::Parallel)]);
    let u = s.url();
    let client = http();
    let valid = r#"{"name":"probe","input":[[1.0]],"config":{"level":2}}"#;
    let expected = raw(&client, "POST", &format!("{u}/Evaluate"), valid.as_bytes());
    assert_eq!(expected.0, 200);
    for i in 0..1000 {
        let (method, path, body) = MALFORMED[i % MALFORMED.len()];
        let (status, bytes) = raw(&client, method, &format!("{u}{path}"), body.as_bytes());
        assert_eq!(status, 400, "{method} {path} {body:?}");
        let payload = decode_error(&bytes).expect("typed error");
        assert!(
            matches!(payload.kind, ErrorKind::InvalidInput | ErrorKind::UnsupportedFeature),
            "{payload:?}"
        );
        if i % 10 == 0 {
            assert_eq!(raw(&client, "POST", &format!("{u}/Evaluate"), valid.as_bytes()), expected);
        }
    }
}

#[test]
fn panics_become_internal_errors() {
    let s = serve_models(vec![Probe::new(ConcurrencyPolicy::Serial)]);
    let u = s.url();
    let (status, body) = post(&format!("{u}/Evaluate"), r#"{"name":"probe","input":[[-1.0]],"config":{}}"#);
    assert_eq!(status, 500);
    assert_eq!(error_kind(&body), ErrorKind::InternalError);
    assert!(body.contains("negative input"));
    // The serial lock survives the panic.
    let (status, _) = post(&format!("{u}/Evaluate"), r#"{"name":"probe","input":[[1.0]],"config":{}}"#);
    assert_eq!(status, 200);
}

#[test]
fn slow_requests_time_out() {
    let registry = ModelRegistry::new()
        .with(Arc::new(SleepModel::new(Duration::from_millis(400))))
        .unwrap();
    let config = ServerConfig {
        request_timeout: Duration::from_millis(50),
        ..ServerConfig::with_port(0)
    };
    let s = server::serve(registry, config).unwrap();
    let (status, body) = post(&format!("{}/Evaluate", s.url()), r#"{"name":"sleep","input":[[1.0]],"config":{}}"#);
    assert_eq!(status, 500);
    assert_eq!(error_kind(&body), ErrorKind::InternalError);
    assert!(body.contains("timeout"));
}

#[test]
fn excess_requests_queue_instead_of_failing() {
    let registry = ModelRegistry::new()
        .with(Arc::new(SleepModel::new(Duration::from_millis(50))))
        .unwrap();
    let config = ServerConfig {
        max_concurrent_requests: 2,
        ..ServerConfig::with_port(0)
    };
    let s = server::serve(registry, config).unwrap();
    let url = format!("{}/Evaluate", s.url());
    let start = Instant::now();
    thread::scope(|scope| {
        for _ in 0..8 {
            scope.spawn(|| assert_eq!(post(&url, r#"{"name":"sleep","input":[[1.0]],"config":{}}"#).0, 200));
        }
    });
    // 8 requests, 2 at a time, 50 ms each.
    assert!(start.elapsed() >= Duration::from_millis(195), "{:?}", start.elapsed());
}

#[test]
fn shutdown_drains_in_flight_requests() {
    let registry = ModelRegistry::new()
        .with(Arc::new(SleepModel::new(Duration::from_millis(300))))
        .unwrap();
    let s = server::serve(registry, ServerConfig::with_port(0)).unwrap();
    let url = format!("{}/Evaluate", s.url());
    let request = thread::spawn(move || post(&url, r#"{"name":"sleep","input":[[4.0]],"config":{}}"#));
    thread::sleep(Duration::from_millis(100));
    s.shutdown();
    assert_eq!(request.join().unwrap(), (200, r#"{"output":[[4.0]]}"#.to_string()));
}

#[test]
fn bound_port_is_a_startup_error() {
    let first = serve_names(&["forward"]);
    let clash = server::serve(catalog_registry(), ServerConfig::with_port(first.port()));
    assert!(matches!(clash, Err(ServerError::Bind { .. })));
    let zero = ServerConfig {
        max_concurrent_requests: 0,
        ..ServerConfig::with_port(0)
    };
    assert!(matches!(server::serve(catalog_registry(), zero), Err(ServerError::Config(_))));
}

fn catalog_registry() -> ModelRegistry {
    uqbridge::catalog::registry_for(&["forward"]).unwrap()
}

#[test]
fn port_comes_from_the_environment() {
    std::env::set_var(PORT_ENV, "4999");
    assert_eq!(ServerConfig::default().port_from_env().unwrap().port, 4999);
    std::env::set_var(PORT_ENV, "nope");
    assert!(ServerConfig::default().port_from_env().is_err());
    std::env::remove_var(PORT_ENV);
    assert_eq!(ServerConfig::default().port_from_env().unwrap().port, 4242);
}
