//! End-to-end acceptance checks. Each criterion runs in isolation and
//! prints one PASS/FAIL line; the test fails if any of them failed.

mod support;
#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::io::Write;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use support::*;
use uqbridge::balancer::{self, BalancerConfig};
use uqbridge::bench::{self, Audited, BenchConfig};
use uqbridge::catalog::{self, SleepModel};
use uqbridge::client::RemoteModel;
use uqbridge::mc::{self, McJob, MhJob};
use uqbridge::server::{self, ServerConfig};
use uqbridge_core::benchmarks::beam::beam_propagation_distribution;
use uqbridge_core::benchmarks::deconv;
use uqbridge_core::benchmarks::genz::{CoefficientDecay, GenzFamily, GenzSpec};
use uqbridge_core::config::config_from;
use uqbridge_core::model::Doubler;
use uqbridge_core::sampling::InputDistribution;
use uqbridge_core::wire::decode_error;
use uqbridge_core::{Capabilities, Config, ErrorKind, Model, ModelRegistry, ParameterList};

fn golden(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    std::fs::read_to_string(&path).unwrap().trim_end().to_string()
}

fn scalar(m: &dyn Model, x: &[f64], config: &Config) -> f64 {
    m.evaluate(&ParameterList::single(x.to_vec()), config).unwrap()[0][0]
}

fn protocol_round_trip() -> String {
    let s = server::serve(
        ModelRegistry::new().with(Arc::new(Doubler::default())).unwrap(),
        ServerConfig::with_port(0),
    )
    .unwrap();
    let u = s.url();
    let m = RemoteModel::connect(&u, "forward").unwrap();
    let out = m.remote_evaluate(&ParameterList::single(vec![1.5]), &Config::new()).unwrap();
    assert_eq!(out, ParameterList::single(vec![3.0]));
    assert_eq!(out[0][0].to_bits(), 3.0f64.to_bits());
    assert_eq!(get(&format!("{u}/Info")), (200, golden("info.json")));
    let sizes = r#"{"name":"forward","config":{}}"#;
    assert_eq!(post(&format!("{u}/InputSizes"), sizes), (200, golden("input_sizes.json")));
    assert_eq!(post(&format!("{u}/OutputSizes"), sizes), (200, golden("output_sizes.json")));
    assert_eq!(post(&format!("{u}/ModelInfo"), r#"{"name":"forward"}"#), (200, golden("model_info.json")));
    "eval [[1.5]] -> [[3.0]], 4 golden bodies match".into()
}

fn optionality() -> String {
    let registry = ModelRegistry::new()
        .with(Arc::new(Doubler::with_capabilities(Capabilities::EVALUATE)))
        .unwrap();
    let s = server::serve(registry, ServerConfig::with_port(0)).unwrap();
    let grad = r#"{"name":"forward","outWrt":0,"inWrt":0,"input":[[4.0]],"sens":[1.0],"config":{}}"#;
    let (status, body) = post(&format!("{}/Gradient", s.url()), grad);
    assert_eq!(status, 400);
    assert_eq!(decode_error(body.as_bytes()).unwrap().kind, ErrorKind::UnsupportedFeature);
    "/Gradient on evaluate-only model -> 400 UnsupportedFeature".into()
}

fn density_oracles() -> String {
    let s = serve_names(&["banana", "donut", "funnel", "gaussian-mixture", "deconv-posterior"]);
    let remote = |name: &str| RemoteModel::connect(&s.url(), name).unwrap();
    let c = Config::new();
    let mut worst = 0.0f64;
    let mut check = |v: f64, expected: f64, what: &str| {
        let err = (v - expected).abs() / (1.0 + expected.abs());
        worst = worst.max(err);
        assert!(close(v, expected, 1e-12), "{what}: {v} vs {expected}");
    };
    let oracles: [(&str, u64, f64, fn(&[f64]) -> f64); 4] = [
        ("banana", 11, 4.0, |p| banana_oracle(p, 2.0, 0.2, 1.0)),
        ("donut", 12, 4.0, donut_oracle),
        ("funnel", 13, 4.0, funnel_oracle),
        ("gaussian-mixture", 14, 5.0, mixture_oracle),
    ];
    for (name, seed, half, oracle) in oracles {
        let m = remote(name);
        for p in random_points(seed, 1000, 2, -half, half) {
            check(scalar(&m, &p, &c), oracle(&p), name);
        }
    }
    let m = remote("deconv-posterior");
    let a = dense_kernel_matrix();
    for p in random_points(15, 1000, deconv::SIZE, -1.0, 1.0) {
        check(scalar(&m, &p, &c), deconv_oracle(&p, "Gaussian", deconv::DEFAULT_DELTA, &a), "deconv");
    }
    let donut = remote("donut");
    assert_eq!(scalar(&donut, &[2.6, 0.0], &c), 0.0);
    let origin = scalar(&donut, &[0.0, 0.0], &c);
    assert!((origin - -204.848_484_8).abs() <= 1e-9 + 1e-7, "{origin}");
    assert!((origin - -6.76 / 0.033).abs() <= 1e-9, "{origin}");
    format!("5 x 1000 points, worst mixed error {worst:.1e}; donut(0,0) = {origin:.7}")
}

fn gradient_checks() -> String {
    let s = serve_names(&["donut", "funnel", "gaussian-mixture", "deconv-posterior"]);
    let mut worst = 0.0f64;
    let mut check = |name: &str, config: Config, points: Vec<Vec<f64>>| {
        let remote = RemoteModel::connect(&s.url(), name).unwrap();
        let local = catalog::build_model(name).unwrap();
        for p in points {
            let g = remote
                .remote_gradient(0, 0, &ParameterList::single(p.clone()), &[1.0], &config)
                .unwrap();
            let fd = central_difference(|x| scalar(local.as_ref(), x, &config), &p);
            let scale = fd.iter().map(|v| v.abs()).fold(1.0, f64::max);
            for (a, b) in g.iter().zip(&fd) {
                worst = worst.max((a - b).abs() / scale);
                assert!((a - b).abs() <= 1e-5 * scale, "{name} at {p:?}: {a} vs {b}");
            }
        }
    };
    check("donut", Config::new(), random_points(21, 20, 2, 0.5, 3.5));
    check("funnel", Config::new(), random_points(22, 20, 2, -2.0, 2.0));
    check("gaussian-mixture", Config::new(), random_points(23, 20, 2, -3.0, 3.0));
    for (prior, seed) in [("Gaussian", 24), ("GMRF", 25)] {
        check("deconv-posterior", config_from([("prior", prior)]), random_points(seed, 20, deconv::SIZE, -1.0, 1.0));
    }
    format!("5 targets x 20 points, worst relative deviation {worst:.1e}")
}

fn genz_quadrature() -> String {
    let mut worst = 0.0f64;
    for family in GenzFamily::ALL {
        for decay in CoefficientDecay::ALL {
            for n in [1, 3, 5] {
                let s = GenzSpec {
                    n,
                    family,
                    decay,
                    ..GenzSpec::default()
                };
                let (reference, oracle) = (s.reference_integral(), tensor_gauss(&s, 1.0e6));
                worst = worst.max((reference - oracle).abs());
                assert!(
                    (reference - oracle).abs() <= 1e-6,
                    "{} {} n={n}: {reference} vs {oracle}",
                    family.as_str(),
                    decay.as_str()
                );
            }
        }
    }
    let osc = GenzSpec {
        n: 1,
        family: GenzFamily::Oscillatory,
        decay: CoefficientDecay::SquaredExponential,
        ..GenzSpec::default()
    };
    let v = osc.reference_integral();
    assert!((v - -(1.0f64.sin())).abs() <= 1e-12 && (v - -0.841_471_0).abs() <= 1e-7, "{v}");
    format!("90 cases, worst |reference - quadrature| {worst:.1e}; oscillatory n=1 = {v:.7}")
}

fn single_in_flight() -> String {
    let mut servers = Vec::new();
    let mut audits = Vec::new();
    for _ in 0..4 {
        let model = Audited::new(SleepModel::new(Duration::from_millis(1)));
        audits.push(model.audit());
        let registry = ModelRegistry::new().with(Arc::new(model)).unwrap();
        servers.push(server::serve(registry, ServerConfig::with_port(0)).unwrap());
    }
    let lb = balancer::start(BalancerConfig {
        port: 0,
        backends: servers.iter().map(|s| s.url()).collect(),
        health_interval_s: 1.0,
    })
    .unwrap();
    let m = RemoteModel::connect(&lb.url(), "sleep").unwrap();
    let inputs: Vec<ParameterList> = (0..10_000).map(|i| ParameterList::scalar(i as f64)).collect();
    let results = m.evaluate_many(&inputs, &Config::new(), 64);
    for (i, r) in results.into_iter().enumerate() {
        assert_eq!(r.unwrap(), ParameterList::scalar(i as f64));
    }
    let calls: u64 = audits.iter().map(|a| a.calls()).sum();
    let violations: u64 = audits.iter().map(|a| a.violations()).sum();
    assert_eq!(calls, 10_000);
    assert_eq!(violations, 0);
    assert!(audits.iter().all(|a| a.max_in_flight() == 1));
    format!("{calls} invocations on 4 backends, {violations} overlaps")
}

fn weak_scaling() -> String {
    let mut walls = Vec::new();
    for k in [1, 2, 4, 8] {
        let report = bench::run_bench(&BenchConfig {
            backends: k,
            requests_per_backend: 20,
            model_duration: Duration::from_millis(100),
            ..BenchConfig::default()
        })
        .unwrap();
        assert_eq!((report.completed, report.failed, report.wrong), (20 * k, 0, 0));
        assert!(report.audit_clean);
        walls.push(report.wall_s);
    }
    let detail = format!("walls {walls:.3?} s");
    for &w in &walls {
        assert!((2.0..=2.6).contains(&w), "{detail}");
    }
    let max = walls.iter().cloned().fold(f64::MIN, f64::max);
    let min = walls.iter().cloned().fold(f64::MAX, f64::min);
    assert!(max / min <= 1.25, "{detail}");
    format!("{detail}, max/min {:.3}", max / min)
}

fn balancer_transparency() -> String {
    let names = ["donut", "funnel", "gaussian-mixture", "banana", "beam-forward"];
    let direct = serve_names(&names);
    let backends: Vec<_> = (0..3).map(|_| serve_names(&names)).collect();
    let lb = balancer::start(BalancerConfig {
        port: 0,
        backends: backends.iter().map(|s| s.url()).collect(),
        health_interval_s: 1.0,
    })
    .unwrap();
    let client = http();
    let mut rng = ChaCha20Rng::seed_from_u64(8);
    for i in 0..500 {
        let x: f64 = rng.random_range(-3.0..3.0);
        let y: f64 = rng.random_range(-3.0..3.0);
        let e: f64 = rng.random_range(0.9..1.1);
        let (path, body) = match rng.random_range(0..8) {
            0 => ("/Evaluate", format!(r#"{{"name":"donut","input":[[{x},{y}]],"config":{{}}}}"#)),
            1 => ("/Evaluate", format!(r#"{{"name":"funnel","input":[[{x},{y}]],"config":{{}}}}"#)),
            2 => (
                "/Gradient",
                format!(r#"{{"name":"gaussian-mixture","outWrt":0,"inWrt":0,"input":[[{x},{y}]],"sens":[1.0],"config":{{}}}}"#),
            ),
            3 => ("/Evaluate", format!(r#"{{"name":"beam-forward","input":[[{e},1.0,{e}]],"config":{{}}}}"#)),
            4 => ("/Evaluate", format!(r#"{{"name":"banana","input":[[{x}]],"config":{{}}}}"#)),
            5 => ("/Evaluate", format!(r#"{{"name":"nope","input":[[{x}]],"config":{{}}}}"#)),
            6 => ("/OutputSizes", r#"{"name":"beam-forward","config":{"N":61}}"#.to_string()),
            _ => ("/ModelInfo", r#"{"name":"banana"}"#.to_string()),
        };
        let a = raw(&client, "POST", &format!("{}{path}", lb.url()), body.as_bytes());
        let b = raw(&client, "POST", &format!("{}{path}", direct.url()), body.as_bytes());
        assert_eq!(a, b, "request {i}: {path} {body}");
    }
    "500 random requests byte-identical".into()
}

fn beam_convergence() -> String {
    let ratio = beam_error(31) / beam_error(61);
    assert!((3.0..=5.0).contains(&ratio), "ratio {ratio}");
    format!("error ratio N=31 -> N=61 is {ratio:.3}")
}

fn membrane_symmetry() -> String {
    let s = serve_names(&["membrane-forward"]);
    let m = RemoteModel::connect(&s.url(), "membrane-forward").unwrap();
    let solve = |a: &[f64]| m.remote_evaluate(&ParameterList::single(a.to_vec()), &Config::new()).unwrap()[0].clone();
    let a = stiffness_field();
    let u = solve(&a);
    let mut worst = 0.0f64;
    let (mut a_rot, mut u_rot) = (a.clone(), u.clone());
    for _ in 0..4 {
        a_rot = rotate(&a_rot, 8);
        u_rot = rotate(&u_rot, 13);
        for (x, y) in solve(&a_rot).iter().zip(&u_rot) {
            worst = worst.max((x - y).abs());
        }
    }
    assert!(worst <= 1e-12, "rotation {worst}");
    let doubled: Vec<f64> = a.iter().map(|x| 2.0 * x).collect();
    let scaling = u
        .iter()
        .zip(&solve(&doubled))
        .map(|(x, y)| (x - 2.0 * y).abs())
        .fold(0.0, f64::max);
    assert!(scaling <= 1e-12, "scaling {scaling}");
    format!("rotation deviation {worst:.1e}, scaling deviation {scaling:.1e}")
}

fn sampler_end_to_end() -> String {
    let started = Instant::now();
    let backend = serve_names(&["gaussian-mixture"]);
    let lb = balancer::start(BalancerConfig {
        port: 0,
        backends: vec![backend.url()],
        health_interval_s: 1.0,
    })
    .unwrap();
    let m = RemoteModel::connect(&lb.url(), "gaussian-mixture").unwrap();
    let run = mc::mh_chain(
        &m,
        &MhJob {
            x0: vec![0.0, 0.0],
            steps: 100_000,
            sigma: vec![1.0, 1.0],
            seed: 7,
            config: Config::new(),
        },
    )
    .unwrap();
    let elapsed = started.elapsed().as_secs_f64();
    let mean = &run.report.mean;
    let detail = format!(
        "mean ({:.3}, {:.3}), acceptance {:.2}, {elapsed:.1} s",
        mean[0], mean[1], run.report.acceptance_rate
    );
    assert!((mean[0] - -2.0 / 3.0).abs() <= 0.15 && (mean[1] - 2.0 / 3.0).abs() <= 0.15, "{detail}");
    assert!(elapsed < 120.0, "{detail}");
    detail
}

fn mc_propagation() -> String {
    let setup = beam_propagation_distribution();
    let qoi = setup.qoi_nodes;
    // Midpoint tensor grid with 21 nodes per axis on the local model.
    let local = catalog::build_model("beam-forward").unwrap();
    let axis: Vec<f64> = (0..21)
        .map(|i| {
            let [lo, hi] = setup.bounds[0];
            lo + (hi - lo) * (i as f64 + 0.5) / 21.0
        })
        .collect();
    let mut oracle = [0.0; 2];
    for &a in &axis {
        for &b in &axis {
            for &c in &axis {
                let u = local.evaluate(&ParameterList::single(vec![a, b, c]), &Config::new()).unwrap();
                for (o, &q) in oracle.iter_mut().zip(&qoi) {
                    *o += u[0][q] / 9261.0;
                }
            }
        }
    }

    let s = serve_names(&["beam-forward"]);
    let m = RemoteModel::connect(&s.url(), "beam-forward").unwrap();
    let mut job = McJob::new(InputDistribution::Uniform(setup.bounds.to_vec()), 10_000, 12);
    job.qoi = Some(qoi.to_vec());
    job.concurrency = 8;
    let run = mc::mc_estimate(&m, &job).unwrap();
    let r = &run.report;
    let z: Vec<f64> = (0..2).map(|k| (r.mean[k] - oracle[k]).abs() / r.stderr[k]).collect();
    assert!(z.iter().all(|&z| z <= 4.0), "mc {:?} ± {:?}, oracle {oracle:?}", r.mean, r.stderr);
    for concurrency in [1, 3, 32] {
        job.concurrency = concurrency;
        let again = mc::mc_estimate(&m, &job).unwrap();
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&again.report.mean), bits(&r.mean), "concurrency {concurrency}");
        assert_eq!(bits(&again.report.stderr), bits(&r.stderr), "concurrency {concurrency}");
        assert_eq!(again.values, run.values);
    }
    format!("|mc - oracle| / se = ({:.2}, {:.2}); identical at concurrency 1, 3, 8, 32", z[0], z[1])
}

fn fault_handling() -> String {
    let config = BenchConfig {
        backends: 4,
        requests_per_backend: 20,
        model_duration: Duration::from_millis(100),
        kill_one: true,
        ..BenchConfig::default()
    };
    let report = bench::run_bench(&config).unwrap();
    let interval = config.health_interval.as_secs_f64();
    let detail = format!(
        "completed {}/{}, failed {}, requeued {}, unhealthy after {:?} s (interval {interval} s)",
        report.completed, report.requests, report.failed, report.requeued, report.unhealthy_after_s
    );
    assert_eq!((report.completed, report.failed, report.wrong), (report.requests, 0, 0), "{detail}");
    assert_eq!(report.unhealthy, 1, "{detail}");
    assert!(report.unhealthy_after_s.is_some_and(|t| t <= interval), "{detail}");
    detail
}

fn panic_message(e: Box<dyn std::any::Any + Send>) -> String {
    e.downcast_ref::<String>()
        .cloned()
        .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
        .unwrap_or_else(|| "panicked".into())
        .lines()
        .next()
        .unwrap_or_default()
        .to_string()
}

/// Written to stderr directly so the lines survive libtest's capture.
fn report(line: String) {
    let _ = writeln!(std::io::stderr(), "{line}");
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> String); 13] = [
        ("protocol round trip", protocol_round_trip),
        ("optional operations", optionality),
        ("density oracles", density_oracles),
        ("gradients vs finite differences", gradient_checks),
        ("genz reference integrals", genz_quadrature),
        ("single request in flight per backend", single_in_flight),
        ("weak scaling", weak_scaling),
        ("balancer transparency", balancer_transparency),
        ("beam convergence", beam_convergence),
        ("membrane symmetry", membrane_symmetry),
        ("sampler end to end", sampler_end_to_end),
        ("monte carlo propagation", mc_propagation),
        ("fault handling", fault_handling),
    ];
    let quiet = panic::take_hook();
    panic::set_hook(Box::new(|_| {}));
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.into_iter().enumerate() {
        let started = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check));
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => report(format!("[PASS] criterion {}: {name}: {detail} ({secs:.1} s)", i + 1)),
            Err(e) => {
                report(format!("[FAIL] criterion {}: {name}: {} ({secs:.1} s)", i + 1, panic_message(e)));
                failed.push(i + 1);
            }
        }
    }
    panic::set_hook(quiet);
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
