//! Reference UQ clients: a concurrent Monte Carlo estimator and a
//! Metropolis–Hastings chain, both driving any [`Model`] (typically a
//! [`RemoteModel`](crate::client::RemoteModel)).

use std::io::{self, Write};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use serde::{Deserialize, Serialize};
use uqbridge_core::sampling::{InputDistribution, MetropolisHastings, RunningMoments};
use uqbridge_core::{Config, ErrorPayload, Model, ParameterList};

/// A Monte Carlo propagation job.
#[derive(Clone, Debug, PartialEq)]
pub struct McJob {
    pub distribution: InputDistribution,
    pub n: usize,
    pub concurrency: usize,
    pub seed: u64,
    /// Indices into the flattened model output; `None` keeps everything.
    pub qoi: Option<Vec<usize>>,
    pub config: Config,
}

impl McJob {
    pub fn new(distribution: InputDistribution, n: usize, seed: u64) -> Self {
        Self {
            distribution,
            n,
            concurrency: 1,
            seed,
            qoi: None,
            config: Config::new(),
        }
    }

    pub fn validate(&self) -> Result<(), ErrorPayload> {
        self.distribution.validate()?;
        if self.n == 0 {
            return Err(ErrorPayload::invalid_input("sample count must be at least 1"));
        }
        if self.concurrency == 0 {
            return Err(ErrorPayload::invalid_input("concurrency must be at least 1"));
        }
        if let Some(limit) = self.distribution.len_limit() {
            if self.n > limit {
                return Err(ErrorPayload::invalid_input(format!(
                    "{} samples requested but only {limit} fixed inputs given",
                    self.n
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub n: usize,
    pub seed: u64,
}

/// Report plus the per-sample quantities of interest, in sample order.
#[derive(Clone, Debug, PartialEq)]
pub struct McRun {
    pub report: McReport,
    pub values: Vec<Vec<f64>>,
}

/// Splits a flat point into blocks of the given sizes.
pub fn to_blocks(point: &[f64], sizes: &[usize]) -> Result<ParameterList, ErrorPayload> {
    let total: usize = sizes.iter().sum();
    if total != point.len() {
        return Err(ErrorPayload::invalid_input(format!(
            "point has {} coordinates but the model takes {total}",
            point.len()
        )));
    }
    let mut blocks = Vec::with_capacity(sizes.len());
    let mut at = 0;
    for &s in sizes {
        blocks.push(point[at..at + s].to_vec());
        at += s;
    }
    Ok(ParameterList::new(blocks))
}

fn select(output: &ParameterList, qoi: Option<&[usize]>) -> Result<Vec<f64>, ErrorPayload> {
    let flat = output.flatten();
    match qoi {
        None => Ok(flat),
        Some(indices) => indices
            .iter()
            .map(|&i| {
                flat.get(i).copied().ok_or_else(|| {
                    ErrorPayload::invalid_input(format!("QoI index {i} is out of range for {} outputs", flat.len()))
                })
            })
            .collect(),
    }
}

/// Estimates the mean of the model output under the job's input
/// distribution. Sample `i` always uses generator stream `i`, and results
/// are accumulated in index order, so the answer does not depend on the
/// concurrency level. The first model error aborts the job.
pub fn mc_estimate(model: &dyn Model, job: &McJob) -> Result<McRun, ErrorPayload> {
    job.validate()?;
    let sizes = model.input_sizes(&job.config)?;
    let qoi = job.qoi.as_deref();
    let next = AtomicUsize::new(0);
    let abort = AtomicBool::new(false);
    let first_error: Mutex<Option<(usize, ErrorPayload)>> = Mutex::new(None);
    let values: Mutex<Vec<Option<Vec<f64>>>> = Mutex::new(vec![None; job.n]);
    let workers = job.concurrency.min(job.n);
    thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| {
                while !abort.load(Ordering::Relaxed) {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= job.n {
                        break;
                    }
                    let point = job.distribution.sample(job.seed, i as u64);
                    let result = to_blocks(&point, &sizes)
                        .and_then(|input| model.evaluate(&input, &job.config))
                        .and_then(|out| select(&out, qoi));
                    match result {
                        Ok(v) => values.lock().unwrap()[i] = Some(v),
                        Err(e) => {
                            abort.store(true, Ordering::Relaxed);
                            let mut slot = first_error.lock().unwrap();
                            // Report the lowest failing index for determinism.
                            if slot.as_ref().is_none_or(|(j, _)| i < *j) {
                                *slot = Some((i, e));
                            }
                        }
                    }
                }
            });
        }
    });
    if let Some((i, e)) = first_error.into_inner().unwrap() {
        tracing::warn!(sample = i, error = %e, "Monte Carlo job aborted");
        return Err(e);
    }
    let values: Vec<Vec<f64>> = values
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|v| v.expect("every sample evaluated"))
        .collect();
    let mut moments = RunningMoments::new();
    for v in &values {
        if v.len() != values[0].len() {
            return Err(ErrorPayload::internal("model output length changed between samples"));
        }
        moments.push(v);
    }
    Ok(McRun {
        report: McReport {
            mean: moments.mean().to_vec(),
            stderr: moments.stderr(),
            n: job.n,
            seed: job.seed,
        },
        values,
    })
}

/// A Metropolis–Hastings run against a one-output log-density model.
#[derive(Clone, Debug, PartialEq)]
pub struct MhJob {
    pub x0: Vec<f64>,
    pub steps: usize,
    pub sigma: Vec<f64>,
    pub seed: u64,
    pub config: Config,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MhReport {
    pub acceptance_rate: f64,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    pub steps: usize,
    pub accepted: u64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MhRun {
    pub report: MhReport,
    pub samples: Vec<Vec<f64>>,
}

/// Log density of `model` at a flat point.
pub fn log_density(model: &dyn Model, sizes: &[usize], config: &Config, x: &[f64]) -> Result<f64, ErrorPayload> {
    let out = model.evaluate(&to_blocks(x, sizes)?, config)?;
    match out.0.as_slice() {
        [block] if block.len() == 1 => Ok(block[0]),
        _ => Err(ErrorPayload::invalid_input("target must have a single scalar output")),
    }
}

/// Runs a random-walk chain; each step costs one model evaluation.
pub fn mh_chain(model: &dyn Model, job: &MhJob) -> Result<MhRun, ErrorPayload> {
    if job.steps == 0 {
        return Err(ErrorPayload::invalid_input("steps must be at least 1"));
    }
    if job.sigma.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
        return Err(ErrorPayload::invalid_input("proposal scales must be finite and non-negative"));
    }
    let sizes = model.input_sizes(&job.config)?;
    let target = |x: &[f64]| log_density(model, &sizes, &job.config, x);
    let mut chain = MetropolisHastings::gaussian(job.x0.clone(), job.sigma.clone(), job.seed, target)?;
    let samples = chain.run(job.steps, target)?;
    let mut moments = RunningMoments::new();
    for s in &samples {
        moments.push(s);
    }
    let state = chain.state();
    tracing::debug!(steps = job.steps, rate = state.acceptance_rate(), "chain finished");
    Ok(MhRun {
        report: MhReport {
            acceptance_rate: state.acceptance_rate(),
            mean: moments.mean().to_vec(),
            variance: moments.variance(),
            steps: job.steps,
            accepted: state.accepted,
            seed: job.seed,
        },
        samples,
    })
}

/// Independent chains run side by side, one thread each.
pub fn mh_chains(model: &dyn Model, jobs: &[MhJob]) -> Vec<Result<MhRun, ErrorPayload>> {
    thread::scope(|scope| {
        let handles: Vec<_> = jobs.iter().map(|job| scope.spawn(move || mh_chain(model, job))).collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(ErrorPayload::internal("chain thread panicked"))))
            .collect()
    })
}

/// Writes rows as CSV with `x0,x1,...` headers; floats round-trip exactly.
pub fn write_csv<W: Write>(mut out: W, prefix: &str, rows: &[Vec<f64>]) -> io::Result<()> {
    let width = rows.first().map_or(0, Vec::len);
    let header: Vec<String> = (0..width).map(|i| format!("{prefix}{i}")).collect();
    writeln!(out, "{}", header.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    out.flush()
}
