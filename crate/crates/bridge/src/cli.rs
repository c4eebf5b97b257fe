//! The `uqbridge` command line.
//!
//! Exit codes: 0 on success, 1 on model, transport or runtime errors, 2 on
//! usage errors (including unknown catalog names and unparseable input).

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use uqbridge_core::sampling::InputDistribution;
use uqbridge_core::{Config, ErrorPayload, Model, ParameterList};

use crate::balancer::{self, BalancerConfig};
use crate::bench::{self, BenchConfig};
use crate::catalog;
use crate::client::{ClientError, Connection, RemoteModel, RetryPolicy, DEFAULT_URL, URL_ENV};
use crate::mc::{self, McJob, MhJob};
use crate::server::{self, ServerConfig, PORT_ENV};

#[derive(Debug, Parser)]
#[command(name = "uqbridge", version, about = "Serve, query, balance and sample UQ models over HTTP")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Serve catalog models until interrupted.
    Serve(ServeArgs),
    /// Show protocol version, models and (with --name) sizes and capabilities.
    Info(InfoArgs),
    /// Evaluate a model once and print the output.
    Eval(EvalArgs),
    /// Run the load balancer.
    Balance(BalanceArgs),
    /// Weak-scaling benchmark with sleep-model backends.
    Bench(BenchArgs),
    /// Reference samplers.
    #[command(subcommand)]
    Sample(SampleCommand),
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Comma-separated catalog names.
    #[arg(long, value_delimiter = ',', required = true)]
    pub models: Vec<String>,
    #[arg(long, env = PORT_ENV, default_value_t = 4242)]
    pub port: u16,
    #[arg(long, default_value_t = 32)]
    pub max_concurrent: usize,
    #[arg(long, default_value_t = 3600.0)]
    pub timeout_s: f64,
}

#[derive(Debug, Args)]
pub struct Target {
    #[arg(long, env = URL_ENV, default_value = DEFAULT_URL)]
    pub url: String,
}

#[derive(Debug, Args)]
pub struct InfoArgs {
    #[command(flatten)]
    pub target: Target,
    #[arg(long)]
    pub name: Option<String>,
    /// Config for the size queries, as JSON.
    #[arg(long, default_value = "{}")]
    pub config: String,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub target: Target,
    #[arg(long)]
    pub name: String,
    /// Input as JSON, e.g. "[[1.5]]".
    #[arg(long, allow_hyphen_values = true)]
    pub input: String,
    #[arg(long, default_value = "{}")]
    pub config: String,
}

#[derive(Debug, Args)]
pub struct BalanceArgs {
    /// JSON file: {"port":..,"backends":[..],"health_interval_s":..}.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the file's port.
    #[arg(long, env = PORT_ENV)]
    pub port: Option<u16>,
    /// Extra backends, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub backends: Vec<String>,
    #[arg(long)]
    pub health_interval_s: Option<f64>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 1)]
    pub backends: usize,
    #[arg(long, default_value_t = 20)]
    pub requests_per_backend: usize,
    #[arg(long, default_value_t = 100)]
    pub model_duration_ms: u64,
    /// Kill one backend halfway through.
    #[arg(long)]
    pub kill_one: bool,
    #[arg(long, default_value_t = 500)]
    pub health_interval_ms: u64,
    /// Print the JSON report instead of the table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Subcommand)]
pub enum SampleCommand {
    /// Monte Carlo estimate of the output mean.
    Mc(McArgs),
    /// Metropolis–Hastings chain on a log-density model.
    Mh(MhArgs),
}

#[derive(Debug, Args)]
pub struct McArgs {
    #[command(flatten)]
    pub target: Target,
    #[arg(long)]
    pub name: String,
    /// "box:[[lo,hi],...]" or "fixed:[[x,...],...]".
    #[arg(long)]
    pub dist: String,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub concurrency: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Indices into the flattened output.
    #[arg(long, value_delimiter = ',')]
    pub qoi: Option<Vec<usize>>,
    #[arg(long, default_value = "{}")]
    pub config: String,
    /// Write per-sample QoI values here.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MhArgs {
    #[command(flatten)]
    pub target: Target,
    #[arg(long)]
    pub name: String,
    #[arg(long, default_value_t = 10_000)]
    pub steps: usize,
    /// Start point as JSON; defaults to the origin.
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<String>,
    /// Proposal scale, one value or one per coordinate.
    #[arg(long, value_delimiter = ',', default_value = "1.0")]
    pub sigma: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "{}")]
    pub config: String,
    /// Write the chain here.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

/// Failure with its exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) => 2,
            Self::Failed(_) => 1,
        }
    }
}

impl From<ClientError> for CliError {
    fn from(e: ClientError) -> Self {
        match e {
            ClientError::Model(p) => p.into(),
            other => Self::Failed(other.to_string()),
        }
    }
}

impl From<ErrorPayload> for CliError {
    fn from(p: ErrorPayload) -> Self {
        Self::Failed(format!("{}: {}", p.kind.as_str(), p.message))
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        Self::Failed(e.to_string())
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let stdout = io::stdout();
    match run(cli.command, &mut stdout.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn run(command: Command, out: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Serve(a) => serve(a, out),
        Command::Info(a) => info(a, out),
        Command::Eval(a) => eval(a, out),
        Command::Balance(a) => balance(a, out),
        Command::Bench(a) => bench(a, out),
        Command::Sample(SampleCommand::Mc(a)) => sample_mc(a, out),
        Command::Sample(SampleCommand::Mh(a)) => sample_mh(a, out),
    }
}

fn parse_json<T: serde::de::DeserializeOwned>(what: &str, text: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Usage(format!("cannot parse {what} '{text}': {e}")))
}

fn connect(target: &Target, name: &str) -> Result<RemoteModel, CliError> {
    Ok(RemoteModel::connect(&target.url, name)?)
}

fn serve(a: ServeArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let registry = catalog::registry_for(&a.models).map_err(|e| CliError::Usage(e.to_string()))?;
    if !(a.timeout_s > 0.0 && a.timeout_s.is_finite()) {
        return Err(CliError::Usage("--timeout-s must be positive".into()));
    }
    let config = ServerConfig {
        port: a.port,
        max_concurrent_requests: a.max_concurrent,
        request_timeout: Duration::from_secs_f64(a.timeout_s),
    };
    let handle = server::serve(registry, config).map_err(|e| match e {
        server::ServerError::Config(m) => CliError::Usage(m),
        other => CliError::Failed(other.to_string()),
    })?;
    writeln!(out, "serving {} on {}", a.models.join(","), handle.url())?;
    out.flush()?;
    handle.wait();
    Ok(())
}

fn info(a: InfoArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let conn = Connection::new(&a.target.url, RetryPolicy::default())?;
    let info = conn.info()?;
    writeln!(out, "protocol version: {}", info.protocol_version)?;
    writeln!(out, "models: {}", info.models.join(", "))?;
    if let Some(name) = a.name {
        let config: Config = parse_json("--config", &a.config)?;
        let model = connect(&a.target, &name)?;
        let caps = model.capabilities();
        writeln!(out, "name: {name}")?;
        writeln!(out, "inputSizes: {:?}", model.remote_input_sizes(&config)?)?;
        writeln!(out, "outputSizes: {:?}", model.remote_output_sizes(&config)?)?;
        writeln!(
            out,
            "support: Evaluate={} Gradient={} ApplyJacobian={} ApplyHessian={}",
            caps.evaluate, caps.gradient, caps.apply_jacobian, caps.apply_hessian
        )?;
    }
    Ok(())
}

fn eval(a: EvalArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let input: ParameterList = parse_json("--input", &a.input)?;
    let config: Config = parse_json("--config", &a.config)?;
    let model = connect(&a.target, &a.name)?;
    let output = model.remote_evaluate(&input, &config)?;
    let text = serde_json::to_string(&output).map_err(|e| CliError::Failed(e.to_string()))?;
    writeln!(out, "{text}")?;
    Ok(())
}

fn balance(a: BalanceArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut config = match &a.config {
        Some(path) => BalancerConfig::from_file(path).map_err(|e| CliError::Usage(e.to_string()))?,
        None => BalancerConfig::default(),
    };
    if let Some(port) = a.port {
        config.port = port;
    }
    config.backends.extend(a.backends);
    if let Some(s) = a.health_interval_s {
        config.health_interval_s = s;
    }
    config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let handle = balancer::start(config).map_err(|e| match e {
        balancer::BalancerError::Config(m) => CliError::Usage(m),
        other => CliError::Failed(other.to_string()),
    })?;
    writeln!(out, "balancing on {}", handle.url())?;
    out.flush()?;
    handle.wait();
    Ok(())
}

fn bench(a: BenchArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let config = BenchConfig {
        backends: a.backends,
        requests_per_backend: a.requests_per_backend,
        model_duration: Duration::from_millis(a.model_duration_ms),
        kill_one: a.kill_one,
        health_interval: Duration::from_millis(a.health_interval_ms.max(1)),
    };
    let report = bench::run_bench(&config).map_err(|e| match e {
        bench::BenchError::Config(m) => CliError::Usage(m),
        other => CliError::Failed(other.to_string()),
    })?;
    if a.json {
        let text = serde_json::to_string(&report).map_err(|e| CliError::Failed(e.to_string()))?;
        writeln!(out, "{text}")?;
    } else {
        write!(out, "{}", report.to_table())?;
    }
    if report.failed > 0 || report.wrong > 0 || !report.audit_clean {
        return Err(CliError::Failed(format!(
            "{} failed, {} wrong, {} overlapping invocations",
            report.failed, report.wrong, report.violations
        )));
    }
    Ok(())
}

/// Parses "box:[[lo,hi],...]" or "fixed:[[x,...],...]".
pub fn parse_distribution(text: &str) -> Result<InputDistribution, CliError> {
    let (kind, rest) = text
        .split_once(':')
        .ok_or_else(|| CliError::Usage(format!("distribution '{text}' must look like box:[[lo,hi],...]")))?;
    let dist = match kind.trim() {
        "box" => InputDistribution::Uniform(parse_json("box bounds", rest)?),
        "fixed" => InputDistribution::Fixed(parse_json("fixed inputs", rest)?),
        other => return Err(CliError::Usage(format!("unknown distribution kind '{other}' (box or fixed)"))),
    };
    dist.validate().map_err(|e| CliError::Usage(e.message))?;
    Ok(dist)
}

fn write_csv_file(path: &PathBuf, prefix: &str, rows: &[Vec<f64>]) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::Failed(format!("{}: {e}", path.display())))?;
    mc::write_csv(BufWriter::new(file), prefix, rows)?;
    Ok(())
}

fn sample_mc(a: McArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let job = McJob {
        distribution: parse_distribution(&a.dist)?,
        n: a.n,
        concurrency: a.concurrency,
        seed: a.seed,
        qoi: a.qoi,
        config: parse_json("--config", &a.config)?,
    };
    job.validate().map_err(|e| CliError::Usage(e.message))?;
    let model = connect(&a.target, &a.name)?;
    let run = mc::mc_estimate(&model, &job)?;
    if let Some(path) = &a.csv {
        write_csv_file(path, "q", &run.values)?;
    }
    writeln!(out, "{}", serde_json::to_string(&run.report).map_err(|e| CliError::Failed(e.to_string()))?)?;
    Ok(())
}

fn sample_mh(a: MhArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let config: Config = parse_json("--config", &a.config)?;
    let model = connect(&a.target, &a.name)?;
    let dim: usize = model.remote_input_sizes(&config)?.iter().sum();
    let x0: Vec<f64> = match &a.x0 {
        Some(text) => parse_json("--x0", text)?,
        None => vec![0.0; dim],
    };
    let sigma = match a.sigma.as_slice() {
        [s] => vec![*s; x0.len()],
        many => many.to_vec(),
    };
    if sigma.len() != x0.len() {
        return Err(CliError::Usage(format!(
            "--sigma has {} values for a {}-dimensional start point",
            sigma.len(),
            x0.len()
        )));
    }
    let job = MhJob {
        x0,
        steps: a.steps,
        sigma,
        seed: a.seed,
        config,
    };
    let run = mc::mh_chain(&model, &job)?;
    if let Some(path) = &a.csv {
        write_csv_file(path, "x", &run.samples)?;
    }
    writeln!(out, "{}", serde_json::to_string(&run.report).map_err(|e| CliError::Failed(e.to_string()))?)?;
    Ok(())
}
