//! Models the CLI can serve by name.

use std::sync::Arc;
use std::thread;
use std::time::Duration;

use uqbridge_core::benchmarks::{benchmark, BENCHMARK_NAMES};
use uqbridge_core::config::ConfigExt;
use uqbridge_core::model::{Doubler, ModelResult};
use uqbridge_core::{Capabilities, Config, Model, ModelRegistry, ParameterList};

/// Every name accepted by [`build_model`].
pub fn catalog_names() -> Vec<&'static str> {
    let mut names = vec!["forward", "sleep"];
    names.extend(BENCHMARK_NAMES);
    names
}

/// Default delay of the `sleep` model.
pub const DEFAULT_SLEEP: Duration = Duration::from_millis(100);

pub fn build_model(name: &str) -> Option<Arc<dyn Model>> {
    match name {
        "forward" => Some(Arc::new(Doubler::default())),
        "sleep" => Some(Arc::new(SleepModel::new(DEFAULT_SLEEP))),
        _ => benchmark(name),
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CatalogError {
    #[error("unknown model '{name}'; available: {}", catalog_names().join(", "))]
    Unknown { name: String },
    #[error("{0}")]
    Registry(#[from] uqbridge_core::model::RegistryError),
}

/// Registry holding the named catalog models, in the given order.
pub fn registry_for<S: AsRef<str>>(names: &[S]) -> Result<ModelRegistry, CatalogError> {
    let mut registry = ModelRegistry::new();
    for name in names {
        let name = name.as_ref().trim();
        let model = build_model(name).ok_or_else(|| CatalogError::Unknown { name: name.to_string() })?;
        registry.register(model)?;
    }
    Ok(registry)
}

/// Identity model that blocks for a fixed time per evaluation: a stand-in
/// for an expensive simulation. Config `n` sets the input length (default
/// 1) and `ms` overrides the delay.
#[derive(Clone, Debug)]
pub struct SleepModel {
    name: String,
    delay: Duration,
}

impl SleepModel {
    pub fn new(delay: Duration) -> Self {
        Self::named("sleep", delay)
    }

    pub fn named(name: impl Into<String>, delay: Duration) -> Self {
        Self {
            name: name.into(),
            delay,
        }
    }
}

impl Model for SleepModel {
    fn name(&self) -> &str {
        &self.name
    }

    fn input_sizes(&self, config: &Config) -> ModelResult<Vec<usize>> {
        Ok(vec![config.usize_or("n", 1)?])
    }

    fn output_sizes(&self, config: &Config) -> ModelResult<Vec<usize>> {
        self.input_sizes(config)
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities::EVALUATE
    }

    fn evaluate(&self, input: &ParameterList, config: &Config) -> ModelResult<ParameterList> {
        let delay = match config.get("ms") {
            Some(_) => Duration::from_secs_f64(config.f64_or("ms", 0.0)?.max(0.0) / 1000.0),
            None => self.delay,
        };
        thread::sleep(delay);
        Ok(input.clone())
    }
}
