//! Native benchmark models.

pub mod analytic;
pub mod beam;
pub mod deconv;
pub mod fixtures;
pub mod genz;
pub mod membrane;

use alloc::sync::Arc;

use crate::model::{FiniteDifference, Model, ModelRegistry};
use analytic::{AnalyticDensity, AnalyticKind};

/// Names of all benchmark models, in registration order.
pub const BENCHMARK_NAMES: [&str; 11] = [
    "banana",
    "donut",
    "funnel",
    "gaussian-mixture",
    "genz",
    "beam-forward",
    "beam-posterior",
    "membrane-forward",
    "membrane-posterior",
    "deconv-forward",
    "deconv-posterior",
];

/// Builds the benchmark model called `name`.
pub fn benchmark(name: &str) -> Option<Arc<dyn Model>> {
    Some(match name {
        "banana" => Arc::new(AnalyticDensity::new(AnalyticKind::Banana)),
        "donut" => Arc::new(AnalyticDensity::new(AnalyticKind::Donut)),
        "funnel" => Arc::new(AnalyticDensity::new(AnalyticKind::Funnel)),
        "gaussian-mixture" => Arc::new(AnalyticDensity::new(AnalyticKind::GaussianMixture)),
        "genz" => Arc::new(genz::GenzModel),
        "beam-forward" => Arc::new(FiniteDifference::new(beam::BeamForward)),
        "beam-posterior" => Arc::new(FiniteDifference::new(beam::BeamPosterior::default())),
        "membrane-forward" => Arc::new(membrane::MembraneForward::default()),
        "membrane-posterior" => Arc::new(membrane::MembranePosterior::default()),
        "deconv-forward" => Arc::new(deconv::DeconvForward),
        "deconv-posterior" => Arc::new(deconv::DeconvPosterior),
        _ => return None,
    })
}

/// Registry holding every benchmark model.
pub fn benchmark_registry() -> ModelRegistry {
    let mut registry = ModelRegistry::new();
    for name in BENCHMARK_NAMES {
        let model = benchmark(name).expect("listed benchmark exists");
        registry.register(model).expect("benchmark names are unique");
    }
    registry
}
