//! Two-dimensional analytic densities: banana, donut, funnel and a Gaussian
//! mixture. Each model returns a single log-density value.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::config::ConfigExt;
use crate::model::{Model, ModelResult};
use crate::wire::{Capabilities, Config, ErrorPayload, ParameterList};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Parameters of the banana density.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BananaParams {
    pub a: f64,
    pub b: f64,
    /// Multiplies the covariance of the underlying normal.
    pub scale: f64,
}

impl Default for BananaParams {
    fn default() -> Self {
        Self {
            a: 2.0,
            b: 0.2,
            scale: 1.0,
        }
    }
}

impl BananaParams {
    pub fn from_config(config: &Config) -> ModelResult<Self> {
        let d = Self::default();
        let p = Self {
            a: config.f64_or("a", d.a)?,
            b: config.f64_or("b", d.b)?,
            scale: config.f64_or("scale", d.scale)?,
        };
        if !(p.scale > 0.0) {
            return Err(ErrorPayload::invalid_input("banana scale must be positive"));
        }
        if p.a == 0.0 {
            return Err(ErrorPayload::invalid_input("banana parameter a must be non-zero"));
        }
        Ok(p)
    }
}

/// `log f_Z(T(θ))` with `Z ~ N((0,4), scale·[[1,0.5],[0.5,1]])` and
/// `T(θ) = (θ₁/a, aθ₂ + ab(θ₁² + a²))`.
pub fn banana_logpdf(theta: [f64; 2], p: &BananaParams) -> f64 {
    let z1 = theta[0] / p.a;
    let z2 = p.a * theta[1] + p.a * p.b * (theta[0] * theta[0] + p.a * p.a);
    let (d1, d2) = (z1, z2 - 4.0);
    // Σ = scale·[[1, ρ], [ρ, 1]] with ρ = 0.5, det = scale²(1 − ρ²)
    let rho = 0.5;
    let one_minus = 1.0 - rho * rho;
    let quad = (d1 * d1 - 2.0 * rho * d1 * d2 + d2 * d2) / (p.scale * one_minus);
    -LN_2PI - 0.5 * libm::log(p.scale * p.scale * one_minus) - 0.5 * quad
}

/// Parameters of the donut density.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DonutParams {
    pub radius: f64,
    pub sigma2: f64,
}

impl Default for DonutParams {
    fn default() -> Self {
        Self {
            radius: 2.6,
            sigma2: 0.033,
        }
    }
}

/// `−(‖θ‖ − r)² / σ²`.
pub fn donut_logpdf(theta: [f64; 2], p: &DonutParams) -> f64 {
    let d = libm::hypot(theta[0], theta[1]) - p.radius;
    -d * d / p.sigma2
}

/// Gradient of [`donut_logpdf`]; undefined at the origin.
pub fn donut_gradient(theta: [f64; 2], p: &DonutParams) -> Option<[f64; 2]> {
    let norm = libm::hypot(theta[0], theta[1]);
    if norm == 0.0 {
        return None;
    }
    let c = -2.0 * (norm - p.radius) / (p.sigma2 * norm);
    Some([c * theta[0], c * theta[1]])
}

fn normal_logpdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -0.5 * LN_2PI - libm::log(sd) - 0.5 * z * z
}

/// `f(θ₁, 0, 3) + f(θ₂, 0, exp(θ₁/2))` with `f` the normal log-density.
pub fn funnel_logpdf(theta: [f64; 2]) -> f64 {
    normal_logpdf(theta[0], 0.0, 3.0) + normal_logpdf(theta[1], 0.0, libm::exp(0.5 * theta[0]))
}

pub fn funnel_gradient(theta: [f64; 2]) -> [f64; 2] {
    let inv_var = libm::exp(-theta[0]);
    [
        -theta[0] / 9.0 - 0.5 + 0.5 * theta[1] * theta[1] * inv_var,
        -theta[1] * inv_var,
    ]
}

/// An isotropic bivariate normal component `N(mean, variance·I)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IsotropicComponent {
    pub mean: [f64; 2],
    pub variance: f64,
}

/// The three components of the mixture density.
pub const MIXTURE_COMPONENTS: [IsotropicComponent; 3] = [
    IsotropicComponent {
        mean: [-1.5, -1.5],
        variance: 0.8,
    },
    IsotropicComponent {
        mean: [1.5, 1.5],
        variance: 0.8,
    },
    IsotropicComponent {
        mean: [-2.0, 2.0],
        variance: 0.5,
    },
];

fn component_logpdf(theta: [f64; 2], c: &IsotropicComponent) -> f64 {
    let dx = theta[0] - c.mean[0];
    let dy = theta[1] - c.mean[1];
    -libm::log(2.0 * PI * c.variance) - (dx * dx + dy * dy) / (2.0 * c.variance)
}

/// Log of the (unnormalized) sum of the three component densities, via
/// log-sum-exp.
pub fn mixture_logpdf(theta: [f64; 2]) -> f64 {
    let logs = MIXTURE_COMPONENTS.map(|c| component_logpdf(theta, &c));
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + libm::log(logs.iter().map(|l| libm::exp(l - max)).sum::<f64>())
}

pub fn mixture_gradient(theta: [f64; 2]) -> [f64; 2] {
    let logs = MIXTURE_COMPONENTS.map(|c| component_logpdf(theta, &c));
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights = logs.map(|l| libm::exp(l - max));
    let total: f64 = weights.iter().sum();
    let mut g = [0.0; 2];
    for (w, c) in weights.iter().zip(&MIXTURE_COMPONENTS) {
        for k in 0..2 {
            g[k] -= w / total * (theta[k] - c.mean[k]) / c.variance;
        }
    }
    g
}

fn point(input: &ParameterList) -> [f64; 2] {
    [input[0][0], input[0][1]]
}

/// Which analytic density a [`AnalyticDensity`] model serves.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AnalyticKind {
    Banana,
    Donut,
    Funnel,
    GaussianMixture,
}

/// Serves one of the analytic densities as a model `ℝ² → ℝ`.
#[derive(Clone, Copy, Debug)]
pub struct AnalyticDensity {
    kind: AnalyticKind,
}

impl AnalyticDensity {
    pub const fn new(kind: AnalyticKind) -> Self {
        Self { kind }
    }

    fn log_density(&self, theta: [f64; 2], config: &Config) -> ModelResult<f64> {
        Ok(match self.kind {
            AnalyticKind::Banana => banana_logpdf(theta, &BananaParams::from_config(config)?),
            AnalyticKind::Donut => donut_logpdf(theta, &DonutParams::default()),
            AnalyticKind::Funnel => funnel_logpdf(theta),
            AnalyticKind::GaussianMixture => mixture_logpdf(theta),
        })
    }

    fn grad(&self, theta: [f64; 2]) -> ModelResult<[f64; 2]> {
        match self.kind {
            AnalyticKind::Banana => Err(ErrorPayload::unsupported("Gradient")),
            AnalyticKind::Donut => donut_gradient(theta, &DonutParams::default())
                .ok_or_else(|| ErrorPayload::invalid_input("donut gradient is undefined at the origin")),
            AnalyticKind::Funnel => Ok(funnel_gradient(theta)),
            AnalyticKind::GaussianMixture => Ok(mixture_gradient(theta)),
        }
    }
}

impl Model for AnalyticDensity {
    fn name(&self) -> &str {
        match self.kind {
            AnalyticKind::Banana => "banana",
            AnalyticKind::Donut => "donut",
            AnalyticKind::Funnel => "funnel",
            AnalyticKind::GaussianMixture => "gaussian-mixture",
        }
    }

    fn input_sizes(&self, _config: &Config) -> ModelResult<Vec<usize>> {
        Ok(vec![2])
    }

    fn output_sizes(&self, _config: &Config) -> ModelResult<Vec<usize>> {
        Ok(vec![1])
    }

    fn capabilities(&self) -> Capabilities {
        match self.kind {
            AnalyticKind::Banana => Capabilities::EVALUATE,
            _ => Capabilities::FIRST_ORDER,
        }
    }

    fn evaluate(&self, input: &ParameterList, config: &Config) -> ModelResult<ParameterList> {
        Ok(ParameterList::scalar(self.log_density(point(input), config)?))
    }

    fn gradient(&self, _: usize, _: usize, input: &ParameterList, sens: &[f64], _: &Config) -> ModelResult<Vec<f64>> {
        let g = self.grad(point(input))?;
        Ok(vec![sens[0] * g[0], sens[0] * g[1]])
    }

    fn apply_jacobian(&self, _: usize, _: usize, input: &ParameterList, vec: &[f64], _: &Config) -> ModelResult<Vec<f64>> {
        let g = self.grad(point(input))?;
        Ok(vec![g[0] * vec[0] + g[1] * vec[1]])
    }
}
