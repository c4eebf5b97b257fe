//! One-dimensional periodic deconvolution.
//!
//! Forward model `b = A x` where `A` is circular convolution with a Gaussian
//! kernel of standard deviation 2 cells, truncated at ±6 cells and normalized
//! to sum 1. The posterior combines Gaussian noise with one of four priors:
//! i.i.d. Gaussian, or a Gaussian, Laplace or Cauchy Markov random field on the
//! periodic first differences `xᵢ − xᵢ₋₁`. `δ` is the variance of the Gaussian
//! priors and the scale of the Laplace and Cauchy priors.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use super::fixtures;
use crate::config::ConfigExt;
use crate::model::{Model, ModelResult};
use crate::wire::{Capabilities, Config, ErrorPayload, ParameterList};

pub const SIZE: usize = 128;
pub const KERNEL_SD: f64 = 2.0;
pub const KERNEL_RADIUS: usize = 6;
pub const NOISE_SD: f64 = 0.01;
pub const DEFAULT_DELTA: f64 = 0.01;
/// Seed of the noise added to the stored data.
pub const DATA_SEED: u64 = 2024;

const LN_2PI: f64 = 1.837_877_066_409_345_5;
const LN_PI: f64 = 1.144_729_885_849_400_2;

/// Normalized kernel weights for offsets `−6 ..= 6`.
pub fn kernel() -> [f64; 2 * KERNEL_RADIUS + 1] {
    let mut w = [0.0; 2 * KERNEL_RADIUS + 1];
    for (k, wk) in w.iter_mut().enumerate() {
        let d = k as f64 - KERNEL_RADIUS as f64;
        *wk = libm::exp(-d * d / (2.0 * KERNEL_SD * KERNEL_SD));
    }
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    w
}

/// `(A x)ᵢ = Σₖ wₖ x_{(i−k) mod n}`. The kernel is symmetric, so `Aᵀ = A`.
pub fn convolve(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let w = kernel();
    let r = KERNEL_RADIUS as i64;
    (0..n)
        .map(|i| {
            (-r..=r)
                .map(|k| w[(k + r) as usize] * x[(i as i64 - k).rem_euclid(n as i64) as usize])
                .sum()
        })
        .collect()
}

/// Piecewise-constant signal behind the stored data.
pub fn true_signal() -> Vec<f64> {
    (0..SIZE)
        .map(|i| match i {
            16..=39 => 1.0,
            56..=71 => 0.5,
            88..=111 => -0.75,
            _ => 0.0,
        })
        .collect()
}

/// `A x_true + e` with `e ~ N(0, σ² I)` drawn from a seeded ChaCha20 stream.
pub fn synthetic_data(seed: u64) -> Vec<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    convolve(&true_signal())
        .into_iter()
        .map(|b| {
            let e: f64 = StandardNormal.sample(&mut rng);
            b + NOISE_SD * e
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DeconvPrior {
    Gaussian,
    Gmrf,
    Lmrf,
    Cmrf,
}

impl DeconvPrior {
    pub const ALL: [Self; 4] = [Self::Gaussian, Self::Gmrf, Self::Lmrf, Self::Cmrf];

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s.to_ascii_lowercase().as_str() {
            "gaussian" => Self::Gaussian,
            "gmrf" => Self::Gmrf,
            "lmrf" => Self::Lmrf,
            "cmrf" => Self::Cmrf,
            _ => return None,
        })
    }

    pub const fn as_str(self) -> &'static str {
        match self {
            Self::Gaussian => "Gaussian",
            Self::Gmrf => "GMRF",
            Self::Lmrf => "LMRF",
            Self::Cmrf => "CMRF",
        }
    }

    /// Log density of one term (a value or a difference) and its derivative.
    fn term(self, t: f64, delta: f64) -> (f64, f64) {
        match self {
            Self::Gaussian | Self::Gmrf => (-0.5 * (LN_2PI + libm::log(delta)) - t * t / (2.0 * delta), -t / delta),
            Self::Lmrf => {
                let sign = if t > 0.0 {
                    1.0
                } else if t < 0.0 {
                    -1.0
                } else {
                    0.0
                };
                (-libm::log(2.0 * delta) - libm::fabs(t) / delta, -sign / delta)
            }
            Self::Cmrf => {
                let q = delta * delta + t * t;
                (-LN_PI + libm::log(delta) - libm::log(q), -2.0 * t / q)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeconvSpec {
    pub prior: DeconvPrior,
    pub delta: f64,
    pub data: Vec<f64>,
}

impl Default for DeconvSpec {
    fn default() -> Self {
        Self {
            prior: DeconvPrior::Gaussian,
            delta: DEFAULT_DELTA,
            data: fixtures::DECONV_DATA.to_vec(),
        }
    }
}

impl DeconvSpec {
    /// Reads `prior` and `delta` from the config; data is the stored fixture.
    pub fn from_config(config: &Config) -> ModelResult<Self> {
        let d = Self::default();
        let name = config.str_or("prior", d.prior.as_str())?;
        let prior = DeconvPrior::parse(name)
            .ok_or_else(|| ErrorPayload::invalid_input(format!("unknown prior '{name}'")))?;
        let delta = config.f64_or("delta", d.delta)?;
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(ErrorPayload::invalid_input("delta must be positive"));
        }
        Ok(Self { prior, delta, ..d })
    }

    fn check(&self, x: &[f64]) -> ModelResult<()> {
        if x.len() != SIZE {
            return Err(ErrorPayload::invalid_input(format!("expected {SIZE} values, got {}", x.len())));
        }
        Ok(())
    }

    pub fn log_likelihood(&self, x: &[f64]) -> f64 {
        let ax = convolve(x);
        let sq: f64 = ax.iter().zip(&self.data).map(|(a, b)| (b - a) * (b - a)).sum();
        -sq / (2.0 * NOISE_SD * NOISE_SD)
    }

    /// Prior terms: the values themselves for the i.i.d. prior, otherwise
    /// the periodic differences.
    fn prior_terms(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        match self.prior {
            DeconvPrior::Gaussian => x.to_vec(),
            _ => (0..n).map(|i| x[i] - x[(i + n - 1) % n]).collect(),
        }
    }

    pub fn log_prior(&self, x: &[f64]) -> f64 {
        self.prior_terms(x).iter().map(|&t| self.prior.term(t, self.delta).0).sum()
    }

    pub fn log_density(&self, x: &[f64]) -> ModelResult<f64> {
        self.check(x)?;
        Ok(self.log_likelihood(x) + self.log_prior(x))
    }

    pub fn gradient(&self, x: &[f64]) -> ModelResult<Vec<f64>> {
        self.check(x)?;
        let n = x.len();
        let ax = convolve(x);
        let residual: Vec<f64> = self.data.iter().zip(&ax).map(|(b, a)| (b - a) / (NOISE_SD * NOISE_SD)).collect();
        let mut g = convolve(&residual);
        let dt: Vec<f64> = self
            .prior_terms(x)
            .iter()
            .map(|&t| self.prior.term(t, self.delta).1)
            .collect();
        match self.prior {
            DeconvPrior::Gaussian => g.iter_mut().zip(&dt).for_each(|(gi, d)| *gi += d),
            // dᵢ = xᵢ − xᵢ₋₁ enters with + for xᵢ and − for xᵢ₋₁.
            _ => {
                for i in 0..n {
                    g[i] += dt[i] - dt[(i + 1) % n];
                }
            }
        }
        Ok(g)
    }
}

fn single_input(input: &ParameterList) -> ModelResult<&[f64]> {
    let x = &input[0];
    if x.len() != SIZE {
        return Err(ErrorPayload::invalid_input(format!("expected {SIZE} values, got {}", x.len())));
    }
    Ok(x)
}

/// Linear forward model; its derivatives are exact.
#[derive(Clone, Copy, Debug, Default)]
pub struct DeconvForward;

impl Model for DeconvForward {
    fn name(&self) -> &str {
        "deconv-forward"
    }

    fn input_sizes(&self, _: &Config) -> ModelResult<Vec<usize>> {
        Ok(vec![SIZE])
    }

    fn output_sizes(&self, _: &Config) -> ModelResult<Vec<usize>> {
        Ok(vec![SIZE])
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities::ALL
    }

    fn evaluate(&self, input: &ParameterList, _: &Config) -> ModelResult<ParameterList> {
        Ok(ParameterList::single(convolve(single_input(input)?)))
    }

    fn gradient(&self, _: usize, _: usize, _: &ParameterList, sens: &[f64], _: &Config) -> ModelResult<Vec<f64>> {
        Ok(convolve(sens))
    }

    fn apply_jacobian(&self, _: usize, _: usize, _: &ParameterList, vec: &[f64], _: &Config) -> ModelResult<Vec<f64>> {
        Ok(convolve(vec))
    }

    fn apply_hessian(
        &self,
        _: usize,
        _: usize,
        _: usize,
        _: &ParameterList,
        _: &[f64],
        _: &[f64],
        _: &Config,
    ) -> ModelResult<Vec<f64>> {
        Ok(vec![0.0; SIZE])
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct DeconvPosterior;

impl Model for DeconvPosterior {
    fn name(&self) -> &str {
        "deconv-posterior"
    }

    fn input_sizes(&self, config: &Config) -> ModelResult<Vec<usize>> {
        DeconvSpec::from_config(config)?;
        Ok(vec![SIZE])
    }

    fn output_sizes(&self, config: &Config) -> ModelResult<Vec<usize>> {
        DeconvSpec::from_config(config)?;
        Ok(vec![1])
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            evaluate: true,
            gradient: true,
            apply_jacobian: false,
            apply_hessian: false,
        }
    }

    fn evaluate(&self, input: &ParameterList, config: &Config) -> ModelResult<ParameterList> {
        let spec = DeconvSpec::from_config(config)?;
        Ok(ParameterList::scalar(spec.log_density(single_input(input)?)?))
    }

    fn gradient(&self, _: usize, _: usize, input: &ParameterList, sens: &[f64], config: &Config) -> ModelResult<Vec<f64>> {
        let spec = DeconvSpec::from_config(config)?;
        let mut g = spec.gradient(single_input(input)?)?;
        g.iter_mut().for_each(|x| *x *= sens[0]);
        Ok(g)
    }
}
