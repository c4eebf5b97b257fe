//! Sampling building blocks shared by the Monte Carlo and MCMC clients.
//!
//! Randomness comes from ChaCha20 (`rand_chacha::ChaCha20Rng`). Monte Carlo
//! sample `i` of a job with seed `s` is drawn from the stream
//! `seed_from_u64(s)` with `set_stream(i)`, so each sample is reproducible on
//! its own, independent of the order in which samples are evaluated.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::wire::ErrorPayload;
use crate::LOG_DENSITY_FLOOR;

/// Generator for Monte Carlo sample `index` of a job seeded with `seed`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Where Monte Carlo inputs come from.
#[derive(Clone, Debug, PartialEq)]
pub enum InputDistribution {
    /// Independent uniforms on `[low, high]` per coordinate.
    Uniform(Vec<[f64; 2]>),
    /// A fixed list of inputs, used in order.
    Fixed(Vec<Vec<f64>>),
}

impl InputDistribution {
    pub fn validate(&self) -> Result<(), ErrorPayload> {
        match self {
            Self::Uniform(bounds) => {
                if bounds.is_empty() {
                    return Err(ErrorPayload::invalid_input("uniform box needs at least one coordinate"));
                }
                for (i, [lo, hi]) in bounds.iter().enumerate() {
                    if !lo.is_finite() || !hi.is_finite() || lo > hi {
                        return Err(ErrorPayload::invalid_input(format!("bad bounds [{lo}, {hi}] for coordinate {i}")));
                    }
                }
            }
            Self::Fixed(points) => {
                if points.is_empty() {
                    return Err(ErrorPayload::invalid_input("fixed input list is empty"));
                }
            }
        }
        Ok(())
    }

    /// Number of available inputs, if limited.
    pub fn len_limit(&self) -> Option<usize> {
        match self {
            Self::Uniform(_) => None,
            Self::Fixed(points) => Some(points.len()),
        }
    }

    /// Input number `index` of a job seeded with `seed`.
    pub fn sample(&self, seed: u64, index: u64) -> Vec<f64> {
        match self {
            Self::Uniform(bounds) => {
                let mut rng = sample_rng(seed, index);
                bounds
                    .iter()
                    .map(|[lo, hi]| {
                        let u: f64 = rng.random();
                        lo + (hi - lo) * u
                    })
                    .collect()
            }
            Self::Fixed(points) => points[index as usize].clone(),
        }
    }
}

/// Welford accumulation of per-coordinate mean and variance.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunningMoments {
    count: u64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl RunningMoments {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: &[f64]) {
        if self.count == 0 {
            self.mean = vec![0.0; x.len()];
            self.m2 = vec![0.0; x.len()];
        }
        assert_eq!(x.len(), self.mean.len(), "sample dimension changed");
        self.count += 1;
        let n = self.count as f64;
        for ((m, s), &v) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(x) {
            let delta = v - *m;
            *m += delta / n;
            *s += delta * (v - *m);
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Unbiased sample variance; zero with fewer than two samples.
    pub fn variance(&self) -> Vec<f64> {
        if self.count < 2 {
            return vec![0.0; self.mean.len()];
        }
        let d = (self.count - 1) as f64;
        self.m2.iter().map(|s| s / d).collect()
    }

    /// Standard error of the mean.
    pub fn stderr(&self) -> Vec<f64> {
        let n = self.count as f64;
        self.variance().iter().map(|v| libm::sqrt(v / n)).collect()
    }
}

/// Symmetric proposal kernel for random-walk Metropolis–Hastings.
pub trait Proposal {
    fn propose(&self, current: &[f64], rng: &mut ChaCha20Rng) -> Vec<f64>;
}

/// `x' = x + σ ⊙ ξ`, `ξ ~ N(0, I)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianRandomWalk {
    pub sigma: Vec<f64>,
}

impl GaussianRandomWalk {
    pub fn isotropic(sigma: f64, dim: usize) -> Self {
        Self { sigma: vec![sigma; dim] }
    }
}

impl Proposal for GaussianRandomWalk {
    fn propose(&self, current: &[f64], rng: &mut ChaCha20Rng) -> Vec<f64> {
        current
            .iter()
            .zip(&self.sigma)
            .map(|(x, s)| {
                let z: f64 = StandardNormal.sample(rng);
                x + s * z
            })
            .collect()
    }
}

/// Current state of a chain.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainState {
    pub position: Vec<f64>,
    pub log_density: f64,
    pub accepted: u64,
    pub proposed: u64,
    pub proposal_sigma: Vec<f64>,
    pub seed: u64,
}

impl ChainState {
    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

/// Whether `value` lies inside the support of a log density.
pub fn in_support(value: f64) -> bool {
    value > LOG_DENSITY_FLOOR && !value.is_nan()
}

/// Random-walk Metropolis–Hastings over a caller-supplied log density.
///
/// The target is passed to every call rather than stored, so it can be a
/// local closure or a handle to a remote model.
pub struct MetropolisHastings<P> {
    proposal: P,
    rng: ChaCha20Rng,
    state: ChainState,
}

impl MetropolisHastings<GaussianRandomWalk> {
    pub fn gaussian<F>(x0: Vec<f64>, sigma: Vec<f64>, seed: u64, target: F) -> Result<Self, ErrorPayload>
    where
        F: FnMut(&[f64]) -> Result<f64, ErrorPayload>,
    {
        if sigma.len() != x0.len() {
            return Err(ErrorPayload::invalid_input("proposal scale and start point differ in length"));
        }
        let mut chain = Self::new(GaussianRandomWalk { sigma: sigma.clone() }, x0, seed, target)?;
        chain.state.proposal_sigma = sigma;
        Ok(chain)
    }
}

impl<P: Proposal> MetropolisHastings<P> {
    /// Starts a chain at `x0`, which must lie inside the support.
    pub fn new<F>(proposal: P, x0: Vec<f64>, seed: u64, mut target: F) -> Result<Self, ErrorPayload>
    where
        F: FnMut(&[f64]) -> Result<f64, ErrorPayload>,
    {
        let log_density = target(&x0)?;
        if !in_support(log_density) {
            return Err(ErrorPayload::invalid_input("chain start lies outside the support"));
        }
        Ok(Self {
            proposal,
            rng: ChaCha20Rng::seed_from_u64(seed),
            state: ChainState {
                position: x0,
                log_density,
                accepted: 0,
                proposed: 0,
                proposal_sigma: Vec::new(),
                seed,
            },
        })
    }

    pub fn state(&self) -> &ChainState {
        &self.state
    }

    /// One MH step; returns whether the proposal was accepted.
    pub fn step<F>(&mut self, mut target: F) -> Result<bool, ErrorPayload>
    where
        F: FnMut(&[f64]) -> Result<f64, ErrorPayload>,
    {
        let candidate = self.proposal.propose(&self.state.position, &mut self.rng);
        let u: f64 = self.rng.random();
        self.state.proposed += 1;
        let value = target(&candidate)?;
        if !in_support(value) {
            return Ok(false);
        }
        let log_ratio = value - self.state.log_density;
        let accept = log_ratio >= 0.0 || libm::log(u) < log_ratio;
        if accept {
            self.state.position = candidate;
            self.state.log_density = value;
            self.state.accepted += 1;
        }
        Ok(accept)
    }

    /// Runs `steps` steps and returns the visited positions, one per step.
    pub fn run<F>(&mut self, steps: usize, mut target: F) -> Result<Vec<Vec<f64>>, ErrorPayload>
    where
        F: FnMut(&[f64]) -> Result<f64, ErrorPayload>,
    {
        let mut samples = Vec::with_capacity(steps);
        for _ in 0..steps {
            self.step(&mut target)?;
            samples.push(self.state.position.clone());
        }
        Ok(samples)
    }
}
